//! Scenario assembly and the synchronous per-timestep loop.
//!
//! A run draws from a single generator seeded by `SimConfig::seed`, in this
//! order: ground positions, ground headings, UAV headings, then one draw
//! sequence per target spawn. Dynamics never consume randomness, so every
//! parameter set evaluated under the same seed meets the same initial layout
//! and the same target sequence.

use rand::Rng;

use crate::connectivity::{connectivity_fraction, largest_ground_component_of};
use crate::dynamics::{
    in_vision, position_update, AgentKind, AgentState, AirForces, AirParams, GroundForces, GroundParams,
};
use crate::environment::{default_obstacles, Obstacle, Space, Target, TargetStream, MAX_PLACEMENT_ATTEMPTS};
use crate::error::{InvalidConfig, SimError};
use crate::geometry::Vec2;
use crate::grid::SpatialGrid;
use crate::rng::{seeded, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub space: Space,
    pub obstacles: Vec<Obstacle>,
    pub n_ground: usize,
    pub n_air: usize,
    pub timesteps: usize,
    pub ground: GroundParams,
    pub air: AirParams,
    /// Distinct ground agents needed to complete a target.
    pub required_touches: usize,
    pub contact_radius: f64,
    pub seed: u64,
    /// Enables direct ground-ground links at this range. Off by default.
    pub ground_direct_range: Option<f64>,
    /// Side of the square whose corners hold the initial UAV formation.
    pub formation_side: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let space = Space {
            length: 1000.0,
            width: 1000.0,
        };
        Self {
            obstacles: default_obstacles(&space),
            space,
            n_ground: 100,
            n_air: 4,
            timesteps: 10_000,
            ground: GroundParams::default(),
            air: AirParams::default(),
            required_touches: 10,
            contact_radius: 10.0,
            seed: 1,
            ground_direct_range: None,
            formation_side: 200.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        self.space.validate()?;
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate(&self.space, &format!("env.obstacles[{i}]"))?;
        }
        if self.n_ground == 0 {
            return Err(InvalidConfig::new("sim.n_ground", "at least one ground agent is required"));
        }
        if self.timesteps == 0 {
            return Err(InvalidConfig::new("sim.timesteps", "must be at least 1"));
        }
        if self.required_touches == 0 {
            return Err(InvalidConfig::new("target.required_touches", "must be at least 1"));
        }
        let r = self.contact_radius;
        if !(r.is_finite() && r > 0.0 && 2.0 * r < self.space.length.min(self.space.width)) {
            return Err(InvalidConfig::new(
                "target.contact_radius",
                "must be positive and smaller than half the space",
            ));
        }
        if let Some(d) = self.ground_direct_range {
            if !(d.is_finite() && d > 0.0) {
                return Err(InvalidConfig::new("sim.ground_direct_range", "must be positive"));
            }
        }
        let half = self.formation_side / 2.0;
        let c = self.space.center();
        let reach = if self.n_air > 4 { half * std::f64::consts::SQRT_2 } else { half };
        if !(self.formation_side.is_finite() && self.formation_side >= 0.0)
            || c.x - reach < 0.0
            || c.y - reach < 0.0
        {
            return Err(InvalidConfig::new("air.formation_side", "formation must fit inside the space"));
        }
        self.ground.validate()?;
        self.air.validate()?;
        Ok(())
    }

    /// Fixed UAV start positions: corners of a square around the space
    /// center (bottom-left, bottom-right, top-left, top-right). More than four
    /// UAVs are spread evenly on the square's circumcircle.
    pub fn uav_start_positions(&self) -> Vec<Vec2> {
        let c = self.space.center();
        let h = self.formation_side / 2.0;
        if self.n_air <= 4 {
            [(-h, -h), (h, -h), (-h, h), (h, h)]
                .iter()
                .take(self.n_air)
                .map(|&(dx, dy)| c + Vec2::new(dx, dy))
                .collect()
        } else {
            let radius = h * std::f64::consts::SQRT_2;
            (0..self.n_air)
                .map(|k| {
                    let angle = 1.25 * std::f64::consts::PI
                        + std::f64::consts::TAU * k as f64 / self.n_air as f64;
                    c + Vec2::from_angle(angle) * radius
                })
                .collect()
        }
    }
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    /// Targets completed over the run.
    pub targets_reached: usize,
    /// Mean fraction of ground agents in the largest component.
    pub connectivity: f64,
    /// Largest ground component after each step.
    pub component_series: Vec<usize>,
    /// Cumulative completed targets after each step.
    pub targets_series: Vec<usize>,
}

/// Forces computed for one agent during a step, for inspection.
#[derive(Debug, Clone, Copy)]
pub enum ForceSample {
    Ground(usize, GroundForces),
    Air(usize, AirForces),
}

impl ForceSample {
    pub fn forces(&self) -> Vec<Vec2> {
        match self {
            ForceSample::Ground(_, f) => f.as_array().to_vec(),
            ForceSample::Air(_, f) => f.as_array().to_vec(),
        }
    }
}

/// Complete simulation state. Agent ids equal their index: ground agents
/// come first, then UAVs.
#[derive(Debug, Clone)]
pub struct World {
    cfg: SimConfig,
    rng: SimRng,
    agents: Vec<AgentState>,
    target: Target,
    stream: TargetStream,
    steps_done: usize,
    targets_reached: usize,
    component_series: Vec<usize>,
    targets_series: Vec<usize>,
    grid: SpatialGrid,
}

impl World {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let mut rng = seeded(cfg.seed);
        let mut agents = Vec::with_capacity(cfg.n_ground + cfg.n_air);

        let mut positions = Vec::with_capacity(cfg.n_ground);
        for _ in 0..cfg.n_ground {
            positions.push(free_position(&mut rng, &cfg.space, &cfg.obstacles)?);
        }
        for (id, p) in positions.into_iter().enumerate() {
            let heading = random_heading(&mut rng);
            agents.push(AgentState::new(id, AgentKind::Ground, p, heading * cfg.ground.speed));
        }
        for (k, p) in cfg.uav_start_positions().into_iter().enumerate() {
            let heading = random_heading(&mut rng);
            agents.push(AgentState::new(cfg.n_ground + k, AgentKind::Air, p, heading * cfg.air.speed));
        }

        let mut stream = TargetStream::new(cfg.required_touches, cfg.contact_radius);
        let target = stream.spawn(&mut rng, &cfg.space, &cfg.obstacles)?;
        let grid = SpatialGrid::new(cfg.space.length, cfg.space.width, cfg.ground.vision_distance);

        Ok(Self {
            component_series: Vec::with_capacity(cfg.timesteps),
            targets_series: Vec::with_capacity(cfg.timesteps),
            cfg,
            rng,
            agents,
            target,
            stream,
            steps_done: 0,
            targets_reached: 0,
            grid,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn ground(&self) -> &[AgentState] {
        &self.agents[..self.cfg.n_ground]
    }

    pub fn air(&self) -> &[AgentState] {
        &self.agents[self.cfg.n_ground..]
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn targets_spawned(&self) -> usize {
        self.stream.spawn_count
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn targets_reached(&self) -> usize {
        self.targets_reached
    }

    pub fn component_series(&self) -> &[usize] {
        &self.component_series
    }

    pub fn is_finished(&self) -> bool {
        self.steps_done >= self.cfg.timesteps
    }

    pub fn step(&mut self) -> Result<(), SimError> {
        self.step_inspect(&mut |_| {})
    }

    /// Advances one timestep, passing every agent's computed forces to
    /// `inspect` before positions change.
    pub fn step_inspect(&mut self, inspect: &mut dyn FnMut(ForceSample)) -> Result<(), SimError> {
        let n_ground = self.cfg.n_ground;
        let snapshot = &self.agents;
        let (ground, air) = snapshot.split_at(n_ground);
        let target = Some(&self.target);
        let gp = &self.cfg.ground;
        let ap = &self.cfg.air;
        let comm = ap.comm_range;

        self.grid.rebuild(ground.iter().map(|a| a.position));
        let mut candidates = Vec::new();
        let mut velocities = Vec::with_capacity(snapshot.len());

        for me in ground {
            self.grid.candidates(me.position, gp.vision_distance, &mut candidates);
            let nb: Vec<&AgentState> = candidates
                .iter()
                .map(|&i| &ground[i])
                .filter(|o| in_vision(me, o, gp.vision_distance, gp.vision_angle))
                .collect();
            let linked: Vec<&AgentState> = air
                .iter()
                .filter(|u| me.position.distance(u.position) <= comm)
                .collect();
            let forces = GroundForces::compute(me, &nb, &linked, target, &self.cfg.obstacles, gp);
            inspect(ForceSample::Ground(me.id, forces));
            velocities.push(forces.steer(me.velocity, gp));
        }
        for me in air {
            let air_nb: Vec<&AgentState> = air
                .iter()
                .filter(|o| o.id != me.id && me.position.distance(o.position) <= comm)
                .collect();
            let ground_nb: Vec<&AgentState> = ground
                .iter()
                .filter(|o| me.position.distance(o.position) <= comm)
                .collect();
            let forces = AirForces::compute(me, &air_nb, &ground_nb, target, ap);
            inspect(ForceSample::Air(me.id, forces));
            velocities.push(forces.steer(me.velocity, ap));
        }

        for (agent, v) in self.agents.iter_mut().zip(velocities) {
            *agent = position_update(agent, v, &self.cfg.space);
        }

        let completed = self
            .target
            .record_touches(self.agents[..n_ground].iter().map(|a| (a.id, a.position)));
        if completed {
            self.targets_reached += 1;
            self.target = self
                .stream
                .respawn(&self.target, &mut self.rng, &self.cfg.space, &self.cfg.obstacles)?;
        }

        let largest = largest_ground_component_of(&self.agents, comm, self.cfg.ground_direct_range);
        self.component_series.push(largest);
        self.targets_series.push(self.targets_reached);
        self.steps_done += 1;
        Ok(())
    }

    /// Metrics over the steps taken so far.
    pub fn metrics(&self) -> SimMetrics {
        let connectivity = connectivity_fraction(&self.component_series, self.cfg.n_ground).unwrap_or(0.0);
        SimMetrics {
            targets_reached: self.targets_reached,
            connectivity,
            component_series: self.component_series.clone(),
            targets_series: self.targets_series.clone(),
        }
    }
}

fn random_heading<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    Vec2::from_angle(rng.random::<f64>() * std::f64::consts::TAU)
}

fn free_position<R: Rng + ?Sized>(rng: &mut R, space: &Space, obstacles: &[Obstacle]) -> Result<Vec2, SimError> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let p = Vec2::new(rng.random::<f64>() * space.length, rng.random::<f64>() * space.width);
        if !obstacles.iter().any(|o| o.contains(p)) {
            return Ok(p);
        }
    }
    Err(SimError::PlacementExhausted {
        what: "ground agent",
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Runs a full simulation.
pub fn run(cfg: &SimConfig) -> Result<SimMetrics, SimError> {
    run_observed(cfg, |_| {})
}

/// Runs a full simulation, calling `observe` with the initial world and
/// after every step.
pub fn run_observed<F: FnMut(&World)>(cfg: &SimConfig, mut observe: F) -> Result<SimMetrics, SimError> {
    let mut world = World::new(cfg.clone())?;
    observe(&world);
    while !world.is_finished() {
        world.step()?;
        observe(&world);
    }
    Ok(world.metrics())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            n_ground: 20,
            n_air: 2,
            timesteps: 200,
            ..SimConfig::default()
        }
    }

    #[test]
    fn default_uav_formation() {
        let cfg = SimConfig::default();
        let p = cfg.uav_start_positions();
        assert_eq!(
            p,
            vec![
                Vec2::new(400.0, 400.0),
                Vec2::new(600.0, 400.0),
                Vec2::new(400.0, 600.0),
                Vec2::new(600.0, 600.0)
            ]
        );
        for a in &p {
            for b in &p {
                assert!(a.distance(*b) <= 300.0);
            }
        }
    }

    #[test]
    fn larger_formation_stays_connected() {
        let cfg = SimConfig {
            n_air: 7,
            ..SimConfig::default()
        };
        let p = cfg.uav_start_positions();
        assert_eq!(p.len(), 7);
        for a in &p {
            assert!((a.distance(cfg.space.center()) - 100.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_state_is_deterministic() {
        let a = World::new(small()).unwrap();
        let b = World::new(small()).unwrap();
        assert_eq!(a.agents(), b.agents());
        assert_eq!(a.target(), b.target());
        let c = World::new(SimConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.agents(), c.agents());
    }

    #[test]
    fn initial_state_respects_obstacles_and_speeds() {
        let w = World::new(SimConfig::default()).unwrap();
        for g in w.ground() {
            assert!(w.config().obstacles.iter().all(|o| !o.contains(g.position)));
            assert!((g.velocity.norm() - 1.0).abs() < 1e-12);
        }
        for u in w.air() {
            assert!((u.velocity.norm() - w.config().air.speed).abs() < 1e-12);
        }
        assert!(w.target().active);
        assert_eq!(w.targets_spawned(), 1);
    }

    #[test]
    fn ground_only_baseline() {
        let cfg = SimConfig { n_air: 0, ..small() };
        let w = World::new(cfg.clone()).unwrap();
        assert!(w.air().is_empty());
        let m = run(&cfg).unwrap();
        assert!(m.component_series.iter().all(|&s| s == 1));
        assert!((m.connectivity - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = SimConfig { n_ground: 0, ..small() };
        assert!(matches!(World::new(bad), Err(SimError::Config(_))));
        let bad = SimConfig { timesteps: 0, ..small() };
        assert!(World::new(bad).is_err());
        let bad = SimConfig {
            formation_side: 2000.0,
            ..small()
        };
        assert!(World::new(bad).is_err());
    }

    #[test]
    fn zero_weights_move_straight() {
        let mut cfg = small();
        cfg.obstacles.clear();
        cfg.ground = GroundParams {
            w_cohesion: 0.0,
            w_alignment: 0.0,
            w_separation: 0.0,
            w_obstacle: 0.0,
            w_target: 0.0,
            w_cohesion_air: 0.0,
            w_alignment_air: 0.0,
            ..GroundParams::default()
        };
        cfg.air = AirParams {
            w_separation: 0.0,
            w_cohesion: 0.0,
            w_alignment: 0.0,
            w_cohesion_ground: 0.0,
            w_alignment_ground: 0.0,
            w_target: 0.0,
            ..AirParams::default()
        };
        let mut w = World::new(cfg).unwrap();
        let before = w.agents().to_vec();
        w.step().unwrap();
        for (a, b) in before.iter().zip(w.agents()) {
            let (p, v) = w.config().space.reflect(a.position + a.velocity, a.velocity);
            assert!(p.distance(b.position) < 1e-12 && v.distance(b.velocity) < 1e-12);
        }
    }

    #[test]
    fn step_is_pure() {
        let mut w = World::new(small()).unwrap();
        for _ in 0..10 {
            w.step().unwrap();
        }
        let mut a = w.clone();
        let mut b = w.clone();
        a.step().unwrap();
        b.step().unwrap();
        assert_eq!(a.agents(), b.agents());
        assert_eq!(a.target(), b.target());
    }

    #[test]
    fn completed_target_is_replaced_next_step() {
        let mut cfg = small();
        cfg.required_touches = 1;
        let mut w = World::new(cfg).unwrap();
        // Drop the target right on top of a ground agent.
        let p = w.ground()[0].position + w.ground()[0].velocity;
        w.target.position = p;
        w.step().unwrap();
        assert_eq!(w.targets_reached(), 1);
        assert_eq!(w.targets_spawned(), 2);
        assert!(w.target().active);
        assert_ne!(w.target().position, p);
    }

    #[test]
    fn single_step_run() {
        let cfg = SimConfig { timesteps: 1, ..small() };
        let m = run(&cfg).unwrap();
        assert_eq!(m.targets_reached, 0);
        assert_eq!(m.component_series.len(), 1);
    }

    #[test]
    fn run_is_bitwise_reproducible() {
        let a = run(&small()).unwrap();
        let b = run(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.connectivity.to_bits(), b.connectivity.to_bits());
    }

    #[test]
    fn metrics_invariants() {
        let m = run(&small()).unwrap();
        assert!(m.targets_series.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*m.targets_series.last().unwrap(), m.targets_reached);
        assert!(m.component_series.iter().all(|&s| (1..=20).contains(&s)));
        assert_eq!(m.connectivity, connectivity_fraction(&m.component_series, 20).unwrap());
        assert!((1.0 / 20.0..=1.0).contains(&m.connectivity));
    }
}
