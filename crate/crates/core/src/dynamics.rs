//! Neighbourhoods, steering forces and the velocity/position update laws for
//! the UAV swarm and the ground swarm.
//!
//! Every steering force is a unit vector or exactly zero. A velocity update
//! adds the weighted forces to the previous velocity and then rescales the
//! result to the agent's constant speed, so only the heading changes.

use crate::environment::{Obstacle, Space, Target};
use crate::error::InvalidConfig;
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Ground,
    Air,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Ground => "ground",
            AgentKind::Air => "air",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub kind: AgentKind,
    pub position: Vec2,
    pub velocity: Vec2,
}

impl AgentState {
    pub fn new(id: usize, kind: AgentKind, position: Vec2, velocity: Vec2) -> Self {
        Self {
            id,
            kind,
            position,
            velocity,
        }
    }
}

/// Ground agent sensing ranges, speed and force weights. Only the two
/// air-to-ground weights are evolvable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundParams {
    pub vision_distance: f64,
    /// Full field of view in degrees; 360 means omnidirectional.
    pub vision_angle: f64,
    pub obstacle_range: f64,
    pub target_range: f64,
    pub separation_distance: f64,
    pub speed: f64,
    pub w_cohesion: f64,
    pub w_alignment: f64,
    pub w_separation: f64,
    pub w_obstacle: f64,
    pub w_target: f64,
    pub w_cohesion_air: f64,
    pub w_alignment_air: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        Self {
            vision_distance: 30.0,
            vision_angle: 360.0,
            obstacle_range: 30.0,
            target_range: 30.0,
            separation_distance: 10.0,
            speed: 1.0,
            w_cohesion: 0.01,
            w_alignment: 0.125,
            w_separation: 1.0,
            w_obstacle: 1.0,
            w_target: 1.0,
            w_cohesion_air: 0.0,
            w_alignment_air: 0.043,
        }
    }
}

/// UAV communication range, speed and force weights. Everything except the
/// communication range, target range and air-to-air separation weight is
/// evolvable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirParams {
    pub comm_range: f64,
    pub target_range: f64,
    pub separation_distance: f64,
    pub speed: f64,
    pub w_separation: f64,
    pub w_cohesion: f64,
    pub w_alignment: f64,
    pub w_cohesion_ground: f64,
    pub w_alignment_ground: f64,
    pub w_target: f64,
}

impl Default for AirParams {
    fn default() -> Self {
        Self {
            comm_range: 300.0,
            target_range: 300.0,
            separation_distance: 290.0,
            speed: 1.169,
            w_separation: 1.0,
            w_cohesion: 0.055,
            w_alignment: 0.0,
            w_cohesion_ground: 0.566,
            w_alignment_ground: 0.627,
            w_target: 0.5,
        }
    }
}

/// Largest admissible speed for either swarm.
pub const MAX_SPEED: f64 = 5.0;

fn positive(field: &str, v: f64) -> Result<(), InvalidConfig> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(InvalidConfig::new(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), InvalidConfig> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(InvalidConfig::new(field, format!("must be non-negative, got {v}")))
    }
}

pub(crate) fn within(field: &str, v: f64, lo: f64, hi: f64) -> Result<(), InvalidConfig> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(InvalidConfig::new(field, format!("must lie in [{lo}, {hi}], got {v}")))
    }
}

impl GroundParams {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        positive("ground.vision_distance", self.vision_distance)?;
        within("ground.vision_angle", self.vision_angle, f64::MIN_POSITIVE, 360.0)?;
        positive("ground.obstacle_range", self.obstacle_range)?;
        positive("ground.target_range", self.target_range)?;
        positive("ground.separation_distance", self.separation_distance)?;
        within("ground.speed", self.speed, f64::MIN_POSITIVE, MAX_SPEED)?;
        non_negative("ground.w_cohesion", self.w_cohesion)?;
        non_negative("ground.w_alignment", self.w_alignment)?;
        non_negative("ground.w_separation", self.w_separation)?;
        non_negative("ground.w_obstacle", self.w_obstacle)?;
        non_negative("ground.w_target", self.w_target)?;
        within("ground.w_cohesion_air", self.w_cohesion_air, 0.0, 0.1)?;
        within("ground.w_alignment_air", self.w_alignment_air, 0.0, 0.1)?;
        Ok(())
    }
}

impl AirParams {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        positive("air.comm_range", self.comm_range)?;
        positive("air.target_range", self.target_range)?;
        within("air.separation_distance", self.separation_distance, 100.0, 290.0)?;
        within("air.speed", self.speed, 1.0, MAX_SPEED)?;
        non_negative("air.w_separation", self.w_separation)?;
        within("air.w_cohesion", self.w_cohesion, 0.0, 1.0)?;
        within("air.w_alignment", self.w_alignment, 0.0, 1.0)?;
        within("air.w_cohesion_ground", self.w_cohesion_ground, 0.0, 1.0)?;
        within("air.w_alignment_ground", self.w_alignment_ground, 0.0, 1.0)?;
        within("air.w_target", self.w_target, 0.0, 1.0)?;
        Ok(())
    }
}

/// Agents within `range` of `me` (closed ball), excluding `me`, in the order
/// they appear in `others`. UAVs sense omnidirectionally.
pub fn air_neighbors<'a>(me: &AgentState, others: &'a [AgentState], range: f64) -> Vec<&'a AgentState> {
    others
        .iter()
        .filter(|o| o.id != me.id && me.position.distance(o.position) <= range)
        .collect()
}

/// Whether `other` is visible to a ground agent: within `distance` and at a
/// bearing no more than half the field of view away from the heading.
pub fn in_vision(me: &AgentState, other: &AgentState, distance: f64, angle_deg: f64) -> bool {
    if other.id == me.id {
        return false;
    }
    let offset = other.position - me.position;
    if offset.norm() > distance {
        return false;
    }
    if angle_deg >= 360.0 {
        return true;
    }
    let heading = me.velocity.normalize();
    let dir = offset.normalize();
    if heading == Vec2::ZERO || dir == Vec2::ZERO {
        return true;
    }
    let bearing = heading.dot(dir).clamp(-1.0, 1.0).acos();
    bearing <= (angle_deg / 2.0).to_radians()
}

/// Vision neighbourhood of a ground agent, in the order of `others`.
pub fn ground_neighbors<'a>(
    me: &AgentState,
    others: &'a [AgentState],
    distance: f64,
    angle_deg: f64,
) -> Vec<&'a AgentState> {
    others
        .iter()
        .filter(|o| in_vision(me, o, distance, angle_deg))
        .collect()
}

/// Unit vector towards the neighbours' centroid.
pub fn cohesion(me: &AgentState, neighbors: &[&AgentState]) -> Vec2 {
    if neighbors.is_empty() {
        return Vec2::ZERO;
    }
    let sum = neighbors.iter().fold(Vec2::ZERO, |acc, n| acc + n.position);
    let centroid = sum * (1.0 / neighbors.len() as f64);
    (centroid - me.position).normalize()
}

/// Unit vector along the neighbours' mean velocity.
pub fn alignment(neighbors: &[&AgentState]) -> Vec2 {
    if neighbors.is_empty() {
        return Vec2::ZERO;
    }
    let sum = neighbors.iter().fold(Vec2::ZERO, |acc, n| acc + n.velocity);
    (sum * (1.0 / neighbors.len() as f64)).normalize()
}

/// Unit vector away from neighbours closer than `distance`, each weighted by
/// inverse squared distance. A coincident neighbour pushes along -x if it has
/// the larger id and along +x otherwise.
pub fn separation(me: &AgentState, neighbors: &[&AgentState], distance: f64) -> Vec2 {
    let mut push = Vec2::ZERO;
    for n in neighbors {
        let away = me.position - n.position;
        let d2 = away.norm_squared();
        if d2 == 0.0 {
            push += if me.id < n.id {
                Vec2::new(-1.0, 0.0)
            } else {
                Vec2::new(1.0, 0.0)
            };
        } else if d2.sqrt() < distance {
            push += away * (1.0 / d2);
        }
    }
    push.normalize()
}

/// Unit vector towards an active target within `range`.
pub fn target_attraction(me: &AgentState, target: Option<&Target>, range: f64) -> Vec2 {
    match target {
        Some(t) if t.active && me.position.distance(t.position) <= range => {
            (t.position - me.position).normalize()
        }
        _ => Vec2::ZERO,
    }
}

/// Unit vector perpendicular to the heading, pointing away from the nearest
/// obstacle ahead. Ties in forward distance go to the earlier obstacle.
pub fn obstacle_avoidance(me: &AgentState, obstacles: &[Obstacle], range: f64) -> Vec2 {
    let nearest = obstacles
        .iter()
        .filter_map(|o| o.ahead_of(me.position, me.velocity, range))
        .fold(None, |best: Option<crate::environment::ObstacleSighting>, s| match best {
            Some(b) if b.forward <= s.forward => Some(b),
            _ => Some(s),
        });
    match nearest {
        Some(s) => me
            .velocity
            .perpendicular(s.side.opposite())
            .unwrap_or(Vec2::ZERO),
        None => Vec2::ZERO,
    }
}

/// The six UAV steering forces.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AirForces {
    pub cohesion_air: Vec2,
    pub alignment_air: Vec2,
    pub separation_air: Vec2,
    pub cohesion_ground: Vec2,
    pub alignment_ground: Vec2,
    pub target: Vec2,
}

impl AirForces {
    pub fn compute(
        me: &AgentState,
        air_nb: &[&AgentState],
        ground_nb: &[&AgentState],
        target: Option<&Target>,
        params: &AirParams,
    ) -> Self {
        Self {
            cohesion_air: cohesion(me, air_nb),
            alignment_air: alignment(air_nb),
            separation_air: separation(me, air_nb, params.separation_distance),
            cohesion_ground: cohesion(me, ground_nb),
            alignment_ground: alignment(ground_nb),
            target: target_attraction(me, target, params.target_range),
        }
    }

    pub fn as_array(&self) -> [Vec2; 6] {
        [
            self.cohesion_air,
            self.alignment_air,
            self.separation_air,
            self.cohesion_ground,
            self.alignment_ground,
            self.target,
        ]
    }

    pub fn steer(&self, previous: Vec2, params: &AirParams) -> Vec2 {
        let weights = [
            params.w_cohesion,
            params.w_alignment,
            params.w_separation,
            params.w_cohesion_ground,
            params.w_alignment_ground,
            params.w_target,
        ];
        steer(previous, &weights, &self.as_array(), params.speed)
    }
}

/// The seven ground steering forces.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundForces {
    pub cohesion: Vec2,
    pub alignment: Vec2,
    pub separation: Vec2,
    pub cohesion_air: Vec2,
    pub alignment_air: Vec2,
    pub target: Vec2,
    pub obstacle: Vec2,
}

impl GroundForces {
    pub fn compute(
        me: &AgentState,
        ground_nb: &[&AgentState],
        linked_uavs: &[&AgentState],
        target: Option<&Target>,
        obstacles: &[Obstacle],
        params: &GroundParams,
    ) -> Self {
        Self {
            cohesion: cohesion(me, ground_nb),
            alignment: alignment(ground_nb),
            separation: separation(me, ground_nb, params.separation_distance),
            cohesion_air: cohesion(me, linked_uavs),
            alignment_air: alignment(linked_uavs),
            target: target_attraction(me, target, params.target_range),
            obstacle: obstacle_avoidance(me, obstacles, params.obstacle_range),
        }
    }

    pub fn as_array(&self) -> [Vec2; 7] {
        [
            self.cohesion,
            self.alignment,
            self.separation,
            self.cohesion_air,
            self.alignment_air,
            self.target,
            self.obstacle,
        ]
    }

    pub fn steer(&self, previous: Vec2, params: &GroundParams) -> Vec2 {
        let weights = [
            params.w_cohesion,
            params.w_alignment,
            params.w_separation,
            params.w_cohesion_air,
            params.w_alignment_air,
            params.w_target,
            params.w_obstacle,
        ];
        steer(previous, &weights, &self.as_array(), params.speed)
    }
}

/// `previous + sum(w_k * f_k)` rescaled to `speed`. Zero-weight terms are
/// skipped so they cannot perturb the sum. A zero result keeps the previous
/// heading; with no previous heading either, the agent heads along +x.
fn steer(previous: Vec2, weights: &[f64], forces: &[Vec2], speed: f64) -> Vec2 {
    let mut v = previous;
    for (&w, &f) in weights.iter().zip(forces) {
        if w != 0.0 {
            v += f * w;
        }
    }
    let heading = match v.normalize() {
        Vec2::ZERO => match previous.normalize() {
            Vec2::ZERO => Vec2::new(1.0, 0.0),
            h => h,
        },
        h => h,
    };
    heading * speed
}

/// New UAV velocity from its air and ground neighbourhoods and the target.
pub fn uav_velocity_update(
    me: &AgentState,
    air_nb: &[&AgentState],
    ground_nb: &[&AgentState],
    target: Option<&Target>,
    params: &AirParams,
) -> Vec2 {
    AirForces::compute(me, air_nb, ground_nb, target, params).steer(me.velocity, params)
}

/// New ground velocity. `linked_uavs` are the UAVs within communication range
/// of this agent.
pub fn ground_velocity_update(
    me: &AgentState,
    ground_nb: &[&AgentState],
    linked_uavs: &[&AgentState],
    target: Option<&Target>,
    obstacles: &[Obstacle],
    params: &GroundParams,
) -> Vec2 {
    GroundForces::compute(me, ground_nb, linked_uavs, target, obstacles, params)
        .steer(me.velocity, params)
}

/// Moves the agent by `new_velocity` and reflects it off the space boundary.
pub fn position_update(me: &AgentState, new_velocity: Vec2, space: &Space) -> AgentState {
    let (position, velocity) = space.reflect(me.position + new_velocity, new_velocity);
    AgentState {
        position,
        velocity,
        ..*me
    }
}
