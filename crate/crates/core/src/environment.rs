//! The bounded plane, circular obstacles, the single-active-target lifecycle
//! and the mirror reflection at the space boundary.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{InvalidConfig, SimError};
use crate::geometry::{Side, Vec2};

/// Upper bound on rejection-sampling draws for one placement.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Rectangular space `[0, length] x [0, width]` with the origin at the
/// bottom-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space {
    pub length: f64,
    pub width: f64,
}

impl Space {
    pub fn new(length: f64, width: f64) -> Result<Self, InvalidConfig> {
        let space = Self { length, width };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(InvalidConfig::new("space.length", "must be a positive finite number"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(InvalidConfig::new("space.width", "must be a positive finite number"));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.length / 2.0, self.width / 2.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.length).contains(&p.x) && (0.0..=self.width).contains(&p.y)
    }

    /// Mirror-reflects a tentative position back into the space, negating the
    /// velocity component of every axis that crossed a bound. Handles a single
    /// crossing per axis, which holds for any excursion shorter than the
    /// space itself.
    pub fn reflect(&self, tentative: Vec2, velocity: Vec2) -> (Vec2, Vec2) {
        let (x, vx) = reflect_axis(tentative.x, velocity.x, self.length);
        let (y, vy) = reflect_axis(tentative.y, velocity.y, self.width);
        (Vec2::new(x, y), Vec2::new(vx, vy))
    }
}

fn reflect_axis(c: f64, v: f64, bound: f64) -> (f64, f64) {
    if c > bound {
        (2.0 * bound - c, -v)
    } else if c < 0.0 {
        (-c, -v)
    } else {
        (c, v)
    }
}

/// A static disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

/// Geometry of an obstacle that lies ahead of a moving agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleSighting {
    /// Distance to the obstacle center along the heading.
    pub forward: f64,
    /// Distance from the obstacle center to the movement line.
    pub lateral: f64,
    /// Side of the movement line the center lies on. A center exactly on the
    /// line is reported as `Right`.
    pub side: Side,
}

impl Obstacle {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn validate(&self, space: &Space, field: &str) -> Result<(), InvalidConfig> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(InvalidConfig::new(field, "radius must be positive"));
        }
        let c = self.center;
        let r = self.radius;
        if !c.is_finite()
            || c.x - r < 0.0
            || c.y - r < 0.0
            || c.x + r > space.length
            || c.y + r > space.width
        {
            return Err(InvalidConfig::new(field, "disc must lie entirely inside the space"));
        }
        Ok(())
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.distance(self.center) <= self.radius
    }

    /// Reports the obstacle when its center is in front of the agent closer
    /// than `range` and the movement line passes through the disc. A zero
    /// velocity never detects anything.
    pub fn ahead_of(&self, position: Vec2, velocity: Vec2, range: f64) -> Option<ObstacleSighting> {
        let heading = velocity.normalize();
        if heading == Vec2::ZERO {
            return None;
        }
        let to_center = self.center - position;
        let forward = to_center.dot(heading);
        let lateral = (to_center - heading * forward).norm();
        if forward > 0.0 && forward < range && lateral < self.radius {
            let side = if heading.cross(to_center) > 0.0 {
                Side::Left
            } else {
                Side::Right
            };
            Some(ObstacleSighting {
                forward,
                lateral,
                side,
            })
        } else {
            None
        }
    }
}

/// Default layout: one disc at the space center and one at each quadrant
/// center, all of radius 80.
pub fn default_obstacles(space: &Space) -> Vec<Obstacle> {
    let (l, w) = (space.length, space.width);
    [
        (0.5, 0.5),
        (0.25, 0.25),
        (0.75, 0.25),
        (0.25, 0.75),
        (0.75, 0.75),
    ]
    .iter()
    .map(|&(fx, fy)| Obstacle::new(Vec2::new(fx * l, fy * w), 80.0))
    .collect()
}

/// A point target that ground agents must touch.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub position: Vec2,
    pub contact_radius: f64,
    /// Distinct ground agents that have touched this target so far.
    pub reached_by: BTreeSet<usize>,
    pub required: usize,
    pub active: bool,
}

impl Target {
    pub fn new(position: Vec2, contact_radius: f64, required: usize) -> Self {
        Self {
            position,
            contact_radius,
            reached_by: BTreeSet::new(),
            required,
            active: true,
        }
    }

    /// Adds every ground agent within the contact radius to the cumulative
    /// touch set and deactivates the target once `required` distinct agents
    /// have touched it. Returns true when this call deactivated the target.
    pub fn record_touches<I>(&mut self, ground: I) -> bool
    where
        I: IntoIterator<Item = (usize, Vec2)>,
    {
        if !self.active {
            return false;
        }
        for (id, p) in ground {
            if p.distance(self.position) <= self.contact_radius {
                self.reached_by.insert(id);
            }
        }
        if self.reached_by.len() >= self.required {
            self.active = false;
            return true;
        }
        false
    }
}

/// Spawns targets one at a time at uniform random free positions.
///
/// The stream holds no generator of its own; draws come from the caller's
/// simulation generator so that the whole run consumes one seeded stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStream {
    pub spawn_count: usize,
    pub required: usize,
    pub contact_radius: f64,
}

impl TargetStream {
    pub fn new(required: usize, contact_radius: f64) -> Self {
        Self {
            spawn_count: 0,
            required,
            contact_radius,
        }
    }

    /// Samples uniformly in the space shrunk by the contact radius, rejecting
    /// points inside obstacles.
    pub fn spawn<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        space: &Space,
        obstacles: &[Obstacle],
    ) -> Result<Target, SimError> {
        let margin = self.contact_radius;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = Vec2::new(
                margin + rng.random::<f64>() * (space.length - 2.0 * margin),
                margin + rng.random::<f64>() * (space.width - 2.0 * margin),
            );
            if obstacles.iter().any(|o| o.contains(p)) {
                continue;
            }
            self.spawn_count += 1;
            return Ok(Target::new(p, self.contact_radius, self.required));
        }
        Err(SimError::PlacementExhausted {
            what: "target",
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })
    }

    /// Like [`spawn`](Self::spawn) but refuses while `current` is active.
    pub fn respawn<R: Rng + ?Sized>(
        &mut self,
        current: &Target,
        rng: &mut R,
        space: &Space,
        obstacles: &[Obstacle],
    ) -> Result<Target, SimError> {
        if current.active {
            return Err(SimError::TargetAlreadyActive);
        }
        self.spawn(rng, space, obstacles)
    }
}
