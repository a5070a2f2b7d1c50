//! Line-oriented `section.key = value` scenario format.
//!
//! Blank lines and `#` comments are ignored. Keys not present keep their
//! defaults. Obstacles are `x,y,r` triples separated by `;` (or `none`),
//! gene bounds are `min,max` pairs, and `sim.ground_direct_range` accepts
//! `off`.

use std::collections::HashSet;
use std::fmt::Write as _;

use airground_core::environment::Obstacle;
use airground_core::evolution::{DeConfig, Gene, GENE_COUNT};
use airground_core::{SimConfig, Vec2};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("{0}")]
    Invalid(#[from] airground_core::InvalidConfig),
}

/// Parses a scenario document into validated simulation and optimizer
/// configs. The returned `DeConfig::sim` equals the returned `SimConfig`.
pub fn parse_config(text: &str) -> Result<(SimConfig, DeConfig), ConfigError> {
    let mut de = DeConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        apply(&mut de, line, key, value)?;
    }
    de.validate()?;
    Ok((de.sim.clone(), de))
}

struct Field<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Field<'_> {
    fn bad(&self, expected: &'static str) -> ConfigError {
        ConfigError::BadValue {
            line: self.line,
            key: self.key.to_string(),
            value: self.value.to_string(),
            expected,
        }
    }

    fn real(&self) -> Result<f64, ConfigError> {
        match self.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.bad("a finite real number")),
        }
    }

    fn count(&self) -> Result<usize, ConfigError> {
        self.value.parse().map_err(|_| self.bad("a non-negative integer"))
    }

    fn seed(&self) -> Result<u64, ConfigError> {
        self.value.parse().map_err(|_| self.bad("an unsigned 64-bit integer"))
    }

    fn flag(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" | "on" | "1" => Ok(true),
            "false" | "off" | "0" => Ok(false),
            _ => Err(self.bad("a boolean (true/false)")),
        }
    }

    fn reals(&self, text: &str) -> Result<Vec<f64>, ConfigError> {
        text.split(',')
            .map(|t| match t.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.bad("comma-separated real numbers")),
            })
            .collect()
    }

    fn obstacles(&self) -> Result<Vec<Obstacle>, ConfigError> {
        if self.value == "none" || self.value.is_empty() {
            return Ok(Vec::new());
        }
        self.value
            .split(';')
            .map(|triple| match self.reals(triple)?.as_slice() {
                &[x, y, r] => Ok(Obstacle::new(Vec2::new(x, y), r)),
                _ => Err(self.bad("`x,y,r` triples separated by `;`")),
            })
            .collect()
    }

    fn bounds(&self) -> Result<(f64, f64), ConfigError> {
        match self.reals(self.value)?.as_slice() {
            &[lo, hi] => Ok((lo, hi)),
            _ => Err(self.bad("a `min,max` pair")),
        }
    }

    fn optional_range(&self) -> Result<Option<f64>, ConfigError> {
        match self.value {
            "off" | "none" => Ok(None),
            _ => self.real().map(Some).map_err(|_| self.bad("`off` or a real number")),
        }
    }
}

fn apply(de: &mut DeConfig, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    let f = Field { line, key, value };
    if let Some(name) = key.strip_prefix("gene.") {
        let gene = Gene::from_name(name).ok_or_else(|| ConfigError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        let (min, max) = f.bounds()?;
        let spec = &mut de.genes[gene.index()];
        spec.min = min;
        spec.max = max;
        return Ok(());
    }
    let sim = &mut de.sim;
    let (g, a) = (&mut sim.ground, &mut sim.air);
    match key {
        "space.length" => sim.space.length = f.real()?,
        "space.width" => sim.space.width = f.real()?,
        "env.obstacles" => sim.obstacles = f.obstacles()?,
        "sim.n_ground" => sim.n_ground = f.count()?,
        "sim.n_air" => sim.n_air = f.count()?,
        "sim.timesteps" => sim.timesteps = f.count()?,
        "sim.seed" => sim.seed = f.seed()?,
        "sim.ground_direct_range" => sim.ground_direct_range = f.optional_range()?,
        "target.required_touches" => sim.required_touches = f.count()?,
        "target.contact_radius" => sim.contact_radius = f.real()?,
        "ground.vision_distance" => g.vision_distance = f.real()?,
        "ground.vision_angle" => g.vision_angle = f.real()?,
        "ground.obstacle_range" => g.obstacle_range = f.real()?,
        "ground.target_range" => g.target_range = f.real()?,
        "ground.separation_distance" => g.separation_distance = f.real()?,
        "ground.speed" => g.speed = f.real()?,
        "ground.w_cohesion" => g.w_cohesion = f.real()?,
        "ground.w_alignment" => g.w_alignment = f.real()?,
        "ground.w_separation" => g.w_separation = f.real()?,
        "ground.w_obstacle" => g.w_obstacle = f.real()?,
        "ground.w_target" => g.w_target = f.real()?,
        "ground.w_cohesion_air" => g.w_cohesion_air = f.real()?,
        "ground.w_alignment_air" => g.w_alignment_air = f.real()?,
        "air.comm_range" => a.comm_range = f.real()?,
        "air.target_range" => a.target_range = f.real()?,
        "air.separation_distance" => a.separation_distance = f.real()?,
        "air.speed" => a.speed = f.real()?,
        "air.formation_side" => sim.formation_side = f.real()?,
        "air.w_separation" => a.w_separation = f.real()?,
        "air.w_cohesion" => a.w_cohesion = f.real()?,
        "air.w_alignment" => a.w_alignment = f.real()?,
        "air.w_cohesion_ground" => a.w_cohesion_ground = f.real()?,
        "air.w_alignment_ground" => a.w_alignment_ground = f.real()?,
        "air.w_target" => a.w_target = f.real()?,
        "de.pop_size" => de.pop_size = f.count()?,
        "de.generations" => de.generations = f.count()?,
        "de.F" => de.scale_factor = f.real()?,
        "de.CR" => de.crossover_rate = f.real()?,
        "de.w_n" => de.w_connectivity = f.real()?,
        "de.w_t" => de.w_targets = f.real()?,
        "de.s_s" => de.target_scale = f.real()?,
        "de.seed" => de.seed = f.seed()?,
        "de.strict_eq9" => de.strict_eq9 = f.flag()?,
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

/// Writes every key in canonical order. `parse_config` of the output
/// reproduces `de` exactly.
pub fn serialize_config(de: &DeConfig) -> String {
    let sim = &de.sim;
    let (g, a) = (&sim.ground, &sim.air);
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("space.length", sim.space.length.to_string());
    put("space.width", sim.space.width.to_string());
    let obstacles = if sim.obstacles.is_empty() {
        "none".to_string()
    } else {
        sim.obstacles
            .iter()
            .map(|o| format!("{},{},{}", o.center.x, o.center.y, o.radius))
            .collect::<Vec<_>>()
            .join("; ")
    };
    put("env.obstacles", obstacles);
    put("sim.n_ground", sim.n_ground.to_string());
    put("sim.n_air", sim.n_air.to_string());
    put("sim.timesteps", sim.timesteps.to_string());
    put("sim.seed", sim.seed.to_string());
    put(
        "sim.ground_direct_range",
        sim.ground_direct_range.map_or("off".to_string(), |r| r.to_string()),
    );
    put("target.required_touches", sim.required_touches.to_string());
    put("target.contact_radius", sim.contact_radius.to_string());
    for (k, v) in [
        ("ground.vision_distance", g.vision_distance),
        ("ground.vision_angle", g.vision_angle),
        ("ground.obstacle_range", g.obstacle_range),
        ("ground.target_range", g.target_range),
        ("ground.separation_distance", g.separation_distance),
        ("ground.speed", g.speed),
        ("ground.w_cohesion", g.w_cohesion),
        ("ground.w_alignment", g.w_alignment),
        ("ground.w_separation", g.w_separation),
        ("ground.w_obstacle", g.w_obstacle),
        ("ground.w_target", g.w_target),
        ("ground.w_cohesion_air", g.w_cohesion_air),
        ("ground.w_alignment_air", g.w_alignment_air),
        ("air.comm_range", a.comm_range),
        ("air.target_range", a.target_range),
        ("air.separation_distance", a.separation_distance),
        ("air.speed", a.speed),
        ("air.formation_side", sim.formation_side),
        ("air.w_separation", a.w_separation),
        ("air.w_cohesion", a.w_cohesion),
        ("air.w_alignment", a.w_alignment),
        ("air.w_cohesion_ground", a.w_cohesion_ground),
        ("air.w_alignment_ground", a.w_alignment_ground),
        ("air.w_target", a.w_target),
    ] {
        put(k, v.to_string());
    }
    put("de.pop_size", de.pop_size.to_string());
    put("de.generations", de.generations.to_string());
    put("de.F", de.scale_factor.to_string());
    put("de.CR", de.crossover_rate.to_string());
    put("de.w_n", de.w_connectivity.to_string());
    put("de.w_t", de.w_targets.to_string());
    put("de.s_s", de.target_scale.to_string());
    put("de.seed", de.seed.to_string());
    put("de.strict_eq9", de.strict_eq9.to_string());
    debug_assert_eq!(de.genes.len(), GENE_COUNT);
    for spec in &de.genes {
        put(&format!("gene.{}", spec.gene.name()), format!("{},{}", spec.min, spec.max));
    }
    out
}
