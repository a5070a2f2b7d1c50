//! Subcommands: `sim`, `evolve`, `plot` and `validate-config`.
//!
//! Exit status is 0 on success, 2 for bad input (unreadable or invalid
//! config, missing chromosome file, malformed CSV) and 1 for failures while
//! running or writing results.

use std::path::{Path, PathBuf};
use std::time::Instant;

use airground_core::evolution::{self, Chromosome, DeConfig, Evaluation};
use airground_core::simulation::{run_observed, World};
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, serialize_config};
use crate::manifest::{ArtifactKind, RunManifest};
use crate::plot::plot_files;
use crate::records::{
    aggregate, read_chromosome, write_aggregate, write_chromosome, write_metrics, GenerationLog, TrajectoryWriter,
};

#[derive(Debug, Parser)]
#[command(name = "airground", version, about = "Air-ground swarm teaming simulator and optimizer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write per-step metrics.
    Sim(SimArgs),
    /// Tune the swarm parameters with differential evolution.
    Evolve(EvolveArgs),
    /// Render SVG charts from generation logs or metrics files.
    Plot(PlotArgs),
    /// Parse and validate a config, printing it with all defaults filled in.
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario config file; defaults are used for missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the number of simulation timesteps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output directory.
    #[arg(long, env = "SWARM_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: Common,
    /// Simulation seed (agent placement and target sequence).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evolved chromosome document whose genes replace the config values.
    #[arg(long)]
    pub chromosome: Option<PathBuf>,
    /// Also write every agent's state at every step.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Optimizer seeds: a count `N` (seeds 1..=N), a range `A..B`
    /// (inclusive) or a list `A,B,C`. Defaults to `de.seed`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Maximum concurrent simulation evaluations.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Use plain binomial crossover without the forced donor gene.
    #[arg(long)]
    pub strict_eq9: bool,
    /// Use the full experiment scale (100 ground agents, 4 UAVs, 10000
    /// steps, population 50, 100 generations, seeds 1..=20).
    #[arg(long)]
    pub full_scale: bool,
    /// Print the runtime estimate and exit without evolving.
    #[arg(long)]
    pub estimate_only: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Generation logs, aggregate summaries or metrics CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, env = "SWARM_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Config file to check.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => m,
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sim(a) => cmd_sim(&a),
        Command::Evolve(a) => cmd_evolve(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::ValidateConfig(a) => cmd_validate(&a),
    }
}

/// Reads and validates the config, or returns the defaults.
pub fn load_config(path: Option<&Path>) -> Result<DeConfig, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let shown = path.map_or("<defaults>".to_string(), |p| p.display().to_string());
    parse_config(&text)
        .map(|(_, de)| de)
        .map_err(|e| Failure::Input(format!("{shown}: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn cmd_sim(args: &SimArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let mut de = load_config(args.common.config.as_deref())?;
    if let Some(seed) = args.seed {
        de.sim.seed = seed;
    }
    if let Some(steps) = args.common.steps {
        de.sim.timesteps = steps;
    }
    if let Some(path) = &args.chromosome {
        let evolved = read_chromosome(path).map_err(|e| Failure::Input(format!("chromosome file: {e}")))?;
        evolved.chromosome.apply(&mut de.sim);
    }
    de.validate()
        .map_err(|e| Failure::Input(format!("invalid configuration: {e}")))?;

    let out = &args.common.out;
    create_dir(out)?;
    let mut manifest = RunManifest::new("sim", serialize_config(&de), vec![de.sim.seed]);

    let mut trajectory = if args.trajectory {
        Some(TrajectoryWriter::create(&out.join("trajectory.csv")).map_err(runtime)?)
    } else {
        None
    };
    let mut write_error = None;
    let metrics = run_observed(&de.sim, |w: &World| {
        if let Some(t) = trajectory.as_mut() {
            if write_error.is_none() {
                if let Err(e) = t.record(w.steps_done(), w.agents()) {
                    write_error = Some(e);
                }
            }
        }
    })
    .map_err(runtime)?;
    if let Some(e) = write_error {
        return Err(runtime(e));
    }
    if let Some(t) = trajectory {
        t.finish().map_err(runtime)?;
        manifest.add(out, &out.join("trajectory.csv"), ArtifactKind::Trajectory);
    }

    let metrics_path = out.join("metrics.csv");
    write_metrics(&metrics_path, &metrics).map_err(runtime)?;
    manifest.add(out, &metrics_path, ArtifactKind::Metrics);

    let result = Evaluation {
        chromosome: Chromosome::from_config(&de.sim),
        targets_reached: metrics.targets_reached,
        connectivity: metrics.connectivity,
        fitness: evolution::fitness(&metrics, &de),
    };
    let result_path = out.join("result.txt");
    write_chromosome(&result_path, &result).map_err(runtime)?;
    manifest.add(out, &result_path, ArtifactKind::Chromosome);

    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.write(out).map_err(runtime)?;
    println!(
        "targets_reached={} connectivity={:.6} fitness={:.6} steps={}",
        result.targets_reached, result.connectivity, result.fitness, de.sim.timesteps
    );
    Ok(())
}

/// Parses `N`, `A..B` or `A,B,C`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("invalid seed list `{text}` (use N, A..B or A,B,C)");
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    if text.contains(',') {
        return text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u64 = text.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((1..=n).collect())
}

/// Applies the full experiment scale to `de`.
pub fn full_scale(de: &mut DeConfig) {
    let stock = DeConfig::default();
    de.pop_size = stock.pop_size;
    de.generations = stock.generations;
    de.sim.n_ground = stock.sim.n_ground;
    de.sim.n_air = stock.sim.n_air;
    de.sim.timesteps = stock.sim.timesteps;
}

/// Estimated wall-clock seconds for an evolve invocation, extrapolated from
/// timing one complete simulation of the scenario.
pub fn estimate_seconds(de: &DeConfig, runs: usize, parallel: usize) -> Result<f64, Failure> {
    let t = Instant::now();
    airground_core::run(&de.sim).map_err(runtime)?;
    let per_run = t.elapsed().as_secs_f64();
    let evaluations = (de.pop_size * de.generations * runs) as f64;
    Ok(per_run * evaluations / parallel.max(1) as f64)
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let mut de = load_config(args.common.config.as_deref())?;
    if args.full_scale {
        full_scale(&mut de);
    }
    if let Some(steps) = args.common.steps {
        de.sim.timesteps = steps;
    }
    if args.strict_eq9 {
        de.strict_eq9 = true;
    }
    de.validate()
        .map_err(|e| Failure::Input(format!("invalid configuration: {e}")))?;
    let seeds = match (&args.seeds, args.full_scale) {
        (Some(text), _) => parse_seeds(text).map_err(Failure::Input)?,
        (None, true) => (1..=20).collect(),
        (None, false) => vec![de.seed],
    };
    if args.parallel == 0 {
        return Err(Failure::Input("--parallel must be at least 1".into()));
    }

    if args.full_scale || args.estimate_only {
        let secs = estimate_seconds(&de, seeds.len(), args.parallel)?;
        eprintln!(
            "estimated runtime: {:.1} h ({} runs x {} individuals x {} generations x {} steps, {} workers)",
            secs / 3600.0,
            seeds.len(),
            de.pop_size,
            de.generations,
            de.sim.timesteps,
            args.parallel
        );
        if args.estimate_only {
            return Ok(());
        }
    }

    let out = &args.common.out;
    create_dir(out)?;
    let mut manifest = RunManifest::new("evolve", serialize_config(&de), seeds.clone());
    let mut logs = Vec::with_capacity(seeds.len());

    for &seed in &seeds {
        let cfg = DeConfig { seed, ..de.clone() };
        let dir = out.join(format!("seed-{seed}"));
        create_dir(&dir)?;
        let log_path = dir.join("generations.csv");
        let mut log = GenerationLog::create(&log_path).map_err(runtime)?;
        let mut log_error = None;
        let report = evolution::evolve(&cfg, args.parallel, &mut |r| {
            eprintln!(
                "seed {seed} generation {}: avg {:.4} best {:.4} best_nt {} best_nc {:.4}",
                r.generation, r.avg_fitness, r.best_fitness, r.best_targets, r.best_connectivity
            );
            if log_error.is_none() {
                log_error = log.append(r).err();
            }
        })
        .map_err(|e| Failure::Runtime(format!("seed {seed}: {e}")))?;
        if let Some(e) = log_error {
            return Err(runtime(e));
        }
        manifest.add(out, &log_path, ArtifactKind::GenerationLog);
        for (name, eval) in [
            ("best.txt", &report.best),
            ("best_targets.txt", &report.best_by_targets),
            ("best_network.txt", &report.best_by_connectivity),
        ] {
            let p = dir.join(name);
            write_chromosome(&p, eval).map_err(runtime)?;
            manifest.add(out, &p, ArtifactKind::Chromosome);
        }
        println!(
            "seed {seed}: best fitness {:.6} (targets {}, connectivity {:.6})",
            report.best.fitness, report.best.targets_reached, report.best.connectivity
        );
        logs.push(report.generations);
    }

    let agg_path = out.join("aggregate.csv");
    write_aggregate(&agg_path, &aggregate(&logs)).map_err(runtime)?;
    manifest.add(out, &agg_path, ArtifactKind::Aggregate);
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.write(out).map_err(runtime)?;
    Ok(())
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), Failure> {
    let written = plot_files(&args.inputs, &args.out).map_err(|e| Failure::Input(e.to_string()))?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let de = load_config(Some(&args.config))?;
    print!("{}", serialize_config(&de));
    Ok(())
}
