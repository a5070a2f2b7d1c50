use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use airground_cli::config::{parse_config, serialize_config};
use airground_cli::manifest::RunManifest;
use airground_cli::records::{
    read_aggregate, read_chromosome, read_generation_log, read_metrics, read_trajectory_rows, GenerationLog,
};
use airground_core::evolution::{DeConfig, GenerationRecord};
use airground_core::{Obstacle, Vec2};
use proptest::prelude::*;

fn airground(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airground"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn airground")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

const TINY: &str = "sim.n_ground = 10\nsim.n_air = 2\nsim.timesteps = 60\nde.pop_size = 5\nde.generations = 3\ntarget.required_touches = 1\n";

#[test]
fn sim_is_byte_reproducible_and_manifest_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = airground(&["sim", "--seed", "7", "--steps", "120", "--trajectory"], out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(a.join("metrics.csv")).unwrap(), std::fs::read(b.join("metrics.csv")).unwrap());
    assert_eq!(read_metrics(&a.join("metrics.csv")).unwrap().len(), 120);
    assert_eq!(read_trajectory_rows(&a.join("trajectory.csv")).unwrap(), 121 * 104);

    let manifest = RunManifest::read(&a.join("manifest.json")).unwrap();
    assert_eq!(manifest.seeds, vec![7]);
    assert_eq!(manifest.artifacts.len(), 3);
    manifest.verify(&a).unwrap();
    let (_, de) = parse_config(&manifest.config).unwrap();
    assert_eq!((de.sim.seed, de.sim.timesteps), (7, 120));
}

#[test]
fn missing_chromosome_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/best.txt");
    let o = airground(&["sim", "--steps", "5", "--chromosome", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(missing.to_str().unwrap()));
}

#[test]
fn invalid_config_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.n_ground = 5\nde.F = 2.5\n");
    let o = airground(&["sim", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("de.F"));

    let cfg = write_config(dir.path(), "sim.n_ground = 5\nbogus.key = 1\n");
    let o = airground(&["sim", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn evolve_writes_logs_chromosomes_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("run");
    let o = airground(&["evolve", "--seeds", "3", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    for seed in 1..=3 {
        let seed_dir = out.join(format!("seed-{seed}"));
        assert_eq!(read_generation_log(&seed_dir.join("generations.csv")).unwrap().len(), 3);
        for f in ["best.txt", "best_targets.txt", "best_network.txt"] {
            read_chromosome(&seed_dir.join(f)).unwrap();
        }
    }
    let agg = read_aggregate(&out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.len(), 3);
    assert!(agg.iter().all(|r| r.runs == 3));

    let manifest = RunManifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.seeds, vec![1, 2, 3]);
    assert_eq!(manifest.artifacts.len(), 3 * 4 + 1);
    manifest.verify(&out).unwrap();

    // The evolved chromosome replays through `sim` to the recorded evaluation.
    let best = read_chromosome(&out.join("seed-2/best.txt")).unwrap();
    let replay = dir.path().join("replay");
    let o = airground(
        &[
            "sim",
            "--config",
            cfg.to_str().unwrap(),
            "--chromosome",
            out.join("seed-2/best.txt").to_str().unwrap(),
        ],
        &replay,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result = read_chromosome(&replay.join("result.txt")).unwrap();
    assert_eq!(result, best);
}

#[test]
fn interrupted_log_stays_readable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("generations.csv");
    let mut log = GenerationLog::create(&path).unwrap();
    assert_eq!(csv::Reader::from_path(&path).unwrap().records().count(), 0);
    for generation in 1..=2 {
        log.append(&GenerationRecord {
            generation,
            avg_fitness: 0.25 * generation as f64,
            best_fitness: 0.5,
            best_targets: 1,
            best_connectivity: 0.4,
            seconds: 0.1,
        })
        .unwrap();
        // No finish or drop: the rows must already be on disk.
        assert_eq!(read_generation_log(&path).unwrap().len(), generation);
    }
    drop(log);
}

#[test]
fn plot_renders_fitness_and_metrics_charts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let run = dir.path().join("run");
    assert!(airground(&["evolve", "--seeds", "2", "--config", cfg.to_str().unwrap()], &run).status.success());
    let sim = dir.path().join("sim");
    let cfg_flat = write_config(dir.path(), "sim.n_ground = 5\nsim.n_air = 0\ntarget.required_touches = 5\n");
    assert!(airground(&["sim", "--steps", "30", "--config", cfg_flat.to_str().unwrap()], &sim)
        .status
        .success());
    assert_eq!(read_metrics(&sim.join("metrics.csv")).unwrap().last().unwrap().2, 0);

    let charts = dir.path().join("charts");
    let o = airground(
        &[
            "plot",
            run.join("seed-1/generations.csv").to_str().unwrap(),
            run.join("seed-2/generations.csv").to_str().unwrap(),
            sim.join("metrics.csv").to_str().unwrap(),
        ],
        &charts,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fitness = std::fs::read_to_string(charts.join("fitness.svg")).unwrap();
    assert!(fitness.starts_with("<svg"));
    // Average and best curves for each of the two seeds.
    assert_eq!(fitness.matches("<polyline").count(), 4);

    let targets = std::fs::read_to_string(charts.join("sim-metrics-targets.svg")).unwrap();
    let points = targets.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<&str> = points.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
    assert!(ys.windows(2).all(|w| w[0] == w[1]), "flat line expected");
    assert!(charts.join("sim-metrics-components.svg").exists());
}

#[test]
fn plot_rejects_empty_csv_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let charts = dir.path().join("charts");
    let o = airground(&["plot", empty.to_str().unwrap()], &charts);
    assert_eq!(o.status.code(), Some(2));
    let written = std::fs::read_dir(&charts).map(|d| d.count()).unwrap_or(0);
    assert_eq!(written, 0);
}

#[test]
fn validate_config_prints_canonical_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ground.speed = 1\n");
    let o = Command::new(env!("CARGO_BIN_EXE_airground"))
        .args(["validate-config", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), serialize_config(&DeConfig::default()));
}

#[test]
fn estimate_only_does_not_write() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("est");
    let o = airground(&["evolve", "--estimate-only", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("estimated runtime"));
    assert!(!out.exists());
}

fn arb_config() -> impl Strategy<Value = DeConfig> {
    (
        (100.0f64..3000.0, 100.0f64..3000.0, 1usize..300, 0usize..9, 1u64..u64::MAX),
        (0.0f64..1.0, 100.0f64..290.0, 1.0f64..5.0, 0.0f64..0.1, 0.001f64..2.0, 0.0f64..1.0),
        (4usize..80, 1usize..200, any::<bool>(), prop::option::of(1.0f64..100.0)),
        prop::collection::vec((0.2f64..0.8, 0.2f64..0.8, 1.0f64..20.0), 0..4),
    )
        .prop_map(|(space, genes, de_params, obstacles)| {
            let mut de = DeConfig::default();
            let (l, w, n_g, n_a, seed) = space;
            de.sim.space.length = l;
            de.sim.space.width = w;
            de.sim.n_ground = n_g;
            de.sim.n_air = n_a;
            de.sim.seed = seed;
            de.sim.formation_side = 50.0;
            de.sim.obstacles = obstacles
                .into_iter()
                .map(|(fx, fy, r)| Obstacle::new(Vec2::new(fx * l, fy * w), r))
                .collect();
            let (wc, sd, speed, wg, f, cr) = genes;
            de.sim.air.w_cohesion = wc;
            de.sim.air.separation_distance = sd;
            de.sim.air.speed = speed;
            de.sim.ground.w_alignment_air = wg;
            de.scale_factor = f;
            de.crossover_rate = cr;
            let (pop, gens, strict, direct) = de_params;
            de.pop_size = pop;
            de.generations = gens;
            de.strict_eq9 = strict;
            de.sim.ground_direct_range = direct;
            de.genes[2].min = 150.0 + wc;
            de
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(de in arb_config()) {
        let text = serialize_config(&de);
        let (sim, parsed) = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&parsed, &de);
        prop_assert_eq!(sim, de.sim);
    }
}
