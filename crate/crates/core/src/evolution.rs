//! Differential evolution (rand/1/bin) with dual elitism over the nine
//! evolvable swarm parameters. Fitness is a weighted sum of mean ground
//! connectivity and the scaled number of completed targets.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::within;
use crate::error::{EvolveError, InvalidConfig, SimError};
use crate::rng::{seeded, SimRng};
use crate::simulation::{run, SimConfig, SimMetrics};

pub const GENE_COUNT: usize = 9;

/// The evolvable parameters, in chromosome order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gene {
    /// UAV cohesion towards other UAVs.
    AirCohesionAir,
    /// UAV alignment with other UAVs.
    AirAlignmentAir,
    /// UAV-UAV separation distance.
    AirSeparationDistance,
    /// UAV cohesion towards ground agents.
    AirCohesionGround,
    /// UAV alignment with ground agents.
    AirAlignmentGround,
    /// UAV attraction to the target.
    AirTarget,
    /// UAV speed.
    AirSpeed,
    /// Ground cohesion towards linked UAVs.
    GroundCohesionAir,
    /// Ground alignment with linked UAVs.
    GroundAlignmentAir,
}

impl Gene {
    pub const ALL: [Gene; GENE_COUNT] = [
        Gene::AirCohesionAir,
        Gene::AirAlignmentAir,
        Gene::AirSeparationDistance,
        Gene::AirCohesionGround,
        Gene::AirAlignmentGround,
        Gene::AirTarget,
        Gene::AirSpeed,
        Gene::GroundCohesionAir,
        Gene::GroundAlignmentAir,
    ];

    pub fn index(self) -> usize {
        Gene::ALL.iter().position(|&g| g == self).unwrap()
    }

    /// Config key of the parameter this gene controls.
    pub fn name(self) -> &'static str {
        match self {
            Gene::AirCohesionAir => "air.w_cohesion",
            Gene::AirAlignmentAir => "air.w_alignment",
            Gene::AirSeparationDistance => "air.separation_distance",
            Gene::AirCohesionGround => "air.w_cohesion_ground",
            Gene::AirAlignmentGround => "air.w_alignment_ground",
            Gene::AirTarget => "air.w_target",
            Gene::AirSpeed => "air.speed",
            Gene::GroundCohesionAir => "ground.w_cohesion_air",
            Gene::GroundAlignmentAir => "ground.w_alignment_air",
        }
    }

    pub fn from_name(name: &str) -> Option<Gene> {
        Gene::ALL.into_iter().find(|g| g.name() == name)
    }

    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Gene::AirSeparationDistance => (100.0, 290.0),
            Gene::AirSpeed => (1.0, 5.0),
            Gene::GroundCohesionAir | Gene::GroundAlignmentAir => (0.0, 0.1),
            _ => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneSpec {
    pub gene: Gene,
    pub min: f64,
    pub max: f64,
}

impl GeneSpec {
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

pub fn default_gene_specs() -> [GeneSpec; GENE_COUNT] {
    Gene::ALL.map(|gene| {
        let (min, max) = gene.default_bounds();
        GeneSpec { gene, min, max }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chromosome(pub [f64; GENE_COUNT]);

impl Chromosome {
    pub fn get(&self, gene: Gene) -> f64 {
        self.0[gene.index()]
    }

    pub fn within(&self, specs: &[GeneSpec; GENE_COUNT]) -> bool {
        self.0
            .iter()
            .zip(specs)
            .all(|(&v, s)| (s.min..=s.max).contains(&v))
    }

    /// Reads the gene-controlled parameters out of a scenario.
    pub fn from_config(cfg: &SimConfig) -> Self {
        let (a, g) = (&cfg.air, &cfg.ground);
        Chromosome([
            a.w_cohesion,
            a.w_alignment,
            a.separation_distance,
            a.w_cohesion_ground,
            a.w_alignment_ground,
            a.w_target,
            a.speed,
            g.w_cohesion_air,
            g.w_alignment_air,
        ])
    }

    /// Writes the genes into the scenario's parameter blocks.
    pub fn apply(&self, cfg: &mut SimConfig) {
        let [cohesion, alignment, sep, cohesion_g, alignment_g, target, speed, g_cohesion, g_alignment] = self.0;
        cfg.air.w_cohesion = cohesion;
        cfg.air.w_alignment = alignment;
        cfg.air.separation_distance = sep;
        cfg.air.w_cohesion_ground = cohesion_g;
        cfg.air.w_alignment_ground = alignment_g;
        cfg.air.w_target = target;
        cfg.air.speed = speed;
        cfg.ground.w_cohesion_air = g_cohesion;
        cfg.ground.w_alignment_air = g_alignment;
    }
}

/// A chromosome together with the simulation outcome it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub chromosome: Chromosome,
    pub targets_reached: usize,
    pub connectivity: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    pub pop_size: usize,
    pub generations: usize,
    /// Differential weight F.
    pub scale_factor: f64,
    /// Crossover rate CR.
    pub crossover_rate: f64,
    /// Weight of the connectivity term.
    pub w_connectivity: f64,
    /// Weight of the target term.
    pub w_targets: f64,
    /// Divisor bringing the target count to the connectivity scale.
    pub target_scale: f64,
    pub seed: u64,
    /// Plain binomial crossover without the forced donor gene.
    pub strict_eq9: bool,
    pub genes: [GeneSpec; GENE_COUNT],
    pub sim: SimConfig,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            pop_size: 50,
            generations: 100,
            scale_factor: 0.6,
            crossover_rate: 0.8,
            w_connectivity: 1.0,
            w_targets: 1.0,
            target_scale: 10.0,
            seed: 1,
            strict_eq9: false,
            genes: default_gene_specs(),
            sim: SimConfig::default(),
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if self.pop_size < 4 {
            return Err(InvalidConfig::new("de.pop_size", "must be at least 4"));
        }
        if self.generations == 0 {
            return Err(InvalidConfig::new("de.generations", "must be at least 1"));
        }
        let f = self.scale_factor;
        if !(f.is_finite() && f > 0.0 && f <= 2.0) {
            return Err(InvalidConfig::new("de.F", format!("must lie in (0, 2], got {f}")));
        }
        within("de.CR", self.crossover_rate, 0.0, 1.0)?;
        for (name, v) in [("de.w_n", self.w_connectivity), ("de.w_t", self.w_targets)] {
            if !v.is_finite() {
                return Err(InvalidConfig::new(name, "must be finite"));
            }
        }
        if !(self.target_scale.is_finite() && self.target_scale > 0.0) {
            return Err(InvalidConfig::new("de.s_s", "must be positive"));
        }
        for (spec, gene) in self.genes.iter().zip(Gene::ALL) {
            let field = format!("gene.{}", gene.name());
            if spec.gene != gene {
                return Err(InvalidConfig::new(field, "gene specs out of chromosome order"));
            }
            let (lo, hi) = gene.default_bounds();
            if !(spec.min < spec.max && spec.min >= lo && spec.max <= hi) {
                return Err(InvalidConfig::new(
                    field,
                    format!("bounds must satisfy {lo} <= min < max <= {hi}"),
                ));
            }
        }
        self.sim.validate()
    }
}

/// `w_n * connectivity + w_t * targets / s_s`.
pub fn fitness_value(connectivity: f64, targets: usize, cfg: &DeConfig) -> f64 {
    cfg.w_connectivity * connectivity + cfg.w_targets * (targets as f64 / cfg.target_scale)
}

pub fn fitness(metrics: &SimMetrics, cfg: &DeConfig) -> f64 {
    fitness_value(metrics.connectivity, metrics.targets_reached, cfg)
}

/// Simulates the chromosome under `cfg.sim` and scores it.
pub fn evaluate(chromosome: &Chromosome, cfg: &DeConfig) -> Result<Evaluation, SimError> {
    let mut sim = cfg.sim.clone();
    chromosome.apply(&mut sim);
    let metrics = run(&sim)?;
    Ok(Evaluation {
        chromosome: *chromosome,
        targets_reached: metrics.targets_reached,
        connectivity: metrics.connectivity,
        fitness: fitness(&metrics, cfg),
    })
}

/// Population of `cfg.pop_size` chromosomes with every gene uniform within
/// its bounds.
pub fn init_population<R: Rng + ?Sized>(cfg: &DeConfig, rng: &mut R) -> Vec<Chromosome> {
    (0..cfg.pop_size)
        .map(|_| Chromosome(cfg.genes.map(|s| s.min + rng.random::<f64>() * (s.max - s.min))))
        .collect()
}

/// `r1 + F * (r2 - r3)` per gene, clamped into the gene bounds.
pub fn donor(
    r1: &Chromosome,
    r2: &Chromosome,
    r3: &Chromosome,
    scale_factor: f64,
    specs: &[GeneSpec; GENE_COUNT],
) -> Chromosome {
    let mut out = [0.0; GENE_COUNT];
    for j in 0..GENE_COUNT {
        out[j] = specs[j].clamp(r1.0[j] + scale_factor * (r2.0[j] - r3.0[j]));
    }
    Chromosome(out)
}

/// Binomial crossover on explicit uniform draws: gene `j` comes from the
/// donor when `draws[j] <= rate` or when `j == forced`.
pub fn crossover_genes(target: &[f64], donor: &[f64], rate: f64, draws: &[f64], forced: Option<usize>) -> Vec<f64> {
    target
        .iter()
        .zip(donor)
        .zip(draws)
        .enumerate()
        .map(|(j, ((&t, &d), &r))| if r <= rate || forced == Some(j) { d } else { t })
        .collect()
}

/// Builds a trial vector. Unless `strict` is set, one uniformly chosen gene
/// always comes from the donor. Draw order: forced index, then one uniform
/// per gene.
pub fn crossover<R: Rng + ?Sized>(
    target: &Chromosome,
    donor: &Chromosome,
    rate: f64,
    strict: bool,
    rng: &mut R,
) -> Chromosome {
    let forced = (!strict).then(|| rng.random_range(0..GENE_COUNT));
    let draws: [f64; GENE_COUNT] = std::array::from_fn(|_| rng.random::<f64>());
    let genes = crossover_genes(&target.0, &donor.0, rate, &draws, forced);
    Chromosome(genes.try_into().expect("gene count"))
}

/// Greedy one-to-one selection: the trial replaces the target only with a
/// strictly larger fitness.
pub fn select(target: Evaluation, trial: Evaluation) -> Evaluation {
    if trial.fitness > target.fitness {
        trial
    } else {
        target
    }
}

/// Three distinct indices in `0..n`, all different from `exclude`.
fn pick_three<R: Rng + ?Sized>(n: usize, exclude: usize, rng: &mut R) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let c = rng.random_range(0..n);
        if c != exclude && !picked[..k].contains(&c) {
            picked[k] = c;
            k += 1;
        }
    }
    picked
}

/// Index of the maximum under `key`; ties go to the lower index.
fn argmax_by<T, F: Fn(&T) -> f64>(items: &[T], key: F) -> usize {
    let mut best = 0;
    for i in 1..items.len() {
        if key(&items[i]) > key(&items[best]) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    /// 1-based; generation 1 is the initial population.
    pub generation: usize,
    pub avg_fitness: f64,
    pub best_fitness: f64,
    /// Most targets reached by any individual.
    pub best_targets: usize,
    /// Highest connectivity of any individual.
    pub best_connectivity: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionReport {
    pub generations: Vec<GenerationRecord>,
    pub final_population: Vec<Evaluation>,
    pub best: Evaluation,
    pub best_by_targets: Evaluation,
    pub best_by_connectivity: Evaluation,
}

fn record(generation: usize, pop: &[Evaluation], started: Instant) -> GenerationRecord {
    GenerationRecord {
        generation,
        avg_fitness: pop.iter().map(|e| e.fitness).sum::<f64>() / pop.len() as f64,
        best_fitness: pop[argmax_by(pop, |e| e.fitness)].fitness,
        best_targets: pop.iter().map(|e| e.targets_reached).max().unwrap_or(0),
        best_connectivity: pop[argmax_by(pop, |e| e.connectivity)].connectivity,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn evaluate_all(
    chromosomes: &[Chromosome],
    cfg: &DeConfig,
    pool: &rayon::ThreadPool,
    generation: usize,
) -> Result<Vec<Evaluation>, EvolveError> {
    let results: Vec<Result<Evaluation, SimError>> =
        pool.install(|| chromosomes.par_iter().map(|c| evaluate(c, cfg)).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(individual, r)| {
            r.map_err(|source| EvolveError::Evaluation {
                generation,
                individual,
                source,
            })
        })
        .collect()
}

/// Reinserts the generation's elites into `next` unless they survived
/// selection, overwriting the lowest-fitness slots. The fittest slot of
/// `next` is never overwritten.
fn reinsert_elites(next: &mut [Evaluation], elites: &[Evaluation]) {
    let mut protected = vec![argmax_by(next, |e| e.fitness)];
    for elite in elites {
        if let Some(i) = next.iter().position(|e| e.chromosome == elite.chromosome) {
            protected.push(i);
            continue;
        }
        let slot = (0..next.len())
            .filter(|i| !protected.contains(i))
            .fold(None, |worst: Option<usize>, i| match worst {
                Some(w) if next[w].fitness < next[i].fitness => Some(w),
                _ => Some(i),
            });
        if let Some(slot) = slot {
            next[slot] = elite.clone();
            protected.push(slot);
        }
    }
}

/// Runs the optimizer. Evaluations fan out over `threads` workers; results
/// do not depend on the thread count. `progress` sees each generation record
/// as soon as it is complete.
pub fn evolve(
    cfg: &DeConfig,
    threads: usize,
    progress: &mut dyn FnMut(&GenerationRecord),
) -> Result<EvolutionReport, EvolveError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EvolveError::ThreadPool(e.to_string()))?;
    let started = Instant::now();
    let mut rng: SimRng = seeded(cfg.seed);

    let initial = init_population(cfg, &mut rng);
    let mut population = evaluate_all(&initial, cfg, &pool, 1)?;
    let mut records = Vec::with_capacity(cfg.generations);

    for generation in 1..=cfg.generations {
        let rec = record(generation, &population, started);
        progress(&rec);
        records.push(rec);
        if generation == cfg.generations {
            break;
        }

        let elite_targets = population[argmax_by(&population, |e| e.targets_reached as f64)].clone();
        let elite_network = population[argmax_by(&population, |e| e.connectivity)].clone();

        let n = population.len();
        let trials: Vec<Chromosome> = (0..n)
            .map(|i| {
                let [r1, r2, r3] = pick_three(n, i, &mut rng);
                let v = donor(
                    &population[r1].chromosome,
                    &population[r2].chromosome,
                    &population[r3].chromosome,
                    cfg.scale_factor,
                    &cfg.genes,
                );
                crossover(&population[i].chromosome, &v, cfg.crossover_rate, cfg.strict_eq9, &mut rng)
            })
            .collect();
        let trial_evals = evaluate_all(&trials, cfg, &pool, generation + 1)?;

        let mut next: Vec<Evaluation> = population
            .into_iter()
            .zip(trial_evals)
            .map(|(t, u)| select(t, u))
            .collect();
        let elites = if elite_targets.chromosome == elite_network.chromosome {
            vec![elite_targets]
        } else {
            vec![elite_targets, elite_network]
        };
        reinsert_elites(&mut next, &elites);
        population = next;
    }

    let best = population[argmax_by(&population, |e| e.fitness)].clone();
    let best_by_targets = population[argmax_by(&population, |e| e.targets_reached as f64)].clone();
    let best_by_connectivity = population[argmax_by(&population, |e| e.connectivity)].clone();
    Ok(EvolutionReport {
        generations: records,
        final_population: population,
        best,
        best_by_targets,
        best_by_connectivity,
    })
}
