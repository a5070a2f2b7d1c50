//! Python bindings: scenario configs, simulation runs and stepping, the
//! chromosome and fitness helpers, and the optimizer.

use airground_cli::config::{parse_config, serialize_config};
use airground_core::connectivity::largest_ground_component_of;
use airground_core::evolution::{self, Gene, GENE_COUNT};
use airground_core::{AgentKind, AgentState, Vec2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Scenario and optimizer settings. `Config()` holds the defaults;
/// `Config.from_text` parses the `key = value` format used by the CLI.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: evolution::DeConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        Self {
            inner: evolution::DeConfig::default(),
        }
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let (_, inner) = parse_config(text).map_err(value_error)?;
        Ok(Self { inner })
    }

    fn to_text(&self) -> String {
        serialize_config(&self.inner)
    }

    /// Returns a copy with `key = value` applied, validated like a config file.
    fn with_value(&self, key: &str, value: &str) -> PyResult<Self> {
        let text = format!("{}{key} = {value}\n", without_key(&self.to_text(), key));
        Self::from_text(&text)
    }

    #[getter]
    fn n_ground(&self) -> usize {
        self.inner.sim.n_ground
    }

    #[getter]
    fn n_air(&self) -> usize {
        self.inner.sim.n_air
    }

    #[getter]
    fn timesteps(&self) -> usize {
        self.inner.sim.timesteps
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.sim.seed
    }

    #[getter]
    fn pop_size(&self) -> usize {
        self.inner.pop_size
    }

    #[getter]
    fn generations(&self) -> usize {
        self.inner.generations
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(n_ground={}, n_air={}, timesteps={}, seed={}, pop_size={}, generations={})",
            self.inner.sim.n_ground,
            self.inner.sim.n_air,
            self.inner.sim.timesteps,
            self.inner.sim.seed,
            self.inner.pop_size,
            self.inner.generations
        )
    }
}

fn without_key(text: &str, key: &str) -> String {
    text.lines()
        .filter(|l| l.split('=').next().map(str::trim) != Some(key))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Outcome of a simulation run.
#[pyclass(name = "Metrics", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyMetrics {
    targets_reached: usize,
    connectivity: f64,
    component_series: Vec<usize>,
    targets_series: Vec<usize>,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(targets_reached={}, connectivity={:.6}, steps={})",
            self.targets_reached,
            self.connectivity,
            self.component_series.len()
        )
    }
}

impl From<airground_core::SimMetrics> for PyMetrics {
    fn from(m: airground_core::SimMetrics) -> Self {
        Self {
            targets_reached: m.targets_reached,
            connectivity: m.connectivity,
            component_series: m.component_series,
            targets_series: m.targets_series,
        }
    }
}

/// The nine evolvable swarm parameters.
#[pyclass(name = "Chromosome", from_py_object)]
#[derive(Clone)]
struct PyChromosome {
    inner: evolution::Chromosome,
}

#[pymethods]
impl PyChromosome {
    #[new]
    fn new(genes: Vec<f64>) -> PyResult<Self> {
        let genes: [f64; GENE_COUNT] = genes
            .try_into()
            .map_err(|g: Vec<f64>| PyValueError::new_err(format!("expected {GENE_COUNT} genes, got {}", g.len())))?;
        Ok(Self {
            inner: evolution::Chromosome(genes),
        })
    }

    /// The genes currently set in a config.
    #[staticmethod]
    fn from_config(config: &PyConfig) -> Self {
        Self {
            inner: evolution::Chromosome::from_config(&config.inner.sim),
        }
    }

    /// Gene names in chromosome order, as used in config files.
    #[staticmethod]
    fn names() -> Vec<&'static str> {
        Gene::ALL.iter().map(|g| g.name()).collect()
    }

    #[getter]
    fn genes(&self) -> Vec<f64> {
        self.inner.0.to_vec()
    }

    /// Copy of `config` with these genes written into the swarm parameters.
    fn apply(&self, config: &PyConfig) -> PyResult<PyConfig> {
        let mut inner = config.inner.clone();
        self.inner.apply(&mut inner.sim);
        inner.validate().map_err(value_error)?;
        Ok(PyConfig { inner })
    }

    fn __repr__(&self) -> String {
        format!("Chromosome({:?})", self.inner.0)
    }
}

/// A chromosome with its simulated objectives.
#[pyclass(name = "Evaluation", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEvaluation {
    chromosome: PyChromosome,
    targets_reached: usize,
    connectivity: f64,
    fitness: f64,
}

impl From<evolution::Evaluation> for PyEvaluation {
    fn from(e: evolution::Evaluation) -> Self {
        Self {
            chromosome: PyChromosome { inner: e.chromosome },
            targets_reached: e.targets_reached,
            connectivity: e.connectivity,
            fitness: e.fitness,
        }
    }
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!(
            "Evaluation(fitness={:.6}, targets_reached={}, connectivity={:.6})",
            self.fitness, self.targets_reached, self.connectivity
        )
    }
}

/// Per-generation summary of an optimizer run.
#[pyclass(name = "GenerationRecord", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyGenerationRecord {
    generation: usize,
    avg_fitness: f64,
    best_fitness: f64,
    best_targets: usize,
    best_connectivity: f64,
    seconds: f64,
}

#[pymethods]
impl PyGenerationRecord {
    fn __repr__(&self) -> String {
        format!(
            "GenerationRecord(generation={}, avg_fitness={:.6}, best_fitness={:.6})",
            self.generation, self.avg_fitness, self.best_fitness
        )
    }
}

#[pyclass(name = "EvolutionReport", get_all, skip_from_py_object)]
struct PyEvolutionReport {
    generations: Vec<PyGenerationRecord>,
    final_population: Vec<PyEvaluation>,
    best: PyEvaluation,
    best_by_targets: PyEvaluation,
    best_by_connectivity: PyEvaluation,
}

/// A simulation that can be advanced step by step.
#[pyclass(name = "World", skip_from_py_object)]
struct PyWorld {
    inner: airground_core::World,
}

#[pymethods]
impl PyWorld {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        let inner = airground_core::World::new(config.inner.sim.clone()).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Advances `n` timesteps, stopping early at the configured horizon.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: usize) -> PyResult<usize> {
        let mut taken = 0;
        while taken < n && !self.inner.is_finished() {
            self.inner.step().map_err(runtime_error)?;
            taken += 1;
        }
        Ok(taken)
    }

    /// `(id, kind, x, y, vx, vy)` for every agent, ground agents first.
    fn agents(&self) -> Vec<(usize, &'static str, f64, f64, f64, f64)> {
        self.inner
            .agents()
            .iter()
            .map(|a| (a.id, a.kind.as_str(), a.position.x, a.position.y, a.velocity.x, a.velocity.y))
            .collect()
    }

    /// Position of the current target.
    fn target(&self) -> (f64, f64) {
        let p = self.inner.target().position;
        (p.x, p.y)
    }

    #[getter]
    fn steps_done(&self) -> usize {
        self.inner.steps_done()
    }

    #[getter]
    fn targets_reached(&self) -> usize {
        self.inner.targets_reached()
    }

    #[getter]
    fn finished(&self) -> bool {
        self.inner.is_finished()
    }

    fn metrics(&self) -> PyMetrics {
        self.inner.metrics().into()
    }
}

/// Runs the scenario to completion. The GIL is released meanwhile.
#[pyfunction]
fn run(py: Python<'_>, config: &PyConfig) -> PyResult<PyMetrics> {
    let sim = config.inner.sim.clone();
    py.detach(move || airground_core::run(&sim))
        .map(PyMetrics::from)
        .map_err(value_error)
}

/// Simulates `chromosome` under `config` and scores it.
#[pyfunction]
fn evaluate(py: Python<'_>, chromosome: &PyChromosome, config: &PyConfig) -> PyResult<PyEvaluation> {
    let (ch, de) = (chromosome.inner, config.inner.clone());
    py.detach(move || evolution::evaluate(&ch, &de))
        .map(PyEvaluation::from)
        .map_err(value_error)
}

/// Weighted fitness of a connectivity fraction and a target count.
#[pyfunction]
#[pyo3(signature = (connectivity, targets, w_n = 1.0, w_t = 1.0, s_s = 10.0))]
fn fitness(connectivity: f64, targets: usize, w_n: f64, w_t: f64, s_s: f64) -> f64 {
    let cfg = evolution::DeConfig {
        w_connectivity: w_n,
        w_targets: w_t,
        target_scale: s_s,
        ..Default::default()
    };
    evolution::fitness_value(connectivity, targets, &cfg)
}

/// Runs the optimizer with `threads` evaluation workers.
#[pyfunction]
#[pyo3(signature = (config, threads = 1))]
fn evolve(py: Python<'_>, config: &PyConfig, threads: usize) -> PyResult<PyEvolutionReport> {
    let de = config.inner.clone();
    let report = py
        .detach(move || evolution::evolve(&de, threads, &mut |_| {}))
        .map_err(runtime_error)?;
    Ok(PyEvolutionReport {
        generations: report
            .generations
            .into_iter()
            .map(|r| PyGenerationRecord {
                generation: r.generation,
                avg_fitness: r.avg_fitness,
                best_fitness: r.best_fitness,
                best_targets: r.best_targets,
                best_connectivity: r.best_connectivity,
                seconds: r.seconds,
            })
            .collect(),
        final_population: report.final_population.into_iter().map(Into::into).collect(),
        best: report.best.into(),
        best_by_targets: report.best_by_targets.into(),
        best_by_connectivity: report.best_by_connectivity.into(),
    })
}

/// Size of the largest group of ground agents connected through UAV relays.
#[pyfunction]
#[pyo3(signature = (ground, air, comm_range = 300.0))]
fn largest_ground_component(ground: Vec<(f64, f64)>, air: Vec<(f64, f64)>, comm_range: f64) -> usize {
    let agents: Vec<AgentState> = ground
        .iter()
        .map(|&p| (AgentKind::Ground, p))
        .chain(air.iter().map(|&p| (AgentKind::Air, p)))
        .enumerate()
        .map(|(id, (kind, (x, y)))| AgentState::new(id, kind, Vec2::new(x, y), Vec2::ZERO))
        .collect();
    largest_ground_component_of(&agents, comm_range, None)
}

#[pymodule]
fn airground(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PyChromosome>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyGenerationRecord>()?;
    m.add_class::<PyEvolutionReport>()?;
    m.add_class::<PyWorld>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fitness, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(largest_ground_component, m)?)?;
    Ok(())
}
