//! CSV tables and the best-chromosome document.
//!
//! All tables are comma-separated with a fixed header row and LF endings.
//! Reals are written with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use airground_core::evolution::{Chromosome, Evaluation, Gene, GenerationRecord, GENE_COUNT};
use airground_core::{AgentState, SimMetrics};
use thiserror::Error;

pub const GENERATION_HEADER: [&str; 6] = ["generation", "avg_fitness", "best_fitness", "best_nt", "best_nc", "seconds"];
pub const METRICS_HEADER: [&str; 3] = ["step", "largest_component", "targets_cumulative"];
pub const TRAJECTORY_HEADER: [&str; 7] = ["step", "id", "kind", "x", "y", "vx", "vy"];
pub const AGGREGATE_HEADER: [&str; 4] = ["generation", "mean_avg_fitness", "mean_best_fitness", "runs"];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

impl RecordError {
    fn format(path: &str, reason: impl Into<String>) -> Self {
        RecordError::Format {
            path: path.to_string(),
            reason: reason.into(),
        }
    }
}

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, RecordError> {
    let file = File::create(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> RecordError + '_ {
    move |source| RecordError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Generation log that flushes after every row, so an interrupted run
/// leaves a valid file behind.
pub struct GenerationLog {
    path: std::path::PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl GenerationLog {
    pub fn create(path: &Path) -> Result<Self, RecordError> {
        let mut writer = csv_writer(path)?;
        writer.write_record(GENERATION_HEADER).map_err(csv_err(path))?;
        writer.flush().map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn append(&mut self, r: &GenerationRecord) -> Result<(), RecordError> {
        self.writer
            .write_record([
                r.generation.to_string(),
                real(r.avg_fitness),
                real(r.best_fitness),
                r.best_targets.to_string(),
                real(r.best_connectivity),
                real(r.seconds),
            ])
            .map_err(csv_err(&self.path))?;
        self.writer.flush().map_err(|source| RecordError::Io {
            path: self.path.display().to_string(),
            source,
        })
    }
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, RecordError> {
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let found = reader.headers().map_err(csv_err(path))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(RecordError::format(
            &shown,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(csv_err(path))?;
    if rows.is_empty() {
        return Err(RecordError::format(&shown, "no data rows"));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, i: usize, line: usize) -> Result<T, RecordError> {
    row.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| RecordError::format(&path.display().to_string(), format!("row {line}: bad value in column {}", i + 1)))
}

pub fn read_generation_log(path: &Path) -> Result<Vec<GenerationRecord>, RecordError> {
    read_table(path, &GENERATION_HEADER)?
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let line = k + 2;
            Ok(GenerationRecord {
                generation: field(path, row, 0, line)?,
                avg_fitness: field(path, row, 1, line)?,
                best_fitness: field(path, row, 2, line)?,
                best_targets: field(path, row, 3, line)?,
                best_connectivity: field(path, row, 4, line)?,
                seconds: field(path, row, 5, line)?,
            })
        })
        .collect()
}

pub fn write_metrics(path: &Path, m: &SimMetrics) -> Result<(), RecordError> {
    let mut w = csv_writer(path)?;
    w.write_record(METRICS_HEADER).map_err(csv_err(path))?;
    for (step, (c, t)) in m.component_series.iter().zip(&m.targets_series).enumerate() {
        w.write_record([(step + 1).to_string(), c.to_string(), t.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Per-step largest component and cumulative targets.
pub fn read_metrics(path: &Path) -> Result<Vec<(usize, usize, usize)>, RecordError> {
    read_table(path, &METRICS_HEADER)?
        .iter()
        .enumerate()
        .map(|(k, row)| Ok((field(path, row, 0, k + 2)?, field(path, row, 1, k + 2)?, field(path, row, 2, k + 2)?)))
        .collect()
}

pub struct AggregateRow {
    pub generation: usize,
    pub mean_avg_fitness: f64,
    pub mean_best_fitness: f64,
    pub runs: usize,
}

/// Per-generation means across runs. All runs must have the same length.
pub fn aggregate(runs: &[Vec<GenerationRecord>]) -> Vec<AggregateRow> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len() as f64;
    (0..first.len())
        .map(|g| AggregateRow {
            generation: first[g].generation,
            mean_avg_fitness: runs.iter().map(|r| r[g].avg_fitness).sum::<f64>() / n,
            mean_best_fitness: runs.iter().map(|r| r[g].best_fitness).sum::<f64>() / n,
            runs: runs.len(),
        })
        .collect()
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<(), RecordError> {
    let mut w = csv_writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.generation.to_string(),
            real(r.mean_avg_fitness),
            real(r.mean_best_fitness),
            r.runs.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>, RecordError> {
    read_table(path, &AGGREGATE_HEADER)?
        .iter()
        .enumerate()
        .map(|(k, row)| {
            Ok(AggregateRow {
                generation: field(path, row, 0, k + 2)?,
                mean_avg_fitness: field(path, row, 1, k + 2)?,
                mean_best_fitness: field(path, row, 2, k + 2)?,
                runs: field(path, row, 3, k + 2)?,
            })
        })
        .collect()
}

/// Streaming trajectory dump, one row per agent per recorded step.
pub struct TrajectoryWriter {
    path: std::path::PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> Result<Self, RecordError> {
        let mut writer = csv_writer(path)?;
        writer.write_record(TRAJECTORY_HEADER).map_err(csv_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn record(&mut self, step: usize, agents: &[AgentState]) -> Result<(), RecordError> {
        for a in agents {
            self.writer
                .write_record([
                    step.to_string(),
                    a.id.to_string(),
                    a.kind.as_str().to_string(),
                    real(a.position.x),
                    real(a.position.y),
                    real(a.velocity.x),
                    real(a.velocity.y),
                ])
                .map_err(csv_err(&self.path))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), RecordError> {
        self.writer.flush().map_err(|source| RecordError::Io {
            path: self.path.display().to_string(),
            source,
        })
    }
}

/// Number of data rows in a trajectory file after validating every row.
pub fn read_trajectory_rows(path: &Path) -> Result<usize, RecordError> {
    let rows = read_table(path, &TRAJECTORY_HEADER)?;
    for (k, row) in rows.iter().enumerate() {
        let line = k + 2;
        let _: usize = field(path, row, 0, line)?;
        let _: usize = field(path, row, 1, line)?;
        if !matches!(row.get(2), Some("ground" | "air")) {
            return Err(RecordError::format(&path.display().to_string(), format!("row {line}: bad kind")));
        }
        for i in 3..7 {
            let _: f64 = field(path, row, i, line)?;
        }
    }
    Ok(rows.len())
}

/// Renders an evaluated chromosome as `key = value` lines.
pub fn chromosome_document(e: &Evaluation) -> String {
    let mut out = String::from("# evolved swarm parameters\n");
    for gene in Gene::ALL {
        out.push_str(&format!("{} = {}\n", gene.name(), e.chromosome.get(gene)));
    }
    out.push_str(&format!("eval.targets_reached = {}\n", e.targets_reached));
    out.push_str(&format!("eval.connectivity = {}\n", e.connectivity));
    out.push_str(&format!("eval.fitness = {}\n", e.fitness));
    out
}

pub fn write_chromosome(path: &Path, e: &Evaluation) -> Result<(), RecordError> {
    let mut f = File::create(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(chromosome_document(e).as_bytes())
        .map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Parses a chromosome document. All nine genes are required; the
/// evaluation lines are optional, and without them the evaluation fields
/// are zero.
pub fn parse_chromosome_document(text: &str, source: &str) -> Result<Evaluation, RecordError> {
    let mut genes: [Option<f64>; GENE_COUNT] = [None; GENE_COUNT];
    let mut eval = Evaluation {
        chromosome: Chromosome([0.0; GENE_COUNT]),
        targets_reached: 0,
        connectivity: 0.0,
        fitness: 0.0,
    };
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| RecordError::format(source, format!("line {}: {why}", k + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(gene) = Gene::from_name(key) {
            let v: f64 = value.parse().map_err(|_| bad("gene value is not a number"))?;
            genes[gene.index()] = Some(v);
            continue;
        }
        match key {
            "eval.targets_reached" => eval.targets_reached = value.parse().map_err(|_| bad("bad integer"))?,
            "eval.connectivity" => eval.connectivity = value.parse().map_err(|_| bad("bad number"))?,
            "eval.fitness" => eval.fitness = value.parse().map_err(|_| bad("bad number"))?,
            _ => return Err(bad(&format!("unknown key `{key}`"))),
        }
    }
    for (j, g) in genes.iter().enumerate() {
        match g {
            Some(v) => eval.chromosome.0[j] = *v,
            None => {
                return Err(RecordError::format(
                    source,
                    format!("missing gene `{}`", Gene::ALL[j].name()),
                ))
            }
        }
    }
    Ok(eval)
}

pub fn read_chromosome(path: &Path) -> Result<Evaluation, RecordError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_chromosome_document(&text, &path.display().to_string())
}
