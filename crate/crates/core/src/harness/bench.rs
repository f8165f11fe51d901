//! The dataset x decomposition x optimizer x seed grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{init_random, Family, ModelSpec};
use crate::optim::{decompose, Clock, FakeClock, MonotonicClock, OptimizerConfig, OptimizerFamily, RunReport};
use crate::tensor::DenseTensor;

use super::dataset::{batch_dataset, decomposition_target, DatasetSpec};

pub const DEFAULT_RANK: usize = 10;

/// A decomposition family with its rank(s); the target shape comes from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionTemplate {
    pub family: Family,
    /// CP and DEDICOM rank, and the PARATUCK2 default for both `p` and `q`.
    pub rank: usize,
    pub p: Option<usize>,
    pub q: Option<usize>,
}

impl DecompositionTemplate {
    pub fn new(family: Family, rank: usize) -> Self {
        Self { family, rank, p: None, q: None }
    }

    pub fn spec_for(&self, dims: [usize; 3]) -> Result<ModelSpec> {
        ModelSpec::new(self.family, dims, self.p.unwrap_or(self.rank), self.q.unwrap_or(self.rank))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TemplateRepr {
    Name(Family),
    Full {
        family: Family,
        #[serde(default)]
        rank: Option<usize>,
        #[serde(default)]
        p: Option<usize>,
        #[serde(default)]
        q: Option<usize>,
    },
}

impl<'de> Deserialize<'de> for DecompositionTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match TemplateRepr::deserialize(d)? {
            TemplateRepr::Name(family) => Self::new(family, DEFAULT_RANK),
            TemplateRepr::Full { family, rank, p, q } => Self {
                family,
                rank: rank.unwrap_or(DEFAULT_RANK),
                p,
                q,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub datasets: Vec<DatasetSpec>,
    pub decompositions: Vec<DecompositionTemplate>,
    pub optimizers: Vec<OptimizerConfig>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_batches: Option<usize>,
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("benchmark config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::Config(format!("benchmark config lists no {what}")));
        if self.datasets.is_empty() {
            return empty("datasets");
        }
        if self.decompositions.is_empty() {
            return empty("decompositions");
        }
        if self.optimizers.is_empty() {
            return empty("optimizers");
        }
        if self.seeds.is_empty() {
            return empty("seeds");
        }
        if self.max_batches == Some(0) {
            return Err(Error::Config("max_batches must be positive".into()));
        }
        for d in &self.datasets {
            d.validate()?;
        }
        for o in &self.optimizers {
            o.validate()?;
        }
        for t in &self.decompositions {
            if t.rank == 0 || t.p == Some(0) || t.q == Some(0) {
                return Err(Error::Config(format!("{}: ranks must be positive", t.family)));
            }
        }
        Ok(())
    }
}

/// Time source handed to every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockMode {
    Monotonic,
    /// Each cell gets a fresh [`FakeClock`] with this tick.
    Fake { tick: f64 },
}

impl ClockMode {
    fn time<T>(&self, run: impl FnOnce(&dyn Clock) -> T) -> T {
        match *self {
            ClockMode::Monotonic => run(&MonotonicClock::default()),
            ClockMode::Fake { tick } => run(&FakeClock::new(tick)),
        }
    }
}

/// Loaded and batched data, ready to run.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub batches: Vec<DenseTensor>,
}

/// Loads every dataset and cuts it into batches, honouring `max_batches`.
pub fn prepare_datasets(cfg: &BenchmarkConfig) -> Result<Vec<PreparedDataset>> {
    cfg.datasets
        .iter()
        .map(|d| {
            let t = d.load()?;
            if t.order() != 3 {
                return Err(Error::format(0, format!("dataset '{}' is not third-order", d.name)));
            }
            let mut batches = match d.batch_size() {
                Some(b) => batch_dataset(&t, b)?,
                None => vec![t],
            };
            if let Some(m) = cfg.max_batches {
                batches.truncate(m);
            }
            Ok(PreparedDataset { name: d.name.clone(), batches })
        })
        .collect()
}

/// One grid cell on one batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub dataset: String,
    pub decomposition: Family,
    pub optimizer: OptimizerFamily,
    pub seed: u64,
    pub batch_index: usize,
    /// `Err` holds the failure message when the cell could not run.
    pub outcome: std::result::Result<RunReport, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub dataset: String,
    pub decomposition: Family,
    pub optimizer: OptimizerFamily,
    /// Successful runs averaged.
    pub runs: usize,
    pub mean_final_loss: Option<f64>,
    pub mean_wall_time_s: Option<f64>,
    /// Mean over runs whose rate is defined.
    pub mean_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkOutput {
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
}

impl BenchmarkOutput {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}

fn run_cell(
    target: &DenseTensor,
    template: &DecompositionTemplate,
    optimizer: &OptimizerConfig,
    seed: u64,
    clock: ClockMode,
) -> Result<RunReport> {
    let target = decomposition_target(target, template.family)?;
    let d = target.dims();
    let spec = template.spec_for([d[0], d[1], d[2]])?;
    let x0 = init_random(&spec, seed);
    let cfg = OptimizerConfig { seed, ..optimizer.clone() };
    clock.time(|c| decompose(&target, &x0, &cfg, c)).map(|(_, r)| r)
}

/// Runs every cell on `workers` threads. Cells come back in grid order
/// (dataset, decomposition, optimizer, seed, batch) whatever the timing.
pub fn run_benchmark(cfg: &BenchmarkConfig, workers: usize, clock: ClockMode) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let data = prepare_datasets(cfg)?;
    run_prepared(cfg, &data, workers, clock)
}

pub fn run_prepared(
    cfg: &BenchmarkConfig,
    data: &[PreparedDataset],
    workers: usize,
    clock: ClockMode,
) -> Result<BenchmarkOutput> {
    use rayon::prelude::*;

    let mut jobs = Vec::new();
    for ds in data {
        for t in &cfg.decompositions {
            for o in &cfg.optimizers {
                for &seed in &cfg.seeds {
                    for (b, batch) in ds.batches.iter().enumerate() {
                        jobs.push((ds, t, o, seed, b, batch));
                    }
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let cells: Vec<CellResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(ds, t, o, seed, b, batch)| CellResult {
                dataset: ds.name.clone(),
                decomposition: t.family,
                optimizer: o.family,
                seed,
                batch_index: b,
                outcome: run_cell(batch, t, o, seed, clock).map_err(|e| e.to_string()),
            })
            .collect()
    });
    let aggregates = aggregate(&cells);
    Ok(BenchmarkOutput { cells, aggregates })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Per (dataset, decomposition, optimizer) means, in first-appearance order.
pub fn aggregate(cells: &[CellResult]) -> Vec<Aggregate> {
    let mut keys: Vec<(&str, Family, OptimizerFamily)> = Vec::new();
    for c in cells {
        let k = (c.dataset.as_str(), c.decomposition, c.optimizer);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dataset, decomposition, optimizer)| {
            let ok: Vec<&RunReport> = cells
                .iter()
                .filter(|c| c.dataset == dataset && c.decomposition == decomposition && c.optimizer == optimizer)
                .filter_map(|c| c.outcome.as_ref().ok())
                .collect();
            Aggregate {
                dataset: dataset.to_string(),
                decomposition,
                optimizer,
                runs: ok.len(),
                mean_final_loss: mean(ok.iter().map(|r| r.final_loss)),
                mean_wall_time_s: mean(ok.iter().map(|r| r.wall_time_seconds)),
                mean_q: mean(ok.iter().filter_map(|r| r.convergence_rate_q)),
            }
        })
        .collect()
}
