//! Experiment harness: repeat inversion over seeds and observation
//! layouts, collect per-run metrics, and summarize per layout.

use lddim_fvm::{BoundaryConditions, ForwardState, ScalarField2D};

use crate::config::InversionConfig;
use crate::error::Result;
use crate::invert::invert;
use crate::model::PriorModel;
use crate::obs::{observe_head, uniform_layout};

/// The four observation grids of the density study.
pub const OBSERVATION_LAYOUTS: [usize; 4] = [3, 5, 12, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Fixed 5x5 layout, varying seeds.
    SeedSensitivity,
    /// All four layouts crossed with the seeds.
    ObservationDensity,
}

impl SweepKind {
    pub fn layouts(self) -> Vec<usize> {
        match self {
            SweepKind::SeedSensitivity => vec![5],
            SweepKind::ObservationDensity => OBSERVATION_LAYOUTS.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::SeedSensitivity => "seed-sensitivity",
            SweepKind::ObservationDensity => "observation-density",
        }
    }
}

/// One (seed, layout) run; metric fields are NaN when `error` is set.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub seed: u64,
    pub layout: usize,
    pub eps_h: f64,
    pub eps_k: f64,
    pub eps_k_tilde: f64,
    pub ssim: f64,
    pub iterations: usize,
    pub error: Option<String>,
}

/// Per-layout, per-metric box-plot statistics over successful runs.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub layout: usize,
    pub metric: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
    pub count: usize,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Run the grid of (seeds x layouts) on a bounded worker pool
/// (`workers = 0` sizes it from the available parallelism). Failures
/// are recorded per run and the sweep continues.
#[allow(clippy::too_many_arguments)]
pub fn experiment_sweep(
    kind: SweepKind,
    base: &InversionConfig,
    prior: &PriorModel,
    k_truth: &ScalarField2D,
    bc: &BoundaryConditions,
    seeds: &[u64],
    evaluated_in_log: bool,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let h_truth = ForwardState::solve(k_truth, bc)?.head;
    let layouts = kind.layouts();

    let mut jobs: Vec<(u64, usize)> = Vec::new();
    for &seed in seeds {
        for &layout in &layouts {
            jobs.push((seed, layout));
        }
    }

    let n_threads = if workers > 0 {
        workers
    } else {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    }
    .min(jobs.len().max(1));
    let mut rows: Vec<Option<SweepRow>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (chunk_idx, chunk) in jobs.chunks(jobs.len().div_ceil(n_threads)).enumerate() {
            let h_truth = &h_truth;
            let handle = scope.spawn(move || {
                let mut out = Vec::with_capacity(chunk.len());
                for &(seed, layout) in chunk {
                    out.push(run_one(
                        seed,
                        layout,
                        base,
                        prior,
                        k_truth,
                        h_truth,
                        bc,
                        evaluated_in_log,
                    ));
                }
                (chunk_idx, out)
            });
            handles.push(handle);
        }
        let chunk_size = jobs.len().div_ceil(n_threads);
        for handle in handles {
            let (chunk_idx, out) = handle.join().expect("sweep worker panicked");
            for (off, row) in out.into_iter().enumerate() {
                rows[chunk_idx * chunk_size + off] = Some(row);
            }
        }
    });
    Ok(rows.into_iter().map(|r| r.unwrap()).collect())
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    seed: u64,
    layout: usize,
    base: &InversionConfig,
    prior: &PriorModel,
    k_truth: &ScalarField2D,
    h_truth: &ScalarField2D,
    bc: &BoundaryConditions,
    evaluated_in_log: bool,
) -> SweepRow {
    let mut row = SweepRow {
        seed,
        layout,
        eps_h: f64::NAN,
        eps_k: f64::NAN,
        eps_k_tilde: f64::NAN,
        ssim: f64::NAN,
        iterations: 0,
        error: None,
    };
    let attempt = (|| -> Result<()> {
        let cells = uniform_layout(layout, k_truth.nx, k_truth.ny)?;
        let obs = observe_head(h_truth, &cells)?;
        let mut cfg = base.clone();
        cfg.seed = seed;
        let mut result = invert(&obs, &cfg, prior, bc)?;
        result.attach_metrics(k_truth, h_truth, evaluated_in_log)?;
        let m = result.metrics.as_ref().unwrap();
        row.eps_h = m.eps_h;
        row.eps_k = m.eps_k;
        row.eps_k_tilde = m.eps_k_tilde;
        row.ssim = m.ssim;
        row.iterations = result.iterations;
        Ok(())
    })();
    if let Err(e) = attempt {
        row.error = Some(e.to_string());
    }
    row
}

/// Box-plot statistics per layout for each metric column.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut layouts: Vec<usize> = rows.iter().map(|r| r.layout).collect();
    layouts.sort_unstable();
    layouts.dedup();
    let metrics: [(&str, fn(&SweepRow) -> f64); 4] = [
        ("eps_h", |r| r.eps_h),
        ("eps_k", |r| r.eps_k),
        ("eps_k_tilde", |r| r.eps_k_tilde),
        ("ssim", |r| r.ssim),
    ];
    let mut out = Vec::new();
    for &layout in &layouts {
        for (name, get) in metrics {
            let mut values: Vec<f64> = rows
                .iter()
                .filter(|r| r.layout == layout && r.error.is_none())
                .map(get)
                .collect();
            values.sort_by(f64::total_cmp);
            if values.is_empty() {
                continue;
            }
            out.push(SummaryRow {
                layout,
                metric: name.to_string(),
                median: percentile(&values, 0.5),
                q1: percentile(&values, 0.25),
                q3: percentile(&values, 0.75),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                count: values.len(),
            });
        }
    }
    out
}
