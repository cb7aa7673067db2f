//! Result-bundle and sweep CSV writers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{InversionError, Result};
use crate::invert::InversionResult;
use crate::sweep::{SweepRow, SummaryRow};

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| InversionError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write `k_hat.ldf2`, `h_hat.ldf2`, `loss.csv` and `metrics.csv` into
/// `dir` (which must exist).
pub fn write_result_bundle(dir: &Path, result: &InversionResult) -> Result<()> {
    result
        .k_hat
        .write_ldf2(&dir.join("k_hat.ldf2"))
        .map_err(InversionError::Fvm)?;
    result
        .h_hat
        .write_ldf2(&dir.join("h_hat.ldf2"))
        .map_err(InversionError::Fvm)?;

    let mut loss = String::from("iter,misfit,regularizer,total,grad_norm\n");
    for r in &result.loss_history {
        writeln!(
            loss,
            "{},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.iter, r.misfit, r.regularizer, r.total, r.grad_norm
        )
        .unwrap();
    }
    write_text(&dir.join("loss.csv"), &loss)?;

    let mut metrics = String::from("metric,value\n");
    writeln!(metrics, "iterations,{}", result.iterations).unwrap();
    writeln!(metrics, "best_iter,{}", result.best_iter).unwrap();
    writeln!(metrics, "diverged,{}", result.diverged).unwrap();
    if let Some(m) = &result.metrics {
        writeln!(metrics, "eps_k,{:.17e}", m.eps_k).unwrap();
        writeln!(metrics, "eps_h,{:.17e}", m.eps_h).unwrap();
        writeln!(metrics, "eps_k_tilde,{:.17e}", m.eps_k_tilde).unwrap();
        writeln!(metrics, "ssim,{:.17e}", m.ssim).unwrap();
        writeln!(metrics, "evaluated_in_log,{}", m.evaluated_in_log).unwrap();
    }
    write_text(&dir.join("metrics.csv"), &metrics)
}

/// Write per-run rows to `runs.csv` and box-plot statistics to
/// `summary.csv` in `dir`.
pub fn write_sweep_csv(dir: &Path, rows: &[SweepRow], summary: &[SummaryRow]) -> Result<()> {
    let mut runs = String::from("seed,layout,eps_h,eps_k,eps_k_tilde,ssim,iterations,error\n");
    for r in rows {
        writeln!(
            runs,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
            r.seed,
            r.layout,
            r.eps_h,
            r.eps_k,
            r.eps_k_tilde,
            r.ssim,
            r.iterations,
            r.error.as_deref().unwrap_or("")
        )
        .unwrap();
    }
    write_text(&dir.join("runs.csv"), &runs)?;

    let mut sum = String::from("layout,metric,median,q1,q3,mean,count\n");
    for s in summary {
        writeln!(
            sum,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            s.layout, s.metric, s.median, s.q1, s.q3, s.mean, s.count
        )
        .unwrap();
    }
    write_text(&dir.join("summary.csv"), &sum)
}
