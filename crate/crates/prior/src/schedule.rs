//! The forward-process noise schedule: beta_t, alpha_t = 1 - beta_t and
//! the cumulative product alpha_bar_t, with alpha_bar at t = 0 defined
//! as exactly one.

use crate::error::{PriorError, Result};

pub const BETA_START: f64 = 1e-4;
pub const BETA_END: f64 = 2e-2;

#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    /// beta_t for t = 1..=t_max at index t - 1.
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn t_max(&self) -> usize {
        self.beta.len()
    }

    /// alpha_bar_t with the convention alpha_bar_0 = 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn beta_at(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.t_max() {
            return Err(PriorError::Schedule(format!(
                "timestep {t} outside 1..={}",
                self.t_max()
            )));
        }
        Ok(self.beta[t - 1])
    }
}

/// Linear beta ramp from 1e-4 to 2e-2 over `t_max` steps.
pub fn make_schedule(t_max: usize) -> Result<NoiseSchedule> {
    if t_max < 1 {
        return Err(PriorError::Schedule("schedule needs at least one step".into()));
    }
    let beta: Vec<f64> = (0..t_max)
        .map(|i| {
            if t_max == 1 {
                BETA_START
            } else {
                BETA_START + (BETA_END - BETA_START) * i as f64 / (t_max - 1) as f64
            }
        })
        .collect();
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(t_max);
    let mut prod = 1.0;
    for &a in &alpha {
        prod *= a;
        alpha_bar.push(prod);
    }
    Ok(NoiseSchedule {
        beta,
        alpha,
        alpha_bar,
    })
}
