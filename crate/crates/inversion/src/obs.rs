//! Sparse pointwise observations of the head field (and optionally the
//! conductivity field) at cell centers.

use lddim_fvm::ScalarField2D;

use crate::error::{InversionError, Result};

/// One head observation at cell (i, j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadObservation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// One conductivity observation at cell (i, j), in linear K units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KObservation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Observation locations and values on an `nx` x `ny` cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub nx: usize,
    pub ny: usize,
    pub heads: Vec<HeadObservation>,
    pub conductivities: Vec<KObservation>,
}

impl ObservationSet {
    pub fn new(nx: usize, ny: usize, heads: Vec<HeadObservation>) -> Result<Self> {
        let set = ObservationSet {
            nx,
            ny,
            heads,
            conductivities: Vec::new(),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn with_conductivities(mut self, conductivities: Vec<KObservation>) -> Result<Self> {
        self.conductivities = conductivities;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for o in &self.heads {
            if o.i >= self.nx || o.j >= self.ny {
                return Err(InversionError::InvalidObservations(format!(
                    "head observation at ({}, {}) outside {}x{}",
                    o.i, o.j, self.nx, self.ny
                )));
            }
            if !o.value.is_finite() {
                return Err(InversionError::InvalidObservations(format!(
                    "non-finite head at ({}, {})",
                    o.i, o.j
                )));
            }
            if !seen.insert((o.i, o.j)) {
                return Err(InversionError::InvalidObservations(format!(
                    "duplicate head location ({}, {})",
                    o.i, o.j
                )));
            }
        }
        let mut seen_k = std::collections::HashSet::new();
        for o in &self.conductivities {
            if o.i >= self.nx || o.j >= self.ny {
                return Err(InversionError::InvalidObservations(format!(
                    "conductivity observation at ({}, {}) outside {}x{}",
                    o.i, o.j, self.nx, self.ny
                )));
            }
            if !(o.value.is_finite() && o.value > 0.0) {
                return Err(InversionError::InvalidObservations(format!(
                    "conductivity at ({}, {}) must be finite and positive",
                    o.i, o.j
                )));
            }
            if !seen_k.insert((o.i, o.j)) {
                return Err(InversionError::InvalidObservations(format!(
                    "duplicate conductivity location ({}, {})",
                    o.i, o.j
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty() && self.conductivities.is_empty()
    }

    fn check_grid(&self, field: &ScalarField2D) -> Result<()> {
        if field.nx != self.nx || field.ny != self.ny {
            return Err(InversionError::InvalidObservations(format!(
                "field {}x{} vs observation grid {}x{}",
                field.nx, field.ny, self.nx, self.ny
            )));
        }
        Ok(())
    }
}

/// Evenly spaced interior cell indices for an `m` x `m` observation
/// layout on an `nx` x `ny` grid.
pub fn uniform_layout(m: usize, nx: usize, ny: usize) -> Result<Vec<(usize, usize)>> {
    if m == 0 || m > nx || m > ny {
        return Err(InversionError::InvalidObservations(format!(
            "{m}x{m} layout does not fit a {nx}x{ny} grid"
        )));
    }
    let coord = |t: usize, n: usize| ((2 * t + 1) * n) / (2 * m);
    let mut out = Vec::with_capacity(m * m);
    for tj in 0..m {
        for ti in 0..m {
            out.push((coord(ti, nx), coord(tj, ny)));
        }
    }
    Ok(out)
}

/// Sample a solved head field at the given layout to build observations.
pub fn observe_head(field: &ScalarField2D, layout: &[(usize, usize)]) -> Result<ObservationSet> {
    let heads = layout
        .iter()
        .map(|&(i, j)| HeadObservation {
            i,
            j,
            value: field.at(i, j),
        })
        .collect();
    ObservationSet::new(field.nx, field.ny, heads)
}

/// Sum of squared head residuals over the observation points.
pub fn data_misfit(h_hat: &ScalarField2D, obs: &ObservationSet) -> Result<f64> {
    obs.check_grid(h_hat)?;
    Ok(obs
        .heads
        .iter()
        .map(|o| {
            let d = o.value - h_hat.at(o.i, o.j);
            d * d
        })
        .sum())
}

/// Sum of squared ln-K residuals over the conductivity points.
pub fn conductivity_misfit(k_hat: &ScalarField2D, obs: &ObservationSet) -> Result<f64> {
    obs.check_grid(k_hat)?;
    Ok(obs
        .conductivities
        .iter()
        .map(|o| {
            let d = o.value.ln() - k_hat.at(o.i, o.j).ln();
            d * d
        })
        .sum())
}
