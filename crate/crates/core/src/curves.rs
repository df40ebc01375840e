//! Survival curves from model outputs, evaluable at any `t ≥ 0`.
//!
//! Discrete methods give step curves on the grid; those can be interpolated
//! with constant density (CDI, piecewise linear `S`) or constant hazard (CHI,
//! piecewise exponential `S`). The piecewise-constant hazard model has its own
//! continuous curve. Past `τ_m` every curve stays at `S(τ_m)`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Location, TimeGrid};
use crate::losses::{sigmoid, softplus};

/// Survival values are floored at this before taking logs for CHI.
pub const CHI_SURVIVAL_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    None,
    Cdi,
    Chi,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveKind {
    Step,
    Cdi,
    Chi,
    /// Integrated hazard `η̃_j` per interval.
    PcHazard { eta_tilde: Vec<f64> },
}

/// `S(τ_j)` for `j = 1..=m` plus the rule for times between cut points.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalCurve {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
    kind: CurveKind,
}

/// Numerically stable softmax of `(φ_1, …, φ_m, 0)`.
pub fn pmf_probabilities(phi: &[f64]) -> Vec<f64> {
    let gamma = phi.iter().copied().fold(0.0, f64::max);
    let mut p: Vec<f64> = phi.iter().map(|&x| (x - gamma).exp()).collect();
    p.push((-gamma).exp());
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

impl SurvivalCurve {
    fn check_len(grid: &TimeGrid, len: usize) -> Result<()> {
        if grid.m() != len {
            return Err(Error::shape(format!("{} intervals", grid.m()), len));
        }
        Ok(())
    }

    /// Step curve `S(τ_j) = Π_{k≤j} (1 − h_k)`.
    pub fn from_hazards(grid: Arc<TimeGrid>, hazards: &[f64]) -> Result<Self> {
        Self::check_len(&grid, hazards.len())?;
        if let Some(h) = hazards.iter().find(|h| !(0.0..=1.0).contains(*h)) {
            return Err(Error::InvalidArgument(format!("hazard {h} outside [0, 1]")));
        }
        Ok(Self::survival_products(grid, hazards.iter().map(|h| 1.0 - h)))
    }

    /// Step curve from Logistic-Hazard logits, using `1 − sigmoid(φ) = sigmoid(−φ)`.
    pub fn from_logits(grid: Arc<TimeGrid>, phi: &[f64]) -> Result<Self> {
        Self::check_len(&grid, phi.len())?;
        Ok(Self::survival_products(grid, phi.iter().map(|&x| sigmoid(-x))))
    }

    fn survival_products(grid: Arc<TimeGrid>, keep: impl Iterator<Item = f64>) -> Self {
        let mut s = 1.0;
        let values = keep
            .map(|q| {
                s *= q;
                s
            })
            .collect();
        SurvivalCurve {
            grid,
            values,
            kind: CurveKind::Step,
        }
    }

    /// Step curve of the PMF parametrization: `S(τ_j) = Σ_{k>j} σ_k` over the
    /// `m + 1` softmax classes.
    pub fn from_pmf(grid: Arc<TimeGrid>, phi: &[f64]) -> Result<Self> {
        Self::check_len(&grid, phi.len())?;
        let p = pmf_probabilities(phi);
        let m = phi.len();
        let mut values = vec![0.0; m];
        let mut tail = p[m];
        for j in (0..m).rev() {
            values[j] = tail.min(1.0);
            tail += p[j];
        }
        Ok(SurvivalCurve {
            grid,
            values,
            kind: CurveKind::Step,
        })
    }

    /// Continuous curve with `S(t) = exp(−η̃_κ·ρ(t)) · Π_{j<κ} exp(−η̃_j)`.
    pub fn pc_hazard(grid: Arc<TimeGrid>, eta_tilde: Vec<f64>) -> Result<Self> {
        Self::check_len(&grid, eta_tilde.len())?;
        if let Some(e) = eta_tilde.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::InvalidArgument(format!("integrated hazard {e} is negative")));
        }
        let mut cum = 0.0;
        let values = eta_tilde
            .iter()
            .map(|e| {
                cum += e;
                (-cum).exp()
            })
            .collect();
        Ok(SurvivalCurve {
            grid,
            values,
            kind: CurveKind::PcHazard { eta_tilde },
        })
    }

    /// Piecewise-constant hazard curve from raw network outputs (`η̃ = softplus(φ)`).
    pub fn from_pc_logits(grid: Arc<TimeGrid>, phi: &[f64]) -> Result<Self> {
        Self::pc_hazard(grid, phi.iter().map(|&x| softplus(x)).collect())
    }

    /// Reinterprets a step curve with the given interpolation scheme.
    /// Piecewise-constant hazard curves are already continuous and are returned unchanged.
    pub fn interpolated(self, scheme: Interpolation) -> Self {
        let kind = match (&self.kind, scheme) {
            (CurveKind::PcHazard { .. }, _) => return self,
            (_, Interpolation::None) => CurveKind::Step,
            (_, Interpolation::Cdi) => CurveKind::Cdi,
            (_, Interpolation::Chi) => CurveKind::Chi,
        };
        SurvivalCurve { kind, ..self }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Cheap check that both curves point at the same grid allocation.
    pub fn same_grid(&self, other: &SurvivalCurve) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    /// `S(τ_1), …, S(τ_m)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// `S(τ_j)` with `S(τ_0) = 1`.
    fn at_cut(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.values[j - 1]
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self.kind {
            CurveKind::Step => {
                let j = self.grid.cuts()[1..].partition_point(|&c| c <= t);
                self.at_cut(j)
            }
            _ => self.at_located(self.grid.locate(t)),
        }
    }

    /// Evaluation at a precomputed location on this curve's grid. Step
    /// curves treat the location as the right end of its interval only when
    /// `frac == 1`.
    pub fn at_located(&self, loc: Location) -> f64 {
        let k = loc.idx;
        if loc.frac >= 1.0 {
            return self.at_cut(k);
        }
        if loc.frac <= 0.0 {
            return self.at_cut(k - 1);
        }
        let prev = self.at_cut(k - 1);
        match &self.kind {
            CurveKind::Step => prev,
            CurveKind::Cdi => prev + (self.at_cut(k) - prev) * loc.frac,
            CurveKind::Chi => {
                let h_prev = -prev.max(CHI_SURVIVAL_FLOOR).ln();
                let h_next = -self.at_cut(k).max(CHI_SURVIVAL_FLOOR).ln();
                prev * (-(h_next - h_prev) * loc.frac).exp()
            }
            CurveKind::PcHazard { eta_tilde } => prev * (-eta_tilde[k - 1] * loc.frac).exp(),
        }
    }

    /// Hazard rate of the constant-density interpolant, `β_j / (α_j − β_j·t)`,
    /// on the interval containing `t`. Infinite once the survival reaches 0.
    pub fn cdi_hazard(&self, t: f64) -> f64 {
        let loc = self.grid.locate(t);
        let k = loc.idx;
        let beta = (self.at_cut(k - 1) - self.at_cut(k)) / self.grid.width(k);
        let s = self.at_cut(k - 1) + (self.at_cut(k) - self.at_cut(k - 1)) * loc.frac;
        if s > 0.0 {
            beta / s
        } else {
            f64::INFINITY
        }
    }

    /// Writes `t,surv` rows.
    pub fn write_csv<W: Write>(&self, times: &[f64], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "surv"])?;
        for &t in times {
            w.write_record([t.to_string(), self.at(t).to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Writes `id,t,surv` rows for a batch of curves.
pub fn write_curves_csv<W: Write>(curves: &[SurvivalCurve], times: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "t", "surv"])?;
    for (i, c) in curves.iter().enumerate() {
        for &t in times {
            w.write_record([i.to_string(), t.to_string(), c.at(t).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
