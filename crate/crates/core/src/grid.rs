//! Time grids and the mapping from continuous observations to interval labels.

use serde::{Deserialize, Serialize};

use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};
use crate::km::KaplanMeierCurve;

/// Cut points `0 = τ₀ < τ₁ < … < τ_m` defining `m` intervals `(τ_{j-1}, τ_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    cuts: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(cuts: Vec<f64>) -> Result<Self> {
        TimeGrid::new(cuts)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.cuts
    }
}

/// Position of a time on a grid: `t ∈ (τ_{idx-1}, τ_idx]` and
/// `frac = (t − τ_{idx-1}) / Δτ_idx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub idx: usize,
    pub frac: f64,
    /// `t` exceeded `τ_m` and was moved onto it.
    pub clamped: bool,
}

/// Training label for one individual.
///
/// For the discrete methods `idx` is the rounded index `κ(t) ∈ {0, …, m}`;
/// for the piecewise-constant hazard it is the interval containing `t`.
/// `frac` is always the interval fraction of the raw time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteLabel {
    pub idx: usize,
    pub event: bool,
    pub frac: f64,
}

/// Result of the Kaplan-Meier quantile scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileGrid {
    pub grid: TimeGrid,
    /// Duplicate cut points were removed, so `grid.m()` may be below the request.
    pub deduplicated: bool,
}

impl TimeGrid {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.len() < 2 {
            return Err(Error::Grid(format!("need at least two cut points, got {}", cuts.len())));
        }
        if cuts[0] != 0.0 {
            return Err(Error::Grid(format!("first cut point must be 0, got {}", cuts[0])));
        }
        if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("cut points must be finite and strictly increasing".into()));
        }
        Ok(TimeGrid { cuts })
    }

    /// `(0, t_max/m, 2·t_max/m, …, t_max)`.
    pub fn equidistant(t_max: f64, m: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Grid(format!("t_max must be positive, got {t_max}")));
        }
        if m == 0 {
            return Err(Error::Grid("grid needs at least one interval".into()));
        }
        let mut cuts: Vec<f64> = (0..=m).map(|j| t_max * j as f64 / m as f64).collect();
        cuts[m] = t_max;
        Self::new(cuts)
    }

    /// Grid with equal drops of the Kaplan-Meier curve between cut points.
    ///
    /// Level `ζ_j = 1 − j·(1 − Ŝ(τ))/m`; `τ_j` is the smallest event time with
    /// `Ŝ(τ_j) ≤ ζ_j`. The last cut is the largest observed duration whatever
    /// its event status.
    pub fn km_quantile(data: &SurvivalDataset, m: usize) -> Result<QuantileGrid> {
        Self::km_quantile_from(data.durations(), data.events(), m)
    }

    pub fn km_quantile_from(durations: &[f64], events: &[bool], m: usize) -> Result<QuantileGrid> {
        if m == 0 {
            return Err(Error::Grid("grid needs at least one interval".into()));
        }
        if !events.iter().any(|&e| e) {
            return Err(Error::Grid("Kaplan-Meier quantile grid needs at least one observed event".into()));
        }
        let km = KaplanMeierCurve::fit(durations, events)?;
        let t_max = durations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s_end = km.survival_at(t_max);
        let step = (1.0 - s_end) / m as f64;

        let mut cuts = vec![0.0];
        for j in 1..m {
            let tau = km.quantile_time(1.0 - j as f64 * step)?;
            if tau > *cuts.last().unwrap() {
                cuts.push(tau);
            }
        }
        if t_max > *cuts.last().unwrap() {
            cuts.push(t_max);
        }
        if cuts.len() < 2 {
            return Err(Error::Grid("all observed durations are zero".into()));
        }
        let deduplicated = cuts.len() != m + 1;
        Ok(QuantileGrid {
            grid: Self::new(cuts)?,
            deduplicated,
        })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Number of intervals.
    pub fn m(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.cuts[self.m()]
    }

    /// `Δτ_j` for `j` in `1..=m`.
    pub fn width(&self, j: usize) -> f64 {
        self.cuts[j] - self.cuts[j - 1]
    }

    /// Interval containing `t`. `t = 0` maps to `(1, 0)`; times past `τ_m`
    /// are clamped to `(m, 1)`. Negative input is treated as 0.
    pub fn locate(&self, t: f64) -> Location {
        let m = self.m();
        if t > self.cuts[m] {
            return Location {
                idx: m,
                frac: 1.0,
                clamped: true,
            };
        }
        if t <= 0.0 {
            return Location {
                idx: 1,
                frac: 0.0,
                clamped: false,
            };
        }
        // first j ≥ 1 with t ≤ τ_j
        let idx = 1 + self.cuts[1..].partition_point(|&c| c < t);
        let frac = if t == self.cuts[idx] {
            1.0
        } else {
            (t - self.cuts[idx - 1]) / self.width(idx)
        };
        Location {
            idx,
            frac,
            clamped: false,
        }
    }

    /// Labels for the discrete-time methods: events move to the end of their
    /// interval, censorings to the end of the previous one. A censoring that
    /// falls exactly on a cut point (or past `τ_m`) stays at that cut, since
    /// the individual was last seen alive there.
    pub fn discretize(&self, data: &SurvivalDataset) -> Result<Vec<DiscreteLabel>> {
        self.discretize_raw(data.durations(), data.events())
    }

    pub fn discretize_raw(&self, durations: &[f64], events: &[bool]) -> Result<Vec<DiscreteLabel>> {
        self.label_with(durations, events, |loc, event| {
            if event || loc.frac >= 1.0 {
                loc.idx
            } else {
                loc.idx - 1
            }
        })
    }

    /// Labels for the piecewise-constant hazard: interval containing the raw
    /// time plus its fraction, for events and censorings alike.
    pub fn interval_labels(&self, data: &SurvivalDataset) -> Result<Vec<DiscreteLabel>> {
        self.interval_labels_raw(data.durations(), data.events())
    }

    pub fn interval_labels_raw(&self, durations: &[f64], events: &[bool]) -> Result<Vec<DiscreteLabel>> {
        self.label_with(durations, events, |loc, _| loc.idx)
    }

    fn label_with(
        &self,
        durations: &[f64],
        events: &[bool],
        index: impl Fn(Location, bool) -> usize,
    ) -> Result<Vec<DiscreteLabel>> {
        if durations.len() != events.len() {
            return Err(Error::shape(format!("{} event flags", durations.len()), events.len()));
        }
        durations
            .iter()
            .zip(events)
            .enumerate()
            .map(|(i, (&t, &event))| {
                if !(t >= 0.0) {
                    return Err(Error::Validation {
                        row: i + 1,
                        msg: format!("negative duration {t}"),
                    });
                }
                let loc = self.locate(t);
                Ok(DiscreteLabel {
                    idx: index(loc, event),
                    event,
                    frac: loc.frac,
                })
            })
            .collect()
    }
}
