//! Product-limit (Kaplan-Meier) survival estimates.

use crate::error::{Error, Result};

/// Absolute slack used when comparing a survival value against a quantile
/// level, so that e.g. `(9/10)·(8/9)·…·(5/6)` counts as reaching `0.5`.
pub const LEVEL_TOLERANCE: f64 = 1e-12;

/// Step function `Ŝ(t)` with drops only at times with at least one event.
#[derive(Clone, Debug, PartialEq)]
pub struct KaplanMeierCurve {
    times: Vec<f64>,
    surv: Vec<f64>,
}

impl KaplanMeierCurve {
    /// Fits the product-limit estimate. At tied times events are counted
    /// before censorings, so individuals censored at `t` are still at risk at `t`.
    ///
    /// The censoring distribution is obtained by passing flipped indicators.
    pub fn fit(durations: &[f64], events: &[bool]) -> Result<Self> {
        if durations.is_empty() {
            return Err(Error::InvalidArgument("Kaplan-Meier fit needs at least one observation".into()));
        }
        if durations.len() != events.len() {
            return Err(Error::shape(
                format!("{} event flags", durations.len()),
                events.len(),
            ));
        }
        if let Some(t) = durations.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid duration {t}")));
        }

        let mut order: Vec<usize> = (0..durations.len()).collect();
        order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));

        let mut times = Vec::new();
        let mut surv = Vec::new();
        let mut at_risk = durations.len();
        let mut s = 1.0;
        let mut i = 0;
        while i < order.len() {
            let t = durations[order[i]];
            let mut deaths = 0usize;
            let mut j = i;
            while j < order.len() && durations[order[j]] == t {
                deaths += usize::from(events[order[j]]);
                j += 1;
            }
            if deaths > 0 {
                s *= 1.0 - deaths as f64 / at_risk as f64;
                times.push(t);
                surv.push(s);
            }
            at_risk -= j - i;
            i = j;
        }
        Ok(KaplanMeierCurve { times, surv })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn surv(&self) -> &[f64] {
        &self.surv
    }

    pub fn has_drops(&self) -> bool {
        !self.times.is_empty()
    }

    /// Right-continuous `Ŝ(t)`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u <= t);
        if k == 0 {
            1.0
        } else {
            self.surv[k - 1]
        }
    }

    /// Left limit `Ŝ(t⁻)`.
    pub fn survival_before(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u < t);
        if k == 0 {
            1.0
        } else {
            self.surv[k - 1]
        }
    }

    /// Smallest drop time with `Ŝ(t) ≤ level`; the last drop time when the
    /// curve never gets that low.
    pub fn quantile_time(&self, level: f64) -> Result<f64> {
        let last = *self
            .times
            .last()
            .ok_or_else(|| Error::InvalidArgument("Kaplan-Meier curve has no drops".into()))?;
        let k = self.surv.partition_point(|&s| s > level + LEVEL_TOLERANCE);
        Ok(self.times.get(k).copied().unwrap_or(last))
    }
}
