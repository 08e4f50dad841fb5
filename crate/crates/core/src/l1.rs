//! L1 approximation of the Caputo derivative on a uniform time grid:
//!
//! ```text
//!   D^α u(η_{k+1}) ≈ (1/d) Σ_{p=0}^{k} δ_p (u^{k+1−p} − u^{k−p}),
//!   δ_p = (p+1)^{1−α} − p^{1−α},   d = Δη^α Γ(2−α)
//! ```
//!
//! Moving the known levels to the right-hand side leaves the memory term
//! `Σ_{p=0}^{k−1} (δ_p − δ_{p+1}) U^{k−p} + δ_k U⁰`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::validate_alpha;
use crate::numerics::gamma_fn;
use crate::solver::SolutionHistory;

#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    pub alpha: f64,
    pub dt: f64,
    /// `δ_0..=δ_N`.
    pub delta: Vec<f64>,
    /// `Δη^α Γ(2−α)`.
    pub d: f64,
}

pub fn l1_weights(alpha: f64, steps: usize, dt: f64) -> Result<L1Weights> {
    validate_alpha(alpha)?;
    if steps == 0 {
        return Err(Error::param("N", 0.0, "need at least one time step"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", dt, "time step must be > 0"));
    }
    let e = 1.0 - alpha;
    let delta = (0..=steps)
        .map(|p| match p {
            // 0^0 would give δ_0 = 0 when α = 1
            0 => 1.0,
            p => {
                let p = p as f64;
                (p + 1.0).powf(e) - p.powf(e)
            }
        })
        .collect();
    Ok(L1Weights {
        alpha,
        dt,
        delta,
        d: dt.powf(alpha) * gamma_fn(2.0 - alpha)?,
    })
}

impl L1Weights {
    pub fn steps(&self) -> usize {
        self.delta.len() - 1
    }

    /// Weight on `U^{k−p}` in the memory term at step `k`.
    pub fn memory_weight(&self, p: usize) -> f64 {
        self.delta[p] - self.delta[p + 1]
    }
}

/// How `U⁰` enters the memory term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryForm {
    /// `δ_k·U⁰`, the exact rearrangement of the L1 sum.
    #[default]
    Corrected,
    /// `U⁰` with unit weight for every `k`. Kept for comparison only; it
    /// does not preserve constant solutions.
    Verbatim,
}

/// Memory term for the solve producing `U^{k+1}`; needs `U⁰..U^k`.
pub fn history_rhs(
    history: &SolutionHistory,
    w: &L1Weights,
    k: usize,
    form: HistoryForm,
) -> Result<Vec<f64>> {
    if history.levels() <= k {
        return Err(Error::HistoryTooShort {
            available: history.levels(),
            requested: k,
        });
    }
    if k >= w.steps() {
        return Err(Error::HistoryTooShort {
            available: w.steps(),
            requested: k,
        });
    }
    let u0_weight = match form {
        HistoryForm::Corrected => w.delta[k],
        HistoryForm::Verbatim => 1.0,
    };
    let mut out: Vec<f64> = history.level(0).iter().map(|v| u0_weight * v).collect();
    for p in 0..k {
        let c = w.memory_weight(p);
        for (o, u) in out.iter_mut().zip(history.level(k - p)) {
            *o += c * u;
        }
    }
    Ok(out)
}

/// L1 value of `D^α u` at the last sample, from scalar samples `u⁰..u^{k+1}`.
pub fn l1_derivative(samples: &[f64], w: &L1Weights) -> Result<f64> {
    let n = samples.len();
    if n < 2 || n - 1 > w.steps() {
        return Err(Error::HistoryTooShort {
            available: n,
            requested: w.steps(),
        });
    }
    let k = n - 2;
    let sum: f64 = (0..=k)
        .map(|p| w.delta[p] * (samples[k + 1 - p] - samples[k - p]))
        .sum();
    Ok(sum / w.d)
}
