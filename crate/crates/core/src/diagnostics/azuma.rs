//! Monte-Carlo check of the multiplicative Azuma–Chernoff inequality for
//! `W = Σ_s X_s` with `P(X_s = 1 | past) = p_s` and `m_t = Σ_s p_s`:
//!
//! * `P(W ≥ (1+δ) m_t) ≤ exp(−δ² m_t / (2+δ))` for `δ > 0`,
//! * `P(W ≤ (1−δ) m_t) ≤ exp(−δ² m_t / 2)` for `0 ≤ δ < 1`.

use rand::Rng;
use rayon::prelude::*;

use super::{BoundReport, DiagnosticsError, Result};
use crate::rng::{self, Role};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AzumaMode {
    /// `X_s` independent with probability `p_s` in the given order.
    #[default]
    Independent,
    /// The sequence is treated as a multiset: at each step the largest
    /// remaining probability is used while `W` runs behind its conditional
    /// mean, the smallest otherwise. The success probabilities then depend on
    /// the past while `m_t` stays deterministic.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AzumaReport {
    pub m_t: f64,
    pub upper: Option<BoundReport>,
    pub lower: Option<BoundReport>,
}

impl AzumaReport {
    pub fn passed(&self) -> bool {
        [&self.upper, &self.lower]
            .into_iter()
            .flatten()
            .all(|r| r.pass == Some(true))
    }
}

fn draw_w<R: Rng + ?Sized>(sorted: &[f64], ordered: &[f64], mode: AzumaMode, rng: &mut R) -> u64 {
    let mut w = 0u64;
    match mode {
        AzumaMode::Independent => {
            for &p in ordered {
                w += u64::from(rng.random::<f64>() < p);
            }
        }
        AzumaMode::Adaptive => {
            let (mut lo, mut hi) = (0usize, sorted.len());
            let mut mean = 0.0;
            while lo < hi {
                let p = if (w as f64) < mean {
                    hi -= 1;
                    sorted[hi]
                } else {
                    lo += 1;
                    sorted[lo - 1]
                };
                mean += p;
                w += u64::from(rng.random::<f64>() < p);
            }
        }
    }
    w
}

/// Simulates `reps` copies of `W` on streams keyed by `seed` and reports
/// both tails that `delta` admits.
pub fn azuma_mc_verify(
    p: &[f64],
    delta: f64,
    reps: u64,
    seed: u64,
    mode: AzumaMode,
) -> Result<AzumaReport> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(DiagnosticsError::InvalidDelta(delta));
    }
    if p.is_empty() {
        return Err(DiagnosticsError::InvalidProbabilities(
            "empty sequence".into(),
        ));
    }
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(DiagnosticsError::InvalidProbabilities(format!(
            "{bad} is not in [0, 1]"
        )));
    }
    let upper_ok = delta > 0.0;
    let lower_ok = delta < 1.0;
    let m_t: f64 = p.iter().sum();
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let hi = (1.0 + delta) * m_t;
    let lo = (1.0 - delta) * m_t;
    let (up_hits, low_hits) = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, rep, Role::Env);
            let w = draw_w(&sorted, p, mode, &mut rng) as f64;
            (u64::from(w >= hi), u64::from(w <= lo))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = p.len() as u64;
    let upper = upper_ok.then(|| {
        let bound = (-delta * delta * m_t / (2.0 + delta)).exp();
        BoundReport::new("azuma-upper", t, up_hits, reps, Some(bound))
    });
    let lower = lower_ok.then(|| {
        let bound = (-delta * delta * m_t / 2.0).exp();
        BoundReport::new("azuma-lower", t, low_hits, reps, Some(bound))
    });
    Ok(AzumaReport { m_t, upper, lower })
}
