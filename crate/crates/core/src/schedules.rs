//! Exploration schedules, analysis constants and closed-form bounds.
//!
//! * [`ScheduleConfig::f`], [`ScheduleConfig::g`] and [`ScheduleConfig::f_tilde`]
//!   are the exploration schedules. They are evaluated at `max(t, t_min)` so
//!   that `ln ln t` stays defined and positive (`t_min >= 3`).
//! * [`Constants`] holds `C₁ … C₆` and the exponent `α`.
//! * [`theorem_bound`] assembles the BG-CTS regret upper bound and
//!   [`bcts_lower_bound`] the exponential lower bound for B-CTS on the
//!   two-block instance.
//! * The remaining helpers (`q_*`, `power_log_threshold*`,
//!   `integral_series_bound`) are the analytic facts the bounds rely on.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("minimal gap must be positive, got {0}")]
    DegenerateGap(f64),
    #[error("invalid schedule configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

/// `C₃²`.
pub const C3_SQ: f64 = 1.238;
/// Horizon from which the clean-run probability bound holds.
pub const C5: f64 = 23.0;
/// Leading constant of the `ln T` term.
pub const LOG_TERM_CONSTANT: f64 = 768.0;
/// Leading constant of the `ln ln T` term, `2304 ln 2`.
pub const LOGLOG_TERM_CONSTANT: f64 = 2304.0 * LN_2;

/// Which value of `C₆` to use: `C₄/2` by default, `C₂/2` as the alternative.
/// Only the optimistic-count diagnostic reads it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum C6Choice {
    #[default]
    HalfC4,
    HalfC2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3_sq: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub alpha: f64,
    pub c6_choice: C6Choice,
}

impl Constants {
    pub fn new(c6_choice: C6Choice) -> Self {
        let c1 = 8f64.sqrt() + 72f64.sqrt();
        let c2 = 1.0 / (2f64.powf(13.0 / 4.0 + C3_SQ / 2.0) * C3_SQ.sqrt() * (2.0 * PI).sqrt());
        let c4 = c2 / 8.0;
        let c6 = match c6_choice {
            C6Choice::HalfC4 => c4 / 2.0,
            C6Choice::HalfC2 => c2 / 2.0,
        };
        Self {
            c1,
            c2,
            c3_sq: C3_SQ,
            c4,
            c5: C5,
            c6,
            alpha: 0.75 - C3_SQ / 2.0,
            c6_choice,
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::new(C6Choice::default())
    }
}

/// Parameters of the exploration schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub lambda: f64,
    /// Maximal action size `m`.
    pub m: usize,
    /// Number of items `d`.
    pub d: usize,
    /// `|𝒜|`.
    pub action_count: u128,
    pub sigma: f64,
    pub t_min: u64,
}

impl ScheduleConfig {
    pub fn new(lambda: f64, m: usize, d: usize, action_count: u128, sigma: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            m,
            d,
            action_count,
            sigma,
            t_min: 3,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(ScheduleError::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.m == 0 || self.d == 0 || self.action_count == 0 {
            return Err(ScheduleError::InvalidConfig(
                "m, d and |A| must be positive".into(),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(ScheduleError::InvalidConfig(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.t_min < 3 {
            return Err(ScheduleError::InvalidConfig(format!(
                "t_min must be >= 3, got {}",
                self.t_min
            )));
        }
        Ok(())
    }

    fn clamp(&self, t: u64) -> f64 {
        t.max(self.t_min) as f64
    }

    /// `(1+λ)(ln t + (m+2) ln ln t + (m/2) ln(1 + e/λ))`.
    pub fn f(&self, t: u64) -> f64 {
        f_real(self.clamp(t), self.m as f64, self.lambda)
    }

    /// Exploration boost `f(t) / ln t`.
    pub fn g(&self, t: u64) -> f64 {
        let t = self.clamp(t);
        f_real(t, self.m as f64, self.lambda) / t.ln()
    }

    /// `(1+λ)(ln(|𝒜| t) + (m+2)(1 + d ln 2) ln ln t + m(1 + d ln 2)/2 · ln(1 + e/λ))`.
    pub fn f_tilde(&self, t: u64) -> f64 {
        let t = self.clamp(t);
        let m = self.m as f64;
        let k = 1.0 + self.d as f64 * LN_2;
        (1.0 + self.lambda)
            * ((self.action_count as f64).ln()
                + t.ln()
                + (m + 2.0) * k * t.ln().ln()
                + m * k / 2.0 * (1.0 + E / self.lambda).ln())
    }
}

fn f_real(t: f64, m: f64, lambda: f64) -> f64 {
    (1.0 + lambda) * (t.ln() + (m + 2.0) * t.ln().ln() + m / 2.0 * (1.0 + E / lambda).ln())
}

/// `h(t) = C₁ σ m √(m ln t / (C₆ t^α))`, the Thompson-sample accuracy of `A⋆`
/// on a clean run.
pub fn h_bound(t: u64, m: usize, sigma: f64, constants: &Constants) -> f64 {
    let t = t as f64;
    let m = m as f64;
    constants.c1 * sigma * m * (m * t.ln() / (constants.c6 * t.powf(constants.alpha))).sqrt()
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

/// Standard normal upper tail `Q(x) = P(Z >= x)`.
pub fn q_tail(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Bounds on `Q(x)` for `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBounds {
    /// `x/(1+x²) φ(x)`.
    pub lower: f64,
    /// `φ(x)/x`; infinite at 0.
    pub upper: f64,
    /// `e^{-x²/2}`.
    pub chernoff: f64,
}

pub fn q_bounds(x: f64) -> Result<QBounds> {
    if x.is_nan() || x < 0.0 {
        return Err(ScheduleError::DomainError(format!(
            "Q bounds need x >= 0, got {x}"
        )));
    }
    let phi = normal_pdf(x);
    Ok(QBounds {
        lower: x / (1.0 + x * x) * phi,
        upper: if x == 0.0 { f64::INFINITY } else { phi / x },
        chernoff: (-x * x / 2.0).exp(),
    })
}

/// Lower bound `(1/√(2π)) (1/(2c)) (t/2)^{-(c²+1/2)/2}` on `Q(c √ln(t/2))`,
/// valid for `c > 1` and `t > 2e`.
pub fn q_power_lower_bound(c: f64, t: f64) -> f64 {
    1.0 / (2.0 * PI).sqrt() / (2.0 * c) * (t / 2.0).powf(-(c * c + 0.5) / 2.0)
}

/// Threshold `((c/α) ln(c/α) / (1 − 1/e))^{1/α}` beyond which `t^α > c ln t`.
pub fn power_log_threshold(alpha: f64, c: f64) -> f64 {
    let r = c / alpha;
    (r * r.ln() / (1.0 - 1.0 / E)).powf(1.0 / alpha)
}

/// Polynomial majorant `(1/α)^{1+2/α} (1 − 1/e)^{-1/α} c^{1+1/α}` of
/// [`power_log_threshold`].
pub fn power_log_threshold_bound(alpha: f64, c: f64) -> f64 {
    (1.0 / alpha).powf(1.0 + 2.0 / alpha)
        * (1.0 - 1.0 / E).powf(-1.0 / alpha)
        * c.powf(1.0 + 1.0 / alpha)
}

/// `c^{-1/α} Γ(1/α) / α`, which bounds `Σ_{t>=1} exp(−c t^α)`.
pub fn integral_series_bound(c: f64, alpha: f64) -> f64 {
    c.powf(-1.0 / alpha) / alpha * statrs::function::gamma::gamma(1.0 / alpha)
}

/// Instance parameters entering the regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub horizon: u64,
    pub m: usize,
    pub d: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub sigma: f64,
}

/// The regret upper bound split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremBound {
    /// `C σ² d ln m / Δ_min · ln T`.
    pub log_term: f64,
    /// `C' σ² d² m ln m / Δ_min · ln ln T`.
    pub loglog_term: f64,
    /// Horizon-free polynomial `P(m, d, 1/Δ_min, Δ_max, σ)`.
    pub polynomial: f64,
    pub p1: f64,
    pub p2: f64,
    pub total: f64,
}

/// `P₁(m, d, 1/Δ_min, σ)`: horizon after which `A⋆` has been played
/// `C₆ t^α` times on a clean run.
pub fn p1(m: usize, d: usize, delta_min: f64, sigma: f64, constants: &Constants) -> f64 {
    let m = m as f64;
    let c = constants.c1.powi(2) / constants.c2
        * (d as f64 * sigma * sigma * m.powi(3) / delta_min.powi(2));
    power_log_threshold_bound(constants.alpha, c)
}

/// `P₂(m, 1/Δ_min, σ)`: horizon after which `h(t) < Δ_min / 4`.
pub fn p2(m: usize, delta_min: f64, sigma: f64, constants: &Constants) -> f64 {
    let m = m as f64;
    let c = 16.0 * constants.c1.powi(2) / constants.c6
        * (sigma * sigma * m.powi(3) / delta_min.powi(2));
    power_log_threshold_bound(constants.alpha, c)
}

/// Regret upper bound of BG-CTS with `λ = 1`.
pub fn theorem_bound(inputs: &BoundInputs, constants: &Constants) -> Result<TheoremBound> {
    let BoundInputs {
        horizon,
        m,
        d,
        delta_min,
        delta_max,
        sigma,
    } = *inputs;
    if delta_min.is_nan() || delta_min <= 0.0 {
        return Err(ScheduleError::DegenerateGap(delta_min));
    }
    if horizon < 3 {
        return Err(ScheduleError::DomainError(format!(
            "horizon must be >= 3, got {horizon}"
        )));
    }
    if m == 0 || d == 0 {
        return Err(ScheduleError::DomainError(
            "m and d must be positive".into(),
        ));
    }
    let (mf, df, s2) = (m as f64, d as f64, sigma * sigma);
    let t = horizon as f64;
    let log_term = LOG_TERM_CONSTANT * s2 * df * mf.ln() / delta_min * t.ln();
    let loglog_term = LOGLOG_TERM_CONSTANT * s2 * df * df * mf * mf.ln() / delta_min * t.ln().ln();
    let p1 = p1(m, d, delta_min, sigma, constants);
    let p2 = p2(m, delta_min, sigma, constants);
    let polynomial = delta_max * (integral_series_bound(constants.c4, constants.alpha) + 4.0)
        + df * delta_max * (32.0 * mf * mf * s2 / delta_min.powi(2) + 5.0 * PI * PI / 3.0)
        + delta_max * (p1 + p2)
        + 1152.0 * s2 * mf * df * df * LN_2 * (1.0 + E).ln() / delta_min;
    Ok(TheoremBound {
        log_term,
        loglog_term,
        polynomial,
        p1,
        p2,
        total: log_term + loglog_term + polynomial,
    })
}

/// Exponential lower bound on the regret of B-CTS:
/// `Δ_min / (4p) · (1 − (1 − p)^{T−1})` with
/// `p = exp(−(2m/9)(1/2 − (Δ_min/m + 1/√m))²)`.
pub fn bcts_lower_bound(m: usize, delta_min: f64, horizon: u64) -> f64 {
    if horizon <= 1 {
        return 0.0;
    }
    let p = bcts_escape_probability(m, delta_min);
    let steps = (horizon - 1) as f64;
    let survival = if p >= 1.0 {
        0.0
    } else {
        (steps * (-p).ln_1p()).exp()
    };
    delta_min / (4.0 * p) * (1.0 - survival)
}

/// The probability `p_{Δ_min}` in [`bcts_lower_bound`].
pub fn bcts_escape_probability(m: usize, delta_min: f64) -> f64 {
    let mf = m as f64;
    let inner = 0.5 - (delta_min / mf + 1.0 / mf.sqrt());
    (-(2.0 * mf / 9.0) * inner * inner).exp()
}
