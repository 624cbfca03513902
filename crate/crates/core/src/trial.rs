//! Design parameters and the deterministic trial arithmetic: sizing,
//! stage decomposition of an observed hazard ratio, and the covariance
//! matrices of the Stage 1 / Stage 2 test statistics.
//!
//! Notation used in the covariance builders, for one design with Stage 1
//! information fraction `t` and information `I = N / 4`:
//!
//! * `Y11`, `Y12`: Stage 1 log-rank statistics of the two doses against the
//!   shared control, standard normal with correlation 0.5;
//! * `Y2s`: Stage 2 statistic of the selected dose, independent of both;
//! * `D_j = Y1j / √(tI) − Y2s / √((1−t)I)`: Stage 1 minus Stage 2 observed
//!   effect (log hazard ratio scale) if dose `j` were selected;
//! * `S_j = √t·Y1j + √(1−t)·Y2s`: pooled statistic if dose `j` were selected.

use crate::error::{ensure, Result};
use crate::mvn::CovMatrix;
use crate::normal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// When Stage 1 data are pooled with Stage 2 data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    /// Pool when the Stage 1 effect exceeds the Stage 2 effect by less than `c`.
    Conservative,
    /// Pool when the Stage 1 effect is no more than `c` below the Stage 2 effect.
    Aggressive,
    /// Pool when the two effects differ by less than `c` in absolute value.
    Neutral,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [Self::Conservative, Self::Neutral, Self::Aggressive];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Conservative => "conservative",
            Self::Aggressive => "aggressive",
            Self::Neutral => "neutral",
        }
    }

    /// Whether a Stage 1 minus Stage 2 effect difference `diff` leads to pooling.
    pub fn combines(self, diff: f64, c: f64) -> bool {
        match self {
            Self::Conservative => diff < c,
            Self::Aggressive => diff > -c,
            Self::Neutral => diff.abs() < c,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "conservative" => Ok(Self::Conservative),
            "aggressive" => Ok(Self::Aggressive),
            "neutral" => Ok(Self::Neutral),
            other => Err(format!("unknown strategy '{other}'")),
        }
    }
}

/// A picking-the-winner probability after clamping into `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampedW {
    pub value: f64,
    /// True when the raw value was below 0.5 and got raised.
    pub clamped: bool,
}

/// Raises `w` below 0.5 to 0.5 so that Type I error is controlled whether a
/// winner or a loser was picked.
pub fn clamp_w(w_raw: f64) -> Result<ClampedW> {
    ensure((0.0..=1.0).contains(&w_raw), "w", w_raw, "[0, 1]")?;
    Ok(ClampedW {
        value: w_raw.max(0.5),
        clamped: w_raw < 0.5,
    })
}

/// One design problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    alpha: f64,
    strategy: StrategyKind,
    c: f64,
    t: f64,
    info: f64,
    w: f64,
    w_clamped: bool,
}

impl DesignParams {
    /// Validates every field; `w_raw` goes through [`clamp_w`].
    pub fn new(alpha: f64, strategy: StrategyKind, c: f64, t: f64, info: f64, w_raw: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha < 0.5, "alpha", alpha, "(0, 0.5)")?;
        ensure(c >= 0.0 && !c.is_nan(), "c", c, "[0, inf)")?;
        check_design(t, info)?;
        let w = clamp_w(w_raw)?;
        Ok(Self {
            alpha,
            strategy,
            c,
            t,
            info,
            w: w.value,
            w_clamped: w.clamped,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Information units `I = N / 4`.
    pub fn info(&self) -> f64 {
        self.info
    }

    /// Stored (clamped) picking-the-winner probability.
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn w_clamped(&self) -> bool {
        self.w_clamped
    }

    pub fn with_strategy(mut self, strategy: StrategyKind) -> Self {
        self.strategy = strategy;
        self
    }
}

/// `I = N / 4` for 1:1 randomization.
pub fn info_from_events(events: f64) -> Result<f64> {
    ensure(events > 0.0 && events.is_finite(), "events", events, "(0, inf)")?;
    Ok(events / 4.0)
}

/// Schoenfeld event count `4·((z_{1−α} + z_power) / log hr)²`, not rounded.
pub fn schoenfeld_events(alpha: f64, power: f64, hr: f64) -> Result<f64> {
    ensure(alpha > 0.0 && alpha <= 0.5, "alpha", alpha, "(0, 0.5]")?;
    ensure(power > 0.0 && power < 1.0, "power", power, "(0, 1)")?;
    ensure(hr > 0.0 && hr < 1.0, "hr", hr, "(0, 1)")?;
    let z = normal::upper_critical(alpha) + normal::quantile(power);
    Ok(4.0 * (z / hr.ln()).powi(2))
}

/// Hazard ratio sitting exactly on the significance boundary for a trial
/// with `events` events: `exp(−z_{1−α} / √(events / 4))`.
pub fn mdd_hr(alpha: f64, events: f64) -> Result<f64> {
    ensure(alpha > 0.0 && alpha <= 0.5, "alpha", alpha, "(0, 0.5]")?;
    ensure(events > 0.0 && events.is_finite(), "events", events, "(0, inf)")?;
    Ok((-normal::upper_critical(alpha) / (events / 4.0).sqrt()).exp())
}

/// Overall and per-stage hazard ratios for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageEffects {
    pub hr_overall: f64,
    pub hr_stage1: f64,
    pub hr_stage2: f64,
    /// `e1 − e2` with `e_i = −log(hr_stage_i)`.
    pub diff: f64,
}

impl StageEffects {
    /// Information-weighted log hazard ratio `t·e1 + (1−t)·e2`.
    pub fn recombine(&self, t: f64) -> f64 {
        -t * self.hr_stage1.ln() - (1.0 - t) * self.hr_stage2.ln()
    }
}

/// Splits an overall effect into Stage 1 and Stage 2 effects whose
/// information-weighted average is the overall effect and whose difference
/// is `diff`.
pub fn stage_decompose(hr_overall: f64, t: f64, diff: f64) -> Result<StageEffects> {
    ensure(
        hr_overall > 0.0 && hr_overall.is_finite(),
        "hr_overall",
        hr_overall,
        "(0, inf)",
    )?;
    ensure(t > 0.0 && t < 1.0, "t", t, "(0, 1)")?;
    ensure(diff.is_finite(), "diff", diff, "finite")?;
    let e = -hr_overall.ln();
    let e1 = e + (1.0 - t) * diff;
    let e2 = e - t * diff;
    Ok(StageEffects {
        hr_overall,
        hr_stage1: (-e1).exp(),
        hr_stage2: (-e2).exp(),
        diff,
    })
}

/// One-sided p-value of the Stage 2 data alone.
pub fn stage2_nominal_p(hr_stage2: f64, events_stage2: f64) -> Result<f64> {
    ensure(
        hr_stage2 > 0.0 && hr_stage2.is_finite(),
        "hr_stage2",
        hr_stage2,
        "(0, inf)",
    )?;
    ensure(
        events_stage2 > 0.0 && events_stage2.is_finite(),
        "events_stage2",
        events_stage2,
        "(0, inf)",
    )?;
    let z = -hr_stage2.ln() * (events_stage2 / 4.0).sqrt();
    Ok(normal::sf(z))
}

fn check_design(t: f64, info: f64) -> Result<()> {
    ensure(t > 0.0 && t < 1.0, "t", t, "(0, 1)")?;
    ensure(info > 0.0 && info.is_finite(), "info", info, "(0, inf)")
}

/// Covariance of `(D1, D2)`.
pub fn sigma1(t: f64, info: f64) -> Result<CovMatrix> {
    check_design(t, info)?;
    let (v, o) = d_moments(t, info);
    CovMatrix::from_rows([[v, o], [o, v]])
}

/// Covariance of `(D1, D2, S1, S2)`.
///
/// `D1 − D2` and `S1 − S2` are both multiples of `Y11 − Y12`, so this matrix
/// has rank 3.
pub fn sigma2(t: f64, info: f64) -> Result<CovMatrix> {
    check_design(t, info)?;
    let (v, o) = d_moments(t, info);
    let b = -1.0 / (2.0 * info.sqrt());
    let s = 1.0 - t / 2.0;
    CovMatrix::from_rows([[v, o, 0.0, b], [o, v, b, 0.0], [0.0, b, 1.0, s], [b, 0.0, s, 1.0]])
}

/// Covariance of `(D1, D2, Y2s)`.
pub fn sigma3(t: f64, info: f64) -> Result<CovMatrix> {
    check_design(t, info)?;
    let (v, o) = d_moments(t, info);
    let b = -1.0 / ((1.0 - t) * info).sqrt();
    CovMatrix::from_rows([[v, o, b], [o, v, b], [b, b, 1.0]])
}

/// Variance of `D_j` and covariance of `D1, D2`.
fn d_moments(t: f64, info: f64) -> (f64, f64) {
    let stage1 = 1.0 / (t * info);
    let stage2 = 1.0 / ((1.0 - t) * info);
    (stage1 + stage2, 0.5 * stage1 + stage2)
}
