//! Overall Type I error of the pooled-or-Stage-2-only test and the adjusted
//! level α* that brings it back to the target α.
//!
//! Under the null, with independent dose selection, the error splits into
//! four conditional pieces that are weighted by `w` (winner picked, Stage 1
//! statistic is `max(Y11, Y12)`) or `1 − w` (loser picked, `min`):
//!
//! | piece | selection | test used        |
//! |-------|-----------|------------------|
//! | A     | max       | pooled `S`       |
//! | B     | min       | pooled `S`       |
//! | C     | max       | Stage 2 only     |
//! | D     | min       | Stage 2 only     |
//!
//! Every piece reduces to rectangle probabilities of `(D1, D2)`,
//! `(D1, D2, S1, S2)` or `(D1, D2, Y2s)` because the dose with the larger
//! Stage 1 statistic also has the larger `D_j` and the larger `S_j`, so
//! `{max_j D_j < x} = {D1 < x, D2 < x}` and similarly for `min` and `>`.

use crate::error::{Error, Result};
use crate::mvn::{mvn_rect_prob, CovMatrix, Rectangle, DEFAULT_TOL};
use crate::normal;
use crate::trial::{sigma1, sigma2, sigma3, DesignParams, StrategyKind};
use serde::{Deserialize, Serialize};

/// Tolerance on the achieved Type I error.
pub const SOLVER_TOL: f64 = 1e-6;
/// Lower end of the α* search bracket.
pub const SOLVER_LOWER: f64 = 1e-6;
pub const SOLVER_MAX_ITER: usize = 200;

/// The four conditional Type I error pieces (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentValues {
    /// A: winner selected, pooled test rejects.
    pub a: f64,
    /// B: loser selected, pooled test rejects.
    pub b: f64,
    /// C: winner selected, Stage 2 test rejects.
    pub c: f64,
    /// D: loser selected, Stage 2 test rejects.
    pub d: f64,
}

impl ComponentValues {
    /// `A·w + B·(1−w) + C·w + D·(1−w)`
    pub fn total(&self, w: f64) -> f64 {
        (self.a + self.c) * w + (self.b + self.d) * (1.0 - w)
    }

    fn clamped(self) -> Self {
        let f = |x: f64| x.clamp(0.0, 1.0);
        Self {
            a: f(self.a),
            b: f(self.b),
            c: f(self.c),
            d: f(self.d),
        }
    }
}

/// Rectangle probabilities shared by the three strategies, for one
/// `(t, I, α*)`.
struct Terms {
    s1: CovMatrix,
    s2: CovMatrix,
    s3: CovMatrix,
    z: f64,
    tol: f64,
}

const INF: f64 = f64::INFINITY;
const NEG_INF: f64 = f64::NEG_INFINITY;

impl Terms {
    fn new(t: f64, info: f64, astar: f64) -> Result<Self> {
        if !(astar > 0.0 && astar < 0.5) {
            return Err(Error::OutOfRange {
                name: "astar",
                value: astar,
                expected: "(0, 0.5)",
            });
        }
        Ok(Self {
            s1: sigma1(t, info)?,
            s2: sigma2(t, info)?,
            s3: sigma3(t, info)?,
            z: normal::upper_critical(astar),
            tol: DEFAULT_TOL,
        })
    }

    fn prob(&self, lower: Vec<f64>, upper: Vec<f64>, sigma: &CovMatrix) -> Result<f64> {
        mvn_rect_prob(&Rectangle::new(lower, upper)?, sigma, self.tol)
    }

    /// P(D1 < x, D2 < x)
    fn d_below(&self, x: f64) -> Result<f64> {
        self.prob(vec![NEG_INF; 2], vec![x; 2], &self.s1)
    }

    /// P(D1 < x, D2 < x, S1 < z, S2 < z)
    fn ds_below(&self, x: f64) -> Result<f64> {
        self.prob(vec![NEG_INF; 4], vec![x, x, self.z, self.z], &self.s2)
    }

    /// P(D1 > x, D2 > x, S1 > z, S2 > z)
    fn ds_above(&self, x: f64) -> Result<f64> {
        self.prob(vec![x, x, self.z, self.z], vec![INF; 4], &self.s2)
    }

    /// P(S1 < z, S2 < z)
    fn s_below(&self) -> Result<f64> {
        self.prob(vec![NEG_INF; 4], vec![INF, INF, self.z, self.z], &self.s2)
    }

    /// P(S1 > z, S2 > z)
    fn s_above(&self) -> Result<f64> {
        self.prob(vec![NEG_INF, NEG_INF, self.z, self.z], vec![INF; 4], &self.s2)
    }

    /// P(D1 < x, D2 < x, Y2s > z)
    fn dy_below(&self, x: f64) -> Result<f64> {
        self.prob(vec![NEG_INF, NEG_INF, self.z], vec![x, x, INF], &self.s3)
    }

    /// P(D1 > x, D2 > x, Y2s > z)
    fn dy_above(&self, x: f64) -> Result<f64> {
        self.prob(vec![x, x, self.z], vec![INF; 3], &self.s3)
    }
}

fn check_c(c: f64) -> Result<()> {
    if c >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "c",
            value: c,
            expected: "[0, inf)",
        })
    }
}

/// Pieces under the neutral strategy (pool when `|D_s| < c`).
pub fn components_neutral(c: f64, t: f64, info: f64, astar: f64) -> Result<ComponentValues> {
    check_c(c)?;
    let k = Terms::new(t, info, astar)?;
    let a = k.d_below(c)? - k.d_below(-c)? - k.ds_below(c)? + k.ds_below(-c)?;
    let b = k.ds_above(-c)? - k.ds_above(c)?;
    let cc = k.dy_below(-c)? + astar - k.dy_below(c)?;
    let d = k.dy_above(c)? + astar - k.dy_above(-c)?;
    Ok(ComponentValues { a, b, c: cc, d }.clamped())
}

/// Pieces under the conservative strategy (pool when `D_s < c`).
pub fn components_conservative(c: f64, t: f64, info: f64, astar: f64) -> Result<ComponentValues> {
    check_c(c)?;
    let k = Terms::new(t, info, astar)?;
    // P(D_max < c, S_max > z) = P(D_max < c) − P(D_max < c, S_max < z)
    let a = k.d_below(c)? - k.ds_below(c)?;
    // P(D_min < c, S_min > z) = P(S_min > z) − P(D_min ≥ c, S_min > z)
    let b = k.s_above()? - k.ds_above(c)?;
    // P(D_max ≥ c, Y2s > z) = α* − P(D_max < c, Y2s > z)
    let cc = astar - k.dy_below(c)?;
    let d = k.dy_above(c)?;
    Ok(ComponentValues { a, b, c: cc, d }.clamped())
}

/// Pieces under the aggressive strategy (pool when `D_s > −c`).
pub fn components_aggressive(c: f64, t: f64, info: f64, astar: f64) -> Result<ComponentValues> {
    check_c(c)?;
    let k = Terms::new(t, info, astar)?;
    // P(D_max > −c, S_max > z) = P(S_max > z) − P(D_max ≤ −c, S_max > z)
    let a = 1.0 - k.s_below()? - (k.d_below(-c)? - k.ds_below(-c)?);
    let b = k.ds_above(-c)?;
    let cc = k.dy_below(-c)?;
    // P(D_min ≤ −c, Y2s > z) = α* − P(D_min > −c, Y2s > z)
    let d = astar - k.dy_above(-c)?;
    Ok(ComponentValues { a, b, c: cc, d }.clamped())
}

pub fn components(strategy: StrategyKind, c: f64, t: f64, info: f64, astar: f64) -> Result<ComponentValues> {
    match strategy {
        StrategyKind::Conservative => components_conservative(c, t, info, astar),
        StrategyKind::Aggressive => components_aggressive(c, t, info, astar),
        StrategyKind::Neutral => components_neutral(c, t, info, astar),
    }
}

/// Overall Type I error when both the pooled and the Stage-2-only test are
/// run at level `astar`.
pub fn type_one_error(params: &DesignParams, astar: f64) -> Result<f64> {
    let parts = components(params.strategy(), params.c(), params.t(), params.info(), astar)?;
    Ok(parts.total(params.w()))
}

/// Solution of `type_one_error(params, α*) = α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaStarResult {
    pub alpha_star: f64,
    pub achieved_type1: f64,
    pub iterations: usize,
    /// Width of the final bracket.
    pub bracket: f64,
    /// The caller's `w` was below 0.5 and was raised to 0.5.
    pub clamped_w: bool,
    /// Testing at α already keeps the Type I error at or below α, so no
    /// adjustment is needed and α* = α.
    pub capped: bool,
}

/// Finds α* in `[1e-6, α]` with bisection-safeguarded regula falsi
/// (Illinois variant) on the increasing function `type_one_error − α`.
///
/// When the error at α* = α is already within tolerance of α or below it,
/// returns α* = α with `capped` set.
pub fn solve_alpha_star(params: &DesignParams) -> Result<AlphaStarResult> {
    let alpha = params.alpha();
    let f = |x: f64| type_one_error(params, x).map(|p| p - alpha);

    let result = |x: f64, fx: f64, iterations: usize, bracket: f64, capped: bool| AlphaStarResult {
        alpha_star: x,
        achieved_type1: fx + alpha,
        iterations,
        bracket,
        clamped_w: params.w_clamped(),
        capped,
    };

    let (mut hi, mut f_hi) = (alpha, f(alpha)?);
    if f_hi <= SOLVER_TOL {
        return Ok(result(alpha, f_hi, 0, 0.0, f_hi.abs() > SOLVER_TOL));
    }
    let (mut lo, mut f_lo) = (SOLVER_LOWER, f(SOLVER_LOWER)?);
    if f_lo >= -SOLVER_TOL {
        if f_lo.abs() <= SOLVER_TOL {
            return Ok(result(lo, f_lo, 0, hi - lo, false));
        }
        return Err(Error::NoConvergence {
            iterations: 0,
            width: hi - lo,
        });
    }

    // Illinois: halve the weight of an endpoint retained twice in a row.
    let mut side = 0i8;
    for iter in 1..=SOLVER_MAX_ITER {
        let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        let x = if secant.is_finite() && secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let fx = f(x)?;
        if fx.abs() <= SOLVER_TOL {
            return Ok(result(x, fx, iter, hi - lo, false));
        }
        if fx > 0.0 {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 1e-12 {
            let (x, fx) = if f_hi.abs() < f_lo.abs() {
                (hi, f_hi)
            } else {
                (lo, f_lo)
            };
            return Ok(result(x, fx, iter, hi - lo, false));
        }
    }
    Err(Error::NoConvergence {
        iterations: SOLVER_MAX_ITER,
        width: hi - lo,
    })
}
