//! Rectangle probabilities for zero-mean multivariate normal vectors of
//! dimension 1 to 4.
//!
//! The rectangle probability is rewritten with Genz's sequential
//! conditioning: a pivoted Cholesky factor (variables ordered by tightest
//! expected interval) turns the Gaussian integral into a product of
//! one-dimensional normal interval probabilities, the first of which is
//! exact and the rest integrated with nested adaptive Gauss–Legendre
//! quadrature. The innermost quadrature is split at the points where the
//! binding constraint of the closed-form last step changes, so each piece is
//! smooth.
//!
//! Covariances that are only positive *semi*definite are supported: a
//! coordinate whose conditional variance vanishes is an exact linear
//! combination of the earlier latent variables, so its bounds are folded
//! into the step of the last latent variable it depends on. This matters
//! because several covariance matrices built in [`crate::trial`] are rank
//! deficient by construction.

use crate::error::{Error, Result};
use crate::{normal, quad};

pub const MAX_DIM: usize = 4;

/// Default absolute accuracy of [`mvn_rect_prob`].
pub const DEFAULT_TOL: f64 = 1e-7;

/// Smallest and largest accepted absolute accuracy.
pub const TOL_RANGE: (f64, f64) = (1e-10, 1e-3);

/// Relative pivot threshold below which [`cholesky`] rejects a matrix and
/// below which the semidefinite factorization treats a row as dependent.
const PIVOT_EPS: f64 = 1e-12;

const SYMMETRY_EPS: f64 = 1e-12;

/// Latent variables are integrated over `[-TAIL_CUT, TAIL_CUT]`; the
/// discarded mass is below 1e-18.
const TAIL_CUT: f64 = 9.0;

/// Axis-aligned integration region; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Rectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        check_dim(lower.len())?;
        for (&lo, &hi) in lower.iter().zip(&upper) {
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::OutOfRange {
                    name: "bound",
                    value: f64::NAN,
                    expected: "not NaN",
                });
            }
            if lo > hi {
                return Err(Error::OutOfRange {
                    name: "lower bound",
                    value: lo,
                    expected: "lower <= upper",
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `{x : x < upper}`
    pub fn below(upper: Vec<f64>) -> Result<Self> {
        Self::new(vec![f64::NEG_INFINITY; upper.len()], upper)
    }

    /// `{x : x > lower}`
    pub fn above(lower: Vec<f64>) -> Result<Self> {
        let n = lower.len();
        Self::new(lower, vec![f64::INFINITY; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(lo, hi)| lo == hi)
    }
}

/// Symmetric covariance matrix of dimension 1 to 4, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    entries: [f64; MAX_DIM * MAX_DIM],
}

impl CovMatrix {
    /// Builds a matrix from row-major entries, checking symmetry.
    pub fn new(dim: usize, entries: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        let mut m = Self {
            dim,
            entries: [0.0; MAX_DIM * MAX_DIM],
        };
        for i in 0..dim {
            for j in 0..dim {
                let v = entries[i * dim + j];
                if !v.is_finite() {
                    return Err(Error::OutOfRange {
                        name: "covariance entry",
                        value: v,
                        expected: "finite",
                    });
                }
                m.entries[i * MAX_DIM + j] = v;
            }
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (m.get(i, j), m.get(j, i));
                let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                if (a - b).abs() > SYMMETRY_EPS * scale {
                    return Err(Error::OutOfRange {
                        name: "covariance asymmetry",
                        value: a - b,
                        expected: "symmetric to 1e-12 relative",
                    });
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows<const D: usize>(rows: [[f64; D]; D]) -> Result<Self> {
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(D, &flat)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut flat = vec![0.0; dim * dim];
        for i in 0..dim {
            flat[i * dim + i] = 1.0;
        }
        Self::new(dim, &flat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * MAX_DIM + j]
    }

    /// Row-major copy of the entries.
    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.dim)
            .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect()
    }

    /// Reorders coordinates so that new coordinate `k` is old coordinate `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.dim)?;
        let mut flat = vec![0.0; self.dim * self.dim];
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                flat[a * self.dim + b] = self.get(pa, pb);
            }
        }
        Self::new(self.dim, &flat)
    }

    /// Drops one coordinate.
    pub fn without(&self, index: usize) -> Result<Self> {
        if self.dim < 2 || index >= self.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot remove coordinate {index} from a {}x{} matrix",
                self.dim, self.dim
            )));
        }
        let keep: Vec<usize> = (0..self.dim).filter(|&k| k != index).collect();
        let n = keep.len();
        let mut flat = vec![0.0; n * n];
        for (a, &ka) in keep.iter().enumerate() {
            for (b, &kb) in keep.iter().enumerate() {
                flat[a * n + b] = self.get(ka, kb);
            }
        }
        Self::new(n, &flat)
    }

    fn max_diagonal(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    entries: [f64; MAX_DIM * MAX_DIM],
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * MAX_DIM + j]
    }

    /// Computes `L Lᵀ`.
    pub fn reconstruct(&self) -> CovMatrix {
        let d = self.dim;
        let mut out = CovMatrix {
            dim: d,
            entries: [0.0; MAX_DIM * MAX_DIM],
        };
        for i in 0..d {
            for j in 0..d {
                out.entries[i * MAX_DIM + j] = (0..=i.min(j)).map(|k| self.get(i, k) * self.get(j, k)).sum();
            }
        }
        out
    }
}

/// Plain (unpivoted) Cholesky factorization.
///
/// Fails with `NotPositiveDefinite` when a pivot is at or below
/// `1e-12 × max diagonal`.
pub fn cholesky(sigma: &CovMatrix) -> Result<CholeskyFactor> {
    let d = sigma.dim;
    let threshold = PIVOT_EPS * sigma.max_diagonal();
    let mut l = CholeskyFactor {
        dim: d,
        entries: [0.0; MAX_DIM * MAX_DIM],
    };
    for j in 0..d {
        let pivot = sigma.get(j, j) - (0..j).map(|k| l.get(j, k).powi(2)).sum::<f64>();
        if pivot <= threshold || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let ljj = pivot.sqrt();
        l.entries[j * MAX_DIM + j] = ljj;
        for i in j + 1..d {
            let s = sigma.get(i, j) - (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum::<f64>();
            l.entries[i * MAX_DIM + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Probability that a `N(0, sigma)` vector falls inside `rect`, accurate to
/// `tol` in absolute terms.
///
/// Deterministic: identical inputs give bit-identical outputs.
pub fn mvn_rect_prob(rect: &Rectangle, sigma: &CovMatrix, tol: f64) -> Result<f64> {
    if rect.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rectangle has dimension {}, covariance {}",
            rect.dim(),
            sigma.dim()
        )));
    }
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            expected: "[1e-10, 1e-3]",
        });
    }
    if rect.is_degenerate() {
        return Ok(0.0);
    }
    let Some(plan) = Plan::build(rect, sigma)? else {
        return Ok(0.0);
    };
    Ok(plan.integrate(tol).clamp(0.0, 1.0))
}

/// One linear constraint `lo <= y[step] + Σ_{k<step} coef[k]·y[k] <= hi`
/// on the standardized latent variables.
#[derive(Debug, Clone, Copy)]
struct Constraint {
    coef: [f64; MAX_DIM],
    lo: f64,
    hi: f64,
}

impl Constraint {
    #[inline]
    fn bounds(&self, step: usize, y: &[f64; MAX_DIM]) -> (f64, f64) {
        let shift: f64 = (0..step).map(|k| self.coef[k] * y[k]).sum();
        (self.lo - shift, self.hi - shift)
    }
}

/// Sequential-conditioning form of one rectangle probability.
#[derive(Debug)]
struct Plan {
    /// Number of latent standard normals (the rank of sigma).
    rank: usize,
    /// Constraints grouped by the latent step they bound.
    steps: [Vec<Constraint>; MAX_DIM],
    /// Exact interval `[Φ(lo), Φ(hi)]` of the first latent variable.
    first: (f64, f64),
}

impl Plan {
    /// Returns `None` when the region is provably empty.
    fn build(rect: &Rectangle, sigma: &CovMatrix) -> Result<Option<Self>> {
        let d = sigma.dim();
        let mut lower = [0.0; MAX_DIM];
        let mut upper = [0.0; MAX_DIM];
        let mut corr = [[0.0; MAX_DIM]; MAX_DIM];
        let mut scale = [0.0; MAX_DIM];
        let mut active = [false; MAX_DIM];

        for i in 0..d {
            let v = sigma.get(i, i);
            if v < 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: i, value: v });
            }
            if v <= PIVOT_EPS * sigma.max_diagonal() {
                // Point mass at zero: either always inside or never.
                if rect.lower[i] > 0.0 || rect.upper[i] < 0.0 {
                    return Ok(None);
                }
                continue;
            }
            active[i] = true;
            scale[i] = v.sqrt();
            lower[i] = rect.lower[i] / scale[i];
            upper[i] = rect.upper[i] / scale[i];
        }
        for i in 0..d {
            for j in 0..d {
                if active[i] && active[j] {
                    corr[i][j] = sigma.get(i, j) / (scale[i] * scale[j]);
                } else if i != j && sigma.get(i, j) != 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: 0.0 });
                }
            }
        }

        // Pivoted semidefinite Cholesky. Row i of `l` expresses coordinate i
        // in terms of the latent variables chosen so far.
        let mut l = [[0.0; MAX_DIM]; MAX_DIM];
        let mut remaining: Vec<usize> = (0..d).filter(|&i| active[i]).collect();
        let mut dependent: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = Vec::new();
        let mut expected = [0.0; MAX_DIM];

        while !remaining.is_empty() {
            let j = order.len();
            let mut best: Option<(usize, f64)> = None;
            let mut still = Vec::with_capacity(remaining.len());
            for &i in &remaining {
                let var = corr[i][i] - (0..j).map(|k| l[i][k] * l[i][k]).sum::<f64>();
                if var < -1e-9 {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: var });
                }
                if var <= PIVOT_EPS {
                    dependent.push(i);
                    continue;
                }
                still.push(i);
                let sd = var.sqrt();
                let mean: f64 = (0..j).map(|k| l[i][k] * expected[k]).sum();
                let p = normal::cdf((upper[i] - mean) / sd) - normal::cdf((lower[i] - mean) / sd);
                if best.is_none_or(|(_, bp)| p < bp) {
                    best = Some((i, p));
                }
            }
            remaining = still;
            let Some((p, _)) = best else { break };

            let pivot_var = corr[p][p] - (0..j).map(|k| l[p][k] * l[p][k]).sum::<f64>();
            let lpp = pivot_var.sqrt();
            l[p][j] = lpp;
            for &i in remaining.iter().filter(|&&i| i != p) {
                let s = corr[i][p] - (0..j).map(|k| l[i][k] * l[p][k]).sum::<f64>();
                l[i][j] = s / lpp;
            }
            let mean: f64 = (0..j).map(|k| l[p][k] * expected[k]).sum();
            let a = (lower[p] - mean) / lpp;
            let b = (upper[p] - mean) / lpp;
            expected[j] = truncated_mean(a, b);
            order.push(p);
            remaining.retain(|&i| i != p);
        }

        let rank = order.len();
        let mut steps: [Vec<Constraint>; MAX_DIM] = Default::default();
        for (j, &p) in order.iter().enumerate() {
            steps[j].push(normalized(&l[p], j, lower[p], upper[p]));
        }
        for &i in &dependent {
            // Attach to the last latent variable carrying a real coefficient.
            let last = (0..rank).rev().find(|&k| l[i][k].abs() > 1e-10);
            match last {
                Some(m) => steps[m].push(normalized(&l[i], m, lower[i], upper[i])),
                None => {
                    if lower[i] > 0.0 || upper[i] < 0.0 {
                        return Ok(None);
                    }
                }
            }
        }

        if rank == 0 {
            return Ok(Some(Self {
                rank,
                steps,
                first: (0.0, 1.0),
            }));
        }
        let y0 = [0.0; MAX_DIM];
        let (lo, hi) = intersect(&steps[0], 0, &y0);
        if hi <= lo {
            return Ok(None);
        }
        Ok(Some(Self {
            rank,
            steps,
            first: (normal::cdf(lo), normal::cdf(hi)),
        }))
    }

    fn integrate(&self, tol: f64) -> f64 {
        match self.rank {
            0 => 1.0,
            1 => self.first.1 - self.first.0,
            _ => self.level(0, [0.0; MAX_DIM], 0.5 * tol),
        }
    }

    /// Probability mass of the remaining steps `j..rank` given the latent
    /// values `y[..j]`: `∫ φ(y_j) · level(j + 1) dy_j` over step `j`'s
    /// interval, with the last step in closed form.
    fn level(&self, j: usize, mut y: [f64; MAX_DIM], tol: f64) -> f64 {
        let (lo, hi) = intersect(&self.steps[j], j, &y);
        if hi <= lo {
            return 0.0;
        }
        if j + 1 == self.rank {
            return (normal::cdf(hi) - normal::cdf(lo)).max(0.0);
        }
        let (lo, hi) = (lo.max(-TAIL_CUT), hi.min(TAIL_CUT));
        if hi <= lo {
            return 0.0;
        }
        let breaks = if j + 2 == self.rank {
            self.crossings(j, &y)
        } else {
            Vec::new()
        };
        quad::integrate(
            |x| {
                y[j] = x;
                normal::pdf(x) * self.level(j + 1, y, 0.5 * tol)
            },
            lo,
            hi,
            &breaks,
            0.5 * tol,
        )
    }

    /// Values of `y[j]` at which the closed-form last step changes which
    /// constraint is binding. Each bound of step `j + 1` is a line in `y[j]`.
    fn crossings(&self, j: usize, y: &[f64; MAX_DIM]) -> Vec<f64> {
        let mut lines: Vec<(f64, f64)> = Vec::with_capacity(2 * MAX_DIM);
        for c in &self.steps[j + 1] {
            let fixed: f64 = (0..j).map(|k| c.coef[k] * y[k]).sum();
            let slope = -c.coef[j];
            for bound in [c.lo, c.hi] {
                if bound.is_finite() {
                    lines.push((bound - fixed, slope));
                }
            }
        }
        let mut out = Vec::new();
        for (a, &(i1, s1)) in lines.iter().enumerate() {
            for &(i2, s2) in &lines[a + 1..] {
                if (s1 - s2).abs() > 1e-14 {
                    out.push((i2 - i1) / (s1 - s2));
                }
            }
        }
        out
    }
}

/// Divides row `row` by its coefficient at `step`, flipping the interval if
/// that coefficient is negative.
fn normalized(row: &[f64; MAX_DIM], step: usize, lo: f64, hi: f64) -> Constraint {
    let lead = row[step];
    let mut coef = [0.0; MAX_DIM];
    for k in 0..step {
        coef[k] = row[k] / lead;
    }
    let (a, b) = (lo / lead, hi / lead);
    let (lo, hi) = if lead > 0.0 { (a, b) } else { (b, a) };
    Constraint { coef, lo, hi }
}

#[inline]
fn intersect(constraints: &[Constraint], step: usize, y: &[f64; MAX_DIM]) -> (f64, f64) {
    constraints
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), c| {
            let (a, b) = c.bounds(step, y);
            (lo.max(a), hi.min(b))
        })
}

/// Mean of a standard normal truncated to `(a, b)`.
fn truncated_mean(a: f64, b: f64) -> f64 {
    let mass = normal::cdf(b) - normal::cdf(a);
    if mass <= 1e-300 {
        // Interval far in a tail: use its nearest finite end.
        return if a.is_finite() {
            a
        } else if b.is_finite() {
            b
        } else {
            0.0
        };
    }
    (normal::pdf(a) - normal::pdf(b)) / mass
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("dimension {d} not in 1..=4")))
    }
}

fn check_permutation(perm: &[usize], d: usize) -> Result<()> {
    let mut seen = [false; MAX_DIM];
    if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::DimensionMismatch(format!(
            "{perm:?} is not a permutation of 0..{d}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const INF: f64 = f64::INFINITY;

    fn orthant(rho: f64) -> f64 {
        0.25 + rho.asin() / (2.0 * PI)
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let l = cholesky(&CovMatrix::identity(2).unwrap()).unwrap();
        assert_eq!(l.reconstruct(), CovMatrix::identity(2).unwrap());
        assert_eq!((l.get(0, 0), l.get(1, 0), l.get(1, 1)), (1.0, 0.0, 1.0));

        let l = cholesky(&CovMatrix::from_rows([[4.0, 0.0], [0.0, 9.0]]).unwrap()).unwrap();
        assert_eq!((l.get(0, 0), l.get(1, 0), l.get(1, 1)), (2.0, 0.0, 3.0));
    }

    #[test]
    fn cholesky_rejects_singular_and_indefinite() {
        let singular = CovMatrix::from_rows([[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&singular),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        let indefinite = CovMatrix::from_rows([[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&indefinite), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rejects_asymmetric_and_bad_shapes() {
        assert!(CovMatrix::new(2, &[1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(CovMatrix::new(5, &[0.0; 25]).is_err());
        assert!(CovMatrix::new(2, &[1.0; 3]).is_err());
        assert!(Rectangle::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(Rectangle::new(vec![1.0], vec![0.0]).is_err());
        assert!(Rectangle::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn dimension_mismatch_and_tolerance() {
        let r = Rectangle::below(vec![0.0, 0.0]).unwrap();
        let s = CovMatrix::identity(3).unwrap();
        assert!(matches!(
            mvn_rect_prob(&r, &s, DEFAULT_TOL),
            Err(Error::DimensionMismatch(_))
        ));
        let s = CovMatrix::identity(2).unwrap();
        assert!(mvn_rect_prob(&r, &s, 1e-2).is_err());
        assert!(mvn_rect_prob(&r, &s, 1e-12).is_err());
    }

    #[test]
    fn univariate_half() {
        let r = Rectangle::below(vec![0.0]).unwrap();
        let s = CovMatrix::identity(1).unwrap();
        assert_eq!(mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_rectangle_is_zero() {
        let r = Rectangle::new(vec![-INF, 0.3, -1.0], vec![1.0, 0.3, 2.0]).unwrap();
        let s = CovMatrix::identity(3).unwrap();
        assert_eq!(mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn bivariate_orthant_closed_form() {
        for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let s = CovMatrix::from_rows([[1.0, rho], [rho, 1.0]]).unwrap();
            let r = Rectangle::above(vec![0.0, 0.0]).unwrap();
            let p = mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap();
            assert_abs_diff_eq!(p, orthant(rho), epsilon = 1e-7);
        }
    }

    #[test]
    fn scaled_variances_do_not_matter_for_orthants() {
        let s = CovMatrix::from_rows([[4.0, 1.0], [1.0, 1.0]]).unwrap();
        let r = Rectangle::below(vec![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(
            mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap(),
            orthant(0.5),
            epsilon = 1e-7
        );
    }

    #[test]
    fn independent_product() {
        let s = CovMatrix::from_rows([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.5]]).unwrap();
        let r = Rectangle::new(vec![-1.0, 0.0, -INF], vec![1.5, INF, 0.2]).unwrap();
        let expected = (normal::cdf(1.5) - normal::cdf(-1.0)) * 0.5 * normal::cdf(0.2 / 0.5f64.sqrt());
        assert_abs_diff_eq!(mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap(), expected, epsilon = 1e-7);
    }

    #[test]
    fn perfectly_correlated_pair() {
        // X2 = X1: P(X1 < 1, X2 < 0.5) = Φ(0.5).
        let s = CovMatrix::from_rows([[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let r = Rectangle::below(vec![1.0, 0.5]).unwrap();
        assert_abs_diff_eq!(
            mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap(),
            normal::cdf(0.5),
            epsilon = 1e-12
        );
        // X2 = -X1: P(X1 > 0.2, X2 > 0.1) = 0.
        let s = CovMatrix::from_rows([[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let r = Rectangle::above(vec![0.2, 0.1]).unwrap();
        assert_eq!(mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn zero_variance_coordinate() {
        let s = CovMatrix::from_rows([[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let inside = Rectangle::new(vec![-INF, -1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(mvn_rect_prob(&inside, &s, DEFAULT_TOL).unwrap(), 0.5);
        let outside = Rectangle::new(vec![-INF, 0.5], vec![0.0, 1.0]).unwrap();
        assert_eq!(mvn_rect_prob(&outside, &s, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let s = CovMatrix::from_rows([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]]).unwrap();
        let r = Rectangle::below(vec![0.0; 3]).unwrap();
        assert!(matches!(
            mvn_rect_prob(&r, &s, DEFAULT_TOL),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let s = CovMatrix::from_rows([
            [1.0, 0.3, 0.2, 0.1],
            [0.3, 1.0, 0.4, 0.2],
            [0.2, 0.4, 1.0, 0.5],
            [0.1, 0.2, 0.5, 1.0],
        ])
        .unwrap();
        let r = Rectangle::new(vec![-1.0, -INF, 0.0, -0.5], vec![1.0, 0.5, INF, 2.0]).unwrap();
        let a = mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap();
        let b = mvn_rect_prob(&r, &s, DEFAULT_TOL).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn permutation_helpers() {
        let s = CovMatrix::from_rows([[1.0, 0.2, 0.3], [0.2, 2.0, 0.4], [0.3, 0.4, 3.0]]).unwrap();
        let p = s.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(0, 0), 3.0);
        assert_eq!(p.get(0, 1), 0.3);
        assert!(s.permuted(&[0, 0, 1]).is_err());
        let w = s.without(1).unwrap();
        assert_eq!(w.to_vec(), vec![1.0, 0.3, 0.3, 3.0]);
    }
}
