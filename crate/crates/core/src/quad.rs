//! Adaptive one-dimensional Gauss–Legendre quadrature.

use std::sync::OnceLock;

const ORDER: usize = 10;
const MAX_DEPTH: u32 = 40;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn rule() -> &'static [(f64, f64); ORDER] {
    static RULE: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut out = [(0.0, 0.0); ORDER];
        for (i, slot) in out.iter_mut().enumerate() {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

#[inline]
fn gauss<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol`, first splitting
/// at the given interior `breaks` (points where `f` is not smooth).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut points: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    points.push(a);
    points.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let pieces = (points.len() - 1) as f64;
    points
        .windows(2)
        .map(|w| {
            let whole = gauss(&mut f, w[0], w[1]);
            refine(&mut f, w[0], w[1], whole, tol / pieces, 0)
        })
        .sum()
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss(f, a, mid);
    let right = gauss(f, mid, b);
    let split = left + right;
    if (split - whole).abs() <= tol || depth >= MAX_DEPTH {
        return split;
    }
    refine(f, a, mid, left, 0.5 * tol, depth + 1) + refine(f, mid, b, right, 0.5 * tol, depth + 1)
}
