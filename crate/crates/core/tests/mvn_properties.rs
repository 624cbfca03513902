use astar_core::mvn::{cholesky, mvn_rect_prob, CovMatrix, Rectangle, DEFAULT_TOL};
use astar_core::trial::{sigma1, sigma2, sigma3};
use astar_core::{normal, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const INF: f64 = f64::INFINITY;
const TOL: f64 = DEFAULT_TOL;

/// Random positive definite matrix `A Aᵀ + 0.1 I`, dimension `d`.
fn random_cov(seed: u64, d: usize) -> CovMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    // Exact symmetry.
    for i in 0..d {
        for j in 0..i {
            m[i * d + j] = m[j * d + i];
        }
    }
    CovMatrix::new(d, &m).unwrap()
}

fn bound() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(-INF), 1 => Just(INF), 6 => -2.5f64..2.5]
}

fn rect(bounds: &[(f64, f64)]) -> Rectangle {
    let (lo, hi): (Vec<f64>, Vec<f64>) = bounds.iter().map(|&(a, b)| (a.min(b), a.max(b))).unzip();
    Rectangle::new(lo, hi).unwrap()
}

/// Plain Monte Carlo estimate and standard error of a rectangle probability.
fn brute_force(r: &Rectangle, sigma: &CovMatrix, n: usize, seed: u64) -> (f64, f64) {
    let d = sigma.dim();
    // Eigen-free factor: Cholesky of Σ + tiny ridge handles the rank
    // deficient Σ2; the ridge shifts probabilities by far less than MC noise.
    let mut ridged = sigma.to_vec();
    for i in 0..d {
        ridged[i * d + i] += 1e-13;
    }
    let l = cholesky(&CovMatrix::new(d, &ridged).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut z = [0.0; 4];
    for _ in 0..n {
        for zi in z.iter_mut().take(d) {
            *zi = rng.sample(StandardNormal);
        }
        let inside = (0..d).all(|i| {
            let x: f64 = (0..=i).map(|k| l.get(i, k) * z[k]).sum();
            x > r.lower()[i] && x < r.upper()[i]
        });
        hits += inside as usize;
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[test]
fn component_a_four_dimensional_term_matches_monte_carlo() {
    let (t, info, astar) = (0.3, 127.5, 0.0199);
    let c = 1.1f64.ln();
    let z = normal::upper_critical(astar);
    let s2 = sigma2(t, info).unwrap();
    let r = Rectangle::below(vec![c, c, z, z]).unwrap();
    let p = mvn_rect_prob(&r, &s2, TOL).unwrap();
    let (mc, se) = brute_force(&r, &s2, 1_000_000, 1);
    assert!((p - mc).abs() <= 3.5 * se, "kernel {p}, MC {mc} ± {se}");
}

#[test]
fn random_four_dimensional_cases_match_monte_carlo() {
    for seed in 0..4 {
        let s = random_cov(100 + seed, 4);
        let r = Rectangle::new(vec![-1.0, -INF, -0.5, 0.2], vec![1.5, 0.7, INF, 2.0]).unwrap();
        let p = mvn_rect_prob(&r, &s, TOL).unwrap();
        let (mc, se) = brute_force(&r, &s, 400_000, seed);
        assert!(
            (p - mc).abs() <= 3.5 * se.max(1e-6),
            "seed {seed}: kernel {p}, MC {mc} ± {se}"
        );
    }
}

#[test]
fn singular_sigma2_agrees_with_a_nonsingular_reduction() {
    // (D1, D2, S1) has full rank; S2 = S1 + k (D2 − D1) is the dependent row,
    // so an upper orthant in S2 only is just the marginal P(S2 < z) = Φ(z).
    let s2 = sigma2(0.3, 127.5).unwrap();
    let r = Rectangle::below(vec![INF, INF, INF, 1.7]).unwrap();
    let p = mvn_rect_prob(&r, &s2, TOL).unwrap();
    assert!((p - normal::cdf(1.7)).abs() < TOL);
    // Full-rank 3x3 block (D1, D2, S1) against the 4x4 with S2 unbounded.
    let block = s2.without(3).unwrap();
    let r3 = Rectangle::new(vec![-0.1, -INF, 1.0], vec![0.2, 0.15, INF]).unwrap();
    let r4 = Rectangle::new(vec![-0.1, -INF, 1.0, -INF], vec![0.2, 0.15, INF, INF]).unwrap();
    let a = mvn_rect_prob(&r3, &block, TOL).unwrap();
    let b = mvn_rect_prob(&r4, &s2, TOL).unwrap();
    assert!((a - b).abs() <= 2.0 * TOL, "{a} vs {b}");
}

#[test]
fn builders_are_positive_definite_except_sigma2_which_has_rank_three() {
    for t in [0.05, 0.2, 0.3, 0.4, 0.5, 0.8, 0.95] {
        for info in [10.0, 127.5, 500.0] {
            cholesky(&sigma1(t, info).unwrap()).unwrap();
            cholesky(&sigma3(t, info).unwrap()).unwrap();
            let s2 = sigma2(t, info).unwrap();
            // Leading (D1, D2, S1) block is positive definite ...
            cholesky(&s2.without(3).unwrap()).unwrap();
            // ... and S2 is a linear combination of it.
            assert!(matches!(
                cholesky(&s2),
                Err(Error::NotPositiveDefinite { pivot: 3, .. })
            ));
            // Every probability over it is still well defined.
            let r = Rectangle::below(vec![0.05, 0.05, 1.5, 1.5]).unwrap();
            let p = mvn_rect_prob(&r, &s2, TOL).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn sigma1_sigma3_diagonal_exceeds_off_diagonal() {
    for t in [0.1, 0.3, 0.7] {
        for info in [20.0, 127.5] {
            let s = sigma1(t, info).unwrap();
            let gap = s.get(0, 0) - s.get(0, 1);
            assert!((gap - 1.0 / (2.0 * t * info)).abs() < 1e-15);
        }
    }
}

#[test]
fn three_dimensional_closed_form_orthant() {
    // P(X > 0) for a trivariate normal: 1/8 + (asin ρ12 + asin ρ13 + asin ρ23) / (4π).
    let (r12, r13, r23) = (0.3, -0.2, 0.6);
    let s = CovMatrix::from_rows([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]]).unwrap();
    let expected = 0.125 + (r12.asin() + r13.asin() + r23.asin()) / (4.0 * std::f64::consts::PI);
    let p = mvn_rect_prob(&Rectangle::above(vec![0.0; 3]).unwrap(), &s, TOL).unwrap();
    assert!((p - expected).abs() < TOL, "{p} vs {expected}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complement_in_one_dimension(u in -6.0f64..6.0, var in 0.01f64..20.0) {
        let s = CovMatrix::new(1, &[var]).unwrap();
        let below = mvn_rect_prob(&Rectangle::below(vec![u]).unwrap(), &s, TOL).unwrap();
        let above = mvn_rect_prob(&Rectangle::above(vec![u]).unwrap(), &s, TOL).unwrap();
        prop_assert!((below + above - 1.0).abs() <= 2.0 * TOL);
    }

    #[test]
    fn enlarging_never_decreases(
        seed in 0u64..1000,
        d in 2usize..=4,
        b in prop::collection::vec((bound(), bound()), 4),
        grow in prop::collection::vec((0.0f64..1.5, 0.0f64..1.5), 4),
    ) {
        let s = random_cov(seed, d);
        let inner = rect(&b[..d]);
        let outer_bounds: Vec<(f64, f64)> = inner
            .lower()
            .iter()
            .zip(inner.upper())
            .zip(&grow)
            .map(|((&lo, &hi), &(gl, gu))| (lo - gl, hi + gu))
            .collect();
        let outer = rect(&outer_bounds);
        let p_in = mvn_rect_prob(&inner, &s, TOL).unwrap();
        let p_out = mvn_rect_prob(&outer, &s, TOL).unwrap();
        prop_assert!(p_out >= p_in - 2.0 * TOL, "{} < {}", p_out, p_in);
    }

    #[test]
    fn permutation_invariance(
        seed in 0u64..1000,
        d in 3usize..=4,
        b in prop::collection::vec((bound(), bound()), 4),
        perm_seed in 0u64..1000,
    ) {
        let s = random_cov(seed, d);
        let r = rect(&b[..d]);
        let mut perm: Vec<usize> = (0..d).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        for i in (1..d).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let sp = s.permuted(&perm).unwrap();
        let rp = Rectangle::new(
            perm.iter().map(|&k| r.lower()[k]).collect(),
            perm.iter().map(|&k| r.upper()[k]).collect(),
        ).unwrap();
        let a = mvn_rect_prob(&r, &s, TOL).unwrap();
        let b = mvn_rect_prob(&rp, &sp, TOL).unwrap();
        prop_assert!((a - b).abs() <= 2.0 * TOL, "{} vs {}", a, b);
    }

    #[test]
    fn marginalization(
        seed in 0u64..1000,
        d in 3usize..=4,
        b in prop::collection::vec((bound(), bound()), 4),
        drop in 0usize..4,
    ) {
        let drop = drop % d;
        let s = random_cov(seed, d);
        let mut full = b[..d].to_vec();
        full[drop] = (-INF, INF);
        let reduced: Vec<(f64, f64)> = full.iter().enumerate().filter(|&(k, _)| k != drop).map(|(_, &x)| x).collect();
        let a = mvn_rect_prob(&rect(&full), &s, TOL).unwrap();
        let m = mvn_rect_prob(&rect(&reduced), &s.without(drop).unwrap(), TOL).unwrap();
        prop_assert!((a - m).abs() <= 2.0 * TOL, "{} vs {}", a, m);
    }
}
