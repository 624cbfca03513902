//! Monte Carlo simulation of the two-stage normal model, used to check the
//! analytic Type I error independently and to estimate power.
//!
//! Each replicate draws `(Y11, Y12)` with unit variances and correlation 0.5,
//! an independent `Y2s`, and an independent selection flag that picks the
//! dose with the larger Stage 1 statistic with probability `w`.
//!
//! Work is split into chunks; chunk `k` uses its own ChaCha stream derived
//! from `(seed, k)` and chunks only contribute integer counts, so results do
//! not depend on how many threads run them.

use crate::error::{ensure, Error, Result};
use crate::normal;
use crate::trial::{DesignParams, StrategyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MIN_REPLICATES: u64 = 10_000;
pub const DEFAULT_CHUNK: u64 = 1 << 16;

const SQRT_075: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    replicates: u64,
    seed: u64,
    chunk_size: u64,
}

impl McConfig {
    pub fn new(replicates: u64, seed: u64) -> Result<Self> {
        Self::with_chunk_size(replicates, seed, DEFAULT_CHUNK)
    }

    pub fn with_chunk_size(replicates: u64, seed: u64, chunk_size: u64) -> Result<Self> {
        if replicates < MIN_REPLICATES {
            return Err(Error::OutOfRange {
                name: "replicates",
                value: replicates as f64,
                expected: ">= 10000",
            });
        }
        ensure(chunk_size > 0, "chunk_size", chunk_size as f64, "> 0")?;
        Ok(Self {
            replicates,
            seed,
            chunk_size,
        })
    }

    pub fn replicates(&self) -> u64 {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chunk_size(&self) -> u64 {
        self.chunk_size
    }

    fn chunks(&self) -> impl ParallelIterator<Item = (u64, u64)> + '_ {
        let n = self.replicates.div_ceil(self.chunk_size);
        (0..n).into_par_iter().map(move |k| {
            let start = k * self.chunk_size;
            (k, self.chunk_size.min(self.replicates - start))
        })
    }

    fn rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk);
        rng
    }
}

/// Monte Carlo frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_count(hits: u64, cfg: &McConfig) -> Self {
        let n = cfg.replicates as f64;
        let p = hits as f64 / n;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            replicates: cfg.replicates,
            seed: cfg.seed,
        }
    }

    /// `(value − estimate) / std_error`; infinite if the error is zero and
    /// the values differ.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = value - self.estimate;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Mean shifts of `(Y11, Y12, Y2s)` in standard-deviation units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub mu11: f64,
    pub mu12: f64,
    pub mu2: f64,
}

impl EffectSpec {
    pub const NULL: Self = Self {
        mu11: 0.0,
        mu12: 0.0,
        mu2: 0.0,
    };

    fn validate(&self) -> Result<()> {
        for (name, v) in [("mu11", self.mu11), ("mu12", self.mu12), ("mu2", self.mu2)] {
            ensure(v.is_finite(), name, v, "finite")?;
        }
        Ok(())
    }
}

/// One draw of `(y11, y12, y2s)`.
pub fn draw_model<R: Rng + ?Sized>(rng: &mut R, effects: &EffectSpec) -> (f64, f64, f64) {
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    (
        effects.mu11 + z0,
        effects.mu12 + 0.5 * z0 + SQRT_075 * z1,
        effects.mu2 + z2,
    )
}

/// Picks the dose with the larger (`winner`) or smaller Stage 1 statistic.
/// Returns the 0-based index and its statistic.
pub fn select_dose(y11: f64, y12: f64, winner: bool) -> (usize, f64) {
    if (y11 >= y12) == winner {
        (0, y11)
    } else {
        (1, y12)
    }
}

/// Decision rule of one trial given the selected Stage 1 statistic.
#[derive(Debug, Clone, Copy)]
struct Rule {
    strategy: StrategyKind,
    c: f64,
    stage1_scale: f64,
    stage2_scale: f64,
    sqrt_t: f64,
    sqrt_1mt: f64,
    z: f64,
}

impl Rule {
    fn new(strategy: StrategyKind, c: f64, t: f64, info: f64, astar: f64) -> Result<Self> {
        ensure(astar > 0.0 && astar < 0.5, "astar", astar, "(0, 0.5)")?;
        Ok(Self {
            strategy,
            c,
            stage1_scale: 1.0 / (t * info).sqrt(),
            stage2_scale: 1.0 / ((1.0 - t) * info).sqrt(),
            sqrt_t: t.sqrt(),
            sqrt_1mt: (1.0 - t).sqrt(),
            z: normal::upper_critical(astar),
        })
    }

    fn from_params(params: &DesignParams, astar: f64) -> Result<Self> {
        Self::new(params.strategy(), params.c(), params.t(), params.info(), astar)
    }

    /// `(pooled, rejected)`
    #[inline]
    fn decide(&self, y1s: f64, y2s: f64) -> (bool, bool) {
        let diff = y1s * self.stage1_scale - y2s * self.stage2_scale;
        if self.strategy.combines(diff, self.c) {
            (true, self.sqrt_t * y1s + self.sqrt_1mt * y2s > self.z)
        } else {
            (false, y2s > self.z)
        }
    }
}

/// Fraction of null replicates in which the selected-dose test rejects.
pub fn simulate_type_one(params: &DesignParams, astar: f64, cfg: &McConfig) -> Result<McEstimate> {
    simulate_power(params, astar, &EffectSpec::NULL, cfg)
}

/// Rejection frequency under mean shifts `effects`; with zero shifts this is
/// exactly [`simulate_type_one`].
pub fn simulate_power(params: &DesignParams, astar: f64, effects: &EffectSpec, cfg: &McConfig) -> Result<McEstimate> {
    effects.validate()?;
    let rule = Rule::from_params(params, astar)?;
    let w = params.w();
    let hits: u64 = cfg
        .chunks()
        .map(|(k, n)| {
            let mut rng = cfg.rng(k);
            let mut hits = 0u64;
            for _ in 0..n {
                let (y11, y12, y2s) = draw_model(&mut rng, effects);
                let winner = rng.random::<f64>() < w;
                let (_, y1s) = select_dose(y11, y12, winner);
                hits += u64::from(rule.decide(y1s, y2s).1);
            }
            hits
        })
        .sum();
    Ok(McEstimate::from_count(hits, cfg))
}

/// Monte Carlo counterparts of the four analytic pieces: A and C are
/// frequencies with the larger Stage 1 statistic selected on every
/// replicate, B and D with the smaller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimates {
    pub a: McEstimate,
    pub b: McEstimate,
    pub c: McEstimate,
    pub d: McEstimate,
}

pub fn simulate_components(
    strategy: StrategyKind,
    c: f64,
    t: f64,
    info: f64,
    astar: f64,
    cfg: &McConfig,
) -> Result<ComponentEstimates> {
    // Validates (c, t, info) through the parameter constructor.
    DesignParams::new(0.025, strategy, c, t, info, 1.0)?;
    let rule = Rule::new(strategy, c, t, info, astar)?;
    let counts = cfg
        .chunks()
        .map(|(k, n)| {
            let mut rng = cfg.rng(k);
            let mut counts = [0u64; 4];
            for _ in 0..n {
                let (y11, y12, y2s) = draw_model(&mut rng, &EffectSpec::NULL);
                for (slot, winner) in [(0usize, true), (1, false)] {
                    let (pooled, rejected) = rule.decide(select_dose(y11, y12, winner).1, y2s);
                    if rejected {
                        counts[if pooled { slot } else { slot + 2 }] += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || [0u64; 4],
            |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]],
        );
    let est = |h| McEstimate::from_count(h, cfg);
    Ok(ComponentEstimates {
        a: est(counts[0]),
        b: est(counts[1]),
        c: est(counts[2]),
        d: est(counts[3]),
    })
}
