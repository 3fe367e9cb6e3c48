//! Discretized Brownian bundles, the directed-percolation functionals
//! L_k and D_k, and the k-row-1 non-uniform limit sample.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpp::{lpp1, lppk, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundleMode {
    Independent,
    /// Centered and rescaled paths with pairwise increment correlation
    /// `-1/(m-1)` and unit variance per unit time.
    ExchangeableNegative,
}

/// `m` Brownian paths on a uniform grid, stored as increments.
#[derive(Debug, Clone)]
pub struct BrownianBundle {
    pub m: usize,
    /// Time increment of one grid step.
    pub step: f64,
    pub horizon: f64,
    pub steps: usize,
    pub mode: BundleMode,
    /// `m` rows of `steps` increments.
    pub increments: Vec<Vec<f64>>,
}

impl BrownianBundle {
    /// Path value at grid index `t` (prefix sum of the first `t`
    /// increments).
    pub fn value(&self, path: usize, t: usize) -> f64 {
        self.increments[path][..t].iter().sum()
    }

    pub fn terminal(&self, path: usize) -> f64 {
        self.value(path, self.steps)
    }

    fn grid_index(&self, s: f64) -> Result<usize> {
        if !(0.0..=self.horizon + 1e-9).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "time {s} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(((s / self.step).round() as usize).min(self.steps))
    }
}

fn sample_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn sample_bundle(
    m: usize,
    steps_per_unit: usize,
    horizon: f64,
    mode: BundleMode,
    rng: &mut impl Rng,
) -> Result<BrownianBundle> {
    if m == 0 {
        return Err(Error::InvalidParameter("path count must be >= 1".into()));
    }
    if steps_per_unit == 0 {
        return Err(Error::InvalidParameter("steps_per_unit must be >= 1".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    if mode == BundleMode::ExchangeableNegative && m == 1 {
        return Err(Error::InvalidParameter(
            "exchangeable mode needs m >= 2 (correlation -1/(m-1) undefined)".into(),
        ));
    }
    let steps = ((horizon * steps_per_unit as f64).round() as usize).max(1);
    let step = horizon / steps as f64;
    let sd = step.sqrt();
    let mut increments: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..steps).map(|_| sample_normal(rng) * sd).collect())
        .collect();
    if mode == BundleMode::ExchangeableNegative {
        let scale = (m as f64 / (m as f64 - 1.0)).sqrt();
        for t in 0..steps {
            let mean = increments.iter().map(|p| p[t]).sum::<f64>() / m as f64;
            for p in increments.iter_mut() {
                p[t] = scale * (p[t] - mean);
            }
        }
    }
    Ok(BrownianBundle { m, step, horizon, steps, mode, increments })
}

/// `L_k(s, m)`: discretized supremum over `k` nested non-decreasing paths
/// through the `m` coordinates of the summed increments on `[0, s]`.
/// Breakpoints are restricted to the simulation grid, so the value
/// converges to the continuous supremum from below as the grid refines.
pub fn l_k(bundle: &BrownianBundle, s: f64, k: usize) -> Result<f64> {
    if k == 0 || k > bundle.m {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= m, got k = {k}, m = {}",
            bundle.m
        )));
    }
    let t = bundle.grid_index(s)?;
    if t == 0 {
        return Ok(0.0);
    }
    let rows: Vec<Vec<f64>> =
        (0..t).map(|i| bundle.increments.iter().map(|p| p[i]).collect()).collect();
    let w = WeightMatrix::from_rows(&rows)?;
    if k == 1 {
        Ok(lpp1(&w))
    } else {
        lppk(&w, k)
    }
}

/// `D_k` over explicit increment rows on `[0, 1]`: maximum of
/// `sum_l (B^l(t_l) - B^l(t_{l-1}))` over `0 = t_0 <= ... <= t_k = 1`
/// with breakpoints on the grid. Segments may be empty, so the boundary
/// choices give `D_k >= max(B^1(1), B^k(1))` pathwise.
pub fn d_k_from_increments(increments: &[Vec<f64>]) -> Result<f64> {
    let k = increments.len();
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    let steps = increments[0].len();
    if increments.iter().any(|p| p.len() != steps) {
        return Err(Error::InvalidInput("ragged increment rows".into()));
    }
    // prev[t] = best value with paths 1..=l and t_l at grid index t;
    // t_0 is pinned to 0.
    let mut prev = vec![f64::NEG_INFINITY; steps + 1];
    prev[0] = 0.0;
    for path in increments {
        let mut cur = Vec::with_capacity(steps + 1);
        let mut b = 0.0; // path value at t
        let mut best = prev[0]; // max over t' <= t of prev[t'] - B(t')
        cur.push(best + b);
        for (t, inc) in path.iter().enumerate() {
            best = best.max(prev[t] - b);
            b += inc;
            best = best.max(prev[t + 1] - b);
            cur.push(best + b);
        }
        prev = cur;
    }
    Ok(prev[steps])
}

/// Expected shortfall of the grid supremum below the continuous `D_k`.
///
/// Each of the `k - 1` interior junctions locally maximizes a difference
/// of two independent Brownian motions (volatility `sqrt(2)`); restricting
/// the maximizer to a grid of spacing `dt` loses
/// `-zeta(1/2)/sqrt(2 pi) * sqrt(2 dt)` in expectation per junction
/// (the Asmussen-Glynn-Pitman constant). Add this to a grid `D_k` sample
/// when the continuous functional is the target.
pub fn d_k_grid_bias(k: usize, steps: usize) -> f64 {
    // -zeta(1/2) / sqrt(2 pi)
    const AGP: f64 = 0.582597;
    let dt = 1.0 / steps as f64;
    AGP * (2.0 * dt).sqrt() * (k as f64 - 1.0)
}

/// One sample of `D_k` from `k` fresh independent standard paths, with
/// breakpoints restricted to the grid (no bias correction; see
/// [`d_k_grid_bias`]).
pub fn d_k(k: usize, steps: usize, rng: &mut impl Rng) -> Result<f64> {
    if k == 0 || steps == 0 {
        return Err(Error::InvalidParameter("need k >= 1 and steps >= 1".into()));
    }
    let sd = (1.0 / steps as f64).sqrt();
    let increments: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..steps).map(|_| sample_normal(rng) * sd).collect())
        .collect();
    d_k_from_increments(&increments)
}

/// Parameters of the k-row-1 non-uniform limit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NonUniformLimitParams {
    pub k: usize,
    pub p_max: f64,
}

impl NonUniformLimitParams {
    pub fn new(k: usize, p_max: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(p_max > 0.0) || k as f64 * p_max > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "need 0 < p_max and k * p_max <= 1, got k = {k}, p_max = {p_max}"
            )));
        }
        Ok(NonUniformLimitParams { k, p_max })
    }

    /// `(sqrt(1 - k p_max) - 1) / k`; equals `-1/k` when `k p_max = 1`.
    pub fn coefficient(&self) -> f64 {
        let inside = (1.0 - self.k as f64 * self.p_max).max(0.0);
        (inside.sqrt() - 1.0) / self.k as f64
    }
}

/// One sample of the limit law of the centered, scaled first row:
/// `coefficient * sum_j B^j(1) + D_k`, with the same `k` paths feeding
/// both terms.
pub fn v1_limit_nonuniform(
    params: &NonUniformLimitParams,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    let k = params.k;
    let sd = (1.0 / steps as f64).sqrt();
    let increments: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..steps).map(|_| sample_normal(rng) * sd).collect())
        .collect();
    let sum_terminals: f64 = increments.iter().map(|p| p.iter().sum::<f64>()).sum();
    let dk = d_k_from_increments(&increments)? + d_k_grid_bias(k, steps);
    Ok(params.coefficient() * sum_terminals + dk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::{ks_two_sample, EmpiricalDistribution};
    use proptest::prelude::*;

    #[test]
    fn bundle_guards() {
        let mut rng = stream_rng(1, 0);
        assert!(sample_bundle(0, 10, 1.0, BundleMode::Independent, &mut rng).is_err());
        assert!(sample_bundle(2, 0, 1.0, BundleMode::Independent, &mut rng).is_err());
        assert!(sample_bundle(2, 10, 0.0, BundleMode::Independent, &mut rng).is_err());
        assert!(sample_bundle(1, 10, 1.0, BundleMode::ExchangeableNegative, &mut rng).is_err());
        assert!(sample_bundle(1, 10, 1.0, BundleMode::Independent, &mut rng).is_ok());
    }

    #[test]
    fn increment_variance_matches_step() {
        let mut rng = stream_rng(2, 0);
        let b = sample_bundle(1, 100_000, 1.0, BundleMode::Independent, &mut rng).unwrap();
        let var = b.increments[0].iter().map(|x| x * x).sum::<f64>() / b.steps as f64;
        assert!((var - b.step).abs() < 0.03 * b.step, "var {var}, step {}", b.step);
    }

    #[test]
    fn exchangeable_covariance() {
        for m in [3usize, 4, 10] {
            let n = 100_000;
            let mut rng = stream_rng(3, m as u64);
            let mut sums = vec![vec![0.0f64; m]; m];
            for _ in 0..n {
                let b = sample_bundle(m, 1, 1.0, BundleMode::ExchangeableNegative, &mut rng)
                    .unwrap();
                let v: Vec<f64> = (0..m).map(|j| b.terminal(j)).collect();
                for i in 0..m {
                    for j in 0..m {
                        sums[i][j] += v[i] * v[j];
                    }
                }
            }
            let target = -1.0 / (m as f64 - 1.0);
            for i in 0..m {
                for j in 0..m {
                    let cov = sums[i][j] / n as f64;
                    let want = if i == j { 1.0 } else { target };
                    assert!((cov - want).abs() < 0.02, "m {m}: cov[{i}][{j}] = {cov}");
                }
            }
        }
    }

    #[test]
    fn independent_cross_correlation_near_zero() {
        let n = 100_000;
        let mut rng = stream_rng(4, 0);
        let mut cross = 0.0;
        for _ in 0..n {
            let b = sample_bundle(2, 1, 1.0, BundleMode::Independent, &mut rng).unwrap();
            cross += b.terminal(0) * b.terminal(1);
        }
        assert!((cross / n as f64).abs() < 0.02);
    }

    #[test]
    fn exchangeable_sums_to_zero_pathwise() {
        let mut rng = stream_rng(5, 0);
        let b = sample_bundle(5, 50, 2.0, BundleMode::ExchangeableNegative, &mut rng).unwrap();
        for t in 0..b.steps {
            let s: f64 = b.increments.iter().map(|p| p[t]).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn lk_degenerate_cases_exact() {
        let mut rng = stream_rng(6, 0);
        let b1 = sample_bundle(1, 100, 1.0, BundleMode::Independent, &mut rng).unwrap();
        let got = l_k(&b1, 1.0, 1).unwrap();
        // m = 1: the single forced path collects every increment.
        assert!((got - b1.terminal(0)).abs() < 1e-12);

        let b = sample_bundle(3, 100, 1.0, BundleMode::Independent, &mut rng).unwrap();
        let got = l_k(&b, 1.0, 3).unwrap();
        let want: f64 = (0..3).map(|j| b.terminal(j)).sum();
        assert!((got - want).abs() < 1e-10);

        assert_eq!(l_k(&b, 0.0, 1).unwrap(), 0.0);
        assert!(l_k(&b, 1.0, 4).is_err());
        assert!(l_k(&b, 2.0, 1).is_err());
    }

    #[test]
    fn lk_partial_horizon_uses_prefix() {
        let mut rng = stream_rng(7, 0);
        let b = sample_bundle(1, 100, 2.0, BundleMode::Independent, &mut rng).unwrap();
        let got = l_k(&b, 1.0, 1).unwrap();
        assert!((got - b.value(0, 100)).abs() < 1e-12);
    }

    #[test]
    fn lk_grid_refinement_monotone() {
        // Coarsen a fine realization by merging adjacent increments; the
        // coarse breakpoint set is a subset, so the sup cannot grow.
        for trial in 0..20u64 {
            let mut r = stream_rng(8, 100 + trial);
            let fine = sample_bundle(3, 64, 1.0, BundleMode::Independent, &mut r).unwrap();
            let coarse_inc: Vec<Vec<f64>> = fine
                .increments
                .iter()
                .map(|p| p.chunks(2).map(|c| c.iter().sum()).collect())
                .collect();
            let coarse = BrownianBundle {
                m: 3,
                step: fine.step * 2.0,
                horizon: 1.0,
                steps: fine.steps / 2,
                mode: BundleMode::Independent,
                increments: coarse_inc,
            };
            for k in 1..=3 {
                let lo = l_k(&coarse, 1.0, k).unwrap();
                let hi = l_k(&fine, 1.0, k).unwrap();
                assert!(lo <= hi + 1e-12, "trial {trial} k {k}: {lo} > {hi}");
            }
        }
    }

    #[test]
    fn lk_scaling_in_time() {
        // L_1(4, m) / 2 matches L_1(1, m) in law.
        let n = 4000;
        let mut long = Vec::with_capacity(n);
        let mut short = Vec::with_capacity(n);
        for i in 0..n as u64 {
            let mut r1 = stream_rng(9, i);
            let b4 = sample_bundle(4, 1000, 4.0, BundleMode::Independent, &mut r1).unwrap();
            long.push(l_k(&b4, 4.0, 1).unwrap() / 2.0);
            let mut r2 = stream_rng(10, i);
            let b1 = sample_bundle(4, 1000, 1.0, BundleMode::Independent, &mut r2).unwrap();
            short.push(l_k(&b1, 1.0, 1).unwrap());
        }
        let ks = ks_two_sample(
            &EmpiricalDistribution::new(long).unwrap(),
            &EmpiricalDistribution::new(short).unwrap(),
        )
        .unwrap();
        assert!(ks.d <= 0.05, "D = {}", ks.d);
    }

    #[test]
    fn d1_is_standard_normal() {
        let n = 10_000;
        let mut rng = stream_rng(11, 0);
        let sample: Vec<f64> = (0..n).map(|_| d_k(1, 16, &mut rng).unwrap()).collect();
        let mut r2 = stream_rng(11, 1);
        let normals: Vec<f64> =
            (0..100_000).map(|_| StandardNormal.sample(&mut r2)).collect();
        let ks = ks_two_sample(
            &EmpiricalDistribution::new(sample).unwrap(),
            &EmpiricalDistribution::new(normals).unwrap(),
        )
        .unwrap();
        assert!(ks.d <= 0.02, "D = {}", ks.d);
    }

    #[test]
    fn dk_dominates_boundary_paths() {
        for trial in 0..50u64 {
            let mut rng = stream_rng(12, trial);
            let k = 3;
            let steps = 32;
            let sd = (1.0 / steps as f64).sqrt();
            let inc: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    (0..steps).map(|_| sample_normal(&mut rng) * sd).collect()
                })
                .collect();
            let d = d_k_from_increments(&inc).unwrap();
            let first: f64 = inc[0].iter().sum();
            let last: f64 = inc[k - 1].iter().sum();
            assert!(d >= first.max(last) - 1e-12);
        }
    }

    #[test]
    fn dk_brute_force_small_grid() {
        // Exhaustive breakpoints for k = 2 on a short grid.
        let mut rng = stream_rng(13, 0);
        for _ in 0..30 {
            let steps = 6;
            let inc: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..steps).map(|_| sample_normal(&mut rng)).collect())
                .collect();
            let b = |p: usize, t: usize| -> f64 { inc[p][..t].iter().sum() };
            let mut brute = f64::NEG_INFINITY;
            for t1 in 0..=steps {
                let v = b(0, t1) + (b(1, steps) - b(1, t1));
                brute = brute.max(v);
            }
            let got = d_k_from_increments(&inc).unwrap();
            assert!((got - brute).abs() < 1e-12, "{got} vs {brute}");
        }
    }

    #[test]
    fn nonuniform_params() {
        assert!(NonUniformLimitParams::new(0, 0.1).is_err());
        assert!(NonUniformLimitParams::new(3, 0.5).is_err());
        assert!(NonUniformLimitParams::new(3, 0.0).is_err());
        let p = NonUniformLimitParams::new(4, 0.25).unwrap();
        assert!((p.coefficient() + 0.25).abs() < 1e-12);
        let q = NonUniformLimitParams::new(2, 0.18).unwrap();
        assert!((q.coefficient() - ((1.0f64 - 0.36).sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn v1_limit_k1_variance() {
        // k = 1 collapses to sqrt(1 - p_max) * B(1).
        let p = NonUniformLimitParams::new(1, 0.3).unwrap();
        let n = 100_000;
        let mut rng = stream_rng(14, 0);
        let mut sq = 0.0;
        for _ in 0..n {
            let v = v1_limit_nonuniform(&p, 4, &mut rng).unwrap();
            sq += v * v;
        }
        let var = sq / n as f64;
        assert!((var - 0.7).abs() < 0.05 * 0.7, "var {var}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn lk_dominates_constant_path_families(seed in 0u64..500) {
            // Paths pinned to their leftmost (or rightmost) admissible
            // columns are feasible, so their totals bound L_k from below.
            let mut rng = stream_rng(seed, 0);
            let m = 4;
            let b = sample_bundle(m, 32, 1.0, BundleMode::Independent, &mut rng).unwrap();
            for k in 1..=m {
                let v = l_k(&b, 1.0, k).unwrap();
                let left: f64 = (0..k).map(|j| b.terminal(j)).sum();
                let right: f64 = (m - k..m).map(|j| b.terminal(j)).sum();
                prop_assert!(v >= left.max(right) - 1e-12);
            }
        }
    }
}
