//! Empirical distributions, two-sample Kolmogorov-Smirnov machinery,
//! quantiles, and the strong-approximation rate functional for Bernoulli
//! variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted sample.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample value".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalDistribution { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Two-sample KS result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsResult {
    /// Sup distance between the two empirical CDFs.
    pub d: f64,
    /// Asymptotic p-value.
    pub p_approx: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Sup distance between two empirical CDFs by sorted merge, with the
/// asymptotic Kolmogorov p-value at effective size `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS needs nonempty samples".into()));
    }
    let (xs, ys) = (a.values(), b.values());
    let (n1, n2) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        // Consume every copy of the smaller value on both sides, then
        // measure the CDF gap just past it.
        let t = xs[i].min(ys[j]);
        while i < n1 && xs[i] == t {
            i += 1;
        }
        while j < n2 && ys[j] == t {
            j += 1;
        }
        let diff = (i as f64 / n1 as f64 - j as f64 / n2 as f64).abs();
        d = d.max(diff);
    }
    let n_eff = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let lambda = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    Ok(KsResult { d, p_approx: kolmogorov_sf(lambda), n1, n2 })
}

/// Survival function of the Kolmogorov distribution, series truncated at
/// 100 terms.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = j as f64;
        total += sign * (-2.0 * j * j * lambda * lambda).exp();
        sign = -sign;
    }
    (2.0 * total).clamp(0.0, 1.0)
}

/// Linear-interpolation quantiles.
pub fn quantiles(sample: &EmpiricalDistribution, qs: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("quantiles of empty sample".into()));
    }
    if qs.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::InvalidParameter("quantile outside [0, 1]".into()));
    }
    let v = sample.values();
    let n = v.len();
    Ok(qs
        .iter()
        .map(|&q| {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            v[lo] + (v[hi] - v[lo]) * frac
        })
        .collect())
}

/// The exponential-moment rate functional
/// `sup { l > 0 : l E[|X - EX|^3 exp(l |X - EX|)] <= E[|X - EX|^2] }`
/// for `X ~ Bernoulli(p)`, evaluated in closed form over the two atoms and
/// solved by bisection to 1e-9.
pub fn lambda_bernoulli(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter("p must be in (0, 1)".into()));
    }
    // |X - p| is 1-p with probability p and p with probability 1-p.
    let m2 = p * (1.0 - p);
    let residual = |l: f64| -> f64 {
        let m3e = p * (1.0 - p).powi(3) * (l * (1.0 - p)).exp() + (1.0 - p) * p.powi(3) * (l * p).exp();
        l * m3e - m2
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while residual(hi) < 0.0 {
        hi *= 2.0;
        if hi > 64.0 {
            break;
        }
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Constants of the strong-approximation tail bound assembled from the
/// Bernoulli rate functional at `p = 1/m`. The leading absolute constant
/// multiplying the exponent is unknown, so the first constant is exposed
/// only as a ratio to it.
#[derive(Debug, Clone, Copy)]
pub struct KmtConstants {
    /// Rate functional of the centered (unscaled) indicator.
    pub lambda_centered: f64,
    /// Rate functional of the standardized indicator:
    /// `sigma * lambda_centered`.
    pub lambda_standardized: f64,
    /// `lambda_standardized * Var^{1/2}`, and the standardized variance
    /// is 1.
    pub c2: f64,
    /// `c1` divided by the unknown absolute factor.
    pub c1_over_c3: f64,
}

pub fn kmt_constants(m: usize) -> Result<KmtConstants> {
    if m < 2 {
        return Err(Error::InvalidParameter("need an alphabet of at least 2 letters".into()));
    }
    let p = 1.0 / m as f64;
    let sigma = (p * (1.0 - p)).sqrt();
    let lambda_centered = lambda_bernoulli(p)?;
    let lambda_standardized = sigma * lambda_centered;
    Ok(KmtConstants {
        lambda_centered,
        lambda_standardized,
        c2: lambda_standardized,
        c1_over_c3: lambda_standardized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn emp(values: Vec<f64>) -> EmpiricalDistribution {
        EmpiricalDistribution::new(values).unwrap()
    }

    #[test]
    fn ks_identical_is_zero() {
        let a = emp(vec![3.0, 1.0, 2.0, 2.0]);
        let r = ks_two_sample(&a, &a.clone()).unwrap();
        assert_eq!(r.d, 0.0);
        assert!(r.p_approx > 0.99);
    }

    #[test]
    fn ks_disjoint_is_one() {
        let a = emp(vec![0.0, 1.0, 2.0]);
        let b = emp(vec![10.0, 11.0]);
        assert_eq!(ks_two_sample(&a, &b).unwrap().d, 1.0);
    }

    #[test]
    fn ks_rejects_empty() {
        let a = emp(vec![1.0]);
        let e = EmpiricalDistribution::new(vec![]).unwrap();
        assert!(ks_two_sample(&a, &e).is_err());
    }

    #[test]
    fn ks_two_normal_samples_close() {
        let mut rng = stream_rng(5, 0);
        let a: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = ks_two_sample(&emp(a), &emp(b)).unwrap();
        // Asymptotic critical value at alpha = 0.001 is about 1.95 sqrt(2/N).
        assert!(r.d < 0.03, "D = {}", r.d);
    }

    #[test]
    fn ks_small_exact() {
        // CDF of {1,2} vs {1.5}: the gap is 1/2 on either side of 1.5.
        let r = ks_two_sample(&emp(vec![1.0, 2.0]), &emp(vec![1.5])).unwrap();
        assert_eq!(r.d, 0.5);
        // {1,3} vs {2,4}: gap alternates by 1/2.
        let r2 = ks_two_sample(&emp(vec![1.0, 3.0]), &emp(vec![2.0, 4.0])).unwrap();
        assert_eq!(r2.d, 0.5);
    }

    #[test]
    fn quantile_examples() {
        let s = emp(vec![1.0, 2.0, 3.0]);
        assert_eq!(quantiles(&s, &[0.5]).unwrap(), vec![2.0]);
        assert_eq!(quantiles(&s, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(quantiles(&emp(vec![0.0, 10.0]), &[0.25]).unwrap(), vec![2.5]);
        assert!(quantiles(&s, &[1.5]).is_err());
    }

    #[test]
    fn lambda_half_known_root() {
        // p = 1/2: condition reduces to l e^{l/2} <= 2.
        let l = lambda_bernoulli(0.5).unwrap();
        assert!((l * (l / 2.0).exp() - 2.0).abs() < 1e-7, "l = {l}");
        assert!((l - 1.13).abs() < 0.01);
    }

    #[test]
    fn lambda_in_bracket() {
        for m in [2usize, 10, 100, 10_000] {
            let l = lambda_bernoulli(1.0 / m as f64).unwrap();
            assert!((0.5..=2.0).contains(&l), "m = {m}, lambda = {l}");
        }
        assert!(lambda_bernoulli(0.0).is_err());
        assert!(lambda_bernoulli(1.0).is_err());
    }

    #[test]
    fn lambda_scaling_identity() {
        // Solve the standardized problem directly and compare against
        // sigma * lambda_centered.
        for m in [2usize, 5, 40] {
            let p = 1.0 / m as f64;
            let sigma = (p * (1.0 - p)).sqrt();
            // |X~| atoms: (1-p)/sigma w.p. p, p/sigma w.p. 1-p.
            let (a, b) = ((1.0 - p) / sigma, p / sigma);
            let m2 = p * a * a + (1.0 - p) * b * b;
            let residual = |l: f64| {
                l * (p * a.powi(3) * (l * a).exp() + (1.0 - p) * b.powi(3) * (l * b).exp()) - m2
            };
            let mut lo = 0.0;
            let mut hi = 8.0;
            while hi - lo > 1e-11 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let direct = 0.5 * (lo + hi);
            let scaled = sigma * lambda_bernoulli(p).unwrap();
            assert!((direct - scaled).abs() < 1e-8, "m = {m}: {direct} vs {scaled}");
        }
    }

    #[test]
    fn kmt_examples() {
        let k = kmt_constants(2).unwrap();
        assert_eq!(k.c2, k.lambda_standardized);
        assert!((k.c2 - 0.565).abs() < 0.01, "c2 = {}", k.c2);
        assert!(kmt_constants(1).is_err());

        for m in [4usize, 100, 10_000] {
            let k = kmt_constants(m).unwrap();
            let scaled = k.c2 * (m as f64).sqrt();
            assert!((0.4..=2.1).contains(&scaled), "m = {m}: {scaled}");
        }
    }

    #[test]
    fn sqrt_m_lambda_standardized_bounded() {
        let mut m = 2usize;
        while m <= 100_000 {
            let p = 1.0 / m as f64;
            let sigma = (p * (1.0 - p)).sqrt();
            let v = (m as f64).sqrt() * sigma * lambda_bernoulli(p).unwrap();
            assert!((0.3..=2.1).contains(&v), "m = {m}: {v}");
            m *= 3;
        }
    }

    proptest! {
        #[test]
        fn ks_symmetric(
            a in proptest::collection::vec(-50i32..50, 1..40),
            b in proptest::collection::vec(-50i32..50, 1..40),
        ) {
            let a = emp(a.into_iter().map(f64::from).collect());
            let b = emp(b.into_iter().map(f64::from).collect());
            let r1 = ks_two_sample(&a, &b).unwrap();
            let r2 = ks_two_sample(&b, &a).unwrap();
            prop_assert_eq!(r1.d, r2.d);
        }

        #[test]
        fn ks_matches_grid_evaluation(
            a in proptest::collection::vec(-20i32..20, 1..30),
            b in proptest::collection::vec(-20i32..20, 1..30),
        ) {
            // Independent oracle: evaluate both CDFs on the union grid.
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let mut grid: Vec<f64> = a.iter().chain(b.iter()).cloned().collect();
            grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
            let brute = grid
                .iter()
                .map(|&x| (cdf(&a, x) - cdf(&b, x)).abs())
                .fold(0.0f64, f64::max);
            let r = ks_two_sample(&emp(a), &emp(b)).unwrap();
            prop_assert!((r.d - brute).abs() < 1e-12);
        }

        #[test]
        fn lambda_residual_single_sign_change(p in 0.01f64..0.99) {
            let l = lambda_bernoulli(p).unwrap();
            let m2 = p * (1.0 - p);
            let residual = |l: f64| {
                l * (p * (1.0 - p).powi(3) * (l * (1.0 - p)).exp()
                    + (1.0 - p) * p.powi(3) * (l * p).exp())
                    - m2
            };
            prop_assert!(residual((l - 1e-6).max(1e-9)) < 0.0);
            prop_assert!(residual(l + 1e-6) > 0.0);
        }
    }
}
