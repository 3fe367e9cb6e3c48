//! Generic real-weight nested-path last-passage engine, the restricted
//! maximum over most-probable letters, and the error-control machinery
//! (sign-walk recursion and Monte Carlo gap estimation).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{sample_word, LetterDistribution, Word};
use crate::rng::domain;
use crate::rsk::lis;

/// Real weights, `n` rows (time) by `m` columns (letter / path channel),
/// row-major.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    pub n: usize,
    pub m: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n: usize, m: usize, w: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one column".into()));
        }
        if w.len() != n * m {
            return Err(Error::InvalidParameter(format!(
                "weight buffer has {} entries, expected {}",
                w.len(),
                n * m
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        Ok(WeightMatrix { n, m, w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(1, Vec::len);
        let mut w = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::InvalidParameter("ragged weight rows".into()));
            }
            w.extend_from_slice(row);
        }
        WeightMatrix::new(n, m.max(1), w)
    }

    /// Indicator weights of a word restricted to the given columns, in the
    /// order given.
    pub fn from_word_columns(word: &Word, columns: &[usize]) -> Result<Self> {
        let n = word.n();
        let m = columns.len();
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one column".into()));
        }
        let mut w = vec![0.0; n * m];
        for (i, &letter) in word.letters.iter().enumerate() {
            if let Some(c) = columns.iter().position(|&j| j == letter as usize) {
                w[i * m + c] = 1.0;
            }
        }
        WeightMatrix::new(n, m, w)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.m + j]
    }
}

/// Single-path maximum: best split `0 = l_0 <= ... <= l_m = n` of the rows
/// among the columns, column `j` collecting rows `(l_{j-1}, l_j]`.
/// `O(n m)` dynamic program. On a word's occupancy indicators this is the
/// top-row length `V_1`.
pub fn lpp1(weights: &WeightMatrix) -> f64 {
    let m = weights.m;
    // dp[j] = best value with the path currently in column j.
    let mut dp = vec![f64::NEG_INFINITY; m];
    dp[0] = 0.0;
    for i in 0..weights.n {
        // Each row is charged to exactly one column: take the prefix max
        // of the previous row before adding this row's weight.
        let mut best = f64::NEG_INFINITY;
        for j in 0..m {
            if dp[j] > best {
                best = dp[j];
            }
            dp[j] = best + weights.at(i, j);
        }
    }
    dp.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Exact maximum over `k` non-intersecting paths: path `j` sweeps columns
/// `j..=m-k+j`, weakly right-moving over rows, strictly right of path
/// `j-1` in every row, so no cell is collected twice.
///
/// Dynamic program over the joint column positions of all paths; the state
/// count times the row count is guarded at `1e8`.
pub fn lppk(weights: &WeightMatrix, k: usize) -> Result<f64> {
    let (n, m) = (weights.n, weights.m);
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("k = {k} out of range for m = {m} columns")));
    }
    if k == 1 {
        return Ok(lpp1(weights));
    }
    // Valid states: c_1 < c_2 < ... < c_k with c_j in [j, m-k+j]
    // (1-based columns).
    let state_count = count_states(k, m);
    let cost = state_count * n.max(1) as f64 * k as f64;
    if cost > 1e8 {
        return Err(Error::SizeGuard(format!(
            "about {state_count:.3e} states x {n} rows exceeds the tuple-DP guard"
        )));
    }
    let mut states: Vec<Vec<usize>> = Vec::new();
    let mut stack = vec![0usize; k];
    build_states(&mut states, &mut stack, 0, k, m);
    let index = |c: &[usize]| -> usize { states.binary_search_by(|s| s.as_slice().cmp(c)).unwrap() };
    // Predecessor links: lowering coordinate j by one.
    let mut down: Vec<Vec<Option<usize>>> = Vec::with_capacity(states.len());
    for s in &states {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            if s[j] > j + 1 && (j == 0 || s[j] - 1 > s[j - 1]) {
                let mut t = s.clone();
                t[j] -= 1;
                row.push(Some(index(&t)));
            } else {
                row.push(None);
            }
        }
        down.push(row);
    }

    let start = index(&(1..=k).collect::<Vec<_>>());
    let mut dp = vec![f64::NEG_INFINITY; states.len()];
    dp[start] = 0.0;
    for i in 0..n {
        // Relax paths rightward: coordinate k-1 down to 0; states are in
        // lexicographic order, so scanning ascending visits lower values of
        // every coordinate first.
        for j in (0..k).rev() {
            for s in 0..states.len() {
                if let Some(p) = down[s][j] {
                    if dp[p] > dp[s] {
                        dp[s] = dp[p];
                    }
                }
            }
        }
        for (s, state) in states.iter().enumerate() {
            if dp[s] > f64::NEG_INFINITY {
                let gain: f64 = state.iter().map(|&c| weights.at(i, c - 1)).sum();
                dp[s] += gain;
            }
        }
    }
    Ok(dp.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Number of valid joint-position tuples, without materializing them.
fn count_states(k: usize, m: usize) -> f64 {
    // cnt[c] = tuples for paths 1..=j with c_j = c (1-based columns).
    let mut cnt = vec![0.0f64; m + 2];
    for c in 1..=(m - k + 1) {
        cnt[c] = 1.0;
    }
    for j in 2..=k {
        let mut next = vec![0.0f64; m + 2];
        let mut prefix = 0.0;
        for c in 1..=m {
            if c >= j && c <= m - k + j {
                next[c] = prefix;
            }
            prefix += cnt[c];
        }
        cnt = next;
    }
    cnt.iter().sum()
}

fn build_states(states: &mut Vec<Vec<usize>>, stack: &mut Vec<usize>, j: usize, k: usize, m: usize) {
    if j == k {
        states.push(stack.clone());
        return;
    }
    let lo = (j + 1).max(if j > 0 { stack[j - 1] + 1 } else { 0 });
    let hi = m - k + j + 1;
    for c in lo..=hi {
        stack[j] = c;
        build_states(states, stack, j + 1, k, m);
    }
    stack[j] = 0;
}

/// Restricted top-row maximum: the single-path split forced to spend no
/// rows on letters outside the most-probable set. Zero when no maximal
/// letter occurs in the word.
pub fn v1_prime(word: &Word, dist: &LetterDistribution) -> usize {
    let columns = dist.max_set();
    let weights = WeightMatrix::from_word_columns(word, columns)
        .expect("max set is nonempty by construction");
    lpp1(&weights).round() as usize
}

/// Parameters of the ±1/0 sign walk controlling the `V_1 - V_1'` gap.
#[derive(Debug, Clone, Copy)]
pub struct ErrorControlParams {
    pub p_max: f64,
    pub p_2nd: f64,
    pub n: usize,
}

impl ErrorControlParams {
    pub fn new(p_max: f64, p_2nd: f64, n: usize) -> Result<Self> {
        if !(p_2nd > 0.0 && p_2nd < p_max && p_max < 1.0) {
            return Err(Error::InvalidParameter(
                "need 0 < p_2nd < p_max < 1 for the sign walk".into(),
            ));
        }
        Ok(ErrorControlParams { p_max, p_2nd, n })
    }

    /// Up-step probability of the conditional Rademacher walk.
    pub fn p_star(&self) -> f64 {
        self.p_2nd / (self.p_2nd + self.p_max)
    }

    pub fn q_star(&self) -> f64 {
        1.0 - self.p_star()
    }
}

/// `E[(max_{1<=k<=l} sum_{i<=k} Y_i)^+]` for a ±1 walk with up-probability
/// `p_star`, at fixed length `l`, via the barrier recursion
/// `u_{l,k} = q u_{l-1,k+1} + p u_{l-1,k-1}`, `u_{l,0} = q u_{l-1,1}`,
/// `u_{l,k} = 1` for `k >= l`. The expectation is `l - sum_k u_{l,k}`.
pub fn walk_plus_expectation_fixed(p_star: f64, len: usize) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let q = 1.0 - p_star;
    // u[k] = u_{l,k} for k in 0..len; entries k >= l are 1.
    let mut u = vec![1.0; len + 1];
    for l in 1..=len {
        let mut next = vec![1.0; len + 1];
        next[0] = q * u[1];
        for k in 1..l {
            next[k] = q * u[k + 1] + p_star * u[k - 1];
        }
        u = next;
    }
    let big_u: f64 = u[..len].iter().sum();
    len as f64 - big_u
}

/// `gamma_n`: the walk expectation mixed over a binomial walk length
/// `l ~ B(n, p_max + p_2nd)`. Bounded above by `n * p_2nd`.
///
/// The binomial sum is exact for `n <= 10^4` and truncated to a 12-sigma
/// window beyond that.
pub fn walk_plus_expectation(params: &ErrorControlParams) -> f64 {
    let n = params.n;
    let p_e = params.p_max + params.p_2nd;
    let (lo, hi) = if n <= 10_000 {
        (0usize, n)
    } else {
        let mean = n as f64 * p_e;
        let sd = (n as f64 * p_e * (1.0 - p_e)).sqrt();
        let lo = (mean - 12.0 * sd).floor().max(0.0) as usize;
        let hi = (mean + 12.0 * sd).ceil().min(n as f64) as usize;
        (lo, hi)
    };

    let p_star = params.p_star();
    let q = 1.0 - p_star;
    let len_max = hi;
    // One sweep of the barrier recursion, accumulating l - U_l for every l.
    let mut excess = vec![0.0; len_max + 1];
    let mut u = vec![1.0; len_max + 2];
    for l in 1..=len_max {
        let mut next = vec![1.0; len_max + 2];
        next[0] = q * u[1];
        for k in 1..l {
            next[k] = q * u[k + 1] + p_star * u[k - 1];
        }
        u = next;
        let big_u: f64 = u[..l].iter().sum();
        excess[l] = l as f64 - big_u;
    }

    // Binomial weights over the window, computed by log-pmf for stability.
    let mut total = 0.0;
    for l in lo..=hi {
        total += binomial_pmf(n, l, p_e) * excess.get(l).copied().unwrap_or(0.0);
    }
    total
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let (n_f, k_f) = (n as f64, k as f64);
    // ln(1-p) via ln_1p keeps the tail factor accurate for tiny p.
    let log_pmf = ln_choose(n_f, k_f) + k_f * p.ln() + (n_f - k_f) * (-p).ln_1p();
    log_pmf.exp()
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Lanczos log-gamma, good to ~1e-13 relative for positive arguments.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct GapEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Per-sample values of `V_1 - V_1'` over fresh words. Every entry is a
/// non-negative integer.
pub fn gap_samples(
    dist: &LetterDistribution,
    n: usize,
    n_samples: usize,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<f64>> {
    if dist.p_2nd().is_none() {
        return Err(Error::DegenerateInput(
            "all letters are maximal, the gap is identically zero".into(),
        ));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    Ok((0..n_samples)
        .into_par_iter()
        .map(|i| {
            let word = sample_word(dist, n, seed, stream_base + domain::SAMPLES + i as u64);
            let v1 = lis(&word);
            let v1p = v1_prime(&word, dist);
            debug_assert!(v1 >= v1p);
            (v1 - v1p) as f64
        })
        .collect())
}

/// Monte Carlo estimate of `E[V_1 - V_1']` by sampling words directly.
pub fn gap_mc(
    dist: &LetterDistribution,
    n: usize,
    n_samples: usize,
    seed: u64,
    stream_base: u64,
) -> Result<GapEstimate> {
    let gaps = gap_samples(dist, n, n_samples, seed, stream_base)?;
    let mean = gaps.iter().sum::<f64>() / n_samples as f64;
    let var =
        gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n_samples as f64 - 1.0).max(1.0);
    Ok(GapEstimate { mean, std_error: (var / n_samples as f64).sqrt(), samples: n_samples })
}
