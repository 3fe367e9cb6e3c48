//! Letter distributions, growth schedules, word sampling and occupancy
//! extraction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Probability distribution over an ordered alphabet of size `m`.
///
/// Probabilities are stored sorted non-increasing together with the
/// permutation back to letter order, so the largest probability, the second
/// largest and the set of maximal letters fall out structurally.
/// Membership in the maximal set uses exact float equality: distributions
/// are built from exact inputs and the multiplicity of the maximum is a
/// structural quantity, not a numeric one.
#[derive(Debug, Clone)]
pub struct LetterDistribution {
    m: usize,
    /// Sorted non-increasing.
    probs: Vec<f64>,
    /// `perm[slot]` = letter index occupying sorted slot.
    perm: Vec<usize>,
    p_max: f64,
    /// Absent iff all probabilities are equal.
    p_2nd: Option<f64>,
    /// Letter indices with probability `p_max`, increasing.
    max_set: Vec<usize>,
    sigma2: f64,
    /// Cumulative letter-order probabilities, for inverse-CDF sampling.
    cum: Vec<f64>,
}

impl LetterDistribution {
    fn from_letter_probs(letter_probs: Vec<f64>) -> Result<Self> {
        let m = letter_probs.len();
        if m == 0 {
            return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
        }
        let total: f64 = letter_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        if letter_probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter("probability outside [0, 1]".into()));
        }
        let mut perm: Vec<usize> = (0..m).collect();
        // Stable sort: ties keep letter order.
        perm.sort_by(|&a, &b| letter_probs[b].partial_cmp(&letter_probs[a]).unwrap());
        let probs: Vec<f64> = perm.iter().map(|&j| letter_probs[j]).collect();
        let p_max = probs[0];
        let p_2nd = probs.iter().find(|&&p| p < p_max).copied();
        let mut max_set: Vec<usize> = (0..m).filter(|&j| letter_probs[j] == p_max).collect();
        max_set.sort_unstable();
        let sigma2 = p_max * (1.0 - p_max);
        let mut cum = Vec::with_capacity(m);
        let mut acc = 0.0;
        for &p in &letter_probs {
            acc += p;
            cum.push(acc);
        }
        cum[m - 1] = 1.0;
        Ok(LetterDistribution { m, probs, perm, p_max, p_2nd, max_set, sigma2, cum })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Probabilities sorted non-increasing.
    pub fn sorted_probs(&self) -> &[f64] {
        &self.probs
    }

    /// Letter occupying sorted slot `i`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn prob_of_letter(&self, letter: usize) -> f64 {
        let slot = self.perm.iter().position(|&j| j == letter).unwrap();
        self.probs[slot]
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn p_2nd(&self) -> Option<f64> {
        self.p_2nd
    }

    /// Letter indices attaining `p_max`, in increasing alphabet order.
    pub fn max_set(&self) -> &[usize] {
        &self.max_set
    }

    /// Multiplicity of the largest probability.
    pub fn k(&self) -> usize {
        self.max_set.len()
    }

    /// `p_max * (1 - p_max)`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn is_uniform(&self) -> bool {
        self.p_2nd.is_none()
    }
}

/// All `m` letters equally likely.
pub fn uniform_distribution(m: usize) -> Result<LetterDistribution> {
    if m == 0 {
        return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
    }
    let p = 1.0 / m as f64;
    let mut probs = vec![p; m];
    // Make the mass sum exactly 1 in floating point.
    let total: f64 = probs.iter().sum();
    probs[m - 1] += 1.0 - total;
    let mut d = LetterDistribution::from_letter_probs(probs)?;
    // Rounding must not split the maximal set in the uniform case.
    d.probs = vec![p; m];
    d.p_max = p;
    d.p_2nd = None;
    d.max_set = (0..m).collect();
    d.sigma2 = p * (1.0 - p);
    Ok(d)
}

/// `k` letters at `p_max` followed by the given tail letters.
pub fn nonuniform_distribution(k: usize, p_max: f64, tail: &[f64]) -> Result<LetterDistribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p_max) || p_max == 0.0 {
        return Err(Error::InvalidParameter("p_max must be in (0, 1]".into()));
    }
    if tail.iter().any(|&t| t >= p_max) {
        return Err(Error::InvalidParameter("tail entry >= p_max".into()));
    }
    if tail.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("negative tail entry".into()));
    }
    let total = k as f64 * p_max + tail.iter().sum::<f64>();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "mass mismatch: k*p_max + sum(tail) = {total}"
        )));
    }
    let mut probs = vec![p_max; k];
    probs.extend_from_slice(tail);
    LetterDistribution::from_letter_probs(probs)
}

/// Equal-mass tail: `tail_count` letters sharing all mass not held by the
/// `k` maximal letters.
pub fn equal_tail_distribution(k: usize, p_max: f64, tail_count: usize) -> Result<LetterDistribution> {
    let tail_mass = 1.0 - k as f64 * p_max;
    if tail_mass < -1e-12 {
        return Err(Error::InvalidParameter("k * p_max > 1".into()));
    }
    if tail_count == 0 {
        if tail_mass.abs() > 1e-12 {
            return Err(Error::InvalidParameter("nonzero tail mass with no tail letters".into()));
        }
        return nonuniform_distribution(k, p_max, &[]);
    }
    let t = tail_mass / tail_count as f64;
    nonuniform_distribution(k, p_max, &vec![t; tail_count])
}

/// Distribution spec as accepted on the wire / CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    Uniform { uniform: usize },
    NonUniform { k: usize, p_max: f64, tail: Vec<f64> },
}

impl DistSpec {
    pub fn build(&self) -> Result<LetterDistribution> {
        match self {
            DistSpec::Uniform { uniform } => uniform_distribution(*uniform),
            DistSpec::NonUniform { k, p_max, tail } => nonuniform_distribution(*k, *p_max, tail),
        }
    }
}

/// A sampled word: letter indices in `[0, m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub letters: Vec<u32>,
}

impl Word {
    pub fn n(&self) -> usize {
        self.letters.len()
    }
}

/// Draw `n` i.i.d. letters; reproducible per `(seed, stream)`.
pub fn sample_word(dist: &LetterDistribution, n: usize, seed: u64, stream: u64) -> Word {
    let mut rng = stream_rng(seed, stream);
    sample_word_with(dist, n, &mut rng)
}

pub fn sample_word_with<R: Rng>(dist: &LetterDistribution, n: usize, rng: &mut R) -> Word {
    let letters = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let j = dist.cum.partition_point(|&c| c <= u);
            j.min(dist.m - 1) as u32
        })
        .collect();
    Word { letters }
}

/// Indicator matrix of a word together with its running column sums.
#[derive(Debug, Clone)]
pub struct OccupancyMatrix {
    pub n: usize,
    pub m: usize,
    /// `x[i][j] = 1` iff letter `i` equals `j`.
    pub x: Vec<Vec<u8>>,
    /// `s[k][j]` = occurrences of letter `j` among the first `k` letters;
    /// row 0 is all zeros.
    pub s: Vec<Vec<u32>>,
}

pub fn occupancy(word: &Word, m: usize) -> Result<OccupancyMatrix> {
    let n = word.n();
    if let Some(&bad) = word.letters.iter().find(|&&l| l as usize >= m) {
        return Err(Error::InvalidInput(format!("letter {bad} >= alphabet size {m}")));
    }
    let mut x = vec![vec![0u8; m]; n];
    let mut s = vec![vec![0u32; m]; n + 1];
    for (i, &l) in word.letters.iter().enumerate() {
        x[i][l as usize] = 1;
        let (head, tail) = s.split_at_mut(i + 1);
        tail[0].clone_from(&head[i]);
        tail[0][l as usize] += 1;
    }
    Ok(OccupancyMatrix { n, m, x, s })
}

/// Power law `n -> c * n^a * (log n)^b` with integer truncation where a
/// count is required.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PowerLaw {
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

impl PowerLaw {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        PowerLaw { a, b, c }
    }

    pub fn eval(&self, n: usize) -> f64 {
        let n = n as f64;
        self.c * n.powf(self.a) * n.ln().powf(self.b)
    }

    pub fn eval_count(&self, n: usize) -> usize {
        self.eval(n).floor().max(0.0) as usize
    }

    /// `self = o(other)` under exponent-and-log-exponent arithmetic.
    pub fn is_little_o_of(&self, other: &PowerLaw) -> bool {
        self.a < other.a || (self.a == other.a && self.b < other.b)
    }
}

/// Symbolic rules for how `(k, p_max, p_2nd)` scale with `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistRule {
    pub k: PowerLaw,
    pub p_max: PowerLaw,
    pub p_2nd: PowerLaw,
}

/// Alphabet growth schedule `n -> m(n)` plus optional distribution scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthSchedule {
    #[serde(flatten)]
    pub m_rule: PowerLaw,
    #[serde(default)]
    pub dist: Option<DistRule>,
    #[serde(default = "default_rows")]
    pub rows: usize,
}

fn default_rows() -> usize {
    1
}

impl GrowthSchedule {
    pub fn power(a: f64) -> Self {
        GrowthSchedule { m_rule: PowerLaw::new(a, 0.0, 1.0), dist: None, rows: 1 }
    }

    pub fn m_of(&self, n: usize) -> usize {
        self.m_rule.eval_count(n).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Simultaneous-limit shape fluctuations for uniform draws:
    /// requires `m(n) = o(n^{3/10} (log n)^{-3/5})`.
    Main,
    /// Non-uniform top-row fluctuations: requires the same growth bound on
    /// `k(m(n))` plus `p_2nd^2 n^{11/10} (log n)^{-1/5} = o(p_max)`.
    NonUniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub theorem: Theorem,
    pub conditions: Vec<ConditionCheck>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| !c.pass)
    }
}

/// Decide the asymptotic growth conditions symbolically.
pub fn validate_schedule(schedule: &GrowthSchedule, theorem: Theorem) -> Result<ValidationReport> {
    let bound = PowerLaw::new(0.3, -0.6, 1.0);
    let mut conditions = Vec::new();
    match theorem {
        Theorem::Main => {
            let pass = schedule.m_rule.is_little_o_of(&bound);
            conditions.push(ConditionCheck {
                name: "m-growth".into(),
                detail: format!(
                    "m(n) = n^{} (log n)^{} must be o(n^0.3 (log n)^-0.6)",
                    schedule.m_rule.a, schedule.m_rule.b
                ),
                pass,
            });
        }
        Theorem::NonUniform => {
            let dist = schedule.dist.as_ref().ok_or_else(|| {
                Error::UnsupportedRule(
                    "non-uniform validation needs exponent rules for (k, p_max, p_2nd)".into(),
                )
            })?;
            let k_pass = dist.k.is_little_o_of(&bound);
            conditions.push(ConditionCheck {
                name: "k-growth".into(),
                detail: format!(
                    "k(m(n)) = n^{} (log n)^{} must be o(n^0.3 (log n)^-0.6)",
                    dist.k.a, dist.k.b
                ),
                pass: k_pass,
            });
            // p_2nd^2 * n^{11/10} * (log n)^{-1/5} = o(p_max)
            let lhs = PowerLaw::new(2.0 * dist.p_2nd.a + 1.1, 2.0 * dist.p_2nd.b - 0.2, 1.0);
            let p_pass = lhs.is_little_o_of(&dist.p_max);
            conditions.push(ConditionCheck {
                name: "second-probability".into(),
                detail: format!(
                    "p_2nd^2 n^1.1 (log n)^-0.2 = n^{} (log n)^{} must be o(p_max = n^{} (log n)^{})",
                    lhs.a, lhs.b, dist.p_max.a, dist.p_max.b
                ),
                pass: p_pass,
            });
        }
    }
    let pass = conditions.iter().all(|c| c.pass);
    Ok(ValidationReport { theorem, conditions, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_basic() {
        let d = uniform_distribution(4).unwrap();
        assert_eq!(d.sorted_probs(), &[0.25; 4]);
        assert_eq!(d.k(), 4);
        assert_eq!(d.p_max(), 0.25);
        assert!(d.p_2nd().is_none());

        let d1 = uniform_distribution(1).unwrap();
        assert_eq!(d1.sorted_probs(), &[1.0]);
        assert_eq!(d1.k(), 1);

        assert!(uniform_distribution(0).is_err());
    }

    #[test]
    fn uniform_k_and_pmax_for_any_m() {
        for m in [1usize, 2, 3, 7, 100, 1000] {
            let d = uniform_distribution(m).unwrap();
            assert_eq!(d.k(), m);
            assert_eq!(d.p_max(), 1.0 / m as f64);
        }
    }

    #[test]
    fn nonuniform_basic() {
        let d = nonuniform_distribution(2, 0.3, &[0.2, 0.2]).unwrap();
        assert_eq!(d.m(), 4);
        assert_eq!(d.p_2nd(), Some(0.2));
        assert_eq!(d.max_set(), &[0, 1]);
        assert_eq!(d.sigma2(), 0.3 * 0.7);

        assert!(nonuniform_distribution(2, 0.3, &[0.5]).is_err());
        assert!(nonuniform_distribution(2, 0.3, &[0.1]).is_err());
    }

    #[test]
    fn pmax_bracket_holds() {
        for d in [
            uniform_distribution(5).unwrap(),
            nonuniform_distribution(2, 0.3, &[0.2, 0.2]).unwrap(),
            equal_tail_distribution(3, 0.2, 10).unwrap(),
        ] {
            let m = d.m() as f64;
            let k = d.k() as f64;
            assert!(1.0 / m <= d.p_max() + 1e-15);
            assert!(d.p_max() <= 1.0 / k + 1e-15);
            let sum: f64 = d.sorted_probs().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sample_word_edges() {
        let d = uniform_distribution(3).unwrap();
        assert_eq!(sample_word(&d, 0, 1, 0).n(), 0);
        let single = nonuniform_distribution(1, 1.0, &[]).unwrap();
        let w = sample_word(&single, 20, 1, 0);
        assert!(w.letters.iter().all(|&l| l == 0));
    }

    #[test]
    fn sample_word_deterministic() {
        let d = uniform_distribution(9).unwrap();
        assert_eq!(sample_word(&d, 500, 42, 7), sample_word(&d, 500, 42, 7));
        assert_ne!(sample_word(&d, 500, 42, 7), sample_word(&d, 500, 42, 8));
    }

    #[test]
    fn empirical_frequencies_uniform_m10() {
        let d = uniform_distribution(10).unwrap();
        let n = 100_000;
        let w = sample_word(&d, n, 123, 0);
        let mut counts = [0usize; 10];
        for &l in &w.letters {
            counts[l as usize] += 1;
        }
        let tol = 4.0 / (n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.1).abs() < tol);
        }
    }

    #[test]
    fn occupancy_example() {
        let w = Word { letters: vec![1, 0] };
        let occ = occupancy(&w, 2).unwrap();
        assert_eq!(occ.x, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(occ.s[2], vec![1, 1]);
        assert!(occupancy(&Word { letters: vec![2] }, 2).is_err());
    }

    #[test]
    fn schedule_examples() {
        let ok = GrowthSchedule::power(0.25);
        assert!(validate_schedule(&ok, Theorem::Main).unwrap().pass);

        // m(n) = n^0.3 fails: same polynomial exponent, log exponent 0 > -3/5.
        let bad = GrowthSchedule::power(0.3);
        assert!(!validate_schedule(&bad, Theorem::Main).unwrap().pass);

        let nonunif = GrowthSchedule {
            m_rule: PowerLaw::new(0.25, 0.0, 1.0),
            dist: Some(DistRule {
                k: PowerLaw::new(0.2, 0.0, 1.0),
                p_max: PowerLaw::new(-0.25, 0.0, 1.0),
                p_2nd: PowerLaw::new(-0.7, 0.0, 1.0),
            }),
            rows: 1,
        };
        let rep = validate_schedule(&nonunif, Theorem::NonUniform).unwrap();
        assert!(rep.pass, "{rep:?}");

        let missing = GrowthSchedule::power(0.2);
        assert!(matches!(
            validate_schedule(&missing, Theorem::NonUniform),
            Err(Error::UnsupportedRule(_))
        ));
    }

    #[test]
    fn schedule_monotone_in_a() {
        for a in [0.05, 0.1, 0.2, 0.29] {
            let s = GrowthSchedule::power(a);
            assert!(validate_schedule(&s, Theorem::Main).unwrap().pass);
        }
    }

    #[test]
    fn dist_spec_json() {
        let u: DistSpec = serde_json::from_str(r#"{"uniform": 6}"#).unwrap();
        assert_eq!(u.build().unwrap().m(), 6);
        let nu: DistSpec =
            serde_json::from_str(r#"{"k": 2, "p_max": 0.3, "tail": [0.2, 0.2]}"#).unwrap();
        assert_eq!(nu.build().unwrap().p_2nd(), Some(0.2));
    }

    proptest! {
        #[test]
        fn occupancy_rows_and_sums(letters in proptest::collection::vec(0u32..5, 0..60)) {
            let w = Word { letters };
            let occ = occupancy(&w, 5).unwrap();
            for row in &occ.x {
                prop_assert_eq!(row.iter().map(|&v| v as u32).sum::<u32>(), 1);
            }
            for j in 0..5 {
                let count = w.letters.iter().filter(|&&l| l as usize == j).count() as u32;
                prop_assert_eq!(occ.s[occ.n][j], count);
                for k in 1..=occ.n {
                    prop_assert!(occ.s[k][j] >= occ.s[k - 1][j]);
                }
            }
        }

        #[test]
        fn distribution_invariants(k in 1usize..5, tail_count in 0usize..6, frac in 0.1f64..0.9) {
            // p_max chosen so that k*p_max = frac when a tail exists.
            let p_max = if tail_count == 0 { 1.0 / k as f64 } else { frac / k as f64 };
            let d = equal_tail_distribution(k, p_max, tail_count);
            if let Ok(d) = d {
                let probs = d.sorted_probs();
                for w in probs.windows(2) {
                    prop_assert!(w[0] >= w[1]);
                }
                let sum: f64 = probs.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(1.0 / d.m() as f64 <= d.p_max() + 1e-15);
                prop_assert!(d.p_max() <= 1.0 / d.k() as f64 + 1e-15);
            }
        }
    }
}
