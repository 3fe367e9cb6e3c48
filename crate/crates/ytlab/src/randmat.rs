//! GUE and traceless-GUE spectra via the symmetric tridiagonal beta = 2
//! reduction, and empirical Tracy-Widom / partial-sum reference
//! distributions.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::EmpiricalDistribution;

/// One spectrum, sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    pub m: usize,
    pub traceless: bool,
}

impl SpectrumSample {
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn top(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Spectrum of an `m x m` GUE matrix with joint eigenvalue density
/// proportional to `prod_{i<j} (x_i - x_j)^2 prod_j exp(-x_j^2 / 2)`.
///
/// Sampled as the eigenvalues of the symmetric tridiagonal matrix with
/// standard-normal diagonal and sub-diagonal `chi_{2(m-i)} / sqrt(2)`,
/// which has the same spectral law at quadratic cost per sample.
pub fn sample_gue_spectrum(m: usize, rng: &mut impl Rng) -> Result<SpectrumSample> {
    if m == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut diag: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    // (chi_{2j} / sqrt(2))^2 ~ Gamma(j, 1).
    let mut off: Vec<f64> = (1..m)
        .rev()
        .map(|j| {
            let g: f64 = Gamma::new(j as f64, 1.0).unwrap().sample(rng);
            g.sqrt()
        })
        .collect();
    tridiagonal_eigenvalues(&mut diag, &mut off);
    diag.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(SpectrumSample { eigenvalues: diag, m, traceless: false })
}

/// Shift the spectrum by `-trace / m`.
pub fn make_traceless(mut spec: SpectrumSample) -> SpectrumSample {
    let shift = spec.trace() / spec.m as f64;
    for v in &mut spec.eigenvalues {
        *v -= shift;
    }
    spec.traceless = true;
    spec
}

/// Eigenvalues of a symmetric tridiagonal matrix, in place into `diag`,
/// by the implicit QL algorithm with Wilkinson shifts. `off` holds the
/// `n - 1` sub-diagonal entries and is destroyed.
pub fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut Vec<f64>) {
    let n = diag.len();
    if n <= 1 {
        return;
    }
    debug_assert_eq!(off.len(), n - 1);
    off.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                break;
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                f = (diag[i] - g) * s + 2.0 * c * b;
                p = s * f;
                diag[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

/// Empirical reference sample, `r` coordinates per draw, stored in
/// sample-index order.
#[derive(Debug, Clone)]
pub struct ReferenceDistribution {
    pub statistic: String,
    pub m_ref: usize,
    pub n: usize,
    pub r: usize,
    pub seed: u64,
    rows: Vec<Vec<f64>>,
}

/// JSON sidecar for a serialized reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceMetadata {
    pub statistic: String,
    pub m_ref: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub r: usize,
    pub seed: u64,
}

impl ReferenceDistribution {
    /// Rebuild from serialized parts (e.g. a disk cache).
    pub fn from_parts(meta: ReferenceMetadata, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != meta.n || rows.iter().any(|r| r.len() != meta.r) {
            return Err(Error::InvalidInput(format!(
                "reference shape mismatch: expected {} x {}, got {} rows",
                meta.n,
                meta.r,
                rows.len()
            )));
        }
        Ok(ReferenceDistribution {
            statistic: meta.statistic,
            m_ref: meta.m_ref,
            n: meta.n,
            r: meta.r,
            seed: meta.seed,
            rows,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Sorted marginal of coordinate `k` (0-based).
    pub fn marginal(&self, k: usize) -> Result<EmpiricalDistribution> {
        if k >= self.r {
            return Err(Error::InvalidParameter(format!(
                "coordinate {k} out of range for r = {}",
                self.r
            )));
        }
        EmpiricalDistribution::new(self.rows.iter().map(|row| row[k]).collect())
    }

    pub fn metadata(&self) -> ReferenceMetadata {
        ReferenceMetadata {
            statistic: self.statistic.clone(),
            m_ref: self.m_ref,
            n: self.n,
            r: self.r,
            seed: self.seed,
        }
    }

    /// CSV columns: `sample_id,k,value`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sample_id,k,value")?;
        for (id, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                writeln!(w, "{id},{},{v}", k + 1)?;
            }
        }
        Ok(())
    }
}

/// `N` samples of `m_ref^{1/6} (lambda_max - 2 sqrt(m_ref))`, the finite-m
/// surrogate for the Tracy-Widom law.
pub fn tw_reference(
    m_ref: usize,
    n_samples: usize,
    seed: u64,
    stream_base: u64,
) -> Result<ReferenceDistribution> {
    if m_ref < 50 {
        return Err(Error::InvalidParameter(format!(
            "reference dimension {m_ref} below the floor of 50"
        )));
    }
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "reference sample count {n_samples} below the floor of 100"
        )));
    }
    let scale = (m_ref as f64).powf(1.0 / 6.0);
    let edge = 2.0 * (m_ref as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, stream_base + i as u64);
            let spec = sample_gue_spectrum(m_ref, &mut rng).expect("m_ref >= 50");
            vec![scale * (spec.top() - edge)]
        })
        .collect();
    Ok(ReferenceDistribution {
        statistic: "tw".into(),
        m_ref,
        n: n_samples,
        r: 1,
        seed,
        rows,
    })
}

/// `N` vectors `(m_ref^{1/6} (sum_{i<=k} lambda_i - 2 k sqrt(m_ref)))_{k<=r}`:
/// the partial-sum pushforward of the scaled top-r spectrum.
pub fn fr_reference(
    m_ref: usize,
    r: usize,
    n_samples: usize,
    seed: u64,
    stream_base: u64,
) -> Result<ReferenceDistribution> {
    if r == 0 || r > m_ref {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= r <= m_ref, got r = {r}, m_ref = {m_ref}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("reference sample count must be >= 1".into()));
    }
    let scale = (m_ref as f64).powf(1.0 / 6.0);
    let step = 2.0 * (m_ref as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, stream_base + i as u64);
            let spec = sample_gue_spectrum(m_ref, &mut rng).expect("m_ref >= 1");
            let mut acc = 0.0;
            (0..r)
                .map(|k| {
                    acc += spec.eigenvalues[k];
                    scale * (acc - (k + 1) as f64 * step)
                })
                .collect()
        })
        .collect();
    Ok(ReferenceDistribution {
        statistic: "fr".into(),
        m_ref,
        n: n_samples,
        r,
        seed,
        rows,
    })
}
