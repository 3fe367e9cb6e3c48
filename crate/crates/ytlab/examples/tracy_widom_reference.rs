//! # Empirical Tracy-Widom reference
//!
//! Samples the scaled top eigenvalue m^{1/6} (lambda_max - 2 sqrt(m)) of the
//! GUE at a large matrix size and prints quantiles of the empirical law.
//! Doubling the matrix size barely moves the quantiles, which is the
//! self-consistency check the laboratory's KS thresholds are calibrated
//! against.

use ytlab::randmat::tw_reference;
use ytlab::stats::{ks_two_sample, quantiles, EmpiricalDistribution};

fn main() -> ytlab::Result<()> {
    let qs = [0.05, 0.25, 0.5, 0.75, 0.95];
    let mut samples = Vec::new();
    for m_ref in [100, 200, 400] {
        let reference = tw_reference(m_ref, 4000, 7, 0)?;
        let values: Vec<f64> = reference.rows().iter().map(|r| r[0]).collect();
        let dist = EmpiricalDistribution::new(values)?;
        let quants = quantiles(&dist, &qs)?;
        println!("m_ref = {m_ref:3}: quantiles {quants:.3?}");
        samples.push(dist);
    }
    let ks = ks_two_sample(&samples[1], &samples[2])?;
    println!("KS(m_ref=200, m_ref=400): D = {:.4}, p = {:.3}", ks.d, ks.p_approx);
    Ok(())
}
