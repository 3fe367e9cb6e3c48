//! # Brownian last-passage scaling
//!
//! The single-path Brownian functional L_1(s, m) scales like sqrt(s):
//! L_1(4, m) / 2 has the same law as L_1(1, m). The example samples both on
//! independent bundles and prints the two-sample KS distance, plus the
//! chained functional L_k for every k up to m on one exchangeable bundle
//! (L_m vanishes there because the bundle sums to zero pathwise).

use ytlab::brownian::{l_k, sample_bundle, BundleMode};
use ytlab::rng::{domain, stream_rng};
use ytlab::stats::{ks_two_sample, EmpiricalDistribution};

fn main() -> ytlab::Result<()> {
    let m = 4;
    let steps = 500;
    let samples = 2000;

    let mut long = Vec::with_capacity(samples);
    let mut unit = Vec::with_capacity(samples);
    for i in 0..samples as u64 {
        let mut rng = stream_rng(5, domain::SAMPLES + i);
        let bundle = sample_bundle(m, steps, 4.0, BundleMode::Independent, &mut rng)?;
        long.push(l_k(&bundle, 4.0, 1)? / 2.0);

        let mut rng = stream_rng(5, domain::AUXILIARY + i);
        let bundle = sample_bundle(m, steps, 1.0, BundleMode::Independent, &mut rng)?;
        unit.push(l_k(&bundle, 1.0, 1)?);
    }
    let ks = ks_two_sample(
        &EmpiricalDistribution::new(long)?,
        &EmpiricalDistribution::new(unit)?,
    )?;
    println!("KS(L_1(4,{m})/2, L_1(1,{m})): D = {:.4}, p = {:.3}", ks.d, ks.p_approx);

    let mut rng = stream_rng(5, domain::REFERENCE);
    let bundle = sample_bundle(m, steps, 1.0, BundleMode::ExchangeableNegative, &mut rng)?;
    for k in 1..=m {
        println!("L_{k}(1, {m}) = {:.4}", l_k(&bundle, 1.0, k)?);
    }
    Ok(())
}
