//! # The restricted-maximum gap V_1 - V_1'
//!
//! With k letters at the maximal probability and a long thin tail, V_1'
//! restricts the increasing-subsequence maximum to the maximal letters.
//! The gap V_1 - V_1' measures how much the tail letters contribute. This
//! example estimates the mean gap across a doubling grid of word lengths
//! and prints it next to the naive scale n * p_2nd.

use ytlab::lpp::gap_samples;
use ytlab::model::nonuniform_distribution;

fn main() -> ytlab::Result<()> {
    let k = 50;
    let p_max = 0.01;
    let p_2nd = 1e-4;
    let tail_count = ((1.0 - k as f64 * p_max) / p_2nd).round() as usize;
    let dist = nonuniform_distribution(k, p_max, &vec![p_2nd; tail_count])?;
    println!("k = {k}, p_max = {p_max}, p_2nd = {p_2nd}, tail letters = {tail_count}");

    for (g, n) in [500usize, 1000, 2000, 4000].into_iter().enumerate() {
        let gaps = gap_samples(&dist, n, 400, 13, (g as u64) * 1_000_000_000)?;
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!(
            "n = {n:5}: mean gap = {mean:7.3}, n * p_2nd = {:6.3}, ratio = {:6.1}",
            n as f64 * p_2nd,
            mean / (n as f64 * p_2nd)
        );
    }
    Ok(())
}
