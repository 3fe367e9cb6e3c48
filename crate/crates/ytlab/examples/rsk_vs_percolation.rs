//! # Three roads to V_k
//!
//! The sum of the first k rows of the RSK shape of a random word equals the
//! best total weight of k nested non-intersecting paths through the word's
//! occupancy matrix, and also the direct maximum over k disjoint increasing
//! interval families. This example computes all three on random words and
//! confirms exact agreement, then prints the shape of one large word.

use ytlab::lpp::{lppk, WeightMatrix};
use ytlab::model::{occupancy, sample_word, uniform_distribution};
use ytlab::rsk::{greene_oracle, rsk_shape, vk_from_shape};

fn main() -> ytlab::Result<()> {
    let dist = uniform_distribution(4)?;
    for trial in 0..20 {
        let word = sample_word(&dist, 8, 42, trial);
        let shape = rsk_shape(&word);
        let occ = occupancy(&word, dist.m())?;
        let weights = WeightMatrix::new(
            occ.n,
            occ.m,
            occ.x.iter().flatten().map(|&b| f64::from(b)).collect(),
        )?;
        for k in 1..=dist.m() {
            let via_shape = vk_from_shape(&shape, k);
            let via_oracle = greene_oracle(&word, dist.m(), k)?;
            let via_paths = lppk(&weights, k)? as usize;
            assert_eq!(via_shape, via_oracle);
            assert_eq!(via_shape, via_paths);
        }
        println!("trial {trial:2}: shape {:?} agrees for all k", shape.rows);
    }

    let long = sample_word(&dist, 100_000, 42, 999);
    let shape = rsk_shape(&long);
    println!("n = 100000, m = 4: shape = {:?}", shape.rows);
    println!("V_1 = {}, V_2 = {}", vk_from_shape(&shape, 1), vk_from_shape(&shape, 2));
    Ok(())
}
