//! RSK shape of a word, longest weakly increasing subsequence, partial-sum
//! maps and the brute-force nested-path oracle.

use crate::error::{Error, Result};
use crate::model::{OccupancyMatrix, Word};

/// Young shape: weakly decreasing row lengths. Rows beyond the height are
/// implicitly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YoungShape {
    pub rows: Vec<usize>,
}

impl YoungShape {
    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> usize {
        self.rows.get(i).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.rows.iter().sum()
    }
}

/// Shape of the RSK tableau pair of a word, by row insertion.
///
/// Words use the weak-increase convention: an inserted letter bumps the
/// leftmost entry strictly greater than it, so rows are weakly increasing
/// and columns strictly increasing. Only the shape is kept.
pub fn rsk_shape(word: &Word) -> YoungShape {
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for &letter in &word.letters {
        let mut x = letter;
        let mut placed = false;
        for row in rows.iter_mut() {
            let pos = row.partition_point(|&y| y <= x);
            if pos == row.len() {
                row.push(x);
                placed = true;
                break;
            }
            std::mem::swap(&mut row[pos], &mut x);
        }
        if !placed {
            rows.push(vec![x]);
        }
    }
    YoungShape { rows: rows.iter().map(Vec::len).collect() }
}

/// Length of the longest weakly increasing subsequence, patience style.
///
/// `piles[j]` holds the smallest tail value of a weakly increasing
/// subsequence of length `j + 1`; each letter replaces the first tail
/// strictly greater than it.
pub fn lis(word: &Word) -> usize {
    let mut piles: Vec<u32> = Vec::new();
    for &letter in &word.letters {
        let pos = piles.partition_point(|&t| t <= letter);
        if pos == piles.len() {
            piles.push(letter);
        } else {
            piles[pos] = letter;
        }
    }
    piles.len()
}

/// Partial-sum map: `theta(x)_j = x_1 + ... + x_j`.
pub fn theta(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        out.push(acc);
    }
    out
}

/// First differences; inverse of [`theta`].
pub fn theta_inv(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut prev = 0.0;
    for &val in v {
        out.push(val - prev);
        prev = val;
    }
    out
}

/// `V_k`: sum of the first `k` row lengths (rows past the height count 0).
pub fn vk_from_shape(shape: &YoungShape, k: usize) -> usize {
    shape.rows.iter().take(k).sum()
}

/// Exhaustive maximum over the nested-cut family `J_{k,m}(n)`.
///
/// Enumerates the free cut positions `k_{j,l}` (path `j` spans columns
/// `j..=m-k+j`, cuts monotone within a path, and `k_{j,l} <= k_{j-1,l-1}`
/// so the column intervals of distinct paths never overlap) and evaluates
/// each candidate directly from the occupancy partial sums. This is the
/// test oracle against the RSK route and the dynamic program.
pub fn greene_oracle(word: &Word, m: usize, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let n = word.n();
    if k > m {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds m = {m}")));
    }
    let occ = crate::model::occupancy(word, m)?;
    let free_vars = k * (m - k);
    let candidates = ((n + 1) as f64).powi(free_vars as i32);
    if candidates > 1e7 {
        return Err(Error::SizeGuard(format!(
            "about {candidates:.1e} candidate cut tuples exceeds the 1e7 enumeration guard"
        )));
    }
    if n == 0 {
        return Ok(0);
    }

    // cuts[j][l] for 0 <= l <= m, with the boundary conventions baked in:
    // cuts[j][l] = 0 for l <= j-1 and = n for l >= m-k+j (1-based j).
    let mut cuts = vec![vec![0usize; m + 1]; k];
    for (j, row) in cuts.iter_mut().enumerate() {
        for (l, c) in row.iter_mut().enumerate() {
            if l >= m - k + (j + 1) {
                *c = n;
            }
        }
    }
    let mut best = 0usize;
    enumerate(&mut cuts, 0, 0, k, m, n, &occ, &mut best);
    Ok(best)
}

fn score(cuts: &[Vec<usize>], k: usize, m: usize, occ: &OccupancyMatrix) -> usize {
    let mut total = 0u32;
    for (j, row) in cuts.iter().enumerate().take(k) {
        for l in (j + 1)..=(m - k + j + 1) {
            total += occ.s[row[l]][l - 1] - occ.s[row[l - 1]][l - 1];
        }
    }
    total as usize
}

fn enumerate(
    cuts: &mut Vec<Vec<usize>>,
    j: usize,
    l_off: usize,
    k: usize,
    m: usize,
    n: usize,
    occ: &OccupancyMatrix,
    best: &mut usize,
) {
    if j == k {
        *best = (*best).max(score(cuts, k, m, occ));
        return;
    }
    // Free columns of path j (1-based): l in [j+1, m-k+j].
    let l = j + 1 + l_off;
    if l > m - k + j {
        enumerate(cuts, j + 1, 0, k, m, n, occ, best);
        return;
    }
    let lo = cuts[j][l - 1];
    let hi = if j > 0 { cuts[j - 1][l - 1] } else { n };
    for v in lo..=hi {
        cuts[j][l] = v;
        enumerate(cuts, j, l_off + 1, k, m, n, occ, best);
    }
    cuts[j][l] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(letters: &[u32]) -> Word {
        Word { letters: letters.to_vec() }
    }

    #[test]
    fn shape_examples() {
        assert_eq!(rsk_shape(&w(&[0, 0, 1])).rows, vec![3]);
        assert_eq!(rsk_shape(&w(&[1, 0])).rows, vec![1, 1]);
        assert_eq!(rsk_shape(&w(&[1, 0, 1, 0])).rows, vec![2, 2]);
        assert_eq!(rsk_shape(&w(&[])).rows, Vec::<usize>::new());
    }

    #[test]
    fn lis_examples() {
        // Exhaustive check over subsequences of [0,2,1] gives 2.
        assert_eq!(lis(&w(&[0, 2, 1])), 2);
        assert_eq!(lis(&w(&[])), 0);
        assert_eq!(lis(&w(&[3; 17])), 17);
    }

    #[test]
    fn lis_matches_exhaustive_enumeration() {
        // Independent oracle: scan all 2^n subsequences.
        fn brute(word: &Word) -> usize {
            let n = word.n();
            let mut best = 0;
            for mask in 0u32..(1 << n) {
                let picked: Vec<u32> = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| word.letters[i])
                    .collect();
                if picked.windows(2).all(|p| p[0] <= p[1]) {
                    best = best.max(picked.len());
                }
            }
            best
        }
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let n = (state >> 33) as usize % 10;
            let letters: Vec<u32> = (0..n)
                .map(|i| ((state >> (3 * i)) & 3) as u32)
                .collect();
            let word = w(&letters);
            assert_eq!(lis(&word), brute(&word), "word {letters:?}");
        }
    }

    #[test]
    fn theta_roundtrip() {
        assert_eq!(theta(&[1.0, 1.0, 1.0]), vec![1.0, 2.0, 3.0]);
        let x = [0.5, -2.0, 3.25, 0.0];
        assert_eq!(theta_inv(&theta(&x)), x.to_vec());
    }

    #[test]
    fn theta_inv_recovers_rows() {
        let word = w(&[1, 0, 1, 0, 2, 2, 0]);
        let shape = rsk_shape(&word);
        let m = 3;
        let vks: Vec<f64> = (1..=m).map(|k| vk_from_shape(&shape, k) as f64).collect();
        let rows = theta_inv(&vks);
        for (i, &r) in rows.iter().enumerate() {
            assert_eq!(r as usize, shape.row(i));
        }
    }

    #[test]
    fn vk_examples() {
        let s = YoungShape { rows: vec![2, 2] };
        assert_eq!(vk_from_shape(&s, 1), 2);
        assert_eq!(vk_from_shape(&s, 5), 4);
        let s2 = YoungShape { rows: vec![3, 1] };
        assert_eq!(vk_from_shape(&s2, 2), 4);
    }

    #[test]
    fn greene_examples() {
        let word = w(&[1, 0, 1]);
        assert_eq!(greene_oracle(&word, 2, 1).unwrap(), 2);
        assert_eq!(greene_oracle(&word, 2, 2).unwrap(), 3);
        assert_eq!(greene_oracle(&w(&[]), 3, 2).unwrap(), 0);
        assert_eq!(greene_oracle(&w(&[0, 1, 1, 2]), 3, 1).unwrap(), 4);
    }

    #[test]
    fn greene_size_guard() {
        let word = w(&vec![0; 400]);
        assert!(matches!(greene_oracle(&word, 12, 3), Err(crate::error::Error::SizeGuard(_))));
    }

    #[test]
    fn greene_matches_rsk_exhaustive_n4_m3() {
        for code in 0..3u32.pow(4) {
            let letters: Vec<u32> = (0..4).map(|i| code / 3u32.pow(i) % 3).collect();
            let word = w(&letters);
            let shape = rsk_shape(&word);
            for k in 1..=3 {
                assert_eq!(
                    vk_from_shape(&shape, k),
                    greene_oracle(&word, 3, k).unwrap(),
                    "word {letters:?} k {k}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn shape_invariants(letters in proptest::collection::vec(0u32..6, 0..120)) {
            let word = w(&letters);
            let shape = rsk_shape(&word);
            prop_assert!(shape.rows.windows(2).all(|p| p[0] >= p[1]));
            prop_assert_eq!(shape.total(), word.n());
            prop_assert!(shape.height() <= 6);
            prop_assert_eq!(shape.row(0), lis(&word));
        }

        #[test]
        fn vk_concave_in_k(letters in proptest::collection::vec(0u32..8, 0..80)) {
            let word = w(&letters);
            let shape = rsk_shape(&word);
            let vks: Vec<usize> = (1..=8).map(|k| vk_from_shape(&shape, k)).collect();
            let diffs: Vec<usize> =
                std::iter::once(vks[0]).chain(vks.windows(2).map(|p| p[1] - p[0])).collect();
            prop_assert!(diffs.windows(2).all(|p| p[0] >= p[1]));
        }
    }
}
