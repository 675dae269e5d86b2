//! Built-in parity-check matrices: the (7,4) Hamming code, the IEEE 802.16e
//! rate-1/2 quasi-cyclic family and seeded Gallager-style regular codes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{MatrixError, ParityCheckMatrix};

/// (7,4) Hamming code, `H = [1101100; 1011010; 0111001]`.
pub fn hamming_7_4() -> ParityCheckMatrix {
    ParityCheckMatrix::from_dense_rows(&["1101100", "1011010", "0111001"])
        .expect("hamming matrix is valid")
}

/// Single parity check over `degree` variables.
pub fn single_check(degree: usize) -> Result<ParityCheckMatrix, MatrixError> {
    ParityCheckMatrix::from_rows(degree, vec![(0..degree).collect()])
}

/// IEEE 802.16e rate-1/2 base matrix (expansion factor 96). `-1` marks an
/// all-zero block.
const WIMAX_R12_BASE: [[i16; 24]; 12] = [
    [
        -1, 94, 73, -1, -1, -1, -1, -1, 55, 83, -1, -1, 7, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1,
        -1,
    ],
    [
        -1, 27, -1, -1, -1, 22, 79, 9, -1, -1, -1, 12, -1, 0, 0, -1, -1, -1, -1, -1, -1, -1, -1, -1,
    ],
    [
        -1, -1, -1, 24, 22, 81, -1, 33, -1, -1, -1, 0, -1, -1, 0, 0, -1, -1, -1, -1, -1, -1, -1, -1,
    ],
    [
        61, -1, 47, -1, -1, -1, -1, -1, 65, 25, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1, -1,
        -1,
    ],
    [
        -1, -1, 39, -1, -1, -1, 84, -1, -1, 41, 72, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1,
        -1,
    ],
    [
        -1, -1, -1, -1, 46, 40, -1, 82, -1, -1, -1, 79, 0, -1, -1, -1, -1, 0, 0, -1, -1, -1, -1, -1,
    ],
    [
        -1, -1, 95, 53, -1, -1, -1, -1, -1, 14, 18, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1,
        -1,
    ],
    [
        -1, 11, 73, -1, -1, -1, 2, -1, -1, 47, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1, -1, -1,
    ],
    [
        12, -1, -1, -1, 83, 24, -1, 43, -1, -1, -1, 51, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0, -1,
        -1,
    ],
    [
        -1, -1, -1, -1, -1, 94, -1, 59, -1, -1, 70, 72, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0,
        -1,
    ],
    [
        -1, -1, 7, 65, -1, -1, -1, -1, 39, 49, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, 0, 0,
    ],
    [
        43, -1, -1, -1, -1, 66, -1, 41, -1, -1, -1, 26, 7, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,
        0,
    ],
];

/// IEEE 802.16e rate-1/2 code of length `24 * z` for `z` in `24..=96` step 4.
///
/// Shifts are scaled as `floor(p * z / 96)`. `wimax_rate_half(24)` is the
/// (576,288) code.
pub fn wimax_rate_half(z: usize) -> Option<ParityCheckMatrix> {
    if !(24..=96).contains(&z) || !z.is_multiple_of(4) {
        return None;
    }
    let mut rows = Vec::with_capacity(12 * z);
    for base_row in &WIMAX_R12_BASE {
        for i in 0..z {
            let row = base_row
                .iter()
                .enumerate()
                .filter(|(_, &p)| p >= 0)
                .map(|(c, &p)| {
                    let shift = p as usize * z / 96;
                    c * z + (i + shift) % z
                })
                .collect();
            rows.push(row);
        }
    }
    Some(ParityCheckMatrix::from_rows(24 * z, rows).expect("expanded base matrix is valid"))
}

/// Gallager-style `(col_weight, row_weight)`-regular code of length `n`.
///
/// The first band of checks covers consecutive blocks; every further band is
/// a seeded column permutation of the first, repaired by random swaps so
/// that no two checks share two variables (no 4-cycles) whenever the swap
/// budget allows. `n` must be a multiple of `row_weight`.
pub fn gallager_regular(
    n: usize,
    col_weight: usize,
    row_weight: usize,
    seed: u64,
) -> Result<ParityCheckMatrix, MatrixError> {
    assert!(
        row_weight > 0 && n.is_multiple_of(row_weight),
        "n must be a multiple of row_weight"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n / row_weight * col_weight);
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for band in 0..col_weight {
        let mut perm: Vec<usize> = (0..n).collect();
        if band > 0 {
            perm.shuffle(&mut rng);
        }
        let mut block: Vec<Vec<usize>> = perm.chunks(row_weight).map(<[usize]>::to_vec).collect();
        repair_band(&mut block, &pairs, &mut rng);
        for row in block {
            pairs.extend(row_pairs(&row));
            rows.push(row);
        }
    }
    ParityCheckMatrix::from_rows(n, rows)
}

fn row_pairs(row: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(row.len() * (row.len() - 1) / 2);
    for (k, &a) in row.iter().enumerate() {
        for &b in &row[k + 1..] {
            out.push((a.min(b), a.max(b)));
        }
    }
    out
}

fn clashes(row: &[usize], pairs: &HashSet<(usize, usize)>) -> usize {
    row_pairs(row).iter().filter(|p| pairs.contains(p)).count()
}

/// Swaps entries between rows of one band until no row repeats a variable
/// pair already used by earlier bands, or the attempt budget runs out.
/// Swaps that do not increase the clash count are kept.
fn repair_band(block: &mut [Vec<usize>], pairs: &HashSet<(usize, usize)>, rng: &mut ChaCha8Rng) {
    let rows = block.len();
    let width = block[0].len();
    let mut bad: Vec<usize> = (0..rows)
        .filter(|&r| clashes(&block[r], pairs) > 0)
        .collect();
    let mut budget = 1000 * rows;
    while let Some(&r) = bad.last() {
        if budget == 0 {
            return;
        }
        budget -= 1;
        let other = rng.random_range(0..rows);
        if other == r {
            continue;
        }
        let before = clashes(&block[r], pairs) + clashes(&block[other], pairs);
        let (i, j) = (rng.random_range(0..width), rng.random_range(0..width));
        let (a, b) = (block[r][i], block[other][j]);
        block[r][i] = b;
        block[other][j] = a;
        let after = clashes(&block[r], pairs) + clashes(&block[other], pairs);
        if after > before {
            block[r][i] = a;
            block[other][j] = b;
            continue;
        }
        bad.retain(|&k| k != other);
        if clashes(&block[other], pairs) > 0 {
            bad.insert(0, other);
        }
        if clashes(&block[r], pairs) == 0 {
            bad.retain(|&k| k != r);
        }
    }
}

/// Named codes accepted wherever a built-in can replace an alist file.
pub fn builtin(name: &str) -> Option<ParityCheckMatrix> {
    match name {
        "hamming" | "hamming-7-4" => Some(hamming_7_4()),
        "wimax-576" => wimax_rate_half(24),
        "wimax-1152" => wimax_rate_half(48),
        "wimax-2304" => wimax_rate_half(96),
        "gallager-1008" => gallager_regular(1008, 3, 6, 1).ok(),
        "gallager-2640" => gallager_regular(2640, 3, 6, 1).ok(),
        _ => None,
    }
}

pub const BUILTIN_NAMES: &[&str] = &[
    "hamming-7-4",
    "wimax-576",
    "wimax-1152",
    "wimax-2304",
    "gallager-1008",
    "gallager-2640",
];
