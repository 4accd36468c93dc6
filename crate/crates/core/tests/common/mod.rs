//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use packsell::{CsrMatrix, PackFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Nonzeros within a random band around the diagonal.
    Banded,
    /// Nonzeros anywhere.
    Scattered,
}

/// Random matrix with `n, m ≤ max_dim`, density in `[0.1 %, 20 %]` and values
/// in `[-1, 1)`. Some rows may be empty.
pub fn random_matrix(rng: &mut ChaCha8Rng, max_dim: usize, shape: Shape) -> CsrMatrix {
    let n = rng.gen_range(1..=max_dim);
    let m = rng.gen_range(1..=max_dim);
    let density = 10f64.powf(rng.gen_range(-3.0..(0.2f64).log10()));
    let mut trip = Vec::new();
    match shape {
        Shape::Scattered => {
            for i in 0..n {
                for j in 0..m {
                    if rng.gen::<f64>() < density {
                        trip.push((i, j, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
        }
        Shape::Banded => {
            let lo = rng.gen_range(0..=n.min(m).max(1) / 2 + 1);
            let hi = rng.gen_range(0..=n.min(m).max(1) / 2 + 1);
            let width = (lo + hi + 1) as f64;
            // Keep the expected row count close to `density · m`.
            let p = (density * m as f64 / width).clamp(0.05, 1.0);
            for i in 0..n {
                let j0 = i.saturating_sub(lo);
                let j1 = (i + hi + 1).min(m);
                for j in j0..j1 {
                    if rng.gen::<f64>() < p {
                        trip.push((i, j, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, m, trip).unwrap()
}

/// Random square matrix with a nonzero in every row (for row-sum scaling).
pub fn random_full_rows(rng: &mut ChaCha8Rng, max_dim: usize) -> CsrMatrix {
    let n = rng.gen_range(16..=max_dim);
    let density = rng.gen_range(0.005..0.1);
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, rng.gen_range(0..n), rng.gen_range(-1.0..1.0)));
        for j in 0..n {
            if rng.gen::<f64>() < density {
                trip.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trip).unwrap()
}

/// Matrix with every stored value replaced by its codec round trip.
pub fn quantized(a: &CsrMatrix, fmt: &PackFormat) -> CsrMatrix {
    a.try_map_values(|v| fmt.quantize(v)).unwrap()
}

pub fn bits_f32(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

pub fn bits_f64(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Independent block-uniform leftmost offset.
pub fn leftmost_oracle(i: usize, sigma: usize, k_left: usize) -> usize {
    (i / sigma * sigma).saturating_sub(k_left)
}

/// Dummies a builder must insert: one per gap of at least `2^D` between
/// consecutive positions of a row, counting the gap from the leftmost
/// offset to the first nonzero.
pub fn brute_force_dummies(a: &CsrMatrix, sigma: usize, d: u32) -> usize {
    let k_left = (0..a.n_rows())
        .filter(|&i| a.row_nnz(i) > 0)
        .map(|i| i.saturating_sub(a.row(i).0[0] as usize))
        .max()
        .unwrap_or(0);
    let mut count = 0;
    for i in 0..a.n_rows() {
        let mut prev = leftmost_oracle(i, sigma, k_left);
        for &c in a.row(i).0 {
            if c as usize - prev >= 1 << d {
                count += 1;
            }
            prev = c as usize;
        }
    }
    count
}

/// Dense `y = A x` in `f64`, summing each row left to right.
pub fn dense_matvec(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    let mut dense = vec![vec![0.0; a.n_cols()]; a.n_rows()];
    for (i, row) in dense.iter_mut().enumerate() {
        let (c, v) = a.row(i);
        for (&j, &val) in c.iter().zip(v) {
            row[j as usize] = val;
        }
    }
    dense.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Solves an SPD system by banded Cholesky (dense band storage).
pub fn band_cholesky_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.n_rows();
    let bw = a.lower_bandwidth();
    // l[i][k] holds L[i][i - bw + k].
    let mut l = vec![vec![0.0; bw + 1]; n];
    let get = |i: usize, j: usize| a.get(i, j).unwrap_or(0.0);
    for i in 0..n {
        let j0 = i.saturating_sub(bw);
        for j in j0..=i {
            let mut s = get(i, j);
            let k0 = j0.max(j.saturating_sub(bw));
            for k in k0..j {
                s -= l[i][k + bw - i] * l[j][k + bw - j];
            }
            if i == j {
                assert!(s > 0.0, "matrix not SPD at row {i}");
                l[i][bw] = s.sqrt();
            } else {
                l[i][j + bw - i] = s / l[j][bw];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in i.saturating_sub(bw)..i {
            y[i] -= l[i][k + bw - i] * y[k];
        }
        y[i] /= l[i][bw];
    }
    for i in (0..n).rev() {
        for k in i + 1..(i + bw + 1).min(n) {
            y[i] -= l[k][i + bw - k] * y[k];
        }
        y[i] /= l[i][bw];
    }
    y
}
