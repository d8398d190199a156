//! Random instance builders and brute-force helpers shared by the
//! integration tests. Nothing here calls into the code under test.

#![allow(dead_code)]

use clapgm_core::{DMatrix, Point};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn points(rng: &mut impl Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
        .collect()
}

pub fn descriptors(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn dense(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Symmetric, zero diagonal, off-diagonals uniform in `[lo, hi)`.
pub fn sym_zero_diag(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random_range(lo..hi);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c);
                rec(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn perm_matrix(perm: &[usize]) -> DMatrix<f64> {
    let n = perm.len();
    let mut p = DMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        p[(i, j)] = 1.0;
    }
    p
}

/// Strictly positive doubly stochastic matrix: a random mixture of
/// permutation matrices plus a uniform component.
pub fn doubly_stochastic(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let terms = 4;
    let mut weights: Vec<f64> = (0..=terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut p = DMatrix::from_element(n, n, weights[terms] / n as f64);
    for w in &weights[..terms] {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        p += perm_matrix(&perm) * *w;
    }
    p
}

/// `true` when `m + shift·I` admits a Cholesky factorization, certifying
/// that every eigenvalue of `m` is above `-shift`.
pub fn psd_within(m: &DMatrix<f64>, shift: f64) -> bool {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] += shift;
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return false;
        }
        l[(j, j)] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    true
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
