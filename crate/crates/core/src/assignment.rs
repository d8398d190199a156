//! Rectangular linear assignment (Hungarian method with potentials).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::graph::HardAssignment;

/// Assignment of every row to a distinct column maximizing the summed weight.
///
/// Requires `rows <= cols`. Shortest augmenting paths are grown one row at a
/// time; among equally short paths the lowest column index wins, so the
/// result is deterministic (a constant matrix yields the identity).
pub fn max_weight_assignment(weights: &DMatrix<f64>) -> Result<HardAssignment> {
    let (n, m) = weights.shape();
    if n > m {
        return Err(invalid(alloc::format!("cannot assign {n} rows into {m} columns")));
    }
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(invalid("assignment weights must be finite"));
    }
    if n == 0 {
        return HardAssignment::from_mapping(m, Vec::new());
    }

    // 1-based arrays; column 0 is the virtual root of the augmenting tree
    let cost = |i: usize, j: usize| -weights[(i - 1, j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![0usize; n];
    for j in 1..=m {
        if row_of_col[j] != 0 {
            mapping[row_of_col[j] - 1] = j - 1;
        }
    }
    HardAssignment::from_mapping(m, mapping)
}
