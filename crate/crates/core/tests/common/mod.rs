#![allow(dead_code)]

use atomrank::combinatorial::Graph;
use atomrank::NonnegMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries iid in `{0} ∪ [0.1, 1]`, zero with probability `p_zero`; never all zero.
pub fn sparse_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, p_zero: f64) -> NonnegMatrix {
    loop {
        let data: Vec<f64> = (0..m * n)
            .map(|_| if rng.gen_bool(p_zero) { 0.0 } else { rng.gen_range(0.1..=1.0) })
            .collect();
        if data.iter().any(|&v| v > 0.0) {
            return NonnegMatrix::new(m, n, data).unwrap();
        }
    }
}

pub fn full_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> NonnegMatrix {
    sparse_matrix(rng, m, n, 0.0)
}

pub fn positive_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.2..5.0)).collect()
}

pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Chromatic number by plain backtracking over vertex colorings.
pub fn chromatic_number(g: &Graph) -> usize {
    fn extend(g: &Graph, colors: &mut Vec<usize>, k: usize) -> bool {
        let v = colors.len();
        if v == g.vertex_count() {
            return true;
        }
        // Symmetry break: a new color may only be the next unused one.
        let used = colors.iter().copied().max().map_or(0, |c| c + 1);
        for c in 0..k.min(used + 1) {
            if (0..v).all(|u| !(colors[u] == c && g.has_edge(u, v))) {
                colors.push(c);
                if extend(g, colors, k) {
                    return true;
                }
                colors.pop();
            }
        }
        false
    }
    let n = g.vertex_count();
    (1..=n.max(1)).find(|&k| extend(g, &mut Vec::with_capacity(n), k)).unwrap_or(0)
}

/// Rank by Gaussian elimination with partial pivoting, pivots below
/// `rel_tol · max|entry|` treated as zero.
pub fn gauss_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())) else { break };
        if a[p][col].abs() <= rel_tol * scale {
            continue;
        }
        a.swap(rank, p);
        for r in rank + 1..m {
            let f = a[r][col] / a[rank][col];
            for c in col..n {
                a[r][c] -= f * a[rank][c];
            }
        }
        rank += 1;
    }
    rank
}

/// `B Bᵀ` for a nonnegative `n × r` factor with entries in `{0} ∪ [0.1, 1]`.
pub fn cp_from_factor(rng: &mut ChaCha8Rng, n: usize, r: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let b = sparse_matrix(rng, n, r, 0.25);
    let b: Vec<Vec<f64>> = (0..n).map(|i| (0..r).map(|j| b.get(i, j)).collect()).collect();
    let a = (0..n)
        .map(|i| (0..n).map(|j| (0..r).map(|k| b[i][k] * b[j][k]).sum()).collect())
        .collect();
    (a, b)
}
