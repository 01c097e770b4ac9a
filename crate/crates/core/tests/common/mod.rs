//! Independent reference computations used by the integration and acceptance
//! tests. None of these go through the library's solver or quantizer.

#![allow(dead_code)]

use omt_core::linalg::DenseMatrix;
use omt_core::{CoverState, FeatureVector, SimilarityGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fv(v: &[f64]) -> FeatureVector {
    FeatureVector::new(v.to_vec()).unwrap()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| scale * rng.random::<f64>()).collect())
        .collect()
}

/// Complete Gaussian-kernel weight matrix, last point is the anchor.
pub fn kernel_weights(points: &[Vec<f64>], sigma: f64) -> DenseMatrix {
    let n = points.len();
    let mut w = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = euclid(&points[i], &points[j]);
                w.set(i, j, (-d * d / (2.0 * sigma * sigma)).exp());
            }
        }
    }
    w
}

pub fn random_graph(rng: &mut ChaCha8Rng, unlabeled: usize, dim: usize, sigma: f64) -> SimilarityGraph {
    let points = random_points(rng, unlabeled + 1, dim, 1.0);
    SimilarityGraph::from_weights(kernel_weights(&points, sigma)).unwrap()
}

/// Jacobi iteration `f <- (D_u + gamma + c)^-1 ((W_uu + c I) f + W_ul)` with
/// an optional uniform self-loop weight `c`, run until the contraction bound
/// guarantees `tol` accuracy.
pub fn fixed_point_absorption(w: &DenseMatrix, gamma: f64, self_loop: f64, tol: f64) -> Vec<f64> {
    let n = w.size();
    let l = n - 1;
    let u = n - 1;
    let degree: Vec<f64> = (0..u)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| w.get(i, j)).sum::<f64>() + self_loop)
        .collect();
    let rate = (0..u)
        .map(|i| (degree[i] - w.get(i, l)) / (degree[i] + gamma))
        .fold(0.0, f64::max);
    assert!(rate < 1.0, "fixed-point iteration does not contract");
    let mut f = vec![0.0; u];
    for _ in 0..10_000_000 {
        let next: Vec<f64> = (0..u)
            .map(|i| {
                let mut s = w.get(i, l) + self_loop * f[i];
                for (j, fj) in f.iter().enumerate() {
                    if j != i {
                        s += w.get(i, j) * fj;
                    }
                }
                s / (degree[i] + gamma)
            })
            .collect();
        let step = next
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = next;
        if step * rate / (1.0 - rate) < tol {
            return f;
        }
    }
    panic!("fixed-point iteration did not converge");
}

/// Monte Carlo estimate of the absorption probabilities with an explicit sink
/// vertex, one estimate per unlabeled start vertex.
pub fn monte_carlo_absorption(
    w: &DenseMatrix,
    gamma: f64,
    walks: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = w.size();
    let l = n - 1;
    let sink = n;
    // cumulative transition weights over [0..n) plus the sink
    let cumulative: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            let mut acc = 0.0;
            let mut c: Vec<f64> = (0..n)
                .map(|j| {
                    if j != i {
                        acc += w.get(i, j);
                    }
                    acc
                })
                .collect();
            acc += gamma;
            c.push(acc);
            c
        })
        .collect();
    (0..l)
        .map(|start| {
            let mut hits = 0usize;
            for _ in 0..walks {
                let mut v = start;
                loop {
                    let c = &cumulative[v];
                    let x = rng.random::<f64>() * c[c.len() - 1];
                    let next = c.partition_point(|&s| s <= x).min(sink);
                    if next == l {
                        hits += 1;
                        break;
                    }
                    if next == sink {
                        break;
                    }
                    v = next;
                }
            }
            hits as f64 / walks as f64
        })
        .collect()
}

/// Cover error computed by brute force over the retained history.
pub fn brute_cover_error(history: &[FeatureVector], cover: &CoverState) -> f64 {
    history
        .iter()
        .map(|h| {
            cover
                .representatives()
                .iter()
                .map(|r| euclid(h, &r.vector))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Optimal discrete k-center radius by exhaustive search over center sets.
pub fn optimal_k_center(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let k = k.min(n);
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let radius = points
            .iter()
            .map(|p| {
                idx.iter()
                    .map(|&c| euclid(p, &points[c]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        best = best.min(radius);
        // advance to the next combination in lexicographic order
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Pairwise separation check: every pair of representatives is more than
/// `r` apart.
pub fn separated(cover: &CoverState) -> bool {
    let reps = cover.representatives();
    let r = cover.radius();
    reps.iter().enumerate().all(|(i, a)| {
        reps[i + 1..]
            .iter()
            .all(|b| euclid(&a.vector, &b.vector) > r)
    })
}
