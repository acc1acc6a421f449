//! Helpers shared by the integration tests.
#![allow(dead_code)]

use csc::Matrix;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn randn(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Projection onto `{0 <= x <= cap, sum x <= budget}` by enumerating every
/// assignment of coordinates to {lower bound, upper bound, free} with the sum
/// constraint either inactive or active, and keeping the closest feasible
/// candidate. The optimum is always one of the candidates.
pub fn simplex_oracle(v: &[f64], budget: f64, cap: f64) -> Vec<f64> {
    let d = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(d as u32) {
        let mut state = vec![0u8; d];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        if cap.is_infinite() && state.contains(&1) {
            continue;
        }
        let fixed: f64 = state.iter().filter(|&&s| s == 1).count() as f64 * if cap.is_finite() { cap } else { 0.0 };
        let free: Vec<usize> = (0..d).filter(|&i| state[i] == 2).collect();
        let mut shifts = vec![0.0];
        if !free.is_empty() {
            let free_sum: f64 = free.iter().map(|&i| v[i]).sum();
            shifts.push((free_sum + fixed - budget) / free.len() as f64);
        }
        for theta in shifts {
            let x: Vec<f64> = (0..d)
                .map(|i| match state[i] {
                    0 => 0.0,
                    1 => cap,
                    _ => v[i] - theta,
                })
                .collect();
            let feasible = x.iter().all(|&xi| (-1e-12..=cap + 1e-12).contains(&xi))
                && x.iter().sum::<f64>() <= budget + 1e-12;
            if !feasible {
                continue;
            }
            let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                best = Some((dist, x));
            }
        }
    }
    best.expect("zero is always feasible").1
}

/// Nuclear-ball projection built from the eigendecomposition of `M^T M`
/// (no SVD routine involved) and the enumeration oracle.
pub fn nuclear_oracle(m: &Matrix, radius: f64) -> Matrix {
    let eig = (m.transpose() * m).symmetric_eigen();
    let mut pairs: Vec<(f64, usize)> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).zip(0..).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sigma: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let shrunk = simplex_oracle(&sigma, radius, f64::INFINITY);
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for ((s, idx), t) in pairs.iter().zip(&shrunk) {
        if *t <= 0.0 || *s <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(*idx).into_owned();
        let u = m * &v / *s;
        out += u * v.transpose() * *t;
    }
    out
}
