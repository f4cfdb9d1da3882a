//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

pub fn abalone_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/abalone.data")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Root-mean-square distance of the points to their mean, two-pass.
pub fn direct_radius(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let d = points[0].len();
    let c: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let s: f64 = points
        .iter()
        .map(|p| p.iter().zip(&c).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
        .sum();
    (s / n).sqrt()
}

/// Root-mean-square pairwise distance over ordered pairs; 0 for one point.
pub fn direct_diameter(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for a in points {
        for b in points {
            s += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        }
    }
    (s / (n * (n - 1)) as f64).sqrt()
}

/// Inverse and determinant by Gauss-Jordan elimination with partial pivoting.
pub fn invert_with_det(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if p != c {
            m.swap(p, c);
            inv.swap(p, c);
            det = -det;
        }
        let pivot = m[c][c];
        det *= pivot;
        for j in 0..n {
            m[c][j] /= pivot;
            inv[c][j] /= pivot;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for j in 0..n {
                    m[r][j] -= f * m[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    (inv, det)
}

/// Multivariate normal density evaluated directly from Σ⁻¹ and det Σ.
pub fn naive_density(x: &[f64], mu: &[f64], sigma: &[Vec<f64>]) -> f64 {
    let d = x.len();
    let (inv, det) = invert_with_det(sigma);
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            q += diff[i] * inv[i][j] * diff[j];
        }
    }
    (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powi(d as i32) * det).sqrt()
}

/// `A Aᵀ + shift I` from a row-major `d × d` matrix `a`.
pub fn spd_from(a: &[f64], d: usize, shift: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let s: f64 = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum();
                    s + if i == j { shift } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// Midpoint-rule integral of `f` over the box `mu ± 6 sd` per axis (d ≤ 2).
pub fn grid_mass(f: impl Fn(&[f64]) -> f64, mu: &[f64], sd: &[f64], steps: usize) -> f64 {
    let h: Vec<f64> = sd.iter().map(|s| 12.0 * s / steps as f64).collect();
    let at = |k: usize, i: usize| mu[k] - 6.0 * sd[k] + (i as f64 + 0.5) * h[k];
    match mu.len() {
        1 => (0..steps).map(|i| f(&[at(0, i)]) * h[0]).sum(),
        2 => {
            let mut mass = 0.0;
            for i in 0..steps {
                for j in 0..steps {
                    mass += f(&[at(0, i), at(1, j)]) * h[0] * h[1];
                }
            }
            mass
        }
        d => panic!("grid quadrature supports d <= 2, got {d}"),
    }
}
