//! Symmetric tridiagonal eigenpairs below a cutoff: Sturm-sequence
//! bisection for the eigenvalues, inverse iteration for the vectors.
//!
//! Only the eigenvalues below the cutoff are located, which is all the bound
//! spectrum needs and is far cheaper than a full decomposition when the
//! matrix is large and the count is small.

use crate::error::{Error, Result};

/// Number of eigenvalues strictly below `lambda` (LDLᵀ pivot signs).
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let off2: Vec<f64> = off.iter().map(|e| e * e).collect();
    sturm_count_squared(diag, &off2, lambda, pivot_floor(off))
}

/// Sturm count with precomputed squared off-diagonal and pivot floor.
fn sturm_count_squared(diag: &[f64], off2: &[f64], lambda: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = 0.0_f64;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 {
            d - lambda
        } else {
            d - lambda - off2[i - 1] / q
        };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn pivot_floor(off: &[f64]) -> f64 {
    let emax = off.iter().fold(1.0_f64, |m, e| m.max(e * e));
    emax * f64::MIN_POSITIVE / f64::EPSILON
}

/// Gershgorin interval containing every eigenvalue.
pub fn gershgorin_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// Infinity-norm of the matrix.
pub fn norm_inf(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + left + right
        })
        .fold(0.0, f64::max)
}

/// All eigenvalues strictly below `upper`, ascending.
pub fn eigenvalues_below(diag: &[f64], off: &[f64], upper: f64) -> Vec<f64> {
    if diag.is_empty() {
        return Vec::new();
    }
    let (glo, ghi) = gershgorin_bounds(diag, off);
    if upper <= glo {
        return Vec::new();
    }
    let top = upper.min(ghi + 1.0);
    let off2: Vec<f64> = off.iter().map(|e| e * e).collect();
    let pivmin = pivot_floor(off);
    let m = sturm_count_squared(diag, &off2, top, pivmin);
    if m == 0 {
        return Vec::new();
    }
    let start = glo - 1e-12 * glo.abs().max(1.0);

    // Levels are bisected LANES at a time: the Sturm recurrences for
    // different shifts are independent, so one sweep over the matrix advances
    // every lane, and every evaluated count also tightens the brackets of all
    // other levels.
    let mut lower = vec![start; m];
    let mut upper_b = vec![top; m];
    let mut values = Vec::with_capacity(m);
    let mut k = 0;
    while k < m {
        let lanes = (m - k).min(LANES);
        let mut done = [true; LANES];
        done[..lanes].iter_mut().for_each(|d| *d = false);
        loop {
            let mut shifts = [0.0; LANES];
            for l in 0..LANES {
                if done[l] {
                    shifts[l] = lower[(k + l).min(m - 1)];
                    continue;
                }
                let (lo, hi) = (lower[k + l], upper_b[k + l]);
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs())
                {
                    done[l] = true;
                }
                shifts[l] = mid;
            }
            if done.iter().all(|&d| d) {
                break;
            }
            let counts = sturm_counts(diag, &off2, &shifts, pivmin);
            for l in 0..lanes {
                if done[l] {
                    continue;
                }
                let (mid, c) = (shifts[l], counts[l]);
                for j in k..m {
                    if c > j {
                        upper_b[j] = upper_b[j].min(mid);
                    } else {
                        lower[j] = lower[j].max(mid);
                    }
                }
            }
        }
        values.extend((k..k + lanes).map(|j| 0.5 * (lower[j] + upper_b[j])));
        k += lanes;
    }
    values
}

const LANES: usize = 8;

/// Sturm counts for `LANES` shifts in a single pass.
fn sturm_counts(diag: &[f64], off2: &[f64], shifts: &[f64; LANES], pivmin: f64) -> [usize; LANES] {
    let mut counts = [0usize; LANES];
    let mut q = [0.0_f64; LANES];
    for (i, &d) in diag.iter().enumerate() {
        let e2 = if i == 0 { 0.0 } else { off2[i - 1] };
        for l in 0..LANES {
            let mut v = if i == 0 {
                d - shifts[l]
            } else {
                d - shifts[l] - e2 / q[l]
            };
            if v.abs() < pivmin {
                v = -pivmin;
            }
            counts[l] += (v < 0.0) as usize;
            q[l] = v;
        }
    }
    counts
}

/// LU factorization of `T - shift·I` with partial pivoting (row
/// interchanges confined to neighbouring rows, as in LAPACK `dgttrf`).
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        ShiftedLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// `‖(T - λ)v‖₂` for a unit vector `v`.
pub fn residual_norm(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut r = (diag[i] - lambda) * v[i];
            if i > 0 {
                r += off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += off[i] * v[i + 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Deterministic start vector with components of both parities.
fn start_vector(n: usize, level: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15_u64 ^ (level as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

const MAX_INVERSE_STEPS: usize = 12;

/// Unit-norm eigenvector for the eigenvalue `lambda`, kept orthogonal to
/// `previous` (unit vectors of already computed levels).
pub fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    level: usize,
    previous: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let tnorm = norm_inf(diag, off).max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let lu = ShiftedLu::new(diag, off, lambda, eps * tnorm);
    let tol = 1e3 * eps * tnorm * (n as f64).sqrt();

    // Components along earlier levels are suppressed by the first solve and
    // removed after it, so the start vector needs no orthogonalization.
    let mut v = start_vector(n, level);
    normalize(&mut v);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_INVERSE_STEPS {
        lu.solve_in_place(&mut v);
        orthogonalize(&mut v, previous);
        normalize(&mut v);
        residual = residual_norm(diag, off, lambda, &v);
        if residual <= tol {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence { level, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn sturm_count_matches_known_laplacian_spectrum() {
        let n = 50;
        let (d, e) = laplacian(n);
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        for (k, &l) in exact.iter().enumerate() {
            assert_eq!(sturm_count(&d, &e, l - 1e-9), k);
            assert_eq!(sturm_count(&d, &e, l + 1e-9), k + 1);
        }
    }

    #[test]
    fn bisection_finds_eigenvalues_below_cutoff() {
        let n = 40;
        let (d, e) = laplacian(n);
        let vals = eigenvalues_below(&d, &e, 1.0);
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .filter(|&l| l < 1.0)
            .collect();
        assert_eq!(vals.len(), exact.len());
        for (a, b) in vals.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn empty_below_spectrum() {
        let (d, e) = laplacian(10);
        assert!(eigenvalues_below(&d, &e, 0.0).is_empty());
    }

    #[test]
    fn inverse_iteration_gives_orthonormal_vectors() {
        let n = 60;
        let (d, e) = laplacian(n);
        let vals = eigenvalues_below(&d, &e, 0.5);
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            let v = inverse_iteration(&d, &e, l, k, &vecs).unwrap();
            assert!(residual_norm(&d, &e, l, &v) < 1e-12);
            vecs.push(v);
        }
        for a in 0..vecs.len() {
            for b in 0..vecs.len() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot(&vecs[a], &vecs[b]) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_solve_matches_direct_product() {
        let d = vec![4.0, -1.0, 3.0, 0.5, 2.0];
        let e = vec![1.0, 2.0, -1.5, 0.7];
        let shift = 0.3;
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let n = d.len();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = (d[i] - shift) * x[i];
                if i > 0 {
                    r += e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    r += e[i] * x[i + 1];
                }
                r
            })
            .collect();
        ShiftedLu::new(&d, &e, shift, 1e-300).solve_in_place(&mut b);
        for (a, b) in x.iter().zip(&b) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
