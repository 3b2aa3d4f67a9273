//! Full counting statistics of the atoms left in the final trap.
//!
//! Everything derives from the kernel matrix
//! `B_nm = ⟨φ_n^f| Λ_i |φ_m^f⟩ = Σ_k π_k S_kn S_km`, the initial one-body
//! density matrix `Λ_i = Σ_k π_k |φ_k^i⟩⟨φ_k^i|` written in the final bound
//! basis. For free fermions (and hence the hard-core boson gas) the number
//! of particles found in the final bound subspace has the generating
//! function
//!
//! ```text
//! F(θ) = det[I + (e^{iθ} - 1) B]
//! ```
//!
//! so the mean is `Tr B`, the variance `Tr B - Tr B²`, and the distribution
//! is that of a sum of independent Bernoulli trials with success
//! probabilities equal to the eigenvalues of `B`. Two independent routes to
//! `p(n)` are provided: Fourier inversion of sampled determinants, and the
//! sequential convolution of the Bernoulli factors.

use std::f64::consts::PI;
use std::sync::OnceLock;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::occupation::OccupationState;
use crate::spectrum::BoundSpectrum;

/// Eigenvalues of `B` may stray this far outside `[0, 1]` from roundoff.
pub const EIGENVALUE_SLACK: f64 = 1e-8;

/// `S_kn = ⟨φ_k^i|φ_n^f⟩`, a `C_i × C_f` matrix.
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    s: DMatrix<f64>,
}

impl OverlapMatrix {
    pub fn from_matrix(s: DMatrix<f64>) -> Self {
        OverlapMatrix { s }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn initial_len(&self) -> usize {
        self.s.nrows()
    }

    pub fn final_len(&self) -> usize {
        self.s.ncols()
    }

    /// Euclidean norm of column `n`: the weight of final state `n` inside
    /// the initial bound subspace.
    pub fn column_norm(&self, n: usize) -> f64 {
        self.s.column(n).norm()
    }
}

/// Overlaps between initial and final bound states.
///
/// The two spectra may live on boxes of different size as long as they share
/// one lattice; eigenfunctions vanish outside their own box, so the overlap
/// integral runs over the shared nodes only.
pub fn overlap_matrix(initial: &BoundSpectrum, fin: &BoundSpectrum) -> Result<OverlapMatrix> {
    let Some((ri, rf)) = initial.grid().common_range(fin.grid()) else {
        return Err(Error::DimensionMismatch(
            "initial and final spectra are sampled on different lattices".into(),
        ));
    };
    let h = initial.grid().spacing();
    let s = DMatrix::from_fn(initial.capacity(), fin.capacity(), |k, n| {
        let a = &initial.eigenfunction(k)[ri.clone()];
        let b = &fin.eigenfunction(n)[rf.clone()];
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * h
    });
    Ok(OverlapMatrix { s })
}

/// Real symmetric `C_f × C_f` kernel with spectrum in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    b: DMatrix<f64>,
    eigenvalues: OnceLock<std::result::Result<Vec<f64>, f64>>,
}

impl KernelMatrix {
    /// Wraps a symmetric matrix. Fails when it is not square or not
    /// symmetric to `1e-12` (relative to its largest entry).
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "kernel must be square, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let scale = b.amax().max(1.0);
        let n = b.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (b[(i, j)] - b[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "kernel is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(KernelMatrix {
            b,
            eigenvalues: OnceLock::new(),
        })
    }

    pub fn from_diagonal(lambdas: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(lambdas),
        ))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `C_f`.
    pub fn len(&self) -> usize {
        self.b.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.b.nrows() == 0
    }

    /// Ascending eigenvalues, validated against `[0, 1]` and clamped.
    pub fn eigenvalues(&self) -> Result<&[f64]> {
        let cached = self.eigenvalues.get_or_init(|| {
            if self.is_empty() {
                return Ok(Vec::new());
            }
            let mut values: Vec<f64> = self
                .b
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            values.sort_by(|a, b| a.total_cmp(b));
            for v in values.iter_mut() {
                if *v < -EIGENVALUE_SLACK || *v > 1.0 + EIGENVALUE_SLACK {
                    return Err(*v);
                }
                if *v < -1e-12 || *v > 1.0 + 1e-12 {
                    warn!("kernel eigenvalue {v:.3e} clamped to [0, 1]");
                }
                *v = v.clamp(0.0, 1.0);
            }
            Ok(values)
        });
        match cached {
            Ok(v) => Ok(v.as_slice()),
            Err(value) => Err(Error::KernelSpectrum { value: *value }),
        }
    }
}

/// `B_nm = Σ_k π_k S_kn S_km`.
pub fn kernel_matrix(s: &OverlapMatrix, occ: &OccupationState) -> Result<KernelMatrix> {
    if occ.len() != s.initial_len() {
        return Err(Error::DimensionMismatch(format!(
            "{} occupation weights for {} initial levels",
            occ.len(),
            s.initial_len()
        )));
    }
    let m = s.matrix();
    let weights = occ.weights();
    let cf = m.ncols();
    let mut b = DMatrix::zeros(cf, cf);
    for n in 0..cf {
        for l in n..cf {
            let v: f64 = (0..m.nrows())
                .map(|k| weights[k] * m[(k, n)] * m[(k, l)])
                .sum();
            b[(n, l)] = v;
            b[(l, n)] = v;
        }
    }
    KernelMatrix::new(b)
}

fn trace_powers(b: &KernelMatrix) -> (f64, f64, f64) {
    let m = b.matrix();
    let t1 = m.trace();
    let t2 = m.component_mul(m).sum();
    let sq = m * m;
    let t3 = sq.component_mul(m).sum();
    (t1, t2, t3)
}

/// `⟨N_f⟩ = Tr B`.
pub fn mean_number(b: &KernelMatrix) -> f64 {
    b.matrix().trace()
}

/// `σ² = Tr B - Tr B²`.
pub fn variance_number(b: &KernelMatrix) -> f64 {
    let m = b.matrix();
    m.trace() - m.component_mul(m).sum()
}

/// First three cumulants of the trapped-number distribution.
pub fn cumulants(b: &KernelMatrix) -> [f64; 3] {
    let (t1, _, t3) = trace_powers(b);
    let t2 = t1 - variance_number(b);
    [mean_number(b), variance_number(b), t1 - 3.0 * t2 + 2.0 * t3]
}

/// Determinant by LU with partial pivoting; consumes its input.
fn complex_determinant(mut a: DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap_or(col);
        if a[(pivot, col)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for row in (col + 1)..n {
            let factor = a[(row, col)] / p;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in (col + 1)..n {
                let v = a[(col, k)];
                a[(row, k)] -= factor * v;
            }
        }
    }
    det
}

/// `F(θ) = det[I + (e^{iθ} - 1) B]`.
pub fn characteristic_function(b: &KernelMatrix, theta: f64) -> Complex64 {
    characteristic_from_phase(b, Complex64::from_polar(1.0, theta))
}

fn characteristic_from_phase(b: &KernelMatrix, phase: Complex64) -> Complex64 {
    let n = b.len();
    let z = phase - Complex64::new(1.0, 0.0);
    let a = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) + z * b.matrix()[(i, j)]
    });
    complex_determinant(a)
}

/// `e^{2πi k/m}` with the angle reduced exactly before the trigonometry.
fn root_of_unity(k: usize, m: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * ((k % m) as f64) / m as f64)
}

/// Distribution, moments and cumulants of the trapped atom number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingStatistics {
    /// `p[n]` for `n = 0..=C_f`.
    pub p: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub cumulants: [f64; 3],
}

impl CountingStatistics {
    /// `C_f`.
    pub fn capacity(&self) -> usize {
        self.p.len() - 1
    }

    /// `p(C_f)`, the weight of the completely filled final trap.
    pub fn fock_probability(&self) -> f64 {
        self.p[self.capacity()]
    }

    /// Mean and variance computed directly from `p`.
    pub fn distribution_moments(&self) -> (f64, f64) {
        let m1: f64 = self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let m2: f64 = self
            .p
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n) as f64 * p)
            .sum();
        (m1, m2 - m1 * m1)
    }

    /// `σ²/⟨N⟩`: below one for sub-Poissonian statistics.
    pub fn fano_factor(&self) -> f64 {
        self.variance / self.mean
    }
}

fn statistics_from(b: &KernelMatrix, mut p: Vec<f64>) -> CountingStatistics {
    for v in p.iter_mut() {
        if *v < -1e-10 {
            warn!("negative probability {v:.3e} clamped to zero");
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    CountingStatistics {
        p,
        mean: mean_number(b),
        variance: variance_number(b),
        cumulants: cumulants(b),
    }
}

/// `p(n)` by exact discrete Fourier inversion of `F`.
///
/// `F` is a polynomial of degree `C_f` in `e^{iθ}`, so `C_f + 1` equally
/// spaced samples on the circle determine every coefficient.
pub fn number_distribution(b: &KernelMatrix) -> CountingStatistics {
    let m = b.len() + 1;
    let samples: Vec<Complex64> = (0..m)
        .map(|k| characteristic_from_phase(b, root_of_unity(k, m)))
        .collect();
    let p = (0..m)
        .map(|n| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(k, f)| f * root_of_unity(m * m - (n * k) % m, m))
                .sum();
            sum.re / m as f64
        })
        .collect();
    statistics_from(b, p)
}

/// `p(n)` as the convolution of Bernoulli(λ_j) over the eigenvalues of `B`.
pub fn poisson_binomial_oracle(b: &KernelMatrix) -> Result<Vec<f64>> {
    Ok(poisson_binomial(b.eigenvalues()?))
}

/// Distribution of a sum of independent Bernoulli trials.
pub fn poisson_binomial(probabilities: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(probabilities.len() + 1);
    p.push(1.0);
    for &lambda in probabilities {
        p.push(0.0);
        for n in (0..p.len()).rev() {
            let stay = p[n] * (1.0 - lambda);
            let step = if n > 0 { p[n - 1] * lambda } else { 0.0 };
            p[n] = stay + step;
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionMethod {
    /// Bernoulli convolution over the kernel eigenvalues.
    #[default]
    PoissonBinomial,
    /// Fourier inversion of sampled determinants.
    Determinant,
}

/// Full statistics using the chosen route to `p(n)`.
pub fn counting_statistics(
    b: &KernelMatrix,
    method: DistributionMethod,
) -> Result<CountingStatistics> {
    match method {
        DistributionMethod::Determinant => {
            b.eigenvalues()?;
            Ok(number_distribution(b))
        }
        DistributionMethod::PoissonBinomial => Ok(statistics_from(b, poisson_binomial_oracle(b)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockCheck {
    pub min_eigenvalue: f64,
    pub satisfied: bool,
}

/// The final bound subspace lies inside the occupied initial one when every
/// eigenvalue of `B` is 1; tested as `min λ ≥ 1 - ε`.
pub fn fock_condition(b: &KernelMatrix, epsilon: f64) -> Result<FockCheck> {
    let min_eigenvalue = b.eigenvalues()?.first().copied().unwrap_or(1.0);
    Ok(FockCheck {
        min_eigenvalue,
        satisfied: min_eigenvalue >= 1.0 - epsilon,
    })
}
