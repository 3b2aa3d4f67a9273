//! Bound states of a trap from the finite-difference Hamiltonian.
//!
//! `H = -d²/dx² + V(x)` is discretized with the three-point second
//! difference on a uniform grid with Dirichlet ends, giving a real symmetric
//! tridiagonal matrix. Only the eigenpairs below `-ε·V` are computed.

use log::{debug, warn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::trap::TrapSpec;
use crate::tridiag;

/// Default bound-state threshold, relative to the trap depth: a level
/// counts as bound when `E < -DEFAULT_BOUND_THRESHOLD · V`.
pub const DEFAULT_BOUND_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct TridiagonalHamiltonian {
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
    potential: Vec<f64>,
    grid: Grid,
    depth: f64,
}

impl TridiagonalHamiltonian {
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    /// Sampled potential at the grid nodes.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// `φᵀHφ Δx` for a grid function normalized as `Σφ²Δx = 1`.
    ///
    /// Evaluated in the gradient form `Σ(φ_{j+1}-φ_j)²/Δx² + V φ²` (plus the
    /// Dirichlet boundary terms), which avoids the cancellation of the
    /// three-point stencil.
    pub fn expectation(&self, phi: &[f64]) -> f64 {
        let h = self.grid.spacing();
        let n = phi.len();
        let kinetic: f64 = phi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>()
            + phi[0] * phi[0]
            + phi[n - 1] * phi[n - 1];
        let potential: f64 = phi
            .iter()
            .zip(&self.potential)
            .map(|(p, v)| v * p * p)
            .sum();
        (kinetic / (h * h) + potential) * h
    }
}

/// Builds the finite-difference Hamiltonian of `trap` on `grid`.
pub fn discretize(trap: &TrapSpec, grid: &Grid) -> Result<TridiagonalHamiltonian> {
    let n = grid.len();
    let h = grid.spacing();
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 points, got {n}"
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "spacing must be positive, got {h}"
        )));
    }
    let kinetic = 1.0 / (h * h);
    let potential: Vec<f64> = grid
        .points()
        .map(|x| trap.sampled_potential(x, h))
        .collect();
    let diagonal = potential.iter().map(|v| 2.0 * kinetic + v).collect();
    Ok(TridiagonalHamiltonian {
        diagonal,
        off_diagonal: vec![-kinetic; n - 1],
        potential,
        grid: *grid,
        depth: trap.depth(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    /// Grid not symmetric, or the state has no definite parity.
    Mixed,
}

impl Parity {
    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        }
    }
}

/// Bound energies (ascending) and `Δx`-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct BoundSpectrum {
    energies: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    grid: Grid,
    depth: f64,
    potential_floor: f64,
    threshold: f64,
    near_threshold: Vec<f64>,
}

impl BoundSpectrum {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, n: usize) -> &[f64] {
        &self.eigenfunctions[n]
    }

    pub fn capacity(&self) -> usize {
        self.energies.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    /// Lowest sampled potential value (the trap bottom).
    pub fn potential_floor(&self) -> f64 {
        self.potential_floor
    }

    /// Absolute threshold `ε` used for counting: levels below `-ε` are bound.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Levels in `[-ε, 0)`: negative but too shallow to count, and box
    /// sensitive.
    pub fn near_threshold(&self) -> &[f64] {
        &self.near_threshold
    }

    /// Parity from the signed overlap with the mirrored eigenfunction.
    pub fn parity(&self, n: usize) -> Parity {
        if !self.grid.is_symmetric() {
            return Parity::Mixed;
        }
        let phi = &self.eigenfunctions[n];
        let h = self.grid.spacing();
        let overlap: f64 = phi
            .iter()
            .zip(phi.iter().rev())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * h;
        if overlap > 0.5 {
            Parity::Even
        } else if overlap < -0.5 {
            Parity::Odd
        } else {
            Parity::Mixed
        }
    }

    /// Energies in units of `1/L²` for a trap of half-width `L`.
    pub fn scaled_energies(&self, half_width: f64) -> Vec<f64> {
        self.energies
            .iter()
            .map(|e| e * half_width * half_width)
            .collect()
    }
}

/// Bound states with the default threshold.
pub fn solve_bound_states(hamiltonian: &TridiagonalHamiltonian) -> Result<BoundSpectrum> {
    solve_bound_states_with(hamiltonian, DEFAULT_BOUND_THRESHOLD)
}

/// Bound states `E < -relative_threshold · V`, sorted ascending, with real
/// eigenfunctions normalized to `Σφ²Δx = 1` whose first significant value
/// from the left boundary is positive.
pub fn solve_bound_states_with(
    hamiltonian: &TridiagonalHamiltonian,
    relative_threshold: f64,
) -> Result<BoundSpectrum> {
    let d = &hamiltonian.diagonal;
    let e = &hamiltonian.off_diagonal;
    let h = hamiltonian.grid.spacing();
    let threshold = relative_threshold * hamiltonian.depth;

    let below_zero = tridiag::eigenvalues_below(d, e, 0.0);
    let (bound, shallow): (Vec<f64>, Vec<f64>) =
        below_zero.into_iter().partition(|&ev| ev < -threshold);
    if !shallow.is_empty() {
        warn!(
            "{} level(s) in the near-threshold band [-{:.3e}, 0) excluded: {:?}",
            shallow.len(),
            threshold,
            shallow
        );
    }

    let mut unit_vectors: Vec<Vec<f64>> = Vec::with_capacity(bound.len());
    for (k, &ev) in bound.iter().enumerate() {
        let v = tridiag::inverse_iteration(d, e, ev, k, &unit_vectors)?;
        unit_vectors.push(v);
    }

    let scale = h.sqrt().recip();
    let eigenfunctions: Vec<Vec<f64>> = unit_vectors
        .into_iter()
        .map(|mut v| {
            fix_sign(&mut v);
            v.iter_mut().for_each(|x| *x *= scale);
            v
        })
        .collect();
    let energies: Vec<f64> = eigenfunctions
        .iter()
        .map(|phi| hamiltonian.expectation(phi))
        .collect();
    for w in energies.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::NoConvergence {
                level: energies.len(),
                residual: w[0] - w[1],
            });
        }
    }
    debug!(
        "{} bound states on {} nodes (h = {:.3e})",
        energies.len(),
        d.len(),
        h
    );

    let potential_floor = hamiltonian
        .potential
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(BoundSpectrum {
        energies,
        eigenfunctions,
        grid: hamiltonian.grid,
        depth: hamiltonian.depth,
        potential_floor,
        threshold,
        near_threshold: shallow,
    })
}

fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-6 * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Discretize and solve in one step.
pub fn bound_spectrum(trap: &TrapSpec, grid: &Grid) -> Result<BoundSpectrum> {
    solve_bound_states(&discretize(trap, grid)?)
}

/// Number of bound states of `trap` on `grid`.
pub fn capacity(trap: &TrapSpec, grid: &Grid) -> Result<usize> {
    Ok(bound_spectrum(trap, grid)?.capacity())
}

/// Solves on `grid` and on a grid with half the spacing, and fails with
/// [`Error::UnderResolved`] when the capacity changes or the highest bound
/// energy moves by more than `relative_tolerance`.
pub fn solve_with_refinement_check(
    trap: &TrapSpec,
    grid: &Grid,
    relative_tolerance: f64,
) -> Result<BoundSpectrum> {
    let coarse = bound_spectrum(trap, grid)?;
    let fine = bound_spectrum(trap, &grid.refined())?;
    let top = |s: &BoundSpectrum| s.energies().last().copied().unwrap_or(0.0);
    let (a, b) = (top(&coarse), top(&fine));
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if coarse.capacity() != fine.capacity() || (a - b).abs() > relative_tolerance * scale {
        return Err(Error::UnderResolved { coarse: a, fine: b });
    }
    Ok(coarse)
}
