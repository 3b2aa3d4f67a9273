//! Occupation probabilities of the initial bound levels.
//!
//! At zero temperature the lowest `N_i` levels are filled. At finite
//! temperature the weights are Fermi-Dirac, `π_n = 1/(exp((E_n - μ)/k_BT) + 1)`,
//! with `μ` fixed by `Σ π_n = N_i`. Only bound levels are occupied; the
//! continuum is neglected, which requires `k_BT` small against the distance
//! from the top level to threshold.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::BoundSpectrum;

/// Weight above which the top bound level signals that the continuum
/// would be thermally populated.
pub const CONTINUUM_WARNING_WEIGHT: f64 = 1e-3;

const NUMBER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationState {
    weights: Vec<f64>,
    energies: Vec<f64>,
    particle_number: f64,
    /// `k_B T` in energy units; `None` at zero temperature.
    temperature: Option<f64>,
    /// Absolute chemical potential (same energy origin as the spectrum).
    chemical_potential: Option<f64>,
}

impl OccupationState {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn particle_number(&self) -> f64 {
        self.particle_number
    }

    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    pub fn chemical_potential(&self) -> Option<f64> {
        self.chemical_potential
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Step filling of the lowest `n_i` levels.
pub fn ground_state_occupation(n_i: usize, spectrum: &BoundSpectrum) -> Result<OccupationState> {
    let capacity = spectrum.capacity();
    if n_i == 0 {
        return Err(Error::InvalidOccupation("N_i must be at least 1".into()));
    }
    if n_i > capacity {
        return Err(Error::InvalidOccupation(format!(
            "N_i = {n_i} exceeds the trap capacity {capacity}"
        )));
    }
    let weights = (0..capacity)
        .map(|n| if n < n_i { 1.0 } else { 0.0 })
        .collect();
    Ok(OccupationState {
        weights,
        energies: spectrum.energies().to_vec(),
        particle_number: n_i as f64,
        temperature: None,
        chemical_potential: None,
    })
}

/// Fermi-Dirac occupation, evaluated without overflow.
pub fn fermi_dirac(energy: f64, mu: f64, kt: f64) -> f64 {
    let x = (energy - mu) / kt;
    if x > 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn total(energies: &[f64], mu: f64, kt: f64) -> f64 {
    energies.iter().map(|&e| fermi_dirac(e, mu, kt)).sum()
}

/// Chemical potential with `Σ_n f(E_n; μ, k_BT) = n`, by bisection on
/// `[E_1 - 50 k_BT, 50 k_BT]`.
pub fn solve_chemical_potential(energies: &[f64], kt: f64, n: f64) -> Result<f64> {
    if !(kt.is_finite() && kt > 0.0) {
        return Err(Error::InvalidOccupation(format!(
            "temperature must be positive, got {kt}"
        )));
    }
    let capacity = energies.len() as f64;
    if !(n > 0.0 && n < capacity) {
        return Err(Error::Unbracketable(format!(
            "N_i = {n} must lie strictly between 0 and the capacity {capacity} at T > 0"
        )));
    }
    let mut lo = energies[0] - 50.0 * kt;
    let mut hi = 50.0 * kt;
    let (flo, fhi) = (total(energies, lo, kt) - n, total(energies, hi, kt) - n);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::Unbracketable(format!(
            "particle-number mismatch has no sign change on [{lo}, {hi}]"
        )));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = total(energies, mid, kt) - n;
        if f.abs() <= NUMBER_TOLERANCE {
            return Ok(mid);
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (flo, fhi) = (total(energies, lo, kt) - n, total(energies, hi, kt) - n);
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

fn thermal_state(spectrum: &BoundSpectrum, kt: f64, mu: f64, n_i: f64) -> Result<OccupationState> {
    let weights: Vec<f64> = spectrum
        .energies()
        .iter()
        .map(|&e| fermi_dirac(e, mu, kt))
        .collect();
    let sum: f64 = weights.iter().sum();
    if (sum - n_i).abs() > 1e-10 {
        return Err(Error::Unbracketable(format!(
            "bisection stalled with Σπ = {sum} for N_i = {n_i}"
        )));
    }
    if let Some(&top) = weights.last() {
        if top > CONTINUUM_WARNING_WEIGHT {
            warn!(
                "top bound level holds π = {top:.3e}; neglecting the thermal continuum is not accurate here"
            );
        }
    }
    Ok(OccupationState {
        weights,
        energies: spectrum.energies().to_vec(),
        particle_number: n_i,
        temperature: Some(kt),
        chemical_potential: Some(mu),
    })
}

/// Fermi-Dirac occupation at temperature `kt` (`k_BT`, energy units) with
/// mean particle number `n_i`.
pub fn thermal_occupation(spectrum: &BoundSpectrum, kt: f64, n_i: f64) -> Result<OccupationState> {
    if spectrum.capacity() == 0 {
        return Err(Error::Unbracketable("the trap has no bound states".into()));
    }
    let mu = solve_chemical_potential(spectrum.energies(), kt, n_i)?;
    thermal_state(spectrum, kt, mu, n_i)
}

/// Thermal occupation at fixed `μ/k_BT`, with `μ` measured from the bottom
/// of the trap. Solves for the temperature, then for `μ` at that
/// temperature.
pub fn thermal_occupation_at_ratio(
    spectrum: &BoundSpectrum,
    mu_over_kt: f64,
    n_i: f64,
) -> Result<OccupationState> {
    let kt = temperature_for_ratio(spectrum, mu_over_kt, n_i)?;
    thermal_occupation(spectrum, kt, n_i)
}

/// The `k_BT` at which the chemical potential, measured from the trap
/// bottom, equals `mu_over_kt · k_BT` for `n_i` particles.
pub fn temperature_for_ratio(spectrum: &BoundSpectrum, mu_over_kt: f64, n_i: f64) -> Result<f64> {
    let capacity = spectrum.capacity();
    if capacity == 0 {
        return Err(Error::Unbracketable("the trap has no bound states".into()));
    }
    if !mu_over_kt.is_finite() {
        return Err(Error::InvalidOccupation(format!(
            "mu_over_kT must be finite, got {mu_over_kt}"
        )));
    }
    if !(n_i > 0.0 && n_i < capacity as f64) {
        return Err(Error::Unbracketable(format!(
            "N_i = {n_i} must lie strictly between 0 and the capacity {capacity} at T > 0"
        )));
    }
    let floor = spectrum.potential_floor();
    let excitation: Vec<f64> = spectrum.energies().iter().map(|e| e - floor).collect();
    // with μ - floor = a·kT the occupations rise monotonically with kT
    let count = |kt: f64| -> f64 {
        excitation
            .iter()
            .map(|&eps| fermi_dirac(eps / kt, mu_over_kt, 1.0))
            .sum::<f64>()
            - n_i
    };
    let mut lo = excitation[0] / (mu_over_kt.max(0.0) + 60.0);
    let mut hi = excitation[capacity - 1].max(lo * 2.0);
    let mut doublings = 0;
    while count(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Unbracketable(format!(
                "no temperature gives μ/k_BT = {mu_over_kt} with N_i = {n_i} in {capacity} bound levels"
            )));
        }
    }
    if count(lo) > 0.0 {
        return Err(Error::Unbracketable(format!(
            "lower temperature bracket {lo} already overfills the trap"
        )));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = count(mid);
        if f.abs() <= NUMBER_TOLERANCE {
            return Ok(mid);
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One-body density `ρ(x) = Σ_n π_n |φ_n(x)|²` on the spectrum's grid.
pub fn density_profile(spectrum: &BoundSpectrum, occ: &OccupationState) -> Result<Vec<(f64, f64)>> {
    if occ.len() != spectrum.capacity() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} bound levels",
            occ.len(),
            spectrum.capacity()
        )));
    }
    let grid = spectrum.grid();
    let mut rho = vec![0.0; grid.len()];
    for (w, phi) in occ.weights().iter().zip(spectrum.eigenfunctions()) {
        if *w == 0.0 {
            continue;
        }
        rho.iter_mut().zip(phi).for_each(|(r, p)| *r += w * p * p);
    }
    Ok(grid.points().zip(rho).collect())
}

/// `γ_f = γ_i n_i / n_f`: the interaction parameter after a density change.
pub fn tonks_ratio(gamma_i: f64, density_i: f64, density_f: f64) -> Result<f64> {
    for (name, v) in [("gamma_i", gamma_i), ("n_i", density_i), ("n_f", density_f)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidOccupation(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(gamma_i * density_i / density_f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn symmetric_two_level_system() {
        let mu = solve_chemical_potential(&[-3.0, -1.0], 1.0, 1.0).unwrap();
        assert!((mu + 2.0).abs() < 1e-9);
        assert!((fermi_dirac(-3.0, mu, 1.0) - logistic(1.0)).abs() < 1e-10);
        assert!((fermi_dirac(-1.0, mu, 1.0) - logistic(-1.0)).abs() < 1e-10);
    }

    #[test]
    fn fermi_dirac_extremes_do_not_overflow() {
        assert_eq!(fermi_dirac(1e6, 0.0, 1.0), 0.0);
        assert_eq!(fermi_dirac(-1e6, 0.0, 1.0), 1.0);
        assert_eq!(fermi_dirac(0.0, 0.0, 1.0), 0.5);
    }

    #[test]
    fn rejects_unreachable_particle_numbers() {
        let e = [-3.0, -2.0, -1.0];
        assert!(matches!(
            solve_chemical_potential(&e, 1.0, 3.0),
            Err(Error::Unbracketable(_))
        ));
        assert!(solve_chemical_potential(&e, 0.0, 1.0).is_err());
        assert!(solve_chemical_potential(&e, -1.0, 1.0).is_err());
    }

    #[test]
    fn tonks_ratio_rules() {
        assert_eq!(tonks_ratio(3.0, 2.0, 2.0).unwrap(), 3.0);
        assert_eq!(tonks_ratio(3.0, 2.0, 1.0).unwrap(), 6.0);
        assert!(tonks_ratio(3.0, 2.0, 4.0).unwrap() < 3.0);
        assert!(tonks_ratio(3.0, 0.0, 1.0).is_err());
        assert!(tonks_ratio(-1.0, 1.0, 1.0).is_err());
    }
}
