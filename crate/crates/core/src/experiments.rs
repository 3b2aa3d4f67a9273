//! Sudden trap-reduction scenarios and the parameter sweeps built on them.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{
    counting_statistics, fock_condition, kernel_matrix, overlap_matrix, CountingStatistics,
    DistributionMethod, FockCheck,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridPolicy};
use crate::occupation::{
    ground_state_occupation, temperature_for_ratio, thermal_occupation, OccupationState,
};
use crate::spectrum::{
    discretize, solve_bound_states_with, BoundSpectrum, DEFAULT_BOUND_THRESHOLD,
};
use crate::trap::TrapSpec;

/// How the initial levels are filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OccupationSpec {
    /// Lowest `n_i` levels filled.
    Ground { n_i: usize },
    /// Fermi-Dirac at `k_BT = temperature` (energy units).
    Thermal { n_i: f64, temperature: f64 },
    /// Fermi-Dirac at fixed `μ/k_BT`, `μ` measured from the trap bottom.
    ThermalRatio { n_i: f64, mu_over_kt: f64 },
}

impl OccupationSpec {
    pub fn particle_number(&self) -> f64 {
        match *self {
            OccupationSpec::Ground { n_i } => n_i as f64,
            OccupationSpec::Thermal { n_i, .. } | OccupationSpec::ThermalRatio { n_i, .. } => n_i,
        }
    }

    pub fn build(&self, spectrum: &BoundSpectrum) -> Result<OccupationState> {
        match *self {
            OccupationSpec::Ground { n_i } => ground_state_occupation(n_i, spectrum),
            OccupationSpec::Thermal { n_i, temperature } => {
                thermal_occupation(spectrum, temperature, n_i)
            }
            OccupationSpec::ThermalRatio { n_i, mu_over_kt } => {
                let kt = temperature_for_ratio(spectrum, mu_over_kt, n_i)?;
                thermal_occupation(spectrum, kt, n_i)
            }
        }
    }
}

/// Numerical settings shared by every solve of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub grid: GridPolicy,
    /// Levels count as bound below `-bound_threshold · V`.
    pub bound_threshold: f64,
    /// The Fock condition holds when every kernel eigenvalue is `≥ 1 - ε`.
    pub fock_epsilon: f64,
    pub method: DistributionMethod,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            grid: GridPolicy::default(),
            bound_threshold: DEFAULT_BOUND_THRESHOLD,
            fock_epsilon: 1e-3,
            method: DistributionMethod::default(),
        }
    }
}

impl Numerics {
    pub fn solve(&self, trap: &TrapSpec, grid: &Grid) -> Result<BoundSpectrum> {
        solve_bound_states_with(&discretize(trap, grid)?, self.bound_threshold)
    }

    pub fn grid_for(&self, traps: &[&TrapSpec]) -> Result<Grid> {
        self.grid.grid_for(traps)
    }

    pub fn pair_grids(&self, initial: &TrapSpec, fin: &TrapSpec) -> Result<(Grid, Grid)> {
        self.grid.pair_grids(initial, fin)
    }
}

/// An abrupt change from `initial` to `final_trap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionScenario {
    pub initial: TrapSpec,
    #[serde(rename = "final")]
    pub final_trap: TrapSpec,
    pub occupation: OccupationSpec,
    pub numerics: Numerics,
}

impl ReductionScenario {
    fn describe(&self) -> String {
        format!(
            "{} U_i={:.6e} L_i={} -> {} U_f={:.6e} L_f={}",
            self.initial.shape().name(),
            self.initial.dimensionless_depth(),
            self.initial.half_width(),
            self.final_trap.shape().name(),
            self.final_trap.dimensionless_depth(),
            self.final_trap.half_width()
        )
    }

    /// Same scenario with a different final trap.
    pub fn with_final(&self, final_trap: TrapSpec) -> Self {
        ReductionScenario {
            final_trap,
            ..*self
        }
    }

    /// The final trap of the same family with half-width `ratio · L_i`.
    pub fn final_at_ratio(&self, ratio: f64) -> Result<TrapSpec> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidTrap {
                name: "width_ratio",
                value: ratio,
                reason: "must lie in (0, 1]",
            });
        }
        TrapSpec::family_member(
            self.final_trap.dimensionless_depth(),
            self.final_trap.relative_smoothness(),
            ratio * self.initial.half_width(),
            self.final_trap.shape(),
        )
    }
}

/// Both spectra of a scenario, each on its own box over a shared lattice.
#[derive(Debug, Clone)]
pub struct ScenarioSpectra {
    pub initial: BoundSpectrum,
    pub fin: BoundSpectrum,
}

fn warn_if_growing(initial: usize, fin: usize) {
    if fin > initial {
        warn!(
            "final capacity {fin} exceeds initial capacity {initial}; this is not a trap reduction"
        );
    }
}

/// Solves the initial and final traps on grids sharing one lattice, fine
/// enough for both.
pub fn solve_scenario_spectra(s: &ReductionScenario) -> Result<ScenarioSpectra> {
    let ctx = |e: Error| e.in_context(s.describe());
    let (gi, gf) = s
        .numerics
        .pair_grids(&s.initial, &s.final_trap)
        .map_err(ctx)?;
    let initial = s.numerics.solve(&s.initial, &gi).map_err(ctx)?;
    let fin = s.numerics.solve(&s.final_trap, &gf).map_err(ctx)?;
    warn_if_growing(initial.capacity(), fin.capacity());
    Ok(ScenarioSpectra { initial, fin })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub statistics: CountingStatistics,
    pub capacity_initial: usize,
    pub capacity_final: usize,
    pub fock: FockCheck,
    pub occupation: OccupationState,
    pub initial_grid: Grid,
    pub final_grid: Grid,
}

/// Counting statistics for precomputed spectra sharing one lattice.
pub fn statistics_for(
    initial: &BoundSpectrum,
    fin: &BoundSpectrum,
    occupation: &OccupationState,
    numerics: &Numerics,
) -> Result<(CountingStatistics, FockCheck)> {
    let s = overlap_matrix(initial, fin)?;
    let b = kernel_matrix(&s, occupation)?;
    let stats = counting_statistics(&b, numerics.method)?;
    let fock = fock_condition(&b, numerics.fock_epsilon)?;
    Ok((stats, fock))
}

/// Solves both traps, fills the initial one and returns the full counting
/// statistics of the final trap.
pub fn run_scenario(s: &ReductionScenario) -> Result<ScenarioResult> {
    let spectra = solve_scenario_spectra(s)?;
    let ctx = |e: Error| e.in_context(s.describe());
    let occupation = s.occupation.build(&spectra.initial).map_err(ctx)?;
    let (statistics, fock) =
        statistics_for(&spectra.initial, &spectra.fin, &occupation, &s.numerics).map_err(ctx)?;
    Ok(ScenarioResult {
        statistics,
        capacity_initial: spectra.initial.capacity(),
        capacity_final: spectra.fin.capacity(),
        fock,
        occupation,
        initial_grid: *spectra.initial.grid(),
        final_grid: *spectra.fin.grid(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean: f64,
    pub variance: f64,
    pub min_eigenvalue: f64,
    pub p_fock: f64,
    pub capacity_final: usize,
}

impl SweepRow {
    fn new(value: f64, statistics: &CountingStatistics, fock: &FockCheck) -> Self {
        SweepRow {
            value,
            mean: statistics.mean,
            variance: statistics.variance,
            min_eigenvalue: fock.min_eigenvalue,
            p_fock: statistics.fock_probability(),
            capacity_final: statistics.capacity(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub parameter: String,
    pub scenario: ReductionScenario,
    /// Ascending in `value`.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Largest mean over the sweep.
    pub fn plateau_mean(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Contiguous range of swept values around the best row whose variance
    /// stays below `threshold`.
    pub fn window_below(&self, threshold: f64) -> Option<(f64, f64)> {
        let best = self
            .rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.variance.total_cmp(&b.1.variance))?
            .0;
        if self.rows[best].variance >= threshold {
            return None;
        }
        let mut lo = best;
        while lo > 0 && self.rows[lo - 1].variance < threshold {
            lo -= 1;
        }
        let mut hi = best;
        while hi + 1 < self.rows.len() && self.rows[hi + 1].variance < threshold {
            hi += 1;
        }
        Some((self.rows[lo].value, self.rows[hi].value))
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// The solve plan of a width-ratio sweep.
///
/// Every row pairs the initial trap with one final trap on grids from
/// [`GridPolicy::pair_grids`](crate::grid::GridPolicy::pair_grids): each trap
/// keeps its own extent, and the spacing is the finer of the two. Rows that
/// end up with the same initial grid share one initial solve, and all
/// requested occupations are evaluated in the same pass, so the expensive
/// initial spectrum is computed once per distinct spacing.
#[derive(Debug, Clone)]
pub struct WidthSweep {
    base: ReductionScenario,
    ratios: Vec<f64>,
    finals: Vec<TrapSpec>,
    /// Rows grouped by initial grid: `(initial grid, [(row, final grid)])`.
    groups: Vec<(Grid, Vec<(usize, Grid)>)>,
    /// The initial trap on its own grid; fixes `N_i` and temperatures.
    reference: BoundSpectrum,
}

impl WidthSweep {
    /// Validates the ratios (each in `(0, 1]`), sorts them ascending, plans
    /// the grids and solves the initial trap on its own grid.
    pub fn prepare(base: &ReductionScenario, ratios: &[f64]) -> Result<Self> {
        let ratios = sorted(ratios);
        let finals: Vec<TrapSpec> = ratios
            .iter()
            .map(|&r| base.final_at_ratio(r))
            .collect::<Result<_>>()?;
        let ctx = |e: Error| e.in_context(base.describe());
        let mut groups: Vec<(Grid, Vec<(usize, Grid)>)> = Vec::new();
        for (row, fin) in finals.iter().enumerate() {
            let (gi, gf) = base.numerics.pair_grids(&base.initial, fin).map_err(ctx)?;
            match groups.iter_mut().find(|(g, _)| *g == gi) {
                Some((_, rows)) => rows.push((row, gf)),
                None => groups.push((gi, vec![(row, gf)])),
            }
        }
        let own = base.numerics.grid_for(&[&base.initial]).map_err(ctx)?;
        let reference = base.numerics.solve(&base.initial, &own).map_err(ctx)?;
        info!(
            "width sweep: {} ratios, {} initial grids, C_i = {}",
            ratios.len(),
            groups.len(),
            reference.capacity()
        );
        Ok(WidthSweep {
            base: *base,
            ratios,
            finals,
            groups,
            reference,
        })
    }

    /// The initial spectrum on the initial trap's own grid.
    pub fn initial(&self) -> &BoundSpectrum {
        &self.reference
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// Finest spacing and largest node count over all rows.
    pub fn resolution(&self) -> (f64, usize) {
        self.groups
            .iter()
            .flat_map(|(gi, rows)| std::iter::once(gi).chain(rows.iter().map(|(_, g)| g)))
            .fold((f64::INFINITY, 0), |(h, n), g| {
                (h.min(g.spacing()), n.max(g.len()))
            })
    }

    /// Replaces a `μ/k_BT` specification by the absolute temperature it
    /// implies for the reference spectrum, so all rows share one `k_BT`.
    fn pinned(&self, spec: &OccupationSpec) -> Result<OccupationSpec> {
        Ok(match *spec {
            OccupationSpec::ThermalRatio { n_i, mu_over_kt } => OccupationSpec::Thermal {
                n_i,
                temperature: temperature_for_ratio(&self.reference, mu_over_kt, n_i)?,
            },
            other => other,
        })
    }

    /// Rows for each occupation in `specs`, in the same order.
    pub fn evaluate(&self, specs: &[OccupationSpec]) -> Result<Vec<Vec<SweepRow>>> {
        let ctx = |e: Error| e.in_context(self.base.describe());
        let numerics = &self.base.numerics;
        let specs = specs
            .iter()
            .map(|s| self.pinned(s))
            .collect::<Result<Vec<_>>>()
            .map_err(ctx)?;
        let mut out: Vec<Vec<Option<SweepRow>>> = vec![vec![None; self.ratios.len()]; specs.len()];
        for (gi, rows) in &self.groups {
            let solved;
            let initial = if gi == self.reference.grid() {
                &self.reference
            } else {
                solved = numerics.solve(&self.base.initial, gi).map_err(ctx)?;
                &solved
            };
            let occupations = specs
                .iter()
                .map(|s| s.build(initial))
                .collect::<Result<Vec<_>>>()
                .map_err(ctx)?;
            let evaluated = rows
                .par_iter()
                .map(|&(row, ref gf)| {
                    let fin = numerics.solve(&self.finals[row], gf)?;
                    warn_if_growing(initial.capacity(), fin.capacity());
                    let s = overlap_matrix(initial, &fin)?;
                    occupations
                        .iter()
                        .map(|occ| {
                            let b = kernel_matrix(&s, occ)?;
                            let stats = counting_statistics(&b, numerics.method)?;
                            let fock = fock_condition(&b, numerics.fock_epsilon)?;
                            Ok(SweepRow::new(self.ratios[row], &stats, &fock))
                        })
                        .collect::<Result<Vec<_>>>()
                        .map(|r| (row, r))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(ctx)?;
            for (row, per_spec) in evaluated {
                for (k, r) in per_spec.into_iter().enumerate() {
                    out[k][row] = Some(r);
                }
            }
        }
        Ok(out
            .into_iter()
            .map(|rows| {
                rows.into_iter()
                    .map(|r| r.expect("every row is planned"))
                    .collect()
            })
            .collect())
    }

    /// The sweep for the occupation described by `spec`.
    pub fn run(&self, spec: &OccupationSpec) -> Result<SweepResult> {
        let pinned = self
            .pinned(spec)
            .map_err(|e| e.in_context(self.base.describe()))?;
        let rows = self.evaluate(&[pinned])?.pop().expect("one occupation");
        Ok(SweepResult {
            parameter: "width_ratio".into(),
            scenario: ReductionScenario {
                occupation: pinned,
                ..self.base
            },
            rows,
        })
    }
}

/// Varies the final half-width as `ratio · L_i` inside the final trap's
/// isospectral family. Rows are independent and evaluated in parallel;
/// they come back ascending in the ratio.
pub fn sweep_width_ratio(base: &ReductionScenario, ratios: &[f64]) -> Result<SweepResult> {
    WidthSweep::prepare(base, ratios)?.run(&base.occupation)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessRow {
    pub smoothness: f64,
    pub capacity: usize,
    /// `E_C - E_{C-1}`, the spacing of the two highest bound levels.
    pub top_gap: Option<f64>,
    pub energies: Vec<f64>,
}

/// Bound-state count of a bathtub of fixed depth and width as its walls are
/// softened.
pub fn capacity_vs_smoothness(
    depth: f64,
    half_width: f64,
    smoothness: &[f64],
    numerics: &Numerics,
) -> Result<Vec<SmoothnessRow>> {
    sorted(smoothness)
        .par_iter()
        .map(|&sigma| {
            let trap = TrapSpec::bathtub(depth, half_width, sigma)?;
            let grid = numerics.grid_for(&[&trap])?;
            let spectrum = numerics.solve(&trap, &grid)?;
            let e = spectrum.energies();
            let top_gap = (e.len() >= 2).then(|| e[e.len() - 1] - e[e.len() - 2]);
            Ok(SmoothnessRow {
                smoothness: sigma,
                capacity: spectrum.capacity(),
                top_gap,
                energies: e.to_vec(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TemperatureRow {
    pub mu_over_kt: f64,
    /// `k_BT` in energy units.
    pub temperature: f64,
    pub chemical_potential: f64,
    pub plateau_mean: f64,
    pub sweep: SweepResult,
}

/// `k_BT` of the initial trap (solved on its own grid) for a given
/// `μ/k_BT` and particle number.
pub fn temperature_of(
    initial: &TrapSpec,
    mu_over_kt: f64,
    n_i: f64,
    numerics: &Numerics,
) -> Result<f64> {
    let grid = numerics.grid_for(&[initial])?;
    let spectrum = numerics.solve(initial, &grid)?;
    temperature_for_ratio(&spectrum, mu_over_kt, n_i)
}

/// One width-ratio sweep per `μ/k_BT`, all with the particle number of
/// `base`. Each temperature is fixed from the initial spectrum, so every row
/// of one sweep shares the same `k_BT` and `μ`.
pub fn temperature_sweep(
    base: &ReductionScenario,
    mu_over_kt: &[f64],
    ratios: &[f64],
) -> Result<Vec<TemperatureRow>> {
    let n_i = base.occupation.particle_number();
    if let OccupationSpec::Ground { .. } = base.occupation {
        warn!("temperature sweep on a zero-temperature scenario; using N_i = {n_i} with thermal weights");
    }
    WidthSweep::prepare(base, ratios)?.temperature_rows(n_i, mu_over_kt)
}

impl WidthSweep {
    /// One sweep per `μ/k_BT` for `n_i` particles in the initial trap.
    pub fn temperature_rows(&self, n_i: f64, mu_over_kt: &[f64]) -> Result<Vec<TemperatureRow>> {
        let base = &self.base;
        let ctx = |e: Error| e.in_context(base.describe());
        let mut params = Vec::with_capacity(mu_over_kt.len());
        let mut specs = Vec::with_capacity(mu_over_kt.len());
        for &a in mu_over_kt {
            let spec = self
                .pinned(&OccupationSpec::ThermalRatio { n_i, mu_over_kt: a })
                .map_err(ctx)?;
            let mu = spec
                .build(&self.reference)
                .map_err(ctx)?
                .chemical_potential()
                .unwrap_or(f64::NAN);
            params.push((a, mu));
            specs.push(spec);
        }
        let rows = self.evaluate(&specs)?;
        Ok(params
            .into_iter()
            .zip(specs)
            .zip(rows)
            .map(|(((a, chemical_potential), spec), rows)| {
                let temperature = match spec {
                    OccupationSpec::Thermal { temperature, .. } => temperature,
                    _ => 0.0,
                };
                let sweep = SweepResult {
                    parameter: "width_ratio".into(),
                    scenario: ReductionScenario {
                        occupation: spec,
                        ..*base
                    },
                    rows,
                };
                TemperatureRow {
                    mu_over_kt: a,
                    temperature,
                    chemical_potential,
                    plateau_mean: sweep.plateau_mean(),
                    sweep,
                }
            })
            .collect())
    }
}

/// Halve the width and set the depth to land in the `u_final` family:
/// `L_f = L_i/2`, `V_f` solved exactly from the `U` convention.
pub fn recipe(initial: &TrapSpec, u_final: f64) -> Result<TrapSpec> {
    let u_initial = initial.dimensionless_depth();
    if u_final.partial_cmp(&u_initial) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidTrap {
            name: "U_f",
            value: u_final,
            reason: "must be smaller than the initial U",
        });
    }
    TrapSpec::family_member(
        u_final,
        initial.relative_smoothness(),
        0.5 * initial.half_width(),
        initial.shape(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::TrapShape;
    use std::f64::consts::PI;

    fn small_scenario(ratio: f64) -> ReductionScenario {
        let initial =
            TrapSpec::family_member((20.0 * PI).powi(2), 0.05, 1.0, TrapShape::Bathtub).unwrap();
        let fin =
            TrapSpec::family_member((4.0 * PI).powi(2), 0.05, ratio, TrapShape::Bathtub).unwrap();
        ReductionScenario {
            initial,
            final_trap: fin,
            occupation: OccupationSpec::Ground { n_i: 20 },
            numerics: Numerics::default(),
        }
    }

    #[test]
    fn identity_scenario_keeps_every_atom() {
        let s = small_scenario(1.0);
        let s = s.with_final(s.initial);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.capacity_final, r.capacity_initial);
        let s = ReductionScenario {
            occupation: OccupationSpec::Ground {
                n_i: r.capacity_initial,
            },
            ..s
        };
        let r = run_scenario(&s).unwrap();
        assert!((r.statistics.fock_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recipe_halves_width_and_scales_depth() {
        let initial =
            TrapSpec::family_member(1e4 * PI * PI, 0.0, 1.0, TrapShape::SquareWell).unwrap();
        let fin = recipe(&initial, 1e2 * PI * PI).unwrap();
        assert_eq!(fin.half_width(), 0.5);
        assert!((fin.depth() / initial.depth() - 0.04).abs() < 1e-12);
        assert!(recipe(&initial, 1e4 * PI * PI).is_err());
    }

    #[test]
    fn sweep_rows_are_sorted_and_deterministic() {
        let base = small_scenario(0.5);
        let a = sweep_width_ratio(&base, &[0.7, 0.4, 0.55]).unwrap();
        let b = sweep_width_ratio(&base, &[0.4, 0.55, 0.7]).unwrap();
        let values: Vec<f64> = a.rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.4, 0.55, 0.7]);
        assert_eq!(a.rows, b.rows);
        assert!(sweep_width_ratio(&base, &[0.0]).is_err());
        assert!(sweep_width_ratio(&base, &[1.2]).is_err());
    }

    #[test]
    fn window_detection() {
        let row = |value, variance| SweepRow {
            value,
            mean: 0.0,
            variance,
            min_eigenvalue: 0.0,
            p_fock: 0.0,
            capacity_final: 0,
        };
        let sweep = SweepResult {
            parameter: "width_ratio".into(),
            scenario: small_scenario(0.5),
            rows: vec![
                row(0.1, 0.5),
                row(0.2, 1e-3),
                row(0.3, 1e-5),
                row(0.4, 2e-3),
                row(0.5, 0.2),
            ],
        };
        assert_eq!(sweep.window_below(1e-2), Some((0.2, 0.4)));
        assert_eq!(sweep.window_below(1e-6), None);
    }
}
