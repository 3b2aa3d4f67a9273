//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! with the measured quantities, then asserts.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! to see the report lines in order.

use std::f64::consts::PI;
use std::time::Instant;

use fockprep::counting::{
    characteristic_function, mean_number, number_distribution, poisson_binomial_oracle,
    variance_number, KernelMatrix,
};
use fockprep::experiments::{
    capacity_vs_smoothness, run_scenario, solve_scenario_spectra, sweep_width_ratio,
    temperature_of, temperature_sweep, Numerics, OccupationSpec, ReductionScenario, SweepResult,
};
use fockprep::grid::GridPolicy;
use fockprep::occupation::fermi_dirac;
use fockprep::spectrum::{bound_spectrum, BoundSpectrum};
use fockprep::trap::{TrapShape, TrapSpec};
use fockprep::Grid;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn report(criterion: u32, pass: bool, detail: String) {
    println!(
        "criterion {criterion:>2}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn trap(u: f64, sigma_tilde: f64, half_width: f64, shape: TrapShape) -> TrapSpec {
    TrapSpec::family_member(u, sigma_tilde, half_width, shape).unwrap()
}

/// Initial trap `U_i`, final family `U_f` at `ratio · L_i`, `L_i = 1`.
fn scenario(
    u_i: f64,
    u_f: f64,
    sigma_tilde: f64,
    shape: TrapShape,
    ratio: f64,
    occupation: OccupationSpec,
) -> ReductionScenario {
    ReductionScenario {
        initial: trap(u_i, sigma_tilde, 1.0, shape),
        final_trap: trap(u_f, sigma_tilde, ratio, shape),
        occupation,
        numerics: Numerics::default(),
    }
}

fn own_capacity(t: &TrapSpec) -> usize {
    let numerics = Numerics::default();
    let grid = numerics.grid_for(&[t]).unwrap();
    numerics.solve(t, &grid).unwrap().capacity()
}

/// Zero-temperature scenario with every initial level filled.
fn filled(u_i: f64, u_f: f64, sigma_tilde: f64, shape: TrapShape, ratio: f64) -> ReductionScenario {
    let n_i = own_capacity(&trap(u_i, sigma_tilde, 1.0, shape));
    scenario(
        u_i,
        u_f,
        sigma_tilde,
        shape,
        ratio,
        OccupationSpec::Ground { n_i },
    )
}

fn ratios(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

#[test]
fn criterion_01_fock_state_at_half_width() {
    let start = Instant::now();
    let s = filled(1e4 * PI * PI, 1e2 * PI * PI, 0.03, TrapShape::Bathtub, 0.5);
    let r = run_scenario(&s).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let st = &r.statistics;
    let p10 = st.p.get(10).copied().unwrap_or(0.0);
    // N_i = C_i: every initial level is filled, whatever the bathtub's exact
    // capacity; the capacity convention itself is checked separately.
    let pass =
        p10 >= 0.999 && st.variance <= 1e-3 && (st.mean - 10.0).abs() <= 1e-3 && elapsed < 30.0;
    report(
        1,
        pass,
        format!(
            "C_i={} C_f={} p(10)={:.9} mean={:.9} var={:.3e} runtime={elapsed:.2}s",
            r.capacity_initial, r.capacity_final, p10, st.mean, st.variance
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_squeezing_and_weakening_alone_fail() {
    let mut pass = true;
    let mut detail = Vec::new();
    for ratio in [0.04, 1.0] {
        let s = filled(
            1e4 * PI * PI,
            1e2 * PI * PI,
            0.03,
            TrapShape::Bathtub,
            ratio,
        );
        let st = run_scenario(&s).unwrap().statistics;
        let outcomes = st.p.iter().filter(|&&p| p > 0.05).count();
        let ok = st.mean < 10.0 && st.variance > 0.1 && outcomes >= 3;
        pass &= ok;
        detail.push(format!(
            "ratio {ratio}: mean={:.4} var={:.4} outcomes(p>0.05)={outcomes}",
            st.mean, st.variance
        ));
    }
    report(2, pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_03_square_well_capacity_calibration() {
    let c100 = own_capacity(&trap(1e4 * PI * PI, 0.0, 1.0, TrapShape::SquareWell));
    let c10 = own_capacity(&trap(1e2 * PI * PI, 0.0, 1.0, TrapShape::SquareWell));
    let pass = c100.abs_diff(100) <= 1 && c10.abs_diff(10) <= 1;
    report(3, pass, format!("C(10⁴π²)={c100} C(10²π²)={c10}"));
    assert!(pass);
}

#[test]
fn criterion_04_soft_walls_bind_more_states() {
    let rows = capacity_vs_smoothness(
        (10.0 * PI).powi(2),
        1.0,
        &[0.05, 0.2, 0.5],
        &Numerics::default(),
    )
    .unwrap();
    let caps: Vec<usize> = rows.iter().map(|r| r.capacity).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.top_gap.unwrap()).collect();
    let pass = caps.windows(2).all(|w| w[0] <= w[1])
        && caps[2] > caps[0]
        && gaps.windows(2).all(|w| w[1] < w[0]);
    report(4, pass, format!("capacities {caps:?}, top gaps {gaps:.4?}"));
    assert!(pass);
}

fn window_width(sweep: &SweepResult) -> Option<(f64, f64)> {
    sweep.window_below(1e-2)
}

#[test]
fn criterion_05_robust_plateau() {
    let grid = ratios(0.05, 1.0, 0.025);
    let mut pass = true;
    let mut detail = Vec::new();
    let mut previous_width = 0.0;
    for sigma_tilde in [0.01, 0.03, 0.1] {
        let base = filled(
            (100.0 * PI).powi(2),
            (10.0 * PI).powi(2),
            sigma_tilde,
            TrapShape::Bathtub,
            0.5,
        );
        let sweep = sweep_width_ratio(&base, &grid).unwrap();
        let window = window_width(&sweep);
        let (contains, width) = match window {
            Some((lo, hi)) => (lo <= 0.4 + 1e-12 && hi >= 0.6 - 1e-12, hi - lo),
            None => (false, 0.0),
        };
        let ok = contains && width >= previous_width - 1e-12;
        previous_width = width;
        pass &= ok;
        detail.push(format!("σ̃={sigma_tilde}: window {window:?}"));
    }

    let u_i = (28.0 * PI).powi(2);
    let u_f = (8.0 * PI).powi(2);
    let c_i = own_capacity(&trap(u_i, 0.0, 1.0, TrapShape::InvertedGaussian));
    let c_f = own_capacity(&trap(u_f, 0.0, 1.0, TrapShape::InvertedGaussian));
    let base = filled(u_i, u_f, 0.0, TrapShape::InvertedGaussian, 0.5);
    let gauss = sweep_width_ratio(&base, &grid).unwrap();
    let plateau = gauss.plateau_mean();
    let gauss_ok =
        c_i.abs_diff(100) <= 2 && c_f.abs_diff(10) <= 1 && (plateau - 10.0).abs() <= 0.05;
    pass &= gauss_ok;
    detail.push(format!(
        "gaussian C_i={c_i} C_f={c_f} plateau mean={plateau:.4} window {:?}",
        window_width(&gauss)
    ));
    report(5, pass, detail.join("; "));
    assert!(pass);
}

fn square_thermal_base(u_i: f64, n_i: f64) -> ReductionScenario {
    scenario(
        u_i,
        (10.0 * PI).powi(2),
        0.0,
        TrapShape::SquareWell,
        0.5,
        OccupationSpec::ThermalRatio {
            n_i,
            mu_over_kt: 10.0,
        },
    )
}

#[test]
fn criterion_06_temperature_limits_the_plateau() {
    let grid = ratios(0.3, 0.7, 0.025);
    let base = square_thermal_base((100.0 * PI).powi(2), 80.0);
    let rows = temperature_sweep(&base, &[20.0, 10.0, 5.0], &grid).unwrap();
    let plateaus: Vec<f64> = rows.iter().map(|r| r.plateau_mean).collect();
    let hot = rows.last().unwrap();

    // the deeper trap holds more atoms at the same filling fraction
    let deep_trap = trap((130.0 * PI).powi(2), 0.0, 1.0, TrapShape::SquareWell);
    let deep_n = 0.8 * own_capacity(&deep_trap) as f64;
    let deeper = ReductionScenario {
        initial: deep_trap,
        occupation: OccupationSpec::Thermal {
            n_i: deep_n,
            temperature: hot.temperature,
        },
        ..base
    };
    let recovered = sweep_width_ratio(&deeper, &grid).unwrap().plateau_mean();
    let pass = hot.plateau_mean < 9.9
        && plateaus.windows(2).all(|w| w[1] <= w[0] + 1e-9)
        && recovered >= 9.9;
    report(
        6,
        pass,
        format!(
            "plateau at μ/kT = 20, 10, 5: {plateaus:.5?}; k_BT(5)={:.4}; U_i=(130π)², N_i={deep_n} at same k_BT: {recovered:.5}",
            hot.temperature
        ),
    );
    assert!(pass);
}

fn random_kernel(n: usize, lambdas: &[f64], seed_matrix: &[f64]) -> KernelMatrix {
    let a = DMatrix::from_column_slice(n, n, &seed_matrix[..n * n]);
    let q = a.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&lambdas[..n]));
    let b = &q * d * q.transpose();
    let b = (&b + b.transpose()) * 0.5;
    KernelMatrix::new(b).unwrap()
}

#[test]
fn criterion_07_determinant_inversion_matches_bernoulli_convolution() {
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let mut worst = [0.0_f64; 4];
    let strategy = (1usize..=12).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0.0..=1.0_f64, n),
            prop::collection::vec(-1.0..1.0_f64, n * n),
        )
    });
    let result = runner.run(&strategy, |(n, lambdas, seed)| {
        let b = random_kernel(n, &lambdas, &seed);
        let dft = number_distribution(&b).p;
        let oracle = poisson_binomial_oracle(&b).unwrap();
        let elementwise = dft
            .iter()
            .zip(&oracle)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        let norm = (dft.iter().sum::<f64>() - 1.0).abs();
        let m1: f64 = dft.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let m2: f64 = dft
            .iter()
            .enumerate()
            .map(|(k, p)| (k * k) as f64 * p)
            .sum();
        let mean_err = (m1 - mean_number(&b)).abs();
        let var_err = (m2 - m1 * m1 - variance_number(&b)).abs();
        let f0 = characteristic_function(&b, 0.0);
        prop_assert!((f0.re - 1.0).abs() < 1e-12 && f0.im.abs() < 1e-12);
        prop_assert!(elementwise <= 1e-10, "elementwise {elementwise:e}");
        prop_assert!(norm <= 1e-10, "normalization {norm:e}");
        prop_assert!(mean_err <= 1e-8 && var_err <= 1e-8);
        Ok(())
    });
    // Worst-case errors over a fixed deterministic sample for the report line.
    for n in 1..=12 {
        let lambdas: Vec<f64> = (0..n).map(|k| ((k * 7 + 3) % 11) as f64 / 10.0).collect();
        let seed: Vec<f64> = (0..n * n)
            .map(|k| ((k * 37 + 11) % 17) as f64 / 8.5 - 1.0)
            .collect();
        let b = random_kernel(n, &lambdas, &seed);
        let dft = number_distribution(&b).p;
        let oracle = poisson_binomial_oracle(&b).unwrap();
        for (a, c) in dft.iter().zip(&oracle) {
            worst[0] = worst[0].max((a - c).abs());
        }
        worst[1] = worst[1].max((dft.iter().sum::<f64>() - 1.0).abs());
    }
    let pass = result.is_ok();
    report(
        7,
        pass,
        format!(
            "200 random kernels: {}; sample max |Δp|={:.2e}, |Σp-1|={:.2e}",
            match &result {
                Ok(()) => "all agree".to_string(),
                Err(e) => format!("{e}"),
            },
            worst[0],
            worst[1]
        ),
    );
    assert!(pass);
}

/// Bound energies of the square well `-V` on `|x| < L` from the matching
/// conditions `k tan(kL) = κ` (even) and `-k cot(kL) = κ` (odd), located by
/// bisection on each branch of the tangent.
fn transcendental_square_well(v: f64, l: f64) -> Vec<f64> {
    let mismatch = |e: f64, even: bool| {
        let k = (e + v).sqrt();
        let kappa = (-e).sqrt();
        let (s, c) = (k * l).sin_cos();
        if even {
            k * s - kappa * c
        } else {
            -k * c - kappa * s
        }
    };
    let k_max = v.sqrt();
    let mut energies = Vec::new();
    let mut n = 0;
    loop {
        // level n lives where k L ∈ (nπ/2, (n+1)π/2)
        let k_lo = n as f64 * PI / (2.0 * l);
        if k_lo >= k_max {
            break;
        }
        let k_hi = ((n + 1) as f64 * PI / (2.0 * l)).min(k_max);
        let even = n % 2 == 0;
        let (mut lo, mut hi) = (k_lo * k_lo - v, k_hi * k_hi - v);
        let (f_lo, f_hi) = (mismatch(lo, even), mismatch(hi, even));
        if f_lo * f_hi > 0.0 {
            break;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mismatch(mid, even) * f_lo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        energies.push(0.5 * (lo + hi));
        n += 1;
    }
    energies
}

#[test]
fn criterion_08_square_well_matches_transcendental_roots() {
    let (v, l) = (2.0, 1.0);
    let well = TrapSpec::square_well(v, l).unwrap();
    let exact = transcendental_square_well(v, l);
    let grid = GridPolicy::default().grid_for(&[&well]).unwrap();
    let solve = |g: &Grid| -> BoundSpectrum { bound_spectrum(&well, g).unwrap() };
    let coarse = solve(&grid);
    let rel: Vec<f64> = coarse
        .energies()
        .iter()
        .zip(&exact)
        .map(|(e, x)| ((e - x) / x).abs())
        .collect();
    let fine = solve(&grid.refined());
    let finer = solve(&grid.refined().refined());
    let err = |s: &BoundSpectrum| (s.energies()[0] - exact[0]).abs();
    let order = (err(&coarse) / err(&fine)).log2();
    let order_fine = (err(&fine) / err(&finer)).log2();
    let pass = coarse.capacity() == exact.len()
        && rel.iter().all(|&r| r <= 1e-4)
        && (order - 2.0).abs() < 0.3
        && (order_fine - 2.0).abs() < 0.3;
    report(
        8,
        pass,
        format!(
            "exact {exact:.8?}, relative errors {rel:?}, observed orders {order:.3}, {order_fine:.3}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_isospectral_families_agree() {
    let mut worst = 0.0_f64;
    for (shape, sigma_tilde) in [
        (TrapShape::Bathtub, 0.03),
        (TrapShape::SquareWell, 0.0),
        (TrapShape::InvertedGaussian, 0.0),
    ] {
        let u = (20.0 * PI).powi(2);
        let a = trap(u, sigma_tilde, 1.0, shape);
        let b = trap(u, sigma_tilde, 0.5, shape);
        assert!((b.depth() / a.depth() - 4.0).abs() < 1e-12);
        let spectrum = |t: &TrapSpec| {
            let g = GridPolicy::default().grid_for(&[t]).unwrap();
            bound_spectrum(t, &g)
                .unwrap()
                .scaled_energies(t.half_width())
        };
        let (ea, eb) = (spectrum(&a), spectrum(&b));
        assert!(ea.len() >= 10 && eb.len() >= 10);
        for (x, y) in ea.iter().zip(&eb).take(10) {
            worst = worst.max(((x - y) / x).abs());
        }
    }
    let pass = worst <= 1e-6;
    report(
        9,
        pass,
        format!("max relative deviation over the lowest 10 levels {worst:.2e}"),
    );
    assert!(pass);
}

/// Independent chemical-potential solve: plain bisection on a bracket
/// widened until the particle count changes sign.
fn independent_mu(energies: &[f64], kt: f64, n: f64) -> f64 {
    let count = |mu: f64| {
        energies
            .iter()
            .map(|&e| 1.0 / (((e - mu) / kt).exp() + 1.0))
            .sum::<f64>()
            - n
    };
    let mut lo = energies[0] - kt;
    while count(lo) > 0.0 {
        lo -= kt;
    }
    let mut hi = energies[energies.len() - 1];
    while count(hi) < 0.0 {
        hi += kt;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if count(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_10_thermal_normalization() {
    let mut worst_sum = 0.0_f64;
    let mut worst_mu = 0.0_f64;
    let mut runs = 0;
    for (u_i, n_i) in [
        ((100.0 * PI).powi(2), 80.0),
        ((130.0 * PI).powi(2), 80.0),
        ((20.0 * PI).powi(2), 12.5),
    ] {
        for mu_over_kt in [40.0, 20.0, 10.0, 5.0, 2.0] {
            let base = square_thermal_base(u_i, n_i);
            let kt = temperature_of(&base.initial, mu_over_kt, n_i, &base.numerics).unwrap();
            for occupation in [
                OccupationSpec::Thermal {
                    n_i,
                    temperature: kt,
                },
                OccupationSpec::ThermalRatio { n_i, mu_over_kt },
            ] {
                let s = ReductionScenario { occupation, ..base };
                let spectra = solve_scenario_spectra(&s).unwrap();
                let occ = s.occupation.build(&spectra.initial).unwrap();
                let sum: f64 = occ.weights().iter().sum();
                worst_sum = worst_sum.max((sum - n_i).abs());
                let mu = occ.chemical_potential().unwrap();
                let kt = occ.temperature().unwrap();
                let reference = independent_mu(spectra.initial.energies(), kt, n_i);
                worst_mu = worst_mu.max((mu - reference).abs() / reference.abs().max(1.0));
                for (w, &e) in occ.weights().iter().zip(spectra.initial.energies()) {
                    assert!((w - fermi_dirac(e, mu, kt)).abs() < 1e-15);
                }
                runs += 1;
            }
        }
    }
    let pass = worst_sum <= 1e-10 && worst_mu <= 1e-9;
    report(
        10,
        pass,
        format!(
            "{runs} thermal runs: max |Σπ - N_i|={worst_sum:.2e}, max μ deviation {worst_mu:.2e}"
        ),
    );
    assert!(pass);
}
