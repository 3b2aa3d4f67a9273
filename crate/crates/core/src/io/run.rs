//! Executes a [`RunConfig`] and writes its artifacts.
//!
//! Files are named `<command>_<tag>.<ext>`; figures use the figure (and
//! panel) name as tag. Column orders:
//!
//! | file | columns |
//! |------|---------|
//! | `spectrum_*.csv` | `trap,n,energy,scaled_energy,parity` |
//! | `counting_*.csv`, `figure_fig2?.csv` | `n,p_n` |
//! | `sweep_*.csv` (width ratio) | `width_ratio,mean,variance,min_eigenvalue,p_fock,capacity_final` |
//! | `sweep_*.csv` (`mu_over_kT`) | `mu_over_kT,kT,mu,width_ratio,mean,variance,min_eigenvalue,p_fock,capacity_final` |
//! | `sweep_*.csv` (smoothness), `figure_fig3.csv` | `sigma_tilde,sigma,capacity,top_gap` |
//! | `*_levels.csv` | `sigma_tilde,n,energy` |
//! | `figure_fig3_potential.csv` | `sigma_tilde,x,potential` |
//! | `figure_fig4.csv` | `family,sigma_tilde,width_ratio,mean,variance,min_eigenvalue,p_fock,capacity_final` |
//! | `figure_fig5.csv` | `U_i_over_pi2,N_i,mu_over_kT,kT,mu,width_ratio,mean,variance,min_eigenvalue,p_fock,capacity_final` |

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use log::info;
use serde_json::{json, Value};

use crate::counting::CountingStatistics;
use crate::error::Result;
use crate::experiments::{
    capacity_vs_smoothness, run_scenario, Numerics, OccupationSpec, ReductionScenario,
    ScenarioResult, SmoothnessRow, SweepResult, SweepRow, TemperatureRow, WidthSweep,
};
use crate::io::config::{Command, Figure, RunConfig, SweepParameter};
use crate::io::output::{
    ensure_dir, format_real, round_real, write_csv, write_gnuplot, write_json, Cell, Metadata,
};
use crate::spectrum::BoundSpectrum;
use crate::trap::{TrapShape, TrapSpec};

/// Variance below which a width ratio counts as inside the Fock window.
pub const WINDOW_VARIANCE: f64 = 1e-2;

/// Runs the configured command; returns the paths written, in order.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = config.output_dir.as_path();
    ensure_dir(dir)?;
    let echo = serde_json::to_string(config).expect("configuration serializes");
    let ctx = Ctx {
        dir,
        echo: &echo,
        numerics: config.numerics(),
    };
    match config.command {
        Command::Spectrum => run_spectrum(config, &ctx),
        Command::Counting => run_counting(config, &ctx),
        Command::Sweep => run_sweep(config, &ctx),
        Command::Figure => run_figure(config.figure.expect("validated"), &ctx),
    }
}

struct Ctx<'a> {
    dir: &'a Path,
    echo: &'a str,
    numerics: Numerics,
}

impl Ctx<'_> {
    fn meta(&self, command: &str, tag: &str) -> Metadata {
        let mut m = Metadata::new(command, tag, self.echo);
        m.push(
            "numerics",
            serde_json::to_string(&self.numerics).expect("numerics serialize"),
        );
        m
    }
}

fn describe_trap(t: &TrapSpec) -> String {
    format!(
        "shape={} depth={} half_width={} smoothness={} U={} sigma_tilde={}",
        t.shape().name(),
        t.depth(),
        t.half_width(),
        t.smoothness(),
        t.dimensionless_depth(),
        t.relative_smoothness()
    )
}

fn spectrum_rows(label: &str, s: &BoundSpectrum, half_width: f64, rows: &mut Vec<Vec<Cell>>) {
    let scaled = s.scaled_energies(half_width);
    for (n, (&e, &es)) in s.energies().iter().zip(&scaled).enumerate() {
        rows.push(vec![
            label.into(),
            (n + 1).into(),
            e.into(),
            es.into(),
            s.parity(n).name().into(),
        ]);
    }
}

fn run_spectrum(config: &RunConfig, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let initial = config.initial_trap()?;
    let mut traps = vec![("initial", initial)];
    if config.final_trap.is_some() {
        traps.push(("final", config.final_trap_at(&initial, None)?));
    }
    let specs: Vec<&TrapSpec> = traps.iter().map(|(_, t)| t).collect();
    let grid = ctx.numerics.grid_for(&specs)?;
    let mut meta = ctx.meta("spectrum", &config.tag);
    meta.push_grid("grid", &grid);
    let mut rows = Vec::new();
    for (label, trap) in &traps {
        let s = ctx.numerics.solve(trap, &grid)?;
        meta.push(&format!("{label}_trap"), describe_trap(trap));
        meta.push(&format!("{label}_capacity"), s.capacity().to_string());
        meta.push(
            &format!("{label}_near_threshold"),
            format!("{:?}", s.near_threshold()),
        );
        spectrum_rows(label, &s, trap.half_width(), &mut rows);
    }
    let header = ["trap", "n", "energy", "scaled_energy", "parity"];
    Ok(vec![write_csv(
        ctx.dir,
        &format!("spectrum_{}.csv", config.tag),
        &meta,
        &header,
        &rows,
    )?])
}

fn distribution_rows(stats: &CountingStatistics) -> Vec<Vec<Cell>> {
    stats
        .p
        .iter()
        .enumerate()
        .map(|(n, &p)| vec![n.into(), p.into()])
        .collect()
}

fn occupation_json(spec: &OccupationSpec) -> Value {
    match *spec {
        OccupationSpec::Ground { n_i } => json!({"type": "ground", "N_i": n_i}),
        OccupationSpec::Thermal { n_i, temperature } => {
            json!({"type": "thermal", "N_i": round_real(n_i), "kT": round_real(temperature)})
        }
        OccupationSpec::ThermalRatio { n_i, mu_over_kt } => {
            json!({"type": "thermal", "N_i": round_real(n_i), "mu_over_kT": round_real(mu_over_kt)})
        }
    }
}

fn result_summary(s: &ReductionScenario, r: &ScenarioResult) -> Value {
    let st = &r.statistics;
    json!({
        "initial": describe_trap(&s.initial),
        "final": describe_trap(&s.final_trap),
        "occupation": occupation_json(&s.occupation),
        "capacity_initial": r.capacity_initial,
        "capacity_final": r.capacity_final,
        "mean": round_real(st.mean),
        "variance": round_real(st.variance),
        "kappa3": round_real(st.cumulants[2]),
        "fano_factor": round_real(st.fano_factor()),
        "p_fock": round_real(st.fock_probability()),
        "min_eigenvalue": round_real(r.fock.min_eigenvalue),
        "fock_satisfied": r.fock.satisfied,
        "temperature": r.occupation.temperature().map(round_real),
        "chemical_potential": r.occupation.chemical_potential().map(round_real),
    })
}

/// Solves the initial trap alone to learn its capacity (needed to resolve
/// occupations given relative to it).
fn initial_capacity(trap: &TrapSpec, numerics: &Numerics) -> Result<usize> {
    let grid = numerics.grid_for(&[trap])?;
    Ok(numerics.solve(trap, &grid)?.capacity())
}

fn write_distribution(
    ctx: &Ctx,
    command: &str,
    tag: &str,
    s: &ReductionScenario,
    r: &ScenarioResult,
) -> Result<Vec<PathBuf>> {
    let mut meta = ctx.meta(command, tag);
    meta.push_grid("grid_initial", &r.initial_grid);
    meta.push_grid("grid_final", &r.final_grid);
    meta.push("initial_trap", describe_trap(&s.initial));
    meta.push("final_trap", describe_trap(&s.final_trap));
    meta.push("capacity_initial", r.capacity_initial.to_string());
    meta.push("capacity_final", r.capacity_final.to_string());
    meta.push(
        "mean_variance",
        format!(
            "{} {}",
            crate::io::output::format_real(r.statistics.mean),
            crate::io::output::format_real(r.statistics.variance)
        ),
    );
    let csv = write_csv(
        ctx.dir,
        &format!("{command}_{tag}.csv"),
        &meta,
        &["n", "p_n"],
        &distribution_rows(&r.statistics),
    )?;
    let json = write_json(
        ctx.dir,
        &format!("{command}_{tag}_summary.json"),
        &meta,
        result_summary(s, r),
    )?;
    Ok(vec![csv, json])
}

fn run_counting(config: &RunConfig, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let initial = config.initial_trap()?;
    let capacity = initial_capacity(&initial, &ctx.numerics)?;
    let scenario = config.scenario(capacity)?;
    let result = run_scenario(&scenario)?;
    info!(
        "mean {:.6} variance {:.3e} p(C_f) {:.6}",
        result.statistics.mean,
        result.statistics.variance,
        result.statistics.fock_probability()
    );
    write_distribution(ctx, "counting", &config.tag, &scenario, &result)
}

fn push_sweep_grids(meta: &mut Metadata, suffix: &str, sweep: &WidthSweep) {
    meta.push_grid(&format!("grid_initial{suffix}"), sweep.initial().grid());
    let (h, n) = sweep.resolution();
    meta.push(
        &format!("grid_rows{suffix}"),
        format!(
            "per-row boxes on a shared lattice; finest spacing={} largest n_points={n}",
            format_real(h)
        ),
    );
}

fn sweep_cells(r: &SweepRow) -> Vec<Cell> {
    vec![
        r.value.into(),
        r.mean.into(),
        r.variance.into(),
        r.min_eigenvalue.into(),
        r.p_fock.into(),
        r.capacity_final.into(),
    ]
}

const SWEEP_HEADER: [&str; 6] = [
    "width_ratio",
    "mean",
    "variance",
    "min_eigenvalue",
    "p_fock",
    "capacity_final",
];

fn sweep_summary(s: &SweepResult) -> Value {
    json!({
        "plateau_mean": round_real(s.plateau_mean()),
        "window_variance_threshold": WINDOW_VARIANCE,
        "window": s.window_below(WINDOW_VARIANCE).map(|(a, b)| [round_real(a), round_real(b)]),
        "occupation": occupation_json(&s.scenario.occupation),
    })
}

fn smoothness_outputs(
    ctx: &Ctx,
    stem: &str,
    meta: &Metadata,
    half_width: f64,
    rows: &[SmoothnessRow],
) -> Result<Vec<PathBuf>> {
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                (r.smoothness / half_width).into(),
                r.smoothness.into(),
                r.capacity.into(),
                r.top_gap.unwrap_or(f64::NAN).into(),
            ]
        })
        .collect();
    let levels: Vec<Vec<Cell>> = rows
        .iter()
        .flat_map(|r| {
            r.energies.iter().enumerate().map(move |(n, &e)| {
                vec![(r.smoothness / half_width).into(), (n + 1).into(), e.into()]
            })
        })
        .collect();
    Ok(vec![
        write_csv(
            ctx.dir,
            &format!("{stem}.csv"),
            meta,
            &["sigma_tilde", "sigma", "capacity", "top_gap"],
            &table,
        )?,
        write_csv(
            ctx.dir,
            &format!("{stem}_levels.csv"),
            meta,
            &["sigma_tilde", "n", "energy"],
            &levels,
        )?,
    ])
}

fn run_sweep(config: &RunConfig, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let sweep = config.sweep.as_ref().expect("validated");
    let initial = config.initial_trap()?;
    let stem = format!("sweep_{}", config.tag);
    let mut meta = ctx.meta("sweep", &config.tag);
    meta.push("initial_trap", describe_trap(&initial));

    if sweep.parameter == SweepParameter::Smoothness {
        let sigmas: Vec<f64> = sweep
            .values
            .iter()
            .map(|s| s * initial.half_width())
            .collect();
        let rows = capacity_vs_smoothness(
            initial.depth(),
            initial.half_width(),
            &sigmas,
            &ctx.numerics,
        )?;
        return smoothness_outputs(ctx, &stem, &meta, initial.half_width(), &rows);
    }

    let base = ReductionScenario {
        initial,
        final_trap: config.final_trap_at(&initial, Some(1.0))?,
        occupation: OccupationSpec::Ground { n_i: 1 },
        numerics: ctx.numerics,
    };
    let ratios: Vec<f64> = match sweep.parameter {
        SweepParameter::WidthRatio => sweep.values.clone(),
        _ => sweep
            .ratios
            .as_ref()
            .expect("validated")
            .iter()
            .map(|r| r.0)
            .collect(),
    };
    let prepared = WidthSweep::prepare(&base, &ratios)?;
    meta.push("final_family", describe_trap(&base.final_trap));
    push_sweep_grids(&mut meta, "", &prepared);
    meta.push(
        "capacity_initial",
        prepared.initial().capacity().to_string(),
    );
    let occupation = config.occupation.as_ref().expect("validated");
    let spec = occupation.resolve(prepared.initial().capacity())?;

    if sweep.parameter == SweepParameter::WidthRatio {
        let result = prepared.run(&spec)?;
        let rows: Vec<Vec<Cell>> = result.rows.iter().map(sweep_cells).collect();
        return Ok(vec![
            write_csv(ctx.dir, &format!("{stem}.csv"), &meta, &SWEEP_HEADER, &rows)?,
            write_json(
                ctx.dir,
                &format!("{stem}_summary.json"),
                &meta,
                sweep_summary(&result),
            )?,
        ]);
    }

    let temps = prepared.temperature_rows(spec.particle_number(), &sweep.values)?;
    let rows = temperature_cells(&temps, None);
    let header = [
        "mu_over_kT",
        "kT",
        "mu",
        "width_ratio",
        "mean",
        "variance",
        "min_eigenvalue",
        "p_fock",
        "capacity_final",
    ];
    let summary: Vec<Value> = temps
        .iter()
        .map(|t| {
            json!({
                "mu_over_kT": round_real(t.mu_over_kt),
                "kT": round_real(t.temperature),
                "mu": round_real(t.chemical_potential),
                "plateau_mean": round_real(t.plateau_mean),
            })
        })
        .collect();
    Ok(vec![
        write_csv(ctx.dir, &format!("{stem}.csv"), &meta, &header, &rows)?,
        write_json(
            ctx.dir,
            &format!("{stem}_summary.json"),
            &meta,
            json!({ "temperatures": summary }),
        )?,
    ])
}

/// Long-format rows for temperature sweeps, optionally prefixed with the
/// initial `U/π²` and `N_i`.
fn temperature_cells(temps: &[TemperatureRow], prefix: Option<(f64, f64)>) -> Vec<Vec<Cell>> {
    temps
        .iter()
        .flat_map(|t| {
            t.sweep.rows.iter().map(move |r| {
                let mut row: Vec<Cell> = Vec::new();
                if let Some((u, n)) = prefix {
                    row.push(u.into());
                    row.push(n.into());
                }
                row.extend([
                    t.mu_over_kt.into(),
                    t.temperature.into(),
                    t.chemical_potential.into(),
                ]);
                row.extend(sweep_cells(r));
                row
            })
        })
        .collect()
}

fn evenly(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn family(u: f64, sigma_tilde: f64, half_width: f64, shape: TrapShape) -> Result<TrapSpec> {
    TrapSpec::family_member(u, sigma_tilde, half_width, shape)
}

fn run_figure(figure: Figure, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    match figure {
        Figure::Fig2 => figure_2(ctx),
        Figure::Fig3 => figure_3(ctx),
        Figure::Fig4 => figure_4(ctx),
        Figure::Fig5 => figure_5(ctx),
    }
}

/// Distributions after squeezing alone, the half-width recipe, and
/// weakening alone.
fn figure_2(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let initial = family(1e4 * PI * PI, 0.03, 1.0, TrapShape::Bathtub)?;
    let c_i = initial_capacity(&initial, &ctx.numerics)?;
    let mut paths = Vec::new();
    for (panel, ratio) in [("a", 0.04), ("b", 0.5), ("c", 1.0)] {
        let s = ReductionScenario {
            initial,
            final_trap: family(1e2 * PI * PI, 0.03, ratio, TrapShape::Bathtub)?,
            occupation: OccupationSpec::Ground { n_i: c_i },
            numerics: ctx.numerics,
        };
        let r = run_scenario(&s)?;
        paths.extend(write_distribution(
            ctx,
            "figure",
            &format!("fig2{panel}"),
            &s,
            &r,
        )?);
    }
    paths.push(write_gnuplot(
        ctx.dir,
        "figure_fig2.gp",
        "set datafile separator ','\nset key autotitle columnhead\nset style fill solid 0.6\n\
         set xlabel 'n'\nset ylabel 'p(n)'\nset multiplot layout 1,3\n\
         plot 'figure_fig2a.csv' using 1:2 with boxes title 'L_f/L_i = 0.04'\n\
         plot 'figure_fig2b.csv' using 1:2 with boxes title 'L_f/L_i = 0.5'\n\
         plot 'figure_fig2c.csv' using 1:2 with boxes title 'L_f/L_i = 1'\nunset multiplot\n",
    )?);
    Ok(paths)
}

/// Bound states of a bathtub of fixed depth as the walls soften.
fn figure_3(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let depth = (10.0 * PI).powi(2);
    let sigmas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
    let rows = capacity_vs_smoothness(depth, 1.0, &sigmas, &ctx.numerics)?;
    let mut meta = ctx.meta("figure", "fig3");
    meta.push("depth", depth.to_string());
    meta.push("half_width", "1");
    let mut paths = smoothness_outputs(ctx, "figure_fig3", &meta, 1.0, &rows)?;
    let xs = evenly(-2.0, 2.0, 0.01);
    let mut profile = Vec::new();
    for &sigma in &sigmas {
        let t = TrapSpec::bathtub(depth, 1.0, sigma)?;
        for &x in &xs {
            profile.push(vec![sigma.into(), x.into(), t.potential(x).into()]);
        }
    }
    paths.push(write_csv(
        ctx.dir,
        "figure_fig3_potential.csv",
        &meta,
        &["sigma_tilde", "x", "potential"],
        &profile,
    )?);
    paths.push(write_gnuplot(
        ctx.dir,
        "figure_fig3.gp",
        "set datafile separator ','\nset key autotitle columnhead\n\
         set multiplot layout 1,2\nset xlabel 'x/L'\nset ylabel 'V(x), E_n'\n\
         plot 'figure_fig3_potential.csv' using 2:($1==0.05?$3:1/0) with lines title 'sigma/L = 0.05', \\\n\
              'figure_fig3_potential.csv' using 2:($1==0.5?$3:1/0) with lines title 'sigma/L = 0.5'\n\
         set xlabel 'sigma/L'\nset ylabel 'bound states'\n\
         plot 'figure_fig3.csv' using 1:3 with linespoints title 'capacity'\nunset multiplot\n",
    )?);
    Ok(paths)
}

/// Width-ratio sweeps for three bathtub smoothnesses and the Gaussian trap.
fn figure_4(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let ratios = evenly(0.05, 1.0, 0.025);
    let mut cases: Vec<(&str, f64, TrapSpec, TrapSpec)> = Vec::new();
    for sigma_tilde in [0.01, 0.03, 0.1] {
        cases.push((
            "bathtub",
            sigma_tilde,
            family((100.0 * PI).powi(2), sigma_tilde, 1.0, TrapShape::Bathtub)?,
            family((10.0 * PI).powi(2), sigma_tilde, 1.0, TrapShape::Bathtub)?,
        ));
    }
    cases.push((
        "inverted_gaussian",
        0.0,
        family((28.0 * PI).powi(2), 0.0, 1.0, TrapShape::InvertedGaussian)?,
        family((8.0 * PI).powi(2), 0.0, 1.0, TrapShape::InvertedGaussian)?,
    ));
    let mut meta = ctx.meta("figure", "fig4");
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (name, sigma_tilde, initial, final_trap) in cases {
        let base = ReductionScenario {
            initial,
            final_trap,
            occupation: OccupationSpec::Ground { n_i: 1 },
            numerics: ctx.numerics,
        };
        let prepared = WidthSweep::prepare(&base, &ratios)?;
        let c_i = prepared.initial().capacity();
        let result = prepared.run(&OccupationSpec::Ground { n_i: c_i })?;
        push_sweep_grids(&mut meta, &format!("_{name}_{sigma_tilde}"), &prepared);
        for r in &result.rows {
            let mut row: Vec<Cell> = vec![name.into(), sigma_tilde.into()];
            row.extend(sweep_cells(r));
            rows.push(row);
        }
        let mut s = sweep_summary(&result);
        s["family"] = json!(name);
        s["sigma_tilde"] = json!(sigma_tilde);
        s["capacity_initial"] = json!(c_i);
        summary.push(s);
    }
    let mut header = vec!["family", "sigma_tilde"];
    header.extend(SWEEP_HEADER);
    Ok(vec![
        write_csv(ctx.dir, "figure_fig4.csv", &meta, &header, &rows)?,
        write_json(ctx.dir, "figure_fig4_summary.json", &meta, json!({ "sweeps": summary }))?,
        write_gnuplot(
            ctx.dir,
            "figure_fig4.gp",
            "set datafile separator ','\nset key autotitle columnhead\n\
             set multiplot layout 1,2\nset xlabel 'L_f/L_i'\nset ylabel 'mean'\n\
             plot for [s in '0.01 0.03 0.1'] 'figure_fig4.csv' using 3:(strcol(1) eq 'bathtub' && abs($2-s)<1e-9 ? $4 : 1/0) with lines title 'sigma/L = '.s\n\
             set ylabel 'variance'\nset logscale y\n\
             plot for [s in '0.01 0.03 0.1'] 'figure_fig4.csv' using 3:(strcol(1) eq 'bathtub' && abs($2-s)<1e-9 ? $5 : 1/0) with lines title 'sigma/L = '.s\n\
             unset multiplot\n",
        )?,
    ])
}

/// Plateau of the mean versus temperature, and its recovery in a deeper
/// initial trap at the same temperatures.
fn figure_5(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let ratios = evenly(0.05, 1.0, 0.025);
    let mu_over_kt = [20.0, 10.0, 7.0, 5.0, 4.0, 3.0];
    let filling = 0.8;
    let final_trap = family((10.0 * PI).powi(2), 0.0, 1.0, TrapShape::SquareWell)?;
    let mut meta = ctx.meta("figure", "fig5");
    let mut rows = Vec::new();
    let mut summary = Vec::new();

    let shallow = ReductionScenario {
        initial: family((100.0 * PI).powi(2), 0.0, 1.0, TrapShape::SquareWell)?,
        final_trap,
        occupation: OccupationSpec::Ground { n_i: 1 },
        numerics: ctx.numerics,
    };
    let prepared = WidthSweep::prepare(&shallow, &ratios)?;
    let n_shallow = filling * prepared.initial().capacity() as f64;
    let temps = prepared.temperature_rows(n_shallow, &mu_over_kt)?;
    rows.extend(temperature_cells(&temps, Some((1e4, n_shallow))));
    for t in &temps {
        summary.push(json!({
            "U_i_over_pi2": 1e4, "N_i": n_shallow, "mu_over_kT": t.mu_over_kt,
            "kT": round_real(t.temperature), "plateau_mean": round_real(t.plateau_mean),
        }));
    }

    let deep = ReductionScenario {
        initial: family((130.0 * PI).powi(2), 0.0, 1.0, TrapShape::SquareWell)?,
        ..shallow
    };
    let prepared = WidthSweep::prepare(&deep, &ratios)?;
    let n_deep = filling * prepared.initial().capacity() as f64;
    for t in &temps {
        let sweep = prepared.run(&OccupationSpec::Thermal {
            n_i: n_deep,
            temperature: t.temperature,
        })?;
        let occ = OccupationSpec::Thermal {
            n_i: n_deep,
            temperature: t.temperature,
        }
        .build(prepared.initial())?;
        let row = TemperatureRow {
            mu_over_kt: t.mu_over_kt,
            temperature: t.temperature,
            chemical_potential: occ.chemical_potential().unwrap_or(f64::NAN),
            plateau_mean: sweep.plateau_mean(),
            sweep,
        };
        rows.extend(temperature_cells(
            std::slice::from_ref(&row),
            Some((1.69e4, n_deep)),
        ));
        summary.push(json!({
            "U_i_over_pi2": 1.69e4, "N_i": n_deep,
            "mu_over_kT_of_reference": t.mu_over_kt,
            "kT": round_real(t.temperature), "plateau_mean": round_real(row.plateau_mean),
        }));
    }
    meta.push("final_family", describe_trap(&final_trap));
    let header = [
        "U_i_over_pi2",
        "N_i",
        "mu_over_kT",
        "kT",
        "mu",
        "width_ratio",
        "mean",
        "variance",
        "min_eigenvalue",
        "p_fock",
        "capacity_final",
    ];
    Ok(vec![
        write_csv(ctx.dir, "figure_fig5.csv", &meta, &header, &rows)?,
        write_json(ctx.dir, "figure_fig5_summary.json", &meta, json!({ "plateaus": summary }))?,
        write_gnuplot(
            ctx.dir,
            "figure_fig5.gp",
            "set datafile separator ','\nset key autotitle columnhead\n\
             set xlabel 'L_f/L_i'\nset ylabel 'mean'\n\
             plot for [a in '20 10 7 5 4 3'] 'figure_fig5.csv' using 6:($1==10000 && $3==a ? $7 : 1/0) with lines title 'mu/kT = '.a\n",
        )?,
    ])
}
