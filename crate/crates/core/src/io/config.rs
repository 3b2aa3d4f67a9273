//! The JSON run configuration: schema, defaults and validation.
//!
//! Every object rejects unknown keys. Numeric values are range-checked while
//! parsing, so an error names the offending key path and its line.
//!
//! ```json
//! {
//!   "command": "counting",
//!   "tag": "half_width",
//!   "initial": { "shape": "bathtub", "U_over_pi2": 10000, "sigma_tilde": 0.03 },
//!   "final": { "U_over_pi2": 100 },
//!   "width_ratio": 0.5,
//!   "occupation": { "type": "ground" }
//! }
//! ```
//!
//! Defaults: `tag` = `"run"`, `output_dir` = `"out"`, `verbosity` = 0,
//! initial `half_width` = 1, final `shape`/`sigma_tilde` = those of the
//! initial trap, ground-state `N_i` = initial capacity, and the grid and
//! tolerance defaults of [`GridPolicy`] and [`Numerics`].

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::counting::DistributionMethod;
use crate::error::{ConfigError, Error, Result};
use crate::experiments::{Numerics, OccupationSpec, ReductionScenario};
use crate::grid::GridPolicy;
use crate::trap::{TrapShape, TrapSpec};

/// A finite, strictly positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Positive(pub f64);

impl<'de> Deserialize<'de> for Positive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v.is_finite() && v > 0.0 {
            Ok(Positive(v))
        } else {
            Err(D::Error::custom(format!(
                "must be a finite positive number, got {v}"
            )))
        }
    }
}

/// A finite number `≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NonNegative(pub f64);

impl<'de> Deserialize<'de> for NonNegative {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v.is_finite() && v >= 0.0 {
            Ok(NonNegative(v))
        } else {
            Err(D::Error::custom(format!(
                "must be a finite non-negative number, got {v}"
            )))
        }
    }
}

/// An integer `≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Count(pub usize);

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = usize::deserialize(d)?;
        if v >= 1 {
            Ok(Count(v))
        } else {
            Err(D::Error::custom("must be at least 1"))
        }
    }
}

/// A value in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Fraction(pub f64);

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v > 0.0 && v <= 1.0 {
            Ok(Fraction(v))
        } else {
            Err(D::Error::custom(format!("must lie in (0, 1], got {v}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Counting,
    Sweep,
    Figure,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Counting => "counting",
            Command::Sweep => "sweep",
            Command::Figure => "figure",
        }
    }

    fn required_keys(self) -> &'static [&'static str] {
        match self {
            Command::Spectrum => &["initial"],
            Command::Counting => &["initial", "final", "occupation"],
            Command::Sweep => &["initial", "sweep"],
            Command::Figure => &["figure"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

/// A trap given by exactly one of `U`, `U_over_pi2` (`U/π²`) or `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<TrapShape>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Positive>,
    #[serde(
        rename = "U_over_pi2",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub u_over_pi2: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<NonNegative>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_tilde: Option<NonNegative>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<NonNegative>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupationKind {
    Ground,
    Thermal,
}

/// `ground` takes an optional integer `N_i` (default: every bound level);
/// `thermal` takes one of `N_i`/`filling` (`N_i = filling · C_i`) and one of
/// `T` (`k_BT`, energy units) or `mu_over_kT` (`μ` from the trap bottom).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationConfig {
    #[serde(rename = "type")]
    pub kind: OccupationKind,
    #[serde(rename = "N_i", default, skip_serializing_if = "Option::is_none")]
    pub n_i: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filling: Option<Fraction>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Positive>,
    #[serde(
        rename = "mu_over_kT",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub mu_over_kt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    /// `L_f/L_i` inside the final trap's isospectral family.
    #[serde(rename = "width_ratio")]
    WidthRatio,
    /// One width-ratio sweep per value of `μ/k_BT`.
    #[serde(rename = "mu_over_kT")]
    MuOverKt,
    /// Bound-state count of the initial bathtub versus `σ/L` (values are
    /// relative smoothnesses).
    #[serde(rename = "smoothness")]
    Smoothness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Width ratios for each `mu_over_kT` sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<Fraction>>,
}

/// Overrides of the automatic grid; absent keys keep the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<Count>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_factor: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_wavelength: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_smoothness: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_half_width: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shallowest_binding: Option<Positive>,
}

/// Tolerance overrides; absent keys keep the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_threshold: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_epsilon: Option<Positive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<DistributionMethod>,
}

fn default_tag() -> String {
    "run".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_tag")]
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<TrapConfig>,
    #[serde(rename = "final", default, skip_serializing_if = "Option::is_none")]
    pub final_trap: Option<TrapConfig>,
    /// `L_f/L_i` when the final trap has no explicit `half_width`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_ratio: Option<Fraction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<OccupationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub verbosity: u8,
}

/// First line mentioning `"key"`, as a best-effort location for
/// cross-field errors.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
}

fn config_error(path: &str, line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config(ConfigError {
        path: path.into(),
        line,
        message: message.into(),
    })
}

/// Parses and validates a configuration that must name its own command.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_as(text, None)
}

/// Parses and validates a configuration. With `command` given (from the
/// command line) the file may omit `"command"`, but must not contradict it.
pub fn parse_config_as(text: &str, command: Option<Command>) -> Result<RunConfig> {
    let value: serde_json::Value = if text.trim().is_empty() {
        serde_json::Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(|e| {
            let position = format!(" at line {} column {}", e.line(), e.column());
            config_error(
                "$",
                Some(e.line()),
                format!("malformed JSON: {}", e.to_string().replace(&position, "")),
            )
        })?
    };
    let Some(object) = value.as_object() else {
        return Err(config_error(
            "$",
            Some(1),
            "the configuration must be a JSON object",
        ));
    };

    let mut object = object.clone();
    match (object.get("command"), command) {
        (None, Some(c)) => {
            object.insert("command".into(), serde_json::Value::String(c.name().into()));
        }
        (Some(given), Some(c)) if given.as_str() != Some(c.name()) => {
            return Err(config_error(
                "command",
                line_of_key(text, "command"),
                format!(
                    "file says {given} but the command line says \"{}\"",
                    c.name()
                ),
            ));
        }
        _ => {}
    }
    let resolved_command = object
        .get("command")
        .and_then(|c| serde_json::from_value::<Command>(c.clone()).ok());
    let mut missing: Vec<&str> = Vec::new();
    match resolved_command {
        None if !object.contains_key("command") => missing.push("command"),
        None => {}
        Some(c) => missing.extend(
            c.required_keys()
                .iter()
                .filter(|k| !object.contains_key(**k)),
        ),
    }
    if !missing.is_empty() {
        return Err(config_error(
            "$",
            None,
            format!("missing required key(s): {}", missing.join(", ")),
        ));
    }

    // Typed pass over the original text so errors carry line numbers.
    let mut de =
        serde_json::Deserializer::from_str(if text.trim().is_empty() { "{}" } else { text });
    let mut config: RunConfig = match serde_path_to_error::deserialize(&mut de) {
        Ok(c) => c,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            // a missing "command" here was supplied by the command line
            if !(command.is_some() && inner.to_string().contains("missing field `command`")) {
                let position = format!(" at line {} column {}", inner.line(), inner.column());
                let message = inner.to_string().replace(&position, "");
                return Err(config_error(&path, Some(inner.line()), message));
            }
            serde_json::from_value(serde_json::Value::Object(object))
                .map_err(|e| config_error("$", None, e.to_string()))?
        }
    };
    if let Some(c) = command {
        config.command = c;
    }
    validate(&config, text)?;
    Ok(config)
}

fn validate(c: &RunConfig, text: &str) -> Result<()> {
    let at = |key: &str| line_of_key(text, key);
    if c.tag.is_empty()
        || !c
            .tag
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
    {
        return Err(config_error(
            "tag",
            at("tag"),
            "use letters, digits, '_' or '-' only",
        ));
    }
    if c.command == Command::Figure {
        for (key, present) in [
            ("initial", c.initial.is_some()),
            ("final", c.final_trap.is_some()),
            ("width_ratio", c.width_ratio.is_some()),
            ("occupation", c.occupation.is_some()),
            ("sweep", c.sweep.is_some()),
        ] {
            if present {
                return Err(config_error(key, at(key), "not used by the figure command"));
            }
        }
        return Ok(());
    }
    if let Some(t) = &c.initial {
        validate_trap(t, "initial", true, text)?;
    }
    if let Some(t) = &c.final_trap {
        validate_trap(t, "final", false, text)?;
        if t.half_width.is_some() && c.width_ratio.is_some() {
            return Err(config_error(
                "width_ratio",
                at("width_ratio"),
                "give either final.half_width or width_ratio, not both",
            ));
        }
        let sweeps_width = matches!(
            c.sweep.as_ref().map(|s| s.parameter),
            Some(SweepParameter::WidthRatio | SweepParameter::MuOverKt)
        );
        if t.half_width.is_none() && c.width_ratio.is_none() && !sweeps_width {
            return Err(config_error(
                "final.half_width",
                at("final"),
                "the final trap needs half_width, or a top-level width_ratio",
            ));
        }
    }
    if let Some(o) = &c.occupation {
        validate_occupation(o, text)?;
    }
    if let Some(s) = &c.sweep {
        if s.values.is_empty() {
            return Err(config_error(
                "sweep.values",
                at("values"),
                "must not be empty",
            ));
        }
        let needs_final = s.parameter != SweepParameter::Smoothness;
        if needs_final && (c.final_trap.is_none() || c.occupation.is_none()) {
            return Err(config_error(
                "sweep.parameter",
                at("parameter"),
                "width_ratio and mu_over_kT sweeps need `final` and `occupation`",
            ));
        }
        for (i, &v) in s.values.iter().enumerate() {
            let ok = match s.parameter {
                SweepParameter::WidthRatio => v > 0.0 && v <= 1.0,
                SweepParameter::MuOverKt => v.is_finite(),
                SweepParameter::Smoothness => v.is_finite() && v >= 0.0,
            };
            if !ok {
                return Err(config_error(
                    &format!("sweep.values[{i}]"),
                    at("values"),
                    format!("{v} is out of range for {:?}", s.parameter),
                ));
            }
        }
        match (s.parameter, &s.ratios) {
            (SweepParameter::MuOverKt, None) => {
                return Err(config_error(
                    "sweep.ratios",
                    at("sweep"),
                    "mu_over_kT sweeps need `ratios`",
                ))
            }
            (SweepParameter::MuOverKt, Some(r)) if r.is_empty() => {
                return Err(config_error(
                    "sweep.ratios",
                    at("ratios"),
                    "must not be empty",
                ))
            }
            (SweepParameter::MuOverKt, _) => {}
            (_, Some(_)) => {
                return Err(config_error(
                    "sweep.ratios",
                    at("ratios"),
                    "only used by mu_over_kT sweeps",
                ))
            }
            _ => {}
        }
        if s.parameter == SweepParameter::MuOverKt
            && c.occupation.map(|o| o.kind) != Some(OccupationKind::Thermal)
        {
            return Err(config_error(
                "occupation.type",
                at("occupation"),
                "mu_over_kT sweeps need a thermal occupation",
            ));
        }
    }
    Ok(())
}

fn validate_trap(t: &TrapConfig, name: &str, initial: bool, text: &str) -> Result<()> {
    let line = line_of_key(text, name);
    let given = [t.u.is_some(), t.u_over_pi2.is_some(), t.depth.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if given != 1 {
        return Err(config_error(
            name,
            line,
            "give exactly one of `U`, `U_over_pi2` or `depth`",
        ));
    }
    if t.sigma_tilde.is_some() && t.smoothness.is_some() {
        return Err(config_error(
            name,
            line,
            "give at most one of `sigma_tilde` or `smoothness`",
        ));
    }
    if initial && t.shape.is_none() {
        return Err(config_error(
            &format!("{name}.shape"),
            line,
            "required for the initial trap",
        ));
    }
    Ok(())
}

fn validate_occupation(o: &OccupationConfig, text: &str) -> Result<()> {
    let line = line_of_key(text, "occupation");
    match o.kind {
        OccupationKind::Ground => {
            if o.temperature.is_some() || o.mu_over_kt.is_some() || o.filling.is_some() {
                return Err(config_error(
                    "occupation",
                    line,
                    "ground occupation takes only an optional integer `N_i`",
                ));
            }
            if let Some(Positive(n)) = o.n_i {
                if n.fract() != 0.0 {
                    return Err(config_error(
                        "occupation.N_i",
                        line_of_key(text, "N_i"),
                        "must be an integer at T = 0",
                    ));
                }
            }
        }
        OccupationKind::Thermal => {
            if o.n_i.is_some() == o.filling.is_some() {
                return Err(config_error(
                    "occupation",
                    line,
                    "give exactly one of `N_i` or `filling`",
                ));
            }
            if o.temperature.is_some() == o.mu_over_kt.is_some() {
                return Err(config_error(
                    "occupation",
                    line,
                    "give exactly one of `T` or `mu_over_kT`",
                ));
            }
            if let Some(m) = o.mu_over_kt {
                if !m.is_finite() {
                    return Err(config_error(
                        "occupation.mu_over_kT",
                        line_of_key(text, "mu_over_kT"),
                        "must be finite",
                    ));
                }
            }
        }
    }
    Ok(())
}

impl TrapConfig {
    /// The trap, taking unset shape/smoothness from `parent` and the
    /// half-width from `half_width` when the config has none.
    pub fn resolve(&self, parent: Option<&TrapSpec>, half_width: Option<f64>) -> Result<TrapSpec> {
        let shape = self
            .shape
            .or(parent.map(|p| p.shape()))
            .unwrap_or(TrapShape::Bathtub);
        let l = self.half_width.map(|p| p.0).or(half_width).unwrap_or(1.0);
        let sigma_tilde = match (self.sigma_tilde, self.smoothness) {
            (Some(s), _) => s.0,
            (None, Some(s)) => s.0 / l,
            (None, None) => parent
                .filter(|p| p.shape() == shape)
                .map(|p| p.relative_smoothness())
                .unwrap_or(0.0),
        };
        let smoothness = if shape == TrapShape::Bathtub {
            sigma_tilde * l
        } else {
            sigma_tilde
        };
        if let Some(NonNegative(v)) = self.depth {
            return TrapSpec::new(shape, v, l, smoothness);
        }
        let u = match (self.u, self.u_over_pi2) {
            (Some(u), _) => u.0,
            (None, Some(u)) => u.0 * PI * PI,
            (None, None) => unreachable!("validated: one depth key is present"),
        };
        if shape != TrapShape::Bathtub && sigma_tilde != 0.0 {
            return Err(Error::InvalidTrap {
                name: "sigma_tilde",
                value: sigma_tilde,
                reason: "only the bathtub has a smoothness parameter",
            });
        }
        // A bathtub with zero smoothness is the square well; family_member
        // handles both through TrapSpec::new.
        TrapSpec::family_member(u, sigma_tilde, l, shape)
    }
}

impl OccupationConfig {
    /// The occupation for an initial trap with `capacity` bound levels.
    pub fn resolve(&self, capacity: usize) -> Result<OccupationSpec> {
        let n_i = match (self.n_i, self.filling) {
            (Some(n), _) => n.0,
            (None, Some(f)) => f.0 * capacity as f64,
            (None, None) => capacity as f64,
        };
        Ok(match self.kind {
            OccupationKind::Ground => OccupationSpec::Ground { n_i: n_i as usize },
            OccupationKind::Thermal => match (self.temperature, self.mu_over_kt) {
                (Some(t), _) => OccupationSpec::Thermal {
                    n_i,
                    temperature: t.0,
                },
                (None, Some(mu_over_kt)) => OccupationSpec::ThermalRatio { n_i, mu_over_kt },
                (None, None) => unreachable!("validated: one temperature key is present"),
            },
        })
    }
}

impl GridConfig {
    pub fn apply(&self, mut policy: GridPolicy) -> GridPolicy {
        if let Some(n) = self.n_points {
            policy.n_points = Some(n.0);
        }
        if let Some(v) = self.margin_factor {
            policy.margin_factor = v.0;
        }
        if let Some(v) = self.points_per_wavelength {
            policy.points_per_wavelength = v.0;
        }
        if let Some(v) = self.points_per_smoothness {
            policy.points_per_smoothness = v.0;
        }
        if let Some(v) = self.points_per_half_width {
            policy.points_per_half_width = v.0;
        }
        if let Some(v) = self.shallowest_binding {
            policy.shallowest_binding = v.0;
        }
        policy
    }
}

impl RunConfig {
    /// Grid and tolerances with every override applied.
    pub fn numerics(&self) -> Numerics {
        let mut n = Numerics {
            grid: self.grid.apply(GridPolicy::default()),
            ..Numerics::default()
        };
        if let Some(v) = self.numerics.bound_threshold {
            n.bound_threshold = v.0;
        }
        if let Some(v) = self.numerics.fock_epsilon {
            n.fock_epsilon = v.0;
        }
        if let Some(m) = self.numerics.method {
            n.method = m;
        }
        n
    }

    pub fn initial_trap(&self) -> Result<TrapSpec> {
        self.initial
            .as_ref()
            .ok_or_else(|| config_error("initial", None, "missing"))?
            .resolve(None, None)
    }

    /// The final trap; with no explicit half-width it sits at
    /// `ratio · L_i` (`ratio` from the argument, else `width_ratio`).
    pub fn final_trap_at(&self, initial: &TrapSpec, ratio: Option<f64>) -> Result<TrapSpec> {
        let f = self
            .final_trap
            .as_ref()
            .ok_or_else(|| config_error("final", None, "missing"))?;
        let ratio = ratio.or(self.width_ratio.map(|r| r.0));
        let half_width = if f.half_width.is_some() {
            None
        } else {
            Some(ratio.unwrap_or(1.0) * initial.half_width())
        };
        f.resolve(Some(initial), half_width)
    }

    /// The scenario described by the configuration (occupation resolved
    /// against `initial_capacity`).
    pub fn scenario(&self, initial_capacity: usize) -> Result<ReductionScenario> {
        let initial = self.initial_trap()?;
        let final_trap = self.final_trap_at(&initial, None)?;
        let occupation = self
            .occupation
            .as_ref()
            .ok_or_else(|| config_error("occupation", None, "missing"))?
            .resolve(initial_capacity)?;
        Ok(ReductionScenario {
            initial,
            final_trap,
            occupation,
            numerics: self.numerics(),
        })
    }

    /// Canonical JSON form; `parse_config` reads it back unchanged.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2B: &str = r#"{
  "command": "counting",
  "initial": { "shape": "bathtub", "U_over_pi2": 10000, "sigma_tilde": 0.03 },
  "final": { "U_over_pi2": 100 },
  "width_ratio": 0.5,
  "occupation": { "type": "ground" }
}"#;

    fn err(text: &str) -> ConfigError {
        match parse_config(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_half_width_scenario() {
        let c = parse_config(FIG2B).unwrap();
        let s = c.scenario(100).unwrap();
        assert_eq!(s.initial.shape(), TrapShape::Bathtub);
        assert!((s.initial.relative_smoothness() - 0.03).abs() < 1e-15);
        assert!((s.initial.dimensionless_depth() / (1e4 * PI * PI) - 1.0).abs() < 1e-14);
        assert!((s.final_trap.dimensionless_depth() / (1e2 * PI * PI) - 1.0).abs() < 1e-14);
        assert_eq!(s.final_trap.half_width(), 0.5);
        assert!((s.final_trap.relative_smoothness() - 0.03).abs() < 1e-15);
        assert_eq!(s.occupation, OccupationSpec::Ground { n_i: 100 });
        assert_eq!(c.tag, "run");
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn empty_file_lists_missing_keys() {
        let e = err("");
        assert!(e.message.contains("command"), "{e}");
        let e = err(r#"{"command": "counting"}"#);
        for key in ["initial", "final", "occupation"] {
            assert!(e.message.contains(key), "{e}");
        }
    }

    #[test]
    fn negative_temperature_names_the_key() {
        let text = FIG2B.replace(
            r#"{ "type": "ground" }"#,
            r#"{ "type": "thermal", "N_i": 80, "T": -1.0 }"#,
        );
        let e = err(&text);
        assert_eq!(e.path, "occupation.T");
        assert_eq!(e.line, Some(6));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = err(&FIG2B.replace("\"width_ratio\"", "\"width_ration\""));
        assert!(e.message.contains("width_ration"), "{e}");
        let e = err(&FIG2B.replace("sigma_tilde", "sigma"));
        assert!(e.path.starts_with("initial"), "{e}");
    }

    #[test]
    fn round_trip() {
        let c = parse_config(FIG2B).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
        let sweep = r#"{"command":"sweep","tag":"t5","initial":{"shape":"square_well","U":1.0},
            "final":{"U":0.5},"occupation":{"type":"thermal","filling":0.8,"mu_over_kT":5},
            "sweep":{"parameter":"mu_over_kT","values":[10,5],"ratios":[0.4,0.5]},
            "grid":{"n_points":4001,"margin_factor":6},"numerics":{"fock_epsilon":1e-4,"method":"determinant"},
            "output_dir":"res","verbosity":2}"#;
        let c = parse_config(sweep).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
        assert_eq!(c.numerics().grid.n_points, Some(4001));
        assert_eq!(c.numerics().method, DistributionMethod::Determinant);
    }

    #[test]
    fn command_line_supplies_the_command() {
        let text = FIG2B.replace("\"command\": \"counting\",", "");
        assert!(parse_config(&text).is_err());
        let c = parse_config_as(&text, Some(Command::Counting)).unwrap();
        assert_eq!(c.command, Command::Counting);
        assert!(matches!(
            parse_config_as(FIG2B, Some(Command::Spectrum)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cross_field_rules() {
        let e = err(&FIG2B.replace(
            r#""U_over_pi2": 100 }"#,
            r#""U_over_pi2": 100, "depth": 3 }"#,
        ));
        assert_eq!(e.path, "final");
        let e = err(&FIG2B.replace(r#""width_ratio": 0.5,"#, ""));
        assert_eq!(e.path, "final.half_width");
        let e = err(&FIG2B.replace("0.5", "1.5"));
        assert_eq!(e.path, "width_ratio");
        let e = err(r#"{"command":"figure","figure":"fig2","initial":{"shape":"bathtub","U":1}}"#);
        assert_eq!(e.path, "initial");
        let e = err("[1, 2]");
        assert_eq!(e.path, "$");
        let e = err("{\n  \"command\": \"spectrum\",\n  oops\n}");
        assert_eq!(e.line, Some(3));
    }
}
