//! Flat `key = value` run configuration with unit suffixes.
//!
//! ```text
//! # mirror
//! a = 3 um
//! c = 1 um
//! B1 = 2 kG
//! model = two-term
//! ```
//!
//! Every key has a physical dimension; values may carry any unit of that
//! dimension and are converted to SI. A bare number is taken as SI.

use std::collections::BTreeMap;
use std::path::Path;

use stripe_mirror::constants::{ATOMIC_MASS_UNIT, MU_B};
use stripe_mirror::{
    AtomSpecies, EnsembleOptions, EnsembleSpec, MirrorSpec, PotentialModel, StripeCount,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Field,
    Magnetization,
    Temperature,
    Time,
    Velocity,
    Mass,
    Moment,
    Number,
    Count,
    Text,
}

const UNITS: &[(Dimension, &str, f64)] = &[
    (Dimension::Length, "m", 1.0),
    (Dimension::Length, "cm", 1e-2),
    (Dimension::Length, "mm", 1e-3),
    (Dimension::Length, "um", 1e-6),
    (Dimension::Length, "µm", 1e-6),
    (Dimension::Length, "nm", 1e-9),
    (Dimension::Field, "T", 1.0),
    (Dimension::Field, "mT", 1e-3),
    (Dimension::Field, "uT", 1e-6),
    (Dimension::Field, "µT", 1e-6),
    (Dimension::Field, "G", 1e-4),
    (Dimension::Field, "kG", 1e-1),
    (Dimension::Field, "mG", 1e-7),
    (Dimension::Magnetization, "A/m", 1.0),
    (Dimension::Magnetization, "kA/m", 1e3),
    (Dimension::Magnetization, "MA/m", 1e6),
    (Dimension::Temperature, "K", 1.0),
    (Dimension::Temperature, "mK", 1e-3),
    (Dimension::Temperature, "uK", 1e-6),
    (Dimension::Temperature, "µK", 1e-6),
    (Dimension::Temperature, "nK", 1e-9),
    (Dimension::Time, "s", 1.0),
    (Dimension::Time, "ms", 1e-3),
    (Dimension::Time, "us", 1e-6),
    (Dimension::Time, "µs", 1e-6),
    (Dimension::Velocity, "m/s", 1.0),
    (Dimension::Velocity, "mm/s", 1e-3),
    (Dimension::Velocity, "cm/s", 1e-2),
    (Dimension::Mass, "kg", 1.0),
    (Dimension::Mass, "amu", ATOMIC_MASS_UNIT),
    (Dimension::Mass, "u", ATOMIC_MASS_UNIT),
    (Dimension::Moment, "J/T", 1.0),
    (Dimension::Moment, "muB", MU_B),
    (Dimension::Moment, "µB", MU_B),
];

/// Recognised keys, their dimension and default (as written in a file).
pub const KEYS: &[(&str, Dimension, Option<&str>)] = &[
    ("a", Dimension::Length, Some("3 um")),
    ("c", Dimension::Length, Some("1 um")),
    ("b", Dimension::Length, Some("30 nm")),
    ("B1", Dimension::Field, None),
    ("M0", Dimension::Magnetization, None),
    ("bias", Dimension::Field, Some("100 mG")),
    ("stripes", Dimension::Text, Some("infinite")),
    ("model", Dimension::Text, Some("two-term")),
    ("atom", Dimension::Text, Some("cs")),
    ("mass", Dimension::Mass, None),
    ("moment", Dimension::Moment, None),
    ("drop", Dimension::Length, Some("3 mm")),
    ("T", Dimension::Temperature, Some("11 uK")),
    ("n_atoms", Dimension::Count, Some("10000")),
    ("sigma_x", Dimension::Length, Some("0.2 mm")),
    ("sigma_y", Dimension::Length, Some("0.2 mm")),
    ("vx0", Dimension::Velocity, Some("0 m/s")),
    ("vy0", Dimension::Velocity, Some("0 m/s")),
    ("t_max", Dimension::Time, Some("150 ms")),
    ("dt", Dimension::Time, Some("0.5 ms")),
    ("tol", Dimension::Number, Some("1e-9")),
    ("epsilon", Dimension::Number, Some("0.01")),
    ("kick", Dimension::Number, Some("1")),
    ("lateral_limit", Dimension::Length, Some("5 mm")),
    ("seed", Dimension::Count, Some("1")),
    ("fit_t_min", Dimension::Time, Some("0 ms")),
    ("fit_t_max", Dimension::Time, Some("15 ms")),
    ("post_t_min", Dimension::Time, None),
    ("post_t_max", Dimension::Time, None),
    ("guard", Dimension::Time, Some("5 ms")),
    ("threshold_sigma", Dimension::Number, Some("3")),
    ("map_x_min", Dimension::Length, None),
    ("map_x_max", Dimension::Length, None),
    ("map_nx", Dimension::Count, Some("41")),
    ("map_y_min", Dimension::Length, None),
    ("map_y_max", Dimension::Length, None),
    ("map_ny", Dimension::Count, Some("12")),
];

const DEFAULT_B1: &str = "2 kG";

pub fn dimension_of(key: &str) -> Option<Dimension> {
    KEYS.iter().find(|k| k.0 == key).map(|k| k.1)
}

/// Converts `"3 um"` (or `"3um"`, or `"3e-6"`) to SI for the given dimension.
pub fn parse_quantity(key: &str, text: &str, dim: Dimension) -> Result<f64, CliError> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, ch)| {
            !(ch.is_ascii_digit()
                || ch == '.'
                || ch == '+'
                || ch == '-'
                || ((ch == 'e' || ch == 'E')
                    && text[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map_or(text.len(), |(i, _)| i);
    let (number, unit) = (text[..split].trim(), text[split..].trim());
    let value: f64 = number
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse number in `{text}`")))?;
    if !value.is_finite() {
        return Err(CliError::Config(format!("{key}: value must be finite")));
    }
    if unit.is_empty() {
        return Ok(value);
    }
    match dim {
        Dimension::Number | Dimension::Count | Dimension::Text => Err(CliError::Config(format!(
            "{key}: dimensionless value cannot carry unit `{unit}`"
        ))),
        _ => UNITS
            .iter()
            .find(|(d, u, _)| *d == dim && *u == unit)
            .map(|(_, _, scale)| value * scale)
            .ok_or_else(|| {
                let allowed: Vec<&str> = UNITS
                    .iter()
                    .filter(|(d, _, _)| *d == dim)
                    .map(|(_, u, _)| *u)
                    .collect();
                CliError::Config(format!(
                    "{key}: unknown unit `{unit}` (expected one of {})",
                    allowed.join(", ")
                ))
            }),
    }
}

/// Key/value pairs exactly as written, before conversion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if dimension_of(key).is_none() {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if value.is_empty() {
                return Err(CliError::Config(format!("line {}: `{key}` has no value", i + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if dimension_of(key).is_none() {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str).or_else(|| {
            KEYS.iter()
                .find(|k| k.0 == key)
                .and_then(|k| k.2)
        })
    }

    fn quantity(&self, key: &str) -> Result<Option<f64>, CliError> {
        let dim = dimension_of(key).expect("known key");
        self.text(key).map(|t| parse_quantity(key, t, dim)).transpose()
    }

    fn required(&self, key: &str) -> Result<f64, CliError> {
        Ok(self.quantity(key)?.expect("key has a default"))
    }

    fn count(&self, key: &str) -> Result<u64, CliError> {
        let t = self.text(key).expect("key has a default");
        t.trim()
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("{key}: expected a non-negative integer, got `{t}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    TwoTerm,
    FullExpansion,
    ExactStripes,
    PureExponential,
}

impl ModelKind {
    fn parse(text: &str) -> Result<Self, CliError> {
        match text.trim() {
            "two-term" => Ok(ModelKind::TwoTerm),
            "full" | "full-expansion" => Ok(ModelKind::FullExpansion),
            "exact" | "exact-stripes" => Ok(ModelKind::ExactStripes),
            "exponential" | "pure-exponential" => Ok(ModelKind::PureExponential),
            other => Err(CliError::Config(format!(
                "model: unknown model `{other}` (two-term, full, exact, pure-exponential)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TwoTerm => "two-term",
            ModelKind::FullExpansion => "full",
            ModelKind::ExactStripes => "exact",
            ModelKind::PureExponential => "pure-exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x: (f64, f64, usize),
    pub y: (f64, f64, usize),
}

impl Grid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let axis = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
            if n == 1 {
                vec![lo]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let xs = axis(self.x);
        let ys = axis(self.y);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub fit_window: (f64, f64),
    pub post_window: Option<(f64, f64)>,
    pub guard: f64,
    pub threshold_sigma: f64,
}

/// Fully validated run configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mirror: MirrorSpec,
    /// Surface field as written, for echoing.
    pub b1_input: String,
    pub model: ModelKind,
    pub species: AtomSpecies,
    pub ensemble: EnsembleSpec,
    pub tol: f64,
    pub epsilon: f64,
    pub kick: f64,
    pub lateral_limit: f64,
    pub t_max: f64,
    pub analysis: AnalysisConfig,
    pub grid: Grid,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let cfg = |e: stripe_mirror::FieldError| CliError::Config(e.to_string());
        let a = raw.required("a")?;
        let c = raw.required("c")?;
        let b = raw.required("b")?;
        let bias = raw.required("bias")?;
        let stripes = match raw.text("stripes").unwrap().trim() {
            "infinite" => StripeCount::Infinite,
            n => StripeCount::Finite(n.parse::<u32>().map_err(|_| {
                CliError::Config(format!("stripes: expected `infinite` or an odd count, got `{n}`"))
            })?),
        };
        let (mirror, b1_input) = match (raw.entries.get("B1"), raw.entries.get("M0")) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either B1 or M0, not both".into(),
                ))
            }
            (None, Some(m0)) => {
                let m0 = parse_quantity("M0", m0, Dimension::Magnetization)?;
                let spec = MirrorSpec::new(a, c, b, m0).map_err(cfg)?;
                let b1 = spec.harmonic_coefficients().map_err(cfg)?.b1;
                (spec, format!("{b1:e} T"))
            }
            (b1, None) => {
                let text = b1.map(String::as_str).unwrap_or(DEFAULT_B1);
                let b1 = parse_quantity("B1", text, Dimension::Field)?;
                (
                    MirrorSpec::with_surface_field(a, c, b, b1).map_err(cfg)?,
                    text.to_string(),
                )
            }
        };
        let mirror = mirror.with_stripes(stripes).with_bias(bias);
        mirror.validate().map_err(cfg)?;
        if !(bias >= 0.0) {
            return Err(CliError::Config("bias: must be >= 0".into()));
        }
        let model = ModelKind::parse(raw.text("model").unwrap())?;
        if model == ModelKind::ExactStripes && stripes == StripeCount::Infinite {
            return Err(CliError::Config(
                "model = exact requires a finite, odd `stripes` count".into(),
            ));
        }

        let species = match (raw.quantity("mass")?, raw.quantity("moment")?) {
            (Some(mass), Some(moment)) => AtomSpecies::new("custom", mass, moment)
                .map_err(|e| CliError::Config(e.to_string()))?,
            (None, None) => {
                let name = raw.text("atom").unwrap();
                AtomSpecies::by_name(name)
                    .ok_or_else(|| CliError::Config(format!("atom: unknown species `{name}`")))?
            }
            _ => {
                return Err(CliError::Config(
                    "mass and moment must be given together".into(),
                ))
            }
        };

        let t_max = raw.required("t_max")?;
        let dt = raw.required("dt")?;
        if !(dt > 0.0) || !(t_max > 0.0) {
            return Err(CliError::Config("t_max and dt must be positive".into()));
        }
        if t_max / dt > 1e7 {
            return Err(CliError::Config("t_max/dt exceeds 1e7 snapshots".into()));
        }
        let ensemble = EnsembleSpec {
            n_atoms: raw.count("n_atoms")? as usize,
            temperature: raw.required("T")?,
            release_height: raw.required("drop")?,
            sigma_x: raw.required("sigma_x")?,
            sigma_y: raw.required("sigma_y")?,
            mean_velocity: (raw.required("vx0")?, raw.required("vy0")?),
            seed: raw.count("seed")?,
            snapshot_times: stripe_mirror::uniform_times(t_max, dt),
        };
        ensemble
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let tol = raw.required("tol")?;
        let epsilon = raw.required("epsilon")?;
        let kick = raw.required("kick")?;
        let lateral_limit = raw.required("lateral_limit")?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("tol: must lie in (0, 1), got {tol}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(CliError::Config(format!("epsilon: must lie in (0, 1), got {epsilon}")));
        }
        if !(lateral_limit > 0.0) {
            return Err(CliError::Config("lateral_limit: must be positive".into()));
        }

        let fit_window = (raw.required("fit_t_min")?, raw.required("fit_t_max")?);
        let post_window = match (raw.quantity("post_t_min")?, raw.quantity("post_t_max")?) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(CliError::Config(
                    "post_t_min and post_t_max must be given together".into(),
                ))
            }
        };
        let guard = raw.required("guard")?;
        let threshold_sigma = raw.required("threshold_sigma")?;
        if !(threshold_sigma > 0.0) || !(guard >= 0.0) {
            return Err(CliError::Config(
                "threshold_sigma must be positive and guard non-negative".into(),
            ));
        }

        let axis = |lo: &str, hi: &str, n: &str, dlo: f64, dhi: f64| -> Result<(f64, f64, usize), CliError> {
            let lo_v = raw.quantity(lo)?.unwrap_or(dlo);
            let hi_v = raw.quantity(hi)?.unwrap_or(dhi);
            let n_v = raw.count(n)? as usize;
            if n_v == 0 || !(hi_v >= lo_v) {
                return Err(CliError::Config(format!(
                    "{lo}/{hi}/{n}: need at least one point and min <= max"
                )));
            }
            Ok((lo_v, hi_v, n_v))
        };
        let grid = Grid {
            x: axis("map_x_min", "map_x_max", "map_nx", 0.0, 2.0 * a)?,
            y: axis("map_y_min", "map_y_max", "map_ny", 0.25 * a, 3.0 * a)?,
        };
        if !(grid.y.0 > 0.0) {
            return Err(CliError::Config("map_y_min: grid must lie above the surface".into()));
        }

        Ok(RunConfig {
            mirror,
            b1_input,
            model,
            species,
            ensemble,
            tol,
            epsilon,
            kick,
            lateral_limit,
            t_max,
            analysis: AnalysisConfig {
                fit_window,
                post_window,
                guard,
                threshold_sigma,
            },
            grid,
        })
    }

    pub fn potential(&self) -> Result<PotentialModel, CliError> {
        let cfg = |e: stripe_mirror::FieldError| CliError::Config(e.to_string());
        match self.model {
            ModelKind::TwoTerm => PotentialModel::two_term(self.mirror).map_err(cfg),
            ModelKind::FullExpansion => PotentialModel::full_expansion(self.mirror).map_err(cfg),
            ModelKind::ExactStripes => PotentialModel::exact_stripes(self.mirror).map_err(cfg),
            ModelKind::PureExponential => {
                let c = self.mirror.harmonic_coefficients().map_err(cfg)?;
                PotentialModel::pure_exponential(self.species.moment * c.b1, c.k).map_err(cfg)
            }
        }
    }

    pub fn ensemble_options(&self, threads: Option<usize>) -> EnsembleOptions {
        EnsembleOptions {
            tol: self.tol,
            threads,
            lateral_limit: self.lateral_limit,
            velocity_kick: (self.kick != 1.0).then_some(self.kick),
            epsilon: self.epsilon,
        }
    }
}
