//! Run configuration: a flat `key = value` settings map (from a file and/or flags)
//! validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use specgap_core::lab::{torus_preset, EXPERIMENT_PRESETS};
use specgap_core::spectral::DEFAULT_WINDOW;

use crate::CliError;

pub type Settings = BTreeMap<String, String>;

pub const KNOWN_KEYS: [&str; 25] = [
    "geometry.d",
    "geometry.vol",
    "geometry.times",
    "geometry.times_vol",
    "geometry.g",
    "geometry.n",
    "geometry.basis",
    "geometry.preset",
    "geometry.atoms",
    "geometry.alpha",
    "geometry.lambda0",
    "numeric.degree",
    "numeric.resolution",
    "numeric.t_window",
    "numeric.window",
    "numeric.points",
    "numeric.theta_points",
    "numeric.levels",
    "numeric.mass_shift",
    "numeric.kernel_tol",
    "output.dir",
    "output.format",
    "output.determinant",
    "output.theta",
    "output.spectrum",
];

const HYPERBOLIC_KEYS: [&str; 4] = ["geometry.d", "geometry.vol", "geometry.times", "geometry.times_vol"];
const TORUS_KEYS: [&str; 3] = ["geometry.g", "geometry.n", "geometry.basis"];
const ATOMIC_KEYS: [&str; 1] = ["geometry.atoms"];
const POWER_LAW_KEYS: [&str; 2] = ["geometry.alpha", "geometry.lambda0"];

/// Parse a flat config file. Blank lines and `#` comments are skipped; values may be quoted.
pub fn parse_settings(text: &str) -> Result<Settings, CliError> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("line {}: unknown key '{key}'", i + 1)));
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Structured,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "structured" => Ok(Format::Structured),
            other => Err(CliError::Config(format!(
                "unknown format '{other}' (expected csv or structured)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Hyperbolic,
    Torus,
    Beta,
    Zeta,
    Convergence,
    Torsion,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Hyperbolic => "hyperbolic",
            CommandKind::Torus => "torus",
            CommandKind::Beta => "beta",
            CommandKind::Zeta => "zeta",
            CommandKind::Convergence => "convergence",
            CommandKind::Torsion => "torsion",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Torus {
        name: String,
        g: usize,
        n: usize,
        basis: Vec<Vec<f64>>,
    },
    /// An odd-dimensional hyperbolic model, optionally times a second one.
    Hyperbolic {
        d: usize,
        vol: f64,
        times: Option<(usize, f64)>,
    },
    /// Finitely many eigenvalues with masses: θ(t) = Σ m e^{−λt}.
    Atomic {
        atoms: Vec<(f64, f64)>,
    },
    /// Spectral density (λ − λ₀)^α.
    PowerLaw {
        alpha: f64,
        lambda0: f64,
    },
    Experiment {
        preset: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numeric {
    pub degree: Option<usize>,
    pub resolution: usize,
    pub t_window: (f64, f64),
    pub window: (f64, f64),
    pub points: usize,
    pub theta_points: usize,
    pub levels: usize,
    pub mass_shift: f64,
    pub kernel_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
    pub determinant: bool,
    pub theta: bool,
    pub spectrum: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub geometry: Geometry,
    pub numeric: Numeric,
    pub output: Output,
    pub threads: Option<usize>,
}

fn get<T: FromStr>(s: &Settings, key: &str) -> Result<Option<T>, CliError> {
    match s.get(key) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'"))),
    }
}

fn require<T: FromStr>(s: &Settings, key: &str) -> Result<T, CliError> {
    get(s, key)?.ok_or_else(|| CliError::Config(format!("missing {key}")))
}

fn flag(s: &Settings, key: &str) -> Result<bool, CliError> {
    Ok(get::<bool>(s, key)?.unwrap_or(false))
}

/// `a:b` with 0 < a < b.
pub fn parse_window(key: &str, v: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("{key}: expected a:b with 0 < a < b, got '{v}'"));
    let (a, b) = v.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Rows separated by `;`, entries by `,`: `1,0;0.5,0.9`.
pub fn parse_basis(v: &str) -> Result<Vec<Vec<f64>>, CliError> {
    v.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("geometry.basis: bad entry '{x}'")))
                })
                .collect()
        })
        .collect()
}

/// `rate:mass,rate:mass,...`
pub fn parse_atoms(v: &str) -> Result<Vec<(f64, f64)>, CliError> {
    v.split(',')
        .map(|pair| {
            let bad = || CliError::Config(format!("geometry.atoms: expected rate:mass, got '{pair}'"));
            let (r, m) = pair.split_once(':').ok_or_else(bad)?;
            Ok((
                r.trim().parse().map_err(|_| bad())?,
                m.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn identity(g: usize) -> Vec<Vec<f64>> {
    (0..g)
        .map(|i| (0..g).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn geometry(command: CommandKind, s: &Settings) -> Result<Geometry, CliError> {
    let has = |keys: &[&str]| keys.iter().any(|k| s.contains_key(*k));
    let preset: Option<String> = get(s, "geometry.preset")?;
    if command == CommandKind::Convergence {
        if has(&HYPERBOLIC_KEYS) || has(&TORUS_KEYS) || has(&ATOMIC_KEYS) || has(&POWER_LAW_KEYS) {
            return Err(CliError::Config("convergence takes only an experiment preset".into()));
        }
        let preset = preset.ok_or_else(|| CliError::Config("missing geometry.preset (experiment name)".into()))?;
        if !EXPERIMENT_PRESETS.contains(&preset.as_str()) {
            return Err(CliError::Config(format!(
                "unknown experiment '{preset}' (known: {})",
                EXPERIMENT_PRESETS.join(", ")
            )));
        }
        return Ok(Geometry::Experiment { preset });
    }
    let blocks = [
        has(&HYPERBOLIC_KEYS),
        has(&TORUS_KEYS) || preset.is_some(),
        has(&ATOMIC_KEYS),
        has(&POWER_LAW_KEYS),
    ];
    match blocks.iter().filter(|b| **b).count() {
        0 => return Err(CliError::Config("no geometry given".into())),
        1 => {}
        _ => return Err(CliError::Config("exactly one geometry block is allowed".into())),
    }
    let geometry = if blocks[0] {
        let times = match get::<usize>(s, "geometry.times")? {
            Some(d) => Some((d, get(s, "geometry.times_vol")?.unwrap_or(1.0))),
            None if s.contains_key("geometry.times_vol") => {
                return Err(CliError::Config(
                    "geometry.times_vol given without geometry.times".into(),
                ))
            }
            None => None,
        };
        Geometry::Hyperbolic {
            d: require(s, "geometry.d")?,
            vol: get(s, "geometry.vol")?.unwrap_or(1.0),
            times,
        }
    } else if blocks[1] {
        match preset {
            Some(name) => {
                if has(&TORUS_KEYS) {
                    return Err(CliError::Config(
                        "geometry.preset conflicts with an explicit torus".into(),
                    ));
                }
                let p =
                    torus_preset(&name).ok_or_else(|| CliError::Config(format!("unknown torus preset '{name}'")))?;
                Geometry::Torus {
                    name,
                    g: p.g,
                    n: p.n_per_axis,
                    basis: p.basis,
                }
            }
            None => {
                let g: usize = require(s, "geometry.g")?;
                let basis = match s.get("geometry.basis") {
                    Some(b) => parse_basis(b)?,
                    None => identity(g),
                };
                Geometry::Torus {
                    name: format!("torus{g}"),
                    g,
                    n: require(s, "geometry.n")?,
                    basis,
                }
            }
        }
    } else if blocks[2] {
        Geometry::Atomic {
            atoms: parse_atoms(&s["geometry.atoms"])?,
        }
    } else {
        Geometry::PowerLaw {
            alpha: require(s, "geometry.alpha")?,
            lambda0: get(s, "geometry.lambda0")?.unwrap_or(0.0),
        }
    };
    let allowed = matches!(
        (command, &geometry),
        (CommandKind::Hyperbolic, Geometry::Hyperbolic { .. })
            | (CommandKind::Torus, Geometry::Torus { .. })
            | (
                CommandKind::Beta,
                Geometry::Hyperbolic { .. } | Geometry::PowerLaw { .. }
            )
            | (
                CommandKind::Zeta,
                Geometry::Hyperbolic { .. } | Geometry::Atomic { .. } | Geometry::Torus { .. }
            )
            | (
                CommandKind::Torsion,
                Geometry::Hyperbolic { .. } | Geometry::Torus { .. }
            )
    );
    if !allowed {
        return Err(CliError::Config(format!(
            "{} does not accept this geometry",
            command.name()
        )));
    }
    Ok(geometry)
}

impl RunConfig {
    pub fn from_settings(command: CommandKind, s: &Settings, threads: Option<usize>) -> Result<Self, CliError> {
        for key in s.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("unknown key '{key}'")));
            }
        }
        let geometry = geometry(command, s)?;
        let window = |key: &str, default: (f64, f64)| match s.get(key) {
            Some(v) => parse_window(key, v),
            None => Ok(default),
        };
        let numeric = Numeric {
            degree: get(s, "numeric.degree")?,
            resolution: get(s, "numeric.resolution")?.unwrap_or(32),
            t_window: window("numeric.t_window", (0.5, 5.0))?,
            window: window("numeric.window", DEFAULT_WINDOW)?,
            points: get(s, "numeric.points")?.unwrap_or(64),
            theta_points: get(s, "numeric.theta_points")?.unwrap_or(50),
            levels: get(s, "numeric.levels")?.unwrap_or(3),
            mass_shift: get(s, "numeric.mass_shift")?.unwrap_or(0.0),
            kernel_tol: get(s, "numeric.kernel_tol")?,
        };
        if numeric.resolution == 0 {
            return Err(CliError::Config("numeric.resolution must be positive".into()));
        }
        if numeric.points < 8 {
            return Err(CliError::Config("numeric.points must be at least 8".into()));
        }
        if numeric.theta_points < 2 {
            return Err(CliError::Config("numeric.theta_points must be at least 2".into()));
        }
        if numeric.levels < 3 {
            return Err(CliError::Config("numeric.levels must be at least 3".into()));
        }
        if !(numeric.mass_shift >= 0.0 && numeric.mass_shift.is_finite()) {
            return Err(CliError::Config("numeric.mass_shift must be finite and ≥ 0".into()));
        }
        if let Some(tol) = numeric.kernel_tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Config("numeric.kernel_tol must be positive".into()));
            }
        }
        if threads == Some(0) {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        let output = Output {
            dir: get::<String>(s, "output.dir")?.unwrap_or_else(|| ".".into()).into(),
            format: get(s, "output.format")?.unwrap_or(Format::Csv),
            determinant: flag(s, "output.determinant")?,
            theta: flag(s, "output.theta")?,
            spectrum: flag(s, "output.spectrum")?,
        };
        Ok(RunConfig {
            command,
            geometry,
            numeric,
            output,
            threads,
        })
    }
}
