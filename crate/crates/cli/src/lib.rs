//! Batch driver for the specgap library: configuration, orchestration and report output.

pub mod config;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_settings, CommandKind, Format, Geometry, RunConfig, Settings};
pub use report::{parse_report, serialize_report, Report, RunReport};
pub use run::{run, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot parse report: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] specgap_core::Error),
}

impl CliError {
    /// 2 for configuration and validation problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "specgap",
    version,
    about = "Spectral invariants of periodic complexes and hyperbolic models"
)]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// csv or structured.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reserved; every computation is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat key = value file with geometry., numeric. and output. keys. Flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form odd-dimensional hyperbolic models and their products.
    Hyperbolic(RunArgs),
    /// Combinatorial Laplacians of a triangulated flat torus.
    Torus(RunArgs),
    /// Fitted decay exponents β, β̄.
    Beta(RunArgs),
    /// Zeta values and log-determinants per degree.
    Zeta(RunArgs),
    /// Mesh-refinement experiments.
    Convergence(RunArgs),
    /// Alternating log-determinant sum.
    Torsion(RunArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Hyperbolic dimension (odd).
    #[arg(long = "d")]
    pub d: Option<String>,
    #[arg(long)]
    pub vol: Option<String>,
    /// Dimension of a second hyperbolic factor.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long = "times-vol")]
    pub times_vol: Option<String>,
    /// Torus rank.
    #[arg(long = "g")]
    pub g: Option<String>,
    /// Subdivisions per lattice direction.
    #[arg(long = "n")]
    pub n: Option<String>,
    /// Lattice basis rows, e.g. "1,0;0.5,0.9".
    #[arg(long)]
    pub basis: Option<String>,
    /// Torus preset or experiment name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Atomic spectrum "rate:mass,...".
    #[arg(long)]
    pub atoms: Option<String>,
    /// Exponent of a synthetic density (λ − λ₀)^α.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub lambda0: Option<String>,
    #[arg(long)]
    pub degree: Option<String>,
    /// Characters per lattice direction.
    #[arg(long)]
    pub resolution: Option<String>,
    /// Theta table range "a:b".
    #[arg(long = "t-window")]
    pub t_window: Option<String>,
    /// β fit window "a:b".
    #[arg(long)]
    pub window: Option<String>,
    /// Points in the β fit.
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long = "theta-points")]
    pub theta_points: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long = "mass-shift")]
    pub mass_shift: Option<String>,
    #[arg(long = "kernel-tol")]
    pub kernel_tol: Option<String>,
    #[arg(long)]
    pub determinant: bool,
    #[arg(long)]
    pub theta: bool,
    #[arg(long)]
    pub spectrum: bool,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        let b = |x: bool| x.then(|| "true".to_string());
        vec![
            ("geometry.d", self.d.clone()),
            ("geometry.vol", self.vol.clone()),
            ("geometry.times", self.times.clone()),
            ("geometry.times_vol", self.times_vol.clone()),
            ("geometry.g", self.g.clone()),
            ("geometry.n", self.n.clone()),
            ("geometry.basis", self.basis.clone()),
            ("geometry.preset", self.preset.clone()),
            ("geometry.atoms", self.atoms.clone()),
            ("geometry.alpha", self.alpha.clone()),
            ("geometry.lambda0", self.lambda0.clone()),
            ("numeric.degree", self.degree.clone()),
            ("numeric.resolution", self.resolution.clone()),
            ("numeric.t_window", self.t_window.clone()),
            ("numeric.window", self.window.clone()),
            ("numeric.points", self.points.clone()),
            ("numeric.theta_points", self.theta_points.clone()),
            ("numeric.levels", self.levels.clone()),
            ("numeric.mass_shift", self.mass_shift.clone()),
            ("numeric.kernel_tol", self.kernel_tol.clone()),
            ("output.determinant", b(self.determinant)),
            ("output.theta", b(self.theta)),
            ("output.spectrum", b(self.spectrum)),
        ]
    }
}

impl Cli {
    /// Merge the config file (if any) with the flags, flags taking precedence.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut settings = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.clone(),
                    source: e,
                })?;
                parse_settings(&text)?
            }
            None => Settings::new(),
        };
        let (kind, args) = match &self.command {
            Command::Hyperbolic(a) => (CommandKind::Hyperbolic, a),
            Command::Torus(a) => (CommandKind::Torus, a),
            Command::Beta(a) => (CommandKind::Beta, a),
            Command::Zeta(a) => (CommandKind::Zeta, a),
            Command::Convergence(a) => (CommandKind::Convergence, a),
            Command::Torsion(a) => (CommandKind::Torsion, a),
        };
        let globals = [("output.dir", self.out.clone()), ("output.format", self.format.clone())];
        for (key, value) in args.pairs().into_iter().chain(globals) {
            if let Some(v) = value {
                settings.insert(key.to_string(), v);
            }
        }
        RunConfig::from_settings(kind, &settings, self.threads)
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.into_config().and_then(|c| run(&c)) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            0
        }
        Err(e) => {
            eprintln!("specgap: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(specgap_core::Error::InvalidInput("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::Core(specgap_core::Error::Domain("x".into())).exit_code(), 3);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "geometry.d = 3\nnumeric.degree = 0\noutput.format = structured\n",
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "specgap",
            "--config",
            path.to_str().unwrap(),
            "hyperbolic",
            "--degree",
            "1",
            "--format",
            "csv",
        ])
        .unwrap();
        let c = cli.into_config().unwrap();
        assert_eq!(c.numeric.degree, Some(1));
        assert_eq!(c.output.format, Format::Csv);
        assert_eq!(
            c.geometry,
            Geometry::Hyperbolic {
                d: 3,
                vol: 1.0,
                times: None
            }
        );
    }
}
