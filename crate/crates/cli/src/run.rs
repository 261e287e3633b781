use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use specgap_core::bloch::{mckean_singer, sample_complex, spectrum_summary, DegreeSummary, SampleOptions};
use specgap_core::complex::PeriodicComplex;
use specgap_core::hyperbolic::{ClosedFormModel, ClosedFormTheta, HyperbolicModel};
use specgap_core::lab::run_experiment;
use specgap_core::spectral::{estimate_beta, power_law_density, theta_from_density, ThetaFunction};
use specgap_core::zeta::{beta_torsion, determinant, HeatExpansion, ZetaReport};

use crate::config::{CommandKind, Format, Geometry, RunConfig};
use crate::report::{fmt_num, serialize_report, DegreeBeta, McKeanSinger, Report, RunReport, ThetaRow};
use crate::CliError;

/// What a run printed and wrote.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn describe(g: &Geometry) -> String {
    match g {
        Geometry::Torus { name, g, n, basis } => format!("{name}: g={g} n={n} basis={basis:?}"),
        Geometry::Hyperbolic { d, vol, times: None } => format!("H{d} vol={vol}"),
        Geometry::Hyperbolic {
            d,
            vol,
            times: Some((d2, v2)),
        } => format!("H{d} vol={vol} x H{d2} vol={v2}"),
        Geometry::Atomic { atoms } => format!("atomic {atoms:?}"),
        Geometry::PowerLaw { alpha, lambda0 } => format!("density (lambda-{lambda0})^{alpha}"),
        Geometry::Experiment { preset } => preset.clone(),
    }
}

fn closed_form_model(g: &Geometry) -> Result<Option<ClosedFormModel>, CliError> {
    let Geometry::Hyperbolic { d, vol, times } = g else {
        return Ok(None);
    };
    let model = ClosedFormModel::hyperbolic(&HyperbolicModel::new(*d, *vol)?)?;
    Ok(Some(match times {
        Some((d2, v2)) => model.product(&ClosedFormModel::hyperbolic(&HyperbolicModel::new(*d2, *v2)?)?)?,
        None => model,
    }))
}

fn degrees(selected: Option<usize>, top: usize) -> Result<Vec<usize>, CliError> {
    match selected {
        Some(j) if j > top => Err(CliError::Config(format!("degree {j} exceeds the dimension {top}"))),
        Some(j) => Ok(vec![j]),
        None => Ok((0..=top).collect()),
    }
}

fn closed_form_determinant(cf: &ClosedFormTheta, degree: usize, config: &RunConfig) -> Result<ZetaReport, CliError> {
    let theta = ThetaFunction::from_closed_form(cf.clone(), degree);
    let beta = estimate_beta(&theta, None, config.numeric.window, config.numeric.points)?;
    let expansion = HeatExpansion::for_theta(&theta, None)?;
    Ok(determinant(&theta, &expansion, beta.beta)?)
}

fn torus(config: &RunConfig) -> Result<PeriodicComplex, CliError> {
    let Geometry::Torus { g, n, basis, .. } = &config.geometry else {
        unreachable!()
    };
    Ok(PeriodicComplex::build_torus(*g, *n, basis)?)
}

fn sample_options(config: &RunConfig, include_up: bool) -> SampleOptions {
    SampleOptions {
        resolution: config.numeric.resolution,
        mass_shift: config.numeric.mass_shift,
        include_up,
        primitive: true,
        ..Default::default()
    }
}

fn sampled_determinants(config: &RunConfig, complex: &PeriodicComplex) -> Result<Vec<ZetaReport>, CliError> {
    let sample = Arc::new(sample_complex(complex, &sample_options(config, false))?);
    degrees(config.numeric.degree, complex.rank())?
        .into_iter()
        .map(|j| {
            let theta = ThetaFunction::from_sample(sample.clone(), j, config.numeric.kernel_tol)?;
            let expansion = HeatExpansion::for_theta(&theta, None)?;
            Ok(determinant(&theta, &expansion, f64::INFINITY)?)
        })
        .collect()
}

fn log_grid((a, b): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

fn run_inner(config: &RunConfig) -> Result<Outcome, CliError> {
    let mut report = RunReport {
        command: config.command.name().into(),
        geometry: describe(&config.geometry),
        ..Default::default()
    };
    let mut out = String::new();
    match config.command {
        CommandKind::Hyperbolic => {
            let model = closed_form_model(&config.geometry)?.expect("hyperbolic geometry");
            report.spectrum = model
                .gaps()
                .iter()
                .enumerate()
                .map(|(j, &gap)| DegreeSummary {
                    degree: j,
                    lambda0: gap,
                    kernel_dim: model.thetas[j].constant_term(),
                    kappa0: None,
                    kernel_tol: 0.0,
                })
                .collect();
            if config.output.determinant {
                for j in degrees(config.numeric.degree, model.dimension)? {
                    let r = closed_form_determinant(&model.thetas[j], j, config)?;
                    writeln!(out, "degree {j}: log_det = {}", fmt_num(r.log_determinant)).unwrap();
                    report.zeta.push(r);
                }
            }
        }
        CommandKind::Torus => {
            let complex = torus(config)?;
            let (want_theta, want_spectrum) = match (config.output.theta, config.output.spectrum) {
                (false, false) => (true, true),
                flags => flags,
            };
            let sample = Arc::new(sample_complex(&complex, &sample_options(config, want_spectrum))?);
            if want_spectrum {
                report.spectrum = spectrum_summary(&sample, config.numeric.kernel_tol)?.degrees;
                for t in [0.1, 1.0, 10.0] {
                    report.mckean_singer.push(McKeanSinger {
                        t,
                        value: mckean_singer(&sample, t),
                    });
                }
            }
            if want_theta {
                let j = config.numeric.degree.unwrap_or(0);
                if j > complex.rank() {
                    return Err(CliError::Config(format!(
                        "degree {j} exceeds the rank {}",
                        complex.rank()
                    )));
                }
                let theta = ThetaFunction::from_sample(sample.clone(), j, config.numeric.kernel_tol)?;
                let reference = ClosedFormTheta::flat_torus(complex.rank(), j, complex.volume())?;
                for t in log_grid(config.numeric.t_window, config.numeric.theta_points) {
                    let theta_comb = theta.theta(t)?;
                    let theta_ref = reference.eval(t) * (-config.numeric.mass_shift * t).exp();
                    report.theta.push(ThetaRow {
                        t,
                        theta_comb,
                        theta_ref,
                        abs_error: (theta_comb - theta_ref).abs(),
                    });
                }
                let worst = report
                    .theta
                    .iter()
                    .map(|r| r.abs_error / r.theta_ref.abs())
                    .fold(0.0, f64::max);
                writeln!(out, "theta degree {j}: max relative error = {}", fmt_num(worst)).unwrap();
            }
            for d in &report.spectrum {
                writeln!(
                    out,
                    "degree {}: lambda0 = {} kernel_dim = {}",
                    d.degree,
                    fmt_num(d.lambda0),
                    fmt_num(d.kernel_dim)
                )
                .unwrap();
            }
        }
        CommandKind::Beta => {
            let (thetas, lambda0s): (Vec<(usize, ThetaFunction)>, Option<f64>) = match &config.geometry {
                Geometry::PowerLaw { alpha, lambda0 } => {
                    if config.numeric.degree.is_some_and(|j| j != 0) {
                        return Err(CliError::Config("a density has degree 0 only".into()));
                    }
                    (
                        vec![(0, theta_from_density(power_law_density(*alpha, *lambda0)?, 0))],
                        Some(*lambda0),
                    )
                }
                g => {
                    let model = closed_form_model(g)?.expect("hyperbolic geometry");
                    let js = degrees(config.numeric.degree, model.dimension)?;
                    (
                        js.into_iter()
                            .map(|j| (j, ThetaFunction::from_closed_form(model.thetas[j].clone(), j)))
                            .collect(),
                        None,
                    )
                }
            };
            for (j, theta) in thetas {
                let estimate = estimate_beta(&theta, lambda0s, config.numeric.window, config.numeric.points)?;
                writeln!(
                    out,
                    "degree {j}: beta = {} beta_bar = {}",
                    fmt_num(estimate.beta),
                    fmt_num(estimate.beta_bar)
                )
                .unwrap();
                report.beta.push(DegreeBeta { degree: j, estimate });
            }
        }
        CommandKind::Zeta | CommandKind::Torsion => {
            let mut config = config.clone();
            if config.command == CommandKind::Torsion {
                config.numeric.degree = None;
            }
            report.zeta = match &config.geometry {
                Geometry::Atomic { atoms } => {
                    if config.numeric.degree.is_some_and(|j| j != 0) {
                        return Err(CliError::Config("an atomic spectrum has degree 0 only".into()));
                    }
                    let theta = ThetaFunction::from_closed_form(ClosedFormTheta::atomic(atoms)?, 0);
                    let expansion = HeatExpansion::for_theta(&theta, None)?;
                    vec![determinant(&theta, &expansion, f64::INFINITY)?]
                }
                Geometry::Torus { .. } => sampled_determinants(&config, &torus(&config)?)?,
                g => {
                    let model = closed_form_model(g)?.expect("hyperbolic geometry");
                    degrees(config.numeric.degree, model.dimension)?
                        .into_iter()
                        .map(|j| closed_form_determinant(&model.thetas[j], j, &config))
                        .collect::<Result<_, _>>()?
                }
            };
            for r in &report.zeta {
                writeln!(
                    out,
                    "degree {}: zeta(0) = {} zeta'(0) = {} log_det = {}",
                    r.degree,
                    fmt_num(r.zeta_at_0),
                    fmt_num(r.zeta_prime_at_0),
                    fmt_num(r.log_determinant)
                )
                .unwrap();
            }
            if config.command == CommandKind::Torsion {
                let t = beta_torsion(&report.zeta)?;
                writeln!(out, "log_torsion = {}", fmt_num(t)).unwrap();
                report.log_torsion = Some(t);
            }
        }
        CommandKind::Convergence => {
            let Geometry::Experiment { preset } = &config.geometry else {
                unreachable!()
            };
            let r = run_experiment(preset, config.numeric.levels)?;
            for row in &r.rows {
                writeln!(
                    out,
                    "level {} {}: value = {} error = {}",
                    row.level,
                    row.metric,
                    fmt_num(row.value),
                    fmt_num(row.error)
                )
                .unwrap();
            }
            writeln!(out, "monotone = {}", r.monotone).unwrap();
            report.convergence = Some(r);
        }
    }
    let files = write_outputs(config, &report)?;
    Ok(Outcome { stdout: out, files })
}

fn write_outputs(config: &RunConfig, report: &RunReport) -> Result<Vec<PathBuf>, CliError> {
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    match config.output.format {
        Format::Structured => {
            let name = format!("{}.report", config.command.name());
            outputs.push((
                name,
                serialize_report(&Report::Run(report.clone()), Format::Structured)?,
            ));
        }
        Format::Csv => {
            let mut table = |name: &str, r: Report| -> Result<(), CliError> {
                outputs.push((format!("{name}.csv"), serialize_report(&r, Format::Csv)?));
                Ok(())
            };
            if !report.theta.is_empty() {
                table("theta", Report::Theta(report.theta.clone()))?;
            }
            if !report.spectrum.is_empty() {
                table("spectrum", Report::Spectrum(report.spectrum.clone()))?;
            }
            if !report.zeta.is_empty() {
                table("zeta", Report::Zeta(report.zeta.clone()))?;
            }
            if !report.beta.is_empty() {
                table("beta", Report::Beta(report.beta.clone()))?;
            }
            if let Some(c) = &report.convergence {
                table("convergence", Report::Convergence(c.clone()))?;
            }
        }
    }
    let mut files = Vec::new();
    for (name, bytes) in outputs {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        files.push(path);
    }
    Ok(files)
}
