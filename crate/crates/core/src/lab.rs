//! Mesh-refinement experiments: combinatorial spectral quantities on successively
//! subdivided torus complexes, compared with the continuum flat torus.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{sample_complex, spectral_density, spectrum_summary, DensityKind, SampleOptions, SpectralSample};
use crate::complex::PeriodicComplex;
use crate::error::{Error, Result};
use crate::hyperbolic::{ClosedFormModel, ClosedFormTheta, HyperbolicModel};
use crate::spectral::{estimate_beta, ThetaFunction};
use crate::zeta::{ns_zeta, HeatExpansion, ZetaPiece};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub mesh: f64,
    pub metric: String,
    pub value: f64,
    pub error: f64,
    /// log(e_{l−1}/e_l) / log(η_{l−1}/η_l); absent on the first level or when undefined.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub degree: usize,
    /// Set when the operator was deformed (e.g. a mass shift), never for plain Laplacians.
    pub deformation: Option<String>,
    pub rows: Vec<ConvergenceRow>,
    /// Errors strictly decrease across levels for every metric.
    pub monotone: bool,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    fn new(experiment: &str, degree: usize, deformation: Option<String>, mut rows: Vec<ConvergenceRow>) -> Self {
        let mut notes = Vec::new();
        let mut monotone = true;
        let mut metrics: Vec<String> = Vec::new();
        for r in &rows {
            if !metrics.contains(&r.metric) {
                metrics.push(r.metric.clone());
            }
        }
        for metric in &metrics {
            let idx: Vec<usize> = (0..rows.len()).filter(|&i| &rows[i].metric == metric).collect();
            for w in idx.windows(2) {
                let (a, b) = (&rows[w[0]], &rows[w[1]]);
                let order = (a.error / b.error).ln() / (a.mesh / b.mesh).ln();
                let order = order.is_finite().then_some(order);
                if order.is_none() {
                    notes.push(format!(
                        "{metric}: order undefined between levels {} and {}",
                        a.level, b.level
                    ));
                }
                if !(b.error < a.error) {
                    monotone = false;
                }
                rows[w[1]].order = order;
            }
        }
        ConvergenceReport {
            experiment: experiment.into(),
            degree,
            deformation,
            rows,
            monotone,
            notes,
        }
    }

    /// Rows of one metric, in level order.
    pub fn metric(&self, name: &str) -> Vec<&ConvergenceRow> {
        self.rows.iter().filter(|r| r.metric == name).collect()
    }
}

fn refinement_levels(base: &PeriodicComplex, levels: usize) -> Result<Vec<PeriodicComplex>> {
    if levels < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 refinement levels, got {levels}"
        )));
    }
    let mut out = vec![base.clone()];
    while out.len() < levels {
        let next = out.last().unwrap().subdivide()?;
        out.push(next);
    }
    Ok(out)
}

/// binomial(g, j)·vol·ω_g λ^{g/2}/(2π)^g: the continuum spectral density function of
/// j-forms on a flat g-torus cover, per fundamental domain.
pub fn flat_torus_counting(g: usize, j: usize, volume: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let binom = (0..j).fold(1.0, |acc, i| acc * (g - i) as f64 / (i + 1) as f64);
    let unit_ball = std::f64::consts::PI.powf(g as f64 / 2.0) / crate::special::gamma_real(g as f64 / 2.0 + 1.0);
    binom * volume * unit_ball * lambda.powf(g as f64 / 2.0) / (2.0 * std::f64::consts::PI).powi(g as i32)
}

/// Continuum theta of j-forms on the flat torus covered by `complex`.
pub fn flat_torus_reference(complex: &PeriodicComplex, degree: usize) -> Result<ThetaFunction> {
    Ok(ThetaFunction::from_closed_form(
        ClosedFormTheta::flat_torus(complex.rank(), degree, complex.volume())?,
        degree,
    ))
}

#[derive(Clone, Debug)]
pub struct LabOptions {
    /// Character resolution per lattice direction of the complex being sampled.
    pub resolution: usize,
    /// Points of the log grid on which theta errors are measured.
    pub n_grid: usize,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions {
            resolution: 32,
            n_grid: 50,
        }
    }
}

fn sampled(complex: &PeriodicComplex, options: SampleOptions) -> Result<Arc<SpectralSample>> {
    Ok(Arc::new(sample_complex(
        complex,
        &SampleOptions {
            primitive: true,
            ..options
        },
    )?))
}

/// Sup-error of the combinatorial theta against `reference` on a log grid of the window,
/// for each complex in `complexes` (which need not be refinements of one another).
pub fn theta_convergence_on(
    complexes: &[PeriodicComplex],
    degree: usize,
    window: (f64, f64),
    reference: &ThetaFunction,
    options: &LabOptions,
) -> Result<ConvergenceReport> {
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::InvalidInput(format!("invalid t-window [{t1}, {t2}]")));
    }
    let n = options.n_grid.max(2);
    let grid: Vec<f64> = (0..n).map(|i| t1 * (t2 / t1).powf(i as f64 / (n - 1) as f64)).collect();
    let rows = complexes
        .par_iter()
        .enumerate()
        .map(|(level, c)| {
            let sample = sampled(
                c,
                SampleOptions {
                    resolution: options.resolution,
                    ..Default::default()
                },
            )?;
            let theta = ThetaFunction::from_sample(sample, degree, None)?;
            let mut abs_err: f64 = 0.0;
            let mut rel_err: f64 = 0.0;
            for &t in &grid {
                let r = reference.theta(t)?;
                let e = (theta.theta(t)? - r).abs();
                abs_err = abs_err.max(e);
                rel_err = rel_err.max(e / r.abs());
            }
            Ok(ConvergenceRow {
                level,
                mesh: c.mesh_stats().mesh,
                metric: "theta_sup_error".into(),
                value: rel_err,
                error: abs_err,
                order: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::new("theta_convergence", degree, None, rows))
}

/// Theta errors on `levels` successive subdivisions of `base`. `value` holds the largest
/// relative error on the window, `error` the largest absolute error.
pub fn theta_convergence(
    base: &PeriodicComplex,
    levels: usize,
    degree: usize,
    window: (f64, f64),
    reference: &ThetaFunction,
    options: &LabOptions,
) -> Result<ConvergenceReport> {
    theta_convergence_on(&refinement_levels(base, levels)?, degree, window, reference, options)
}

/// Bottom of the spectrum of Δ_j + m² per level, against the analytic bottom m².
/// The character grid is refined together with the mesh (R = N per axis).
pub fn gap_convergence(
    base: &PeriodicComplex,
    levels: usize,
    degree: usize,
    mass_shift: f64,
) -> Result<ConvergenceReport> {
    if !(mass_shift >= 0.0) {
        return Err(Error::InvalidInput(format!("mass shift must be ≥ 0, got {mass_shift}")));
    }
    let complexes = refinement_levels(base, levels)?;
    let per_level = complexes
        .par_iter()
        .enumerate()
        .map(|(level, c)| {
            let options = SampleOptions {
                resolution: c.n_per_axis().max(2),
                mass_shift,
                include_up: true,
                ..Default::default()
            };
            let sample = sampled(c, options)?;
            let summary = spectrum_summary(&sample, None)?;
            let d = &summary.degrees[degree];
            if mass_shift > 0.0 && d.kernel_dim > 0.01 {
                return Err(Error::Diagnostic(format!(
                    "kernel detected ({}) for the mass-shifted operator at level {level}",
                    d.kernel_dim
                )));
            }
            let mesh = c.mesh_stats().mesh;
            let err = |v: f64| {
                if mass_shift > 0.0 {
                    (v - mass_shift).abs() / mass_shift
                } else {
                    v.abs()
                }
            };
            let mut rows = vec![ConvergenceRow {
                level,
                mesh,
                metric: "lambda0".into(),
                value: d.lambda0,
                error: err(d.lambda0),
                order: None,
            }];
            if let Some(k) = d.kappa0 {
                rows.push(ConvergenceRow {
                    level,
                    mesh,
                    metric: "kappa0".into(),
                    value: k,
                    error: k.abs(),
                    order: None,
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let deformation = (mass_shift > 0.0).then(|| format!("mass shift m^2 = {mass_shift}"));
    Ok(ConvergenceReport::new(
        "gap_convergence",
        degree,
        deformation,
        per_level.into_iter().flatten().collect(),
    ))
}

/// Smallest D ≥ 1 with lower(λ) ≤ upper(Dλ) at every λ of the grid.
pub fn fit_dilation(lower: &dyn Fn(f64) -> f64, upper: &dyn Fn(f64) -> f64, grid: &[f64]) -> f64 {
    let mut worst: f64 = 1.0;
    for &l in grid {
        let target = lower(l);
        if upper(l) >= target {
            continue;
        }
        let mut hi = 2.0;
        while upper(hi * l) < target && hi < 1e6 {
            hi *= 2.0;
        }
        let mut lo = 1.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if upper(mid * l) >= target {
                hi = mid
            } else {
                lo = mid
            }
        }
        worst = worst.max(hi);
    }
    worst
}

/// Fitted dilations of the sandwich F_comb(λ) ≤ F_ref(Dλ), F_ref(λ) ≤ F_comb(Cλ) per level.
/// With `swap`, the roles of the combinatorial and reference densities are exchanged.
pub fn density_sandwich(
    base: &PeriodicComplex,
    levels: usize,
    degree: usize,
    lambda_grid: &[f64],
    reference: &(dyn Fn(f64) -> f64 + Sync),
    swap: bool,
) -> Result<ConvergenceReport> {
    for w in lambda_grid.windows(2) {
        if reference(w[1]) < reference(w[0]) {
            return Err(Error::InvalidInput("reference density is not monotone".into()));
        }
    }
    let complexes = refinement_levels(base, levels)?;
    let per_level = complexes
        .par_iter()
        .enumerate()
        .map(|(level, c)| {
            let options = SampleOptions {
                resolution: 64 * c.n_per_axis(),
                ..Default::default()
            };
            let sample = sampled(c, options)?;
            let comb =
                |l: f64| spectral_density(&sample, degree, l.max(0.0), DensityKind::Nonzero, None).unwrap_or(f64::NAN);
            let (a, b): (&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64) =
                if swap { (reference, &comb) } else { (&comb, reference) };
            let d = fit_dilation(a, b, lambda_grid);
            let cdil = fit_dilation(b, a, lambda_grid);
            let mesh = c.mesh_stats().mesh;
            Ok(vec![
                ConvergenceRow {
                    level,
                    mesh,
                    metric: "dilation_D".into(),
                    value: d,
                    error: d - 1.0,
                    order: None,
                },
                ConvergenceRow {
                    level,
                    mesh,
                    metric: "dilation_C".into(),
                    value: cdil,
                    error: cdil - 1.0,
                    order: None,
                },
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::new(
        "density_sandwich",
        degree,
        None,
        per_level.into_iter().flatten().collect(),
    ))
}

/// A zeta probe: the point s and which partial zeta function to evaluate there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaProbe {
    pub s: Complex64,
    pub piece: ZetaPiece,
}

/// Partial zeta functions (gap forced to 0) of the combinatorial Laplacians against the
/// continuum flat torus, per level and probe.
pub fn zeta_convergence(
    base: &PeriodicComplex,
    levels: usize,
    degree: usize,
    probes: &[ZetaProbe],
) -> Result<ConvergenceReport> {
    let g = base.rank() as f64;
    let reference = flat_torus_reference(base, degree)?.with_lambda0(0.0);
    let alpha = estimate_beta(&reference, Some(0.0), (10.0, 1e3), 32)?.beta;
    for p in probes {
        match p.piece {
            ZetaPiece::Small if !(p.s.re > g / 2.0) => {
                return Err(Error::Domain(format!(
                    "small-piece probe needs Re s > {}, got {}",
                    g / 2.0,
                    p.s
                )))
            }
            ZetaPiece::Large if !(p.s.re < alpha) => {
                return Err(Error::Domain(format!(
                    "large-piece probe needs Re s < {alpha:.3}, got {}",
                    p.s
                )))
            }
            _ => {}
        }
    }
    let ref_exp = HeatExpansion::for_theta(&reference, None)?;
    let ref_values = probes
        .iter()
        .map(|p| ns_zeta(&reference, alpha, p.s, p.piece, Some(&ref_exp)))
        .collect::<Result<Vec<_>>>()?;
    let complexes = refinement_levels(base, levels)?;
    let per_level = complexes
        .par_iter()
        .enumerate()
        .map(|(level, c)| {
            let sample = sampled(
                c,
                SampleOptions {
                    resolution: 32,
                    ..Default::default()
                },
            )?;
            let theta = ThetaFunction::from_sample(sample, degree, None)?;
            let mesh = c.mesh_stats().mesh;
            probes
                .iter()
                .zip(&ref_values)
                .map(|(p, r)| {
                    let v = ns_zeta(&theta, alpha, p.s, p.piece, None)?;
                    let name = match p.piece {
                        ZetaPiece::Small => "zeta_small",
                        ZetaPiece::Large => "zeta_large",
                    };
                    Ok(ConvergenceRow {
                        level,
                        mesh,
                        metric: format!("{name}(s={})", format_complex(p.s)),
                        value: v.re,
                        error: (v - r).norm(),
                        order: None,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::new(
        "zeta_convergence",
        degree,
        None,
        per_level.into_iter().flatten().collect(),
    ))
}

fn format_complex(s: Complex64) -> String {
    if s.im == 0.0 {
        format!("{}", s.re)
    } else {
        format!("{}{:+}i", s.re, s.im)
    }
}

/// A shipped torus complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPreset {
    pub name: &'static str,
    pub g: usize,
    pub n_per_axis: usize,
    pub basis: Vec<Vec<f64>>,
}

impl TorusPreset {
    pub fn build(&self) -> Result<PeriodicComplex> {
        PeriodicComplex::build_torus(self.g, self.n_per_axis, &self.basis)
    }
}

pub fn torus_presets() -> Vec<TorusPreset> {
    vec![
        TorusPreset {
            name: "circle",
            g: 1,
            n_per_axis: 8,
            basis: vec![vec![1.0]],
        },
        TorusPreset {
            name: "torus2",
            g: 2,
            n_per_axis: 4,
            basis: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        },
        TorusPreset {
            name: "torus2-skew",
            g: 2,
            n_per_axis: 3,
            basis: vec![vec![1.0, 0.0], vec![0.5, 0.9]],
        },
        TorusPreset {
            name: "torus3",
            g: 3,
            n_per_axis: 2,
            basis: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        },
    ]
}

pub fn torus_preset(name: &str) -> Option<TorusPreset> {
    torus_presets().into_iter().find(|p| p.name == name)
}

/// Shipped closed-form models: hyperbolic manifolds and products of them.
pub fn closed_form_presets() -> Result<Vec<ClosedFormModel>> {
    let h = |d| ClosedFormModel::hyperbolic(&HyperbolicModel::new(d, 1.0)?);
    let (h3, h5, h7) = (h(3)?, h(5)?, h(7)?);
    Ok(vec![h3.product(&h3)?, h5.product(&h3)?, h3, h5, h7])
}

/// Names of the shipped convergence experiments.
pub const EXPERIMENT_PRESETS: [&str; 6] = [
    "circle-theta",
    "torus2-theta",
    "circle-gap",
    "circle-gap-massless",
    "circle-density",
    "circle-zeta",
];

/// Run a shipped convergence experiment.
pub fn run_experiment(name: &str, levels: usize) -> Result<ConvergenceReport> {
    let circle = |n| PeriodicComplex::build_torus(1, n, &[vec![1.0]]);
    let opts = LabOptions::default();
    match name {
        "circle-theta" => {
            let base = circle(8)?;
            theta_convergence(&base, levels, 0, (0.5, 5.0), &flat_torus_reference(&base, 0)?, &opts)
        }
        "torus2-theta" => {
            let base = PeriodicComplex::build_torus(2, 4, &[vec![1.0, 0.0], vec![0.0, 1.0]])?;
            let opts = LabOptions { resolution: 8, ..opts };
            theta_convergence(&base, levels, 1, (0.5, 5.0), &flat_torus_reference(&base, 1)?, &opts)
        }
        "circle-gap" => gap_convergence(&circle(8)?, levels, 0, 1.0),
        "circle-gap-massless" => gap_convergence(&circle(8)?, levels, 0, 0.0),
        "circle-density" => {
            let grid: Vec<f64> = (0..100).map(|i| 0.5 * 100f64.powf(i as f64 / 99.0)).collect();
            density_sandwich(
                &circle(8)?,
                levels,
                0,
                &grid,
                &|l| flat_torus_counting(1, 0, 1.0, l),
                false,
            )
        }
        "circle-zeta" => zeta_convergence(
            &circle(8)?,
            levels,
            0,
            &[
                ZetaProbe {
                    s: Complex64::new(2.0, 0.0),
                    piece: ZetaPiece::Small,
                },
                ZetaProbe {
                    s: Complex64::new(1.5, 1.0),
                    piece: ZetaPiece::Small,
                },
            ],
        ),
        other => Err(Error::InvalidInput(format!("unknown experiment preset '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize) -> PeriodicComplex {
        PeriodicComplex::build_torus(1, n, &[vec![1.0]]).unwrap()
    }

    #[test]
    fn circle_theta_converges() {
        let r = run_experiment("circle-theta", 4).unwrap();
        assert!(r.monotone);
        let rows = r.metric("theta_sup_error");
        assert_eq!(rows.len(), 4);
        assert!(rows[3].value <= 0.02);
        assert!(rows[1].order.unwrap() > 1.5);
        assert!(r.deformation.is_none());
    }

    #[test]
    fn torus_one_forms_converge() {
        let r = run_experiment("torus2-theta", 3).unwrap();
        assert!(r.monotone, "{:?}", r.rows);
    }

    #[test]
    fn identical_complexes_give_undefined_order() {
        let c = circle(8);
        let reference = theta_convergence_on(
            &[circle(64)],
            0,
            (0.5, 5.0),
            &flat_torus_reference(&c, 0).unwrap(),
            &LabOptions::default(),
        )
        .unwrap();
        // a reference that is itself the combinatorial theta
        let s = sample_complex(
            &c,
            &SampleOptions {
                resolution: 32,
                primitive: true,
                ..Default::default()
            },
        )
        .unwrap();
        let own = ThetaFunction::from_sample(Arc::new(s), 0, None).unwrap();
        let r = theta_convergence_on(&[c.clone(), c], 0, (0.5, 5.0), &own, &LabOptions::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.error == 0.0));
        assert_eq!(r.rows[1].order, None);
        assert!(!r.notes.is_empty());
        assert!(reference.rows[0].error > 0.0);
    }

    #[test]
    fn levels_validated() {
        let c = circle(4);
        let reference = flat_torus_reference(&c, 0).unwrap();
        assert!(theta_convergence(&c, 2, 0, (0.5, 5.0), &reference, &LabOptions::default()).is_err());
        assert!(run_experiment("nope", 3).is_err());
    }

    #[test]
    fn mass_shifted_gap() {
        let r = gap_convergence(&circle(8), 3, 0, 1.0).unwrap();
        let rows = r.metric("lambda0");
        assert!(r.deformation.is_some());
        assert!(rows.windows(2).all(|w| w[1].error < w[0].error));
        assert!(rows[2].error <= 0.05);
        assert!(rows.iter().all(|row| row.value >= 1.0));
    }

    #[test]
    fn massless_gap_closes_and_matches_kappa() {
        let r = gap_convergence(&circle(8), 3, 0, 0.0).unwrap();
        let l = r.metric("lambda0");
        let k = r.metric("kappa0");
        assert!(l.windows(2).all(|w| w[1].value < w[0].value));
        for (a, b) in l.iter().zip(&k) {
            assert!((a.value - b.value).abs() <= 1e-9 * a.value);
        }
    }

    #[test]
    fn dilation_fitting() {
        let grid: Vec<f64> = (1..50).map(|i| i as f64).collect();
        let f = |l: f64| l.sqrt();
        assert_eq!(fit_dilation(&f, &f, &grid), 1.0);
        let g = |l: f64| 1.1 * l.sqrt();
        let d = fit_dilation(&g, &f, &grid);
        assert!((d - 1.21).abs() < 1e-9);
    }

    #[test]
    fn density_dilations_trend_to_one() {
        let grid: Vec<f64> = (0..60).map(|i| 0.5 * 100f64.powf(i as f64 / 59.0)).collect();
        let reference = |l: f64| flat_torus_counting(1, 0, 1.0, l);
        for swap in [false, true] {
            let r = density_sandwich(&circle(8), 3, 0, &grid, &reference, swap).unwrap();
            let c = r.metric("dilation_C");
            let d = r.metric("dilation_D");
            assert!(c.iter().chain(&d).all(|row| row.value >= 1.0 - 1e-9));
            let trend = if swap { &d } else { &c };
            assert!(trend.windows(2).all(|w| w[1].value < w[0].value), "{trend:?}");
        }
        let bad = |l: f64| -l;
        assert!(density_sandwich(&circle(8), 3, 0, &grid, &bad, false).is_err());
    }

    #[test]
    fn continuum_counting_matches_symbol_measure() {
        // circle: N(λ) = √λ/π; 2-torus scalar: λ/(4π)
        assert!((flat_torus_counting(1, 0, 1.0, 4.0) - 2.0 / PI).abs() < 1e-15);
        assert!((flat_torus_counting(2, 0, 1.0, 3.0) - 3.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((flat_torus_counting(2, 1, 2.0, 3.0) - 4.0 * 3.0 / (4.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn zeta_converges_and_gates() {
        let c = circle(8);
        let probes = [
            ZetaProbe {
                s: Complex64::new(2.0, 0.0),
                piece: ZetaPiece::Small,
            },
            ZetaProbe {
                s: Complex64::new(0.0, 0.0),
                piece: ZetaPiece::Large,
            },
        ];
        let r = zeta_convergence(&c, 3, 0, &probes).unwrap();
        let small = r.metric("zeta_small(s=2)");
        assert!(small.windows(2).all(|w| w[1].error < w[0].error));
        let reference = (4.0 * PI).powf(-0.5) * 2.0 / 3.0;
        assert!((small[2].value - reference).abs() < 1e-3);
        assert!(r.metric("zeta_large(s=0)").iter().all(|row| row.value == 0.0));
        let boundary = [ZetaProbe {
            s: Complex64::new(0.5, 0.0),
            piece: ZetaPiece::Small,
        }];
        assert!(matches!(zeta_convergence(&c, 3, 0, &boundary), Err(Error::Domain(_))));
        let beyond = [ZetaProbe {
            s: Complex64::new(0.6, 0.0),
            piece: ZetaPiece::Large,
        }];
        assert!(matches!(zeta_convergence(&c, 3, 0, &beyond), Err(Error::Domain(_))));
    }

    #[test]
    fn finest_level_is_best_for_presets() {
        for name in EXPERIMENT_PRESETS {
            let r = run_experiment(name, 3).unwrap();
            let mut metrics: Vec<&str> = r.rows.iter().map(|row| row.metric.as_str()).collect();
            metrics.dedup();
            for m in metrics {
                if m == "dilation_D" {
                    continue;
                }
                let rows = r.metric(m);
                let last = rows.last().unwrap().error;
                assert!(rows.iter().all(|row| row.error >= last), "{name} {m}");
            }
        }
    }

    #[test]
    fn deterministic_reports() {
        let a = run_experiment("circle-gap", 3).unwrap();
        let b = run_experiment("circle-gap", 3).unwrap();
        assert_eq!(a, b);
    }
}
