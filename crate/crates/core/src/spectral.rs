//! Theta functions, truncated thetas, decay-exponent estimation and Laplace transforms
//! of spectral density functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bloch::{spectrum_summary, SpectralSample};
use crate::error::{Error, Result};
use crate::hyperbolic::ClosedFormTheta;
use crate::special::{gamma_q, gamma_real};

/// Default fit window for decay exponents.
pub const DEFAULT_WINDOW: (f64, f64) = (10.0, 1e3);

type ShiftedFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum ThetaBacking {
    /// Sampled combinatorial spectrum of one degree.
    Sample {
        sample: Arc<SpectralSample>,
        kernel_tol: f64,
    },
    /// Closed-form heat trace; its constant term is the L² Betti number.
    ClosedForm(ClosedFormTheta),
    /// A tabulated or synthetic function, given as t ↦ e^{λ₀t}θ(t).
    Function(Arc<ShiftedFn>),
}

/// θ_j(t) = τ(e^{−tΔ_j}) − b_j together with its gap λ₀.
#[derive(Clone)]
pub struct ThetaFunction {
    pub backing: ThetaBacking,
    pub degree: usize,
    pub betti: f64,
    pub lambda0: f64,
}

impl std::fmt::Debug for ThetaFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.backing {
            ThetaBacking::Sample { .. } => "sample",
            ThetaBacking::ClosedForm(_) => "closed-form",
            ThetaBacking::Function(_) => "function",
        };
        f.debug_struct("ThetaFunction")
            .field("backing", &kind)
            .field("degree", &self.degree)
            .field("betti", &self.betti)
            .field("lambda0", &self.lambda0)
            .finish()
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta requires t > 0, got {t}")))
    }
}

impl ThetaFunction {
    /// Theta of one sampled degree; b and λ₀ come from the spectrum summary.
    pub fn from_sample(sample: Arc<SpectralSample>, degree: usize, kernel_tol: Option<f64>) -> Result<Self> {
        if degree >= sample.degrees() {
            return Err(Error::InvalidInput(format!("sample has no degree {degree}")));
        }
        let summary = spectrum_summary(&sample, kernel_tol)?;
        let d = &summary.degrees[degree];
        Ok(ThetaFunction {
            degree,
            betti: d.kernel_dim,
            lambda0: d.lambda0,
            backing: ThetaBacking::Sample {
                kernel_tol: d.kernel_tol,
                sample,
            },
        })
    }

    pub fn from_closed_form(cf: ClosedFormTheta, degree: usize) -> Self {
        ThetaFunction {
            degree,
            betti: cf.constant_term(),
            lambda0: cf.min_rate().unwrap_or(0.0),
            backing: ThetaBacking::ClosedForm(cf),
        }
    }

    /// A theta given through its shifted form g(t) = e^{λ₀t}θ(t).
    pub fn from_shifted_fn<F>(degree: usize, lambda0: f64, g: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ThetaFunction {
            backing: ThetaBacking::Function(Arc::new(g)),
            degree,
            betti: 0.0,
            lambda0,
        }
    }

    /// The same theta with a different reference gap (e.g. 0 for the Novikov–Shubin setting).
    pub fn with_lambda0(&self, lambda0: f64) -> Self {
        let mut out = self.clone();
        if let ThetaBacking::Function(g) = &self.backing {
            let g = g.clone();
            let shift = lambda0 - self.lambda0;
            out.backing = ThetaBacking::Function(Arc::new(move |t| (shift * t).exp() * g(t)));
        }
        out.lambda0 = lambda0;
        out
    }

    /// e^{λ₀t}θ(t), evaluated without forming e^{λ₀t} separately where possible.
    pub fn shifted(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(match &self.backing {
            ThetaBacking::Sample { sample, kernel_tol } => {
                let tol = *kernel_tol;
                let l0 = self.lambda0;
                sample.integrate(self.degree, |l| if l > tol { (-(l - l0) * t).exp() } else { 0.0 })
            }
            ThetaBacking::ClosedForm(cf) => cf.eval_shifted_nonconstant(t, self.lambda0),
            ThetaBacking::Function(g) => g(t),
        })
    }

    pub fn theta(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(match &self.backing {
            ThetaBacking::ClosedForm(cf) => cf.eval(t) - self.betti,
            _ => (-self.lambda0 * t).exp() * self.shifted(t)?,
        })
    }

    /// τ(e^{−tΔ}) = θ(t) + b.
    pub fn heat_trace(&self, t: f64) -> Result<f64> {
        Ok(self.theta(t)? + self.betti)
    }

    /// Largest eigenvalue of a sampled backing.
    pub fn lambda_max(&self) -> Option<f64> {
        match &self.backing {
            ThetaBacking::Sample { sample, .. } => Some(sample.max_eigenvalue()),
            _ => None,
        }
    }

    /// Pieces (α, p) of e^{λ₀t}θ(t) that do not decay exponentially: pure powers α t^{−p}.
    pub fn persistent_powers(&self) -> Vec<(f64, f64)> {
        match &self.backing {
            ThetaBacking::ClosedForm(cf) => cf
                .terms()
                .iter()
                .filter(|t| t.rate == self.lambda0 && !(t.power2 == 0 && t.rate == 0.0))
                .map(|t| (t.coefficient, t.power()))
                .collect(),
            ThetaBacking::Sample { sample, kernel_tol } => {
                let l0 = self.lambda0;
                let eps = 1e-12 * l0.abs().max(*kernel_tol);
                let mass = sample.integrate(self.degree, |l| {
                    if l > *kernel_tol && (l - l0).abs() <= eps {
                        1.0
                    } else {
                        0.0
                    }
                });
                if mass > 0.0 {
                    vec![(mass, 0.0)]
                } else {
                    Vec::new()
                }
            }
            ThetaBacking::Function(_) => Vec::new(),
        }
    }

    /// Smallest positive decay rate of e^{λ₀t}θ(t) after removing persistent powers,
    /// when it is known.
    pub fn shifted_gap(&self) -> Option<f64> {
        match &self.backing {
            ThetaBacking::ClosedForm(cf) => cf
                .terms()
                .iter()
                .map(|t| t.rate - self.lambda0)
                .filter(|&r| r > 0.0)
                .reduce(f64::min),
            ThetaBacking::Sample { sample, kernel_tol } => {
                let l0 = self.lambda0;
                let eps = 1e-12 * l0.abs().max(*kernel_tol);
                sample.spectra[self.degree]
                    .iter()
                    .flatten()
                    .map(|&l| l - l0)
                    .filter(|&r| r > eps && r + l0 > *kernel_tol)
                    .reduce(f64::min)
            }
            ThetaBacking::Function(_) => None,
        }
    }
}

/// Spectral density function N_j of a closed-form term α t^{−p}e^{−bt} at λ.
fn term_counting(alpha: f64, p: f64, rate: f64, lambda: f64) -> f64 {
    if lambda < rate {
        return 0.0;
    }
    if p == 0.0 {
        return alpha;
    }
    alpha * (lambda - rate).powf(p) / gamma_real(p + 1.0)
}

/// ∫_{(a,∞)} e^{−λt} dN(λ) for the same term.
fn term_tail(alpha: f64, p: f64, rate: f64, a: f64, t: f64) -> f64 {
    let full = alpha * t.powf(-p) * (-rate * t).exp();
    if p == 0.0 {
        return if rate > a { full } else { 0.0 };
    }
    if a <= rate {
        full
    } else {
        full * gamma_q(p, (a - rate) * t)
    }
}

/// The spectral tail θ_{j,ν}(t) = ∫_{(λ₀+ν, ∞)} e^{−λt} dN_j(λ): the part of θ carried by
/// spectrum strictly above λ₀ + ν.
pub fn theta_truncated(theta: &ThetaFunction, nu: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    if !(nu >= 0.0) {
        return Err(Error::InvalidInput(format!("ν must be non-negative, got {nu}")));
    }
    let a = theta.lambda0 + nu;
    match &theta.backing {
        ThetaBacking::Sample { sample, kernel_tol } => {
            let tol = *kernel_tol;
            Ok(sample.integrate(theta.degree, |l| if l > tol && l > a { (-l * t).exp() } else { 0.0 }))
        }
        ThetaBacking::ClosedForm(cf) => Ok(cf
            .terms()
            .iter()
            .filter(|term| !(term.power2 == 0 && term.rate == 0.0))
            .map(|term| term_tail(term.coefficient, term.power(), term.rate, a, t))
            .sum()),
        ThetaBacking::Function(_) => Err(Error::InvalidInput(
            "truncated theta needs a spectral measure, not a bare function".into(),
        )),
    }
}

/// N_j(λ): spectral density off the kernel, for sampled and closed-form backings.
pub fn counting_function(theta: &ThetaFunction, lambda: f64) -> Result<f64> {
    match &theta.backing {
        ThetaBacking::Sample { sample, kernel_tol } => {
            let tol = *kernel_tol;
            Ok(sample.integrate(theta.degree, |l| if l > tol && l <= lambda { 1.0 } else { 0.0 }))
        }
        ThetaBacking::ClosedForm(cf) => Ok(cf
            .terms()
            .iter()
            .filter(|term| !(term.power2 == 0 && term.rate == 0.0))
            .map(|term| term_counting(term.coefficient, term.power(), term.rate, lambda))
            .sum()),
        ThetaBacking::Function(_) => Err(Error::InvalidInput("counting function needs a spectral measure".into())),
    }
}

/// t∫_{λ₀+ν}^∞ e^{−λt} N_j(λ) dλ = e^{−(λ₀+ν)t}N_j(λ₀+ν) + θ_{j,ν}(t), the truncated
/// Laplace integral of the counting function itself (integration by parts of the tail).
pub fn truncated_laplace_integral(theta: &ThetaFunction, nu: f64, t: f64) -> Result<f64> {
    let a = theta.lambda0 + nu;
    Ok((-a * t).exp() * counting_function(theta, a)? + theta_truncated(theta, nu, t)?)
}

/// A non-decreasing function tabulated on an increasing grid, linear between nodes.
/// The first node is the bottom λ₀; G(λ₀) is the mass of an atom there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub lambda: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityTable {
    pub fn new(lambda: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambda.len() != values.len() || lambda.len() < 2 {
            return Err(Error::DimensionMismatch(
                "density table needs ≥ 2 matching nodes".into(),
            ));
        }
        if lambda.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("density grid must be strictly increasing".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) || values[0] < 0.0 {
            return Err(Error::InvalidInput(
                "density must be non-negative and non-decreasing".into(),
            ));
        }
        Ok(DensityTable { lambda, values })
    }

    /// Tabulate G on a grid.
    pub fn from_fn(lambda: Vec<f64>, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = lambda.iter().map(|&l| g(l)).collect();
        Self::new(lambda, values)
    }

    pub fn bottom(&self) -> f64 {
        self.lambda[0]
    }
}

/// e^{λ₀t}ψ(t) with ψ(t) = ∫ e^{−λt} dG(λ), exact for the piecewise-linear G.
pub fn laplace_of_density_shifted(table: &DensityTable, t: f64) -> Result<f64> {
    check_t(t)?;
    let l0 = table.bottom();
    let mut total = table.values[0];
    for i in 0..table.lambda.len() - 1 {
        let (x0, x1) = (table.lambda[i], table.lambda[i + 1]);
        let h = x1 - x0;
        let slope = (table.values[i + 1] - table.values[i]) / h;
        if slope == 0.0 {
            continue;
        }
        total += -slope * (-(x0 - l0) * t).exp() * (-h * t).exp_m1() / t;
    }
    let last = *table.lambda.last().unwrap();
    let tail = table.values.last().unwrap() * (-(last - l0) * t).exp();
    if tail > 1e-14 * total.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(format!(
            "density table ends at {last}, too early for t = {t}"
        )));
    }
    Ok(total)
}

/// ψ(t) = ∫ e^{−λt} dG(λ).
pub fn laplace_of_density(table: &DensityTable, t: f64) -> Result<f64> {
    Ok((-table.bottom() * t).exp() * laplace_of_density_shifted(table, t)?)
}

/// A theta function whose spectral density function is the tabulated G.
pub fn theta_from_density(table: DensityTable, degree: usize) -> ThetaFunction {
    let l0 = table.bottom();
    ThetaFunction::from_shifted_fn(degree, l0, move |t| {
        laplace_of_density_shifted(&table, t).unwrap_or(f64::NAN)
    })
}

/// Density (λ − λ₀)^α tabulated on a grid that is log-uniform in λ − λ₀ over [1e−9, 1e2].
pub fn power_law_density(alpha: f64, lambda0: f64) -> Result<DensityTable> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(lambda0 >= 0.0 && lambda0.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need α > 0 and λ₀ ≥ 0, got α = {alpha}, λ₀ = {lambda0}"
        )));
    }
    let grid = std::iter::once(lambda0)
        .chain((0..6000).map(|i| lambda0 + 1e-9 * 10f64.powf(i as f64 * 11.0 / 5999.0)))
        .collect();
    DensityTable::from_fn(grid, |l| (l - lambda0).max(0.0).powf(alpha))
}

/// Fitted decay exponents of e^{λ₀t}θ(t) on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// Lower exponent β (the slower of the two terminal fits).
    pub beta: f64,
    /// Upper exponent β̄ (the faster of the two terminal fits).
    pub beta_bar: f64,
    /// Negated least-squares slope over the whole window.
    pub slope: f64,
    pub window_min: f64,
    pub window_max: f64,
    /// Largest deviation of log(e^{λ₀t}θ) from the global fit line.
    pub residual: f64,
    pub lambda0: f64,
    pub n_points: usize,
}

fn ls_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Estimate β and β̄ from log(e^{λ₀t}θ(t)) against log t on a log-uniform grid.
///
/// The global slope is reported as `slope`; β and β̄ are the smaller and larger exponents
/// of separate fits on the last two quarters of the log window, where the asymptotic
/// regime is closest.
pub fn estimate_beta(
    theta: &ThetaFunction,
    lambda0: Option<f64>,
    window: (f64, f64),
    n_points: usize,
) -> Result<BetaEstimate> {
    let (t_min, t_max) = window;
    if !(t_min > 0.0) || !(t_max / t_min >= 10.0) {
        return Err(Error::InvalidInput(format!(
            "fit window [{t_min}, {t_max}] too narrow: need t_max/t_min ≥ 10"
        )));
    }
    if n_points < 8 {
        return Err(Error::InvalidInput("need at least 8 fit points".into()));
    }
    if let Some(lmax) = theta.lambda_max() {
        if lmax > 0.0 && t_min < 0.1 / lmax {
            return Err(Error::InvalidInput(format!(
                "window starts at {t_min}, inside the saturated range t < {}",
                0.1 / lmax
            )));
        }
    }
    let l0 = lambda0.unwrap_or(theta.lambda0);
    let extra = l0 - theta.lambda0;
    let (lo, hi) = (t_min.ln(), t_max.ln());
    let mut xs = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let x = lo + (hi - lo) * i as f64 / (n_points - 1) as f64;
        let t = x.exp();
        let v = theta.shifted(t)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("non-positive theta value {v} at t = {t}")));
        }
        xs.push(x);
        ys.push(v.ln() + extra * t);
    }
    let (slope, intercept) = ls_slope(&xs, &ys);
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    let q = n_points / 4;
    let (s3, _) = ls_slope(
        &xs[n_points - 2 * q..n_points - q + 1],
        &ys[n_points - 2 * q..n_points - q + 1],
    );
    let (s4, _) = ls_slope(&xs[n_points - q..], &ys[n_points - q..]);
    Ok(BetaEstimate {
        beta: (-s3).min(-s4),
        beta_bar: (-s3).max(-s4),
        slope: -slope,
        window_min: t_min,
        window_max: t_max,
        residual,
        lambda0: l0,
        n_points,
    })
}
