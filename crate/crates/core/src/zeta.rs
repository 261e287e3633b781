//! Partial zeta functions of Δ_j − λ₀,j, their continuation to s = 0, determinants and
//! β-torsion.
//!
//! With g(t) = e^{λ₀t}θ(t) and Γ(s)ζ(s) = ∫₀^∞ t^{s−1}g(t)dt, the integral is split at
//! t = 1. The small piece is continued by subtracting the small-t expansion
//! e^{λ₀t}τ(e^{−tΔ}) ~ Σ c̃_i t^{i−n/2} and the kernel term b·e^{λ₀t} analytically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::ClosedFormTheta;
use crate::quadrature::gauss_legendre;
use crate::special::{rgamma, EULER_GAMMA};
use crate::spectral::{ThetaBacking, ThetaFunction};

/// Small-t expansion τ(e^{−tΔ}) ~ t^{−n/2} Σ_{l<N} c_l t^l together with the gap and kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatExpansion {
    pub n: usize,
    pub coefficients: Vec<f64>,
    pub lambda0: f64,
    pub betti: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl HeatExpansion {
    pub fn new(n: usize, coefficients: Vec<f64>, lambda0: f64, betti: f64) -> Result<Self> {
        if 2 * coefficients.len() < n + 2 {
            return Err(Error::InvalidInput(format!(
                "expansion depth {} too shallow for dimension {n}: need N ≥ n/2 + 1",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) || !lambda0.is_finite() || !betti.is_finite() {
            return Err(Error::InvalidInput("non-finite expansion data".into()));
        }
        Ok(HeatExpansion {
            n,
            coefficients,
            lambda0,
            betti,
        })
    }

    pub fn depth(&self) -> usize {
        self.coefficients.len()
    }

    pub fn default_depth(n: usize) -> usize {
        n.div_ceil(2) + 2
    }

    /// c̃_i = Σ_{l+k=i} c_l λ₀^k / k!, the expansion of e^{λ₀t}τ(e^{−tΔ}).
    pub fn shifted_coefficients(&self) -> Vec<f64> {
        (0..self.depth())
            .map(|i| {
                (0..=i)
                    .map(|l| self.coefficients[l] * self.lambda0.powi((i - l) as i32) / factorial(i - l))
                    .sum()
            })
            .collect()
    }

    /// Expansion of a closed-form trace Σ α t^{−p}e^{−rt}; every p must satisfy n/2 − p ∈ ℤ≥0.
    pub fn from_closed_form(cf: &ClosedFormTheta, n: usize, lambda0: f64, depth: usize) -> Result<Self> {
        let mut c = vec![0.0; depth];
        for term in cf.terms() {
            if term.power2 as usize > n || !(n - term.power2 as usize).is_multiple_of(2) {
                return Err(Error::InvalidInput(format!(
                    "power {} does not fit a dimension-{n} expansion",
                    term.power()
                )));
            }
            let start = (n - term.power2 as usize) / 2;
            for (k, l) in (start..depth).enumerate() {
                c[l] += term.coefficient * (-term.rate).powi(k as i32) / factorial(k);
            }
        }
        Self::new(n, c, lambda0, cf.constant_term())
    }

    /// For a finite trace at t = 0: n = 0, c_l = (−1)^l τ(Δ^l)/l!.
    pub fn from_moments(moments: &[f64], lambda0: f64, betti: f64) -> Result<Self> {
        let c = moments
            .iter()
            .enumerate()
            .map(|(l, m)| if l % 2 == 0 { 1.0 } else { -1.0 } * m / factorial(l))
            .collect();
        Self::new(0, c, lambda0, betti)
    }

    /// The natural expansion of a theta: dimension read from the leading power for closed
    /// forms, moments of the sampled measure for combinatorial backings.
    pub fn for_theta(theta: &ThetaFunction, depth: Option<usize>) -> Result<Self> {
        match &theta.backing {
            ThetaBacking::ClosedForm(cf) => {
                let n = cf.max_power2() as usize;
                let depth = depth.unwrap_or_else(|| Self::default_depth(n));
                Self::from_closed_form(cf, n, theta.lambda0, depth)
            }
            ThetaBacking::Sample { sample, .. } => {
                let depth = depth.unwrap_or(1);
                let moments: Vec<f64> = (0..depth)
                    .map(|l| sample.integrate(theta.degree, |x| x.powi(l as i32)))
                    .collect();
                Self::from_moments(&moments, theta.lambda0, theta.betti)
            }
            ThetaBacking::Function(_) => Err(Error::InvalidInput(
                "a bare function carries no small-t expansion; supply one".into(),
            )),
        }
    }

    /// The constant term of the pole-resolved small piece at s = 0:
    /// c̃_{n/2} (n even) − b.
    pub fn zeta_at_zero(&self) -> f64 {
        let ct = self.shifted_coefficients();
        let pole = if self.n.is_multiple_of(2) {
            ct.get(self.n / 2).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        pole - self.betti
    }
}

/// e^x − Σ_{k<K} x^k/k!, accurate for small |x|.
fn exp_tail(x: f64, order: usize) -> f64 {
    if x.abs() < 2.0 {
        let mut term = x.powi(order as i32) / factorial(order);
        let mut sum: f64 = 0.0;
        let mut k = order;
        while term.abs() > 1e-18 * sum.abs() || k < order + 2 {
            sum += term;
            k += 1;
            term *= x / k as f64;
            if k > order + 80 {
                break;
            }
        }
        sum
    } else {
        let mut partial = 0.0;
        let mut term = 1.0;
        for k in 0..order {
            partial += term;
            term *= x / (k + 1) as f64;
        }
        x.exp() - partial
    }
}

/// How R(t) = e^{λ₀t}τ(e^{−tΔ}) − Σ c̃_i t^{i−n/2} − (removed powers) is evaluated.
enum Remainder<'a> {
    ClosedForm {
        cf: &'a ClosedFormTheta,
        skip: Vec<(f64, f64)>,
    },
    Sample,
    Generic,
}

struct Prepared<'a> {
    theta: &'a ThetaFunction,
    expansion: HeatExpansion,
    shifted: Vec<f64>,
    removed: Vec<(f64, f64)>,
    remainder: Remainder<'a>,
}

impl<'a> Prepared<'a> {
    fn new(theta: &'a ThetaFunction, expansion: &HeatExpansion, remove_persistent: bool) -> Result<Self> {
        if (expansion.lambda0 - theta.lambda0).abs() > 1e-12 * theta.lambda0.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "expansion gap {} differs from theta gap {}",
                expansion.lambda0, theta.lambda0
            )));
        }
        let removed = if remove_persistent {
            theta.persistent_powers()
        } else {
            Vec::new()
        };
        let mut shifted = expansion.shifted_coefficients();
        for &(alpha, p) in &removed {
            let twice = (2.0 * p).round() as usize;
            if twice <= expansion.n && (expansion.n - twice).is_multiple_of(2) {
                let i = (expansion.n - twice) / 2;
                if i < shifted.len() {
                    shifted[i] -= alpha;
                }
            }
        }
        let remainder = match &theta.backing {
            ThetaBacking::ClosedForm(cf) => {
                let natural = HeatExpansion::from_closed_form(cf, expansion.n, expansion.lambda0, expansion.depth());
                match natural {
                    Ok(nat) if coefficients_match(&nat, expansion) => Remainder::ClosedForm {
                        cf,
                        skip: removed.clone(),
                    },
                    _ => Remainder::Generic,
                }
            }
            ThetaBacking::Sample { .. } if expansion.n == 0 && expansion.depth() == 1 => {
                let natural = HeatExpansion::for_theta(theta, Some(1))?;
                if coefficients_match(&natural, expansion) {
                    Remainder::Sample
                } else {
                    Remainder::Generic
                }
            }
            _ => Remainder::Generic,
        };
        Ok(Prepared {
            theta,
            expansion: expansion.clone(),
            shifted,
            removed,
            remainder,
        })
    }

    fn half_n(&self) -> f64 {
        self.expansion.n as f64 / 2.0
    }

    /// Order of vanishing of R at t = 0.
    fn remainder_order(&self) -> f64 {
        self.expansion.depth() as f64 - self.half_n()
    }

    /// g(t) with the removed pure powers taken out.
    fn g(&self, t: f64) -> Result<f64> {
        let mut v = self.theta.shifted(t)?;
        for &(alpha, p) in &self.removed {
            v -= alpha * t.powf(-p);
        }
        Ok(v)
    }

    fn remainder(&self, t: f64) -> Result<f64> {
        let l0 = self.expansion.lambda0;
        let depth = self.expansion.depth();
        match &self.remainder {
            Remainder::ClosedForm { cf, skip } => {
                let mut total = 0.0;
                for term in cf.terms() {
                    let p = term.power();
                    if term.rate == l0 && !(term.power2 == 0 && term.rate == 0.0) && skip.iter().any(|&(_, q)| q == p) {
                        continue;
                    }
                    let start = (self.expansion.n - term.power2 as usize) / 2;
                    let order = depth.saturating_sub(start);
                    total += term.coefficient * t.powf(-p) * exp_tail(-(term.rate - l0) * t, order);
                }
                Ok(total)
            }
            Remainder::Sample => {
                let ThetaBacking::Sample { sample, kernel_tol } = &self.theta.backing else {
                    unreachable!()
                };
                let tol = *kernel_tol;
                let eps = 1e-12 * l0.abs().max(tol);
                let skip_bottom = !self.removed.is_empty();
                let above = sample.integrate(self.theta.degree, |l| {
                    if l <= tol || (skip_bottom && (l - l0).abs() <= eps) {
                        0.0
                    } else {
                        (-(l - l0) * t).exp_m1()
                    }
                });
                Ok(above + self.expansion.betti * (l0 * t).exp_m1())
            }
            Remainder::Generic => {
                let mut v = self.g(t)? + self.expansion.betti * (l0 * t).exp();
                for (i, c) in self.shifted.iter().enumerate() {
                    v -= c * t.powf(i as f64 - self.half_n());
                }
                Ok(v)
            }
        }
    }

    /// Largest decay rate present in g, which sets where the small-t regime begins.
    fn rate_scale(&self) -> f64 {
        let l0 = self.expansion.lambda0;
        match &self.theta.backing {
            ThetaBacking::ClosedForm(cf) => cf.terms().iter().map(|t| (t.rate - l0).abs()).fold(0.0, f64::max),
            ThetaBacking::Sample { sample, .. } => (sample.max_eigenvalue() - l0).abs().max(l0.abs()),
            ThetaBacking::Function(_) => 1.0,
        }
    }

    /// Reject an expansion whose remainder does not vanish at the promised rate.
    fn check_remainder(&self) -> Result<()> {
        let scale = 1.0 / self.rate_scale().max(1.0);
        let (ta, tb) = (1e-2 * scale, 1e-3 * scale);
        let (ra, rb) = (self.remainder(ta)?, self.remainder(tb)?);
        let scale: f64 = 1.0
            + self
                .shifted
                .iter()
                .enumerate()
                .map(|(i, c)| (c * tb.powf(i as f64 - self.half_n())).abs())
                .sum::<f64>();
        if !rb.is_finite() || !ra.is_finite() {
            return Err(Error::Diagnostic("remainder not finite near t = 0".into()));
        }
        if rb.abs() <= 1e-9 * scale {
            return Ok(());
        }
        let exponent = (ra.abs() / rb.abs()).log10();
        if exponent < self.remainder_order() - 0.25 {
            return Err(Error::Diagnostic(format!(
                "heat expansion does not match theta: remainder decays like t^{exponent:.2}, expected t^{:.2}",
                self.remainder_order()
            )));
        }
        Ok(())
    }

    /// ∫₀¹ t^{s−1}R(t)dt via t = e^{−u}.
    fn remainder_integral(&self, s: Complex64) -> Result<Complex64> {
        let rate = s.re + self.remainder_order();
        if !(rate > 0.0) {
            return Err(Error::Domain(format!(
                "Re s = {} outside the continuation strip Re s > {}",
                s.re,
                -self.remainder_order()
            )));
        }
        let cut = match self.remainder {
            Remainder::Generic if self.expansion.n > 0 => 1e-3f64.ln().abs(),
            _ => (40.0 / rate).min(700.0),
        };
        let mut total = integrate_u(0.0, cut, |u| {
            let t = (-u).exp();
            Ok(self.remainder(t)? * (-u * s).exp())
        })?;
        if let Remainder::Generic = self.remainder {
            if self.expansion.n > 0 {
                let t_cut = (-cut).exp();
                total += self.remainder(t_cut)? * (s * t_cut.ln()).exp() / (s + self.remainder_order());
            }
        }
        Ok(total)
    }

    /// Σ_i c̃_i/(s+i−n/2) − b·E(s) + ∫₀¹ t^{s−1}R, i.e. Γ(s)·ζ^(1)(s), with the
    /// removed powers' own pole terms excluded.
    fn small_mellin(&self, s: Complex64) -> Result<Complex64> {
        let mut total = self.remainder_integral(s)?;
        for (i, c) in self.shifted.iter().enumerate() {
            if *c != 0.0 {
                total += c / (s + i as f64 - self.half_n());
            }
        }
        total -= self.expansion.betti * kernel_series(s, self.expansion.lambda0);
        Ok(total)
    }

    /// ∫₁^∞ t^{s−1}g(t)dt for the decaying part of g.
    fn large_mellin(&self, s: Complex64) -> Result<Complex64> {
        let gap = self.theta.shifted_gap();
        let integrand = |u: f64| -> Result<Complex64> {
            let t = u.exp();
            Ok(self.g(t)? * (u * s).exp())
        };
        match gap {
            Some(gap) if gap > 0.0 => {
                let t_end = (40.0 / gap).max(2.0) * (1.0 + s.re.max(0.0));
                integrate_u(0.0, t_end.ln(), integrand)
            }
            _ if !matches!(self.theta.backing, ThetaBacking::Function(_)) => {
                // every term of an exponential-polynomial backing was removed
                Ok(Complex64::new(0.0, 0.0))
            }
            _ => {
                let with_tail = |t_end: f64| -> Result<Complex64> {
                    let body = integrate_u(0.0, t_end.ln(), integrand)?;
                    let (g1, g2) = (self.g(t_end)?, self.g(1.1 * t_end)?);
                    if g1 == 0.0 && g2 == 0.0 {
                        return Ok(body);
                    }
                    let local = -(g2 / g1).abs().ln() / 1.1f64.ln();
                    if !(local > s.re) {
                        return Err(Error::NonIntegrableTail(format!(
                            "local decay exponent {local:.3} at t = {t_end:e} does not exceed Re s = {}",
                            s.re
                        )));
                    }
                    Ok(body + g1 * (s * t_end.ln()).exp() / (local - s))
                };
                let full = with_tail(1e6)?;
                let half = with_tail(5e5)?;
                if (full - half).norm() > 1e-6 * full.norm().max(1e-12) {
                    return Err(Error::NonIntegrableTail(format!(
                        "tail estimate unstable under doubling: {full} vs {half}"
                    )));
                }
                Ok(full)
            }
        }
    }
}

fn coefficients_match(a: &HeatExpansion, b: &HeatExpansion) -> bool {
    a.n == b.n
        && (a.betti - b.betti).abs() <= 1e-12 * a.betti.abs().max(1.0)
        && a.coefficients.len() == b.coefficients.len()
        && a.coefficients
            .iter()
            .zip(&b.coefficients)
            .all(|(x, y)| (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1e-300))
}

/// E(s) = ∫₀¹ t^{s−1}e^{λ₀t}dt = Σ_k λ₀^k/(k!(s+k)).
fn kernel_series(s: Complex64, lambda0: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut coeff = 1.0;
    for k in 0..400 {
        if k > 0 {
            coeff *= lambda0 / k as f64;
        }
        if coeff == 0.0 || (k > 2 && coeff.abs() < 1e-18 * total.norm()) {
            break;
        }
        total += coeff / (s + k as f64);
    }
    total
}

/// Σ_{k≥1} λ₀^k/(k!·k), the finite part of E(s) at s = 0.
fn kernel_series_regular(lambda0: f64) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0;
    for k in 1..400 {
        coeff *= lambda0 / k as f64;
        let term = coeff / k as f64;
        total += term;
        if term.abs() < 1e-18 * total.abs() {
            break;
        }
    }
    total
}

const PANEL: f64 = 0.125;
const ORDER: usize = 12;

fn integrate_u<F>(a: f64, b: f64, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if b <= a {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (x, w) = gauss_legendre(ORDER);
    let panels = ((b - a) / PANEL).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += f(mid + 0.5 * h * xi)? * (0.5 * h * wi);
        }
    }
    Ok(total)
}

/// ζ^(1)(s) = (1/Γ(s))∫₀¹ t^{s−1}e^{λ₀t}θ(t)dt, continued through the heat expansion.
pub fn zeta_small(theta: &ThetaFunction, expansion: &HeatExpansion, s: Complex64) -> Result<Complex64> {
    let prep = Prepared::new(theta, expansion, false)?;
    prep.check_remainder()?;
    let half_n = prep.half_n();
    // poles of the expansion terms at s = n/2 − i
    for (i, c) in prep.shifted.iter().enumerate() {
        if *c != 0.0 && (s + i as f64 - half_n).norm() < 1e-14 {
            let m = -s.re;
            if s.im == 0.0 && m >= 0.0 && m.fract() == 0.0 {
                // 1/Γ(s) vanishes there; the pole contributes c·(−1)^m m!
                let residue = c * if (m as i64) % 2 == 0 { 1.0 } else { -1.0 } * factorial(m as usize);
                let mut rest = prep.remainder_integral(s)?;
                for (k, ck) in prep.shifted.iter().enumerate() {
                    if k != i && *ck != 0.0 {
                        rest += ck / (s + k as f64 - half_n);
                    }
                }
                let kernel = kernel_limit(s, expansion);
                return Ok(rgamma(s) * rest + residue - kernel);
            }
            return Err(Error::Domain(format!("ζ^(1) has a pole at s = {s}")));
        }
    }
    if s.im == 0.0 && s.re <= 0.0 && s.re.fract() == 0.0 {
        let mut rest = prep.remainder_integral(s)?;
        for (i, c) in prep.shifted.iter().enumerate() {
            rest += c / (s + i as f64 - half_n);
        }
        return Ok(rgamma(s) * rest - kernel_limit(s, expansion));
    }
    Ok(rgamma(s) * prep.small_mellin(s)?)
}

/// lim (1/Γ(s))·b·E(s) at a non-positive integer s = −m: b·(−λ₀)^m.
fn kernel_limit(s: Complex64, expansion: &HeatExpansion) -> Complex64 {
    let m = (-s.re) as i32;
    Complex64::new(expansion.betti * (-expansion.lambda0).powi(m), 0.0)
}

/// ζ^(∞)(s) = (1/Γ(s))∫₁^∞ t^{s−1}e^{λ₀t}θ(t)dt for Re s < β.
pub fn zeta_large(theta: &ThetaFunction, s: Complex64, beta: f64) -> Result<Complex64> {
    if !(s.re < beta) {
        return Err(Error::Domain(format!("Re s = {} not below β = {beta}", s.re)));
    }
    let rg = rgamma(s);
    let powers = theta.persistent_powers();
    let prep = Prepared {
        theta,
        expansion: HeatExpansion {
            n: 0,
            coefficients: vec![0.0],
            lambda0: theta.lambda0,
            betti: 0.0,
        },
        shifted: Vec::new(),
        removed: powers.clone(),
        remainder: Remainder::Generic,
    };
    let mut total = prep.large_mellin(s)?;
    for (alpha, p) in powers {
        total -= alpha / (s - p);
    }
    Ok(rg * total)
}

/// Per-degree zeta data at s = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaReport {
    pub degree: usize,
    pub zeta1_at_0: f64,
    pub zeta_inf_at_0: f64,
    pub zeta_at_0: f64,
    pub zeta_prime_at_0: f64,
    pub log_determinant: f64,
    pub zeta_at_0_closed_form: f64,
    pub lambda0: f64,
    pub betti: f64,
    pub beta: f64,
    pub notes: Vec<String>,
}

/// log|Det|(Δ − λ₀) = −ζ′(0), where pure powers of e^{λ₀t}θ are dropped (their
/// regularized Mellin transform vanishes identically).
pub fn determinant(theta: &ThetaFunction, expansion: &HeatExpansion, beta: f64) -> Result<ZetaReport> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("determinant needs β > 0, got {beta}")));
    }
    let prep = Prepared::new(theta, expansion, true)?;
    prep.check_remainder()?;
    let half_n = prep.half_n();
    let zero = Complex64::new(0.0, 0.0);
    // Γ(s)ζ(s) = a/s + b₀ + O(s)
    let mut a = -expansion.betti;
    let mut b0 = -expansion.betti * kernel_series_regular(expansion.lambda0);
    for (i, c) in prep.shifted.iter().enumerate() {
        if 2 * i == expansion.n {
            a += c;
        } else {
            b0 += c / (i as f64 - half_n);
        }
    }
    b0 += prep.remainder_integral(zero)?.re;
    let large_prime = prep.large_mellin(zero)?.re;
    let small_prime = b0 + EULER_GAMMA * a;
    let zeta_prime = small_prime + large_prime;
    let closed = expansion.zeta_at_zero()
        - prep
            .removed
            .iter()
            .filter(|(_, p)| *p == 0.0 && expansion.n.is_multiple_of(2))
            .map(|(alpha, _)| alpha)
            .sum::<f64>();
    if (closed - a).abs() > 1e-6 * a.abs().max(1.0) {
        return Err(Error::Diagnostic(format!(
            "ζ(0) = {a} disagrees with closed form {closed}"
        )));
    }
    let mut notes = vec![format!("ζ^(∞) holomorphic for Re s < {beta}")];
    if !prep.removed.is_empty() {
        notes.push(format!("{} pure power term(s) removed", prep.removed.len()));
    }
    // finite-difference cross-check in s (Richardson-extrapolated)
    if beta > 0.04 {
        let full = |s: f64| -> Result<f64> {
            let s = Complex64::new(s, 0.0);
            Ok((rgamma(s) * (prep.small_mellin(s)? + prep.large_mellin(s)?)).re)
        };
        let h = 0.01;
        let (p1, m1, p2, m2) = (full(h)?, full(-h)?, full(2.0 * h)?, full(-2.0 * h)?);
        let value = (4.0 * (p1 + m1) / 2.0 - (p2 + m2) / 2.0) / 3.0;
        let slope = (4.0 * (p1 - m1) / (2.0 * h) - (p2 - m2) / (4.0 * h)) / 3.0;
        if (value - a).abs() > 1e-5 * a.abs().max(1.0) || (slope - zeta_prime).abs() > 1e-5 * zeta_prime.abs().max(1.0)
        {
            return Err(Error::Diagnostic(format!(
                "s-difference check failed: ζ(0) {value} vs {a}, ζ′(0) {slope} vs {zeta_prime}"
            )));
        }
    }
    Ok(ZetaReport {
        degree: theta.degree,
        zeta1_at_0: a,
        zeta_inf_at_0: (rgamma(zero) * prep.large_mellin(zero)?).re,
        zeta_at_0: a,
        zeta_prime_at_0: zeta_prime,
        log_determinant: -zeta_prime,
        zeta_at_0_closed_form: closed,
        lambda0: expansion.lambda0,
        betti: expansion.betti,
        beta,
        notes,
    })
}

/// log T = Σ_j j(−1)^j log|Det|(Δ_j − λ₀,j) over degrees 0..=n.
pub fn beta_torsion(reports: &[ZetaReport]) -> Result<f64> {
    let mut sorted: Vec<&ZetaReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.degree);
    if sorted.is_empty() {
        return Err(Error::InvalidInput("no zeta reports".into()));
    }
    for (j, r) in sorted.iter().enumerate() {
        if r.degree != j {
            return Err(Error::InvalidInput(format!("missing zeta report for degree {j}")));
        }
        if !(r.beta > 0.0) {
            return Err(Error::Domain(format!("degree {j} lacks positive β-decay")));
        }
    }
    Ok(sorted
        .iter()
        .map(|r| r.degree as f64 * if r.degree % 2 == 0 { 1.0 } else { -1.0 } * r.log_determinant)
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZetaPiece {
    Small,
    Large,
}

/// The zeta pieces with the gap forced to 0, gated by the Novikov–Shubin exponent α.
pub fn ns_zeta(
    theta: &ThetaFunction,
    alpha: f64,
    s: Complex64,
    piece: ZetaPiece,
    expansion: Option<&HeatExpansion>,
) -> Result<Complex64> {
    let th = theta.with_lambda0(0.0);
    match piece {
        ZetaPiece::Small => {
            let exp = match expansion {
                Some(e) => HeatExpansion {
                    lambda0: 0.0,
                    ..e.clone()
                },
                None => HeatExpansion::for_theta(&th, None)?,
            };
            zeta_small(&th, &exp, s)
        }
        ZetaPiece::Large => {
            if !(s.re < alpha) {
                return Err(Error::Domain(format!("Re s = {} not below α = {alpha}", s.re)));
            }
            zeta_large(&th, s, alpha)
        }
    }
}
