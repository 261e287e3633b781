//! Closed-form heat traces of closed hyperbolic manifolds of odd dimension d = 2n + 1,
//! and the exponential-polynomial family Σ α t^{−p} e^{−bt} that carries them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_half_integer;
use crate::spectral::{estimate_beta, ThetaFunction, DEFAULT_WINDOW};
use crate::zeta::{determinant, HeatExpansion, ZetaReport};

/// One term α t^{−p} e^{−bt}; the power is stored doubled so it is exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub power2: u32,
    pub rate: f64,
}

impl Term {
    pub fn power(&self) -> f64 {
        f64::from(self.power2) / 2.0
    }

    fn eval_shifted(&self, t: f64, shift: f64) -> f64 {
        self.coefficient * t.powf(-self.power()) * (-(self.rate - shift) * t).exp()
    }
}

/// A finite sum Σ α t^{−p} e^{−bt} with half-integer p ≥ 0 and b ≥ 0, kept canonical:
/// sorted by (rate, power), equal keys merged, zero coefficients dropped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormTheta {
    terms: Vec<Term>,
}

impl ClosedFormTheta {
    pub fn new(mut terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if !t.coefficient.is_finite() || !(t.rate >= 0.0) || !t.rate.is_finite() {
                return Err(Error::InvalidInput(format!("invalid closed-form term {t:?}")));
            }
        }
        terms.sort_by(|a, b| a.rate.total_cmp(&b.rate).then(a.power2.cmp(&b.power2)));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.rate == t.rate && last.power2 == t.power2 => last.coefficient += t.coefficient,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coefficient != 0.0);
        Ok(ClosedFormTheta { terms: merged })
    }

    /// Σ m_i e^{−a_i t}: the trace of a finite atomic spectrum.
    pub fn atomic(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            atoms
                .iter()
                .map(|&(rate, coefficient)| Term {
                    coefficient,
                    power2: 0,
                    rate,
                })
                .collect(),
        )
    }

    /// binomial(g, j)·vol·(4πt)^{−g/2}: the heat trace of j-forms on a flat g-torus
    /// cover, per fundamental domain of volume `vol`.
    pub fn flat_torus(g: usize, j: usize, volume: f64) -> Result<Self> {
        if j > g {
            return Err(Error::InvalidInput(format!("degree {j} exceeds dimension {g}")));
        }
        let coefficient = binomial(g, j) * volume * (4.0 * std::f64::consts::PI).powf(-(g as f64) / 2.0);
        Self::new(vec![Term {
            coefficient,
            power2: g as u32,
            rate: 0.0,
        }])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_shifted(t, 0.0)
    }

    /// e^{shift·t} times the value, without overflow.
    pub fn eval_shifted(&self, t: f64, shift: f64) -> f64 {
        self.terms.iter().map(|term| term.eval_shifted(t, shift)).sum()
    }

    /// Like [`eval_shifted`](Self::eval_shifted) but without the constant term.
    pub fn eval_shifted_nonconstant(&self, t: f64, shift: f64) -> f64 {
        self.terms
            .iter()
            .filter(|term| !(term.power2 == 0 && term.rate == 0.0))
            .map(|term| term.eval_shifted(t, shift))
            .sum()
    }

    /// Smallest rate among terms other than a constant (p = 0, b = 0) term.
    pub fn min_rate(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| !(t.power2 == 0 && t.rate == 0.0))
            .map(|t| t.rate)
            .reduce(f64::min)
    }

    /// Coefficient of the constant term, the L² Betti contribution.
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.power2 == 0 && t.rate == 0.0)
            .map(|t| t.coefficient)
            .sum()
    }

    pub fn has_constant_term(&self) -> bool {
        self.constant_term() != 0.0
    }

    /// Largest power p, the half-dimension of the small-t singularity.
    pub fn max_power2(&self) -> u32 {
        self.terms.iter().map(|t| t.power2).max().unwrap_or(0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coefficient: t.coefficient * factor,
                ..*t
            })
            .collect();
        Self::new(terms).expect("scaling preserves validity")
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().chain(&other.terms).copied().collect()).expect("sum preserves validity")
    }

    /// Pointwise product; rates add and powers add.
    pub fn product(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coefficient: a.coefficient * b.coefficient,
                    power2: a.power2 + b.power2,
                    rate: a.rate + b.rate,
                });
            }
        }
        Self::new(terms).expect("product preserves validity")
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A closed hyperbolic manifold of odd dimension d with the given volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicModel {
    pub d: usize,
    pub volume: f64,
}

impl HyperbolicModel {
    pub fn new(d: usize, volume: f64) -> Result<Self> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "dimension must be odd and at least 3, got {d}"
            )));
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::InvalidInput(format!("volume must be positive, got {volume}")));
        }
        Ok(HyperbolicModel { d, volume })
    }

    pub fn n(&self) -> usize {
        (self.d - 1) / 2
    }

    /// a_j = binomial(d−1, j)·vol.
    pub fn a(&self, j: usize) -> f64 {
        binomial(self.d - 1, j) * self.volume
    }

    /// c_j = n − j.
    pub fn c(&self, j: usize) -> usize {
        self.n() - j
    }
}

/// Coefficients (ascending, in x = ν²) of Π_{k=0}^{n}(ν² + k²) / (ν² + (n−j)²),
/// with the division carried out exactly.
pub fn plancherel_poly(d: usize, j: usize) -> Result<Vec<i64>> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "dimension must be odd and at least 3, got {d}"
        )));
    }
    let n = (d - 1) / 2;
    if j > n {
        return Err(Error::InvalidInput(format!("degree {j} out of range 0..={n}")));
    }
    let mut p: Vec<i64> = vec![1];
    for k in 0..=n as i64 {
        let mut next = vec![0; p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i] += c * k * k;
            next[i + 1] += c;
        }
        p = next;
    }
    // synthetic division by (x + r)
    let r = ((n - j) * (n - j)) as i64;
    let deg = p.len() - 1;
    let mut q = vec![0i64; deg];
    let mut carry = 0i64;
    for i in (1..=deg).rev() {
        carry = p[i] - r * carry;
        q[i - 1] = carry;
    }
    let remainder = p[0] - r * q[0];
    if remainder != 0 {
        return Err(Error::Diagnostic(format!(
            "Plancherel division left remainder {remainder}"
        )));
    }
    Ok(q)
}

/// I_t(σ_j) = a_j ∫ e^{−t(ν² + c_j²)} P_{σ_j}(ν) dν, via ∫ e^{−tν²}ν^{2m} dν = Γ(m+½) t^{−m−½}.
pub fn i_t_sigma(model: &HyperbolicModel, j: usize) -> Result<ClosedFormTheta> {
    let poly = plancherel_poly(model.d, j)?;
    let rate = (model.c(j) * model.c(j)) as f64;
    let a = model.a(j);
    ClosedFormTheta::new(
        poly.iter()
            .enumerate()
            .map(|(m, &coef)| Term {
                coefficient: a * coef as f64 * gamma_half_integer(m as u32),
                power2: 2 * m as u32 + 1,
                rate,
            })
            .collect(),
    )
}

/// θ_j = I_t(σ_j) + I_t(σ_{j−1}) for j ≤ n, and θ_j = θ_{d−j} above the middle degree.
pub fn theta_hyperbolic(model: &HyperbolicModel, degree: usize) -> Result<ClosedFormTheta> {
    if degree > model.d {
        return Err(Error::InvalidInput(format!(
            "degree {degree} exceeds dimension {}",
            model.d
        )));
    }
    let j = if degree > model.n() { model.d - degree } else { degree };
    let upper = i_t_sigma(model, j)?;
    Ok(if j == 0 {
        upper
    } else {
        upper.sum(&i_t_sigma(model, j - 1)?)
    })
}

/// Gap of each degree, read off as the smallest exponential rate.
pub fn gap_table(thetas: &[ClosedFormTheta]) -> Vec<f64> {
    thetas.iter().map(|t| t.min_rate().unwrap_or(0.0)).collect()
}

/// Theta functions of every degree of a closed-form model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormModel {
    pub name: String,
    pub dimension: usize,
    pub thetas: Vec<ClosedFormTheta>,
}

impl ClosedFormModel {
    pub fn hyperbolic(model: &HyperbolicModel) -> Result<Self> {
        Ok(ClosedFormModel {
            name: format!("H{}(vol={})", model.d, model.volume),
            dimension: model.d,
            thetas: (0..=model.d)
                .map(|j| theta_hyperbolic(model, j))
                .collect::<Result<_>>()?,
        })
    }

    /// The product manifold with the product metric.
    pub fn product(&self, other: &Self) -> Result<Self> {
        Ok(ClosedFormModel {
            name: format!("{}x{}", self.name, other.name),
            dimension: self.dimension + other.dimension,
            thetas: (0..=self.dimension + other.dimension)
                .map(|k| product_theta(&self.thetas, &other.thetas, k))
                .collect::<Result<_>>()?,
        })
    }

    pub fn gaps(&self) -> Vec<f64> {
        gap_table(&self.thetas)
    }
}

/// θ_k of a product of L²-acyclic factors: Σ_{i+j=k} θ_i^A θ_j^B.
pub fn product_theta(a: &[ClosedFormTheta], b: &[ClosedFormTheta], k: usize) -> Result<ClosedFormTheta> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("factor theta lists must be complete".into()));
    }
    if let Some(i) = a.iter().chain(b).position(ClosedFormTheta::has_constant_term) {
        return Err(Error::InvalidInput(format!(
            "factor theta {i} has a constant term: factors must be L²-acyclic"
        )));
    }
    let mut out = ClosedFormTheta::default();
    for (i, ta) in a.iter().enumerate() {
        if i > k || k - i >= b.len() {
            continue;
        }
        out = out.sum(&ta.product(&b[k - i]));
    }
    Ok(out)
}

/// min{λ₀,i^A + λ₀,j^B : i + j = k}.
pub fn product_gap(gaps_a: &[f64], gaps_b: &[f64], k: usize) -> Option<f64> {
    (0..gaps_a.len())
        .filter(|&i| i <= k && k - i < gaps_b.len())
        .map(|i| gaps_a[i] + gaps_b[k - i])
        .reduce(f64::min)
}

/// log |Det|(Δ_j − λ₀,j) of the model through the zeta pipeline.
pub fn determinant_hyperbolic(model: &HyperbolicModel, degree: usize) -> Result<ZetaReport> {
    let theta = ThetaFunction::from_closed_form(theta_hyperbolic(model, degree)?, degree);
    let beta = estimate_beta(&theta, None, DEFAULT_WINDOW, 64)?;
    let expansion = HeatExpansion::for_theta(&theta, None)?;
    determinant(&theta, &expansion, beta.beta)
}
