//! Character-twisted combinatorial Laplacians and their sampled spectra.
//!
//! For a ℤ^g-periodic complex the von Neumann trace of an equivariant operator is the
//! average over the character torus of the ordinary trace of its Bloch fibre, so every
//! spectral quantity here is a weighted sum over a tensor grid of characters.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{max_abs, PeriodicComplex};
use crate::error::{Error, Result};
use crate::whitney::{mass_family, MassFamily};

type CMat = DMatrix<Complex64>;

/// k ↦ (A_j(k), M_j(k)) with A_j = d_j†M_{j+1}d_j + M_j d_{j−1}M_{j−1}⁻¹d_{j−1}†M_j (+ m²M_j),
/// so that A_j v = λ M_j v is the eigenproblem of Δ_j = δd + dδ.
#[derive(Clone, Debug)]
pub struct TwistedOperatorFamily {
    pub degree: usize,
    pub size: usize,
    complex: Arc<PeriodicComplex>,
    lower: Option<MassFamily>,
    mass: MassFamily,
    upper: Option<MassFamily>,
    mass_shift: f64,
}

/// Pieces of one fibre: the up part d†Md, the down part M d M⁻¹ d† M, and the mass matrix.
pub struct Fibre {
    pub up: CMat,
    pub down: CMat,
    pub mass: CMat,
}

impl TwistedOperatorFamily {
    /// Add m²·M_j to the stiffness: the Laplacian Δ_j + m², a deformation with gap m².
    pub fn with_mass_shift(mut self, m2: f64) -> Self {
        self.mass_shift = m2;
        self
    }

    pub fn mass_shift(&self) -> f64 {
        self.mass_shift
    }

    pub fn fibre(&self, k: &[f64]) -> Result<Fibre> {
        let j = self.degree;
        let mass = self.mass.eval(k);
        let up = match &self.upper {
            Some(upper) => {
                let d = self.complex.twisted_coboundary(j, k);
                d.adjoint() * upper.eval(k) * d
            }
            None => CMat::zeros(self.size, self.size),
        };
        let down = match &self.lower {
            Some(lower) => {
                let d = self.complex.twisted_coboundary(j - 1, k);
                let chol = Cholesky::new(lower.eval(k)).ok_or_else(|| Error::EigenFailure {
                    character: k.to_vec(),
                    reason: format!("mass matrix of degree {} not positive definite", j - 1),
                })?;
                let right = d.adjoint() * &mass;
                &mass * &d * chol.solve(&right)
            }
            None => CMat::zeros(self.size, self.size),
        };
        Ok(Fibre { up, down, mass })
    }

    pub fn eval(&self, k: &[f64]) -> Result<(CMat, CMat)> {
        let f = self.fibre(k)?;
        let a = f.up + f.down + &f.mass * Complex64::new(self.mass_shift, 0.0);
        Ok((a, f.mass))
    }
}

/// Assemble the twisted Laplacian of `degree` from mass families indexed by degree.
pub fn assemble_laplacian(
    complex: Arc<PeriodicComplex>,
    masses: &[MassFamily],
    degree: usize,
) -> Result<TwistedOperatorFamily> {
    let g = complex.rank();
    if degree > g {
        return Err(Error::InvalidInput(format!("degree {degree} exceeds rank {g}")));
    }
    let pick = |j: usize| -> Result<MassFamily> {
        let m = masses
            .iter()
            .find(|m| m.degree == j)
            .ok_or_else(|| Error::DimensionMismatch(format!("no mass family for degree {j}")))?;
        if m.size != complex.cell_count(j) {
            return Err(Error::DimensionMismatch(format!(
                "mass family of degree {j} has size {}, complex has {} cells",
                m.size,
                complex.cell_count(j)
            )));
        }
        Ok(m.clone())
    };
    let lower = if degree > 0 { Some(pick(degree - 1)?) } else { None };
    let upper = if degree < g { Some(pick(degree + 1)?) } else { None };
    Ok(TwistedOperatorFamily {
        degree,
        size: complex.cell_count(degree),
        mass: pick(degree)?,
        lower,
        upper,
        mass_shift: 0.0,
        complex,
    })
}

/// All Laplacian families of a complex, degrees 0..=g.
pub fn laplacian_families(complex: Arc<PeriodicComplex>) -> Result<Vec<TwistedOperatorFamily>> {
    let g = complex.rank();
    let masses = (0..=g).map(|j| mass_family(&complex, j)).collect::<Result<Vec<_>>>()?;
    (0..=g)
        .map(|j| assemble_laplacian(complex.clone(), &masses, j))
        .collect()
}

/// Eigenvalues of the pencil (a, m), ascending, with a residual check.
pub fn generalized_eigenvalues(a: &CMat, m: &CMat, k: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let fail = |reason: String| Error::EigenFailure {
        character: k.to_vec(),
        reason,
    };
    let chol = Cholesky::new(m.clone()).ok_or_else(|| fail("mass matrix not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| fail("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| fail("singular Cholesky factor".into()))?;
    let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let scale = max_abs(&c);
    let eig = SymmetricEigen::try_new(c.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| fail("Hermitian eigen-solver did not converge".into()))?;
    if scale > 0.0 {
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            let r = &c * v - v * Complex64::new(lambda, 0.0);
            let res = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !(res <= 1e-10 * scale * n as f64) {
                return Err(fail(format!("eigen residual {res:e} exceeds tolerance")));
            }
        }
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Placement of grid nodes on the character torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CharacterGrid {
    /// k = 2π(m + ½)/R: avoids the trivial character.
    #[default]
    Midpoint,
    /// k = 2πm/R, including k = 0.
    Endpoint,
}

pub fn character_nodes(rank: usize, resolution: usize, grid: CharacterGrid) -> Vec<Vec<f64>> {
    let shift = match grid {
        CharacterGrid::Midpoint => 0.5,
        CharacterGrid::Endpoint => 0.0,
    };
    let axis: Vec<f64> = (0..resolution)
        .map(|m| std::f64::consts::TAU * (m as f64 + shift) / resolution as f64)
        .collect();
    let mut nodes = vec![Vec::new()];
    for _ in 0..rank {
        nodes = nodes
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    nodes
}

/// Discrete spectral measure: eigenvalues of every degree at every character node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSample {
    pub label: String,
    pub rank: usize,
    pub resolution: usize,
    pub grid: CharacterGrid,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Eigenvalues of Δ_j, indexed [degree][node], each list ascending.
    pub spectra: Vec<Vec<Vec<f64>>>,
    /// Eigenvalues of δ_j d_j, indexed [degree][node], when sampled.
    pub up_spectra: Option<Vec<Vec<Vec<f64>>>>,
    /// Number of sampled fundamental domains per fundamental domain of the described complex.
    pub multiplicity: f64,
}

/// Options for sampling a complex.
#[derive(Clone, Debug)]
pub struct SampleOptions {
    pub resolution: usize,
    pub grid: CharacterGrid,
    pub mass_shift: f64,
    pub include_up: bool,
    /// Sample the one-vertex cell of the refined lattice instead of the full complex.
    pub primitive: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            resolution: 32,
            grid: CharacterGrid::Midpoint,
            mass_shift: 0.0,
            include_up: false,
            primitive: false,
        }
    }
}

impl SpectralSample {
    /// A sample from explicit data; validates sizes, weights and ordering.
    pub fn from_parts(
        label: impl Into<String>,
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        mut spectra: Vec<Vec<Vec<f64>>>,
        multiplicity: f64,
    ) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch("nodes and weights differ in length".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidInput("weights must be non-negative and sum to 1".into()));
        }
        if spectra.iter().any(|s| s.len() != nodes.len()) {
            return Err(Error::DimensionMismatch("spectra must cover every node".into()));
        }
        for list in spectra.iter_mut().flatten() {
            list.sort_by(f64::total_cmp);
        }
        let rank = nodes[0].len();
        let resolution = (nodes.len() as f64).powf(1.0 / rank.max(1) as f64).round() as usize;
        Ok(SpectralSample {
            label: label.into(),
            rank,
            resolution,
            grid: CharacterGrid::Midpoint,
            nodes,
            weights,
            spectra,
            up_spectra: None,
            multiplicity,
        })
    }

    /// Number of degrees sampled.
    pub fn degrees(&self) -> usize {
        self.spectra.len()
    }

    /// Cell count of `degree`, scaled to the described complex.
    pub fn cell_count(&self, degree: usize) -> f64 {
        self.spectra[degree][0].len() as f64 * self.multiplicity
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.spectra
            .iter()
            .flatten()
            .filter_map(|l| l.last().copied())
            .fold(0.0, f64::max)
    }

    /// Weighted sum Σ_nodes w Σ_λ f(λ), scaled by the multiplicity.
    pub fn integrate(&self, degree: usize, f: impl Fn(f64) -> f64) -> f64 {
        let total: f64 = self.spectra[degree]
            .iter()
            .zip(&self.weights)
            .map(|(list, w)| w * list.iter().map(|&l| f(l)).sum::<f64>())
            .sum();
        total * self.multiplicity
    }

    /// Largest eigenvalue jump between grid neighbours, divided by the grid spacing.
    pub fn continuity_defect(&self, degree: usize) -> f64 {
        let r = self.resolution;
        if self.nodes.len() != r.pow(self.rank as u32) || r < 2 {
            return 0.0;
        }
        let spacing = std::f64::consts::TAU / r as f64;
        let mut worst: f64 = 0.0;
        for idx in 0..self.nodes.len() {
            for axis in 0..self.rank {
                let stride = r.pow((self.rank - 1 - axis) as u32);
                let digit = idx / stride % r;
                let next = idx - digit * stride + (digit + 1) % r * stride;
                for (a, b) in self.spectra[degree][idx].iter().zip(&self.spectra[degree][next]) {
                    worst = worst.max((a - b).abs() / spacing);
                }
            }
        }
        worst
    }
}

/// Solve every fibre on the tensor character grid of the given resolution.
pub fn sample_spectrum(
    families: &[TwistedOperatorFamily],
    resolution: usize,
    grid: CharacterGrid,
    include_up: bool,
) -> Result<SpectralSample> {
    if resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let first = families
        .first()
        .ok_or_else(|| Error::InvalidInput("no operator families".into()))?;
    let rank = first.complex.rank();
    let nodes = character_nodes(rank, resolution, grid);
    // per node: spectra of every degree, and of the up pencils
    type NodeSpectra = (Vec<Vec<f64>>, Vec<Vec<f64>>);
    let per_node: Vec<NodeSpectra> = nodes
        .par_iter()
        .map(|k| {
            let mut full = Vec::with_capacity(families.len());
            let mut up = Vec::new();
            for fam in families {
                let fibre = fam.fibre(k)?;
                let a = &fibre.up + &fibre.down + &fibre.mass * Complex64::new(fam.mass_shift, 0.0);
                full.push(generalized_eigenvalues(&a, &fibre.mass, k)?);
                if include_up {
                    up.push(generalized_eigenvalues(&fibre.up, &fibre.mass, k)?);
                }
            }
            Ok((full, up))
        })
        .collect::<Result<_>>()?;
    let degrees = families.len();
    let mut spectra = vec![Vec::with_capacity(nodes.len()); degrees];
    let mut ups = vec![Vec::with_capacity(nodes.len()); degrees];
    for (full, up) in per_node {
        for (j, list) in full.into_iter().enumerate() {
            spectra[j].push(list);
        }
        for (j, list) in up.into_iter().enumerate() {
            ups[j].push(list);
        }
    }
    let weight = 1.0 / nodes.len() as f64;
    Ok(SpectralSample {
        label: format!("rank {rank}, N={}", first.complex.n_per_axis()),
        rank,
        resolution,
        grid,
        weights: vec![weight; nodes.len()],
        nodes,
        spectra,
        up_spectra: include_up.then_some(ups),
        multiplicity: 1.0,
    })
}

/// Sample all degrees of a torus complex. With `primitive`, the equivalent one-vertex
/// complex is sampled at resolution N·R and traces are scaled by N^g.
pub fn sample_complex(complex: &PeriodicComplex, options: &SampleOptions) -> Result<SpectralSample> {
    let (target, resolution, multiplicity) = if options.primitive {
        let (cell, mult) = complex.primitive_cell()?;
        (cell, options.resolution * complex.n_per_axis(), mult as f64)
    } else {
        (complex.clone(), options.resolution, 1.0)
    };
    let families: Vec<TwistedOperatorFamily> = laplacian_families(Arc::new(target))?
        .into_iter()
        .map(|f| f.with_mass_shift(options.mass_shift))
        .collect();
    let mut sample = sample_spectrum(&families, resolution, options.grid, options.include_up)?;
    sample.multiplicity = multiplicity;
    sample.label = format!(
        "rank {}, N={}{}",
        complex.rank(),
        complex.n_per_axis(),
        if options.mass_shift != 0.0 {
            format!(", mass shift {}", options.mass_shift)
        } else {
            String::new()
        }
    );
    Ok(sample)
}

/// von Neumann heat trace τ(e^{−tΔ_j}).
pub fn vn_heat_trace(sample: &SpectralSample, degree: usize, t: f64) -> f64 {
    sample.integrate(degree, |l| (-t * l.max(0.0)).exp())
}

/// Alternating sum Σ_j (−1)^j τ(e^{−tΔ_j}).
pub fn mckean_singer(sample: &SpectralSample, t: f64) -> f64 {
    (0..sample.degrees())
        .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * vn_heat_trace(sample, j, t))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityKind {
    /// N̄_j: all eigenvalues of Δ_j in [0, λ].
    Full,
    /// N_j: eigenvalues of Δ_j in [0, λ] off the kernel.
    Nonzero,
    /// F_j: eigenvalues of δ_j d_j in [0, λ] on (ker d_j)^⊥.
    Restricted,
}

/// Relative kernel threshold used when none is supplied.
pub fn default_kernel_tol(sample: &SpectralSample) -> f64 {
    1e-10 * sample.max_eigenvalue()
}

/// Spectral density function of `degree` at λ (closed intervals).
pub fn spectral_density(
    sample: &SpectralSample,
    degree: usize,
    lambda: f64,
    kind: DensityKind,
    kernel_tol: Option<f64>,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput("λ must be non-negative".into()));
    }
    let tol = kernel_tol.unwrap_or_else(|| default_kernel_tol(sample));
    let count = |lists: &Vec<Vec<f64>>, skip_kernel: bool| -> f64 {
        let total: f64 = lists
            .iter()
            .zip(&sample.weights)
            .map(|(l, w)| w * l.iter().filter(|&&x| x <= lambda && (!skip_kernel || x > tol)).count() as f64)
            .sum();
        total * sample.multiplicity
    };
    Ok(match kind {
        DensityKind::Full => count(&sample.spectra[degree], false),
        DensityKind::Nonzero => count(&sample.spectra[degree], true),
        DensityKind::Restricted => {
            let ups = sample
                .up_spectra
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("sample has no δd spectra".into()))?;
            count(&ups[degree], true)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub degree: usize,
    pub lambda0: f64,
    pub kernel_dim: f64,
    pub kappa0: Option<f64>,
    pub kernel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub degrees: Vec<DegreeSummary>,
}

/// Bottom of the spectrum off the kernel, kernel Γ-dimension, and (when sampled) the
/// bottom of δd on (ker d)^⊥, for every degree.
pub fn spectrum_summary(sample: &SpectralSample, kernel_tol: Option<f64>) -> Result<SpectrumSummary> {
    let tol = kernel_tol.unwrap_or_else(|| default_kernel_tol(sample));
    if !(tol > 0.0) {
        return Err(Error::DegenerateOperator("every sampled eigenvalue vanishes".into()));
    }
    let degrees = (0..sample.degrees())
        .map(|j| {
            let lists = &sample.spectra[j];
            let lambda0 = lists
                .iter()
                .flatten()
                .copied()
                .filter(|&x| x > tol)
                .fold(f64::INFINITY, f64::min);
            if !lambda0.is_finite() {
                return Err(Error::DegenerateOperator(format!(
                    "all eigenvalues of degree {j} lie below {tol:e}"
                )));
            }
            let kernel: f64 = lists
                .iter()
                .zip(&sample.weights)
                .map(|(l, w)| w * l.iter().filter(|&&x| x <= tol).count() as f64)
                .sum();
            let kappa0 = sample.up_spectra.as_ref().and_then(|ups| {
                let m = ups[j]
                    .iter()
                    .flatten()
                    .copied()
                    .filter(|&x| x > tol)
                    .fold(f64::INFINITY, f64::min);
                m.is_finite().then_some(m)
            });
            Ok(DegreeSummary {
                degree: j,
                lambda0,
                kernel_dim: kernel * sample.multiplicity,
                kappa0,
                kernel_tol: tol,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumSummary { degrees })
}

/// Largest mismatch between the nonzero spectra of δd on degree j and dδ on degree j+1
/// at the character k.
pub fn supersymmetry_defect(lower: &TwistedOperatorFamily, upper: &TwistedOperatorFamily, k: &[f64]) -> Result<f64> {
    let a = lower.fibre(k)?;
    let b = upper.fibre(k)?;
    let ups = generalized_eigenvalues(&a.up, &a.mass, k)?;
    let downs = generalized_eigenvalues(&b.down, &b.mass, k)?;
    let scale = ups.iter().chain(&downs).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let nz = |v: Vec<f64>| -> Vec<f64> { v.into_iter().filter(|&x| x > 1e-9 * scale).collect() };
    let (ups, downs) = (nz(ups), nz(downs));
    if ups.len() != downs.len() {
        return Ok(f64::INFINITY);
    }
    Ok(ups.iter().zip(&downs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn unit(g: usize) -> Vec<Vec<f64>> {
        (0..g)
            .map(|i| (0..g).map(|j| f64::from(u8::from(i == j))).collect())
            .collect()
    }

    fn circle(n: usize) -> PeriodicComplex {
        PeriodicComplex::build_torus(1, n, &[vec![1.0]]).unwrap()
    }

    fn symbol(k: f64, h: f64) -> f64 {
        3.0 * (2.0 - 2.0 * k.cos()) / (h * h * (2.0 + k.cos()))
    }

    #[test]
    fn scalar_circle_laplacian() {
        let h = 0.5;
        let c = Arc::new(PeriodicComplex::build_torus(1, 1, &[vec![h]]).unwrap());
        let fams = laplacian_families(c).unwrap();
        for k in [0.0, 0.01, 1.0, PI] {
            let (a, m) = fams[0].eval(&[k]).unwrap();
            let lambda = generalized_eigenvalues(&a, &m, &[k]).unwrap()[0];
            assert!((lambda - symbol(k, h)).abs() < 1e-12 * symbol(k, h).max(1.0));
        }
        let k: f64 = 1e-3;
        let (a, m) = fams[0].eval(&[k]).unwrap();
        let lambda = generalized_eigenvalues(&a, &m, &[k]).unwrap()[0];
        assert!((lambda / (k / h).powi(2) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trivial_character_kills_constants() {
        let fams = laplacian_families(Arc::new(circle(4))).unwrap();
        let (a, m) = fams[0].eval(&[0.0]).unwrap();
        let eig = generalized_eigenvalues(&a, &m, &[0.0]).unwrap();
        assert!(eig[0].abs() < 1e-12);
        assert!(eig[1] > 1.0);
    }

    #[test]
    fn uniform_weights_and_counts() {
        let s = sample_complex(
            &circle(1),
            &SampleOptions {
                resolution: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.nodes.len(), 8);
        assert!(s.weights.iter().all(|&w| w == 0.125));
        assert!(s.spectra.iter().all(|d| d.iter().all(|l| l.len() == 1)));
    }

    #[test]
    fn mckean_singer_holds_on_tori() {
        for (g, n, r) in [(1, 4, 8), (2, 2, 6), (3, 1, 4)] {
            let c = PeriodicComplex::build_torus(g, n, &unit(g)).unwrap();
            let s = sample_complex(
                &c,
                &SampleOptions {
                    resolution: r,
                    ..Default::default()
                },
            )
            .unwrap();
            for t in [0.1, 1.0, 10.0] {
                assert!(mckean_singer(&s, t).abs() <= 1e-8, "g={g} t={t}");
            }
        }
    }

    #[test]
    fn heat_trace_converges_in_resolution() {
        let c = circle(4);
        let a = sample_complex(
            &c,
            &SampleOptions {
                resolution: 8,
                ..Default::default()
            },
        )
        .unwrap();
        let b = sample_complex(
            &c,
            &SampleOptions {
                resolution: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((vn_heat_trace(&a, 0, 1.0) - vn_heat_trace(&b, 0, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn heat_trace_stable_beyond_resolution_32() {
        let c = PeriodicComplex::build_torus(2, 4, &unit(2)).unwrap();
        let opts = |r| SampleOptions {
            resolution: r,
            primitive: true,
            ..Default::default()
        };
        let a = sample_complex(&c, &opts(32)).unwrap();
        let b = sample_complex(&c, &opts(64)).unwrap();
        for j in 0..=2 {
            for t in [0.5, 2.0] {
                assert!((vn_heat_trace(&a, j, t) - vn_heat_trace(&b, j, t)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn primitive_reduction_preserves_traces() {
        let c = PeriodicComplex::build_torus(2, 2, &[vec![1.0, 0.0], vec![0.3, 1.2]]).unwrap();
        let full = sample_complex(
            &c,
            &SampleOptions {
                resolution: 6,
                ..Default::default()
            },
        )
        .unwrap();
        let prim = sample_complex(
            &c,
            &SampleOptions {
                resolution: 6,
                primitive: true,
                ..Default::default()
            },
        )
        .unwrap();
        for j in 0..=2 {
            assert_eq!(full.cell_count(j), prim.cell_count(j));
            for t in [0.05, 0.5, 3.0] {
                let (a, b) = (vn_heat_trace(&full, j, t), vn_heat_trace(&prim, j, t));
                assert!((a - b).abs() < 1e-11 * a.max(1.0), "j={j} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_family_trace() {
        let s = SpectralSample::from_parts(
            "constant",
            vec![vec![0.0], vec![PI]],
            vec![0.5, 0.5],
            vec![vec![vec![2.0, 2.0, 2.0], vec![2.0, 2.0, 2.0]]],
            1.0,
        )
        .unwrap();
        assert!((vn_heat_trace(&s, 0, 0.7) - 3.0 * (-1.4f64).exp()).abs() < 1e-15);
        let sum = spectrum_summary(&s, None).unwrap();
        assert_eq!(sum.degrees[0].lambda0, 2.0);
        assert_eq!(sum.degrees[0].kernel_dim, 0.0);
    }

    #[test]
    fn density_limits_and_symbol_inversion() {
        let s = sample_complex(
            &circle(1),
            &SampleOptions {
                resolution: 4096,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(spectral_density(&s, 0, 0.0, DensityKind::Full, None).unwrap(), 0.0);
        assert_eq!(spectral_density(&s, 0, 1e6, DensityKind::Full, None).unwrap(), 1.0);
        // symbol(k) = 1 ⇔ 6 − 6cos k = 2 + cos k ⇔ cos k = 4/7
        let k1 = (4.0f64 / 7.0).acos();
        let expect = 2.0 * k1 / TAU;
        let got = spectral_density(&s, 0, 1.0, DensityKind::Full, None).unwrap();
        assert!((got - expect).abs() < 2.0 / 4096.0);
        let mut last = 0.0;
        for i in 0..50 {
            let v = spectral_density(&s, 0, i as f64 * 0.3, DensityKind::Full, None).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn summary_on_circle() {
        let c = circle(4);
        let mut previous = f64::INFINITY;
        for r in [8, 16, 32] {
            let s = sample_complex(
                &c,
                &SampleOptions {
                    resolution: r,
                    include_up: true,
                    ..Default::default()
                },
            )
            .unwrap();
            let sum = spectrum_summary(&s, None).unwrap();
            let d0 = &sum.degrees[0];
            assert_eq!(d0.kernel_dim, 0.0);
            assert!(d0.lambda0 < previous);
            assert_eq!(d0.kappa0, Some(d0.lambda0));
            previous = d0.lambda0;
        }
        let e = sample_complex(
            &c,
            &SampleOptions {
                resolution: 8,
                grid: CharacterGrid::Endpoint,
                ..Default::default()
            },
        )
        .unwrap();
        let sum = spectrum_summary(&e, None).unwrap();
        assert!((sum.degrees[0].kernel_dim - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn mass_shift_sets_gap() {
        let c = circle(8);
        let r = 64;
        let s = sample_complex(
            &c,
            &SampleOptions {
                resolution: r,
                mass_shift: 1.0,
                primitive: true,
                ..Default::default()
            },
        )
        .unwrap();
        let lambda0 = spectrum_summary(&s, None).unwrap().degrees[0].lambda0;
        // lowest sampled wavenumber is π/R
        let k_min = PI / r as f64;
        assert!(lambda0 >= 1.0 && lambda0 - 1.0 < 1.01 * k_min * k_min);
    }

    #[test]
    fn degenerate_operator_rejected() {
        let s = SpectralSample::from_parts("zero", vec![vec![0.0]], vec![1.0], vec![vec![vec![0.0]]], 1.0).unwrap();
        assert!(matches!(
            spectrum_summary(&s, Some(1e-12)),
            Err(Error::DegenerateOperator(_))
        ));
    }

    #[test]
    fn mismatched_masses_rejected() {
        let a = Arc::new(circle(2));
        let b = circle(3);
        let masses: Vec<MassFamily> = (0..=1).map(|j| mass_family(&b, j).unwrap()).collect();
        assert!(matches!(
            assemble_laplacian(a, &masses, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn continuity_is_monitored() {
        let s = sample_complex(
            &circle(2),
            &SampleOptions {
                resolution: 32,
                ..Default::default()
            },
        )
        .unwrap();
        // band slopes are bounded by the symbol's derivative scale
        assert!(s.continuity_defect(0).is_finite());
        assert!(s.continuity_defect(0) < 100.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn fibres_hermitian_nonnegative_supersymmetric(
            g in 1usize..=3,
            k in proptest::collection::vec(0.0f64..TAU, 3),
            skew in -0.3f64..0.3,
        ) {
            let mut basis = unit(g);
            if g > 1 { basis[1][0] = skew; }
            let c = Arc::new(PeriodicComplex::build_torus(g, if g == 3 { 1 } else { 2 }, &basis).unwrap());
            let fams = laplacian_families(c).unwrap();
            let k = &k[..g];
            for f in &fams {
                let (a, m) = f.eval(k).unwrap();
                prop_assert!(max_abs(&(&a - a.adjoint())) <= 1e-12 * max_abs(&a));
                let eig = generalized_eigenvalues(&a, &m, k).unwrap();
                let top = eig.last().copied().unwrap();
                prop_assert!(eig[0] >= -1e-10 * top);
                let fib = f.fibre(k).unwrap();
                let stiff = generalized_eigenvalues(&fib.up, &fib.mass, k).unwrap();
                prop_assert!(stiff[0] >= -1e-10 * top.max(1.0));
            }
            for j in 0..g {
                prop_assert!(supersymmetry_defect(&fams[j], &fams[j + 1], k).unwrap() <= 1e-8);
            }
        }
    }
}
