//! Whitney forms, the Whitney inner product on cochains, and the de Rham map.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::complex::{det, factorial, phase, CellRef, Offset, PeriodicComplex, Simplex};
use crate::error::{Error, Result};
use crate::quadrature::simplex_rule;

/// Character-twisted Whitney mass matrices of one degree:
/// M(k)[p, q] = Σ value · e^{i k·offset} over the stored entries.
#[derive(Clone, Debug)]
pub struct MassFamily {
    pub degree: usize,
    pub size: usize,
    entries: Vec<(usize, usize, Offset, f64)>,
}

impl MassFamily {
    pub fn eval(&self, character: &[f64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (p, q, offset, value) in &self.entries {
            m[(*p, *q)] += phase(character, offset) * *value;
        }
        m
    }

    /// Entries (row, column, offset difference, value), sorted and merged.
    pub fn entries(&self) -> &[(usize, usize, Offset, f64)] {
        &self.entries
    }
}

/// Subsets of size `len` of 0..n in increasing lexicographic order.
pub(crate) fn subsets(n: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, len, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, len, &mut Vec::new(), &mut out);
    out
}

/// Geometry of one top simplex: volume and barycentric gradients.
struct TopGeometry {
    volume: f64,
    grads: Vec<Vec<f64>>,
}

fn top_geometry(complex: &PeriodicComplex, top: &Simplex, index: usize) -> Result<TopGeometry> {
    let g = complex.rank();
    let pts = complex.simplex_positions(top);
    let edges: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let e = DMatrix::from_fn(g, g, |a, c| edges[a][c]);
    let volume = det(&edges).abs() / factorial(g);
    let scale = edges.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if volume <= 1e-14 * scale.powi(g as i32) {
        return Err(Error::DegenerateSimplex { degree: g, cell: index });
    }
    // x − P0 = Eᵀλ, so ∇λ_a is column a of E⁻¹.
    let inv = e
        .try_inverse()
        .ok_or(Error::DegenerateSimplex { degree: g, cell: index })?;
    let mut grads = vec![vec![0.0; g]; g + 1];
    for a in 0..g {
        for c in 0..g {
            grads[a + 1][c] = inv[(c, a)];
            grads[0][c] -= inv[(c, a)];
        }
    }
    Ok(TopGeometry { volume, grads })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whitney inner product of the faces `f` and `h` (local vertex indices) of one top simplex.
fn local_mass(geo: &TopGeometry, g: usize, f: &[usize], h: &[usize]) -> f64 {
    let j = f.len() - 1;
    let denom = ((g + 1) * (g + 2)) as f64;
    let mut total = 0.0;
    for r in 0..=j {
        for s in 0..=j {
            let a = f[r];
            let b = h[s];
            let integral = geo.volume * if a == b { 2.0 } else { 1.0 } / denom;
            let rows: Vec<usize> = f.iter().copied().filter(|&x| x != a).collect();
            let cols: Vec<usize> = h.iter().copied().filter(|&x| x != b).collect();
            let gram: Vec<Vec<f64>> = rows
                .iter()
                .map(|&u| cols.iter().map(|&v| dot(&geo.grads[u], &geo.grads[v])).collect())
                .collect();
            let sign = if (r + s) % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * integral * det(&gram);
        }
    }
    total * factorial(j).powi(2)
}

/// Faces of the top simplex `top_index` (translated by `shift`) of size j+1, with the
/// fundamental-domain cells they represent.
fn top_faces(
    complex: &PeriodicComplex,
    top_index: usize,
    shift: &[i64],
    degree: usize,
) -> Result<Vec<(Vec<usize>, CellRef)>> {
    let g = complex.rank();
    let top = complex.cells(g)[top_index].translated(shift);
    subsets(g + 1, degree + 1)
        .into_iter()
        .map(|f| {
            let cell = complex
                .locate(&top.face(&f))
                .ok_or_else(|| Error::InvalidInput(format!("face {f:?} of top cell {top_index} is not a cell")))?;
            Ok((f, cell))
        })
        .collect()
}

fn assemble(complex: &PeriodicComplex, degree: usize, shift: &[i64]) -> Result<MassFamily> {
    let g = complex.rank();
    if degree > g {
        return Err(Error::InvalidInput(format!("degree {degree} exceeds rank {g}")));
    }
    let mut merged: BTreeMap<(usize, usize, Offset), f64> = BTreeMap::new();
    for (t, top) in complex.cells(g).iter().enumerate() {
        let geo = top_geometry(complex, &top.translated(shift), t)?;
        let faces = top_faces(complex, t, shift, degree)?;
        for (f, cp) in &faces {
            for (h, cq) in &faces {
                let value = local_mass(&geo, g, f, h);
                let diff: Offset = cq.offset.iter().zip(&cp.offset).map(|(a, b)| a - b).collect();
                *merged.entry((cp.index, cq.index, diff)).or_insert(0.0) += value;
            }
        }
    }
    Ok(MassFamily {
        degree,
        size: complex.cell_count(degree),
        entries: merged
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((p, q, o), v)| (p, q, o, v))
            .collect(),
    })
}

/// Whitney mass family of `degree`, integrated exactly over every top simplex.
pub fn mass_family(complex: &PeriodicComplex, degree: usize) -> Result<MassFamily> {
    assemble(complex, degree, &vec![0; complex.rank()])
}

/// Mass family assembled from top simplices translated by `shift`; identical to
/// [`mass_family`] because entries only depend on offset differences.
pub fn mass_family_shifted(complex: &PeriodicComplex, degree: usize, shift: &[i64]) -> Result<MassFamily> {
    assemble(complex, degree, shift)
}

fn check_barycentric(b: &[f64], g: usize) -> Result<()> {
    if b.len() != g + 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected {} barycentric coordinates, got {}",
            g + 1,
            b.len()
        )));
    }
    let sum: f64 = b.iter().sum();
    if (sum - 1.0).abs() > 1e-12 || b.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
        return Err(Error::InvalidInput(format!("invalid barycentric point {b:?}")));
    }
    Ok(())
}

/// Value of the Whitney form j!Σ(−1)^i μ_{f_i} dμ_{f_0}∧…(omit i)…∧dμ_{f_j} for `face`
/// (local indices) of a top simplex, as components on dx_I with I ranging over
/// increasing j-subsets of the axes.
fn local_whitney(geo: &TopGeometry, g: usize, face: &[usize], bary: &[f64]) -> Vec<f64> {
    let j = face.len() - 1;
    let axes = subsets(g, j);
    let mut out = vec![0.0; axes.len()];
    for i in 0..=j {
        let coeff = factorial(j) * bary[face[i]] * if i % 2 == 0 { 1.0 } else { -1.0 };
        let rest: Vec<usize> = face.iter().copied().filter(|&x| x != face[i]).collect();
        for (slot, axis) in axes.iter().enumerate() {
            let m: Vec<Vec<f64>> = rest
                .iter()
                .map(|&u| axis.iter().map(|&c| geo.grads[u][c]).collect())
                .collect();
            out[slot] += coeff * det(&m);
        }
    }
    out
}

/// The Whitney form of the cover cell `cell`, evaluated at the point with barycentric
/// coordinates `bary` in the top simplex `top`. Zero when `cell` is not a face of `top`.
pub fn whitney_form_at(complex: &PeriodicComplex, cell: &CellRef, top: &CellRef, bary: &[f64]) -> Result<Vec<f64>> {
    let g = complex.rank();
    if top.degree != g || top.index >= complex.cell_count(g) {
        return Err(Error::InvalidInput("support must be a top-dimensional cell".into()));
    }
    check_barycentric(bary, g)?;
    let j = cell.degree;
    let mut out = vec![0.0; subsets(g, j).len()];
    let simplex = complex.simplex_of(top);
    let geo = top_geometry(complex, &simplex, top.index)?;
    for (face, located) in top_faces(complex, top.index, &top.offset, j)? {
        if &located == cell {
            for (o, v) in out.iter_mut().zip(local_whitney(&geo, g, &face, bary)) {
                *o += v;
            }
        }
    }
    Ok(out)
}

/// A point of the cover with the top simplex that contains it.
#[derive(Clone, Debug)]
pub struct FormPoint {
    pub x: Vec<f64>,
    pub top: CellRef,
    pub barycentric: Vec<f64>,
}

type FormField = dyn Fn(&FormPoint) -> Vec<f64> + Send + Sync;

/// A differential j-form given pointwise by its components on dx_I.
#[derive(Clone)]
pub struct SampledForm {
    pub degree: usize,
    pub periodic: bool,
    field: Arc<FormField>,
}

impl SampledForm {
    /// A form given as a function of position.
    pub fn smooth<F>(degree: usize, periodic: bool, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        SampledForm {
            degree,
            periodic,
            field: Arc::new(move |p: &FormPoint| f(&p.x)),
        }
    }

    /// The Whitney form of the lattice orbit of fundamental-domain cell `cell`.
    pub fn whitney(complex: Arc<PeriodicComplex>, degree: usize, cell: usize) -> Self {
        let field = move |p: &FormPoint| {
            let g = complex.rank();
            let top = complex.simplex_of(&p.top);
            let mut out = vec![0.0; subsets(g, degree).len()];
            let Ok(geo) = top_geometry(&complex, &top, p.top.index) else {
                return out;
            };
            let Ok(faces) = top_faces(&complex, p.top.index, &p.top.offset, degree) else {
                return out;
            };
            for (face, located) in faces {
                if located.index == cell {
                    for (o, v) in out.iter_mut().zip(local_whitney(&geo, g, &face, &p.barycentric)) {
                        *o += v;
                    }
                }
            }
            out
        };
        SampledForm {
            degree,
            periodic: true,
            field: Arc::new(field),
        }
    }

    pub fn eval(&self, p: &FormPoint) -> Vec<f64> {
        (self.field)(p)
    }

    /// Largest change of the form under a unit lattice translation, over the centroids
    /// of the top simplices.
    pub fn periodicity_defect(&self, complex: &PeriodicComplex) -> f64 {
        let g = complex.rank();
        let centroid = vec![1.0 / (g + 1) as f64; g + 1];
        let mut worst: f64 = 0.0;
        for t in 0..complex.cell_count(g) {
            let base = CellRef {
                degree: g,
                index: t,
                offset: vec![0; g],
            };
            let p0 = point_in(complex, &base, &centroid);
            let v0 = self.eval(&p0);
            for a in 0..g {
                let mut offset = vec![0; g];
                offset[a] = 1;
                let shifted = CellRef {
                    degree: g,
                    index: t,
                    offset,
                };
                let v1 = self.eval(&point_in(complex, &shifted, &centroid));
                for (x, y) in v0.iter().zip(&v1) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }
}

fn point_in(complex: &PeriodicComplex, top: &CellRef, bary: &[f64]) -> FormPoint {
    let pts = complex.simplex_positions(&complex.simplex_of(top));
    let g = complex.rank();
    let x = (0..g)
        .map(|c| pts.iter().zip(bary).map(|(p, b)| p[c] * b).sum())
        .collect();
    FormPoint {
        x,
        top: top.clone(),
        barycentric: bary.to_vec(),
    }
}

/// For each fundamental-domain j-cell, a top simplex containing it and the local
/// indices of the cell's vertices in that top simplex.
fn containing_tops(complex: &PeriodicComplex, degree: usize) -> Result<Vec<(CellRef, Vec<usize>)>> {
    let g = complex.rank();
    let mut found: Vec<Option<(CellRef, Vec<usize>)>> = vec![None; complex.cell_count(degree)];
    for t in 0..complex.cell_count(g) {
        for (face, cell) in top_faces(complex, t, &vec![0; g], degree)? {
            if found[cell.index].is_none() {
                let offset = cell.offset.iter().map(|o| -o).collect();
                found[cell.index] = Some((
                    CellRef {
                        degree: g,
                        index: t,
                        offset,
                    },
                    face,
                ));
            }
        }
    }
    found
        .into_iter()
        .enumerate()
        .map(|(i, f)| f.ok_or_else(|| Error::InvalidInput(format!("cell {i} lies in no top simplex"))))
        .collect()
}

const DERHAM_ORDER: usize = 5;

fn integrate_cell(form: &SampledForm, complex: &PeriodicComplex, top: &CellRef, face: &[usize], order: usize) -> f64 {
    let g = complex.rank();
    let j = face.len() - 1;
    let top_pts = complex.simplex_positions(&complex.simplex_of(top));
    let verts: Vec<&Vec<f64>> = face.iter().map(|&f| &top_pts[f]).collect();
    let tangents: Vec<Vec<f64>> = verts[1..]
        .iter()
        .map(|p| p.iter().zip(verts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let axes = subsets(g, j);
    let pullback: Vec<f64> = axes
        .iter()
        .map(|axis| {
            let m: Vec<Vec<f64>> = tangents.iter().map(|v| axis.iter().map(|&c| v[c]).collect()).collect();
            det(&m)
        })
        .collect();
    let mut total = 0.0;
    for qp in simplex_rule(j, order) {
        let mut bary = vec![0.0; g + 1];
        for (r, &f) in face.iter().enumerate() {
            bary[f] = qp.barycentric[r];
        }
        let p = point_in(complex, top, &bary);
        let value = form.eval(&p);
        total += qp.weight * dot(&value, &pullback);
    }
    total
}

/// The de Rham map: integrals of `form` over the fundamental-domain cells of its degree.
/// Each integral is computed at two Gauss orders; disagreement is reported as an error.
pub fn derham_map(form: &SampledForm, complex: &PeriodicComplex) -> Result<Vec<f64>> {
    if form.degree > complex.rank() {
        return Err(Error::InvalidInput(format!(
            "form degree {} exceeds rank {}",
            form.degree,
            complex.rank()
        )));
    }
    containing_tops(complex, form.degree)?
        .iter()
        .enumerate()
        .map(|(cell, (top, face))| {
            let low = integrate_cell(form, complex, top, face, DERHAM_ORDER);
            let high = integrate_cell(form, complex, top, face, 2 * DERHAM_ORDER);
            if (low - high).abs() > 1e-8 * high.abs() + 1e-13 {
                return Err(Error::QuadratureMismatch { cell, low, high });
            }
            Ok(high)
        })
        .collect()
}
