//! Γ-periodic simplicial complexes for the deck group ℤ^g acting on a flat torus cover.
//!
//! Cells live in a fundamental domain; each vertex of a cell is a fundamental-domain
//! vertex together with the lattice translate it sits in. The torus builder uses the
//! Kuhn–Freudenthal triangulation of the cubical grid, whose cells are the chains
//! `w, w + e_{A_1}, …, w + e_{A_j}` for nested axis sets `∅ ⊊ A_1 ⊊ … ⊊ A_j`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Offset = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexRef {
    pub vertex: usize,
    pub offset: Offset,
}

/// An ordered simplex; vertex order fixes the orientation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<VertexRef>,
}

impl Simplex {
    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn translated(&self, shift: &[i64]) -> Simplex {
        Simplex {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexRef {
                    vertex: v.vertex,
                    offset: v.offset.iter().zip(shift).map(|(a, b)| a + b).collect(),
                })
                .collect(),
        }
    }

    /// Translate so the first vertex carries offset 0; returns the removed offset.
    pub fn normalized(&self) -> (Simplex, Offset) {
        let shift: Offset = self.vertices[0].offset.clone();
        let neg: Offset = shift.iter().map(|x| -x).collect();
        (self.translated(&neg), shift)
    }

    pub fn face(&self, keep: &[usize]) -> Simplex {
        Simplex {
            vertices: keep.iter().map(|&i| self.vertices[i].clone()).collect(),
        }
    }
}

/// A cell of the cover: fundamental-domain cell `index` of `degree`, translated by `offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub degree: usize,
    pub index: usize,
    pub offset: Offset,
}

/// One signed incidence of the coboundary d_j: the facet `facet` (degree j, translated
/// by `offset`) appears in the boundary of `cofacet` (degree j+1, offset 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub cofacet: usize,
    pub facet: usize,
    pub sign: i8,
    pub offset: Offset,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub mesh: f64,
    pub fullness_min: f64,
}

#[derive(Clone, Debug)]
pub struct PeriodicComplex {
    rank: usize,
    n_per_axis: usize,
    lattice_basis: Vec<Vec<f64>>,
    vertex_positions: Vec<Vec<f64>>,
    cells: Vec<Vec<Simplex>>,
    coboundary: Vec<Vec<Incidence>>,
    lookup: Vec<HashMap<Simplex, usize>>,
}

/// Determinant of a small square matrix given by rows (Gaussian elimination).
pub(crate) fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

impl PeriodicComplex {
    /// Kuhn triangulation of the g-torus with `n_per_axis` vertices along each lattice direction.
    pub fn build_torus(g: usize, n_per_axis: usize, lattice_basis: &[Vec<f64>]) -> Result<Self> {
        if !(1..=3).contains(&g) {
            return Err(Error::UnsupportedRank(g));
        }
        if n_per_axis == 0 {
            return Err(Error::InvalidInput("n_per_axis must be at least 1".into()));
        }
        if lattice_basis.len() != g || lattice_basis.iter().any(|v| v.len() != g) {
            return Err(Error::DimensionMismatch(format!(
                "expected {g} basis vectors of length {g}"
            )));
        }
        if lattice_basis.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite lattice basis".into()));
        }
        let norms: f64 = lattice_basis
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .product();
        let volume = det(lattice_basis).abs();
        if norms == 0.0 || volume <= 1e-12 * norms {
            return Err(Error::DegenerateBasis);
        }

        let n = n_per_axis as i64;
        let grid_points: Vec<Vec<i64>> = grid(g, n);
        let vertex_positions = grid_points
            .iter()
            .map(|w| {
                (0..g)
                    .map(|c| (0..g).map(|a| lattice_basis[a][c] * w[a] as f64 / n as f64).sum())
                    .collect()
            })
            .collect();

        let vertex_ref = |fine: &[i64]| -> VertexRef {
            let mut index = 0usize;
            let mut offset = Vec::with_capacity(g);
            for &x in fine {
                index = index * n_per_axis + x.rem_euclid(n) as usize;
                offset.push(x.div_euclid(n));
            }
            VertexRef { vertex: index, offset }
        };

        let mut cells = Vec::with_capacity(g + 1);
        let mut lookup = Vec::with_capacity(g + 1);
        for j in 0..=g {
            let chains = nested_chains(g, j);
            let mut list = Vec::with_capacity(grid_points.len() * chains.len());
            let mut map = HashMap::new();
            for w in &grid_points {
                for chain in &chains {
                    let mut vertices = Vec::with_capacity(j + 1);
                    vertices.push(vertex_ref(w));
                    for &mask in chain {
                        let p: Vec<i64> = (0..g).map(|a| w[a] + i64::from(mask >> a & 1 == 1)).collect();
                        vertices.push(vertex_ref(&p));
                    }
                    let s = Simplex { vertices };
                    map.insert(s.clone(), list.len());
                    list.push(s);
                }
            }
            cells.push(list);
            lookup.push(map);
        }

        let mut complex = PeriodicComplex {
            rank: g,
            n_per_axis,
            lattice_basis: lattice_basis.to_vec(),
            vertex_positions,
            cells,
            coboundary: Vec::new(),
            lookup,
        };
        complex.coboundary = (0..g).map(|j| complex.build_coboundary(j)).collect::<Result<_>>()?;
        Ok(complex)
    }

    fn build_coboundary(&self, j: usize) -> Result<Vec<Incidence>> {
        let mut out = Vec::new();
        for (row, tau) in self.cells[j + 1].iter().enumerate() {
            for i in 0..=j + 1 {
                let keep: Vec<usize> = (0..=j + 1).filter(|&x| x != i).collect();
                let facet = tau.face(&keep);
                let cell = self.locate(&facet).ok_or_else(|| {
                    Error::InvalidInput(format!("facet {i} of cell {row} (degree {}) missing", j + 1))
                })?;
                out.push(Incidence {
                    cofacet: row,
                    facet: cell.index,
                    sign: if i % 2 == 0 { 1 } else { -1 },
                    offset: cell.offset,
                });
            }
        }
        Ok(out)
    }

    /// Halve the mesh: the edge-midpoint refinement of a Kuhn complex is the Kuhn
    /// complex of the doubled grid.
    pub fn subdivide(&self) -> Result<Self> {
        Self::build_torus(self.rank, 2 * self.n_per_axis, &self.lattice_basis)
    }

    /// The one-vertex Kuhn complex over the refined lattice `basis / n_per_axis`, and the
    /// number of its fundamental domains inside one fundamental domain of `self`.
    /// Its spectral measure, scaled by that multiplicity, equals the spectral measure of `self`.
    pub fn primitive_cell(&self) -> Result<(Self, usize)> {
        let n = self.n_per_axis as f64;
        let basis: Vec<Vec<f64>> = self
            .lattice_basis
            .iter()
            .map(|v| v.iter().map(|x| x / n).collect())
            .collect();
        let cell = Self::build_torus(self.rank, 1, &basis)?;
        Ok((cell, self.n_per_axis.pow(self.rank as u32)))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn lattice_basis(&self) -> &[Vec<f64>] {
        &self.lattice_basis
    }

    /// Volume of the fundamental domain.
    pub fn volume(&self) -> f64 {
        det(&self.lattice_basis).abs()
    }

    pub fn cells(&self, degree: usize) -> &[Simplex] {
        &self.cells[degree]
    }

    pub fn cell_count(&self, degree: usize) -> usize {
        self.cells.get(degree).map_or(0, Vec::len)
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells
            .iter()
            .enumerate()
            .map(|(j, c)| if j % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) })
            .sum()
    }

    pub fn vertex_positions(&self) -> &[Vec<f64>] {
        &self.vertex_positions
    }

    /// Incidences of d_j : C^j → C^{j+1}.
    pub fn coboundary(&self, degree: usize) -> &[Incidence] {
        &self.coboundary[degree]
    }

    pub fn position(&self, v: &VertexRef) -> Vec<f64> {
        let mut p = self.vertex_positions[v.vertex].clone();
        for (a, &o) in v.offset.iter().enumerate() {
            for (c, pc) in p.iter_mut().enumerate() {
                *pc += self.lattice_basis[a][c] * o as f64;
            }
        }
        p
    }

    pub fn simplex_positions(&self, s: &Simplex) -> Vec<Vec<f64>> {
        s.vertices.iter().map(|v| self.position(v)).collect()
    }

    /// Identify a simplex of the cover with a translated fundamental-domain cell.
    pub fn locate(&self, s: &Simplex) -> Option<CellRef> {
        let degree = s.dimension();
        let (normal, offset) = s.normalized();
        self.lookup
            .get(degree)?
            .get(&normal)
            .map(|&index| CellRef { degree, index, offset })
    }

    pub fn simplex_of(&self, cell: &CellRef) -> Simplex {
        self.cells[cell.degree][cell.index].translated(&cell.offset)
    }

    /// The twisted coboundary d_j(k), of size #(j+1)-cells × #j-cells.
    pub fn twisted_coboundary(&self, degree: usize, character: &[f64]) -> DMatrix<Complex64> {
        let rows = self.cell_count(degree + 1);
        let cols = self.cell_count(degree);
        let mut d = DMatrix::zeros(rows, cols);
        if degree >= self.rank {
            return d;
        }
        for inc in &self.coboundary[degree] {
            d[(inc.cofacet, inc.facet)] += phase(character, &inc.offset) * f64::from(inc.sign);
        }
        d
    }

    pub fn mesh_stats(&self) -> MeshStats {
        let g = self.rank;
        let mut mesh: f64 = 0.0;
        let mut fullness_min = f64::INFINITY;
        for top in &self.cells[g] {
            let pts = self.simplex_positions(top);
            let diam = diameter(&pts);
            mesh = mesh.max(diam);
            let edges: Vec<Vec<f64>> = pts[1..]
                .iter()
                .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
                .collect();
            let vol = det(&edges).abs() / factorial(g);
            fullness_min = fullness_min.min(vol / diam.powi(g as i32));
        }
        MeshStats { mesh, fullness_min }
    }
}

pub(crate) fn phase(character: &[f64], offset: &[i64]) -> Complex64 {
    let arg: f64 = character.iter().zip(offset).map(|(k, &o)| k * o as f64).sum();
    Complex64::from_polar(1.0, arg)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn diameter(pts: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let dist = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            d = d.max(dist);
        }
    }
    d
}

fn grid(g: usize, n: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..g {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Strictly increasing chains of `len` nonempty axis subsets (as bitmasks).
fn nested_chains(g: usize, len: usize) -> Vec<Vec<u32>> {
    fn extend(g: usize, len: usize, chain: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if chain.len() == len {
            out.push(chain.clone());
            return;
        }
        let last = chain.last().copied().unwrap_or(0);
        for mask in 1u32..(1 << g) {
            if mask & last == last && mask != last {
                chain.push(mask);
                extend(g, len, chain, out);
                chain.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(g, len, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
