//! Sparse complex systems for the absorbed problem, the total-field
//! formulation and the shifted form B_gamma.
//!
//! Every system is a linear combination of real matrices assembled once
//! per mesh (stiffness, potential mass, mass, obstacle impedance mass,
//! outer boundary mass), so A(eps) - A(0) = -i eps M holds by
//! construction.

mod element;
mod probe;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{absorbed_wavenumber, BoundaryKind, IncidentWave, ReducedSource, ValidatedCoefficients};
use crate::error::{Error, Result};
use crate::field::{rdot, ComplexField, C64};
use crate::geometry::{CutoffFunction, ExteriorMesh, FacetTag, Vec3};
use crate::sparse::CsrMatrix;

pub use element::{mass, stiffness, weighted_mass, weighted_surface_mass};
pub use probe::{auto_gamma, coercivity_probe, dense_coercivity, CoercivityEstimate};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Condition imposed on the truncation sphere |x| = rho.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterCondition {
    /// d_r w - i kappa w = 0.
    #[default]
    Sommerfeld,
    /// d_r w - (i kappa - 1/rho) w = 0.
    Bgt1,
    /// w = 0.
    Hard,
}

/// How the load of the absorbed problem is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadMode {
    /// -(L - k^2) applied weakly to the nodal interpolant of zeta u0, plus
    /// the outer flux of u0. Discretely equivalent to the total-field
    /// formulation.
    #[default]
    Galerkin,
    /// Quadrature of the closed-form source f.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Unknown w = u - zeta u0 with absorption eps.
    Absorbed,
    /// Unknown u with absorption eps.
    TotalField,
    /// Shifted Hermitian form B_gamma.
    Bgamma,
    /// Boundary-value problem with Dirichlet data on every boundary vertex.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemMeta {
    pub kind: SystemKind,
    pub k: f64,
    pub eps: f64,
    pub gamma: Option<f64>,
    pub boundary: BoundaryKind,
    pub outer: Option<OuterCondition>,
}

/// Vertex to unknown numbering; constrained vertices have no unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dof_of: Vec<Option<usize>>,
    vertex_of: Vec<usize>,
}

impl DofMap {
    pub fn from_mask(constrained: &[bool]) -> Self {
        let mut dof_of = vec![None; constrained.len()];
        let mut vertex_of = Vec::new();
        for (v, &c) in constrained.iter().enumerate() {
            if !c {
                dof_of[v] = Some(vertex_of.len());
                vertex_of.push(v);
            }
        }
        Self { dof_of, vertex_of }
    }

    pub fn num_dofs(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.dof_of.len()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_of[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.vertex_of[dof]
    }

    pub fn is_constrained(&self, vertex: usize) -> bool {
        self.dof_of[vertex].is_none()
    }
}

/// Assembled matrix, load and dof map, plus the values carried by
/// constrained vertices.
#[derive(Debug, Clone)]
pub struct SesquilinearSystem {
    mesh: Arc<ExteriorMesh>,
    matrix: CsrMatrix,
    load: Vec<C64>,
    dofs: DofMap,
    constraint: Vec<C64>,
    meta: SystemMeta,
}

impl SesquilinearSystem {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn load(&self) -> &[C64] {
        &self.load
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn meta(&self) -> &SystemMeta {
        &self.meta
    }

    pub fn mesh(&self) -> &Arc<ExteriorMesh> {
        &self.mesh
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs()
    }

    /// Same matrix with a different load.
    pub fn with_load(&self, load: Vec<C64>) -> Result<Self> {
        if load.len() != self.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_dofs(),
                got: load.len(),
            });
        }
        Ok(Self {
            load,
            ..self.clone()
        })
    }

    /// Nodal field from unknowns, constrained vertices taking their data.
    pub fn expand(&self, x: &[C64]) -> Result<ComplexField> {
        if x.len() != self.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_dofs(),
                got: x.len(),
            });
        }
        let values = (0..self.dofs.num_vertices())
            .map(|v| self.dofs.dof(v).map_or(self.constraint[v], |d| x[d]))
            .collect();
        ComplexField::new(self.mesh.clone(), values)
    }

    /// Unknowns of a nodal field.
    pub fn restrict(&self, field: &ComplexField) -> Result<Vec<C64>> {
        if field.values().len() != self.dofs.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.dofs.num_vertices(),
                got: field.values().len(),
            });
        }
        Ok(self.dofs.vertex_of.iter().map(|&v| field.values()[v]).collect())
    }

    /// b - A x.
    pub fn residual(&self, x: &[C64]) -> Vec<C64> {
        let ax = self.matrix.mul_vec(x);
        self.load.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }
}

/// CSR connectivity of the full vertex graph.
#[derive(Debug)]
struct Pattern {
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl Pattern {
    fn from_cells(n: usize, cells: &[[usize; 4]]) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in cells {
            for &i in c {
                adj[i].extend_from_slice(c);
            }
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        Self { indptr, indices }
    }

    fn position(&self, i: usize, j: usize) -> usize {
        let span = self.indptr[i]..self.indptr[i + 1];
        span.start
            + self.indices[span]
                .binary_search(&j)
                .expect("entry outside the vertex graph")
    }

    fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Real parts of every form, on the shared vertex pattern.
#[derive(Debug)]
pub struct FormParts {
    pattern: Pattern,
    /// int a grad u . grad v
    stiffness: Vec<f64>,
    /// int grad u . grad v (a = identity), for the H1 Gram matrix.
    laplace: Option<Vec<f64>>,
    /// int q u v
    potential: Option<Vec<f64>>,
    mass: Vec<f64>,
    /// int_S sigma u v
    impedance: Vec<f64>,
    /// int_S u v
    obstacle_mass: Vec<f64>,
    /// int over the truncation sphere of u v
    outer_mass: Vec<f64>,
}

/// Assembles and combines the forms for one mesh and coefficient set.
#[derive(Debug)]
pub struct Assembler {
    mesh: Arc<ExteriorMesh>,
    coeffs: ValidatedCoefficients,
    parts: FormParts,
}

struct CellBlock {
    cell: [usize; 4],
    k: element::Local4,
    lap: Option<element::Local4>,
    q: Option<element::Local4>,
    m: element::Local4,
}

impl Assembler {
    pub fn new(mesh: Arc<ExteriorMesh>, coeffs: &ValidatedCoefficients) -> Self {
        let pattern = Pattern::from_cells(mesh.num_vertices(), mesh.cells());
        let identity = coeffs.is_tensor_identity();
        let zero_q = coeffs.is_potential_zero();
        let blocks: Vec<CellBlock> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let pts = mesh.cell_points(c);
                let (g, vol) = mesh.barycentric_gradients(c);
                let qp = element::tet_points(&pts);
                let a = if identity {
                    nalgebra::Matrix3::identity()
                } else {
                    qp.iter().map(|x| coeffs.a(x)).sum::<nalgebra::Matrix3<f64>>() / 4.0
                };
                CellBlock {
                    cell: mesh.cells()[c],
                    k: element::stiffness(&g, vol, &a),
                    lap: (!identity).then(|| element::stiffness(&g, vol, &nalgebra::Matrix3::identity())),
                    q: (!zero_q).then(|| element::weighted_mass(vol, &qp.map(|x| coeffs.q(&x)))),
                    m: element::mass(vol),
                }
            })
            .collect();
        let nnz = pattern.nnz();
        let mut parts = FormParts {
            stiffness: vec![0.0; nnz],
            laplace: (!identity).then(|| vec![0.0; nnz]),
            potential: (!zero_q).then(|| vec![0.0; nnz]),
            mass: vec![0.0; nnz],
            impedance: vec![0.0; nnz],
            obstacle_mass: vec![0.0; nnz],
            outer_mass: vec![0.0; nnz],
            pattern,
        };
        for b in &blocks {
            for i in 0..4 {
                for j in 0..4 {
                    let p = parts.pattern.position(b.cell[i], b.cell[j]);
                    parts.stiffness[p] += b.k[i][j];
                    parts.mass[p] += b.m[i][j];
                    if let (Some(dst), Some(src)) = (parts.laplace.as_mut(), b.lap.as_ref()) {
                        dst[p] += src[i][j];
                    }
                    if let (Some(dst), Some(src)) = (parts.potential.as_mut(), b.q.as_ref()) {
                        dst[p] += src[i][j];
                    }
                }
            }
        }
        for f in mesh.facets() {
            let pts = f.vertices.map(|v| mesh.vertices()[v]);
            let area = mesh.facet_area(f);
            let unit = element::weighted_surface_mass(area, &[1.0; 3]);
            let sig = match f.tag {
                FacetTag::Obstacle => Some(element::weighted_surface_mass(
                    area,
                    &element::tri_points(&pts).map(|x| coeffs.sigma(&x)),
                )),
                FacetTag::Outer => None,
            };
            for i in 0..3 {
                for j in 0..3 {
                    let p = parts.pattern.position(f.vertices[i], f.vertices[j]);
                    match f.tag {
                        FacetTag::Obstacle => {
                            parts.obstacle_mass[p] += unit[i][j];
                            parts.impedance[p] += sig.as_ref().unwrap()[i][j];
                        }
                        FacetTag::Outer => parts.outer_mass[p] += unit[i][j],
                    }
                }
            }
        }
        Self {
            mesh,
            coeffs: coeffs.clone(),
            parts,
        }
    }

    pub fn mesh(&self) -> &Arc<ExteriorMesh> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &ValidatedCoefficients {
        &self.coeffs
    }

    /// Full-pattern complex combination sum_t c_t P_t.
    fn combine(&self, terms: &[(C64, &[f64])]) -> Vec<C64> {
        let mut out = vec![ZERO; self.parts.pattern.nnz()];
        for (c, part) in terms {
            for (o, v) in out.iter_mut().zip(part.iter()) {
                *o += c * v;
            }
        }
        out
    }

    fn full_mul(&self, values: &[C64], x: &[C64]) -> Vec<C64> {
        let pat = &self.parts.pattern;
        (0..x.len())
            .map(|i| {
                (pat.indptr[i]..pat.indptr[i + 1])
                    .map(|p| values[p] * x[pat.indices[p]])
                    .sum()
            })
            .collect()
    }

    /// Restrict a full-pattern system to the unconstrained vertices,
    /// moving the constrained columns to the right-hand side.
    fn reduce(
        &self,
        values: &[C64],
        load: &[C64],
        dofs: &DofMap,
        constraint: &[C64],
    ) -> (CsrMatrix, Vec<C64>) {
        let pat = &self.parts.pattern;
        let n = dofs.num_dofs();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut vals = Vec::new();
        let mut b = Vec::with_capacity(n);
        indptr.push(0);
        for d in 0..n {
            let v = dofs.vertex(d);
            let mut bi = load[v];
            for p in pat.indptr[v]..pat.indptr[v + 1] {
                let w = pat.indices[p];
                match dofs.dof(w) {
                    Some(dw) => {
                        indices.push(dw);
                        vals.push(values[p]);
                    }
                    None => bi -= values[p] * constraint[w],
                }
            }
            b.push(bi);
            indptr.push(indices.len());
        }
        (CsrMatrix::from_raw(n, n, indptr, indices, vals), b)
    }

    fn obstacle_constrained(&self) -> Vec<bool> {
        if self.coeffs.boundary == BoundaryKind::Dirichlet {
            self.mesh.boundary_vertex_mask(FacetTag::Obstacle)
        } else {
            vec![false; self.mesh.num_vertices()]
        }
    }

    fn constrained_mask(&self, outer: OuterCondition) -> Vec<bool> {
        let mut mask = self.obstacle_constrained();
        if outer == OuterCondition::Hard {
            for (m, o) in mask.iter_mut().zip(self.mesh.boundary_vertex_mask(FacetTag::Outer)) {
                *m |= o;
            }
        }
        mask
    }

    fn outer_coefficient(&self, k: f64, eps: f64, outer: OuterCondition) -> C64 {
        let kappa = absorbed_wavenumber(k, eps);
        let i = C64::new(0.0, 1.0);
        match outer {
            OuterCondition::Sommerfeld => -i * kappa,
            OuterCondition::Bgt1 => -(i * kappa - 1.0 / self.mesh.truncation_radius()),
            OuterCondition::Hard => ZERO,
        }
    }

    /// K_a + M_q + S_sigma - (k^2 + i eps) M + c_outer B on the full pattern.
    fn operator(&self, k: f64, eps: f64, outer: Option<OuterCondition>) -> Vec<C64> {
        let p = &self.parts;
        let one = C64::new(1.0, 0.0);
        let mut terms: Vec<(C64, &[f64])> = vec![
            (one, &p.stiffness),
            (C64::new(-k * k, -eps), &p.mass),
            (one, &p.impedance),
        ];
        if let Some(q) = &p.potential {
            terms.push((one, q));
        }
        if let Some(o) = outer {
            terms.push((self.outer_coefficient(k, eps, o), &p.outer_mass));
        }
        self.combine(&terms)
    }

    fn check_cutoff(&self, cutoff: &CutoffFunction) -> Result<()> {
        if cutoff.inner() <= self.mesh.obstacle_circumradius() {
            return Err(Error::Hypothesis(format!(
                "cut-off inner radius {} does not clear the obstacle (circumradius {})",
                cutoff.inner(),
                self.mesh.obstacle_circumradius()
            )));
        }
        if cutoff.outer() >= self.mesh.truncation_radius() {
            return Err(Error::Hypothesis(format!(
                "cut-off outer radius {} must lie inside the truncation sphere {}",
                cutoff.outer(),
                self.mesh.truncation_radius()
            )));
        }
        Ok(())
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("absorption must be >= 0, got {eps}")));
        }
        Ok(())
    }

    /// Nodal interpolant of zeta u0.
    pub fn cutoff_incident(&self, wave: &IncidentWave, cutoff: &CutoffFunction) -> Vec<C64> {
        self.mesh
            .vertices()
            .iter()
            .map(|x| wave.eval(x).0 * cutoff.value(x))
            .collect()
    }

    /// int over the truncation sphere of d_r u0 phi_i, radial direction
    /// taken at each quadrature point.
    fn outer_flux(&self, wave: &IncidentWave) -> Vec<C64> {
        let mut d = vec![ZERO; self.mesh.num_vertices()];
        for f in self.mesh.facets_tagged(FacetTag::Outer) {
            let pts = f.vertices.map(|v| self.mesh.vertices()[v]);
            let area = self.mesh.facet_area(f);
            for (b, x) in crate::quadrature::TRI3_BARYCENTRIC.iter().zip(element::tri_points(&pts)) {
                let (_, g) = wave.eval(&x);
                let dr = rdot(&x.normalize(), &g);
                for i in 0..3 {
                    d[f.vertices[i]] += dr * (area / 3.0 * b[i]);
                }
            }
        }
        d
    }

    /// The absorbed problem for w = u - zeta u0.
    pub fn absorbed(
        &self,
        wave: &IncidentWave,
        eps: f64,
        cutoff: &CutoffFunction,
        outer: OuterCondition,
        load: LoadMode,
    ) -> Result<SesquilinearSystem> {
        Self::check_eps(eps)?;
        self.check_cutoff(cutoff)?;
        let source = ReducedSource::new(&self.coeffs, *wave, *cutoff)?;
        let k = wave.k();
        let values = self.operator(k, eps, Some(outer));
        let full_load = match load {
            LoadMode::Galerkin => {
                let z = self.cutoff_incident(wave, cutoff);
                let a0 = self.operator(k, 0.0, None);
                let az = self.full_mul(&a0, &z);
                let mut b = self.outer_flux(wave);
                b.iter_mut().zip(&az).for_each(|(bi, ai)| *bi -= ai);
                b
            }
            LoadMode::Pointwise => self.pointwise_load(&source),
        };
        let dofs = DofMap::from_mask(&self.constrained_mask(outer));
        let constraint = vec![ZERO; self.mesh.num_vertices()];
        let (matrix, b) = self.reduce(&values, &full_load, &dofs, &constraint);
        Ok(SesquilinearSystem {
            mesh: self.mesh.clone(),
            matrix,
            load: b,
            dofs,
            constraint,
            meta: SystemMeta {
                kind: SystemKind::Absorbed,
                k,
                eps,
                gamma: None,
                boundary: self.coeffs.boundary,
                outer: Some(outer),
            },
        })
    }

    /// -int f phi_i with the 4-point rule.
    fn pointwise_load(&self, source: &ReducedSource<'_>) -> Vec<C64> {
        let local: Vec<[C64; 4]> = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let pts = self.mesh.cell_points(c);
                let vol = self.mesh.signed_volume(c);
                let mut out = [ZERO; 4];
                for (b, x) in crate::quadrature::TET4_BARYCENTRIC.iter().zip(element::tet_points(&pts)) {
                    let f = source.eval(&x);
                    if f != ZERO {
                        for i in 0..4 {
                            out[i] -= f * (vol / 4.0 * b[i]);
                        }
                    }
                }
                out
            })
            .collect();
        let mut b = vec![ZERO; self.mesh.num_vertices()];
        for (cell, l) in self.mesh.cells().iter().zip(&local) {
            for i in 0..4 {
                b[cell[i]] += l[i];
            }
        }
        b
    }

    /// The same physics with the total field u as unknown: homogeneous
    /// obstacle condition, absorption source -i eps zeta u0 and outer
    /// data d_r u0 - i kappa u0 (u = u0 on a hard outer sphere).
    pub fn total_field(
        &self,
        wave: &IncidentWave,
        eps: f64,
        cutoff: &CutoffFunction,
        outer: OuterCondition,
    ) -> Result<SesquilinearSystem> {
        Self::check_eps(eps)?;
        self.check_cutoff(cutoff)?;
        ReducedSource::new(&self.coeffs, *wave, *cutoff)?;
        let k = wave.k();
        let values = self.operator(k, eps, Some(outer));
        let z = self.cutoff_incident(wave, cutoff);
        let mz = self.full_mul(&self.combine(&[(C64::new(0.0, -eps), &self.parts.mass)]), &z);
        let bz = self.full_mul(
            &self.combine(&[(self.outer_coefficient(k, eps, outer), &self.parts.outer_mass)]),
            &z,
        );
        let d = self.outer_flux(wave);
        let full_load: Vec<C64> = (0..z.len()).map(|i| mz[i] + d[i] + bz[i]).collect();
        let mask = self.constrained_mask(outer);
        let dofs = DofMap::from_mask(&mask);
        let outer_mask = self.mesh.boundary_vertex_mask(FacetTag::Outer);
        let constraint: Vec<C64> = (0..z.len())
            .map(|v| if outer == OuterCondition::Hard && outer_mask[v] { z[v] } else { ZERO })
            .collect();
        let (matrix, b) = self.reduce(&values, &full_load, &dofs, &constraint);
        Ok(SesquilinearSystem {
            mesh: self.mesh.clone(),
            matrix,
            load: b,
            dofs,
            constraint,
            meta: SystemMeta {
                kind: SystemKind::TotalField,
                k,
                eps,
                gamma: None,
                boundary: self.coeffs.boundary,
                outer: Some(outer),
            },
        })
    }

    /// B_gamma[u, v] = int a grad u . grad v + (1 + gamma)(u, v) + (q u, v)
    /// + int_S sigma u v, free on the truncation sphere.
    pub fn bgamma(&self, gamma: f64) -> Result<SesquilinearSystem> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
        }
        let p = &self.parts;
        let one = C64::new(1.0, 0.0);
        let mut terms: Vec<(C64, &[f64])> = vec![
            (one, &p.stiffness),
            (C64::new(1.0 + gamma, 0.0), &p.mass),
            (one, &p.impedance),
        ];
        if let Some(q) = &p.potential {
            terms.push((one, q));
        }
        let values = self.combine(&terms);
        let dofs = DofMap::from_mask(&self.obstacle_constrained());
        let constraint = vec![ZERO; self.mesh.num_vertices()];
        let (matrix, load) = self.reduce(&values, &constraint, &dofs, &constraint);
        Ok(SesquilinearSystem {
            mesh: self.mesh.clone(),
            matrix,
            load,
            dofs,
            constraint,
            meta: SystemMeta {
                kind: SystemKind::Bgamma,
                k: 0.0,
                eps: 0.0,
                gamma: Some(gamma),
                boundary: self.coeffs.boundary,
                outer: None,
            },
        })
    }

    fn reduced_part(&self, terms: &[(C64, &[f64])], dofs: &DofMap) -> CsrMatrix {
        let values = self.combine(terms);
        let zeros = vec![ZERO; self.mesh.num_vertices()];
        self.reduce(&values, &zeros, dofs, &zeros).0
    }

    /// H1 Gram matrix (grad u, grad v) + (u, v) on the given unknowns.
    pub fn h1_gram(&self, dofs: &DofMap) -> CsrMatrix {
        let one = C64::new(1.0, 0.0);
        let lap = self.parts.laplace.as_deref().unwrap_or(&self.parts.stiffness);
        self.reduced_part(&[(one, lap), (one, &self.parts.mass)], dofs)
    }

    pub fn mass_matrix(&self, dofs: &DofMap) -> CsrMatrix {
        self.reduced_part(&[(C64::new(1.0, 0.0), &self.parts.mass)], dofs)
    }

    /// int_S u v over the obstacle surface.
    pub fn obstacle_trace_matrix(&self, dofs: &DofMap) -> CsrMatrix {
        self.reduced_part(&[(C64::new(1.0, 0.0), &self.parts.obstacle_mass)], dofs)
    }

    /// Largest |q| at the mesh vertices and cell quadrature points.
    pub fn potential_sup(&self) -> f64 {
        if self.coeffs.is_potential_zero() {
            return 0.0;
        }
        let verts = self.mesh.vertices().iter().map(|x| self.coeffs.q(x).abs());
        verts.fold(0.0, f64::max)
    }

    /// -Delta - k^2 (+ q) with every boundary vertex carrying data `g`.
    pub fn dirichlet_problem(&self, k: f64, g: impl Fn(&Vec3) -> C64) -> Result<SesquilinearSystem> {
        let values = self.operator(k, 0.0, None);
        let mut mask = self.mesh.boundary_vertex_mask(FacetTag::Obstacle);
        for (m, o) in mask.iter_mut().zip(self.mesh.boundary_vertex_mask(FacetTag::Outer)) {
            *m |= o;
        }
        let constraint: Vec<C64> = self
            .mesh
            .vertices()
            .iter()
            .zip(&mask)
            .map(|(x, &m)| if m { g(x) } else { ZERO })
            .collect();
        let dofs = DofMap::from_mask(&mask);
        let zeros = vec![ZERO; self.mesh.num_vertices()];
        let (matrix, load) = self.reduce(&values, &zeros, &dofs, &constraint);
        Ok(SesquilinearSystem {
            mesh: self.mesh.clone(),
            matrix,
            load,
            dofs,
            constraint,
            meta: SystemMeta {
                kind: SystemKind::Dirichlet,
                k,
                eps: 0.0,
                gamma: None,
                boundary: BoundaryKind::Dirichlet,
                outer: None,
            },
        })
    }
}

/// One-shot assembly of the absorbed problem with the default load.
pub fn assemble_absorbed(
    mesh: Arc<ExteriorMesh>,
    coeffs: &ValidatedCoefficients,
    wave: &IncidentWave,
    eps: f64,
    cutoff: &CutoffFunction,
    outer: OuterCondition,
) -> Result<SesquilinearSystem> {
    Assembler::new(mesh, coeffs).absorbed(wave, eps, cutoff, outer, LoadMode::default())
}

pub fn assemble_bgamma(
    mesh: Arc<ExteriorMesh>,
    coeffs: &ValidatedCoefficients,
    gamma: f64,
) -> Result<SesquilinearSystem> {
    Assembler::new(mesh, coeffs).bgamma(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientSet;
    use crate::geometry::{build_exterior_mesh, ObstacleShape};

    fn setup(kind: BoundaryKind) -> Assembler {
        let mesh = Arc::new(build_exterior_mesh(&ObstacleShape::Sphere { radius: 1.0 }, 2.0, 4.0, 0.9).unwrap());
        let coeffs = CoefficientSet::identity(2.0).with_boundary(kind, 0.7).validate(&[]).unwrap();
        Assembler::new(mesh, &coeffs)
    }

    #[test]
    fn absorption_enters_linearly() {
        let asm = setup(BoundaryKind::Robin);
        let wave = IncidentWave::new(1.0, Vec3::z()).unwrap();
        let cutoff = CutoffFunction::new(2.2, 3.2).unwrap();
        let a0 = asm.absorbed(&wave, 0.0, &cutoff, OuterCondition::Hard, LoadMode::Galerkin).unwrap();
        let a1 = asm.absorbed(&wave, 0.3, &cutoff, OuterCondition::Hard, LoadMode::Galerkin).unwrap();
        let m = asm.mass_matrix(a0.dofs());
        let diff = a1.matrix().add_scaled(C64::new(0.0, 0.3), &m).unwrap();
        assert!(diff.max_abs_diff(a0.matrix()).unwrap() <= 1e-12);
        let t = a0.matrix().transpose();
        assert!(t.max_abs_diff(a0.matrix()).unwrap() <= 1e-12);
    }

    #[test]
    fn bgamma_is_hermitian_and_shifts_by_mass() {
        let asm = setup(BoundaryKind::Neumann);
        let b0 = asm.bgamma(0.0).unwrap();
        let b1 = asm.bgamma(1.0).unwrap();
        let h = b0.matrix().conj_transpose();
        assert!(h.max_abs_diff(b0.matrix()).unwrap() <= 1e-12);
        let m = asm.mass_matrix(b0.dofs());
        let d = b1.matrix().add_scaled(C64::new(-1.0, 0.0), b0.matrix()).unwrap();
        assert!(d.max_abs_diff(&m).unwrap() <= 1e-12);
        assert!(b0.matrix().max_abs_diff(&asm.h1_gram(b0.dofs())).unwrap() <= 1e-12);
    }

    #[test]
    fn dirichlet_removes_obstacle_vertices() {
        let asm = setup(BoundaryKind::Dirichlet);
        let sys = asm.bgamma(0.0).unwrap();
        let mask = asm.mesh().boundary_vertex_mask(FacetTag::Obstacle);
        let constrained = mask.iter().filter(|&&m| m).count();
        assert_eq!(sys.num_dofs() + constrained, asm.mesh().num_vertices());
        let field = sys.expand(&vec![C64::new(1.0, 0.0); sys.num_dofs()]).unwrap();
        for (v, &m) in mask.iter().enumerate() {
            assert_eq!(field.values()[v] == ZERO, m);
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let asm = setup(BoundaryKind::Dirichlet);
        let wave = IncidentWave::new(1.0, Vec3::z()).unwrap();
        let ok = CutoffFunction::new(2.2, 3.2).unwrap();
        assert!(asm.absorbed(&wave, -1.0, &ok, OuterCondition::Sommerfeld, LoadMode::Galerkin).is_err());
        let wide = CutoffFunction::new(2.2, 4.5).unwrap();
        assert!(asm.absorbed(&wave, 0.1, &wide, OuterCondition::Sommerfeld, LoadMode::Galerkin).is_err());
        let inner = CutoffFunction::new(0.5, 3.0).unwrap();
        assert!(asm.absorbed(&wave, 0.1, &inner, OuterCondition::Sommerfeld, LoadMode::Galerkin).is_err());
        assert!(asm.bgamma(-1.0).is_err());
    }
}
