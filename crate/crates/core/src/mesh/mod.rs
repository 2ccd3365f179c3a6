//! Finite-difference meshes, the discrete Laplacian and sparse solvers.
//!
//! A [`Mesh`] stores its nodes with the interior unknowns first, followed by
//! the Dirichlet nodes. Each interior node owns one stencil row over all
//! nodes, so `(−Δ_h u)_i = Σ_j s_ij u_j`. Cartesian meshes use
//! Shortley-Weller arms at cut cells, polar meshes are tensor grids in
//! `(r, ω)` with optional geometric radial grading, and line meshes are the
//! one-dimensional three-point scheme.

mod cartesian;
mod field;
pub mod krylov;
mod line;
pub mod multigrid;
mod operator;
mod polar;
pub mod sparse;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

pub use cartesian::{build_cartesian_mesh, build_region_mesh, DEFAULT_FOLD};
pub use field::Field;
pub use line::{build_graded_line_mesh, build_line_mesh};
pub use multigrid::MultigridPlan;
pub use operator::{
    solve_linear, solve_with, LinearOperator, LinearSolveOptions, Preconditioner, SYMMETRY_TOL,
};
pub use polar::build_polar_mesh;
pub use sparse::Csr;

use crate::geometry::BoundaryPart;
use crate::{Error, Point, Result};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Mesh family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Cartesian,
    Polar,
    Line,
}

/// Tensor structure of a polar mesh.
#[derive(Debug, Clone)]
pub struct PolarLayout {
    pub theta: f64,
    pub radius: f64,
    pub grading: f64,
    /// Radial nodes `r_0 = r_min < … < r_{Nr−1} = radius`.
    pub radii: Vec<f64>,
    /// Number of angular intervals `Nω`.
    pub n_omega: usize,
}

impl PolarLayout {
    pub fn d_omega(&self) -> f64 {
        self.theta / self.n_omega as f64
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }
}

/// Structured grid of a Cartesian mesh: node `(i, j)` sits at `(i h, j h)`.
#[derive(Debug, Clone)]
pub(crate) struct CartesianLayout {
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub ni: i64,
    pub nj: i64,
    /// Node index of the grid point, or `u32::MAX`.
    pub node_at: Vec<u32>,
}

impl CartesianLayout {
    pub fn node(&self, i: i64, j: i64) -> Option<usize> {
        let (a, b) = (i - self.i0, j - self.j0);
        if a < 0 || b < 0 || a >= self.ni || b >= self.nj {
            return None;
        }
        match self.node_at[(b * self.ni + a) as usize] {
            u32::MAX => None,
            k => Some(k as usize),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LineLayout {
    /// Grid points `x_0 < … < x_n`.
    pub x: Vec<f64>,
    /// Nominal spacing `(x_n − x_0)/n`.
    pub h: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum Layout {
    Cartesian(CartesianLayout),
    Polar(PolarLayout),
    Line(LineLayout),
}

/// A finite-difference mesh with its stencil.
#[derive(Debug)]
pub struct Mesh {
    id: u64,
    layout: Layout,
    coords: Vec<Point>,
    n_interior: usize,
    parts: Vec<Option<BoundaryPart>>,
    stencil: Csr,
    weight: Vec<f64>,
    grid: Vec<(i64, i64)>,
    fractions: Vec<[f64; 4]>,
    local_h: Vec<f64>,
    plan: OnceLock<Arc<MultigridPlan>>,
}

pub(crate) struct MeshParts {
    pub layout: Layout,
    pub coords: Vec<Point>,
    pub n_interior: usize,
    pub parts: Vec<Option<BoundaryPart>>,
    pub stencil: Csr,
    pub weight: Vec<f64>,
    pub grid: Vec<(i64, i64)>,
    pub fractions: Vec<[f64; 4]>,
    pub local_h: Vec<f64>,
}

impl Mesh {
    pub(crate) fn from_parts(p: MeshParts) -> Result<Self> {
        if p.n_interior == 0 {
            return Err(Error::DegenerateMesh("no interior nodes".into()));
        }
        debug_assert_eq!(p.stencil.nrows, p.n_interior);
        debug_assert_eq!(p.stencil.ncols, p.coords.len());
        Ok(Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            layout: p.layout,
            coords: p.coords,
            n_interior: p.n_interior,
            parts: p.parts,
            stencil: p.stencil,
            weight: p.weight,
            grid: p.grid,
            fractions: p.fractions,
            local_h: p.local_h,
            plan: OnceLock::new(),
        })
    }

    /// Process-unique identifier used to detect fields from other meshes.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> MeshKind {
        match self.layout {
            Layout::Cartesian(_) => MeshKind::Cartesian,
            Layout::Polar(_) => MeshKind::Polar,
            Layout::Line(_) => MeshKind::Line,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn point(&self, node: usize) -> Point {
        self.coords[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        node < self.n_interior
    }

    /// Boundary piece of a Dirichlet node, `None` for unknowns.
    pub fn boundary_part(&self, node: usize) -> Option<BoundaryPart> {
        self.parts[node]
    }

    /// Cartesian spacing, or the nominal spacing `(b − a)/n` of a line mesh.
    pub fn h(&self) -> Option<f64> {
        match &self.layout {
            Layout::Cartesian(c) => Some(c.h),
            Layout::Line(l) => Some(l.h),
            Layout::Polar(_) => None,
        }
    }

    pub fn polar_layout(&self) -> Option<&PolarLayout> {
        match &self.layout {
            Layout::Polar(p) => Some(p),
            _ => None,
        }
    }

    /// Arm lengths `[E, W, N, S]` of an interior node as fractions of the
    /// nominal spacing; `1` for regular arms.
    pub fn boundary_fractions(&self, node: usize) -> [f64; 4] {
        self.fractions[node]
    }

    /// Largest stencil arm length at an interior node.
    pub fn local_h(&self, node: usize) -> f64 {
        self.local_h[node]
    }

    /// Logical grid index of an interior node.
    pub fn grid_index(&self, node: usize) -> (i64, i64) {
        self.grid[node]
    }

    /// Stencil over all nodes (`n_interior` rows, `n_nodes` columns).
    pub fn stencil(&self) -> &Csr {
        &self.stencil
    }

    /// Symmetrizing row weights of the stencil.
    pub fn row_weights(&self) -> &[f64] {
        &self.weight
    }

    /// Node index of the Cartesian grid point `(i h, j h)`, if it is a node.
    pub fn grid_node(&self, i: i64, j: i64) -> Option<usize> {
        match &self.layout {
            Layout::Cartesian(c) => c.node(i, j),
            Layout::Line(l) if j == 0 && i >= 0 && (i as usize) <= l.n => Some(line::node_of(l, i as usize)),
            Layout::Polar(p) => polar::node_at(p, i, j),
            _ => None,
        }
    }

    pub(crate) fn multigrid_plan(&self) -> Arc<MultigridPlan> {
        Arc::clone(self.plan.get_or_init(|| Arc::new(MultigridPlan::new(&self.grid))))
    }

    /// `(−Δ_h u)` at every interior node.
    pub fn apply_stencil(&self, u: &Field) -> Result<Vec<f64>> {
        self.check(u)?;
        let mut out = vec![0.0; self.n_interior];
        self.stencil.matvec(u.values(), &mut out);
        Ok(out)
    }

    /// `−(B u_B)`: the right-hand side contribution of Dirichlet values.
    pub fn boundary_rhs(&self, data: &Field) -> Result<Vec<f64>> {
        self.check(data)?;
        let v = data.values();
        let mut out = vec![0.0; self.n_interior];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, a) in self.stencil.row(i) {
                if j >= self.n_interior {
                    s -= a * v[j];
                }
            }
            *o = s;
        }
        Ok(out)
    }

    pub(crate) fn check(&self, f: &Field) -> Result<()> {
        if f.mesh_id() != self.id || f.len() != self.n_nodes() {
            return Err(Error::MeshMismatch(format!(
                "field belongs to mesh {} but mesh {} was given",
                f.mesh_id(),
                self.id
            )));
        }
        Ok(())
    }

    /// Interpolates a field at an arbitrary point (linear on lines, bilinear
    /// on Cartesian cells and on polar `(r, ω)` cells).
    pub fn sample(&self, f: &Field, p: Point) -> Result<f64> {
        self.check(f)?;
        match &self.layout {
            Layout::Line(l) => line::sample(l, f.values(), p[0]),
            Layout::Polar(pl) => {
                let (r, w) = crate::geometry::SectorDomain::polar(p);
                polar::sample(pl, f.values(), r, w)
            }
            Layout::Cartesian(c) => cartesian::sample(c, f.values(), p),
        }
    }

    /// Interpolates a field given in polar coordinates (polar meshes only).
    pub fn sample_polar(&self, f: &Field, r: f64, omega: f64) -> Result<f64> {
        self.check(f)?;
        match &self.layout {
            Layout::Polar(pl) => polar::sample(pl, f.values(), r, omega),
            _ => self.sample(f, [r * omega.cos(), r * omega.sin()]),
        }
    }
}

/// Assembles `−Δ_h` on the interior unknowns and asserts the M-matrix
/// property.
pub fn assemble_laplacian(mesh: &Mesh) -> Result<LinearOperator> {
    let n = mesh.n_interior;
    let mut b = sparse::CsrBuilder::new(n);
    for i in 0..n {
        let w = mesh.weight[i];
        b.push_row(mesh.stencil.row(i).filter(|&(j, _)| j < n).map(|(j, v)| (j, w * v)));
    }
    let op = LinearOperator::new(b.finish(), mesh.weight.clone(), Some(mesh.multigrid_plan()))?;
    op.check_m_matrix()?;
    Ok(op)
}

/// Discrete harmonic function with the Dirichlet values of `boundary_data`.
pub fn harmonic_solve(mesh: &Mesh, boundary_data: &Field) -> Result<Field> {
    harmonic_solve_with(mesh, boundary_data, &LinearSolveOptions::default())
}

pub fn harmonic_solve_with(mesh: &Mesh, boundary_data: &Field, opts: &LinearSolveOptions) -> Result<Field> {
    let a = assemble_laplacian(mesh)?;
    poisson_solve(mesh, &a, boundary_data, vec![0.0; mesh.n_interior], opts)
}

/// Solves `−Δ_h u = source` with the Dirichlet values of `boundary_data`.
pub fn poisson_solve(
    mesh: &Mesh,
    a: &LinearOperator,
    boundary_data: &Field,
    mut rhs: Vec<f64>,
    opts: &LinearSolveOptions,
) -> Result<Field> {
    let b = mesh.boundary_rhs(boundary_data)?;
    if rhs.len() != b.len() {
        return Err(Error::invalid("source length differs from interior count"));
    }
    for (r, bi) in rhs.iter_mut().zip(&b) {
        *r += bi;
    }
    let mut out = boundary_data.clone();
    let mut x = vec![0.0; mesh.n_interior];
    solve_with(a, &rhs, &mut x, opts)?;
    out.values_mut()[..mesh.n_interior].copy_from_slice(&x);
    Ok(out)
}
