use crate::geometry::{BoundaryPart, SectorDomain};
use crate::mesh::{build_polar_mesh, Field, Mesh};
use crate::slef::{solve_singular, SleConfig, SolveReport};
use crate::spectral::{h_sigma_eval, sector_frequency, ConeSpec};
use crate::{Point, Result};

/// Dirichlet data on the outer arc of a sector; the sides and the vertex
/// ring always carry zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterData {
    Zero,
    Constant(f64),
    /// `T · H_Σ` with the normalised harmonic of the sector.
    Harmonic(f64),
}

/// Graded polar discretisation of a sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGrid {
    pub theta: f64,
    pub radius: f64,
    pub nr: usize,
    pub n_omega: usize,
    pub grading: f64,
}

impl SectorGrid {
    /// The 512×256 mesh with grading 1.02 on the unit-radius sector.
    pub fn standard(theta: f64) -> Self {
        Self {
            theta,
            radius: 1.0,
            nr: 512,
            n_omega: 256,
            grading: 1.02,
        }
    }
}

#[derive(Debug)]
pub struct SectorSolution {
    pub mesh: Mesh,
    pub cone: ConeSpec,
    pub u: Field,
    pub report: SolveReport,
}

impl SectorSolution {
    pub fn bisector(&self) -> f64 {
        self.cone.param() / 2.0
    }
}

/// Boundary field for the given outer data.
pub fn sector_boundary(mesh: &Mesh, cone: &ConeSpec, outer: OuterData) -> Result<Field> {
    let mut out = Field::zeros(mesh);
    for k in mesh.n_interior()..mesh.n_nodes() {
        if mesh.boundary_part(k) != Some(BoundaryPart::Outer) {
            continue;
        }
        out.values_mut()[k] = match outer {
            OuterData::Zero => 0.0,
            OuterData::Constant(c) => c,
            OuterData::Harmonic(t) => t * h_sigma_eval(cone, &mesh.point(k))?,
        };
    }
    Ok(out)
}

/// Polar mesh and cone of a sector grid.
pub fn sector_mesh(grid: SectorGrid) -> Result<(Mesh, ConeSpec)> {
    let sec = SectorDomain::new(grid.theta, grid.radius)?;
    let mesh = build_polar_mesh(&sec, grid.nr, grid.n_omega, grid.grading)?;
    Ok((mesh, sector_frequency(grid.theta)?))
}

/// Solves `−Δu = u^(−γ)` (or the source of `cfg`) on a graded sector.
pub fn solve_sector(grid: SectorGrid, cfg: &SleConfig, outer: OuterData) -> Result<SectorSolution> {
    let (mesh, cone) = sector_mesh(grid)?;
    let (u, report) = solve_on_sector(&mesh, &cone, cfg, outer)?;
    Ok(SectorSolution { mesh, cone, u, report })
}

/// Solves on an existing sector mesh, so that several data sets share nodes.
pub fn solve_on_sector(mesh: &Mesh, cone: &ConeSpec, cfg: &SleConfig, outer: OuterData) -> Result<(Field, SolveReport)> {
    let data = sector_boundary(mesh, cone, outer)?;
    solve_singular(mesh, cfg, &data)
}

/// The critical log barrier `K (ln 1/|X|)^{φ/2} H_Σ(X)` for `|X| < 1`,
/// zero elsewhere in the cone.
pub fn critical_log_barrier(cone: &ConeSpec, k: f64) -> impl Fn(Point) -> f64 + '_ {
    let a = cone.phi_sigma / 2.0;
    move |p: Point| {
        let r = p[0].hypot(p[1]);
        if !(r > 0.0 && r < 1.0) {
            return 0.0;
        }
        k * (1.0 / r).ln().powf(a) * h_sigma_eval(cone, &p).unwrap_or(0.0)
    }
}
