//! Solver for `−Δu = f(X) u^(−γ)` with Dirichlet data `φ ≥ 0`.
//!
//! The boundary is lifted by `ε`, the lifted problem is solved by damped
//! Newton, and `ε` is driven geometrically to `eps_min` with warm starts;
//! a last level solves the discrete problem with `ε = 0`. Every level starts
//! from a sub-solution, so the Newton iterates increase monotonically.

use std::fmt;
use std::sync::Arc;

use crate::mesh::{
    assemble_laplacian, harmonic_solve_with, solve_with, Field, LinearOperator, LinearSolveOptions, Mesh, MeshKind,
};
use crate::mesh::sparse::norm2;
use crate::{Error, Point, Result};

/// Tolerance of the nodewise comparison checks.
pub const COMPARISON_TOL: f64 = 1e-10;

/// Relative slack of the non-degeneracy threshold.
pub const NONDEGENERACY_SLACK: f64 = 0.05;

pub type SourceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Equation and continuation parameters.
#[derive(Clone)]
pub struct SleConfig {
    pub gamma: f64,
    pub f: SourceFn,
    /// Declared lower bound `λ` of `f`.
    pub lambda: f64,
    /// Declared upper bound `Λ` of `f`.
    pub big_lambda: f64,
    pub newton_tol: f64,
    pub eps0: f64,
    pub eps_factor: f64,
    /// `None` selects `h^{2/(1+γ)}`.
    pub eps_min: Option<f64>,
    pub max_newton: usize,
    /// Finish with the unlifted problem `ε = 0`.
    pub final_exact: bool,
    pub linear: LinearSolveOptions,
}

impl fmt::Debug for SleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SleConfig")
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .field("big_lambda", &self.big_lambda)
            .field("newton_tol", &self.newton_tol)
            .field("eps0", &self.eps0)
            .field("eps_factor", &self.eps_factor)
            .field("eps_min", &self.eps_min)
            .field("max_newton", &self.max_newton)
            .field("final_exact", &self.final_exact)
            .finish()
    }
}

impl SleConfig {
    /// `f ≡ value`.
    pub fn constant(gamma: f64, value: f64) -> Result<Self> {
        Self::with_source(gamma, Arc::new(move |_| value), value, value)
    }

    pub fn with_source(gamma: f64, f: SourceFn, lambda: f64, big_lambda: f64) -> Result<Self> {
        let cfg = Self {
            gamma,
            f,
            lambda,
            big_lambda,
            newton_tol: 1e-10,
            eps0: 0.125,
            eps_factor: 0.5,
            eps_min: None,
            max_newton: 50,
            final_exact: true,
            linear: LinearSolveOptions::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("γ = {} must be positive", self.gamma)));
        }
        if !(self.lambda > 0.0 && self.lambda <= self.big_lambda && self.big_lambda.is_finite()) {
            return Err(Error::invalid("need 0 < λ ≤ Λ < ∞"));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return Err(Error::invalid("eps_factor must lie in (0, 1)"));
        }
        if !(self.eps0 > 0.0) {
            return Err(Error::invalid("eps0 must be positive"));
        }
        if let Some(e) = self.eps_min {
            if !(e > 0.0) {
                return Err(Error::invalid("eps_min must be positive"));
            }
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1.0) {
            return Err(Error::invalid("newton_tol must lie in (0, 1)"));
        }
        if self.max_newton == 0 {
            return Err(Error::invalid("max_newton must be positive"));
        }
        Ok(())
    }

    /// `2/(1+γ)`.
    pub fn beta(&self) -> f64 {
        2.0 / (1.0 + self.gamma)
    }

    /// `eps_min`, defaulting to `h^{2/(1+γ)}` with the nominal mesh spacing.
    pub fn eps_min_for(&self, mesh: &Mesh) -> f64 {
        self.eps_min.unwrap_or_else(|| mesh_scale(mesh).powf(self.beta()))
    }

    /// Continuation schedule `ε₀ q^j` down to `eps_min`, then `0` if
    /// `final_exact`.
    pub fn schedule(&self, mesh: &Mesh) -> Vec<f64> {
        let floor = self.eps_min_for(mesh);
        let mut out = vec![];
        let mut e = self.eps0;
        while e > floor * (1.0 + 1e-12) {
            out.push(e);
            e *= self.eps_factor;
        }
        out.push(floor.min(self.eps0));
        if self.final_exact {
            out.push(0.0);
        }
        out
    }

    fn source_values(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        let slack = 1e-12 * self.big_lambda;
        (0..mesh.n_interior())
            .map(|k| {
                let v = (self.f)(mesh.point(k));
                if !(v >= self.lambda - slack && v <= self.big_lambda + slack) {
                    Err(Error::invalid(format!(
                        "f = {v} at {:?} outside the declared bounds [{}, {}]",
                        mesh.point(k),
                        self.lambda,
                        self.big_lambda
                    )))
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

/// Nominal spacing: `h` for Cartesian and line meshes, `radius/Nr` for polar
/// meshes.
pub fn mesh_scale(mesh: &Mesh) -> f64 {
    match mesh.polar_layout() {
        Some(p) => p.radius / p.radii.len() as f64,
        None => mesh.h().expect("Cartesian and line meshes carry h"),
    }
}

/// Spatial dimension of the mesh.
pub fn mesh_dimension(mesh: &Mesh) -> usize {
    match mesh.kind() {
        MeshKind::Line => 1,
        _ => 2,
    }
}

/// Record of one Newton solve.
#[derive(Debug, Clone, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    pub linear_iterations: usize,
    /// Converged because the update reached round-off rather than the
    /// residual target.
    pub roundoff_stop: bool,
}

/// Record of a continuation run.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub eps_schedule: Vec<f64>,
    pub newton_iters: Vec<usize>,
    pub final_residual: f64,
    pub monotone_in_eps: bool,
    pub subsolution_ok: bool,
    /// `sup |u_{ε_j} − u_{ε_{j+1}}|` per step.
    pub cauchy_gap: Vec<f64>,
    /// Smallest `u_{ε_j} − u_{ε_{j+1}}` over all steps and nodes.
    pub min_monotone_margin: f64,
    pub linear_iterations: usize,
    pub warnings: Vec<String>,
}

struct Problem<'a> {
    mesh: &'a Mesh,
    a: LinearOperator,
    f: Vec<f64>,
    gamma: f64,
}

impl<'a> Problem<'a> {
    fn new(mesh: &'a Mesh, cfg: &SleConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            mesh,
            a: assemble_laplacian(mesh)?,
            f: cfg.source_values(mesh)?,
            gamma: cfg.gamma,
        })
    }

    fn residual(&self, u: &[f64], bb: &[f64], out: &mut [f64]) {
        self.a.apply(u, out);
        for i in 0..out.len() {
            out[i] -= bb[i] + self.f[i] * u[i].powf(-self.gamma);
        }
    }

    /// Damped Newton on the interior unknowns `u` with Dirichlet values
    /// `data` lifted by `eps`. The relative residual is the size of the
    /// Newton correction, `‖J⁻¹r‖_∞/‖u‖_∞`.
    fn newton(&self, data: &Field, eps: f64, u: &mut [f64], cfg: &SleConfig) -> Result<NewtonReport> {
        let n = u.len();
        let bb = self.mesh.boundary_rhs(data)?;
        if u.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("initial guess must be positive at interior nodes"));
        }
        let mut r = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut r_trial = vec![0.0; n];
        let mut jac_shift = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        self.residual(u, &bb, &mut r);
        let mut history: Vec<f64> = vec![];
        let mut report = NewtonReport::default();
        let mut lin_tol: f64 = 1e-6;
        loop {
            for i in 0..n {
                jac_shift[i] = self.gamma * self.f[i] * u[i].powf(-self.gamma - 1.0);
                rhs[i] = -r[i];
            }
            let j = self.a.with_diagonal_shift(&jac_shift);
            // Jacobi-scaled residual norm for the line search; unscaled rows
            // of strongly graded meshes are dominated by cancellation
            let inv_d: Vec<f64> = (0..n).map(|i| 1.0 / j.diagonal(i)).collect();
            let scaled_norm = |r: &[f64]| norm2(&r.iter().zip(&inv_d).map(|(a, b)| a * b).collect::<Vec<_>>());
            let norm = scaled_norm(&r);
            delta.iter_mut().for_each(|d| *d = 0.0);
            let opts = LinearSolveOptions { tol: lin_tol, ..cfg.linear };
            let stats = solve_with(&j, &rhs, &mut delta, &opts)?;
            report.linear_iterations += stats.iterations;
            let u_max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let step_max = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let rel = step_max / u_max.max(f64::MIN_POSITIVE);
            report.residual = rel;
            history.push(rel);
            if rel <= cfg.newton_tol && u.iter().zip(&delta).all(|(a, d)| a + d > 0.0) {
                for i in 0..n {
                    u[i] += delta[i];
                }
                return Ok(report);
            }
            let k = history.len() - 1;
            if report.iterations >= cfg.max_newton || (k >= 5 && history[k] > 0.99 * history[k - 5]) {
                return Err(Error::NewtonStagnation {
                    eps,
                    iterations: report.iterations,
                    residual: rel,
                });
            }
            // positivity floor
            let mut alpha: f64 = 1.0;
            for i in 0..n {
                if delta[i] < 0.0 {
                    let floor = if eps > 0.0 { 0.5 * eps } else { 0.5 * u[i] };
                    let room = (u[i] - floor).max(0.0);
                    alpha = alpha.min(room / -delta[i]);
                }
            }
            // residual line search
            for _ in 0..=20 {
                for i in 0..n {
                    trial[i] = u[i] + alpha * delta[i];
                }
                self.residual(&trial, &bb, &mut r_trial);
                let tn = scaled_norm(&r_trial);
                if tn.is_finite() && tn <= (1.0 - 1e-4 * alpha) * norm {
                    break;
                }
                alpha *= 0.5;
            }
            report.iterations += 1;
            if trial.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::NewtonStagnation {
                    eps,
                    iterations: report.iterations,
                    residual: rel,
                });
            }
            if alpha * step_max <= 1e-15 * u_max {
                // no representable progress: the residual is at round-off
                report.roundoff_stop = true;
                return Ok(report);
            }
            u.copy_from_slice(&trial);
            std::mem::swap(&mut r, &mut r_trial);
            lin_tol = (1e-2 * rel).clamp(1e-12, 1e-6);
        }
    }
}

fn lifted(mesh: &Mesh, boundary: &Field, eps: f64) -> Field {
    let mut d = boundary.clone();
    for v in d.values_mut()[mesh.n_interior()..].iter_mut() {
        *v += eps;
    }
    d
}

fn check_boundary(mesh: &Mesh, boundary: &Field) -> Result<()> {
    if boundary.mesh_id() != mesh.id() || boundary.len() != mesh.n_nodes() {
        return Err(Error::MeshMismatch("boundary data belongs to another mesh".into()));
    }
    if boundary.values()[mesh.n_interior()..].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("boundary data must be finite and nonnegative"));
    }
    Ok(())
}

/// Solves the problem with boundary data `boundary + eps` by damped Newton
/// from `init` (only interior values of `init` are used).
pub fn solve_regularized(
    mesh: &Mesh,
    cfg: &SleConfig,
    boundary: &Field,
    eps: f64,
    init: &Field,
) -> Result<(Field, NewtonReport)> {
    check_boundary(mesh, boundary)?;
    if init.mesh_id() != mesh.id() {
        return Err(Error::MeshMismatch("initial guess belongs to another mesh".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::invalid("ε must be nonnegative"));
    }
    let p = Problem::new(mesh, cfg)?;
    let data = lifted(mesh, boundary, eps);
    let ni = mesh.n_interior();
    let mut u = init.values()[..ni].to_vec();
    let rep = p.newton(&data, eps, &mut u, cfg)?;
    let mut out = data;
    out.values_mut()[..ni].copy_from_slice(&u);
    Ok((out, rep))
}

/// Continuation in `ε` from the harmonic replacement of `boundary + ε₀`.
pub fn solve_singular(mesh: &Mesh, cfg: &SleConfig, boundary: &Field) -> Result<(Field, SolveReport)> {
    check_boundary(mesh, boundary)?;
    let p = Problem::new(mesh, cfg)?;
    let ni = mesh.n_interior();
    let schedule = cfg.schedule(mesh);
    let mut report = SolveReport {
        eps_schedule: schedule.clone(),
        monotone_in_eps: true,
        min_monotone_margin: f64::INFINITY,
        ..Default::default()
    };
    let nominal = mesh_scale(mesh).powf(cfg.beta());
    if let Some(e) = cfg.eps_min {
        if e > nominal {
            report.warnings.push(format!(
                "eps_min = {e:e} exceeds the mesh floor h^(2/(1+γ)) = {nominal:e}; the continuation is truncated early"
            ));
        }
    }
    let h_phi = harmonic_solve_with(mesh, boundary, &cfg.linear)?;
    let mut u: Vec<f64> = h_phi.values()[..ni].iter().map(|v| v + schedule[0]).collect();
    let mut prev: Option<Vec<f64>> = None;
    let mut prev_eps = schedule[0];
    for (level, &eps) in schedule.iter().enumerate() {
        if level > 0 {
            // u_j − (ε_j − ε_{j+1}) is a sub-solution at the next level
            let shift = prev_eps - eps;
            for v in u.iter_mut() {
                *v -= shift;
            }
            if u.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvariantViolation(format!(
                    "warm start lost positivity at ε = {eps:e}"
                )));
            }
        }
        let data = lifted(mesh, boundary, eps);
        let rep = p.newton(&data, eps, &mut u, cfg)?;
        report.newton_iters.push(rep.iterations);
        report.linear_iterations += rep.linear_iterations;
        report.final_residual = rep.residual;
        if let Some(pv) = &prev {
            let mut gap = 0.0f64;
            let mut margin = f64::INFINITY;
            for (a, b) in pv.iter().zip(&u) {
                gap = gap.max((a - b).abs());
                margin = margin.min(a - b);
            }
            // boundary values differ by exactly ε_j − ε_{j+1}
            gap = gap.max(prev_eps - eps);
            report.cauchy_gap.push(gap);
            report.min_monotone_margin = report.min_monotone_margin.min(margin);
            if margin < -COMPARISON_TOL {
                report.monotone_in_eps = false;
                return Err(Error::InvariantViolation(format!(
                    "u decreased by {:e} from ε = {prev_eps:e} to ε = {eps:e}",
                    -margin
                )));
            }
        }
        prev = Some(u.clone());
        prev_eps = eps;
    }
    let mut out = lifted(mesh, boundary, prev_eps);
    out.values_mut()[..ni].copy_from_slice(&u);
    report.subsolution_ok = out
        .values()
        .iter()
        .zip(h_phi.values())
        .all(|(a, b)| *a >= b - COMPARISON_TOL);
    Ok((out, report))
}

/// `u ≥ v − 1e-10` at every node.
pub fn verify_comparison(u: &Field, v: &Field) -> Result<bool> {
    if u.mesh_id() != v.mesh_id() || u.len() != v.len() {
        return Err(Error::MeshMismatch("fields live on different meshes".into()));
    }
    Ok(u.values().iter().zip(v.values()).all(|(a, b)| *a >= b - COMPARISON_TOL))
}

/// Lower bound `(2n/λ)^{−1/γ} r^{2/(1+γ)}` for the value at the center of
/// a ball of radius `r` inside the domain.
pub fn nondegeneracy_bound(cfg: &SleConfig, dim: usize, r: f64) -> f64 {
    (2.0 * dim as f64 / cfg.lambda).powf(-1.0 / cfg.gamma) * r.powf(cfg.beta())
}

/// Checks `u(center) ≥ 0.95·(2n/λ)^{−1/γ} r^{2/(1+γ)}`. The ball must not
/// contain boundary nodes in its interior.
pub fn verify_nondegeneracy(u: &Field, mesh: &Mesh, cfg: &SleConfig, center: Point, r: f64) -> Result<bool> {
    if !(r > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    let slack = 1e-9 * r.max(1.0);
    for k in mesh.n_interior()..mesh.n_nodes() {
        let p = mesh.point(k);
        if (p[0] - center[0]).hypot(p[1] - center[1]) < r - slack {
            return Err(Error::DomainViolation(format!(
                "ball of radius {r} about {center:?} contains the boundary node {p:?}"
            )));
        }
    }
    let value = mesh.sample(u, center)?;
    let bound = nondegeneracy_bound(cfg, mesh_dimension(mesh), r);
    Ok(value >= bound * (1.0 - NONDEGENERACY_SLACK))
}

/// Nodewise non-degeneracy on every `stride`-th interior node, with `d` the
/// distance to the nearest boundary node minus the local spacing.
/// Returns `(checked, failures)`.
pub fn nondegeneracy_sweep(u: &Field, mesh: &Mesh, cfg: &SleConfig, stride: usize) -> Result<(usize, usize)> {
    if u.mesh_id() != mesh.id() {
        return Err(Error::MeshMismatch("field belongs to another mesh".into()));
    }
    let bnd: Vec<Point> = (mesh.n_interior()..mesh.n_nodes()).map(|k| mesh.point(k)).collect();
    let dim = mesh_dimension(mesh);
    let mut checked = 0;
    let mut failures = 0;
    for k in (0..mesh.n_interior()).step_by(stride.max(1)) {
        let p = mesh.point(k);
        let near = bnd
            .iter()
            .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
            .fold(f64::INFINITY, f64::min);
        let d = near - mesh.local_h(k);
        if d <= 0.0 {
            continue;
        }
        checked += 1;
        if u.values()[k] < nondegeneracy_bound(cfg, dim, d) * (1.0 - NONDEGENERACY_SLACK) {
            failures += 1;
        }
    }
    Ok((checked, failures))
}

/// Outcome of the dilation comparison `2^{2/(1+γ)} u(X/2) − u(X)`.
#[derive(Debug, Clone)]
pub struct RescaleReport {
    pub min_difference: f64,
    pub max_u: f64,
    pub nodes: usize,
}

/// Compares `u` with its dilation `2^{2/(1+γ)} u(X/2)` over the interior
/// nodes of a polar mesh whose half-radius point is still on the mesh.
pub fn rescale_compare(u: &Field, mesh: &Mesh, cfg: &SleConfig) -> Result<RescaleReport> {
    let pl = mesh
        .polar_layout()
        .ok_or_else(|| Error::invalid("the dilation comparison needs a polar sector mesh"))?;
    if u.mesh_id() != mesh.id() {
        return Err(Error::MeshMismatch("field belongs to another mesh".into()));
    }
    let c = 2f64.powf(cfg.beta());
    let r_min = pl.r_min();
    let mut min_difference = f64::INFINITY;
    let mut nodes = 0;
    for k in 0..mesh.n_interior() {
        let p = mesh.point(k);
        let (r, w) = crate::geometry::SectorDomain::polar(p);
        let w = w.min(pl.theta);
        if r / 2.0 < r_min {
            continue;
        }
        let half = mesh.sample_polar(u, r / 2.0, w)?;
        min_difference = min_difference.min(c * half - u.values()[k]);
        nodes += 1;
    }
    Ok(RescaleReport {
        min_difference,
        max_u: u.max(),
        nodes,
    })
}

/// Which inequality a candidate is tested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    Sub,
    Super,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub mode: ResidualMode,
    pub checked: usize,
    /// Nodes excluded by the guard or by a nonpositive candidate value.
    pub skipped: usize,
    /// `(node, s, tolerance)` for every violating node.
    pub violations: Vec<(usize, f64, f64)>,
    /// Largest signed violation `s − tol` (sub) or `−s − tol` (super).
    pub worst: f64,
}

impl ResidualReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && self.checked > 0
    }
}

/// Evaluates `s = (−Δ_h c) − f c^{−γ}` at the interior nodes accepted by
/// `guard`. A sub-solution needs `s ≤ tol`, a super-solution `s ≥ −tol`,
/// with `tol = c_tol·√h_loc·f·c^{−γ}` relative to the local source size.
pub fn residual_check(
    candidate: &dyn Fn(Point) -> f64,
    mesh: &Mesh,
    cfg: &SleConfig,
    mode: ResidualMode,
    guard: &dyn Fn(Point) -> bool,
    c_tol: f64,
) -> Result<ResidualReport> {
    let c = Field::from_fn(mesh, candidate);
    if !c.is_finite() {
        return Err(Error::invalid("candidate is not finite at every node"));
    }
    let lap = mesh.apply_stencil(&c)?;
    let mut rep = ResidualReport {
        mode,
        checked: 0,
        skipped: 0,
        violations: vec![],
        worst: f64::NEG_INFINITY,
    };
    for (k, l) in lap.iter().enumerate() {
        let p = mesh.point(k);
        let v = c.values()[k];
        if !guard(p) || !(v > 0.0) {
            rep.skipped += 1;
            continue;
        }
        rep.checked += 1;
        let src = (cfg.f)(p) * v.powf(-cfg.gamma);
        let s = l - src;
        let tol = c_tol * mesh.local_h(k).sqrt() * src;
        let excess = match mode {
            ResidualMode::Sub => s - tol,
            ResidualMode::Super => -s - tol,
        };
        rep.worst = rep.worst.max(excess);
        if excess > 0.0 {
            rep.violations.push((k, s, tol));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Disk, GraphDomain, Rectangle};
    use crate::mesh::{build_cartesian_mesh, build_graded_line_mesh, build_line_mesh, build_region_mesh, DEFAULT_FOLD};
    use crate::ode_lab::{FlatParam, FlatProfile};

    #[test]
    fn line_solve_matches_flat_profile() {
        let prof = FlatProfile::new(0.5, FlatParam::K(2.0)).unwrap();
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        let mut errs = vec![];
        for n in [100, 200, 400] {
            let m = build_graded_line_mesh(0.0, 1.0, n, 3.0).unwrap();
            let data = Field::from_boundary(&m, |p, _| prof.eval(p[0]).unwrap());
            let (u, rep) = solve_singular(&m, &cfg, &data).unwrap();
            assert!(rep.monotone_in_eps && rep.subsolution_ok);
            let e = (0..m.n_nodes())
                .map(|k| (u.values()[k] - prof.eval(m.point(k)[0]).unwrap()).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 1.8, "{errs:?}");
    }

    #[test]
    fn constant_data_square_stays_above_minimum() {
        let m = build_region_mesh(&Rectangle { lo: [0.0, 0.0], hi: [1.0, 1.0] }, 1.0 / 16.0, DEFAULT_FOLD).unwrap();
        let cfg = SleConfig::constant(1.0, 1.0).unwrap();
        let data = Field::from_boundary(&m, |_, _| 1.0);
        let (u, rep) = solve_singular(&m, &cfg, &data).unwrap();
        assert!(u.min() >= 1.0 - 1e-12);
        assert!(rep.subsolution_ok);
        assert!(rep.cauchy_gap.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn disk_center_is_nondegenerate() {
        let m = build_region_mesh(&Disk::unit(), 1.0 / 16.0, DEFAULT_FOLD).unwrap();
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        let (u, _) = solve_singular(&m, &cfg, &Field::zeros(&m)).unwrap();
        assert!(verify_nondegeneracy(&u, &m, &cfg, [0.0, 0.0], 1.0).unwrap());
        assert!(m.sample(&u, [0.0, 0.0]).unwrap() >= 1.0 / 16.0);
        let (checked, failures) = nondegeneracy_sweep(&u, &m, &cfg, 3).unwrap();
        assert!(checked > 10);
        assert_eq!(failures, 0);
        assert!(verify_nondegeneracy(&u, &m, &cfg, [0.0, 0.0], 1.5).is_err());
    }

    #[test]
    fn nondegeneracy_threshold_scaling() {
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        assert!((nondegeneracy_bound(&cfg, 2, 1.0) - 1.0 / 16.0).abs() < 1e-15);
        let ratio = nondegeneracy_bound(&cfg, 2, 0.5) / nondegeneracy_bound(&cfg, 2, 1.0);
        assert!((ratio - 2f64.powf(-2.0 / 1.5)).abs() < 1e-14);
    }

    #[test]
    fn ordered_data_give_ordered_solutions() {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let m = build_cartesian_mesh(&dom, 1.0 / 16.0).unwrap();
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        let d1 = Field::from_boundary(&m, |p, _| p[1]);
        let d2 = Field::from_boundary(&m, |p, _| p[1] + 0.2 * (p[0] + 1.0));
        let (u1, _) = solve_singular(&m, &cfg, &d1).unwrap();
        let (u2, _) = solve_singular(&m, &cfg, &d2).unwrap();
        assert!(verify_comparison(&u2, &u1).unwrap());
        assert!(verify_comparison(&u1, &u1).unwrap());
        assert!(!verify_comparison(&u1.scaled(1.0), &Field::from_values(&m, u1.values().iter().map(|v| v + 1.0).collect()).unwrap()).unwrap());
    }

    #[test]
    fn newton_from_different_starts_agrees() {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let m = build_cartesian_mesh(&dom, 1.0 / 16.0).unwrap();
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        let data = Field::from_boundary(&m, |p, _| p[1]);
        let a = Field::from_fn(&m, |p| 0.3 + 0.2 * (7.0 * p[0]).sin().abs());
        let b = Field::from_fn(&m, |p| 2.0 + p[0] * p[1]);
        let (ua, _) = solve_regularized(&m, &cfg, &data, 0.01, &a).unwrap();
        let (ub, _) = solve_regularized(&m, &cfg, &data, 0.01, &b).unwrap();
        let d = ua.values().iter().zip(ub.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-8, "{d}");
    }

    #[test]
    fn barrier_is_a_subsolution() {
        let m = build_region_mesh(&Disk::unit(), 1.0 / 64.0, DEFAULT_FOLD).unwrap();
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        let c: f64 = 1.0 / 16.0;
        let support = c.sqrt();
        let barrier = move |p: Point| (c - p[0] * p[0] - p[1] * p[1]).max(0.0);
        let guard = move |p: Point| p[0].hypot(p[1]) < 0.9 * support;
        let rep = residual_check(&barrier, &m, &cfg, ResidualMode::Sub, &guard, 1.0).unwrap();
        assert!(rep.holds(), "{:?}", rep.violations.first());
        // a large multiple is no longer a sub-solution
        let big = move |p: Point| 50.0 * barrier(p);
        let rep = residual_check(&big, &m, &cfg, ResidualMode::Sub, &guard, 1.0).unwrap();
        assert!(!rep.violations.is_empty());
    }

    #[test]
    fn schedule_is_strictly_decreasing() {
        let m = build_line_mesh(0.0, 1.0, 64).unwrap();
        let cfg = SleConfig::constant(0.5, 1.0).unwrap();
        let s = cfg.schedule(&m);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*s.last().unwrap(), 0.0);
        assert!((s[s.len() - 2] - (1.0f64 / 64.0).powf(4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SleConfig::constant(-1.0, 1.0).is_err());
        assert!(SleConfig::constant(0.5, 0.0).is_err());
        let mut c = SleConfig::constant(0.5, 1.0).unwrap();
        c.eps_factor = 1.0;
        assert!(c.validate().is_err());
    }
}
