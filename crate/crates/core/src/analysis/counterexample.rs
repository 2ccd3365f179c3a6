use crate::geometry::{bump_overlap_free, circle_signed_distance, BoundaryPart, BumpCurve, GraphDomain};
use crate::mesh::{build_cartesian_mesh, Field, Mesh};
use crate::ode_lab::{annulus_min_slope, flat_min_slope, AnnulusProfile, FlatParam, FlatProfile, HermiteTable};
use crate::slef::{solve_singular, SleConfig, SolveReport};
use crate::{Error, Point, Result};

/// Parameters of the discontinuous-ratio experiment above the bumpy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleConfig {
    pub radius: f64,
    pub i_max: u32,
    pub gamma: f64,
    /// Slope of the annulus profile `ψ`; the flat profile `φ` starts with
    /// slope `2k`. `None` picks `slope_margin` times the smallest admissible
    /// slope.
    pub k: Option<f64>,
    pub slope_margin: f64,
    pub h: f64,
    /// Bump whose apex carries the vertical probe.
    pub apex_index: u32,
    /// Probe depths, largest first.
    pub depths: [f64; 4],
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            radius: 2.0,
            i_max: 8,
            gamma: 0.5,
            k: None,
            slope_margin: 1.25,
            h: 2f64.powi(-10),
            apex_index: 2,
            depths: [2f64.powi(-5), 2f64.powi(-6), 2f64.powi(-7), 2f64.powi(-8)],
        }
    }
}

/// One probe sample `(depth, u, v, u/v)`.
pub type ProbeSample = (f64, f64, f64, f64);

#[derive(Debug)]
pub struct CounterexampleReport {
    pub config: CounterexampleConfig,
    pub k: f64,
    pub k_min: f64,
    pub mesh_nodes: usize,
    /// `min (u − φ)` over all nodes.
    pub min_u_minus_phi: f64,
    /// `min (ψ − v)` over all nodes.
    pub min_psi_minus_v: f64,
    /// Samples at `(0, t)`.
    pub midline: Vec<ProbeSample>,
    /// Samples at `apex + (0, t)`.
    pub apex: Vec<ProbeSample>,
    /// Midline ratio minus apex ratio at the smallest depth.
    pub separation: f64,
    pub u_report: SolveReport,
    pub v_report: SolveReport,
}

impl CounterexampleReport {
    pub fn comparison_holds(&self, tol: f64) -> bool {
        self.min_u_minus_phi >= -tol && self.min_psi_minus_v >= -tol
    }
}

/// Largest signed distance to the circle over the box `[−1, 1] × [·, 1]`.
fn circle_reach(radius: f64) -> f64 {
    circle_signed_distance([1.0, 1.0], radius)
}

/// Smallest `k` for which `ψ` (slope `k`) lives on the box and `φ` (slope
/// `2k`) lives on `[0, 1]`.
pub fn counterexample_min_slope(gamma: f64, radius: f64) -> Result<f64> {
    let annulus = annulus_min_slope(gamma, radius, circle_reach(radius))?;
    let flat = flat_min_slope(gamma, 1.0)? / 2.0;
    Ok(annulus.max(flat))
}

/// Builds the bumpy domain, solves `u` with data `φ(x₂)` and `v` with data
/// `0` on the curve and `ψ(d)` elsewhere, and samples `u/v` on the midline
/// and above one apex.
pub fn counterexample_experiment(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let gamma = cfg.gamma;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("γ = {gamma} must lie in (0, 1)")));
    }
    if !bump_overlap_free(cfg.radius, cfg.i_max) {
        return Err(Error::invalid(format!(
            "bumps overlap for R = {}, i_max = {}",
            cfg.radius, cfg.i_max
        )));
    }
    if cfg.apex_index == 0 || cfg.apex_index > cfg.i_max {
        return Err(Error::invalid("apex index outside 1..=i_max"));
    }
    if !(cfg.slope_margin >= 1.0) {
        return Err(Error::invalid("slope margin must be at least 1"));
    }
    let k_min = counterexample_min_slope(gamma, cfg.radius)?;
    let k = cfg.k.unwrap_or(cfg.slope_margin * k_min);
    if k < k_min {
        return Err(Error::invalid(format!("slope k = {k} below the admissible minimum {k_min}")));
    }
    let curve = BumpCurve::new(cfg.radius, cfg.i_max)?;
    let dom = GraphDomain::bumpy(curve)?;
    let mesh = build_cartesian_mesh(&dom, cfg.h)?;

    let phi_table = FlatProfile::new(gamma, FlatParam::K(2.0 * k))?.table(1.0, 20_000)?;
    let psi = AnnulusProfile::new(gamma, cfg.radius, k, circle_reach(cfg.radius) * (1.0 + 1e-9))?;
    let phi = |p: Point| flat_eval(&phi_table, p[1]);
    let psi_at = |p: Point| psi.eval(circle_signed_distance(p, cfg.radius));

    let sle = SleConfig::constant(gamma, 1.0)?;
    let u_data = Field::from_boundary(&mesh, |p, _| phi(p));
    let mut v_data = Field::zeros(&mesh);
    for n in mesh.n_interior()..mesh.n_nodes() {
        if mesh.boundary_part(n) != Some(BoundaryPart::Graph) {
            v_data.values_mut()[n] = psi_at(mesh.point(n))?;
        }
    }
    let (u, u_report) = solve_singular(&mesh, &sle, &u_data)?;
    let (v, v_report) = solve_singular(&mesh, &sle, &v_data)?;

    let mut min_u = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    for n in 0..mesh.n_nodes() {
        let p = mesh.point(n);
        min_u = min_u.min(u.values()[n] - phi(p));
        min_v = min_v.min(psi_at(p)? - v.values()[n]);
    }
    let apex = curve.apex(cfg.apex_index as i32);
    let midline = probe(&mesh, &u, &v, [0.0, 0.0], &cfg.depths)?;
    let apex_trace = probe(&mesh, &u, &v, apex, &cfg.depths)?;
    let separation = midline[midline.len() - 1].3 - apex_trace[apex_trace.len() - 1].3;
    Ok(CounterexampleReport {
        config: *cfg,
        k,
        k_min,
        mesh_nodes: mesh.n_nodes(),
        min_u_minus_phi: min_u,
        min_psi_minus_v: min_v,
        midline,
        apex: apex_trace,
        separation,
        u_report,
        v_report,
    })
}

fn flat_eval(table: &HermiteTable, x2: f64) -> f64 {
    if x2 <= 0.0 {
        0.0
    } else {
        table.eval(x2.min(table.range().1))
    }
}

fn probe(mesh: &Mesh, u: &Field, v: &Field, base: Point, depths: &[f64]) -> Result<Vec<ProbeSample>> {
    depths
        .iter()
        .map(|&t| {
            let p = [base[0], base[1] + t];
            let (a, b) = (mesh.sample(u, p)?, mesh.sample(v, p)?);
            if !(b > 0.0) {
                return Err(Error::invalid(format!("v = {b} at probe depth {t}")));
            }
            Ok((t, a, b, a / b))
        })
        .collect()
}
