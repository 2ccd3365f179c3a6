use std::sync::Arc;

use crate::mesh::sparse::CsrBuilder;
use crate::mesh::{solve_with, Field, LinearOperator, LinearSolveOptions, Mesh, MultigridPlan};
use crate::spectral::{h_sigma_eval, ConeSpec};
use crate::{Error, Point, Result};

/// Coefficients of the harmonic approximations on shrinking balls.
#[derive(Debug, Clone)]
pub struct HarmonicCoefficients {
    pub radii: Vec<f64>,
    /// `𝒜_k` for each radius.
    pub coefficients: Vec<f64>,
    /// Aitken extrapolation of the last three coefficients (the last one if
    /// the sequence is not contracting).
    pub limit: f64,
    /// `|𝒜_n − 𝒜_{n−1}| / |𝒜_n|`.
    pub cauchy_gap: f64,
}

/// Discrete harmonic function on the interior nodes selected by `inside`,
/// with every other node held at its value in `u`.
pub fn harmonic_replacement_in(u: &Field, mesh: &Mesh, inside: impl Fn(Point) -> bool) -> Result<Field> {
    if u.mesh_id() != mesh.id() || u.len() != mesh.n_nodes() {
        return Err(Error::MeshMismatch("field does not belong to the mesh".into()));
    }
    let n_int = mesh.n_interior();
    let mut slot = vec![usize::MAX; n_int];
    let mut nodes = Vec::new();
    for (k, s) in slot.iter_mut().enumerate() {
        if inside(mesh.point(k)) {
            *s = nodes.len();
            nodes.push(k);
        }
    }
    if nodes.is_empty() {
        return Err(Error::DegenerateMesh("no interior node inside the ball".into()));
    }
    let st = mesh.stencil();
    let w = mesh.row_weights();
    let vals = u.values();
    let mut b = CsrBuilder::new(nodes.len());
    let mut rhs = Vec::with_capacity(nodes.len());
    let mut weight = Vec::with_capacity(nodes.len());
    let mut grid = Vec::with_capacity(nodes.len());
    for &k in &nodes {
        let mut r = 0.0;
        let mut row = Vec::new();
        for (j, a) in st.row(k) {
            if j < n_int && slot[j] != usize::MAX {
                row.push((slot[j], w[k] * a));
            } else {
                r -= a * vals[j];
            }
        }
        b.push_row(row);
        rhs.push(r);
        weight.push(w[k]);
        grid.push(mesh.grid_index(k));
    }
    let plan = Arc::new(MultigridPlan::new(&grid));
    let op = LinearOperator::new(b.finish(), weight, Some(plan))?;
    let mut x: Vec<f64> = nodes.iter().map(|&k| vals[k]).collect();
    solve_with(&op, &rhs, &mut x, &LinearSolveOptions::default())?;
    let mut out = u.clone();
    for (i, &k) in nodes.iter().enumerate() {
        out.values_mut()[k] = x[i];
    }
    Ok(out)
}

/// For each radius `r_k`, replaces `u` by its discrete harmonic extension
/// inside `B_{r_k}` and projects it onto `H_Σ` over the half annulus
/// `r_k/2 ≤ |X| ≤ r_k` by least squares.
pub fn harmonic_coefficient(u: &Field, mesh: &Mesh, cone: &ConeSpec, radii: &[f64]) -> Result<HarmonicCoefficients> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("radii must be positive and nonempty"));
    }
    let norm = |p: Point| p[0].hypot(p[1]);
    let mut coefficients = Vec::with_capacity(radii.len());
    for &r in radii {
        let h = harmonic_replacement_in(u, mesh, |p| norm(p) < r)?;
        let (mut hh, mut uh, mut count) = (0.0, 0.0, 0usize);
        for k in 0..mesh.n_interior() {
            let p = mesh.point(k);
            let d = norm(p);
            if d >= 0.5 * r && d < r {
                let hs = h_sigma_eval(cone, &p)?;
                hh += hs * hs;
                uh += hs * h.values()[k];
                count += 1;
            }
        }
        if count < 3 || !(hh > 1e-300) {
            return Err(Error::IllConditioned(format!(
                "H_Σ vanishes on the sample set of radius {r} ({count} nodes)"
            )));
        }
        coefficients.push(uh / hh);
    }
    let n = coefficients.len();
    let last = coefficients[n - 1];
    let cauchy_gap = if n >= 2 {
        (last - coefficients[n - 2]).abs() / last.abs().max(f64::MIN_POSITIVE)
    } else {
        f64::INFINITY
    };
    let limit = if n >= 3 {
        aitken(coefficients[n - 3], coefficients[n - 2], last)
    } else {
        last
    };
    Ok(HarmonicCoefficients {
        radii: radii.to_vec(),
        coefficients,
        limit,
        cauchy_gap,
    })
}

/// Aitken Δ² extrapolation; falls back to `a2` unless the differences
/// contract with a fixed sign.
pub fn aitken(a0: f64, a1: f64, a2: f64) -> f64 {
    let d1 = a1 - a0;
    let d2 = a2 - a1;
    if d1 == 0.0 || d2 == 0.0 {
        return a2;
    }
    let ratio = d2 / d1;
    if !(ratio > 0.0 && ratio < 0.95) {
        return a2;
    }
    a2 + d2 * ratio / (1.0 - ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{sector_boundary, OuterData};
    use crate::geometry::{GraphDomain, SectorDomain};
    use crate::mesh::{build_cartesian_mesh, build_polar_mesh, harmonic_solve};
    use crate::spectral::sector_frequency;
    use std::f64::consts::PI;

    #[test]
    fn aitken_on_geometric_sequence() {
        let s = |k: i32| 2.0 + 0.5f64.powi(k);
        assert!((aitken(s(1), s(2), s(3)) - 2.0).abs() < 1e-14);
        assert_eq!(aitken(1.0, 2.0, 4.0), 4.0);
    }

    #[test]
    fn half_plane_harmonic_is_its_own_coefficient() {
        let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
        let mesh = build_cartesian_mesh(&dom, 1.0 / 64.0).unwrap();
        let cone = sector_frequency(PI).unwrap();
        let u = Field::from_fn(&mesh, |p| 3.0 * h_sigma_eval(&cone, &p).unwrap_or(0.0));
        let c = harmonic_coefficient(&u, &mesh, &cone, &[0.5, 0.25, 0.125]).unwrap();
        for a in &c.coefficients {
            assert!((a - 3.0).abs() < 1e-9, "{a}");
        }
        assert!(c.cauchy_gap < 1e-9);
    }

    #[test]
    fn higher_harmonic_is_filtered() {
        // the r⁴ sin 4ω mode is orthogonal to H_Σ on every half annulus, so
        // 𝒜_k − 1 is bounded by r_k^{φ₂−φ} plus the discretization error
        let sec = SectorDomain::new(PI / 2.0, 1.0).unwrap();
        let mesh = build_polar_mesh(&sec, 160, 128, 1.02).unwrap();
        let cone = sector_frequency(PI / 2.0).unwrap();
        let exact = |p: Point| {
            let (r, w) = SectorDomain::polar(p);
            r * r * (2.0 * w).sin() + 0.5 * r.powi(4) * (4.0 * w).sin()
        };
        let data = Field::from_boundary(&mesh, |p, _| exact(p));
        let u = harmonic_solve(&mesh, &data).unwrap();
        let radii = [0.5, 0.25, 0.125, 0.0625];
        let c = harmonic_coefficient(&u, &mesh, &cone, &radii).unwrap();
        for (a, r) in c.coefficients.iter().zip(radii) {
            assert!((a - 1.0).abs() < 0.5 * r * r + 2e-3, "{a} at {r}");
        }
        assert!((c.limit - 1.0).abs() < 2e-3);
    }

    #[test]
    fn linear_in_the_field() {
        let sec = SectorDomain::new(2.0 * PI / 3.0, 1.0).unwrap();
        let mesh = build_polar_mesh(&sec, 64, 48, 1.05).unwrap();
        let cone = sector_frequency(2.0 * PI / 3.0).unwrap();
        let data = sector_boundary(&mesh, &cone, OuterData::Constant(1.0)).unwrap();
        let u = harmonic_solve(&mesh, &data).unwrap();
        let a = harmonic_coefficient(&u, &mesh, &cone, &[0.4, 0.2]).unwrap();
        let b = harmonic_coefficient(&u.scaled(2.5), &mesh, &cone, &[0.4, 0.2]).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((y / x - 2.5).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_empty_radius() {
        let sec = SectorDomain::new(PI / 2.0, 1.0).unwrap();
        let mesh = build_polar_mesh(&sec, 16, 16, 1.0).unwrap();
        let cone = sector_frequency(PI / 2.0).unwrap();
        let u = Field::zeros(&mesh);
        assert!(harmonic_coefficient(&u, &mesh, &cone, &[1e-6]).is_err());
        assert!(harmonic_coefficient(&u, &mesh, &cone, &[]).is_err());
    }
}
