use super::sparse::CsrBuilder;
use super::{Layout, Mesh, MeshParts, PolarLayout};
use crate::geometry::{BoundaryPart, SectorDomain};
use crate::{Error, Result};

/// Tensor mesh of the sector `{r_min < r < radius, 0 < ω < θ}`.
///
/// Radial nodes are `r_m = Δ₁(g^{m+1} − 1)/(g − 1)` for `m = 0..Nr`, so the
/// first step `Δ₁` equals `r_min` and steps grow geometrically by `g`
/// (`grading`) away from the vertex. The ring `r = r_min`, the outer arc and
/// both sides are Dirichlet nodes. Radial second differences are exact for
/// quadratics in `r`; rows are symmetrized by positive radial weights.
pub fn build_polar_mesh(sec: &SectorDomain, nr: usize, n_omega: usize, grading: f64) -> Result<Mesh> {
    if nr < 8 || n_omega < 8 {
        return Err(Error::invalid("polar mesh needs Nr, Nω ≥ 8"));
    }
    if !(1.0..=1.2).contains(&grading) {
        return Err(Error::invalid(format!("grading {grading} outside [1, 1.2]")));
    }
    let radii = radial_nodes(sec.radius, nr, grading);
    let layout = PolarLayout {
        theta: sec.theta,
        radius: sec.radius,
        grading,
        radii,
        n_omega,
    };
    let dw = layout.d_omega();
    let n_int = (nr - 2) * (n_omega - 1);
    let n_nodes = nr * (n_omega + 1);
    let mut coords = vec![[0.0; 2]; n_nodes];
    let mut parts = vec![None; n_nodes];
    for m in 0..nr {
        for j in 0..=n_omega {
            let k = index(&layout, m, j);
            let (r, w) = (layout.radii[m], j as f64 * dw);
            coords[k] = [r * w.cos(), r * w.sin()];
            parts[k] = if m == 0 {
                Some(BoundaryPart::Vertex)
            } else if m == nr - 1 {
                Some(BoundaryPart::Outer)
            } else if j == 0 {
                Some(BoundaryPart::SideStart)
            } else if j == n_omega {
                Some(BoundaryPart::SideEnd)
            } else {
                None
            };
        }
    }
    let r = &layout.radii;
    let mut sb = CsrBuilder::new(n_nodes);
    let mut weight = Vec::with_capacity(n_int);
    let mut grid = Vec::with_capacity(n_int);
    let mut local_h = Vec::with_capacity(n_int);
    let coeffs = |m: usize| {
        let dp = r[m + 1] - r[m];
        let dm = r[m] - r[m - 1];
        let s = dp + dm;
        let cp = (2.0 + dm / r[m]) / (dp * s);
        let cm = (2.0 - dp / r[m]) / (dm * s);
        (cp, cm)
    };
    let mut ring_weight = vec![0.0; nr];
    ring_weight[1] = r[1] * (r[2] - r[0]) / 2.0 * dw;
    for m in 1..nr - 2 {
        let (cp, _) = coeffs(m);
        let (_, cm_next) = coeffs(m + 1);
        ring_weight[m + 1] = ring_weight[m] * cp / cm_next;
    }
    for m in 1..nr - 1 {
        let (cp, cm) = coeffs(m);
        let a = 1.0 / (r[m] * r[m] * dw * dw);
        let lh = (r[m + 1] - r[m]).max(r[m] - r[m - 1]).max(r[m] * dw);
        for j in 1..n_omega {
            sb.push_row([
                (index(&layout, m, j), cp + cm + 2.0 * a),
                (index(&layout, m + 1, j), -cp),
                (index(&layout, m - 1, j), -cm),
                (index(&layout, m, j + 1), -a),
                (index(&layout, m, j - 1), -a),
            ]);
            weight.push(ring_weight[m]);
            grid.push((m as i64, j as i64));
            local_h.push(lh);
        }
    }
    Mesh::from_parts(MeshParts {
        layout: Layout::Polar(layout),
        coords,
        n_interior: n_int,
        parts,
        stencil: sb.finish(),
        weight,
        grid,
        fractions: vec![[1.0; 4]; n_int],
        local_h,
    })
}

/// Graded radial nodes ending at `radius`.
pub(crate) fn radial_nodes(radius: f64, nr: usize, g: f64) -> Vec<f64> {
    let first = if g == 1.0 {
        radius / nr as f64
    } else {
        radius * (g - 1.0) / (g.powi(nr as i32) - 1.0)
    };
    let mut out = Vec::with_capacity(nr);
    let mut r = 0.0;
    let mut step = first;
    for _ in 0..nr {
        r += step;
        step *= g;
        out.push(r);
    }
    // remove accumulated rounding at the outer radius
    let last = out[nr - 1];
    for v in out.iter_mut() {
        *v *= radius / last;
    }
    out[nr - 1] = radius;
    out
}

fn index(l: &PolarLayout, m: usize, j: usize) -> usize {
    let nr = l.radii.len();
    let nw = l.n_omega;
    let n_int = (nr - 2) * (nw - 1);
    if m == 0 {
        n_int + j
    } else if m == nr - 1 {
        n_int + (nw + 1) + j
    } else if j == 0 {
        n_int + 2 * (nw + 1) + (m - 1)
    } else if j == nw {
        n_int + 2 * (nw + 1) + (nr - 2) + (m - 1)
    } else {
        (m - 1) * (nw - 1) + (j - 1)
    }
}

/// Node at radial index `m` and angular index `j`.
pub(crate) fn node_at(l: &PolarLayout, m: i64, j: i64) -> Option<usize> {
    if m < 0 || j < 0 || m as usize >= l.radii.len() || j as usize > l.n_omega {
        return None;
    }
    Some(index(l, m as usize, j as usize))
}

pub(crate) fn sample(l: &PolarLayout, v: &[f64], r: f64, w: f64) -> Result<f64> {
    let tol = 1e-12;
    let rmin = l.r_min();
    if !(r >= rmin * (1.0 - tol) && r <= l.radius * (1.0 + tol) && w >= -tol && w <= l.theta + tol) {
        return Err(Error::DomainViolation(format!(
            "(r, ω) = ({r}, {w}) outside the polar mesh"
        )));
    }
    let nr = l.radii.len();
    let m = l.radii.partition_point(|&x| x <= r).clamp(1, nr - 1) - 1;
    let dw = l.d_omega();
    let j = ((w / dw).floor().max(0.0) as usize).min(l.n_omega - 1);
    let s = ((r - l.radii[m]) / (l.radii[m + 1] - l.radii[m])).clamp(0.0, 1.0);
    let t = ((w - j as f64 * dw) / dw).clamp(0.0, 1.0);
    let at = |mm: usize, jj: usize| v[index(l, mm, jj)];
    Ok((1.0 - s) * ((1.0 - t) * at(m, j) + t * at(m, j + 1)) + s * ((1.0 - t) * at(m + 1, j) + t * at(m + 1, j + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{assemble_laplacian, harmonic_solve, Field};
    use std::f64::consts::PI;

    #[test]
    fn uniform_mesh_spacing() {
        let sec = SectorDomain::new(PI / 2.0, 1.0).unwrap();
        let m = build_polar_mesh(&sec, 8, 8, 1.0).unwrap();
        let l = m.polar_layout().unwrap();
        assert!((l.d_omega() - PI / 16.0).abs() < 1e-15);
        assert!((l.r_min() - 0.125).abs() < 1e-15);
        assert_eq!(m.n_interior(), 6 * 7);
    }

    #[test]
    fn graded_first_step_matches_geometric_sum() {
        let sec = SectorDomain::new(PI / 2.0, 1.0).unwrap();
        let m = build_polar_mesh(&sec, 64, 16, 1.1).unwrap();
        let l = m.polar_layout().unwrap();
        let closed = 0.1 / (1.1f64.powi(64) - 1.0);
        assert!((l.r_min() - closed).abs() < 1e-14 * closed.max(1.0));
        let direct: f64 = (0..64).map(|k| closed * 1.1f64.powi(k)).sum();
        assert!((direct - 1.0).abs() < 1e-12);
        for w in l.radii.windows(3) {
            let ratio = (w[2] - w[1]) / (w[1] - w[0]);
            assert!((ratio - 1.1).abs() < 1e-9);
        }
    }

    #[test]
    fn operator_is_symmetric_m_matrix() {
        let sec = SectorDomain::new(2.0 * PI / 3.0, 1.0).unwrap();
        let m = build_polar_mesh(&sec, 40, 20, 1.1).unwrap();
        let a = assemble_laplacian(&m).unwrap();
        assert!(a.is_symmetric());
    }

    #[test]
    fn quadratic_radial_data_is_exact() {
        // Δ r² = 4 exactly on any graded mesh
        let sec = SectorDomain::new(PI, 2.0).unwrap();
        let m = build_polar_mesh(&sec, 16, 8, 1.15).unwrap();
        let u = Field::from_fn(&m, |p| p[0] * p[0] + p[1] * p[1]);
        for r in m.apply_stencil(&u).unwrap() {
            assert!((r + 4.0).abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn harmonic_sector_solution() {
        let sec = SectorDomain::new(PI / 2.0, 1.0).unwrap();
        let m = build_polar_mesh(&sec, 32, 32, 1.05).unwrap();
        let exact = |p: [f64; 2]| 2.0 * p[0] * p[1];
        let data = Field::from_boundary(&m, |p, _| exact(p));
        let u = harmonic_solve(&m, &data).unwrap();
        let err = (0..m.n_interior())
            .map(|k| (u.values()[k] - exact(m.point(k))).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
        let v = m.sample_polar(&u, 0.5, PI / 4.0).unwrap();
        assert!((v - 0.25).abs() < 3e-3);
    }
}
