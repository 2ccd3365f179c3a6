use crate::mesh::{assemble_laplacian, poisson_solve, Field, LinearSolveOptions, Mesh};
use crate::{Error, Result};

/// Interior gain of `−Δu = −t u`, `u = 1` on the boundary, over its
/// harmonic majorant `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub t: f64,
    /// Discrete value closest to the origin.
    pub center_value: f64,
    /// `(1 − u(0))/t`, zero for `t = 0`.
    pub center_gain: f64,
    /// `min over |X| ≤ 1/2 of (1 − u)/t`, zero for `t = 0`.
    pub c_est: f64,
}

/// Solves the linear absorption problem on `mesh` (intended: the unit disk)
/// and measures how far the solution bends below its boundary value.
pub fn interior_improvement(t: f64, mesh: &Mesh) -> Result<Improvement> {
    if !(0.0..0.5).contains(&t) {
        return Err(Error::invalid(format!("t = {t} outside [0, 1/2)")));
    }
    let data = Field::constant(mesh, 1.0);
    let u = if t == 0.0 {
        data.clone()
    } else {
        let a = assemble_laplacian(mesh)?.with_diagonal_shift(&vec![t; mesh.n_interior()]);
        poisson_solve(mesh, &a, &data, vec![0.0; mesh.n_interior()], &LinearSolveOptions::default())?
    };
    let norm = |k: usize| {
        let p = mesh.point(k);
        p[0].hypot(p[1])
    };
    let center = (0..mesh.n_interior())
        .min_by(|&a, &b| norm(a).total_cmp(&norm(b)))
        .ok_or_else(|| Error::DegenerateMesh("no interior nodes".into()))?;
    let center_value = u.values()[center];
    let gain = |v: f64| if t == 0.0 { 0.0 } else { (1.0 - v) / t };
    let c_est = (0..mesh.n_interior())
        .filter(|&k| norm(k) <= 0.5 + 1e-12)
        .map(|k| gain(u.values()[k]))
        .fold(f64::INFINITY, f64::min);
    if !c_est.is_finite() {
        return Err(Error::DegenerateMesh("no interior node in the half ball".into()));
    }
    Ok(Improvement {
        t,
        center_value,
        center_gain: gain(center_value),
        c_est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Disk;
    use crate::mesh::{build_region_mesh, DEFAULT_FOLD};

    /// `I_0(√t r)/I_0(√t)` by its power series.
    fn bessel_ratio(t: f64, r: f64) -> f64 {
        let i0 = |x: f64| {
            let (mut term, mut sum) = (1.0, 1.0);
            for k in 1..60 {
                term *= (x / 2.0).powi(2) / (k * k) as f64;
                sum += term;
            }
            sum
        };
        i0(t.sqrt() * r) / i0(t.sqrt())
    }

    fn disk(h: f64) -> Mesh {
        build_region_mesh(&Disk::unit(), h, DEFAULT_FOLD).unwrap()
    }

    #[test]
    fn small_t_matches_torsion() {
        let m = disk(1.0 / 32.0);
        let r = interior_improvement(1e-3, &m).unwrap();
        assert!((r.center_gain - 0.25).abs() < 0.01, "{}", r.center_gain);
        let exact = (1.0 - bessel_ratio(1e-3, 0.0)) / 1e-3;
        assert!((r.center_gain - exact).abs() < 1e-4);
    }

    #[test]
    fn zero_t_is_no_improvement() {
        let r = interior_improvement(0.0, &disk(0.125)).unwrap();
        assert_eq!(r.center_value, 1.0);
        assert_eq!(r.c_est, 0.0);
    }

    #[test]
    fn uniform_in_t() {
        let m = disk(1.0 / 32.0);
        let a = interior_improvement(0.1, &m).unwrap();
        let b = interior_improvement(0.4, &m).unwrap();
        assert!((a.c_est / b.c_est - 1.0).abs() < 0.25);
        for (r, t) in [(a, 0.1), (b, 0.4)] {
            let exact = (1.0 - bessel_ratio(t, 0.5)) / t;
            assert!((r.c_est - exact).abs() < 2e-3 * exact, "{} vs {exact}", r.c_est);
        }
    }

    #[test]
    fn rejects_t_out_of_range() {
        assert!(interior_improvement(0.5, &disk(0.125)).is_err());
        assert!(interior_improvement(-0.1, &disk(0.125)).is_err());
    }
}
