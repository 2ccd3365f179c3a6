use crate::geometry::SectorDomain;
use crate::mesh::{assemble_laplacian, build_polar_mesh, poisson_solve, Field, LinearSolveOptions};
use crate::spectral::{classify, h_sigma_eval, sector_frequency, Criticality};
use crate::{Error, Result};

use super::SectorGrid;

/// `sup w_M` for the capped source problems `−Δw_M = min(H_Σ^{−γ}, M)`,
/// `w_M = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct SourceProbeReport {
    pub gamma: f64,
    pub theta: f64,
    /// `None` for the linear case `γ = 0`.
    pub criticality: Option<Criticality>,
    /// `(M, sup w_M)`.
    pub trend: Vec<(f64, f64)>,
    /// Relative change of `sup w_M` over the last step of the cap list.
    pub last_change: f64,
}

/// Solves the capped source problems on a graded sector mesh. Reports the
/// trend only; it does not decide solvability.
pub fn critical_source_probe(grid: SectorGrid, gamma: f64, caps: &[f64]) -> Result<SourceProbeReport> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("γ = {gamma} must be nonnegative")));
    }
    if caps.is_empty() || caps.iter().any(|m| !(*m > 0.0)) || caps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("caps must be positive and strictly increasing"));
    }
    let cone = sector_frequency(grid.theta)?;
    let criticality = if gamma > 0.0 { Some(classify(&cone, gamma)?.class) } else { None };
    let sec = SectorDomain::new(grid.theta, grid.radius)?;
    let mesh = build_polar_mesh(&sec, grid.nr, grid.n_omega, grid.grading)?;
    let a = assemble_laplacian(&mesh)?;
    let weights: Vec<f64> = (0..mesh.n_interior())
        .map(|k| Ok(h_sigma_eval(&cone, &mesh.point(k))?.powf(-gamma)))
        .collect::<Result<_>>()?;
    let zero = Field::zeros(&mesh);
    let mut trend = Vec::with_capacity(caps.len());
    for &m in caps {
        let rhs: Vec<f64> = weights.iter().map(|w| w.min(m)).collect();
        let w = poisson_solve(&mesh, &a, &zero, rhs, &LinearSolveOptions::default())?;
        trend.push((m, w.max()));
    }
    let n = trend.len();
    let last_change = if n >= 2 {
        (trend[n - 1].1 - trend[n - 2].1).abs() / trend[n - 1].1
    } else {
        f64::NAN
    };
    Ok(SourceProbeReport {
        gamma,
        theta: grid.theta,
        criticality,
        trend,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(theta: f64) -> SectorGrid {
        SectorGrid {
            theta,
            radius: 1.0,
            nr: 96,
            n_omega: 64,
            grading: 1.03,
        }
    }

    #[test]
    fn gamma_zero_is_the_torsion_function() {
        // on the half disk the torsion function stays below that of the
        // full unit disk, (1 − r²)/4
        let r = critical_source_probe(grid(PI), 0.0, &[0.5, 1.0, 2.0]).unwrap();
        assert!(r.trend[1].1 > 0.0 && r.trend[1].1 < 0.25);
        assert!((r.trend[2].1 - r.trend[1].1).abs() < 1e-12);
        assert!((r.trend[0].1 / r.trend[1].1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn caps_increase_sup() {
        let r = critical_source_probe(grid(2.0 * PI / 3.0), 1.0 / 3.0, &[1.0, 4.0, 16.0]).unwrap();
        assert_eq!(r.criticality, Some(Criticality::Critical));
        for w in r.trend.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn rejects_unsorted_caps() {
        assert!(critical_source_probe(grid(PI / 2.0), 0.5, &[2.0, 1.0]).is_err());
        assert!(critical_source_probe(grid(PI / 2.0), 0.5, &[]).is_err());
    }
}
