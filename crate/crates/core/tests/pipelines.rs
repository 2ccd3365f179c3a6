use std::f64::consts::PI;

use slef_core::analysis::*;
use slef_core::geometry::GraphDomain;
use slef_core::mesh::{build_cartesian_mesh, harmonic_solve, Field};
use slef_core::slef::{solve_singular, verify_comparison, SleConfig};
use slef_core::spectral::sector_frequency;

#[test]
fn flat_boundary_coefficients_settle() {
    let dom = GraphDomain::flat((-1.0, 1.0), 1.0).unwrap();
    let mesh = build_cartesian_mesh(&dom, 1.0 / 128.0).unwrap();
    let cfg = SleConfig::constant(0.5, 1.0).unwrap();
    let data = Field::from_boundary(&mesh, |p, _| p[1]);
    let (u, _) = solve_singular(&mesh, &cfg, &data).unwrap();
    let cone = sector_frequency(PI).unwrap();
    let c = harmonic_coefficient(&u, &mesh, &cone, &[0.5, 0.25, 0.125, 0.0625]).unwrap();
    assert!(c.coefficients.iter().all(|a| *a > 1.0));
    // u − 𝒜 x₂ = O(r^{2−γ}), so successive gaps contract like 2^{−(1−γ)}
    let d: Vec<f64> = c.coefficients.windows(2).map(|w| w[1] - w[0]).collect();
    for w in d.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.5f64.sqrt()).abs() < 0.1, "{d:?}");
    }
    assert!(c.limit > c.coefficients[3] && c.limit < c.coefficients[3] + 3.0 * d[2]);
}

#[test]
fn ordered_outer_data_give_ordered_sector_solutions() {
    let grid = SectorGrid {
        theta: 2.0 * PI / 3.0,
        radius: 1.0,
        nr: 96,
        n_omega: 64,
        grading: 1.03,
    };
    let cfg = SleConfig::constant(1.0 / 3.0, 1.0).unwrap();
    let (mesh, cone) = sector_mesh(grid).unwrap();
    let (u, ru) = solve_on_sector(&mesh, &cone, &cfg, OuterData::Constant(1.0)).unwrap();
    let (v, _) = solve_on_sector(&mesh, &cone, &cfg, OuterData::Constant(2.0)).unwrap();
    let (w, _) = solve_on_sector(&mesh, &cone, &cfg, OuterData::Zero).unwrap();
    assert!(ru.monotone_in_eps && ru.subsolution_ok);
    assert!(verify_comparison(&v, &u).unwrap());
    assert!(verify_comparison(&u, &w).unwrap());
    let h = harmonic_solve(&mesh, &sector_boundary(&mesh, &cone, OuterData::Constant(1.0)).unwrap()).unwrap();
    assert!(verify_comparison(&u, &h).unwrap());
}

#[test]
fn recursion_limits_increase_with_gamma() {
    let limits: Vec<f64> = [0.25, 0.5, 1.0, 2.0].iter().map(|&g| ak_continuum_limit(g)).collect();
    assert!(limits.windows(2).all(|w| w[1] > w[0]));
    for (g, l) in [0.25, 0.5, 1.0, 2.0].iter().zip(&limits) {
        let phi = 2.0 / (1.0 + g);
        assert!((l * phi / 2.0 - l.powf(-g) - 1.0).abs() < 1e-12);
    }
}
