//! First Dirichlet eigenpairs of spherical domains, the minimal frequency
//! `φ_Σ`, the homogeneous harmonic `H_Σ = r^φ E_Σ` and criticality of a pair
//! `(Σ, γ)`.

use std::f64::consts::PI;
use std::fmt;

use crate::{Error, Result};

/// Default half-width of the critical band `|2/(1+γ) − φ_Σ|`.
pub const CRITICAL_TOL: f64 = 1e-9;

const SECTOR_SAMPLES: usize = 257;

/// A spherical domain: an arc of the unit circle or an axisymmetric cap of
/// the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphericalShape {
    /// `{0 < ω < θ}` on the unit circle.
    Arc { theta: f64 },
    /// `{polar angle < α}` on the unit sphere, centred at the north pole.
    Cap { alpha: f64 },
}

/// A cone over a spherical domain with its first eigenpair.
#[derive(Debug, Clone)]
pub struct ConeSpec {
    pub dimension: usize,
    pub shape: SphericalShape,
    pub lambda_sigma: f64,
    pub phi_sigma: f64,
    /// `(angle, E_Σ(angle))` samples on `[0, θ]` or `[0, α]`, max = 1.
    pub eigenfunction: Vec<(f64, f64)>,
}

impl ConeSpec {
    /// Opening parameter: `θ` for arcs, `α` for caps.
    pub fn param(&self) -> f64 {
        match self.shape {
            SphericalShape::Arc { theta } => theta,
            SphericalShape::Cap { alpha } => alpha,
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self.shape {
            SphericalShape::Arc { .. } => "sector",
            SphericalShape::Cap { .. } => "cap",
        }
    }

    /// `E_Σ` at an angle: the exact sine on arcs, linear interpolation of the
    /// samples on caps.
    pub fn eigenfunction_at(&self, angle: f64) -> Result<f64> {
        let end = self.param();
        if !(angle >= 0.0 && angle <= end) {
            return Err(Error::DomainViolation(format!("angle {angle} outside [0, {end}]")));
        }
        match self.shape {
            SphericalShape::Arc { theta } => Ok((PI * angle / theta).sin()),
            SphericalShape::Cap { .. } => Ok(interpolate(&self.eigenfunction, angle)),
        }
    }
}

fn interpolate(samples: &[(f64, f64)], x: f64) -> f64 {
    let k = samples.partition_point(|s| s.0 <= x);
    if k == 0 {
        return samples[0].1;
    }
    if k == samples.len() {
        return samples[k - 1].1;
    }
    let (x0, y0) = samples[k - 1];
    let (x1, y1) = samples[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Position of a pair relative to the critical identity `φ_Σ = 2/(1+γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criticality::Subcritical => "subcritical",
            Criticality::Critical => "critical",
            Criticality::Supercritical => "supercritical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityClass {
    pub class: Criticality,
    /// `2/(1+γ) − φ_Σ`.
    pub margin: f64,
}

/// The planar sector of opening `θ`: `λ = (π/θ)²`, `φ = π/θ`,
/// `E(ω) = sin(πω/θ)`.
pub fn sector_frequency(theta: f64) -> Result<ConeSpec> {
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::invalid(format!("sector angle {theta} outside (0, 2π)")));
    }
    let phi = PI / theta;
    let eigenfunction = (0..SECTOR_SAMPLES)
        .map(|k| {
            let w = theta * k as f64 / (SECTOR_SAMPLES - 1) as f64;
            (w, (PI * w / theta).sin())
        })
        .collect();
    Ok(ConeSpec {
        dimension: 2,
        shape: SphericalShape::Arc { theta },
        lambda_sigma: phi * phi,
        phi_sigma: phi,
        eigenfunction,
    })
}

/// Axisymmetric cap of polar angle `α` in three dimensions.
///
/// Finite volumes on a uniform `s`-grid for `−(sin s E′)′ = λ sin s E`,
/// `E(α) = 0`; the smallest eigenvalue by Sturm-sequence bisection and the
/// eigenvector by inverse iteration.
pub fn cap_frequency(alpha: f64, nodes: usize) -> Result<ConeSpec> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(Error::invalid(format!("cap angle {alpha} outside (0, π)")));
    }
    if nodes < 64 {
        return Err(Error::invalid("cap eigen-solve needs at least 64 nodes"));
    }
    let n = nodes;
    let d = alpha / n as f64;
    // unknowns s_0 = 0, …, s_{n-1}; s_n = α carries E = 0
    let mass: Vec<f64> = (0..n)
        .map(|j| {
            if j == 0 {
                1.0 - (d / 2.0).cos()
            } else {
                ((j as f64 - 0.5) * d).cos() - ((j as f64 + 0.5) * d).cos()
            }
        })
        .collect();
    let flux: Vec<f64> = (0..n).map(|j| ((j as f64 + 0.5) * d).sin() / d).collect();
    // symmetric tridiagonal M^{-1/2} K M^{-1/2}
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for j in 0..n {
        let left = if j > 0 { flux[j - 1] } else { 0.0 };
        diag[j] = (flux[j] + left) / mass[j];
        if j + 1 < n {
            off[j] = -flux[j] / (mass[j] * mass[j + 1]).sqrt();
        }
    }
    let lambda = smallest_eigenvalue(&diag, &off)?;
    let y = inverse_iteration(&diag, &off, lambda)?;
    let mut e: Vec<f64> = y.iter().zip(&mass).map(|(v, m)| v / m.sqrt()).collect();
    let peak = e.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    e.iter_mut().for_each(|v| *v /= peak);
    let mut eigenfunction: Vec<(f64, f64)> = e.iter().enumerate().map(|(j, &v)| (j as f64 * d, v.max(0.0))).collect();
    eigenfunction.push((alpha, 0.0));
    let phi = (-1.0 + (1.0 + 4.0 * lambda).sqrt()) / 2.0;
    Ok(ConeSpec {
        dimension: 3,
        shape: SphericalShape::Cap { alpha },
        lambda_sigma: lambda,
        phi_sigma: phi,
        eigenfunction,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        q = diag[i] - x - if i > 0 { b2 / q } else { 0.0 };
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn smallest_eigenvalue(diag: &[f64], off: &[f64]) -> Result<f64> {
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + off.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Convergence {
        method: "Sturm bisection",
        iterations: 200,
        residual: hi - lo,
    })
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shift = lambda - 1e-10 * lambda.abs().max(1.0);
    let mut x = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..50 {
        let mut y = thomas(diag, off, shift, &x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        // residual of the eigen-equation
        residual = 0.0;
        for i in 0..n {
            let mut ty = diag[i] * y[i];
            if i > 0 {
                ty += off[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                ty += off[i] * y[i + 1];
            }
            residual = f64::max(residual, (ty - lambda * y[i]).abs());
        }
        x = y;
        if it > 1 && residual <= 1e-8 * lambda.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        method: "inverse iteration",
        iterations: 50,
        residual,
    })
}

/// Solves `(T − σ I) y = b` for symmetric tridiagonal `T`.
fn thomas(diag: &[f64], off: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0] - sigma;
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    d[0] = b[0] / denom;
    for i in 1..n {
        denom = diag[i] - sigma - off[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut y = vec![0.0; n];
    y[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        y[i] = d[i] - c[i] * y[i + 1];
    }
    y
}

/// Independent cap eigenvalue: shoot `E″ + cot(s) E′ + λE = 0`, `E(0) = 1`,
/// `E′(0) = 0`, and bisect on `λ` for the first zero to land at `s = α`.
pub fn cap_frequency_shooting(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(Error::invalid(format!("cap angle {alpha} outside (0, π)")));
    }
    let has_zero = |lambda: f64| shoot_cap(alpha, lambda) <= 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while !has_zero(hi) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Convergence {
                method: "cap shooting bracket",
                iterations: doublings,
                residual: hi,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if has_zero(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum of `E` over `(0, α]` (negative iff `E` has a zero there).
fn shoot_cap(alpha: f64, lambda: f64) -> f64 {
    let s0 = alpha * 1e-5;
    // series through the regular singular point: E = 1 − λs²/4 + O(s⁴)
    let mut e = 1.0 - lambda * s0 * s0 / 4.0;
    let mut de = -lambda * s0 / 2.0;
    let steps = 20_000;
    let h = (alpha - s0) / steps as f64;
    let rhs = |s: f64, e: f64, de: f64| (de, -de / s.tan() - lambda * e);
    let mut s = s0;
    let mut min = e;
    for _ in 0..steps {
        let (k1a, k1b) = rhs(s, e, de);
        let (k2a, k2b) = rhs(s + h / 2.0, e + h / 2.0 * k1a, de + h / 2.0 * k1b);
        let (k3a, k3b) = rhs(s + h / 2.0, e + h / 2.0 * k2a, de + h / 2.0 * k2b);
        let (k4a, k4b) = rhs(s + h, e + h * k3a, de + h * k3b);
        e += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        de += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        s += h;
        min = min.min(e);
        if min <= 0.0 {
            return min;
        }
    }
    min
}

/// Classifies `(Σ, γ)` with the default critical band.
pub fn classify(cone: &ConeSpec, gamma: f64) -> Result<CriticalityClass> {
    classify_with_tol(cone, gamma, CRITICAL_TOL)
}

pub fn classify_with_tol(cone: &ConeSpec, gamma: f64, tol: f64) -> Result<CriticalityClass> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("γ must be positive"));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("critical tolerance must be nonnegative"));
    }
    let margin = 2.0 / (1.0 + gamma) - cone.phi_sigma;
    let class = if margin < -tol {
        Criticality::Subcritical
    } else if margin > tol {
        Criticality::Supercritical
    } else {
        Criticality::Critical
    };
    Ok(CriticalityClass { class, margin })
}

/// `H_Σ(X) = |X|^φ E_Σ(angle of X)` for a 2D point `(x, y)` (angle from the
/// `+x` axis) or a 3D point `(x, y, z)` (polar angle from `+z`).
pub fn h_sigma_eval(cone: &ConeSpec, x: &[f64]) -> Result<f64> {
    let (r, angle) = match (cone.dimension, x.len()) {
        (2, 2) => {
            let r = x[0].hypot(x[1]);
            let mut w = x[1].atan2(x[0]);
            if w < 0.0 {
                w += 2.0 * PI;
            }
            (r, w)
        }
        (3, 3) => {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            (r, if r > 0.0 { (x[2] / r).clamp(-1.0, 1.0).acos() } else { 0.0 })
        }
        (d, len) => {
            return Err(Error::invalid(format!("{len}-component point for a {d}-dimensional cone")))
        }
    };
    if r == 0.0 {
        return Err(Error::DomainViolation("the vertex is excluded".into()));
    }
    if angle > cone.param() * (1.0 + 1e-12) {
        return Err(Error::DomainViolation(format!("point at angle {angle} lies outside the cone")));
    }
    Ok(r.powf(cone.phi_sigma) * cone.eigenfunction_at(angle.min(cone.param()))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sector_closed_forms() {
        assert_abs_diff_eq!(sector_frequency(PI).unwrap().phi_sigma, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sector_frequency(PI / 2.0).unwrap().phi_sigma, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sector_frequency(1.5 * PI).unwrap().phi_sigma, 2.0 / 3.0, epsilon = 1e-15);
        assert!(sector_frequency(0.0).is_err());
        assert!(sector_frequency(2.0 * PI).is_err());
    }

    #[test]
    fn hemisphere() {
        let c = cap_frequency(PI / 2.0, 1000).unwrap();
        assert_abs_diff_eq!(c.lambda_sigma, 2.0, epsilon = 1e-4);
        assert_abs_diff_eq!(c.phi_sigma, 1.0, epsilon = 1e-4);
        // eigenfunction cos s
        for &(s, e) in c.eigenfunction.iter().step_by(50) {
            assert_abs_diff_eq!(e, s.cos(), epsilon = 1e-4);
        }
        let sh = cap_frequency_shooting(PI / 2.0).unwrap();
        assert_abs_diff_eq!(sh, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn thin_cap_approaches_disk() {
        let j0 = 2.404_825_557_695_773f64;
        let c = cap_frequency(0.05, 400).unwrap();
        let ratio = c.lambda_sigma * 0.05 * 0.05 / (j0 * j0);
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn fd_and_shooting_agree() {
        let alpha = 2.0 * PI / 3.0;
        let fd = cap_frequency(alpha, 2000).unwrap().lambda_sigma;
        let sh = cap_frequency_shooting(alpha).unwrap();
        assert!((fd - sh).abs() < 1e-4 * sh, "{fd} vs {sh}");
    }

    #[test]
    fn classification_examples() {
        let g = 1.0 / 3.0;
        let c = classify(&sector_frequency(PI / 2.0).unwrap(), g).unwrap();
        assert_eq!(c.class, Criticality::Subcritical);
        let c = classify(&sector_frequency((1.0 + g) * PI / 2.0).unwrap(), g).unwrap();
        assert_eq!(c.class, Criticality::Critical);
        let c = classify(&sector_frequency(1.5 * PI).unwrap(), g).unwrap();
        assert_eq!(c.class, Criticality::Supercritical);
        assert!(classify(&sector_frequency(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn h_sigma_examples() {
        let half = sector_frequency(PI).unwrap();
        assert_abs_diff_eq!(h_sigma_eval(&half, &[0.0, 0.7]).unwrap(), 0.7, epsilon = 1e-14);
        let quarter = sector_frequency(PI / 2.0).unwrap();
        let b = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(h_sigma_eval(&quarter, &[b, b]).unwrap(), 1.0, epsilon = 1e-14);
        assert!(h_sigma_eval(&quarter, &[-1.0, 0.5]).is_err());
        let hemi = cap_frequency(PI / 2.0, 1000).unwrap();
        assert_abs_diff_eq!(h_sigma_eval(&hemi, &[0.0, 0.0, 0.3]).unwrap(), 0.3, epsilon = 1e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn cap_eigenvalue_decreases_with_angle(a in 0.2f64..2.8, da in 0.02f64..0.3) {
                let b = (a + da).min(3.1);
                let la = cap_frequency(a, 128).unwrap();
                let lb = cap_frequency(b, 128).unwrap();
                prop_assert!(lb.lambda_sigma < la.lambda_sigma);
                prop_assert!((la.phi_sigma * (la.phi_sigma + 1.0) - la.lambda_sigma).abs() < 1e-10 * la.lambda_sigma.max(1.0));
                let peak = la.eigenfunction.iter().map(|s| s.1).fold(0.0, f64::max);
                prop_assert!((peak - 1.0).abs() < 1e-10);
                prop_assert!(la.eigenfunction.iter().all(|s| s.1 >= 0.0));
            }

            #[test]
            fn classification_ignores_normalization(theta in 0.3f64..6.0, gamma in 0.05f64..3.0, c in 0.1f64..10.0) {
                let cone = sector_frequency(theta).unwrap();
                let mut scaled = cone.clone();
                scaled.eigenfunction.iter_mut().for_each(|s| s.1 *= c);
                prop_assert_eq!(classify(&cone, gamma).unwrap(), classify(&scaled, gamma).unwrap());
            }
        }
    }
}
