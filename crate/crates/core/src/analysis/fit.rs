use nalgebra::{DMatrix, DVector};

use crate::mesh::{Field, Mesh, MeshKind};
use crate::{Error, Result};

/// Smallest admissible window ratio `t_max/t_min` (1.5 decades).
pub const MIN_WINDOW_RATIO: f64 = 31.622776601683793;

/// Lower window edge in units of the local mesh size.
pub const FLOOR_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthModel {
    /// `log u = log c + α log t`
    Pure,
    /// `log u = log c + α log t + p log ln(2/t)`
    LogAugmented,
}

/// Result of a growth-rate fit on a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub alpha: f64,
    /// Exponent of `ln(2/t)`; zero for the pure model.
    pub log_power: f64,
    pub log_constant: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Root mean square of the residuals of `log u`.
    pub rms: f64,
    pub model: GrowthModel,
}

impl GrowthFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.log_constant + self.alpha * t.ln() + self.log_power * (2.0 / t).ln().ln()).exp()
    }
}

/// Least-squares growth fit on samples `(t, u)` with `t` decreasing
/// geometrically.
///
/// With `phi_fixed` the exponent of the log-augmented model is pinned and
/// only `(log c, p)` are fitted. Without it the log-augmented model fits all
/// three parameters.
pub fn fit_growth(samples: &[(f64, f64)], model: GrowthModel, phi_fixed: Option<f64>) -> Result<GrowthFit> {
    if samples.len() < 12 {
        return Err(Error::invalid(format!("growth fit needs at least 12 samples, got {}", samples.len())));
    }
    for &(t, u) in samples {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::invalid(format!("nonpositive sample u({t}) = {u}")));
        }
        if !(t > 0.0 && t < 2.0) {
            return Err(Error::invalid(format!("sample depth {t} outside (0, 2)")));
        }
    }
    let q = samples[1].0 / samples[0].0;
    if !(q < 1.0) {
        return Err(Error::invalid("degenerate window: depths must decrease"));
    }
    for w in samples.windows(2) {
        if ((w[1].0 / w[0].0) / q - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("depths are not a geometric sequence"));
        }
    }
    let t_max = samples[0].0;
    let t_min = samples[samples.len() - 1].0;
    if t_max / t_min < MIN_WINDOW_RATIO * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "degenerate window [{t_min:.3e}, {t_max:.3e}] spans less than 1.5 decades"
        )));
    }
    let n = samples.len();
    let lt: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ll: Vec<f64> = samples.iter().map(|s| (2.0 / s.0).ln().ln()).collect();
    let mut y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let cols: Vec<Vec<f64>> = match (model, phi_fixed) {
        (GrowthModel::Pure, _) => vec![vec![1.0; n], lt.clone()],
        (GrowthModel::LogAugmented, Some(phi)) => {
            for (yi, l) in y.iter_mut().zip(&lt) {
                *yi -= phi * l;
            }
            vec![vec![1.0; n], ll.clone()]
        }
        (GrowthModel::LogAugmented, None) => vec![vec![1.0; n], lt.clone(), ll.clone()],
    };
    let (coef, rms) = least_squares(&cols, &y)?;
    let (alpha, log_power) = match (model, phi_fixed) {
        (GrowthModel::Pure, _) => (coef[1], 0.0),
        (GrowthModel::LogAugmented, Some(phi)) => (phi, coef[1]),
        (GrowthModel::LogAugmented, None) => (coef[1], coef[2]),
    };
    if !rms.is_finite() {
        return Err(Error::IllConditioned("growth fit residual is not finite".into()));
    }
    Ok(GrowthFit {
        alpha,
        log_power,
        log_constant: coef[0],
        t_min,
        t_max,
        rms,
        model,
    })
}

/// Column-scaled least squares by SVD; returns coefficients and the RMS
/// residual.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let k = cols.len();
    let scale: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let a = DMatrix::from_fn(n, k, |i, j| cols[j][i] / scale[j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::IllConditioned("growth fit design matrix is rank deficient".into()));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::IllConditioned(format!("least squares failed: {e}")))?;
    let r = &a * &x - &b;
    let rms = (r.norm_squared() / n as f64).sqrt();
    Ok(((0..k).map(|j| x[j] / scale[j]).collect(), rms))
}

/// Geometric depths `t_max, t_max q, …, t_min` with `n` samples.
pub fn geometric_depths(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    let q = (t_min / t_max).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| if k + 1 == n { t_min } else { t_max * q.powi(k as i32) }).collect()
}

/// Mesh size at distance `t` from the vertex of a polar mesh, or the
/// nominal spacing of other meshes.
pub fn local_mesh_size(mesh: &Mesh, t: f64) -> f64 {
    match mesh.polar_layout() {
        Some(l) => {
            let r = &l.radii;
            let m = r.partition_point(|&x| x <= t).clamp(1, r.len() - 1);
            let dr = (r[m] - r[m - 1]).max(r[(m + 1).min(r.len() - 1)] - r[m]);
            dr.max(t * l.d_omega())
        }
        None => mesh.h().unwrap_or(0.0),
    }
}

/// Samples `u` at geometric depths along the ray from the vertex of a polar
/// mesh in direction `omega`, enforcing the admissible fit window.
pub fn sample_ray(u: &Field, mesh: &Mesh, omega: f64, t_min: f64, t_max: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if mesh.kind() != MeshKind::Polar {
        return Err(Error::invalid("ray sampling needs a polar mesh"));
    }
    let l = mesh.polar_layout().expect("polar");
    if t_max > l.radius / 4.0 * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "window top {t_max} exceeds a quarter of the sector radius {}",
            l.radius
        )));
    }
    let floor = FLOOR_FACTOR * local_mesh_size(mesh, t_min);
    if t_min < floor {
        return Err(Error::invalid(format!(
            "window bottom {t_min:.3e} below {FLOOR_FACTOR}·local mesh size ({floor:.3e})"
        )));
    }
    geometric_depths(t_min, t_max, n)
        .into_iter()
        .map(|t| Ok((t, mesh.sample_polar(u, t, omega)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        geometric_depths(2f64.powi(-9), 0.125, 25).into_iter().map(|t| (t, f(t))).collect()
    }

    #[test]
    fn pure_power_is_recovered() {
        let s = synth(|t| t.powf(1.5));
        let f = fit_growth(&s, GrowthModel::Pure, None).unwrap();
        assert!((f.alpha - 1.5).abs() < 1e-10);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn log_power_with_fixed_exponent() {
        let s = synth(|t| t.powf(1.5) * (2.0 / t).ln().powf(0.75));
        let f = fit_growth(&s, GrowthModel::LogAugmented, Some(1.5)).unwrap();
        assert!((f.log_power - 0.75).abs() < 1e-10);
        assert!((f.predict(0.01) / (0.01f64.powf(1.5) * 200f64.ln().powf(0.75)) - 1.0).abs() < 1e-9);
        let free = fit_growth(&s, GrowthModel::LogAugmented, None).unwrap();
        assert!((free.alpha - 1.5).abs() < 1e-8 && (free.log_power - 0.75).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_samples() {
        let mut s = synth(|t| t);
        assert!(fit_growth(&s[..10], GrowthModel::Pure, None).is_err());
        s[3].1 = 0.0;
        assert!(fit_growth(&s, GrowthModel::Pure, None).is_err());
        let narrow: Vec<_> = geometric_depths(0.1, 0.125, 20).into_iter().map(|t| (t, t)).collect();
        assert!(fit_growth(&narrow, GrowthModel::Pure, None).is_err());
        let mut uneven = synth(|t| t);
        uneven[5].0 *= 1.01;
        assert!(fit_growth(&uneven, GrowthModel::Pure, None).is_err());
    }

    proptest! {
        #[test]
        fn synthetic_powers_exact(alpha in 0.2f64..3.0, c in 0.1f64..10.0) {
            let s = synth(|t| c * t.powf(alpha));
            let f = fit_growth(&s, GrowthModel::Pure, None).unwrap();
            prop_assert!((f.alpha - alpha).abs() < 1e-10);
            prop_assert!((f.log_constant - c.ln()).abs() < 1e-9);
        }
    }
}
