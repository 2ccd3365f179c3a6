//! One-dimensional reductions of `−Δu = u^(−γ)`: the flat profile
//! `u″ = −u^(−γ)`, the radial annulus profile and the homogeneous angular
//! profile of a planar sector. These serve as oracles for the PDE solver.

use std::f64::consts::PI;

use crate::{Error, Result};

const QUAD_TOL: f64 = 1e-10;

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::integrate(f, a, b, QUAD_TOL * 1e-3 * (b - a)).integral
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]` by Newton steps
/// safeguarded with bisection.
fn invert_increasing(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let mut next = if d.is_finite() && d > 0.0 { x - fx / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * next.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Parameter of the flat profile: the initial slope `K` (γ < 1) or the
/// energy constant `C` (γ ≥ 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlatParam {
    K(f64),
    C(f64),
}

/// Which one-dimensional family a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileFamily {
    Flat(FlatParam),
    Annulus { inner_radius: f64, slope: f64 },
    Angular { theta: f64 },
}

/// Sampled one-dimensional profile.
#[derive(Debug, Clone)]
pub struct OdeProfile {
    pub gamma: f64,
    pub family: ProfileFamily,
    /// `(t, u(t))`, increasing in `t`.
    pub samples: Vec<(f64, f64)>,
    /// `2/(1+γ)`.
    pub beta: f64,
    pub validity: (f64, f64),
    pub peak: Option<f64>,
    pub t_star: Option<f64>,
}

/// Solution of `u″ = −u^(−γ)`, `u(0) = 0`, through the first integral
/// `(u′)² = G(u)`.
///
/// With a finite peak `u_max` (γ < 1, γ = 1, or γ > 1 with `C < 0`) one has
/// `G(s) = 2(u_max^{1−γ} − s^{1−γ})/(1−γ)` (`−2 ln(s/u_max)` for γ = 1), the
/// profile rises until `T* = F(u_max)` and is reflected, `u(t) = u(2T* − t)`.
/// For γ > 1 and `C ≥ 0` it rises forever.
#[derive(Debug, Clone)]
pub struct FlatProfile {
    gamma: f64,
    param: FlatParam,
    u_max: Option<f64>,
    t_star: Option<f64>,
}

impl FlatProfile {
    pub fn new(gamma: f64, param: FlatParam) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("γ must be positive"));
        }
        let u_max = match param {
            FlatParam::K(k) => {
                if gamma >= 1.0 {
                    return Err(Error::invalid("the slope parameter K applies to γ < 1; use C"));
                }
                if !(k > 0.0) {
                    return Err(Error::invalid("K must be positive"));
                }
                Some(((1.0 - gamma) * k * k / 2.0).powf(1.0 / (1.0 - gamma)))
            }
            FlatParam::C(c) => {
                if gamma < 1.0 {
                    return Err(Error::invalid("the energy parameter C applies to γ ≥ 1; use K"));
                }
                if !c.is_finite() {
                    return Err(Error::invalid("C must be finite"));
                }
                if gamma == 1.0 {
                    Some((c / 2.0).exp())
                } else if c < 0.0 {
                    Some((2.0 / ((gamma - 1.0) * -c)).powf(1.0 / (gamma - 1.0)))
                } else {
                    None
                }
            }
        };
        let mut p = Self {
            gamma,
            param,
            u_max,
            t_star: None,
        };
        if let Some(m) = u_max {
            p.t_star = Some(p.rise_time(m));
        }
        Ok(p)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn param(&self) -> FlatParam {
        self.param
    }

    /// Peak value, if the profile has a finite life.
    pub fn peak(&self) -> Option<f64> {
        self.u_max
    }

    /// Time of the peak.
    pub fn t_star(&self) -> Option<f64> {
        self.t_star
    }

    /// End of the life interval (`2T*` or `∞`).
    pub fn life(&self) -> f64 {
        self.t_star.map_or(f64::INFINITY, |t| 2.0 * t)
    }

    /// `(u′)²` as a function of `u`.
    pub fn g_of_u(&self, s: f64) -> f64 {
        let g = self.gamma;
        match self.u_max {
            Some(m) => {
                let l = (s / m).ln();
                if g == 1.0 {
                    -2.0 * l
                } else {
                    -2.0 * m.powf(1.0 - g) * ((1.0 - g) * l).exp_m1() / (1.0 - g)
                }
            }
            None => {
                let c = match self.param {
                    FlatParam::C(c) => c,
                    FlatParam::K(_) => unreachable!("K profiles always peak"),
                };
                2.0 * s.powf(1.0 - g) / (g - 1.0) + c
            }
        }
    }

    /// `(u′)²` at `u = u_max − w²`, free of cancellation for small `w`.
    fn g_near_peak(&self, w: f64) -> f64 {
        let m = self.u_max.expect("peaked profile");
        let l = (-(w * w) / m).ln_1p();
        let g = self.gamma;
        if g == 1.0 {
            -2.0 * l
        } else {
            -2.0 * m.powf(1.0 - g) * ((1.0 - g) * l).exp_m1() / (1.0 - g)
        }
    }

    /// `F(u) = ∫₀^u ds/√G(s)`, the time at which the rising branch reaches `u`.
    pub fn rise_time(&self, u: f64) -> f64 {
        match self.u_max {
            None => integrate(|s| 1.0 / self.g_of_u(s).sqrt(), 0.0, u),
            Some(m) => {
                let u = u.min(m);
                let half = 0.5 * m;
                if u <= half {
                    integrate(|s| 1.0 / self.g_of_u(s).sqrt(), 0.0, u)
                } else {
                    let base = integrate(|s| 1.0 / self.g_of_u(s).sqrt(), 0.0, half);
                    base + self.peak_integral((m - u).sqrt(), half.sqrt())
                }
            }
        }
    }

    /// `∫_{w0}^{w1} 2w dw/√G(u_max − w²)`.
    fn peak_integral(&self, w0: f64, w1: f64) -> f64 {
        integrate(|w| self.peak_integrand(w), w0, w1)
    }

    fn peak_integrand(&self, w: f64) -> f64 {
        if w == 0.0 {
            // limit 2/√|G′(u_max)|
            let m = self.u_max.expect("peaked profile");
            let gp = 2.0 * m.powf(-self.gamma);
            return 2.0 / gp.sqrt();
        }
        2.0 * w / self.g_near_peak(w).sqrt()
    }

    /// `u(t)`; zero for `t ≤ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let life = self.life();
        if t > life * (1.0 + 1e-14) {
            return Err(Error::ProfileExtinct { at: life, t_max: t });
        }
        match (self.u_max, self.t_star) {
            (Some(m), Some(ts)) => {
                let t = if t > ts { (2.0 * ts - t).max(0.0) } else { t };
                let half = 0.5 * m;
                let t_half = integrate(|s| 1.0 / self.g_of_u(s).sqrt(), 0.0, half);
                if t <= t_half {
                    Ok(invert_increasing(
                        |u| integrate(|s| 1.0 / self.g_of_u(s).sqrt(), 0.0, u),
                        |u| 1.0 / self.g_of_u(u).sqrt(),
                        t,
                        0.0,
                        half,
                    ))
                } else {
                    // remaining time to the peak as an increasing function of w
                    let w = invert_increasing(
                        |w| self.peak_integral(0.0, w),
                        |w| self.peak_integrand(w),
                        ts - t,
                        0.0,
                        half.sqrt(),
                    );
                    Ok(m - w * w)
                }
            }
            _ => {
                let mut hi = 1.0;
                while self.rise_time(hi) < t {
                    hi *= 2.0;
                }
                Ok(invert_increasing(
                    |u| self.rise_time(u),
                    |u| 1.0 / self.g_of_u(u).sqrt(),
                    t,
                    0.0,
                    hi,
                ))
            }
        }
    }

    /// `u′(t)` (infinite at `t = 0` when γ ≥ 1).
    pub fn derivative(&self, t: f64) -> Result<f64> {
        let u = self.eval(t)?;
        let slope = self.g_of_u(u).max(0.0).sqrt();
        Ok(match self.t_star {
            Some(ts) if t > ts => -slope,
            _ => slope,
        })
    }

    /// Cubic Hermite table on `[0, t_max]` for fast bulk evaluation.
    pub fn table(&self, t_max: f64, n: usize) -> Result<HermiteTable> {
        if t_max > self.life() {
            return Err(Error::ProfileExtinct {
                at: self.life(),
                t_max,
            });
        }
        let n = n.max(8);
        let mut t = Vec::with_capacity(n + 1);
        let mut u = Vec::with_capacity(n + 1);
        let mut du = Vec::with_capacity(n + 1);
        // quadratic grading resolves the t^{-γ} curvature at the origin
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let ti = t_max * s * s;
            t.push(ti);
            if i == 0 {
                u.push(0.0);
                du.push(if self.gamma < 1.0 { self.g_of_u(0.0).sqrt() } else { f64::NAN });
            } else {
                u.push(self.eval(ti)?);
                du.push(self.derivative(ti)?);
            }
        }
        HermiteTable::new(t, u, du)
    }
}

/// Samples `u` on a geometric grid of `n_samples` points in
/// `[1e-6·t_max, t_max]` plus the origin.
pub fn flat_profile(gamma: f64, param: FlatParam, t_max: f64, n_samples: usize) -> Result<OdeProfile> {
    if !(t_max > 0.0) {
        return Err(Error::invalid("t_max must be positive"));
    }
    if n_samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let p = FlatProfile::new(gamma, param)?;
    if t_max > p.life() * (1.0 + 1e-14) {
        return Err(Error::ProfileExtinct {
            at: p.life(),
            t_max,
        });
    }
    let mut samples = vec![(0.0, 0.0)];
    for k in (0..n_samples).rev() {
        let t = t_max * 10f64.powf(-6.0 * k as f64 / (n_samples - 1) as f64);
        samples.push((t, p.eval(t)?));
    }
    Ok(OdeProfile {
        gamma,
        family: ProfileFamily::Flat(param),
        samples,
        beta: 2.0 / (1.0 + gamma),
        validity: (0.0, p.life()),
        peak: p.peak(),
        t_star: p.t_star(),
    })
}

/// Piecewise cubic Hermite interpolant of tabulated values and slopes.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    t: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
}

impl HermiteTable {
    /// A `NaN` slope at the first node (infinite derivative) falls back to
    /// the secant on the first interval.
    pub fn new(t: Vec<f64>, u: Vec<f64>, mut du: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != u.len() || t.len() != du.len() {
            return Err(Error::invalid("table needs matching arrays of length ≥ 2"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("table abscissae must increase"));
        }
        if !du[0].is_finite() {
            du[0] = (u[1] - u[0]) / (t[1] - t[0]);
        }
        Ok(Self { t, u, du })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().expect("nonempty"))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        let k = self.t.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let s = ((x - t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.u[k] + h10 * h * self.du[k] + h01 * self.u[k + 1] + h11 * h * self.du[k + 1]
    }
}

/// Radial profile `ψ″ + ((n−1)/(r+t)) ψ′ = −ψ^(−γ)`, `ψ(0) = 0`, `ψ′(0) = k`
/// on an annulus with inner radius `r`.
#[derive(Debug, Clone)]
pub struct AnnulusProfile {
    gamma: f64,
    inner_radius: f64,
    slope: f64,
    dim: usize,
    t0: f64,
    table: HermiteTable,
}

impl AnnulusProfile {
    /// Integrates to `t_max` (planar, `n = 2`).
    pub fn new(gamma: f64, inner_radius: f64, slope: f64, t_max: f64) -> Result<Self> {
        Self::with_dimension(gamma, inner_radius, slope, t_max, 2)
    }

    pub fn with_dimension(gamma: f64, inner_radius: f64, slope: f64, t_max: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid("the annulus profile with finite slope needs 0 < γ < 1"));
        }
        if !(inner_radius > 0.0) || !(slope > 0.0) || !(t_max > 0.0) || dim < 1 {
            return Err(Error::invalid("inner radius, slope, t_max must be positive"));
        }
        let n1 = (dim - 1) as f64;
        let series = |t: f64| {
            let c = slope.powf(-gamma) / ((1.0 - gamma) * (2.0 - gamma));
            let u = slope * t - c * t.powf(2.0 - gamma) - n1 * slope * t * t / (2.0 * inner_radius);
            let du = slope - c * (2.0 - gamma) * t.powf(1.0 - gamma) - n1 * slope * t / inner_radius;
            (u, du)
        };
        let t0 = (1e-9 * t_max).min(1e-9);
        let (mut u, mut du) = series(t0);
        let mut t = t0;
        let rhs = |t: f64, u: f64, du: f64| (du, -u.powf(-gamma) - n1 * du / (inner_radius + t));
        let h_max = t_max / 4000.0;
        let mut ts = vec![0.0, t0];
        let mut us = vec![0.0, u];
        let mut dus = vec![slope, du];
        while t < t_max {
            let h = (0.02 * t).min(h_max).min(t_max - t);
            let (k1a, k1b) = rhs(t, u, du);
            let (k2a, k2b) = rhs(t + h / 2.0, u + h / 2.0 * k1a, du + h / 2.0 * k1b);
            let (k3a, k3b) = rhs(t + h / 2.0, u + h / 2.0 * k2a, du + h / 2.0 * k2b);
            let (k4a, k4b) = rhs(t + h, u + h * k3a, du + h * k3b);
            let nu = u + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            let ndu = du + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
            if !(nu > 0.0) || !nu.is_finite() {
                return Err(Error::ProfileExtinct { at: t + h, t_max });
            }
            t += h;
            u = nu;
            du = ndu;
            ts.push(t);
            us.push(u);
            dus.push(du);
        }
        Ok(Self {
            gamma,
            inner_radius,
            slope,
            dim,
            t0,
            table: HermiteTable::new(ts, us, dus)?,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.table.range().1
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// `ψ(t)`; zero for `t ≤ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        if t > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::DomainViolation(format!(
                "t = {t} beyond the integrated range {}",
                self.t_max()
            )));
        }
        if t < self.t0 {
            return Ok(self.slope * t);
        }
        Ok(self.table.eval(t))
    }
}

/// Samples of the annulus profile on a uniform grid of `t_max/4000`.
pub fn annulus_profile(gamma: f64, inner_radius: f64, slope_k: f64, t_max: f64) -> Result<OdeProfile> {
    let p = AnnulusProfile::new(gamma, inner_radius, slope_k, t_max)?;
    let n = 400;
    let samples = (0..=n)
        .map(|i| {
            let t = t_max * i as f64 / n as f64;
            p.eval(t).map(|u| (t, u))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OdeProfile {
        gamma,
        family: ProfileFamily::Annulus {
            inner_radius,
            slope: slope_k,
        },
        samples,
        beta: 2.0 / (1.0 + gamma),
        validity: (0.0, t_max),
        peak: None,
        t_star: None,
    })
}

/// Smallest slope `k` (to relative precision `1e-6`) for which the annulus
/// profile stays positive on `(0, t_max]`.
pub fn annulus_min_slope(gamma: f64, inner_radius: f64, t_max: f64) -> Result<f64> {
    let ok = |k: f64| AnnulusProfile::new(gamma, inner_radius, k, t_max).is_ok();
    let mut hi = 1.0;
    let mut n = 0;
    while !ok(hi) {
        hi *= 2.0;
        n += 1;
        if n > 60 {
            return Err(Error::Convergence {
                method: "annulus slope bracket",
                iterations: n,
                residual: hi,
            });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `K` for which the flat profile (γ < 1) lives on `[0, t_max]`.
/// Closed form via the scaling `T*(K) = K^{(1+γ)/(1−γ)} T*(1)`.
pub fn flat_min_slope(gamma: f64, t_max: f64) -> Result<f64> {
    let base = FlatProfile::new(gamma, FlatParam::K(1.0))?;
    let life = base.life();
    Ok((t_max / life).powf((1.0 - gamma) / (1.0 + gamma)))
}

/// Outcome of the angular shooting problem.
#[derive(Debug, Clone)]
pub enum AngularOutcome {
    Exists(AngularProfile),
    /// No peak height gives a half-width of `θ/2`: the half-width stayed
    /// below the target while increasing monotonically to a plateau.
    Nonexistent { sup_half_width: f64 },
    /// The bracket search ended without a decision.
    Inconclusive { last_half_width: f64 },
}

impl AngularOutcome {
    pub fn exists(&self) -> bool {
        matches!(self, AngularOutcome::Exists(_))
    }
}

/// Homogeneous profile `w` with `u = r^β w(ω)` solving `−Δu = u^(−γ)` in the
/// sector `{0 < ω < θ}`: `w″ + β²w = −w^(−γ)`, `w(0) = w(θ) = 0`.
///
/// The profile is even about `θ/2`. It is found by shooting from the peak
/// `w(θ/2) = w_m`, `w′(θ/2) = 0`; the energy
/// `(w′)²/2 + β²w²/2 + P(w)` with `P′ = w^(−γ)` is conserved, so the
/// half-width `∫₀^{w_m} dw/√Q(w)` is a quadrature.
#[derive(Debug, Clone)]
pub struct AngularProfile {
    pub gamma: f64,
    pub theta: f64,
    pub beta: f64,
    /// Peak value at `ω = θ/2`.
    pub peak: f64,
    /// `w′(0)` (infinite for γ ≥ 1).
    pub side_slope: f64,
    table: HermiteTable,
}

impl AngularProfile {
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if !(omega >= -1e-12 && omega <= self.theta + 1e-12) {
            return Err(Error::DomainViolation(format!("ω = {omega} outside [0, θ]")));
        }
        let w = omega.clamp(0.0, self.theta);
        let d = w.min(self.theta - w);
        if d <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.table.eval(d))
    }

    /// The homogeneous solution `r^β w(ω)`.
    pub fn homogeneous(&self, r: f64, omega: f64) -> Result<f64> {
        Ok(r.powf(self.beta) * self.eval(omega)?)
    }
}

struct AngularShooter {
    gamma: f64,
    beta: f64,
}

impl AngularShooter {
    fn potential_gap(&self, wm: f64, w: f64) -> f64 {
        // P(wm) − P(w)
        let g = self.gamma;
        if g == 1.0 {
            (wm / w).ln()
        } else {
            wm.powf(1.0 - g) * (-((1.0 - g) * (w / wm).ln()).exp_m1()) / (1.0 - g)
        }
    }

    /// `(w′)²` at height `w` below the peak `wm`.
    fn q(&self, wm: f64, w: f64) -> f64 {
        self.beta * self.beta * (wm - w) * (wm + w) + 2.0 * self.potential_gap(wm, w)
    }

    /// `(w′)²` at `w = wm − s²` without cancellation.
    fn q_near_peak(&self, wm: f64, s: f64) -> f64 {
        let s2 = s * s;
        let w = wm - s2;
        let g = self.gamma;
        let gap = if g == 1.0 {
            -(-s2 / wm).ln_1p()
        } else {
            wm.powf(1.0 - g) * (-((1.0 - g) * (-s2 / wm).ln_1p()).exp_m1()) / (1.0 - g)
        };
        self.beta * self.beta * s2 * (wm + w) + 2.0 * gap
    }

    fn peak_integrand(&self, wm: f64, s: f64) -> f64 {
        if s == 0.0 {
            let qp = 2.0 * (self.beta * self.beta * wm + wm.powf(-self.gamma));
            return 2.0 / qp.sqrt();
        }
        2.0 * s / self.q_near_peak(wm, s).sqrt()
    }

    /// Angle needed to climb from 0 to height `w ≤ wm / 2`.
    fn climb(&self, wm: f64, w: f64) -> f64 {
        integrate(|v| 1.0 / self.q(wm, v).sqrt(), 0.0, w)
    }

    fn half_width(&self, wm: f64) -> f64 {
        let half = 0.5 * wm;
        self.climb(wm, half) + integrate(|s| self.peak_integrand(wm, s), 0.0, half.sqrt())
    }

    fn profile(&self, theta: f64, wm: f64, n: usize) -> Result<AngularProfile> {
        let half = 0.5 * wm;
        let t_half = self.climb(wm, half);
        let hw = theta / 2.0;
        let mut t = Vec::with_capacity(n + 1);
        let mut u = Vec::with_capacity(n + 1);
        let mut du = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let d = hw * s * s;
            let w = if i == 0 {
                0.0
            } else if d <= t_half {
                invert_increasing(|w| self.climb(wm, w), |w| 1.0 / self.q(wm, w).sqrt(), d, 0.0, half)
            } else if i == n {
                wm
            } else {
                let rest = hw - d;
                let s = invert_increasing(
                    |s| integrate(|x| self.peak_integrand(wm, x), 0.0, s),
                    |s| self.peak_integrand(wm, s),
                    rest,
                    0.0,
                    half.sqrt(),
                );
                wm - s * s
            };
            t.push(d);
            u.push(w);
            du.push(if i == n { 0.0 } else { self.q(wm, w).max(0.0).sqrt() });
        }
        let side_slope = if self.gamma < 1.0 { self.q(wm, 0.0).sqrt() } else { f64::INFINITY };
        Ok(AngularProfile {
            gamma: self.gamma,
            theta,
            beta: self.beta,
            peak: wm,
            side_slope,
            table: HermiteTable::new(t, u, du)?,
        })
    }
}

enum PeakSearch {
    Found(f64),
    Nonexistent(f64),
    Inconclusive(f64),
}

fn angular_shooter(gamma: f64, theta: f64) -> Result<AngularShooter> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("γ must be positive"));
    }
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::invalid(format!("sector angle {theta} outside (0, 2π)")));
    }
    Ok(AngularShooter {
        gamma,
        beta: 2.0 / (1.0 + gamma),
    })
}

/// Bisection on the peak height with bracket doubling capped at 60.
fn search_peak(sh: &AngularShooter, theta: f64) -> PeakSearch {
    let target = theta / 2.0;
    let mut hi = 1.0;
    let mut last = sh.half_width(hi);
    let mut lo = 0.0;
    let mut monotone = true;
    let mut doublings = 0;
    while last < target {
        if doublings == 60 {
            let plateau = (sh.half_width(hi) - sh.half_width(hi / 2.0)).abs() < 1e-9;
            return if monotone && plateau {
                PeakSearch::Nonexistent(last)
            } else {
                PeakSearch::Inconclusive(last)
            };
        }
        lo = hi;
        hi *= 2.0;
        let next = sh.half_width(hi);
        if next < last * (1.0 - 1e-10) {
            monotone = false;
        }
        last = next;
        doublings += 1;
    }
    if lo == 0.0 {
        // shrink the lower end until it undershoots
        lo = hi;
        let mut n = 0;
        while sh.half_width(lo) >= target {
            lo /= 2.0;
            n += 1;
            if n > 200 {
                return PeakSearch::Inconclusive(last);
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sh.half_width(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    PeakSearch::Found(0.5 * (lo + hi))
}

/// Solves the angular problem; `n_shoot` is the size of the profile table.
pub fn angular_profile(gamma: f64, theta: f64, n_shoot: usize) -> Result<AngularOutcome> {
    let sh = angular_shooter(gamma, theta)?;
    Ok(match search_peak(&sh, theta) {
        PeakSearch::Found(wm) => AngularOutcome::Exists(sh.profile(theta, wm, n_shoot.max(64))?),
        PeakSearch::Nonexistent(h) => AngularOutcome::Nonexistent { sup_half_width: h },
        PeakSearch::Inconclusive(h) => AngularOutcome::Inconclusive { last_half_width: h },
    })
}

/// Existence flag of the angular problem without building the profile.
/// `None` when the search is inconclusive.
pub fn angular_exists(gamma: f64, theta: f64) -> Result<Option<bool>> {
    let sh = angular_shooter(gamma, theta)?;
    Ok(match search_peak(&sh, theta) {
        PeakSearch::Found(_) => Some(true),
        PeakSearch::Nonexistent(_) => Some(false),
        PeakSearch::Inconclusive(_) => None,
    })
}

/// Bisects on `θ ∈ [lo, hi]` for the angle where the existence flag flips.
/// Requires existence at `lo` and certified nonexistence at `hi`.
pub fn angular_threshold(gamma: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let flag = |t: f64| -> Result<bool> {
        angular_exists(gamma, t)?.ok_or(Error::Convergence {
            method: "angular shooting",
            iterations: 60,
            residual: t,
        })
    };
    if !flag(lo)? || flag(hi)? {
        return Err(Error::invalid("bracket must have existence at lo and nonexistence at hi"));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if flag(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classification of `A·t·√(ln(1/t))` against `u″ = −1/u` on `(0, 0.1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogProfileClass {
    Sub,
    Super,
    Neither,
}

#[derive(Debug, Clone)]
pub struct LogProfileReport {
    pub classes: Vec<(f64, LogProfileClass)>,
    /// Largest `A` that is a sub-solution on all of `(0, 0.1]` and smallest
    /// `A` that is a super-solution there.
    pub crossover: (f64, f64),
    /// Relative gap between the closed-form second derivative and a central
    /// difference at `t = 0.01`.
    pub identity_residual: f64,
}

/// Evaluates `(t√L)″ = −(1/2 + 1/(4L))/(t√L)`, `L = ln(1/t)`, and classifies
/// `A t √L`: sub-solution iff `A²(1/2 + 1/(4L)) ≤ 1` for all sampled `t`,
/// super-solution iff `≥ 1` (the limit `L → ∞` is included as a sample).
pub fn critical_log_profile_check(a_values: &[f64]) -> LogProfileReport {
    let t_hi = 0.1f64;
    let mut factors: Vec<f64> = (0..=300)
        .map(|k| {
            let t = t_hi * 10f64.powf(-(k as f64) / 10.0);
            0.5 + 0.25 / (1.0 / t).ln()
        })
        .collect();
    factors.push(0.5);
    let fmax = factors.iter().copied().fold(0.0, f64::max);
    let fmin = factors.iter().copied().fold(f64::INFINITY, f64::min);
    let classes = a_values
        .iter()
        .map(|&a| {
            let a2 = a * a;
            let c = if factors.iter().all(|f| a2 * f <= 1.0) {
                LogProfileClass::Sub
            } else if factors.iter().all(|f| a2 * f >= 1.0) {
                LogProfileClass::Super
            } else {
                LogProfileClass::Neither
            };
            (a, c)
        })
        .collect();
    let v = |t: f64| t * (1.0 / t).ln().sqrt();
    let t = 0.01;
    let d = 1e-3 * t;
    let fd = (v(t + d) - 2.0 * v(t) + v(t - d)) / (d * d);
    let l = (1.0 / t).ln();
    let exact = -(0.5 + 0.25 / l) / (t * l.sqrt());
    LogProfileReport {
        classes,
        crossover: ((1.0 / fmax).sqrt(), (1.0 / fmin).sqrt()),
        identity_residual: ((fd - exact) / exact).abs(),
    }
}
