use crate::{Error, Result};

/// Smallest admissible iteration count.
pub const MIN_K_MAX: usize = 1000;

/// Largest admissible iteration count.
pub const MAX_K_MAX: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// `σ_{k+1} = (1 − q) σ_k`
    Geometric,
    /// `σ_{k+1} = (1 − q/(k+1)) σ_k`
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecursionKind {
    /// `A_{k+1} = A_k + A_k^{−γ} + k^{−γφ/2}` with `φ = 2/(1+γ)`.
    Ak { gamma: f64, phi: f64, a1: f64 },
    Sigma { q_big: f64, q: f64, mode: SigmaMode },
}

/// Checkpoints of a scalar recursion and statistics of its scaled tail.
///
/// For `A_k` the scaled value is `A_k k^{−φ/2}`; for `σ_k` it is
/// `σ_k k^q / Q` (harmonic) or `σ_k / (Q (1 − q)^k)` (geometric).
#[derive(Debug, Clone)]
pub struct RecursionTrace {
    pub kind: RecursionKind,
    pub k_max: usize,
    /// `(k, value, scaled value)` at `k = 1..16`, powers of two and `k_max`.
    pub checkpoints: Vec<(usize, f64, f64)>,
    pub final_value: f64,
    pub scaled_final: f64,
    pub scaled_sup: f64,
    /// Scaled values at checkpoints `k ≥ √k_max` change monotonically.
    pub tail_monotone: bool,
    /// Largest relative deviation from the closed form (geometric mode only).
    pub closed_form_error: Option<f64>,
    /// The sequence increased at every step.
    pub increasing: bool,
}

fn is_checkpoint(k: usize, k_max: usize) -> bool {
    k <= 16 || k.is_power_of_two() || k == k_max
}

fn check_k(k_max: usize) -> Result<()> {
    if !(MIN_K_MAX..=MAX_K_MAX).contains(&k_max) {
        return Err(Error::invalid(format!("k_max = {k_max} outside [{MIN_K_MAX}, {MAX_K_MAX}]")));
    }
    Ok(())
}

fn tail_monotone(cp: &[(usize, f64, f64)], k_max: usize) -> bool {
    let start = (k_max as f64).sqrt() as usize;
    let tail: Vec<f64> = cp.iter().filter(|c| c.0 >= start).map(|c| c.2).collect();
    let up = tail.windows(2).all(|w| w[1] >= w[0]);
    let down = tail.windows(2).all(|w| w[1] <= w[0]);
    up || down
}

/// Iterates the growth recursion of the critical iteration from `A_1 = a1`
/// up to `k_max`.
pub fn ak_recursion(gamma: f64, a1: f64, k_max: usize) -> Result<RecursionTrace> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("γ = {gamma} must be positive")));
    }
    if !(a1 > 0.0 && a1.is_finite()) {
        return Err(Error::invalid(format!("A_1 = {a1} must be positive")));
    }
    check_k(k_max)?;
    let phi = 2.0 / (1.0 + gamma);
    let half = phi / 2.0;
    let forcing = -gamma * half;
    let mut a = a1;
    let mut cp = Vec::new();
    let mut sup = 0.0f64;
    let mut increasing = true;
    for k in 1..=k_max {
        let s = a * (k as f64).powf(-half);
        sup = sup.max(s);
        if is_checkpoint(k, k_max) {
            cp.push((k, a, s));
        }
        if k == k_max {
            break;
        }
        let next = a + a.powf(-gamma) + (k as f64).powf(forcing);
        if !next.is_finite() {
            return Err(Error::Overflow { k: k + 1 });
        }
        increasing &= next > a;
        a = next;
    }
    let last = *cp.last().expect("k_max ≥ 1");
    Ok(RecursionTrace {
        kind: RecursionKind::Ak { gamma, phi, a1 },
        k_max,
        tail_monotone: tail_monotone(&cp, k_max),
        checkpoints: cp,
        final_value: last.1,
        scaled_final: last.2,
        scaled_sup: sup,
        closed_form_error: None,
        increasing,
    })
}

/// Limit of `A_k k^{−φ/2}`: the positive root of `c φ/2 = c^{−γ} + 1`,
/// the power-law solution of `dA/dk = A^{−γ} + k^{−γφ/2}`.
pub fn ak_continuum_limit(gamma: f64) -> f64 {
    let half = 1.0 / (1.0 + gamma);
    let g = |c: f64| c * half - c.powf(-gamma) - 1.0;
    let (mut lo, mut hi) = (1e-6, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Iterates the contraction sequence `σ_k` from `σ_0 = Q`.
pub fn sigma_recursion(q_big: f64, q: f64, mode: SigmaMode, k_max: usize) -> Result<RecursionTrace> {
    if !(q_big > 0.0 && q_big <= 1.0) {
        return Err(Error::invalid(format!("Q = {q_big} outside (0, 1]")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q = {q} outside (0, 1)")));
    }
    if k_max == 0 || k_max > MAX_K_MAX {
        return Err(Error::invalid(format!("k_max = {k_max} outside [1, {MAX_K_MAX}]")));
    }
    let mut s = q_big;
    let mut cp = Vec::new();
    let mut sup = 0.0f64;
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        let scaled = match mode {
            SigmaMode::Geometric => {
                s *= 1.0 - q;
                let exact = q_big * (1.0 - q).powi(k as i32);
                let err = (s / exact - 1.0).abs();
                worst = worst.max(err);
                s / exact
            }
            SigmaMode::Harmonic => {
                s *= 1.0 - q / k as f64;
                s * (k as f64).powf(q) / q_big
            }
        };
        sup = sup.max(scaled);
        if is_checkpoint(k, k_max) {
            cp.push((k, s, scaled));
        }
    }
    let last = *cp.last().expect("k_max ≥ 1");
    Ok(RecursionTrace {
        kind: RecursionKind::Sigma { q_big, q, mode },
        k_max,
        tail_monotone: tail_monotone(&cp, k_max),
        checkpoints: cp,
        final_value: last.1,
        scaled_final: last.2,
        scaled_sup: sup,
        closed_form_error: (mode == SigmaMode::Geometric).then_some(worst),
        increasing: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn gamma_one_limit() {
        let t = ak_recursion(1.0, 10.0, 1_000_000).unwrap();
        let target = 1.0 + 3f64.sqrt();
        assert!((ak_continuum_limit(1.0) - target).abs() < 1e-12);
        assert!((t.scaled_final / target - 1.0).abs() < 0.02, "{}", t.scaled_final);
        assert!(t.increasing);
    }

    #[test]
    fn limit_is_independent_of_start() {
        let a = ak_recursion(1.0, 1.0, 1_000_000).unwrap().scaled_final;
        let b = ak_recursion(1.0, 100.0, 1_000_000).unwrap().scaled_final;
        let target = 1.0 + 3f64.sqrt();
        assert!((a / target - 1.0).abs() < 0.02 && (b / target - 1.0).abs() < 0.03, "{a} {b}");
    }

    #[test]
    fn scaled_tail_bounded_for_all_gammas() {
        for g in [1.0 / 3.0, 0.5, 1.0, 2.0] {
            let t = ak_recursion(g, 10.0, 1_000_000).unwrap();
            let c = ak_continuum_limit(g);
            assert!(t.scaled_sup.is_finite() && t.scaled_sup < 10.0 * c.max(10.0));
            assert!(t.tail_monotone, "γ = {g}");
            assert!((t.scaled_final / c - 1.0).abs() < 0.05, "γ = {g}: {} vs {c}", t.scaled_final);
        }
    }

    #[test]
    fn geometric_closed_form() {
        let t = sigma_recursion(1.0, 0.5, SigmaMode::Geometric, 10).unwrap();
        assert_eq!(t.final_value, 2f64.powi(-10));
        assert!(t.closed_form_error.unwrap() < 1e-14);
    }

    #[test]
    fn harmonic_tail_matches_gamma_ratio() {
        let k = 1_000_000usize;
        let t = sigma_recursion(0.7, 0.5, SigmaMode::Harmonic, k).unwrap();
        let lg = ln_gamma(k as f64 + 0.5) - ln_gamma(k as f64 + 1.0) - ln_gamma(0.5);
        let rel = (t.final_value / (0.7 * lg.exp()) - 1.0).abs();
        assert!(rel < 1e-7, "{rel}");
        let target = 1.0 / std::f64::consts::PI.sqrt();
        assert!((t.scaled_final / target - 1.0).abs() < 0.01);
    }

    #[test]
    fn harmonic_small_q_keeps_q() {
        let t = sigma_recursion(0.3, 1e-9, SigmaMode::Harmonic, 1000).unwrap();
        assert!((t.final_value / 0.3 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ak_recursion(1.0, 0.0, 1000).is_err());
        assert!(ak_recursion(1.0, 1.0, 10).is_err());
        assert!(sigma_recursion(1.5, 0.5, SigmaMode::Geometric, 10).is_err());
        assert!(sigma_recursion(1.0, 1.0, SigmaMode::Harmonic, 10).is_err());
        assert!(matches!(ak_recursion(2.0, 1e-300, 1000), Err(Error::Overflow { .. })));
    }

    proptest! {
        #[test]
        fn geometric_mode_exact(q_big in 0.01f64..1.0, q in 0.01f64..0.99, k in 1usize..30) {
            let t = sigma_recursion(q_big, q, SigmaMode::Geometric, k).unwrap();
            prop_assert!(t.closed_form_error.unwrap() < 1e-14);
        }

        #[test]
        fn ak_strictly_increasing(g in 0.1f64..3.0, a1 in 0.1f64..100.0) {
            prop_assert!(ak_recursion(g, a1, 2000).unwrap().increasing);
        }
    }
}
