//! Time weights defining the `X_λ` (exponential) and `Y_γ` (polynomial)
//! sup-norms, with closed-form tail integrals.

use crate::error::{Error, Result};
use crate::num::{bracket, count, lit, to_f64, Magnitude, Scalar};
use statrs::function::beta::{beta, beta_reg};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightSpec<T> {
    /// `w(t) = e^{λt}`.
    Exponential { lambda: T },
    /// `w(t) = ⟨t⟩^γ`.
    Polynomial { gamma: T },
}

impl<T: Scalar> WeightSpec<T> {
    pub fn exponential(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidWeight(format!("λ must be positive, got {}", lambda)));
        }
        Ok(WeightSpec::Exponential { lambda })
    }

    /// Polynomial weight. Any `γ > 0` is accepted here (the deviation weight
    /// `⟨t⟩^{γ-1}` needs it); the tail integral is infinite for `γ ≤ 1`.
    pub fn polynomial(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidWeight(format!("γ must be positive, got {}", gamma)));
        }
        Ok(WeightSpec::Polynomial { gamma })
    }

    pub fn rate(&self) -> T {
        match *self {
            WeightSpec::Exponential { lambda } => lambda,
            WeightSpec::Polynomial { gamma } => gamma,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            WeightSpec::Exponential { .. } => "exponential",
            WeightSpec::Polynomial { .. } => "polynomial",
        }
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        match *self {
            WeightSpec::Exponential { lambda } => (lambda * t).exp(),
            WeightSpec::Polynomial { gamma } => bracket(t).powf(gamma),
        }
    }

    /// Weight for the characteristic deviation `Θ - θ - ωt`: the same
    /// exponential rate, or one power less for polynomial weights.
    pub fn deviation(&self) -> Self {
        match *self {
            WeightSpec::Exponential { lambda } => WeightSpec::Exponential { lambda },
            WeightSpec::Polynomial { gamma } => WeightSpec::Polynomial { gamma: gamma - T::one() },
        }
    }

    /// `∫_T^∞ w(s)^{-1} ds`.
    pub fn tail_integral(&self, from: T) -> T {
        let from = from.max(T::zero());
        match *self {
            WeightSpec::Exponential { lambda } => (-lambda * from).exp() / lambda,
            WeightSpec::Polynomial { gamma } => polynomial_tail(gamma, from),
        }
    }

    /// `C_w = sup_{t ≥ 0} w_dev(t) ∫_t^∞ w(s)^{-1} ds`, the constant in
    /// `|∫_t^∞ R| ≤ C_w ‖R‖_w / w_dev(t)`. Equals `1/λ` for exponential
    /// weights and `π/2` for `γ = 2`.
    pub fn contraction_constant(&self) -> T {
        match *self {
            WeightSpec::Exponential { lambda } => T::one() / lambda,
            WeightSpec::Polynomial { gamma } => {
                if gamma <= T::one() {
                    return T::infinity();
                }
                let dev = self.deviation();
                let mut best = T::one() / (gamma - T::one());
                let step: T = lit(0.01);
                for i in 0..=5000usize {
                    let t = step * count::<T>(i);
                    best = best.max(dev.eval(t) * self.tail_integral(t));
                }
                best
            }
        }
    }
}

/// `∫_T^∞ ⟨s⟩^{-γ} ds = ∫_{atan T}^{π/2} cos^{γ-2} φ dφ`.
fn polynomial_tail<T: Scalar>(gamma: T, from: T) -> T {
    if gamma <= T::one() {
        return T::infinity();
    }
    let p = gamma - lit(2.0);
    if p >= T::zero() && p == p.round() && p <= lit(64.0) {
        let p = p.to_usize().unwrap_or(0);
        return cos_power_tail(p, from.atan());
    }
    // Non-integer powers: x = 1/(1+T²) maps the tail to ½·B(x; (γ-1)/2, 1/2).
    let a = to_f64((gamma - T::one()) / lit(2.0));
    let x = to_f64(T::one() / (T::one() + from * from));
    lit(0.5 * beta_reg(a, 0.5, x) * beta(a, 0.5))
}

fn cos_power_tail<T: Scalar>(p: usize, a: T) -> T {
    let half_pi = T::FRAC_PI_2();
    match p {
        0 => half_pi - a,
        1 => T::one() - a.sin(),
        _ => {
            let pf: T = count(p);
            -a.cos().powi(p as i32 - 1) * a.sin() / pf + (pf - T::one()) / pf * cos_power_tail(p - 2, a)
        }
    }
}

/// `max_i |v_i| w(t_i)` over a sampled path.
pub fn weighted_norm<T: Scalar, V: Magnitude<T>>(w: &WeightSpec<T>, times: &[T], values: &[V]) -> Result<T> {
    if values.is_empty() || times.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(times
        .iter()
        .zip(values)
        .map(|(&t, v)| v.magnitude() * w.eval(t))
        .fold(T::zero(), |acc, x| if x > acc || x.is_nan() { x } else { acc }))
}

/// Rigorous bound `norm · ∫_T^∞ w^{-1}` on `|∫_T^∞ R(s) b(s) ds|` for
/// `‖R‖_w ≤ norm` and `|b| ≤ 1`.
pub fn tail_bound<T: Scalar>(from: T, norm_value: T, w: &WeightSpec<T>) -> T {
    if norm_value == T::zero() {
        return T::zero();
    }
    norm_value * w.tail_integral(from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use crate::quadrature::gauss_legendre_on;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn norms_of_model_paths() {
        let t = grid(401, 0.05);
        let lam = 0.7;
        let w = WeightSpec::exponential(lam).unwrap();
        let h: Vec<f64> = t.iter().map(|t| (-lam * t).exp()).collect();
        assert_abs_diff_eq!(weighted_norm(&w, &t, &h).unwrap(), 1.0, epsilon = 1e-12);
        let h2: Vec<f64> = t.iter().map(|t| 2.0 * (-2.0 * lam * t).exp()).collect();
        assert_abs_diff_eq!(weighted_norm(&w, &t, &h2).unwrap(), 2.0, epsilon = 1e-15);
        let wp = WeightSpec::polynomial(2.5).unwrap();
        let hp: Vec<f64> = t.iter().map(|t| bracket(*t).powf(-2.5)).collect();
        assert_abs_diff_eq!(weighted_norm(&wp, &t, &hp).unwrap(), 1.0, epsilon = 1e-12);
        let empty: Vec<f64> = vec![];
        assert_eq!(weighted_norm(&w, &t, &empty), Err(Error::EmptyPath));
    }

    #[test]
    fn tail_bound_values() {
        let w = WeightSpec::exponential(1.0).unwrap();
        assert_abs_diff_eq!(tail_bound(0.0, 1.0, &w), 1.0, epsilon = 1e-15);
        assert_eq!(tail_bound(3.0, 0.0, &w), 0.0);
        // Numeric oracle for T = 20, norm 0.05, λ = 0.9: ∫_20^∞ e^{-0.9 s} ds.
        let w = WeightSpec::exponential(0.9).unwrap();
        let (s, ws) = gauss_legendre_on::<f64>(80, 20.0, 80.0);
        let numeric: f64 = 0.05 * s.iter().zip(&ws).map(|(s, w)| w * (-0.9 * s).exp()).sum::<f64>();
        let b = tail_bound(20.0, 0.05, &w);
        assert_relative_eq!(b, numeric, max_relative = 1e-12);
        assert_relative_eq!(b, 8.46e-10, max_relative = 1e-3);
    }

    #[test]
    fn polynomial_tails_match_reference_values() {
        // ∫_T^∞ (1+s²)^{-γ/2} ds to 20 digits (adaptive quadrature, 30-digit arithmetic).
        let table = [
            (2.5, [1.1981402347355922074, 0.74284536003281264906, 0.058386191424189225211, 0.0026343494461347044091]),
            (3.7, [0.83518725484980788497, 0.39885133240658740539, 0.004605663573630268201, 0.000017489841460904023623]),
        ];
        for (gamma, values) in table {
            let w = WeightSpec::polynomial(gamma).unwrap();
            for (from, v) in [0.0, 0.5, 5.0, 40.0].into_iter().zip(values) {
                assert_relative_eq!(w.tail_integral(from), v, max_relative = 1e-12);
            }
        }
        for &gamma in &[2.0, 3.0, 4.0] {
            let w = WeightSpec::polynomial(gamma).unwrap();
            for &from in &[0.0_f64, 0.5, 5.0, 40.0] {
                let (u, wu) = gauss_legendre_on::<f64>(200, from.atan(), std::f64::consts::FRAC_PI_2);
                let numeric: f64 = u.iter().zip(&wu).map(|(u, w)| w * u.cos().powf(gamma - 2.0)).sum();
                assert_relative_eq!(w.tail_integral(from), numeric, max_relative = 1e-12);
            }
        }
        assert!(WeightSpec::polynomial(1.0_f64).unwrap().tail_integral(0.0).is_infinite());
    }

    #[test]
    fn contraction_constants() {
        assert_abs_diff_eq!(WeightSpec::exponential(0.9).unwrap().contraction_constant(), 1.0 / 0.9);
        let c = WeightSpec::polynomial(2.0).unwrap().contraction_constant();
        assert_abs_diff_eq!(c, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn deviation_weight_drops_one_power() {
        let w = WeightSpec::polynomial(2.0).unwrap();
        assert_eq!(w.deviation(), WeightSpec::Polynomial { gamma: 1.0 });
        let e = WeightSpec::exponential(0.4).unwrap();
        assert_eq!(e.deviation(), e);
    }

    #[test]
    fn refinement_does_not_lose_the_peak() {
        // sup of a smooth bump sampled on nested grids converges from below.
        let w = WeightSpec::exponential(0.5).unwrap();
        let f = |t: f64| t * (-t).exp();
        let mut prev = 0.0;
        for n in [21usize, 41, 81, 161] {
            let t = grid(n, 10.0 / (n - 1) as f64);
            let v: Vec<f64> = t.iter().map(|&t| f(t)).collect();
            let norm = weighted_norm(&w, &t, &v).unwrap();
            assert!(norm >= prev - 1e-15);
            prev = norm;
        }
        // exact sup of t e^{-t/2} is 2/e at t = 2
        assert_abs_diff_eq!(prev, 2.0 / std::f64::consts::E, epsilon = 1e-3);
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous_and_subadditive(
            a in prop::collection::vec(-1.0f64..1.0, 32),
            b in prop::collection::vec(-1.0f64..1.0, 32),
            c in -5.0f64..5.0,
            lam in 0.1f64..2.0,
        ) {
            let t = grid(32, 0.1);
            let w = WeightSpec::exponential(lam).unwrap();
            let na = weighted_norm(&w, &t, &a).unwrap();
            let nb = weighted_norm(&w, &t, &b).unwrap();
            let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert!((weighted_norm(&w, &t, &ca).unwrap() - c.abs() * na).abs() <= 1e-12 * (1.0 + na));
            prop_assert!(weighted_norm(&w, &t, &sum).unwrap() <= na + nb + 1e-12);
        }

        #[test]
        fn tail_bound_monotone_and_linear(t1 in 0.0f64..30.0, dt in 0.0f64..10.0, n in 0.0f64..3.0, g in 2.0f64..5.0) {
            for w in [WeightSpec::exponential(0.8).unwrap(), WeightSpec::polynomial(g).unwrap()] {
                prop_assert!(tail_bound(t1 + dt, 1.0, &w) <= tail_bound(t1, 1.0, &w) * (1.0 + 1e-12));
                let lin = tail_bound(t1, n, &w) - n * tail_bound(t1, 1.0, &w);
                prop_assert!(lin.abs() <= 1e-12 * (1.0 + n));
            }
        }
    }
}
