//! Gauss–Legendre rules, cubic interpolation on uniform grids, and the
//! product-integration rule used for `∫ e^{iωs} A(s) ds` on the time grid.
//!
//! The product rule integrates the oscillation `e^{iωs}` exactly against a
//! local cubic interpolant of the slowly varying amplitude `A`. For `ω = 0` it
//! is a fourth-order Newton–Cotes-type rule; for `|ω| dt ≫ 1` it stays exact
//! on the oscillation, where a plain trapezoid rule would alias.

use num_complex::Complex;

use crate::num::{count, lit, Scalar};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf: T = count(n);
    let half: T = lit(0.5);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::PI() * (count::<T>(i) + lit(0.75)) / (nf + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= lit::<T>(2.0) * T::epsilon() {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != T::zero() {
            dp = d;
        }
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf: T = count(k);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf: T = count(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Scalar>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / lit(2.0);
    let mid = (a + b) / lit(2.0);
    (
        x.into_iter().map(|x| mid + half * x).collect(),
        w.into_iter().map(|w| w * half).collect(),
    )
}

/// `M_k(x) = ∫_0^1 e^{ixτ} τ^k dτ` for `k = 0..=3`.
pub fn oscillatory_moments<T: Scalar>(x: T) -> [Complex<T>; 4] {
    let mut m = [Complex::new(T::zero(), T::zero()); 4];
    if x.abs() < T::one() {
        // Σ_n (ix)^n / (n! (n + k + 1))
        let ix = Complex::new(T::zero(), x);
        for (k, slot) in m.iter_mut().enumerate() {
            let mut term = Complex::new(T::one(), T::zero());
            let mut acc = Complex::new(T::zero(), T::zero());
            for n in 0..40usize {
                let contrib = term / count::<T>(n + k + 1);
                acc = acc + contrib;
                if contrib.norm() <= T::epsilon() * lit(1e-3) {
                    break;
                }
                term = term * ix / count::<T>(n + 1);
            }
            *slot = acc;
        }
    } else {
        let e = Complex::new(x.cos(), x.sin());
        let ix = Complex::new(T::zero(), x);
        m[0] = (e - T::one()) / ix;
        for k in 1..4 {
            m[k] = (e - m[k - 1] * count::<T>(k)) / ix;
        }
    }
    m
}

/// Monomial coefficients of the four cubic Lagrange basis polynomials on the
/// given nodes: `basis[m][p]` is the coefficient of `τ^p` in `L_m`.
fn lagrange_monomials<T: Scalar>(nodes: [T; 4]) -> [[T; 4]; 4] {
    let mut out = [[T::zero(); 4]; 4];
    for m in 0..4 {
        let mut poly = [T::one(), T::zero(), T::zero(), T::zero()];
        let mut denom = T::one();
        let mut deg = 0usize;
        for (j, &node) in nodes.iter().enumerate() {
            if j == m {
                continue;
            }
            // poly *= (τ - node)
            let mut next = [T::zero(); 4];
            for p in 0..=deg {
                next[p + 1] += poly[p];
                next[p] -= poly[p] * node;
            }
            poly = next;
            deg += 1;
            denom *= nodes[m] - node;
        }
        for p in 0..4 {
            out[m][p] = poly[p] / denom;
        }
    }
    out
}

/// Weights of `∫_0^1 e^{ixτ} A(τ) dτ ≈ Σ_m c_m A(τ_m)` for one stencil.
fn stencil_weights<T: Scalar>(moments: &[Complex<T>; 4], nodes: [T; 4]) -> [Complex<T>; 4] {
    let basis = lagrange_monomials(nodes);
    let mut w = [Complex::new(T::zero(), T::zero()); 4];
    for m in 0..4 {
        for p in 0..4 {
            w[m] = w[m] + moments[p] * basis[m][p];
        }
    }
    w
}

/// Product-integration weights for one frequency `ω` and step `h`.
#[derive(Clone, Copy, Debug)]
pub struct ProductRule<T> {
    /// Interval `[s_j, s_{j+1}]` with stencil `j-1..=j+2`.
    pub interior: [Complex<T>; 4],
    /// First interval, stencil `0..=3`.
    pub first: [Complex<T>; 4],
    /// Last interval, stencil `n-4..=n-1`.
    pub last: [Complex<T>; 4],
    /// `e^{iωh}`.
    pub step_phase: Complex<T>,
}

impl<T: Scalar> ProductRule<T> {
    pub fn new(omega: T, h: T) -> Self {
        let x = omega * h;
        let mom = oscillatory_moments(x);
        let one = T::one();
        let two: T = lit(2.0);
        let three: T = lit(3.0);
        ProductRule {
            interior: stencil_weights(&mom, [-one, T::zero(), one, two]),
            first: stencil_weights(&mom, [T::zero(), one, two, three]),
            last: stencil_weights(&mom, [-two, -one, T::zero(), one]),
            step_phase: Complex::new(x.cos(), x.sin()),
        }
    }

    /// Cumulative tail integrals `out[i] = ∫_{s_i}^{s_{n-1}} e^{i(θ + ωs)} A(s) ds`
    /// on the uniform grid `s_i = i h`, with `phase0 = e^{iθ}` and `omega` the
    /// frequency this rule was built for. Needs at least four samples.
    pub fn tail_integrals(
        &self,
        h: T,
        omega: T,
        phase0: Complex<T>,
        amplitude: &[Complex<T>],
        out: &mut [Complex<T>],
    ) {
        let n = amplitude.len();
        assert!(n >= 4, "product rule needs at least four samples");
        assert_eq!(out.len(), n);
        let zero = Complex::new(T::zero(), T::zero());
        out[n - 1] = zero;
        let mut acc = zero;
        for j in (0..n - 1).rev() {
            let (w, base) = if j == 0 {
                (&self.first, 0)
            } else if j == n - 2 {
                (&self.last, n - 4)
            } else {
                (&self.interior, j - 1)
            };
            let local = w[0] * amplitude[base]
                + w[1] * amplitude[base + 1]
                + w[2] * amplitude[base + 2]
                + w[3] * amplitude[base + 3];
            let s = h * count::<T>(j);
            let arg = omega * s;
            let phase = phase0 * Complex::new(arg.cos(), arg.sin());
            acc = acc + phase * local * h;
            out[j] = acc;
        }
    }
}

/// Real cumulative tail integrals `∫_{s_i}^{s_{n-1}} v(s) ds` with the `ω = 0`
/// product rule.
pub fn real_tail_integrals<T: Scalar>(h: T, values: &[T]) -> Vec<T> {
    let rule = ProductRule::new(T::zero(), h);
    let amp: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut out = vec![Complex::new(T::zero(), T::zero()); values.len()];
    rule.tail_integrals(h, T::zero(), Complex::new(T::one(), T::zero()), &amp, &mut out);
    out.into_iter().map(|c| c.re).collect()
}

/// Four-point Lagrange interpolation of samples on `t_i = i h` at time `t`.
pub fn cubic_interpolate<T: Scalar>(values: &[Complex<T>], h: T, t: T) -> Complex<T> {
    let n = values.len();
    assert!(n >= 4);
    let pos = t / h;
    let mut j = pos.floor().to_isize().unwrap_or(0);
    j = j.clamp(0, n as isize - 2);
    let base = (j - 1).clamp(0, n as isize - 4) as usize;
    let tau = pos - count::<T>(base);
    let nodes = [T::zero(), T::one(), lit(2.0), lit(3.0)];
    let mut acc = Complex::new(T::zero(), T::zero());
    for m in 0..4 {
        let mut l = T::one();
        for (q, &node) in nodes.iter().enumerate() {
            if q != m {
                l *= (tau - node) / (nodes[m] - node);
            }
        }
        acc = acc + values[base + m] * l;
    }
    acc
}

/// Periodic spectral derivative of uniformly sampled values on `[0, 2π)`.
pub fn periodic_derivative<T: Scalar>(values: &[T]) -> Vec<T> {
    let m = values.len();
    let mf: T = count(m);
    let tau = T::TAU();
    let kmax = m / 2;
    let mut coef = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let mut c = Complex::new(T::zero(), T::zero());
        for (j, &v) in values.iter().enumerate() {
            let arg = -tau * count::<T>(k * j % m) / mf;
            c = c + Complex::new(arg.cos(), arg.sin()) * v;
        }
        coef.push(c / mf);
    }
    let mut out = vec![T::zero(); m];
    for (j, slot) in out.iter_mut().enumerate() {
        let theta = tau * count::<T>(j) / mf;
        let mut acc = T::zero();
        for (k, c) in coef.iter().enumerate().skip(1) {
            // Nyquist mode has no well-defined derivative; drop it.
            if m % 2 == 0 && k == kmax {
                continue;
            }
            let kf: T = count(k);
            let e = Complex::new((kf * theta).cos(), (kf * theta).sin());
            // d/dθ [c e^{ikθ} + conj] = 2 Re(i k c e^{ikθ})
            acc += lit::<T>(2.0) * (Complex::new(T::zero(), kf) * *c * e).re;
        }
        *slot = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 129] {
            let (x, w) = gauss_legendre::<f64>(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert_abs_diff_eq!(integral, exact, epsilon = 1e-12);
            for pair in x.windows(2) {
                assert!(pair[0] < pair[1]);
            }
        }
    }

    #[test]
    fn gauss_legendre_single_precision() {
        let (x, w) = gauss_legendre::<f32>(20);
        let s: f32 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert!((s - 2.0 * 1f32.sin()).abs() < 1e-5);
    }

    #[test]
    fn moments_match_quadrature() {
        for &x in &[0.0, 0.3, 0.999, 1.0, 2.5, 40.0, -7.0] {
            let m = oscillatory_moments::<f64>(x);
            let (nodes, w) = gauss_legendre_on::<f64>(200, 0.0, 1.0);
            for k in 0..4 {
                let mut acc = Complex::new(0.0, 0.0);
                for (t, wt) in nodes.iter().zip(&w) {
                    acc += Complex::new((x * t).cos(), (x * t).sin()) * t.powi(k as i32) * *wt;
                }
                assert_abs_diff_eq!(m[k].re, acc.re, epsilon = 1e-14);
                assert_abs_diff_eq!(m[k].im, acc.im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn product_rule_is_exact_for_cubic_amplitudes() {
        let h = 0.1;
        let n = 30;
        for &omega in &[0.0, 1.7, 250.0] {
            let rule = ProductRule::new(omega, h);
            let amp: Vec<Complex<f64>> = (0..n)
                .map(|i| {
                    let s = i as f64 * h;
                    Complex::new(1.0 - s + 0.3 * s * s * s, 0.2 * s * s)
                })
                .collect();
            let mut out = vec![Complex::new(0.0, 0.0); n];
            rule.tail_integrals(h, omega, Complex::new(1.0, 0.0), &amp, &mut out);
            // Reference by fine Gauss-Legendre on [s_i, s_end].
            for i in [0usize, 7, n - 3, n - 2] {
                let (a, b) = (i as f64 * h, (n - 1) as f64 * h);
                let (nodes, w) = gauss_legendre_on::<f64>(400, a, b);
                let mut acc = Complex::new(0.0, 0.0);
                for (s, wt) in nodes.iter().zip(&w) {
                    let p = Complex::new((omega * s).cos(), (omega * s).sin());
                    acc += p * Complex::new(1.0 - s + 0.3 * s * s * s, 0.2 * s * s) * *wt;
                }
                assert_abs_diff_eq!(out[i].re, acc.re, epsilon = 1e-12);
                assert_abs_diff_eq!(out[i].im, acc.im, epsilon = 1e-12);
            }
            assert_eq!(out[n - 1], Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn product_rule_fourth_order_on_smooth_data() {
        // ∫_t^T e^{-s} ds on successively refined grids: error ratio ≈ 16.
        let err = |n: usize| {
            let h = 4.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| (-(i as f64) * h).exp()).collect();
            let out = real_tail_integrals(h, &v);
            (out[0] - (1.0 - (-4.0f64).exp())).abs()
        };
        let r = err(41) / err(81);
        assert!(r > 12.0 && r < 20.0, "ratio {r}");
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let h = 0.25;
        let vals: Vec<Complex<f64>> =
            (0..10).map(|i| { let t = i as f64 * h; Complex::new(t * t * t - t, 2.0 * t) }).collect();
        for &t in &[0.0, 0.1, 1.13, 2.0, 2.24] {
            let v = cubic_interpolate(&vals, h, t);
            assert_abs_diff_eq!(v.re, t * t * t - t, epsilon = 1e-13);
            assert_abs_diff_eq!(v.im, 2.0 * t, epsilon = 1e-13);
        }
    }

    #[test]
    fn spectral_derivative_of_trig_polynomial() {
        let m = 16;
        let vals: Vec<f64> = (0..m)
            .map(|j| {
                let th = std::f64::consts::TAU * j as f64 / m as f64;
                0.3 * th.sin() + 0.1 * (3.0 * th).cos()
            })
            .collect();
        let d = periodic_derivative(&vals);
        for (j, v) in d.iter().enumerate() {
            let th = std::f64::consts::TAU * j as f64 / m as f64;
            assert_abs_diff_eq!(*v, 0.3 * th.cos() - 0.3 * (3.0 * th).sin(), epsilon = 1e-13);
        }
    }
}
