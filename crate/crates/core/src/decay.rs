//! Decay-model fits and envelope certification for `R(t)` and the dephasing
//! distance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{bracket, to_f64, Scalar};

/// Values at or below this are excluded from fits.
pub const DEFAULT_FLOOR: f64 = 1e-12;
/// Minimum number of usable points in a fit window.
pub const MIN_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    /// `C e^{-λt}`.
    Exponential,
    /// `C ⟨t⟩^{-γ}`.
    Polynomial,
}

impl DecayKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Some(DecayKind::Exponential),
            "polynomial" | "poly" => Some(DecayKind::Polynomial),
            _ => None,
        }
    }

    fn abscissa<T: Scalar>(self, t: T) -> T {
        match self {
            DecayKind::Exponential => t,
            DecayKind::Polynomial => bracket(t).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayModel<T> {
    pub kind: DecayKind,
    /// `λ̂` or `γ̂`.
    pub rate: T,
    /// `Ĉ`.
    pub amplitude: T,
    pub window: (T, T),
    /// `max |log model - log data|` over the fitted points.
    pub residual: T,
    pub points: usize,
}

impl<T: Scalar> DecayModel<T> {
    /// Model weight `e^{rate·t}` or `⟨t⟩^{rate}`, so that `path·weight` is
    /// bounded when the model holds.
    pub fn weight(&self, t: T) -> T {
        match self.kind {
            DecayKind::Exponential => (self.rate * t).exp(),
            DecayKind::Polynomial => bracket(t).powf(self.rate),
        }
    }

    pub fn eval(&self, t: T) -> T {
        self.amplitude / self.weight(t)
    }

    pub fn with_rate(mut self, rate: T) -> Self {
        self.rate = rate;
        self
    }
}

/// Least squares of `ln v` against `t` (exponential) or `ln⟨t⟩` (polynomial)
/// over `window`, using only points above `floor`.
pub fn fit_decay<T: Scalar>(
    times: &[T],
    values: &[T],
    kind: DecayKind,
    window: (T, T),
    floor: T,
) -> Result<DecayModel<T>> {
    let (a, b) = window;
    let mut pts: Vec<(T, T)> = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < a || t > b {
            continue;
        }
        if v.is_nan() || v < T::zero() {
            return Err(Error::NonPositiveValues);
        }
        if v > floor {
            pts.push((kind.abscissa(t), v.ln()));
        }
    }
    if pts.len() < MIN_POINTS {
        return Err(Error::InsufficientData { usable: pts.len(), needed: MIN_POINTS });
    }
    let n: T = T::from_usize(pts.len()).unwrap_or_else(T::one);
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::InsufficientData { usable: 1, needed: MIN_POINTS });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts.iter().fold(T::zero(), |m, p| m.max((intercept + slope * p.0 - p.1).abs()));
    Ok(DecayModel { kind, rate: -slope, amplitude: intercept.exp(), window, residual, points: pts.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelope<T> {
    /// `max_t path(t)·w_model(t)`: the smallest `C` with `path ≤ C/w_model`
    /// on the grid.
    pub c_min: T,
    /// Time at which `c_min` is attained.
    pub argmax: T,
    pub pass: bool,
}

/// Envelope with the fitted rate. Passes when `C_min` is finite and the
/// weighted path does not grow: its maximum over the second half of the grid
/// is at most 1.1 times its maximum over the first half.
pub fn certify_envelope<T: Scalar>(times: &[T], values: &[T], model: &DecayModel<T>) -> Envelope<T> {
    let t_end = times.last().copied().unwrap_or_else(T::zero);
    let half = t_end / (T::one() + T::one());
    let mut c_min = T::zero();
    let mut argmax = T::zero();
    let mut early = T::zero();
    let mut late = T::zero();
    let mut finite = true;
    for (&t, &v) in times.iter().zip(values) {
        let p = v.abs() * model.weight(t);
        if !p.is_finite() {
            finite = false;
            continue;
        }
        if p > c_min {
            c_min = p;
            argmax = t;
        }
        if t < half {
            early = early.max(p);
        } else {
            late = late.max(p);
        }
    }
    let pass = finite && c_min.is_finite() && to_f64(late) <= 1.1 * to_f64(early);
    Envelope { c_min: if finite { c_min } else { T::infinity() }, argmax, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(t_max: f64) -> Vec<f64> {
        (0..=(t_max / 0.05).round() as usize).map(|i| i as f64 * 0.05).collect()
    }

    #[test]
    fn exact_models_are_recovered() {
        let t = grid(20.0);
        let v: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let m = fit_decay(&t, &v, DecayKind::Exponential, (2.0, 15.0), 1e-12).unwrap();
        assert_abs_diff_eq!(m.rate, 2.0, epsilon = 1e-6);
        assert!(m.residual <= 1e-9);
        let t = grid(40.0);
        let v: Vec<f64> = t.iter().map(|t| bracket(*t).powi(-2)).collect();
        let m = fit_decay(&t, &v, DecayKind::Polynomial, (5.0, 40.0), 1e-12).unwrap();
        assert_abs_diff_eq!(m.rate, 2.0, epsilon = 1e-6);
        assert!(m.residual <= 1e-9);
    }

    #[test]
    fn fit_errors() {
        let t = grid(1.0);
        let v = vec![1.0; t.len()];
        assert!(matches!(
            fit_decay(&t, &v, DecayKind::Exponential, (0.0, 0.3), 1e-12),
            Err(Error::InsufficientData { .. })
        ));
        let mut v = vec![1.0; t.len()];
        v[3] = -1.0;
        assert_eq!(fit_decay(&t, &v, DecayKind::Exponential, (0.0, 1.0), 1e-12), Err(Error::NonPositiveValues));
        let z = vec![0.0; t.len()];
        assert!(matches!(
            fit_decay(&t, &z, DecayKind::Exponential, (0.0, 1.0), 1e-12),
            Err(Error::InsufficientData { usable: 0, .. })
        ));
    }

    #[test]
    fn envelopes() {
        let t = grid(20.0);
        let v: Vec<f64> = t.iter().map(|t| (-0.7 * t).exp()).collect();
        let m = fit_decay(&t, &v, DecayKind::Exponential, (2.0, 15.0), 1e-12).unwrap();
        let e = certify_envelope(&t, &v, &m);
        assert!(e.pass);
        assert_abs_diff_eq!(e.c_min, 1.0, epsilon = 1e-9);

        let p: Vec<f64> = t.iter().map(|t| bracket(*t).powi(-2)).collect();
        let wrong = DecayModel { kind: DecayKind::Exponential, rate: 1.0, amplitude: 1.0, window: (2.0, 15.0), residual: 0.0, points: 0 };
        let e = certify_envelope(&t, &p, &wrong);
        assert!(!e.pass);
        assert_eq!(e.argmax, 20.0);
        let longer = grid(30.0);
        let p2: Vec<f64> = longer.iter().map(|t| bracket(*t).powi(-2)).collect();
        assert!(certify_envelope(&longer, &p2, &wrong).c_min > e.c_min);
    }

    #[test]
    fn wrong_class_has_larger_residual() {
        let t = grid(40.0);
        let p: Vec<f64> = t.iter().map(|t| 0.05 * bracket(*t).powi(-2)).collect();
        let good = fit_decay(&t, &p, DecayKind::Polynomial, (5.0, 40.0), 1e-12).unwrap();
        let bad = fit_decay(&t, &p, DecayKind::Exponential, (5.0, 40.0), 1e-12).unwrap();
        assert!(bad.residual >= 10.0 * good.residual.max(1e-12));
        let e: Vec<f64> = grid(20.0).iter().map(|t| 0.05 * (-t).exp()).collect();
        let good = fit_decay(&grid(20.0), &e, DecayKind::Exponential, (2.0, 15.0), 1e-12).unwrap();
        let bad = fit_decay(&grid(20.0), &e, DecayKind::Polynomial, (2.0, 15.0), 1e-12).unwrap();
        assert!(bad.residual >= 10.0 * good.residual.max(1e-12));
    }

    proptest! {
        #[test]
        fn shrinking_the_rate_keeps_a_pass(rate in 0.2f64..2.0, shrink in 0.0f64..1.0, noise in 0.0f64..0.3) {
            let t = grid(20.0);
            let v: Vec<f64> = t.iter().map(|t| (-rate * t).exp() * (1.0 + noise * (3.0 * t).sin())).collect();
            let m = DecayModel { kind: DecayKind::Exponential, rate, amplitude: 1.0, window: (2.0, 15.0), residual: 0.0, points: 0 };
            if certify_envelope(&t, &v, &m).pass {
                prop_assert!(certify_envelope(&t, &v, &m.with_rate(rate * shrink)).pass);
            }
        }
    }
}
