//! Complex order-parameter paths `z(t) = R(t) e^{iφ(t)}` on a uniform time grid.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{count, lit, to_f64, Scalar};
use crate::quadrature::cubic_interpolate;
use crate::weight::{weighted_norm, WeightSpec};

/// Below this modulus the phase is reported as absent.
pub const PHASE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct OrderParameterPath<T> {
    dt: T,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> OrderParameterPath<T> {
    pub fn new(dt: T, values: Vec<Complex<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPath);
        }
        if !(dt > T::zero()) {
            return Err(Error::InvalidGrid("path step must be positive".into()));
        }
        Ok(OrderParameterPath { dt, values })
    }

    pub fn zeros(dt: T, n: usize) -> Self {
        OrderParameterPath { dt, values: vec![Complex::new(T::zero(), T::zero()); n.max(1)] }
    }

    pub fn from_fn(dt: T, n: usize, f: impl Fn(T) -> Complex<T>) -> Self {
        OrderParameterPath { dt, values: (0..n.max(1)).map(|i| f(dt * count::<T>(i))).collect() }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t_max(&self) -> T {
        self.dt * count::<T>(self.values.len() - 1)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.values.len()).map(|i| self.dt * count::<T>(i)).collect()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn modulus(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// `φ(t)`, absent where `R < 1e-12`.
    pub fn phase(&self) -> Vec<Option<T>> {
        let floor: T = lit(PHASE_FLOOR);
        self.values.iter().map(|z| if z.norm() < floor { None } else { Some(z.arg()) }).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == T::zero() && z.im == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn weighted_norm(&self, w: &WeightSpec<T>) -> T {
        weighted_norm(w, &self.times(), &self.values).unwrap_or_else(|_| T::zero())
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `self - other` on a shared grid.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() || self.dt != other.dt {
            return Err(Error::GridMismatch);
        }
        Ok(OrderParameterPath {
            dt: self.dt,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Cubic interpolation at an arbitrary `t ∈ [0, t_max]`.
    pub fn at(&self, t: T) -> Result<Complex<T>> {
        let slack = lit::<T>(1e-9) * self.dt;
        if !(t >= -slack && t <= self.t_max() + slack) {
            return Err(Error::OutsideGrid(to_f64(t)));
        }
        if self.values.len() < 4 {
            let i = (t / self.dt).round().to_usize().unwrap_or(0).min(self.values.len() - 1);
            return Ok(self.values[i]);
        }
        Ok(cubic_interpolate(&self.values, self.dt, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn modulus_phase_and_norm() {
        let p = OrderParameterPath::from_fn(0.1, 11, |t: f64| Complex::from_polar((-t).exp() * 0.5, 0.3));
        assert_abs_diff_eq!(p.modulus()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.phase()[3].unwrap(), 0.3, epsilon = 1e-14);
        let w = WeightSpec::exponential(1.0).unwrap();
        assert_abs_diff_eq!(p.weighted_norm(&w), 0.5, epsilon = 1e-14);
        let z = OrderParameterPath::<f64>::zeros(0.1, 11);
        assert!(z.phase().iter().all(|p| p.is_none()));
        assert!(z.is_zero());
    }

    #[test]
    fn difference_requires_matching_grids() {
        let a = OrderParameterPath::<f64>::zeros(0.1, 11);
        let b = OrderParameterPath::<f64>::zeros(0.1, 12);
        assert_eq!(a.difference(&b), Err(Error::GridMismatch));
        assert!(OrderParameterPath::<f64>::new(0.1, vec![]).is_err());
    }

    #[test]
    fn interpolation_and_bounds() {
        let p = OrderParameterPath::from_fn(0.05, 401, |t: f64| Complex::new((-t).exp(), 0.0));
        assert_abs_diff_eq!(p.at(1.234).unwrap().re, (-1.234f64).exp(), epsilon = 1e-7);
        assert!(p.at(20.5).is_err());
        assert!(p.at(-0.1).is_err());
    }
}
