//! Characteristics `Θ_n(t, θ, ω)` of one outer iterate, stored as the
//! deviation `D = Θ - θ - ωt`, and the two independent ways of computing them:
//! whole-trajectory Picard iteration of
//!
//! `F(Θ)(t) = θ + ωt + μ ∫_t^T R(s) sin(Θ(s) - φ(s)) ds`
//!
//! and backward RK4 on `Θ̇ = ω - μ R sin(Θ - φ)` from `Θ(T) = θ + ωT`.
//! Both truncate the improper integral at `T = t_max`; the discarded tail is
//! bounded by [`crate::weight::tail_bound`] and reported, never approximated.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::num::{count, lit, to_f64, Scalar};
use crate::path::OrderParameterPath;
use crate::quadrature::{cubic_interpolate, real_tail_integrals};
use crate::weight::{tail_bound, WeightSpec};

/// `Θ_n` on the full (time × label) grid.
#[derive(Clone, Debug)]
pub struct CharacteristicField<T> {
    grid: Arc<Grid<T>>,
    iterate: usize,
    /// `deviation[label · n_t + i] = D(t_i, label)`.
    deviation: Vec<T>,
}

impl<T: Scalar> CharacteristicField<T> {
    /// Free flow `Θ = θ + ωt`.
    pub fn free(grid: Arc<Grid<T>>) -> Self {
        let n = grid.n_labels() * grid.n_times();
        CharacteristicField { grid, iterate: 0, deviation: vec![T::zero(); n] }
    }

    pub fn from_deviation(grid: Arc<Grid<T>>, iterate: usize, deviation: Vec<T>) -> Result<Self> {
        if deviation.len() != grid.n_labels() * grid.n_times() {
            return Err(Error::GridMismatch);
        }
        Ok(CharacteristicField { grid, iterate, deviation })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn iterate(&self) -> usize {
        self.iterate
    }

    pub fn with_iterate(mut self, n: usize) -> Self {
        self.iterate = n;
        self
    }

    pub fn deviation(&self) -> &[T] {
        &self.deviation
    }

    pub fn trajectory(&self, label: usize) -> &[T] {
        let n = self.grid.n_times();
        &self.deviation[label * n..(label + 1) * n]
    }

    #[inline]
    pub fn deviation_at(&self, i: usize, label: usize) -> T {
        self.deviation[label * self.grid.n_times() + i]
    }

    /// `Θ(t_i)` along `label`.
    pub fn theta_at(&self, i: usize, label: usize) -> T {
        let (theta, omega) = self.grid.label(label);
        theta + omega * self.grid.time(i) + self.deviation_at(i, label)
    }

    pub fn is_finite(&self) -> bool {
        self.deviation.iter().all(|d| d.is_finite())
    }

    /// `max |D(t_i, label)| w(t_i)`.
    pub fn weighted_norm(&self, w: &WeightSpec<T>) -> T {
        let weights: Vec<T> = self.grid.times().into_iter().map(|t| w.eval(t)).collect();
        weighted_sup(&self.deviation, &weights)
    }

    pub fn sup_norm(&self) -> T {
        let ones = vec![T::one(); self.grid.n_times()];
        weighted_sup(&self.deviation, &ones)
    }

    /// Weighted norm of `self - other` (sup norm when `w` is `None`).
    pub fn distance(&self, other: &Self, w: Option<&WeightSpec<T>>) -> Result<T> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let weights: Vec<T> = match w {
            Some(w) => self.grid.times().into_iter().map(|t| w.eval(t)).collect(),
            None => vec![T::one(); self.grid.n_times()],
        };
        let diff: Vec<T> = self.deviation.iter().zip(&other.deviation).map(|(a, b)| *a - *b).collect();
        Ok(weighted_sup(&diff, &weights))
    }
}

/// NaN-propagating max, so non-finite fields cannot hide behind a norm.
#[inline]
pub(crate) fn nan_max<T: Scalar>(a: T, b: T) -> T {
    if a.is_nan() || b.is_nan() {
        T::nan()
    } else if a > b {
        a
    } else {
        b
    }
}

/// `max |v[label·n + i]| w[i]`; max is exact, so the parallel reduction is
/// deterministic.
pub(crate) fn weighted_sup<T: Scalar>(values: &[T], weights: &[T]) -> T {
    let n = weights.len();
    values
        .par_chunks(n)
        .map(|col| col.iter().zip(weights).fold(T::zero(), |m, (v, w)| nan_max(m, v.abs() * *w)))
        .reduce(T::zero, nan_max)
}

fn check_path<T: Scalar>(grid: &Grid<T>, z: &OrderParameterPath<T>) -> Result<()> {
    if z.len() != grid.n_times() || z.dt() != grid.dt() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `G(t_i) = ∫_{t_i}^T conj(z(s)) e^{i(θ + ωs + D(s))} ds` along one label.
fn label_integral<T: Scalar>(
    grid: &Grid<T>,
    label: usize,
    zc: &[Complex<T>],
    dev: &[T],
    amp: &mut [Complex<T>],
    out: &mut [Complex<T>],
) {
    let (theta, omega) = grid.label(label);
    for ((a, z), d) in amp.iter_mut().zip(zc).zip(dev) {
        let (s, c) = d.sin_cos();
        *a = z * Complex::new(c, s);
    }
    let (s, c) = theta.sin_cos();
    grid.rule(grid.omega_index(label)).tail_integrals(grid.dt(), omega, Complex::new(c, s), amp, out);
}

/// Runs `f(label, D, G)` for every label in parallel, results in label order.
pub(crate) fn map_label_integrals<T: Scalar, R: Send>(
    field: &CharacteristicField<T>,
    z: &OrderParameterPath<T>,
    f: impl Fn(usize, &[T], &[Complex<T>]) -> R + Sync + Send,
) -> Result<Vec<R>> {
    let grid = field.grid.as_ref();
    check_path(grid, z)?;
    let zc: Vec<Complex<T>> = z.values().iter().map(|v| v.conj()).collect();
    let n = grid.n_times();
    Ok(field
        .deviation
        .par_chunks(n)
        .enumerate()
        .map_init(
            || (vec![Complex::new(T::zero(), T::zero()); n], vec![Complex::new(T::zero(), T::zero()); n]),
            |(amp, out), (label, dev)| {
                label_integral(grid, label, &zc, dev, amp, out);
                f(label, dev, out)
            },
        )
        .collect())
}

fn sweep_into<T: Scalar>(grid: &Grid<T>, zc: &[Complex<T>], mu: T, input: &[T], output: &mut [T]) {
    let n = grid.n_times();
    output.par_chunks_mut(n).enumerate().for_each_init(
        || (vec![Complex::new(T::zero(), T::zero()); n], vec![Complex::new(T::zero(), T::zero()); n]),
        |(amp, out), (label, dst)| {
            label_integral(grid, label, zc, &input[label * n..(label + 1) * n], amp, out);
            for (d, g) in dst.iter_mut().zip(out.iter()) {
                *d = mu * g.im;
            }
        },
    );
}

/// One application of the Picard map `F` driven by `z_prev`.
pub fn apply_f<T: Scalar>(
    field: &CharacteristicField<T>,
    z_prev: &OrderParameterPath<T>,
    mu: T,
) -> Result<CharacteristicField<T>> {
    let grid = field.grid.as_ref();
    check_path(grid, z_prev)?;
    let mut out = vec![T::zero(); field.deviation.len()];
    if mu != T::zero() && !z_prev.is_zero() {
        let zc: Vec<Complex<T>> = z_prev.values().iter().map(|v| v.conj()).collect();
        sweep_into(grid, &zc, mu, &field.deviation, &mut out);
    }
    Ok(CharacteristicField { grid: field.grid.clone(), iterate: field.iterate, deviation: out })
}

/// `Γ = ∫_t^T R sin(Θ - φ)` and `β = ∫_t^T R` for one field.
#[derive(Clone, Debug)]
pub struct GammaField<T> {
    /// Same layout as [`CharacteristicField::deviation`].
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Scalar> GammaField<T> {
    /// `max (|Γ| - β)`; nonpositive when `|Γ| ≤ β` holds everywhere.
    pub fn max_excess(&self) -> T {
        let n = self.beta.len();
        self.gamma
            .chunks(n)
            .flat_map(|col| col.iter().zip(&self.beta).map(|(g, b)| g.abs() - *b))
            .fold(T::neg_infinity(), nan_max)
    }

    /// `|Γ| ≤ β` up to quadrature round-off.
    pub fn bounded(&self) -> bool {
        let scale = self.beta.first().copied().unwrap_or_else(T::zero);
        self.max_excess() <= lit::<T>(1e-10) * scale + lit::<T>(1e-14)
    }

    pub fn beta_nonincreasing(&self) -> bool {
        let scale = self.beta.first().copied().unwrap_or_else(T::zero);
        self.beta.windows(2).all(|w| w[1] <= w[0] + lit::<T>(1e-12) * scale)
    }
}

pub fn gamma_field<T: Scalar>(field: &CharacteristicField<T>, z: &OrderParameterPath<T>) -> Result<GammaField<T>> {
    let cols = map_label_integrals(field, z, |_, _, g| g.iter().map(|g| g.im).collect::<Vec<T>>())?;
    let r = z.modulus();
    Ok(GammaField { gamma: cols.concat(), beta: real_tail_integrals(field.grid.dt(), &r) })
}

/// Per-solve record of the Picard iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport<T> {
    pub sweeps: usize,
    /// Final sup-norm change `‖Θ^{(m+1)} - Θ^{(m)}‖_∞`.
    pub residual: T,
    /// `‖Θ^{(m+1)} - Θ^{(m)}‖_w / ‖Θ^{(m)} - Θ^{(m-1)}‖_w` in the deviation
    /// weight, recorded while the denominator is above round-off.
    pub ratios: Vec<T>,
    /// `μ C_w ‖R‖_w`, with `C_w = 1/λ` for exponential weights.
    pub predicted_factor: T,
    /// `‖R‖_w` of the driving path.
    pub driver_norm: T,
    /// `μ ∫_T^∞ R` bound on the truncated phase.
    pub tail_bound: T,
}

impl<T: Scalar> ContractionReport<T> {
    pub fn max_ratio(&self) -> Option<T> {
        self.ratios.iter().copied().reduce(nan_max)
    }

    /// Every measured ratio is at most `(1 + slack)·predicted_factor`.
    pub fn within_bound(&self, slack: T) -> bool {
        self.ratios.iter().all(|r| *r <= self.predicted_factor * (T::one() + slack))
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolver<T> {
    pub weight: WeightSpec<T>,
    pub tol: T,
    pub max_sweeps: usize,
}

impl<T: Scalar> FixedPointSolver<T> {
    pub fn new(weight: WeightSpec<T>, tol: T, max_sweeps: usize) -> Self {
        FixedPointSolver { weight, tol, max_sweeps }
    }

    /// Iterates `F` from `warm` (or free flow) until the sup-norm change drops
    /// below `tol`.
    pub fn solve(
        &self,
        grid: &Arc<Grid<T>>,
        z_prev: &OrderParameterPath<T>,
        mu: T,
        warm: Option<&CharacteristicField<T>>,
    ) -> Result<(CharacteristicField<T>, ContractionReport<T>)> {
        check_path(grid, z_prev)?;
        let w = &self.weight;
        let r_norm = z_prev.weighted_norm(w);
        let factor = mu.abs() * w.contraction_constant() * r_norm;
        if !(factor < T::one()) {
            return Err(Error::NonContractive { factor: to_f64(factor) });
        }
        let mut report = ContractionReport {
            sweeps: 1,
            residual: T::zero(),
            ratios: Vec::new(),
            predicted_factor: factor,
            driver_norm: r_norm,
            tail_bound: mu.abs() * tail_bound(grid.t_max(), r_norm, w),
        };
        if mu == T::zero() || z_prev.is_zero() {
            return Ok((CharacteristicField::free(grid.clone()), report));
        }

        let n = grid.n_times();
        let dev_w: Vec<T> = {
            let wd = w.deviation();
            grid.times().into_iter().map(|t| wd.eval(t)).collect()
        };
        let ones = vec![T::one(); n];
        let zc: Vec<Complex<T>> = z_prev.values().iter().map(|v| v.conj()).collect();
        let mut current = match warm {
            Some(f) if f.grid.same_as(grid) => f.deviation.clone(),
            _ => vec![T::zero(); grid.n_labels() * n],
        };
        let mut next = vec![T::zero(); current.len()];
        let mut diff = vec![T::zero(); current.len()];
        // Differences below this are round-off and give meaningless ratios.
        let floor = lit::<T>(256.0) * T::epsilon() * factor.max(T::epsilon()) * r_norm.max(T::one());
        let mut prev_w: Option<T> = None;
        for sweep in 1..=self.max_sweeps {
            sweep_into(grid, &zc, mu, &current, &mut next);
            diff.par_iter_mut()
                .zip(next.par_iter().zip(current.par_iter()))
                .for_each(|(d, (a, b))| *d = *a - *b);
            let change_sup = weighted_sup(&diff, &ones);
            let change_w = weighted_sup(&diff, &dev_w);
            if !change_sup.is_finite() {
                return Err(Error::MaxSweepsExceeded {
                    sweeps: sweep,
                    residual: to_f64(change_sup),
                    tol: to_f64(self.tol),
                });
            }
            if let Some(p) = prev_w {
                if p > floor && change_w > floor {
                    report.ratios.push(change_w / p);
                }
            }
            prev_w = Some(change_w);
            std::mem::swap(&mut current, &mut next);
            report.sweeps = sweep;
            report.residual = change_sup;
            if change_sup < self.tol {
                let field = CharacteristicField { grid: grid.clone(), iterate: 0, deviation: current };
                return Ok((field, report));
            }
        }
        Err(Error::MaxSweepsExceeded {
            sweeps: self.max_sweeps,
            residual: to_f64(report.residual),
            tol: to_f64(self.tol),
        })
    }
}

/// Free-function form of [`FixedPointSolver::solve`] started from free flow.
pub fn solve_fixed_point<T: Scalar>(
    grid: &Arc<Grid<T>>,
    z_prev: &OrderParameterPath<T>,
    mu: T,
    w: WeightSpec<T>,
    tol: T,
    max_sweeps: usize,
) -> Result<(CharacteristicField<T>, ContractionReport<T>)> {
    FixedPointSolver::new(w, tol, max_sweeps).solve(grid, z_prev, mu, None)
}

/// Largest `|ω| h` allowed in one RK4 substep.
const OSCILLATION_STEP: f64 = 0.5;
/// Substep cap per grid step; exceeding it rejects the step size.
const MAX_SUBSTEPS: usize = 100_000;

/// Backward RK4 for `D' = -μ Im(conj z(t) e^{i(θ + ωt + D)})`, `D(T) = 0`.
/// Each grid step is split into `⌈|ω| dt / 0.5⌉` substeps so the free
/// rotation is resolved; `z` between grid points is cubic-interpolated.
pub fn backward_ode_oracle<T: Scalar>(
    grid: &Arc<Grid<T>>,
    z_prev: &OrderParameterPath<T>,
    mu: T,
) -> Result<CharacteristicField<T>> {
    check_path(grid, z_prev)?;
    let mut field = CharacteristicField::free(grid.clone());
    if mu == T::zero() || z_prev.is_zero() {
        return Ok(field);
    }
    let n = grid.n_times();
    let m_theta = grid.theta_nodes().len();
    let dt = grid.dt();
    let zv = z_prev.values();
    let substeps: Vec<usize> = grid
        .omega_nodes()
        .iter()
        .map(|w| {
            let s = (w.abs() * dt / lit(OSCILLATION_STEP)).ceil().to_usize().unwrap_or(usize::MAX);
            s.max(1)
        })
        .collect();
    if let Some(&worst) = substeps.iter().max() {
        if worst > MAX_SUBSTEPS {
            return Err(Error::StepRejected(format!(
                "{} substeps per grid step needed to resolve the free rotation",
                worst
            )));
        }
    }
    let columns: Vec<Vec<T>> = grid
        .omega_nodes()
        .par_iter()
        .enumerate()
        .map(|(l, &omega)| {
            let m = substeps[l];
            let h = dt / count::<T>(m);
            let half = h / lit(2.0);
            // conj z at every half substep.
            let fine: Vec<Complex<T>> = (0..=2 * m * (n - 1))
                .map(|k| {
                    if k % (2 * m) == 0 {
                        zv[k / (2 * m)].conj()
                    } else {
                        cubic_interpolate(zv, dt, half * count::<T>(k)).conj()
                    }
                })
                .collect();
            let mut out = vec![T::zero(); m_theta * n];
            for (j, &theta) in grid.theta_nodes().iter().enumerate() {
                let col = &mut out[j * n..(j + 1) * n];
                let rhs = |k: usize, d: T| -> T {
                    let t = half * count::<T>(k);
                    let (s, c) = (theta + omega * t + d).sin_cos();
                    -mu * (fine[k] * Complex::new(c, s)).im
                };
                let mut d = T::zero();
                col[n - 1] = d;
                let mut k = 2 * m * (n - 1);
                for i in (0..n - 1).rev() {
                    for _ in 0..m {
                        // Step from t_k to t_k - h.
                        let k1 = rhs(k, d);
                        let k2 = rhs(k - 1, d - half * k1);
                        let k3 = rhs(k - 1, d - half * k2);
                        let k4 = rhs(k - 2, d - h * k3);
                        d -= h / lit(6.0) * (k1 + lit::<T>(2.0) * (k2 + k3) + k4);
                        k -= 2;
                    }
                    col[i] = d;
                }
            }
            out
        })
        .collect();
    field.deviation = columns.concat();
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::quadrature::gauss_legendre_on;
    use crate::spectral::FrequencyProfile;
    use approx::assert_abs_diff_eq;

    fn small_grid() -> Arc<Grid<f64>> {
        let profile = FrequencyProfile::Lorentzian { scale: 1.0 };
        Arc::new(Grid::new(GridSpec::new(0.05, 10.0, 16, 17), &profile).unwrap())
    }

    fn exp_path(grid: &Grid<f64>, amp: f64) -> OrderParameterPath<f64> {
        OrderParameterPath::from_fn(grid.dt(), grid.n_times(), |t| Complex::new(amp * (-t).exp(), 0.0))
    }

    #[test]
    fn zero_driver_keeps_free_flow() {
        let g = small_grid();
        let z = OrderParameterPath::zeros(g.dt(), g.n_times());
        let f = apply_f(&CharacteristicField::free(g.clone()), &z, 0.3).unwrap();
        assert!(f.deviation().iter().all(|d| *d == 0.0));
        let w = WeightSpec::exponential(0.9).unwrap();
        let (f, rep) = solve_fixed_point(&g, &z, 0.3, w, 1e-13, 10).unwrap();
        assert_eq!(rep.sweeps, 1);
        assert!(f.deviation().iter().all(|d| *d == 0.0));
        let o = backward_ode_oracle(&g, &z, 0.3).unwrap();
        assert!(o.deviation().iter().all(|d| *d == 0.0));
    }

    #[test]
    fn one_step_matches_independent_quadrature() {
        // z = 0.05 e^{-t}, free-flow input, label (θ = π/2, ω = 0):
        // D(t) = μ ∫_t^T 0.05 e^{-s} sin(π/2) ds.
        let profile = FrequencyProfile::Lorentzian { scale: 1.0 };
        let g = Arc::new(
            Grid::new(
                GridSpec { omega_rule: crate::grid::OmegaRule::Truncated { half_width: 1.0 }, ..GridSpec::new(0.05, 10.0, 8, 3) },
                &profile,
            )
            .unwrap(),
        );
        assert_eq!(g.omega_nodes()[1], 0.0);
        let label = 8 + 2; // ω_1 = 0, θ_2 = π/2
        let (theta, omega) = g.label(label);
        assert_abs_diff_eq!(theta, std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(omega, 0.0);
        let mu = 0.7;
        let z = exp_path(&g, 0.05);
        let f = apply_f(&CharacteristicField::free(g.clone()), &z, mu).unwrap();
        for &i in &[0usize, 40, 150, 199] {
            let t = g.time(i);
            let (s, w) = gauss_legendre_on::<f64>(60, t, 10.0);
            let oracle: f64 = mu * s.iter().zip(&w).map(|(s, w)| w * 0.05 * (-s).exp() * theta.sin()).sum::<f64>();
            // fourth-order product rule: O(h^4) ≈ 3e-9 here
            assert_abs_diff_eq!(f.deviation_at(i, label), oracle, epsilon = 1e-8);
        }
        // symmetric label θ = 0, ω = 0, φ ≡ 0 stays on the fixed point.
        let label0 = 8;
        assert!(f.trajectory(label0).iter().all(|d| d.abs() < 1e-18));
    }

    #[test]
    fn picard_contracts_and_matches_oracle() {
        // Bounded frequencies: for |ω|·dt ≫ 1 the cubic amplitude rule sees the
        // O(μ|z|/|ω|) ripple of D at frequency ω and degrades to ~1e-6 at μ = 0.5.
        let profile = FrequencyProfile::Lorentzian { scale: 1.0 };
        let g = Arc::new(
            Grid::new(
                GridSpec { omega_rule: crate::grid::OmegaRule::Truncated { half_width: 5.0 }, ..GridSpec::new(0.05, 10.0, 16, 17) },
                &profile,
            )
            .unwrap(),
        );
        let z = exp_path(&g, 0.05);
        let w = WeightSpec::exponential(0.9).unwrap();
        let mu = 0.5;
        let (f, rep) = solve_fixed_point(&g, &z, mu, w, 1e-13, 50).unwrap();
        assert!(rep.residual < 1e-13);
        assert!(rep.within_bound(0.05), "{:?}", rep);
        assert!(f.weighted_norm(&w.deviation()) <= rep.predicted_factor * 1.05);
        let o = backward_ode_oracle(&g, &z, mu).unwrap();
        assert!(f.distance(&o, None).unwrap() < 5e-8, "{}", f.distance(&o, None).unwrap());
        let gf = gamma_field(&f, &z).unwrap();
        assert!(gf.bounded());
        assert!(gf.beta_nonincreasing());
    }

    #[test]
    fn non_contractive_driver_is_refused() {
        let g = small_grid();
        let z = exp_path(&g, 0.5);
        let w = WeightSpec::exponential(0.9).unwrap();
        assert!(matches!(solve_fixed_point(&g, &z, 5.0, w, 1e-13, 50), Err(Error::NonContractive { .. })));
        assert!(matches!(solve_fixed_point(&g, &z, 0.5, w, 1e-30, 3), Err(Error::MaxSweepsExceeded { .. })));
    }

    #[test]
    fn oracle_is_frequency_shift_equivariant() {
        // Rotating z by e^{iΔt} is the same as shifting every ω by -Δ.
        let profile = FrequencyProfile::Lorentzian { scale: 1.0 };
        let g = Arc::new(
            Grid::new(
                GridSpec { omega_rule: crate::grid::OmegaRule::Truncated { half_width: 1.0 }, ..GridSpec::new(0.05, 5.0, 8, 3) },
                &profile,
            )
            .unwrap(),
        );
        let delta = g.omega_nodes()[2] - g.omega_nodes()[1];
        let base = exp_path(&g, 0.2);
        let shifted = OrderParameterPath::from_fn(g.dt(), g.n_times(), |t| {
            Complex::new(0.2 * (-t).exp(), 0.0) * Complex::from_polar(1.0, delta * t)
        });
        let o_base = backward_ode_oracle(&g, &base, 0.4).unwrap();
        let o_shift = backward_ode_oracle(&g, &shifted, 0.4).unwrap();
        for &j in &[0usize, 3, 5] {
            for l in 1..3 {
                let a = o_shift.trajectory(l * 8 + j);
                let b = o_base.trajectory((l - 1) * 8 + j);
                for (x, y) in a.iter().zip(b) {
                    assert_abs_diff_eq!(*x, *y, epsilon = 1e-7);
                }
            }
        }
    }
}
