//! Time × label discretization: uniform time grid, uniform θ nodes on the
//! torus and a profile-adapted ω rule.

use crate::error::{Error, Result};
use crate::num::{count, lit, to_f64, Scalar};
use crate::quadrature::{gauss_legendre_on, ProductRule};
use crate::spectral::{AsymptoticState, FrequencyProfile};

/// How the ω nodes are placed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaRule<T> {
    /// Profile-adapted: `ω = s·tan u` for Lorentzian, `[-6.5σ, 6.5σ]` for
    /// Gaussian, two panels on `[-20b, 20b]` for Laplace.
    Auto,
    /// Plain Gauss–Legendre on `[-Ω, Ω]`.
    Truncated { half_width: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub dt: T,
    pub t_max: T,
    pub theta_nodes: usize,
    pub omega_nodes: usize,
    pub omega_rule: OmegaRule<T>,
    /// Tolerance on `Σ mass - 1`.
    pub mass_tol: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(dt: T, t_max: T, theta_nodes: usize, omega_nodes: usize) -> Self {
        GridSpec { dt, t_max, theta_nodes, omega_nodes, omega_rule: OmegaRule::Auto, mass_tol: lit(1e-8) }
    }

    /// `dt = 0.05`, `M_θ = 64`, 129 ω nodes.
    pub fn default_with_horizon(t_max: T) -> Self {
        Self::new(lit(0.05), t_max, 64, 129)
    }
}

/// Discretization grid. Labels are ω-major: label `l·M_θ + j` is `(θ_j, ω_l)`.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    spec: GridSpec<T>,
    steps: usize,
    theta: Vec<T>,
    omega: Vec<T>,
    /// Probability mass `∫ g` carried by each ω node.
    omega_mass: Vec<T>,
    rules: Vec<ProductRule<T>>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(spec: GridSpec<T>, profile: &FrequencyProfile<T>) -> Result<Self> {
        profile.validate()?;
        if !(spec.dt > T::zero()) || !(spec.t_max > T::zero()) || !spec.t_max.is_finite() {
            return Err(Error::InvalidGrid("dt and t_max must be positive".into()));
        }
        let ratio = spec.t_max / spec.dt;
        let steps_f = ratio.round();
        if (ratio - steps_f).abs() > lit::<T>(1e-9) * ratio.max(T::one()) {
            return Err(Error::InvalidGrid(format!(
                "t_max / dt = {} is not an integer",
                to_f64(ratio)
            )));
        }
        let steps = steps_f.to_usize().unwrap_or(0);
        if steps < 3 {
            return Err(Error::InvalidGrid("need at least four time points".into()));
        }
        if spec.theta_nodes == 0 || spec.omega_nodes == 0 {
            return Err(Error::InvalidGrid("node counts must be positive".into()));
        }
        let m = spec.theta_nodes;
        let theta = (0..m).map(|j| T::TAU() * count::<T>(j) / count::<T>(m)).collect();
        let (omega, omega_mass) = omega_rule(spec.omega_rule, profile, spec.omega_nodes)?;
        let rules = omega.iter().map(|&w| ProductRule::new(w, spec.dt)).collect();
        Ok(Grid { spec, steps, theta, omega, omega_mass, rules })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn dt(&self) -> T {
        self.spec.dt
    }

    pub fn t_max(&self) -> T {
        self.time(self.steps)
    }

    /// Number of time points (`t_max/dt + 1`).
    pub fn n_times(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn time(&self, i: usize) -> T {
        self.spec.dt * count::<T>(i)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n_times()).map(|i| self.time(i)).collect()
    }

    /// Index of the grid time equal to `t` (within `1e-9·dt`).
    pub fn time_index(&self, t: T) -> Result<usize> {
        let pos = t / self.spec.dt;
        let i = pos.round();
        if !(t >= -lit::<T>(1e-9) * self.spec.dt)
            || (pos - i).abs() > lit(1e-9)
            || i > count(self.steps)
        {
            return Err(Error::OutsideGrid(to_f64(t)));
        }
        Ok(i.to_usize().unwrap_or(0))
    }

    pub fn theta_nodes(&self) -> &[T] {
        &self.theta
    }

    pub fn omega_nodes(&self) -> &[T] {
        &self.omega
    }

    pub fn omega_mass(&self) -> &[T] {
        &self.omega_mass
    }

    pub fn n_labels(&self) -> usize {
        self.theta.len() * self.omega.len()
    }

    #[inline]
    pub fn label(&self, index: usize) -> (T, T) {
        let m = self.theta.len();
        (self.theta[index % m], self.omega[index / m])
    }

    #[inline]
    pub fn omega_index(&self, index: usize) -> usize {
        index / self.theta.len()
    }

    pub(crate) fn rule(&self, omega_index: usize) -> &ProductRule<T> {
        &self.rules[omega_index]
    }

    /// Label weights `p = m_l·h(θ_j)/M_θ`, so that `Σ p·F(θ_j, ω_l)`
    /// approximates `∫∫ F f∞ dθ dω`.
    pub fn label_weights(&self, state: &AsymptoticState<T>) -> Vec<T> {
        let m = self.theta.len();
        let mf: T = count(m);
        let h: Vec<T> = self.theta.iter().map(|&t| state.angular_factor(t)).collect();
        let mut out = Vec::with_capacity(self.n_labels());
        for &mass in &self.omega_mass {
            for hj in &h {
                out.push(mass * *hj / mf);
            }
        }
        out
    }

    /// Checks that the label quadrature is exact enough for `state`: the
    /// θ rule must resolve every product of modes with `e^{±iθ}`, and the
    /// ω rule must carry unit mass within `mass_tol`.
    pub fn check_quadrature(&self, state: &AsymptoticState<T>) -> Result<()> {
        let m = self.theta.len();
        let k = state.max_mode() as usize;
        if m < 8 {
            return Err(Error::Quadrature(format!("M_θ = {} is below the minimum of 8", m)));
        }
        if m <= 2 * (k + 1) {
            return Err(Error::Quadrature(format!(
                "M_θ = {} cannot resolve modes up to |k| = {} (need M_θ > {})",
                m,
                k,
                2 * (k + 1)
            )));
        }
        let total: T = self.label_weights(state).into_iter().sum();
        if (total - T::one()).abs() > self.spec.mass_tol {
            return Err(Error::Quadrature(format!(
                "label mass {} differs from 1 by more than {}",
                to_f64(total),
                to_f64(self.spec.mass_tol)
            )));
        }
        Ok(())
    }

    /// True when both grids discretize the same times and labels.
    pub fn same_as(&self, other: &Grid<T>) -> bool {
        self.steps == other.steps && self.spec.dt == other.spec.dt && self.theta == other.theta && self.omega == other.omega
    }
}

fn omega_rule<T: Scalar>(rule: OmegaRule<T>, profile: &FrequencyProfile<T>, n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let (nodes, weights) = match (rule, *profile) {
        (OmegaRule::Truncated { half_width }, _) => {
            if !(half_width > T::zero()) {
                return Err(Error::InvalidGrid("ω half-width must be positive".into()));
            }
            gauss_legendre_on(n, -half_width, half_width)
        }
        (OmegaRule::Auto, FrequencyProfile::Lorentzian { scale }) => {
            // ω = s·tan u has g(ω) dω = du/π exactly.
            let (u, wu) = gauss_legendre_on(n, -T::FRAC_PI_2(), T::FRAC_PI_2());
            let nodes: Vec<T> = u.iter().map(|&u| scale * u.tan()).collect();
            let mass: Vec<T> = wu.iter().map(|&w| w / T::PI()).collect();
            return Ok((nodes, mass));
        }
        (OmegaRule::Auto, FrequencyProfile::Gaussian { sigma }) => {
            let h = sigma * lit(6.5);
            gauss_legendre_on(n, -h, h)
        }
        (OmegaRule::Auto, FrequencyProfile::Laplace { scale }) => {
            // The density has a kink at 0; integrate each side separately.
            let left = n / 2;
            let right = n - left;
            let h = scale * lit(20.0);
            let (mut x, mut w) = gauss_legendre_on(left.max(1), -h, T::zero());
            if left == 0 {
                x.clear();
                w.clear();
            }
            let (xr, wr) = gauss_legendre_on(right, T::zero(), h);
            x.extend(xr);
            w.extend(wr);
            (x, w)
        }
    };
    let mass = nodes.iter().zip(&weights).map(|(&x, &w)| w * profile.density(x)).collect();
    Ok((nodes, mass))
}
