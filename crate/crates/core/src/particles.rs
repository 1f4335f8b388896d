//! Finite-N Kuramoto ensemble `θ̇_i = ω_i - μ R_N sin(θ_i - φ_N)`, used to
//! cross-check the kinetic construction.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::characteristics::CharacteristicField;
use crate::error::{Error, Result};
use crate::num::{count, lit, Scalar};
use crate::path::OrderParameterPath;
use crate::spectral::AsymptoticState;

/// Reduction block size; fixed so sums do not depend on the thread count.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble<T> {
    phases: Vec<T>,
    freqs: Vec<T>,
    mu: T,
    t: T,
}

fn wrap<T: Scalar>(x: T) -> T {
    let tau = T::TAU();
    // Steps move phases by much less than a turn.
    if x >= T::zero() && x < tau {
        return x;
    }
    if x >= tau && x < tau + tau {
        return x - tau;
    }
    if x < T::zero() && x >= -tau {
        let r = x + tau;
        return if r >= tau { T::zero() } else { r };
    }
    let r = x % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// `(1/N) Σ e^{iθ_j}` with a fixed-order blocked sum.
pub fn empirical_order_parameter<T: Scalar>(phases: &[T]) -> Complex<T> {
    let partial: Vec<Complex<T>> = phases
        .par_chunks(CHUNK)
        .map(|c| {
            c.iter().fold(Complex::new(T::zero(), T::zero()), |acc, th| {
                let (s, co) = th.sin_cos();
                acc + Complex::new(co, s)
            })
        })
        .collect();
    let sum = partial.into_iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
    sum / count::<T>(phases.len().max(1))
}

impl<T: Scalar> ParticleEnsemble<T> {
    pub fn new(phases: Vec<T>, freqs: Vec<T>, mu: T) -> Result<Self> {
        if phases.is_empty() || phases.len() != freqs.len() {
            return Err(Error::InvalidState("ensemble needs N ≥ 1 phases and as many frequencies".into()));
        }
        if !(mu >= T::zero()) {
            return Err(Error::InvalidState("coupling must be nonnegative".into()));
        }
        Ok(ParticleEnsemble { phases: phases.into_iter().map(wrap).collect(), freqs, mu, t: T::zero() })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn order_parameter(&self) -> Complex<T> {
        empirical_order_parameter(&self.phases)
    }

    /// Velocities at phases `theta`; the mean field is recomputed from
    /// `theta` itself and returned. One `sin_cos` per particle.
    fn rhs(&self, theta: &[T], out: &mut [T], cs: &mut [Complex<T>]) -> Complex<T> {
        cs.par_chunks_mut(CHUNK).zip(theta.par_chunks(CHUNK)).for_each(|(c, th)| {
            for (c, th) in c.iter_mut().zip(th) {
                let (s, co) = th.sin_cos();
                *c = Complex::new(co, s);
            }
        });
        let partial: Vec<Complex<T>> =
            cs.par_chunks(CHUNK).map(|c| c.iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)).collect();
        let z = partial.into_iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
            / count::<T>(theta.len());
        let zc = z.conj();
        let mu = self.mu;
        out.par_chunks_mut(CHUNK)
            .zip(cs.par_chunks(CHUNK).zip(self.freqs.par_chunks(CHUNK)))
            .for_each(|(o, (c, w))| {
                for ((o, c), w) in o.iter_mut().zip(c).zip(w) {
                    // R sin(θ - φ) = Im(conj(z) e^{iθ})
                    *o = *w - mu * (zc * c).im;
                }
            });
        z
    }

    /// RK4 step; returns `z_N` at the phases before the step, which the
    /// first stage computes anyway.
    fn advance(&mut self, dt: T, s: &mut Scratch<T>) -> Complex<T> {
        let half = dt / lit(2.0);
        let Scratch { cs, k1, k2, k3, k4, tmp } = s;
        let z = self.rhs(&self.phases, k1, cs);
        let stage = |tmp: &mut Vec<T>, phases: &[T], k: &[T], h: T| {
            tmp.par_iter_mut().zip(phases.par_iter().zip(k.par_iter())).for_each(|(t, (p, k))| *t = *p + h * *k);
        };
        stage(tmp, &self.phases, k1, half);
        self.rhs(tmp, k2, cs);
        stage(tmp, &self.phases, k2, half);
        self.rhs(tmp, k3, cs);
        stage(tmp, &self.phases, k3, dt);
        self.rhs(tmp, k4, cs);
        let sixth = dt / lit(6.0);
        let two: T = lit(2.0);
        self.phases.par_iter_mut().enumerate().for_each(|(i, p)| {
            *p = wrap(*p + sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]));
        });
        self.t += dt;
        z
    }

    /// One classical RK4 step.
    pub fn step(&mut self, dt: T) {
        let mut s = Scratch::new(self.phases.len());
        self.advance(dt, &mut s);
    }

    /// Integrates to `t_end`, returning `(t, z_N(t))` at every step including
    /// the start.
    pub fn run(&mut self, t_end: T, dt: T) -> Vec<(T, Complex<T>)> {
        let steps = ((t_end - self.t) / dt).round().to_usize().unwrap_or(0);
        let mut out = Vec::with_capacity(steps + 1);
        let mut scratch = Scratch::new(self.phases.len());
        let t0 = self.t;
        for s in 1..=steps {
            let before = self.t;
            let z = self.advance(dt, &mut scratch);
            out.push((before, z));
            // Avoid drift of the clock from repeated addition.
            self.t = t0 + dt * count::<T>(s);
        }
        out.push((self.t, self.order_parameter()));
        out
    }
}

struct Scratch<T> {
    cs: Vec<Complex<T>>,
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    fn new(n: usize) -> Self {
        let v = vec![T::zero(); n];
        Scratch {
            cs: vec![Complex::new(T::zero(), T::zero()); n],
            k1: v.clone(),
            k2: v.clone(),
            k3: v.clone(),
            k4: v.clone(),
            tmp: v,
        }
    }
}

/// How labels are drawn from `f∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Independent draws.
    Iid,
    /// Each ω draw is paired with `group` θ values at stratified quantiles
    /// `Q_θ(frac(U + m/group))`. Every particle is still an exact `f∞` sample;
    /// the θ-noise in `z_N` is removed.
    QuietStart { group: usize },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::QuietStart { group: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InitReport {
    /// ω draws outside the node range that were redrawn.
    pub resampled: usize,
}

/// `D(0, θ, ω)` by bilinear interpolation (periodic in θ, clamped in ω).
fn interpolate_initial_deviation<T: Scalar>(field: &CharacteristicField<T>, theta: T, omega: T) -> T {
    let grid = field.grid();
    let nodes = grid.omega_nodes();
    let m = grid.theta_nodes().len();
    let pos = wrap(theta) / T::TAU() * count::<T>(m);
    let j0 = pos.floor().to_usize().unwrap_or(0).min(m - 1);
    let fj = pos - count::<T>(j0);
    let j1 = (j0 + 1) % m;
    let (l0, fl) = if nodes.len() == 1 {
        (0, T::zero())
    } else {
        let k = nodes.partition_point(|x| *x <= omega).clamp(1, nodes.len() - 1);
        let (a, b) = (nodes[k - 1], nodes[k]);
        (k - 1, ((omega - a) / (b - a)).max(T::zero()).min(T::one()))
    };
    let l1 = (l0 + 1).min(nodes.len() - 1);
    let d = |l: usize, j: usize| field.deviation_at(0, l * m + j);
    let one = T::one();
    (one - fl) * ((one - fj) * d(l0, j0) + fj * d(l0, j1)) + fl * ((one - fj) * d(l1, j0) + fj * d(l1, j1))
}

/// Samples `n` labels from `state` and pushes them through `Θ(0, ·, ·)`.
pub fn init_from_solution<T: Scalar>(
    field: &CharacteristicField<T>,
    state: &AsymptoticState<T>,
    mu: T,
    n: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<(ParticleEnsemble<T>, InitReport)> {
    if n == 0 {
        return Err(Error::InvalidState("particle count must be at least 1".into()));
    }
    let nodes = field.grid().omega_nodes();
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let inside = |w: T| w >= lo && w <= hi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resampled = 0usize;
    let mut labels: Vec<(T, T)> = Vec::with_capacity(n);
    match sampling {
        Sampling::Iid => {
            while labels.len() < n {
                let (th, w) = state.sample_labels_with(&mut rng, 1)?[0];
                if inside(w) {
                    labels.push((th, w));
                } else {
                    resampled += 1;
                }
            }
        }
        Sampling::QuietStart { group } => {
            let group = group.max(1);
            while labels.len() < n {
                let u: f64 = rng.gen();
                let w = state.profile().inverse_cdf(lit(u.max(f64::MIN_POSITIVE)));
                if !inside(w) {
                    resampled += 1;
                    continue;
                }
                let shift: f64 = rng.gen();
                for m in 0..group {
                    if labels.len() == n {
                        break;
                    }
                    let q = (shift + m as f64 / group as f64).fract();
                    labels.push((state.angular_inverse_cdf(lit(q)), w));
                }
            }
        }
    }
    let (phases, freqs): (Vec<T>, Vec<T>) =
        labels.into_iter().map(|(th, w)| (th + interpolate_initial_deviation(field, th, w), w)).unzip();
    Ok((ParticleEnsemble::new(phases, freqs, mu)?, InitReport { resampled }))
}

/// `sup_t | |z_N(t)| - |z(t)| |` over the overlap of both time ranges, with
/// the kinetic path interpolated at particle times.
pub fn sup_deviation<T: Scalar>(trajectory: &[(T, Complex<T>)], kinetic: &OrderParameterPath<T>) -> T {
    trajectory
        .iter()
        .filter(|(t, _)| *t <= kinetic.t_max())
        .filter_map(|(t, z)| kinetic.at(*t).ok().map(|k| (z.norm() - k.norm()).abs()))
        .fold(T::zero(), |m, d| m.max(d))
}
