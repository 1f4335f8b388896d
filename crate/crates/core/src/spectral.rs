//! Asymptotic states `f∞(θ, ω) = g(ω)(1 + Σ a_k e^{ikθ}) / 2π` with closed-form
//! Fourier transforms and exact samplers.
//!
//! Transform convention: `f̂(k, η) = ∫∫ e^{-i(kθ + ηω)} f dθ dω`, so that the
//! free-streaming order parameter is `∫∫ e^{i(θ + ωt)} f∞ = f̂(-1, -t)`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::{bracket, lit, to_f64, Scalar};

/// Distribution of natural frequencies. All profiles are centred at zero and
/// even, so their transforms are real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrequencyProfile<T> {
    Gaussian { sigma: T },
    Lorentzian { scale: T },
    Laplace { scale: T },
}

impl<T: Scalar> FrequencyProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let p = self.parameter();
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::InvalidState(format!(
                "profile parameter must be positive and finite, got {}",
                p
            )));
        }
        Ok(())
    }

    fn parameter(&self) -> T {
        match *self {
            FrequencyProfile::Gaussian { sigma } => sigma,
            FrequencyProfile::Lorentzian { scale } | FrequencyProfile::Laplace { scale } => scale,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FrequencyProfile::Gaussian { .. } => "gaussian",
            FrequencyProfile::Lorentzian { .. } => "lorentzian",
            FrequencyProfile::Laplace { .. } => "laplace",
        }
    }

    /// Density `g(ω)`.
    pub fn density(&self, omega: T) -> T {
        let pi = T::PI();
        match *self {
            FrequencyProfile::Gaussian { sigma } => {
                let x = omega / sigma;
                (-(x * x) / lit(2.0)).exp() / (sigma * (T::TAU()).sqrt())
            }
            FrequencyProfile::Lorentzian { scale } => {
                let x = omega / scale;
                T::one() / (pi * scale * (T::one() + x * x))
            }
            FrequencyProfile::Laplace { scale } => (-omega.abs() / scale).exp() / (lit::<T>(2.0) * scale),
        }
    }

    /// Transform `ĝ(η) = ∫ e^{-iηω} g(ω) dω` (real and even).
    pub fn transform(&self, eta: T) -> T {
        match *self {
            FrequencyProfile::Gaussian { sigma } => {
                let x = sigma * eta;
                (-(x * x) / lit(2.0)).exp()
            }
            FrequencyProfile::Lorentzian { scale } => (-(scale * eta).abs()).exp(),
            FrequencyProfile::Laplace { scale } => {
                let x = scale * eta;
                T::one() / (T::one() + x * x)
            }
        }
    }

    /// Inverse CDF, `u ∈ (0, 1)`.
    pub fn inverse_cdf(&self, u: T) -> T {
        let half: T = lit(0.5);
        let two: T = lit(2.0);
        match *self {
            FrequencyProfile::Gaussian { sigma } => {
                let v = statrs::function::erf::erf_inv(to_f64(two * u - T::one()));
                sigma * two.sqrt() * lit(v)
            }
            FrequencyProfile::Lorentzian { scale } => scale * (T::PI() * (u - half)).tan(),
            FrequencyProfile::Laplace { scale } => {
                if u < half {
                    scale * (two * u).ln()
                } else {
                    -scale * (two * (T::one() - u)).ln()
                }
            }
        }
    }

    /// CDF, used by tests and by the quadrature mass bookkeeping.
    pub fn cdf(&self, omega: T) -> T {
        let half: T = lit(0.5);
        match *self {
            FrequencyProfile::Gaussian { sigma } => {
                let x = to_f64(omega / sigma) / std::f64::consts::SQRT_2;
                lit(0.5 * statrs::function::erf::erfc(-x))
            }
            FrequencyProfile::Lorentzian { scale } => half + (omega / scale).atan() / T::PI(),
            FrequencyProfile::Laplace { scale } => {
                if omega < T::zero() {
                    half * (omega / scale).exp()
                } else {
                    T::one() - half * (-omega / scale).exp()
                }
            }
        }
    }
}

/// Regularity class declared for `f∞`, which fixes the time weight used by the
/// iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayClass<T> {
    Analytic { lambda: T },
    Sobolev { gamma: T },
}

/// One Fourier mode `a_k e^{ikθ}` of the angular factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T> {
    pub k: i32,
    pub amplitude: Complex<T>,
}

/// Separable asymptotic profile `f∞(θ, ω) = g(ω)·h(θ)/2π`, `h = 1 + Σ a_k e^{ikθ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticState<T> {
    profile: FrequencyProfile<T>,
    /// Full symmetric support, sorted by `k`, with `a_{-k} = conj(a_k)`.
    modes: Vec<Mode<T>>,
    decay: DecayClass<T>,
}

/// Sampled suprema of the weighted transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSup<T> {
    /// `sup |f̂| e^{λ(|k|+|η|)}` (analytic class only).
    pub analytic: Option<T>,
    /// `sup |f̂| ⟨k, η⟩^γ` (Sobolev class only).
    pub sobolev_full: Option<T>,
    /// `sup |f̂| ⟨η⟩^γ` (Sobolev class only).
    pub sobolev_eta: Option<T>,
}

impl<T: Scalar> SpectralSup<T> {
    /// The supremum entering the order-parameter lemmas for this class.
    pub fn lemma_constant(&self) -> T {
        self.analytic.or(self.sobolev_eta).unwrap_or_else(T::zero)
    }
}

impl<T: Scalar> AsymptoticState<T> {
    /// Builds a state. Modes may list `k` alone (its conjugate partner is
    /// added) or both `k` and `-k`, in which case they must be conjugate.
    pub fn new(profile: FrequencyProfile<T>, modes: &[Mode<T>], decay: DecayClass<T>) -> Result<Self> {
        profile.validate()?;
        let tol: T = lit::<T>(64.0) * T::epsilon();
        let mut full: Vec<Mode<T>> = Vec::new();
        for m in modes {
            if m.k == 0 {
                return Err(Error::InvalidState("mode index k = 0 is reserved for normalization".into()));
            }
            if !m.amplitude.re.is_finite() || !m.amplitude.im.is_finite() {
                return Err(Error::InvalidState(format!("non-finite amplitude for k = {}", m.k)));
            }
            if let Some(existing) = full.iter().find(|e| e.k == m.k) {
                if (existing.amplitude - m.amplitude).norm() > tol {
                    return Err(Error::InvalidState(format!(
                        "mode k = {} given twice with different amplitudes",
                        m.k
                    )));
                }
                continue;
            }
            full.push(*m);
            match modes.iter().find(|p| p.k == -m.k) {
                Some(p) => {
                    if (p.amplitude - m.amplitude.conj()).norm() > tol {
                        return Err(Error::InvalidState(format!(
                            "a_{{-{k}}} must equal conj(a_{k})",
                            k = m.k.abs()
                        )));
                    }
                }
                None => full.push(Mode { k: -m.k, amplitude: m.amplitude.conj() }),
            }
        }
        full.sort_by_key(|m| m.k);
        full.dedup_by_key(|m| m.k);
        full.retain(|m| m.amplitude.norm() > T::zero());

        let state = AsymptoticState { profile, modes: full, decay };
        let total = state.amplitude_sum();
        if total > T::one() + tol {
            return Err(Error::InvalidState(format!(
                "Σ|a_k| = {} exceeds 1; nonnegativity is not guaranteed",
                total
            )));
        }
        state.check_decay_class()?;
        Ok(state)
    }

    /// `θ`-uniform state `f∞ = g(ω)/2π`.
    pub fn uniform(profile: FrequencyProfile<T>, decay: DecayClass<T>) -> Result<Self> {
        Self::new(profile, &[], decay)
    }

    /// `f∞ = g(ω)(1 + ε cos θ)/2π`.
    pub fn cosine(profile: FrequencyProfile<T>, epsilon: T, decay: DecayClass<T>) -> Result<Self> {
        let a = Complex::new(epsilon / lit(2.0), T::zero());
        Self::new(profile, &[Mode { k: 1, amplitude: a }], decay)
    }

    fn check_decay_class(&self) -> Result<()> {
        match (self.decay, self.profile) {
            (DecayClass::Analytic { lambda }, profile) => {
                if !(lambda > T::zero()) {
                    return Err(Error::InvalidState("analytic class needs λ > 0".into()));
                }
                match profile {
                    FrequencyProfile::Gaussian { .. } => Ok(()),
                    FrequencyProfile::Lorentzian { scale } if lambda <= scale => Ok(()),
                    FrequencyProfile::Lorentzian { scale } => Err(Error::InvalidState(format!(
                        "Lorentzian transform e^{{-{}|η|}} is not bounded by e^{{-{}|η|}}",
                        scale, lambda
                    ))),
                    FrequencyProfile::Laplace { .. } => Err(Error::InvalidState(
                        "Laplace profile has only algebraic transform decay; declare a Sobolev class".into(),
                    )),
                }
            }
            (DecayClass::Sobolev { gamma }, profile) => {
                if !(gamma >= lit(2.0)) {
                    return Err(Error::InvalidState("Sobolev class needs γ ≥ 2".into()));
                }
                match profile {
                    FrequencyProfile::Laplace { .. } if gamma > lit(2.0) => Err(Error::InvalidState(format!(
                        "Laplace transform decays like ⟨η⟩^-2, not ⟨η⟩^-{}",
                        gamma
                    ))),
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn profile(&self) -> &FrequencyProfile<T> {
        &self.profile
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn decay(&self) -> DecayClass<T> {
        self.decay
    }

    /// True when the angular factor is constant.
    pub fn is_uniform(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest `|k|` in the mode support (0 when uniform).
    pub fn max_mode(&self) -> u32 {
        self.modes.iter().map(|m| m.k.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn amplitude_sum(&self) -> T {
        self.modes.iter().map(|m| m.amplitude.norm()).sum()
    }

    /// Coefficient `c_k` with `f̂(k, η) = ĝ(η)·c_k`: `c_0 = 1`, `c_k = a_k`.
    pub fn coefficient(&self, k: i32) -> Complex<T> {
        if k == 0 {
            return Complex::new(T::one(), T::zero());
        }
        self.modes
            .iter()
            .find(|m| m.k == k)
            .map(|m| m.amplitude)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Angular factor `h(θ) = 1 + Σ a_k e^{ikθ}` (real).
    pub fn angular_factor(&self, theta: T) -> T {
        let mut h = T::one();
        for m in &self.modes {
            let (s, c) = (theta * lit(f64::from(m.k))).sin_cos();
            h += m.amplitude.re * c - m.amplitude.im * s;
        }
        h
    }

    /// Density `f∞(θ, ω)`.
    pub fn density(&self, theta: T, omega: T) -> T {
        self.profile.density(omega) * self.angular_factor(theta) / T::TAU()
    }

    /// `f̂∞(k, η)` in closed form.
    pub fn spectral_transform(&self, k: i32, eta: T) -> Complex<T> {
        self.coefficient(k) * self.profile.transform(eta)
    }

    /// Free-streaming order parameter `z_free(t) = f̂∞(-1, -t)`.
    pub fn free_order_parameter(&self, t: T) -> Complex<T> {
        self.spectral_transform(-1, -t)
    }

    /// Angular CDF `∫_0^θ h/2π`, for `θ ∈ [0, 2π]`.
    pub fn angular_cdf(&self, theta: T) -> T {
        let mut acc = theta;
        for m in self.modes.iter().filter(|m| m.k > 0) {
            let k: T = lit(f64::from(m.k));
            // 2 Re[a_k (e^{ikθ} - 1) / (ik)]
            let (s, c) = (k * theta).sin_cos();
            let term = Complex::new(c - T::one(), s) / Complex::new(T::zero(), k);
            acc += lit::<T>(2.0) * (m.amplitude * term).re;
        }
        acc / T::TAU()
    }

    /// Inverse of [`Self::angular_cdf`] by safeguarded Newton iteration.
    pub fn angular_inverse_cdf(&self, u: T) -> T {
        let tau = T::TAU();
        if self.is_uniform() {
            return u * tau;
        }
        let (mut lo, mut hi) = (T::zero(), tau);
        let mut x = u * tau;
        for _ in 0..100 {
            let f = self.angular_cdf(x) - u;
            if f > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.angular_factor(x) / tau;
            let mut next = if d > T::zero() { x - f / d } else { (lo + hi) / lit(2.0) };
            if !(next > lo && next < hi) {
                next = (lo + hi) / lit(2.0);
            }
            if (next - x).abs() <= lit::<T>(4.0) * T::epsilon() * tau {
                return next;
            }
            x = next;
        }
        x
    }

    /// `n` i.i.d. labels `(θ, ω)` from `f∞`: inverse CDF in `ω`, rejection in
    /// `θ` against the envelope `1 + Σ|a_k|`.
    pub fn sample_labels(&self, n: usize, seed: u64) -> Result<Vec<(T, T)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_labels_with(&mut rng, n)
    }

    pub(crate) fn sample_labels_with<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<(T, T)>> {
        if n == 0 {
            return Err(Error::InvalidState("sample count must be at least 1".into()));
        }
        let envelope = T::one() + self.amplitude_sum();
        if envelope > lit::<T>(2.0) + lit::<T>(64.0) * T::epsilon() {
            return Err(Error::InvalidState("rejection envelope exceeds 2 (Σ|a_k| > 1)".into()));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let omega = self.profile.inverse_cdf(open_unit(rng));
            let mut accepted = None;
            for _ in 0..10_000 {
                let theta: T = lit::<T>(rng.gen::<f64>()) * T::TAU();
                let u: T = lit(rng.gen::<f64>());
                if u * envelope <= self.angular_factor(theta) {
                    accepted = Some(theta);
                    break;
                }
            }
            let theta = accepted
                .ok_or_else(|| Error::InvalidState("rejection sampler failed to accept".into()))?;
            out.push((theta, omega));
        }
        Ok(out)
    }

    /// Sampled suprema of the weighted transform over `k ∈ {0} ∪ support` and
    /// `|η| ≤ eta_max` on a uniform `η` grid.
    pub fn spectral_sup(&self, eta_max: T, samples: usize) -> SpectralSup<T> {
        let mut ks: Vec<i32> = vec![0];
        ks.extend(self.modes.iter().map(|m| m.k));
        let samples = samples.max(2);
        let step = eta_max / lit(samples as f64 - 1.0);
        let mut analytic = T::zero();
        let mut full = T::zero();
        let mut eta_only = T::zero();
        for &k in &ks {
            let kk: T = lit(f64::from(k.abs()));
            for i in 0..samples {
                let eta = step * lit(i as f64);
                let v = self.spectral_transform(k, eta).norm();
                match self.decay {
                    DecayClass::Analytic { lambda } => {
                        analytic = analytic.max(v * (lambda * (kk + eta)).exp());
                    }
                    DecayClass::Sobolev { gamma } => {
                        let kn = (T::one() + kk * kk + eta * eta).sqrt();
                        full = full.max(v * kn.powf(gamma));
                        eta_only = eta_only.max(v * bracket(eta).powf(gamma));
                    }
                }
            }
        }
        match self.decay {
            DecayClass::Analytic { .. } => SpectralSup { analytic: Some(analytic), sobolev_full: None, sobolev_eta: None },
            DecayClass::Sobolev { .. } => SpectralSup { analytic: None, sobolev_full: Some(full), sobolev_eta: Some(eta_only) },
        }
    }

    /// Default sampling of [`Self::spectral_sup`].
    pub fn spectral_sup_default(&self) -> SpectralSup<T> {
        self.spectral_sup(lit(200.0), 20_001)
    }
}

fn open_unit<T: Scalar, R: Rng>(rng: &mut R) -> T {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return lit(u);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lorentz_cos(eps: f64) -> AsymptoticState<f64> {
        AsymptoticState::cosine(
            FrequencyProfile::Lorentzian { scale: 1.0 },
            eps,
            DecayClass::Analytic { lambda: 0.9 },
        )
        .unwrap()
    }

    #[test]
    fn normalization_and_uniform_modes() {
        for profile in [
            FrequencyProfile::Gaussian { sigma: 0.7 },
            FrequencyProfile::Lorentzian { scale: 1.0 },
        ] {
            let s = AsymptoticState::uniform(profile, DecayClass::Analytic { lambda: 0.5 }).unwrap();
            assert_eq!(s.spectral_transform(0, 0.0), Complex::new(1.0, 0.0));
            assert_eq!(s.spectral_transform(-1, 3.7), Complex::new(0.0, 0.0));
        }
        let s = AsymptoticState::uniform(FrequencyProfile::Laplace { scale: 1.0 }, DecayClass::Sobolev { gamma: 2.0 })
            .unwrap();
        assert_eq!(s.spectral_transform(0, 0.0).re, 1.0);
    }

    #[test]
    fn lorentzian_cosine_transform_value() {
        let s = lorentz_cos(0.1);
        let v = s.spectral_transform(-1, -2.0);
        assert_abs_diff_eq!(v.re, 0.05 * (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0);
        assert_abs_diff_eq!(v.re, 6.7668e-3, epsilon = 1e-7);
    }

    #[test]
    fn rejects_invalid_states() {
        let p = FrequencyProfile::Lorentzian { scale: 1.0 };
        let a = DecayClass::Analytic { lambda: 0.9 };
        assert!(AsymptoticState::cosine(p, 2.5, a).is_err());
        assert!(AsymptoticState::new(p, &[Mode { k: 0, amplitude: Complex::new(0.1, 0.0) }], a).is_err());
        let bad = [
            Mode { k: 1, amplitude: Complex::new(0.1, 0.1) },
            Mode { k: -1, amplitude: Complex::new(0.1, 0.1) },
        ];
        assert!(AsymptoticState::new(p, &bad, a).is_err());
        // λ beyond the Lorentzian strip
        assert!(AsymptoticState::uniform(p, DecayClass::Analytic { lambda: 1.5 }).is_err());
        // Laplace is not analytic, and only γ ≤ 2
        let l = FrequencyProfile::Laplace { scale: 1.0 };
        assert!(AsymptoticState::uniform(l, a).is_err());
        assert!(AsymptoticState::uniform(l, DecayClass::Sobolev { gamma: 3.0 }).is_err());
        assert!(AsymptoticState::uniform(l, DecayClass::Sobolev { gamma: 1.5 }).is_err());
        assert!(FrequencyProfile::Gaussian { sigma: -1.0 }.validate().is_err());
    }

    #[test]
    fn conjugate_partner_is_added() {
        let s = AsymptoticState::new(
            FrequencyProfile::Gaussian { sigma: 1.0 },
            &[Mode { k: 2, amplitude: Complex::new(0.1, -0.2) }],
            DecayClass::Analytic { lambda: 1.0 },
        )
        .unwrap();
        assert_eq!(s.modes().len(), 2);
        assert_eq!(s.coefficient(-2), Complex::new(0.1, 0.2));
        assert_eq!(s.max_mode(), 2);
        // h real and nonnegative
        for i in 0..100 {
            let th = i as f64 * 0.0628;
            assert!(s.angular_factor(th) >= 0.0);
        }
    }

    #[test]
    fn inverse_cdfs_round_trip() {
        for p in [
            FrequencyProfile::Gaussian { sigma: 0.8 },
            FrequencyProfile::Lorentzian { scale: 1.3 },
            FrequencyProfile::Laplace { scale: 0.6 },
        ] {
            for &u in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
                assert_abs_diff_eq!(p.cdf(p.inverse_cdf(u)), u, epsilon = 1e-9);
            }
        }
        let s = lorentz_cos(0.4);
        for &u in &[0.0, 0.1, 0.5, 0.9, 0.999_999] {
            assert_abs_diff_eq!(s.angular_cdf(s.angular_inverse_cdf(u)), u, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(s.angular_cdf(std::f64::consts::TAU), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = lorentz_cos(0.1);
        let a = s.sample_labels(500, 7).unwrap();
        let b = s.sample_labels(500, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, s.sample_labels(500, 8).unwrap());
        assert!(s.sample_labels(0, 1).is_err());
    }

    #[test]
    fn uniform_theta_histogram() {
        let s = AsymptoticState::uniform(FrequencyProfile::Gaussian { sigma: 1.0 }, DecayClass::Analytic { lambda: 1.0 })
            .unwrap();
        let n = 100_000;
        let samples = s.sample_labels(n, 11).unwrap();
        let mut bins = [0usize; 16];
        for (th, _) in &samples {
            assert!(*th >= 0.0 && *th < std::f64::consts::TAU);
            bins[((th / std::f64::consts::TAU) * 16.0) as usize] += 1;
        }
        let expected = n as f64 / 16.0;
        let mut chi2 = 0.0;
        for &b in &bins {
            let frac = b as f64 / n as f64;
            assert!((frac - 1.0 / 16.0).abs() <= 4.0 / (n as f64).sqrt());
            chi2 += (b as f64 - expected).powi(2) / expected;
        }
        // 15 degrees of freedom; 99.9% quantile is 37.7
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    #[test]
    fn cosine_mode_mean_phase() {
        let s = lorentz_cos(0.1);
        let samples = s.sample_labels(1_000_000, 3).unwrap();
        let mean: f64 = samples.iter().map(|(th, _)| th.cos()).sum::<f64>() / samples.len() as f64;
        let target = s.free_order_parameter(0.0).re;
        assert_abs_diff_eq!(target, 0.05, epsilon = 1e-15);
        assert!((mean - target).abs() <= 3e-3, "mean {mean}");
    }

    #[test]
    fn declared_decay_bounds_are_finite() {
        let s = lorentz_cos(0.1);
        let sup = s.spectral_sup_default();
        // k = 0 dominates: sup e^{-0.1|η|} = 1
        assert_abs_diff_eq!(sup.analytic.unwrap(), 1.0, epsilon = 1e-12);
        let l = AsymptoticState::cosine(FrequencyProfile::Laplace { scale: 1.0 }, 0.1, DecayClass::Sobolev { gamma: 2.0 })
            .unwrap();
        let sup = l.spectral_sup_default();
        assert_abs_diff_eq!(sup.sobolev_eta.unwrap(), 1.0, epsilon = 1e-12);
        // ⟨k,η⟩² / (1+η²) at k = 1: 0.05·(2+η²)/(1+η²) ≤ 0.1 < 1
        assert_abs_diff_eq!(sup.sobolev_full.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_precision_transform() {
        let s = AsymptoticState::<f32>::cosine(
            FrequencyProfile::Lorentzian { scale: 1.0 },
            0.1,
            DecayClass::Analytic { lambda: 0.9 },
        )
        .unwrap();
        let v = s.spectral_transform(-1, -2.0);
        assert!((v.re - 0.05 * (-2.0f32).exp()).abs() < 1e-7);
    }
}
