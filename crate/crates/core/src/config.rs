//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::decay::DecayKind;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec, OmegaRule};
use crate::particles::Sampling;
use crate::scheme::OuterOptions;
use crate::spectral::{AsymptoticState, DecayClass, FrequencyProfile, Mode};
use crate::weight::WeightSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub state: StateConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub particles: ParticleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    /// `gaussian`, `lorentzian` or `laplace`.
    pub profile: String,
    /// σ for Gaussian, scale for Lorentzian and Laplace.
    pub scale: f64,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
    /// `analytic` or `sobolev`.
    pub decay: String,
    /// λ or γ of the declared class.
    pub decay_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dt: f64,
    pub t_max: f64,
    pub theta_nodes: usize,
    pub omega_nodes: usize,
    /// `auto` or `truncated`.
    pub omega_rule: String,
    pub omega_half_width: Option<f64>,
    pub mass_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dt: 0.05,
            t_max: 20.0,
            theta_nodes: 64,
            omega_nodes: 129,
            omega_rule: "auto".into(),
            omega_half_width: None,
            mass_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    /// `exponential` or `polynomial`.
    pub weight: String,
    pub weight_rate: f64,
    #[serde(default = "d_tol_picard")]
    pub tol_picard: f64,
    #[serde(default = "d_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "d_tol_outer")]
    pub tol_outer: f64,
    #[serde(default = "d_n_max")]
    pub n_max: usize,
    #[serde(default = "d_tail_budget")]
    pub tail_budget: f64,
}

fn d_tol_picard() -> f64 {
    1e-13
}
fn d_max_sweeps() -> usize {
    200
}
fn d_tol_outer() -> f64 {
    1e-10
}
fn d_n_max() -> usize {
    30
}
fn d_tail_budget() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Fit window for `R(t)`; defaults to `[2, 15]` (exponential) or
    /// `[5, t_max]` (polynomial).
    pub window: Option<[f64; 2]>,
    pub floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { window: None, floor: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleConfig {
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub t_max: Option<f64>,
    /// `quiet` or `iid`.
    pub sampling: String,
    pub group: usize,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        ParticleConfig { n: 10_000, dt: 0.01, seed: 1, t_max: None, sampling: "quiet".into(), group: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
        Self::from_toml(&text)
    }

    /// Rejects non-positive tolerances and malformed physics; returns
    /// warnings for soft inconsistencies.
    pub fn validate(&self) -> Result<Vec<String>> {
        let s = &self.solver;
        for (name, v) in [
            ("tol_picard", s.tol_picard),
            ("tol_outer", s.tol_outer),
            ("tail_budget", s.tail_budget),
            ("mass_tol", self.grid.mass_tol),
            ("fit.floor", self.fit.floor),
            ("particles.dt", self.particles.dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{} must be positive, got {}", name, v)));
            }
        }
        if !(s.mu >= 0.0) || !s.mu.is_finite() {
            return Err(Error::Config(format!("mu must be nonnegative, got {}", s.mu)));
        }
        if s.n_max == 0 || s.max_sweeps == 0 {
            return Err(Error::Config("n_max and max_sweeps must be at least 1".into()));
        }
        self.state()?;
        self.weight()?;
        self.sampling()?;
        match self.grid.omega_rule.as_str() {
            "auto" => {}
            "truncated" if self.grid.omega_half_width.is_some() => {}
            other => return Err(Error::Config(format!("unknown omega_rule {:?} (or missing half width)", other))),
        }
        let mut warnings = Vec::new();
        match (self.state()?.decay(), self.weight()?) {
            (DecayClass::Analytic { .. }, WeightSpec::Polynomial { .. })
            | (DecayClass::Sobolev { .. }, WeightSpec::Exponential { .. }) => {
                warnings.push("weight kind does not match the declared decay class of the state".into())
            }
            _ => {}
        }
        Ok(warnings)
    }

    pub fn state(&self) -> Result<AsymptoticState<f64>> {
        let st = &self.state;
        let profile = match st.profile.to_ascii_lowercase().as_str() {
            "gaussian" => FrequencyProfile::Gaussian { sigma: st.scale },
            "lorentzian" => FrequencyProfile::Lorentzian { scale: st.scale },
            "laplace" => FrequencyProfile::Laplace { scale: st.scale },
            other => return Err(Error::Config(format!("unknown profile {:?}", other))),
        };
        let decay = match st.decay.to_ascii_lowercase().as_str() {
            "analytic" => DecayClass::Analytic { lambda: st.decay_rate },
            "sobolev" => DecayClass::Sobolev { gamma: st.decay_rate },
            other => return Err(Error::Config(format!("unknown decay class {:?}", other))),
        };
        let modes: Vec<Mode<f64>> =
            st.modes.iter().map(|m| Mode { k: m.k, amplitude: Complex::new(m.re, m.im) }).collect();
        AsymptoticState::new(profile, &modes, decay).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid_spec(&self) -> GridSpec<f64> {
        let g = &self.grid;
        let omega_rule = match (g.omega_rule.as_str(), g.omega_half_width) {
            ("truncated", Some(h)) => OmegaRule::Truncated { half_width: h },
            _ => OmegaRule::Auto,
        };
        GridSpec { dt: g.dt, t_max: g.t_max, theta_nodes: g.theta_nodes, omega_nodes: g.omega_nodes, omega_rule, mass_tol: g.mass_tol }
    }

    pub fn grid(&self) -> Result<Arc<Grid<f64>>> {
        let state = self.state()?;
        Ok(Arc::new(Grid::new(self.grid_spec(), state.profile())?))
    }

    pub fn weight(&self) -> Result<WeightSpec<f64>> {
        let s = &self.solver;
        match s.weight.to_ascii_lowercase().as_str() {
            "exponential" => WeightSpec::exponential(s.weight_rate),
            "polynomial" => {
                if s.weight_rate < 2.0 {
                    return Err(Error::Config("polynomial weight needs γ ≥ 2".into()));
                }
                WeightSpec::polynomial(s.weight_rate)
            }
            other => return Err(Error::Config(format!("unknown weight {:?}", other))),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn options(&self) -> OuterOptions<f64> {
        let s = &self.solver;
        OuterOptions {
            tol_picard: s.tol_picard,
            max_sweeps: s.max_sweeps,
            tol_outer: s.tol_outer,
            n_max: s.n_max,
            tail_budget: s.tail_budget,
        }
    }

    pub fn decay_kind(&self) -> DecayKind {
        match self.weight() {
            Ok(WeightSpec::Polynomial { .. }) => DecayKind::Polynomial,
            _ => DecayKind::Exponential,
        }
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match (self.fit.window, self.decay_kind()) {
            (Some([a, b]), _) => (a, b),
            (None, DecayKind::Exponential) => (2.0, 15.0_f64.min(self.grid.t_max)),
            (None, DecayKind::Polynomial) => (5.0, self.grid.t_max),
        }
    }

    pub fn sampling(&self) -> Result<Sampling> {
        match self.particles.sampling.as_str() {
            "quiet" => Ok(Sampling::QuietStart { group: self.particles.group.max(1) }),
            "iid" => Ok(Sampling::Iid),
            other => Err(Error::Config(format!("unknown sampling {:?}", other))),
        }
    }

    /// Built-in Lorentzian run: `ε = 0.1` cosine, `μ = 0.05`, `λ = 0.9`.
    pub fn lorentzian_default() -> Self {
        Self::from_toml(LORENTZIAN).expect("built-in config parses")
    }

    /// Built-in Laplace run: `ε = 0.1` cosine, `μ = 0.05`, `γ = 2`.
    pub fn laplace_default() -> Self {
        Self::from_toml(LAPLACE).expect("built-in config parses")
    }
}

pub const LORENTZIAN: &str = include_str!("../../../configs/lorentzian.toml");

pub const LAPLACE: &str = include_str!("../../../configs/laplace.toml");
