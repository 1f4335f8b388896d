//! The acceptance suite: ten criteria run against fixed physical setups, with
//! grid resolution and tolerances taken from the supplied configurations.

use std::fmt;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use crate::characteristics::backward_ode_oracle;
use crate::config::RunConfig;
use crate::decay::{certify_envelope, fit_decay, DecayKind};
use crate::error::Error;
use crate::grid::{Grid, GridSpec};
use crate::particles::{init_from_solution, sup_deviation};
use crate::scheme::{dephasing_distance, outer_solve, reconstruct, verify_lemmas, OuterOptions, OuterSolution};
use crate::spectral::{AsymptoticState, DecayClass, FrequencyProfile};
use crate::weight::WeightSpec;

/// Coupling of the default runs.
pub const MU: f64 = 0.05;
/// Cosine perturbation of the default states.
pub const EPSILON: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {}: {} [{:.1} s]",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// A solved default run with its setup.
pub struct Run {
    pub state: AsymptoticState<f64>,
    pub grid: Arc<Grid<f64>>,
    pub weight: WeightSpec<f64>,
    pub solution: OuterSolution<f64>,
    pub seconds: f64,
}

pub struct Suite {
    exp: RunConfig,
    poly: RunConfig,
    lorentzian: OnceLock<Result<Arc<Run>, String>>,
    laplace: OnceLock<Result<Arc<Run>, String>>,
}

fn grid_for(cfg: &RunConfig, t_max: f64, profile: &FrequencyProfile<f64>) -> Result<Arc<Grid<f64>>, Error> {
    let spec = GridSpec { t_max, ..cfg.grid_spec() };
    Ok(Arc::new(Grid::new(spec, profile)?))
}

fn lorentzian_state(eps: f64) -> AsymptoticState<f64> {
    AsymptoticState::cosine(FrequencyProfile::Lorentzian { scale: 1.0 }, eps, DecayClass::Analytic { lambda: 0.9 })
        .expect("valid state")
}

fn laplace_state(eps: f64) -> AsymptoticState<f64> {
    AsymptoticState::cosine(FrequencyProfile::Laplace { scale: 1.0 }, eps, DecayClass::Sobolev { gamma: 2.0 })
        .expect("valid state")
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl Suite {
    /// `exp` supplies grid and tolerances for the Lorentzian runs, `poly` for
    /// the Laplace runs.
    pub fn new(exp: RunConfig, poly: RunConfig) -> Self {
        Suite { exp, poly, lorentzian: OnceLock::new(), laplace: OnceLock::new() }
    }

    pub fn with_defaults() -> Self {
        Self::new(RunConfig::lorentzian_default(), RunConfig::laplace_default())
    }

    fn solve(cfg: &RunConfig, state: AsymptoticState<f64>, t_max: f64, w: WeightSpec<f64>) -> Result<Arc<Run>, String> {
        let grid = grid_for(cfg, t_max, state.profile()).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let solution = outer_solve(&state, grid.clone(), MU, w, &cfg.options()).map_err(|f| f.to_string())?;
        Ok(Arc::new(Run { state, grid, weight: w, solution, seconds: start.elapsed().as_secs_f64() }))
    }

    /// Lorentzian `ε = 0.1`, `μ = 0.05`, `λ = 0.9` on `[0, 20]`.
    pub fn lorentzian(&self) -> Result<Arc<Run>, String> {
        self.lorentzian
            .get_or_init(|| {
                Self::solve(&self.exp, lorentzian_state(EPSILON), 20.0, WeightSpec::Exponential { lambda: 0.9 })
            })
            .clone()
    }

    /// Laplace `ε = 0.1`, `μ = 0.05`, `γ = 2` on `[0, 40]`.
    pub fn laplace(&self) -> Result<Arc<Run>, String> {
        self.laplace
            .get_or_init(|| Self::solve(&self.poly, laplace_state(EPSILON), 40.0, WeightSpec::Polynomial { gamma: 2.0 }))
            .clone()
    }

    pub fn run_all(&self) -> Vec<Criterion> {
        (1..=10).map(|i| self.criterion(i)).collect()
    }

    pub fn criterion(&self, id: u8) -> Criterion {
        let start = Instant::now();
        let (name, result): (&'static str, Result<(bool, String), String>) = match id {
            1 => ("free-flow exactness", self.free_flow()),
            2 => ("contraction factor", self.contraction()),
            3 => ("fixed-point bound", self.fixed_point_bound()),
            4 => ("outer Cauchy ratio", self.cauchy()),
            5 => ("exponential dephasing", self.exponential_decay()),
            6 => ("polynomial dephasing", self.polynomial_decay()),
            7 => ("dual-method agreement", self.dual_method()),
            8 => ("mass conservation", self.mass()),
            9 => ("particle cross-validation", self.particles()),
            10 => ("degenerate inputs", self.degenerate()),
            _ => ("unknown", Err(format!("no criterion {}", id))),
        };
        let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {}", e)));
        Criterion { id, name, pass, detail, seconds: start.elapsed().as_secs_f64() }
    }

    fn free_flow(&self) -> Result<(bool, String), String> {
        let start = Instant::now();
        let mut worst = Vec::new();
        let cases: [(&RunConfig, AsymptoticState<f64>, f64, WeightSpec<f64>, fn(f64) -> f64); 2] = [
            (&self.exp, lorentzian_state(EPSILON), 20.0, WeightSpec::Exponential { lambda: 0.9 }, |t| 0.05 * (-t).exp()),
            (&self.poly, laplace_state(EPSILON), 40.0, WeightSpec::Polynomial { gamma: 2.0 }, |t| 0.05 / (1.0 + t * t)),
        ];
        for (cfg, state, t_max, w, exact) in cases {
            let grid = grid_for(cfg, t_max, state.profile()).map_err(|e| e.to_string())?;
            let sol = outer_solve(&state, grid.clone(), 0.0, w, &cfg.options()).map_err(|f| f.to_string())?;
            let err = grid
                .times()
                .iter()
                .zip(sol.path.modulus())
                .map(|(t, r)| (r - exact(*t)).abs())
                .fold(0.0, f64::max);
            worst.push((err, sol.ledger.len()));
        }
        let secs = start.elapsed().as_secs_f64();
        let pass = worst.iter().all(|(e, n)| *e <= 1e-8 && *n == 1) && secs < 5.0;
        Ok((
            pass,
            format!(
                "max |R - R_exact|: Lorentzian {:.2e}, Laplace {:.2e} (tol 1e-8); runtime {:.2} s (< 5 s)",
                worst[0].0, worst[1].0, secs
            ),
        ))
    }

    fn contraction(&self) -> Result<(bool, String), String> {
        let run = self.lorentzian()?;
        let report = verify_lemmas(&run.solution.ledger);
        let c = report.check("contraction").ok_or("missing check")?;
        let pass = c.pass && run.seconds < 60.0;
        Ok((
            pass,
            format!(
                "worst ratio / (μ/λ)‖R_(n-1)‖_λ = {} (≤ 1.05); outer solve {:.1} s (< 60 s)",
                c.worst.map_or("n/a".into(), |w| format!("{:.4}", w)),
                run.seconds
            ),
        ))
    }

    fn fixed_point_bound(&self) -> Result<(bool, String), String> {
        let run = self.lorentzian()?;
        let report = verify_lemmas(&run.solution.ledger);
        let c = report.check("fixed_point_bound").ok_or("missing check")?;
        let ratios: Vec<String> = run
            .solution
            .ledger
            .entries
            .iter()
            .map(|e| e.fixed_point_bound.ratio.map_or("-".into(), |r| format!("{:.4}", r)))
            .collect();
        Ok((c.pass, format!("‖D_n‖_λ / ((μ/λ)‖R_(n-1)‖_λ) per n: [{}] (≤ 1.05)", ratios.join(", "))))
    }

    fn cauchy(&self) -> Result<(bool, String), String> {
        let run = self.lorentzian()?;
        let ledger = &run.solution.ledger;
        let late: Vec<f64> = ledger.entries.iter().filter(|e| e.n >= 3).filter_map(|e| e.cauchy_ratio).collect();
        let ok_ratio = late.iter().all(|r| *r <= 0.55);
        let converged = ledger.len() <= 10 && ledger.entries.last().is_some_and(|e| e.delta_z_norm < 1e-10);
        let shown: Vec<String> = ledger.cauchy_ratios().iter().map(|r| r.map_or("-".into(), |r| format!("{:.3e}", r))).collect();
        Ok((
            ok_ratio && converged,
            format!("ratios [{}] (≤ 0.55 for n ≥ 3); converged in {} iterations (≤ 10)", shown.join(", "), ledger.len()),
        ))
    }

    fn exponential_decay(&self) -> Result<(bool, String), String> {
        let run = self.lorentzian()?;
        let sol = &run.solution;
        let times = run.grid.times();
        let r = sol.path.modulus();
        let model = fit_decay(&times, &r, DecayKind::Exponential, (2.0, 15.0), 1e-12).map_err(|e| e.to_string())?;
        let env = certify_envelope(&times, &r, &model);
        let dist = dephasing_distance(&sol.field, &sol.driver, &run.state, MU).map_err(|e| e.to_string())?;
        let denv = certify_envelope(&times, &dist, &model);
        let rate_ok = (0.95..=1.05).contains(&model.rate);
        Ok((
            rate_ok && env.pass && denv.pass,
            format!(
                "rate {:.6} (in [0.95, 1.05]); R envelope C = {:.4e} {}; distance envelope C = {:.4e} {}",
                model.rate,
                env.c_min,
                if env.pass { "certified" } else { "not certified" },
                denv.c_min,
                if denv.pass { "certified" } else { "not certified" }
            ),
        ))
    }

    fn polynomial_decay(&self) -> Result<(bool, String), String> {
        let run = self.laplace()?;
        let times = run.grid.times();
        let r = run.solution.path.modulus();
        let model = fit_decay(&times, &r, DecayKind::Polynomial, (5.0, 40.0), 1e-12).map_err(|e| e.to_string())?;
        let env = certify_envelope(&times, &r, &model.with_rate(2.0));
        let slope_ok = (1.9..=2.1).contains(&model.rate);
        Ok((
            slope_ok && env.pass && env.c_min.is_finite() && run.seconds < 120.0,
            format!(
                "log-log slope {:.6} (in [-2.1, -1.9]); C for ⟨t⟩^-2 envelope = {:.4e} {}; outer solve {:.1} s (< 120 s)",
                -model.rate,
                env.c_min,
                if env.pass { "certified" } else { "not certified" },
                run.seconds
            ),
        ))
    }

    fn dual_method(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        let mut pass = true;
        for (name, run) in [("Lorentzian", self.lorentzian()?), ("Laplace", self.laplace()?)] {
            let sol = &run.solution;
            let oracle = backward_ode_oracle(&run.grid, &sol.driver, MU).map_err(|e| e.to_string())?;
            let diff = sol.field.distance(&oracle, None).map_err(|e| e.to_string())?;
            let tail = sol.ledger.entries.last().map_or(0.0, |e| e.tail_bound);
            pass &= diff <= 1e-6 + tail;
            parts.push(format!("{} sup|Δ| = {:.2e} (≤ 1e-6 + {:.2e})", name, diff, tail));
        }
        Ok((pass, parts.join("; ")))
    }

    fn mass(&self) -> Result<(bool, String), String> {
        let run = self.lorentzian()?;
        let sol = &run.solution;
        let rec = reconstruct(&sol.field, &sol.driver, &run.state, MU, &[0.0, 5.0, 10.0]).map_err(|e| e.to_string())?;
        let errs: Vec<f64> = rec.mass.iter().map(|m| (m - 1.0).abs()).collect();
        Ok((
            errs.iter().all(|e| *e <= 1e-6),
            format!("|mass - 1| at t = 0, 5, 10: {:.2e}, {:.2e}, {:.2e} (≤ 1e-6)", errs[0], errs[1], errs[2]),
        ))
    }

    fn particles(&self) -> Result<(bool, String), String> {
        let run = self.lorentzian()?;
        let sol = &run.solution;
        let start = Instant::now();
        let p = &self.exp.particles;
        let sampling = self.exp.sampling().map_err(|e| e.to_string())?;
        let deviations = |n: usize| -> Result<(Vec<f64>, f64), String> {
            let mut devs = Vec::new();
            let mut init_worst: f64 = 0.0;
            for s in 0..8u64 {
                let (mut ens, _) = init_from_solution(&sol.field, &run.state, MU, n, p.seed + s, sampling)
                    .map_err(|e| e.to_string())?;
                let z0 = ens.order_parameter();
                init_worst = init_worst.max((z0 - sol.path.values()[0]).norm() * (n as f64).sqrt());
                let traj = ens.run(20.0, 0.01);
                devs.push(sup_deviation(&traj, &sol.path));
            }
            Ok((devs, init_worst))
        };
        let (small, init_small) = deviations(10_000)?;
        let (large, init_large) = deviations(40_000)?;
        let first = small[0];
        let (m1, m4) = (median(&mut small.clone()), median(&mut large.clone()));
        let secs = start.elapsed().as_secs_f64();
        let shrink = m1 / m4;
        let init_ok = init_small <= 3.0 && init_large <= 3.0;
        Ok((
            first <= 0.02 && shrink >= 1.4 && init_ok && secs < 120.0,
            format!(
                "sup|R_N - R| at N=1e4 (seed {}) = {:.4} (≤ 0.02); median 1e4 {:.4}, 4e4 {:.4}, shrink {:.2} (≥ 1.4); \
                 max √N|z_N(0) - z(0)| = {:.2} (≤ 3); {:.1} s (< 120 s)",
                p.seed,
                first,
                m1,
                m4,
                shrink,
                init_small.max(init_large),
                secs
            ),
        ))
    }

    fn degenerate(&self) -> Result<(bool, String), String> {
        let uniform =
            AsymptoticState::uniform(FrequencyProfile::Lorentzian { scale: 1.0 }, DecayClass::Analytic { lambda: 0.9 })
                .map_err(|e| e.to_string())?;
        let w = WeightSpec::Exponential { lambda: 0.9 };
        let grid = grid_for(&self.exp, 20.0, uniform.profile()).map_err(|e| e.to_string())?;
        let sol = outer_solve(&uniform, grid.clone(), MU, w, &self.exp.options()).map_err(|f| f.to_string())?;
        let uniform_ok = sol.path.is_zero() && sol.ledger.len() == 1;

        let state = lorentzian_state(EPSILON);
        let grid = grid_for(&self.exp, 20.0, state.profile()).map_err(|e| e.to_string())?;
        let opts = OuterOptions { ..self.exp.options() };
        let strong = outer_solve(&state, grid, 10.0, w, &opts);
        let (strong_ok, strong_detail) = match strong {
            Ok(_) => (false, "μ = 10 converged unexpectedly".to_string()),
            Err(f) => {
                let finite = f.ledger.all_finite();
                let nc = matches!(f.error, Error::NotConverging { .. });
                (nc && finite, format!("μ = 10: {} ({} ledger records, all finite: {})", f.error, f.ledger.len(), finite))
            }
        };
        Ok((
            uniform_ok && strong_ok,
            format!(
                "uniform state: z ≡ 0 {} after {} iteration(s); {}",
                if sol.path.is_zero() { "exactly" } else { "NOT" },
                sol.ledger.len(),
                strong_detail
            ),
        ))
    }
}
