//! End-to-end runs driven by a [`RunConfig`]: the `solve` and `simulate`
//! pipelines with their artifacts.

use std::path::Path;

use num_complex::Complex;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::decay::{certify_envelope, fit_decay, DecayKind, DecayModel};
use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv, write_json};
use crate::particles::{init_from_solution, sup_deviation};
use crate::path::OrderParameterPath;
use crate::scheme::{dephasing_distance, outer_solve, reconstruct, verify_lemmas, OuterFailure, OuterSolution};

pub const SCHEMA_VERSION: &str = "1.0";
/// Tolerance on the reconstructed mass.
pub const MASS_TOL: f64 = 1e-6;

/// Result of a completed `solve`.
#[derive(Debug)]
pub struct SolveOutcome {
    pub solution: OuterSolution<f64>,
    pub summary: Value,
    /// Every explicit check passed.
    pub pass: bool,
}

/// Why a `solve` did not produce a summary.
#[derive(Debug)]
pub enum SolveFailure {
    /// The outer iteration failed; `ledger.json` was written.
    Outer(OuterFailure),
    Other(Error),
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveFailure::Outer(o) => o.fmt(f),
            SolveFailure::Other(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for SolveFailure {}

impl From<Error> for SolveFailure {
    fn from(e: Error) -> Self {
        SolveFailure::Other(e)
    }
}

fn model_json(m: &std::result::Result<DecayModel<f64>, Error>) -> Value {
    match m {
        Ok(m) => serde_json::to_value(m).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Runs the outer iteration, reconstruction and decay analysis, writing
/// `order_parameter.csv`, `dephasing.csv`, `ledger.json` and `summary.json`
/// into `out_dir`.
pub fn run_solve(cfg: &RunConfig, out_dir: &Path) -> std::result::Result<SolveOutcome, SolveFailure> {
    let state = cfg.state()?;
    let grid = cfg.grid()?;
    let w = cfg.weight()?;
    let mu = cfg.solver.mu;
    std::fs::create_dir_all(out_dir).map_err(Error::from)?;
    let sol = match outer_solve(&state, grid.clone(), mu, w, &cfg.options()) {
        Ok(s) => s,
        Err(f) => {
            write_json(&out_dir.join("ledger.json"), &f.ledger)?;
            return Err(SolveFailure::Outer(f));
        }
    };
    write_json(&out_dir.join("ledger.json"), &sol.ledger)?;

    let times = grid.times();
    let r = sol.path.modulus();
    let distance = dephasing_distance(&sol.field, &sol.driver, &state, mu)?;
    let mass_times: Vec<f64> = [0.0, 5.0, 10.0].into_iter().filter(|t| *t <= grid.t_max()).collect();
    let recon = reconstruct(&sol.field, &sol.driver, &state, mu, &mass_times)?;

    let kind = cfg.decay_kind();
    let window = cfg.fit_window();
    let floor = cfg.fit.floor;
    let r_fit = fit_decay(&times, &r, kind, window, floor);
    let d_fit = fit_decay(&times, &distance, kind, window, floor);
    let trivially_zero = |v: &[f64]| v.iter().all(|x| *x <= floor);
    let r_env = r_fit.as_ref().ok().map(|m| certify_envelope(&times, &r, m));
    let d_env = r_fit.as_ref().ok().map(|m| certify_envelope(&times, &distance, m));
    let r_env_pass = r_env.map_or(trivially_zero(&r), |e| e.pass);
    let d_env_pass = d_env.map_or(trivially_zero(&distance), |e| e.pass);

    let mass: Vec<Value> = recon
        .times
        .iter()
        .zip(&recon.mass)
        .map(|(t, m)| json!({ "t": t, "mass": m, "pass": (m - 1.0).abs() <= MASS_TOL }))
        .collect();
    let mass_pass = recon.mass.iter().all(|m| (m - 1.0).abs() <= MASS_TOL);

    let phase = sol.path.phase();
    let rows: Vec<Vec<Option<f64>>> = times
        .iter()
        .zip(sol.path.values())
        .zip(&phase)
        .map(|((t, z), p)| vec![Some(*t), Some(z.re), Some(z.im), Some(z.norm()), *p])
        .collect();
    write_csv(&out_dir.join("order_parameter.csv"), &["t", "re_z", "im_z", "R", "phi"], &rows)?;
    let rows: Vec<Vec<Option<f64>>> = times
        .iter()
        .zip(sol.path.values())
        .zip(&distance)
        .map(|((t, z), d)| vec![Some(*t), Some(z.re), Some(z.im), Some(z.norm()), Some(*d)])
        .collect();
    write_csv(&out_dir.join("dephasing.csv"), &["t", "re_z", "im_z", "R", "distance"], &rows)?;

    let lemmas = verify_lemmas(&sol.ledger);
    let e = &sol.ledger.entries;
    let fixed = lemmas.check("fixed_point_bound").cloned();
    let pass = lemmas.explicit_pass() && mass_pass && r_env_pass;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "config_echo": cfg,
        "norms": {
            "weight": sol.ledger.weight,
            "rate": sol.ledger.rate,
            "iterations": e.len(),
            "z": e.iter().map(|x| x.z_norm).collect::<Vec<_>>(),
            "delta_z": e.iter().map(|x| x.delta_z_norm).collect::<Vec<_>>(),
            "deviation": e.iter().map(|x| x.fixed_point_bound.lhs).collect::<Vec<_>>(),
            "mass": mass,
            "mass_pass": mass_pass,
        },
        "cauchy_ratios": sol.ledger.cauchy_ratios(),
        "contraction": {
            "contraction_constant": sol.ledger.contraction_constant,
            "per_iterate": e.iter().map(|x| &x.contraction).collect::<Vec<_>>(),
            "check": lemmas.check("contraction"),
            "characteristic_step": lemmas.check("characteristic_step"),
        },
        "estimrn_check": {
            "per_iterate": e.iter().map(|x| x.fixed_point_bound).collect::<Vec<_>>(),
            "check": fixed,
        },
        "lemma_ratios": {
            "spectral_sup": sol.ledger.spectral_sup,
            "generic": lemmas.generic,
            "explicit": lemmas.explicit,
            "all_explicit_pass": pass,
        },
        "decay_fit": {
            "kind": kind,
            "window": [window.0, window.1],
            "order_parameter": model_json(&r_fit),
            "dephasing": model_json(&d_fit),
        },
        "envelope": {
            "order_parameter": r_env,
            "order_parameter_pass": r_env_pass,
            "dephasing": d_env,
            "dephasing_pass": d_env_pass,
            "horizon": grid.t_max(),
            "note": "envelopes are certified on the grid [0, t_max]; beyond t_max only the tail bounds apply",
        },
        "tail_bounds": {
            "horizon": grid.t_max(),
            "budget": cfg.solver.tail_budget,
            "per_iterate": e.iter().map(|x| x.tail_bound).collect::<Vec<_>>(),
        },
    });
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(SolveOutcome { solution: sol, summary, pass })
}

/// Reads `t, re_z, im_z` columns written by `solve`.
pub fn load_kinetic_path(path: &Path) -> Result<OrderParameterPath<f64>> {
    let table = read_csv(path)?;
    let t = table.column("t")?;
    let re = table.column("re_z")?;
    let im = table.column("im_z")?;
    if t.len() < 2 {
        return Err(Error::Config("kinetic CSV needs at least two rows".into()));
    }
    let dt = t[1] - t[0];
    OrderParameterPath::new(dt, re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect())
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub sup_deviation: f64,
    /// `|z_N(0) - z(0)|`.
    pub initial_deviation: f64,
    pub resampled: usize,
}

/// Solves the kinetic problem for `Θ(0)`, samples and evolves a particle
/// ensemble, and writes `particles.csv` plus `comparison.csv` against either
/// `kinetic_csv` or the kinetic solution just computed.
pub fn run_simulate(cfg: &RunConfig, out_dir: &Path, kinetic_csv: Option<&Path>) -> Result<SimulateOutcome> {
    let state = cfg.state()?;
    let grid = cfg.grid()?;
    let w = cfg.weight()?;
    let mu = cfg.solver.mu;
    let sol = outer_solve(&state, grid.clone(), mu, w, &cfg.options()).map_err(|f| f.error)?;
    let p = &cfg.particles;
    let (mut ens, init) = init_from_solution(&sol.field, &state, mu, p.n, p.seed, cfg.sampling()?)?;
    let t_end = p.t_max.unwrap_or(grid.t_max());
    let traj = ens.run(t_end, p.dt);
    let kinetic = match kinetic_csv {
        Some(path) => load_kinetic_path(path)?,
        None => sol.path.clone(),
    };
    let rows: Vec<Vec<Option<f64>>> = traj
        .iter()
        .map(|(t, z)| vec![Some(*t), Some(z.norm()), if z.norm() < 1e-12 { None } else { Some(z.arg()) }])
        .collect();
    std::fs::create_dir_all(out_dir)?;
    write_csv(&out_dir.join("particles.csv"), &["t", "R_N", "phi_N"], &rows)?;
    let rows: Vec<Vec<Option<f64>>> = traj
        .iter()
        .filter_map(|(t, z)| {
            kinetic.at(*t).ok().map(|k| vec![Some(*t), Some(z.norm()), Some(k.norm()), Some((z.norm() - k.norm()).abs())])
        })
        .collect();
    write_csv(&out_dir.join("comparison.csv"), &["t", "R_N", "R", "abs_diff"], &rows)?;
    let initial_deviation = (traj[0].1 - kinetic.at(0.0)?).norm();
    Ok(SimulateOutcome { sup_deviation: sup_deviation(&traj, &kinetic), initial_deviation, resampled: init.resampled })
}

/// Standalone fit of one CSV column.
pub fn run_fit(path: &Path, column: &str, kind: DecayKind, window: (f64, f64), floor: f64) -> Result<Value> {
    let table = read_csv(path)?;
    let t = table.column("t")?;
    let v = table.column(column)?;
    let model = fit_decay(&t, &v, kind, window, floor)?;
    let env = certify_envelope(&t, &v, &model);
    Ok(json!({ "column": column, "model": model, "envelope": env }))
}
