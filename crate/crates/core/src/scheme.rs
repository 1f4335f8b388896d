//! Outer iteration `z_0 = 0 → Θ_1 → z_1 → …`, order-parameter quadrature,
//! density reconstruction along characteristics and the diagnostics ledger.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::{gamma_field, map_label_integrals, nan_max, CharacteristicField, FixedPointSolver};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::num::{lit, to_f64, Scalar};
use crate::path::OrderParameterPath;
use crate::quadrature::periodic_derivative;
use crate::spectral::AsymptoticState;
use crate::weight::WeightSpec;

/// Relative grid slack allowed on explicit inequalities.
pub const GRID_SLACK: f64 = 0.05;

/// `z(t) = ∫∫ e^{iΘ(t,θ,ω)} f∞ dθ dω`.
///
/// Evaluated as the closed-form free part `f̂∞(-1, -t)` plus the label-grid
/// quadrature of `e^{i(θ+ωt)}(e^{iD} - 1) f∞`. The correction is `O(μ)` and
/// smooth in `ω`, so the label rule resolves it even at times where a direct
/// quadrature of `e^{iωt}` would alias.
pub fn order_parameter_of<T: Scalar>(
    field: &CharacteristicField<T>,
    state: &AsymptoticState<T>,
) -> Result<OrderParameterPath<T>> {
    let grid = field.grid().as_ref();
    grid.check_quadrature(state)?;
    let p = grid.label_weights(state);
    let n = grid.n_times();
    let dev = field.deviation();
    let active: Vec<usize> =
        (0..grid.n_labels()).filter(|&l| dev[l * n..(l + 1) * n].iter().any(|d| *d != T::zero())).collect();
    let two: T = lit(2.0);
    let values: Vec<Complex<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = grid.time(i);
            let mut acc = Complex::new(T::zero(), T::zero());
            for &l in &active {
                let d = dev[l * n + i];
                if d == T::zero() {
                    continue;
                }
                let (theta, omega) = grid.label(l);
                let (s, c) = (theta + omega * t).sin_cos();
                let half = (d / two).sin();
                // e^{iD} - 1 without cancellation.
                let e = Complex::new(-two * half * half, d.sin());
                acc = acc + Complex::new(c, s) * e * p[l];
            }
            state.free_order_parameter(t) + acc
        })
        .collect();
    OrderParameterPath::new(grid.dt(), values)
}

/// Stopping and safety parameters of [`outer_solve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterOptions<T> {
    pub tol_picard: T,
    pub max_sweeps: usize,
    pub tol_outer: T,
    pub n_max: usize,
    /// Largest admissible `μ ∫_T^∞ R` bound on the truncated phase.
    pub tail_budget: T,
}

impl<T: Scalar> Default for OuterOptions<T> {
    fn default() -> Self {
        OuterOptions {
            tol_picard: lit(1e-13),
            max_sweeps: 200,
            tol_outer: lit(1e-10),
            n_max: 30,
            tail_budget: lit(1e-8),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionRecord {
    pub sweeps: usize,
    pub residual: f64,
    pub ratios: Vec<f64>,
    pub predicted_factor: f64,
    pub max_ratio: Option<f64>,
}

/// Measured left/right sides of one inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`, absent when `rhs = 0`.
    pub ratio: Option<f64>,
}

impl Inequality {
    fn new(lhs: f64, rhs: f64) -> Self {
        Inequality { lhs, rhs, ratio: if rhs > 0.0 { Some(lhs / rhs) } else { None } }
    }

    /// `lhs ≤ (1 + slack)·rhs`, with `lhs = 0` accepted when `rhs = 0`.
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack) || (self.rhs == 0.0 && self.lhs == 0.0)
    }
}

/// One record per completed outer iterate `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub n: usize,
    /// `‖z_n‖_w`.
    pub z_norm: f64,
    /// `max_t R_n(t)`.
    pub z_sup: f64,
    /// `‖z_n - z_{n-1}‖_w`.
    pub delta_z_norm: f64,
    pub cauchy_ratio: Option<f64>,
    pub contraction: ContractionRecord,
    /// `‖Θ_n - θ - ωt‖_{w_dev}` against `μ C_w ‖R_{n-1}‖_w`.
    pub fixed_point_bound: Inequality,
    /// `‖Θ_n - Θ_{n-1}‖_{w_dev}` against
    /// `μ C_w ‖ΔZ_{n-1}‖_w / (1 - μ C_w min(‖R_{n-1}‖_w, ‖R_{n-2}‖_w))`.
    pub characteristic_step: Option<Inequality>,
    /// `max (|Γ_n| - β_n)`; nonpositive when `|Γ| ≤ β`.
    pub gamma_excess: f64,
    pub gamma_bounded: bool,
    /// `μ ∫_T^∞ R_{n-1}` bound on the truncated phase.
    pub tail_bound: f64,
    /// `‖R_n‖` over the amplitude bound without its generic constant.
    pub amplitude_ratio: Option<f64>,
    /// `‖ΔZ_n‖` over the step bound without its generic constant.
    pub step_ratio: Option<f64>,
    /// Polynomial weights: `‖ΔΓ_n‖_{γ-1}` over `‖ΔZ_{n-1}‖_γ / (1 - μ‖R_{n-2}‖_γ)`.
    pub gamma_step_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsLedger {
    pub weight: String,
    pub rate: f64,
    pub mu: f64,
    /// `C_w = sup_t w_dev(t) ∫_t^∞ w^{-1}`.
    pub contraction_constant: f64,
    /// Sampled spectral supremum entering the amplitude bound.
    pub spectral_sup: f64,
    pub entries: Vec<LedgerEntry>,
}

impl DiagnosticsLedger {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cauchy_ratios(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.cauchy_ratio).collect()
    }

    /// True when every recorded number is finite.
    pub fn all_finite(&self) -> bool {
        let v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        fn walk(v: &serde_json::Value) -> bool {
            match v {
                serde_json::Value::Number(n) => n.as_f64().map_or(true, f64::is_finite),
                serde_json::Value::Array(a) => a.iter().all(walk),
                serde_json::Value::Object(o) => o.values().all(walk),
                _ => true,
            }
        }
        // serde_json writes non-finite floats as null; look for those too.
        fn no_null_numbers(l: &DiagnosticsLedger) -> bool {
            l.entries.iter().all(|e| {
                [e.z_norm, e.z_sup, e.delta_z_norm, e.gamma_excess, e.tail_bound, e.fixed_point_bound.lhs]
                    .iter()
                    .all(|x| x.is_finite())
                    && e.contraction.ratios.iter().all(|x| x.is_finite())
                    && e.cauchy_ratio.map_or(true, f64::is_finite)
            })
        }
        walk(&v) && no_null_numbers(self)
    }
}

/// Converged outer iteration.
#[derive(Clone, Debug)]
pub struct OuterSolution<T> {
    /// `z_n`.
    pub path: OrderParameterPath<T>,
    /// `z_{n-1}`, the path that drives the returned characteristics.
    pub driver: OrderParameterPath<T>,
    pub field: CharacteristicField<T>,
    pub ledger: DiagnosticsLedger,
}

/// Outer-iteration failure; the ledger up to the failure is kept.
#[derive(Clone, Debug)]
pub struct OuterFailure {
    pub error: Error,
    pub ledger: DiagnosticsLedger,
}

impl fmt::Display for OuterFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} outer iterations)", self.error, self.ledger.len())
    }
}

impl std::error::Error for OuterFailure {}

/// Runs the outer iteration from `z_0 = 0` until `‖ΔZ_n‖_w < tol_outer`.
///
/// Fails with `NotConverging` when the Cauchy ratio is at least 1 for two
/// consecutive iterates, when `n_max` is reached, when a non-finite value
/// appears, when a characteristic solve is refused as non-contractive, or
/// when growing iterates push the tail bound over budget. A tail overrun on
/// otherwise shrinking iterates is `TailBudgetExceeded`.
pub fn outer_solve<T: Scalar>(
    state: &AsymptoticState<T>,
    grid: Arc<Grid<T>>,
    mu: T,
    w: WeightSpec<T>,
    opts: &OuterOptions<T>,
) -> std::result::Result<OuterSolution<T>, OuterFailure> {
    let c_w = w.contraction_constant();
    let sup = state.spectral_sup_default().lemma_constant();
    let mut ledger = DiagnosticsLedger {
        weight: w.kind_name().to_string(),
        rate: to_f64(w.rate()),
        mu: to_f64(mu),
        contraction_constant: to_f64(c_w),
        spectral_sup: to_f64(sup),
        entries: Vec::new(),
    };
    macro_rules! bail {
        ($e:expr) => {
            return Err(OuterFailure { error: $e, ledger })
        };
    }
    if let Err(e) = grid.check_quadrature(state) {
        bail!(e);
    }
    if !(mu >= T::zero()) || !mu.is_finite() {
        bail!(Error::Config(format!("coupling μ must be a nonnegative number, got {}", mu)));
    }
    let wd = w.deviation();
    let solver = FixedPointSolver::new(w, opts.tol_picard, opts.max_sweeps);
    let muf = to_f64(mu);
    let cwf = to_f64(c_w);
    let supf = to_f64(sup);

    let mut z_prev = OrderParameterPath::zeros(grid.dt(), grid.n_times());
    let mut field_prev: Option<CharacteristicField<T>> = None;
    // ‖R_j‖_w and ‖ΔZ_j‖_w for j = 0, 1, …
    let mut r_norms: Vec<f64> = vec![0.0];
    let mut dz_norms: Vec<f64> = vec![0.0];

    for n in 1..=opts.n_max {
        let (field, report) = match solver.solve(&grid, &z_prev, mu, field_prev.as_ref()) {
            Ok(v) => v,
            // The driver z_{n-1} has left the contraction regime.
            Err(Error::NonContractive { factor }) => bail!(Error::NotConverging {
                n,
                reason: format!("characteristic map not contractive for z_{} (factor {:.3})", n - 1, factor)
            }),
            Err(e) => bail!(e),
        };
        let field = field.with_iterate(n);
        let z = match order_parameter_of(&field, state) {
            Ok(z) => z,
            Err(e) => bail!(e),
        };
        if !z.is_finite() || !field.is_finite() {
            bail!(Error::NotConverging { n, reason: "non-finite order parameter or characteristics".into() });
        }
        let dz = z.difference(&z_prev).expect("paths share the grid");
        let z_norm = to_f64(z.weighted_norm(&w));
        let dz_norm = to_f64(dz.weighted_norm(&w));
        let r_prev = r_norms[n - 1];
        let r_prev2 = if n >= 2 { r_norms[n - 2] } else { 0.0 };
        let dz_prev = dz_norms[n - 1];

        let dev_norm = to_f64(field.weighted_norm(&wd));
        let fixed_point_bound = Inequality::new(dev_norm, to_f64(report.predicted_factor));
        let step_lhs = field_prev.as_ref().map(|fp| to_f64(field.distance(fp, Some(&wd)).expect("same grid")));
        let characteristic_step = step_lhs.map(|lhs| {
            let q = muf * cwf * r_prev.min(r_prev2);
            let rhs = if q < 1.0 { muf * cwf * dz_prev / (1.0 - q) } else { f64::INFINITY };
            Inequality::new(lhs, rhs)
        });
        let (gamma_excess, gamma_bounded) = if mu > T::zero() && !z_prev.is_zero() {
            match gamma_field(&field, &z_prev) {
                Ok(g) => (to_f64(g.max_excess()), g.bounded()),
                Err(e) => bail!(e),
            }
        } else {
            (0.0, true)
        };

        let ratio = |num: f64, den: f64| if den > 0.0 && den.is_finite() { Some(num / den) } else { None };
        let (amplitude_ratio, step_ratio, gamma_step_ratio) = match w {
            WeightSpec::Exponential { lambda } => {
                let lam = to_f64(lambda);
                let amp = ratio(z_norm, r_prev + supf);
                let q = 1.0 - muf / lam * r_prev;
                let step = if n >= 2 && q > 0.0 { ratio(dz_norm, muf * dz_prev / (lam * q)) } else { None };
                (amp, step, None)
            }
            WeightSpec::Polynomial { .. } => {
                let amp = ratio(z_norm, supf + muf * r_prev + muf * muf * r_prev * r_prev);
                let m_const = r_norms.iter().copied().fold(supf.max(z_norm), f64::max);
                let step = if n >= 2 { ratio(dz_norm, m_const * (muf + muf * muf) * dz_prev) } else { None };
                let q = 1.0 - muf * r_prev2;
                let gstep = match step_lhs {
                    Some(lhs) if muf > 0.0 && q > 0.0 => ratio(lhs / muf, dz_prev / q),
                    _ => None,
                };
                (amp, step, gstep)
            }
        };
        let cauchy_ratio = if n >= 2 { ratio(dz_norm, dz_prev) } else { None };
        let entry = LedgerEntry {
            n,
            z_norm,
            z_sup: to_f64(z.sup_norm()),
            delta_z_norm: dz_norm,
            cauchy_ratio,
            contraction: ContractionRecord {
                sweeps: report.sweeps,
                residual: to_f64(report.residual),
                ratios: report.ratios.iter().map(|r| to_f64(*r)).collect(),
                predicted_factor: to_f64(report.predicted_factor),
                max_ratio: report.max_ratio().map(to_f64),
            },
            fixed_point_bound,
            characteristic_step,
            gamma_excess,
            gamma_bounded,
            tail_bound: to_f64(report.tail_bound),
            amplitude_ratio,
            step_ratio,
            gamma_step_ratio,
        };
        ledger.entries.push(entry);
        if !ledger.all_finite() {
            ledger.entries.pop();
            bail!(Error::NotConverging { n, reason: "non-finite diagnostics".into() });
        }
        let growing = ledger.entries.last().and_then(|e| e.cauchy_ratio).is_some_and(|r| r >= 1.0);
        if report.tail_bound > opts.tail_budget {
            if growing {
                bail!(Error::NotConverging {
                    n,
                    reason: format!(
                        "iterates growing (Cauchy ratio ≥ 1) and truncation tail bound {:.3e} exceeds budget {:.3e}",
                        to_f64(report.tail_bound),
                        to_f64(opts.tail_budget)
                    )
                });
            }
            bail!(Error::TailBudgetExceeded {
                bound: to_f64(report.tail_bound),
                budget: to_f64(opts.tail_budget)
            });
        }
        r_norms.push(z_norm);
        dz_norms.push(dz_norm);

        if mu == T::zero() || dz.weighted_norm(&w) < opts.tol_outer {
            return Ok(OuterSolution { path: z, driver: z_prev, field, ledger });
        }
        let last_two = ledger.entries.iter().rev().take(2).filter(|e| e.cauchy_ratio.is_some_and(|r| r >= 1.0)).count();
        if last_two == 2 {
            bail!(Error::NotConverging {
                n,
                reason: "Cauchy ratio ‖ΔZ_n‖/‖ΔZ_{n-1}‖ ≥ 1 for two consecutive iterates".into()
            });
        }
        z_prev = z;
        field_prev = Some(field);
    }
    let n = opts.n_max;
    bail!(Error::NotConverging { n, reason: format!("tolerance not reached within n_max = {} iterates", n) })
}

/// Density along characteristics at requested grid times.
#[derive(Clone, Debug)]
pub struct ReconstructedDensity<T> {
    pub times: Vec<T>,
    /// `f(t, Θ(t, label), ω)` per requested time, in label order.
    pub values: Vec<Vec<T>>,
    /// Free-flow companion `f∞(Θ - ωt, ω)`.
    pub free_values: Vec<Vec<T>>,
    /// Physical-space mass `Σ p·E·(1 + ∂_θ D)` per requested time.
    pub mass: Vec<T>,
    /// `max |f(t, Θ, ω) - f∞(Θ - ωt, ω)|` per requested time.
    pub distance: Vec<T>,
}

struct LabelPass<T> {
    distance: Vec<T>,
    factor: Vec<T>,
}

fn label_pass<T: Scalar>(
    field: &CharacteristicField<T>,
    z: &OrderParameterPath<T>,
    state: &AsymptoticState<T>,
    mu: T,
    keep: &[usize],
) -> Result<Vec<LabelPass<T>>> {
    let grid = field.grid().clone();
    let modes = state.modes().to_vec();
    let two: T = lit(2.0);
    map_label_integrals(field, z, move |label, dev, g| {
        let (theta, omega) = grid.label(label);
        let g_scale = state.profile().density(omega) / T::TAU();
        let h = state.angular_factor(theta);
        let mut distance = Vec::with_capacity(dev.len());
        for (d, gi) in dev.iter().zip(g) {
            let e_minus_1 = (-mu * gi.re).exp_m1();
            // h(θ) - h(θ + D) = -Σ a_k e^{ikθ}(e^{ikD} - 1)
            let mut shift = T::zero();
            for m in &modes {
                let k: T = lit(f64::from(m.k));
                let half = (k * *d / two).sin();
                let ekd = Complex::new(-two * half * half, (k * *d).sin());
                let (s, c) = (k * theta).sin_cos();
                shift -= (m.amplitude * Complex::new(c, s) * ekd).re;
            }
            distance.push(g_scale * (h * e_minus_1 + shift).abs());
        }
        let factor = keep.iter().map(|&i| (-mu * g[i].re).exp()).collect();
        LabelPass { distance, factor }
    })
}

/// `max_labels |f(t, Θ, ω) - f∞(Θ - ωt, ω)|` at every grid time.
pub fn dephasing_distance<T: Scalar>(
    field: &CharacteristicField<T>,
    z: &OrderParameterPath<T>,
    state: &AsymptoticState<T>,
    mu: T,
) -> Result<Vec<T>> {
    let passes = label_pass(field, z, state, mu, &[])?;
    let n = field.grid().n_times();
    Ok((0..n).map(|i| passes.iter().fold(T::zero(), |m, p| nan_max(m, p.distance[i]))).collect())
}

/// Evaluates `f(t, Θ) = f∞(θ, ω) exp(-μ ∫_t^T R cos(Θ - φ))` at the requested
/// grid times, together with the physical-space mass and the dephasing
/// distance.
pub fn reconstruct<T: Scalar>(
    field: &CharacteristicField<T>,
    z: &OrderParameterPath<T>,
    state: &AsymptoticState<T>,
    mu: T,
    times: &[T],
) -> Result<ReconstructedDensity<T>> {
    let grid = field.grid().clone();
    let idx: Vec<usize> = times.iter().map(|&t| grid.time_index(t)).collect::<Result<_>>()?;
    let passes = label_pass(field, z, state, mu, &idx)?;
    let p = grid.label_weights(state);
    let m = grid.theta_nodes().len();
    let mut out = ReconstructedDensity {
        times: times.to_vec(),
        values: Vec::new(),
        free_values: Vec::new(),
        mass: Vec::new(),
        distance: Vec::new(),
    };
    for (q, &i) in idx.iter().enumerate() {
        let mut values = Vec::with_capacity(grid.n_labels());
        let mut free = Vec::with_capacity(grid.n_labels());
        let mut mass = T::zero();
        let mut dist = T::zero();
        for l in 0..grid.omega_nodes().len() {
            let column: Vec<T> = (0..m).map(|j| field.deviation_at(i, l * m + j)).collect();
            let dtheta = periodic_derivative(&column);
            for j in 0..m {
                let label = l * m + j;
                let (theta, omega) = grid.label(label);
                let e = passes[label].factor[q];
                values.push(state.density(theta, omega) * e);
                free.push(state.density(theta + column[j], omega));
                mass += p[label] * e * (T::one() + dtheta[j]);
                dist = nan_max(dist, passes[label].distance[i]);
            }
        }
        out.values.push(values);
        out.free_values.push(free);
        out.mass.push(mass);
        out.distance.push(dist);
    }
    Ok(out)
}

/// Verdict on one explicit inequality across the ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplicitCheck {
    pub name: String,
    pub pass: bool,
    /// Worst measured `lhs/rhs` (or worst value for non-ratio checks).
    pub worst: Option<f64>,
    pub detail: String,
}

/// A ratio sequence whose constant is generic: only growth is flagged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSeries {
    pub name: String,
    pub values: Vec<Option<f64>>,
    pub max: Option<f64>,
    /// Least-squares slope over `n`.
    pub slope: f64,
    /// `slope ≤ 0.01`.
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub explicit: Vec<ExplicitCheck>,
    pub generic: Vec<RatioSeries>,
}

impl LemmaReport {
    pub fn explicit_pass(&self) -> bool {
        self.explicit.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&ExplicitCheck> {
        self.explicit.iter().find(|c| c.name == name)
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn series(name: &str, ledger: &DiagnosticsLedger, get: impl Fn(&LedgerEntry) -> Option<f64>) -> RatioSeries {
    let values: Vec<Option<f64>> = ledger.entries.iter().map(&get).collect();
    let pts: Vec<(f64, f64)> =
        ledger.entries.iter().filter_map(|e| get(e).map(|v| (e.n as f64, v))).collect();
    let s = slope(&pts);
    RatioSeries {
        name: name.into(),
        max: pts.iter().map(|p| p.1).reduce(f64::max),
        values,
        slope: s,
        bounded: s <= 0.01,
    }
}

/// Checks every explicit inequality recorded in `ledger` with 5% grid slack
/// and summarizes the ratio sequences whose constants are generic.
pub fn verify_lemmas(ledger: &DiagnosticsLedger) -> LemmaReport {
    let slack = GRID_SLACK;
    let e = &ledger.entries;
    let mut explicit = Vec::new();

    let worst = |v: &mut dyn Iterator<Item = f64>| v.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));

    let contraction_ok = e.iter().all(|x| x.contraction.ratios.iter().all(|r| *r <= x.contraction.predicted_factor * (1.0 + slack)));
    let worst_c = worst(&mut e.iter().flat_map(|x| {
        let f = x.contraction.predicted_factor;
        x.contraction.ratios.iter().map(move |r| if f > 0.0 { r / f } else { f64::INFINITY }).collect::<Vec<_>>()
    }));
    explicit.push(ExplicitCheck {
        name: "contraction".into(),
        pass: contraction_ok,
        worst: worst_c,
        detail: "Picard ratio ≤ μ C_w ‖R_{n-1}‖_w · 1.05".into(),
    });

    explicit.push(ExplicitCheck {
        name: "fixed_point_bound".into(),
        pass: e.iter().all(|x| x.fixed_point_bound.holds(slack)),
        worst: worst(&mut e.iter().filter_map(|x| x.fixed_point_bound.ratio)),
        detail: "‖Θ_n - θ - ωt‖_{w_dev} ≤ μ C_w ‖R_{n-1}‖_w · 1.05".into(),
    });

    explicit.push(ExplicitCheck {
        name: "characteristic_step".into(),
        pass: e.iter().all(|x| x.characteristic_step.map_or(true, |q| q.holds(slack))),
        worst: worst(&mut e.iter().filter_map(|x| x.characteristic_step.and_then(|q| q.ratio))),
        detail: "‖Θ_n - Θ_{n-1}‖_{w_dev} ≤ μ C_w ‖ΔZ_{n-1}‖_w / (1 - μ C_w ‖R‖_w) · 1.05".into(),
    });

    explicit.push(ExplicitCheck {
        name: "gamma_beta".into(),
        pass: e.iter().all(|x| x.gamma_bounded),
        worst: worst(&mut e.iter().map(|x| x.gamma_excess)),
        detail: "|Γ_n| ≤ β_n pointwise".into(),
    });

    let cauchy: Vec<f64> = e.iter().filter(|x| x.n >= 3).filter_map(|x| x.cauchy_ratio).collect();
    explicit.push(ExplicitCheck {
        name: "cauchy_half".into(),
        pass: cauchy.iter().all(|r| *r <= 0.5 + slack),
        worst: cauchy.iter().copied().reduce(f64::max),
        detail: "‖ΔZ_n‖_w / ‖ΔZ_{n-1}‖_w ≤ 0.55 for n ≥ 3".into(),
    });

    let first = e.first().map_or(0.0, |x| x.z_norm);
    let max_norm = e.iter().map(|x| x.z_norm).fold(0.0, f64::max);
    explicit.push(ExplicitCheck {
        name: "bounded_sequence".into(),
        pass: max_norm <= 2.0 * first,
        worst: if first > 0.0 { Some(max_norm / first) } else { None },
        detail: "max_n ‖z_n‖_w ≤ 2 ‖z_1‖_w".into(),
    });

    let r_sup = e.iter().map(|x| x.z_sup).fold(0.0, f64::max);
    explicit.push(ExplicitCheck {
        name: "modulus_at_most_one".into(),
        pass: r_sup <= 1.0,
        worst: Some(r_sup),
        detail: "R_n(t) ≤ 1".into(),
    });

    let generic = vec![
        series("amplitude", ledger, |x| x.amplitude_ratio),
        series("step", ledger, |x| x.step_ratio),
        series("gamma_step", ledger, |x| x.gamma_step_ratio),
    ];
    LemmaReport { explicit, generic }
}
