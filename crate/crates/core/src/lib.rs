//! Kinetic Kuramoto solver with prescribed asymptotic data.
//!
//! The solution of the kinetic equation is built through its characteristics
//! by the outer iteration `z_0 = 0 → Θ_1 → z_1 → Θ_2 → …`, each `Θ_n` being the
//! fixed point of a whole-trajectory Picard map driven by `z_{n-1}`. Every
//! explicit inequality of the convergence argument is measured along the way
//! and recorded in a [`scheme::DiagnosticsLedger`].
//!
//! The numerical core is generic over the real scalar type; `f64` aliases are
//! provided at the crate root.

pub mod characteristics;
pub mod config;
pub mod decay;
pub mod error;
pub mod grid;
pub mod io;
pub mod num;
pub mod particles;
pub mod path;
pub mod quadrature;
pub mod run;
pub mod scheme;
pub mod spectral;
pub mod verify;
pub mod weight;

pub use characteristics::{
    apply_f, backward_ode_oracle, gamma_field, solve_fixed_point, CharacteristicField, ContractionReport,
    FixedPointSolver, GammaField,
};
pub use decay::{certify_envelope, fit_decay, DecayKind, DecayModel, Envelope};
pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, OmegaRule};
pub use num::Scalar;
pub use particles::{empirical_order_parameter, init_from_solution, ParticleEnsemble, Sampling};
pub use path::OrderParameterPath;
pub use scheme::{
    dephasing_distance,
    order_parameter_of, outer_solve, reconstruct, verify_lemmas, DiagnosticsLedger, LedgerEntry, LemmaReport,
    OuterFailure, OuterOptions, OuterSolution, ReconstructedDensity,
};
pub use spectral::{AsymptoticState, DecayClass, FrequencyProfile, Mode};
pub use config::RunConfig;
pub use weight::{tail_bound, weighted_norm, WeightSpec};

pub type AsymptoticState64 = AsymptoticState<f64>;
pub type FrequencyProfile64 = FrequencyProfile<f64>;
pub type Grid64 = Grid<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type WeightSpec64 = WeightSpec<f64>;
pub type OrderParameterPath64 = OrderParameterPath<f64>;
pub type CharacteristicField64 = CharacteristicField<f64>;

pub type OuterSolution64 = OuterSolution<f64>;
pub type ParticleEnsemble64 = ParticleEnsemble<f64>;
pub type DecayModel64 = DecayModel<f64>;
