//! Entanglement certification from measured expectation values.
//!
//! Given observables `A_k` and measured values `a_k`, [`dual::lower_bound`]
//! returns `ε(a)`, a lower bound on the geometric measure or the generalized
//! geometric measure of every state compatible with the data, together with
//! the linear witness that certifies it.

pub mod dual;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod observables;
pub mod record;
pub mod scenarios;

pub use dual::{
    dual_value, lower_bound, supergradient, verify_dual, BoundResult, BoundStatus, DualConfig,
    DualEvaluation, LowerBoundConfig, MeasureKind, OuterMethod, VerifyReport,
};
pub use error::{Error, Result};
pub use measures::{
    closest_biseparable, closest_product_state, geometric_measure_pure, ggm_pure,
    schmidt_coefficients, AlsConfig, Bipartition, BiseparableApprox, ProductFit, ProductState,
};
pub use observables::{
    build_cluster_state, build_named_state, expectation, noisy_state, parse_pauli_sum,
    DensityMatrix, HermitianObservable, HilbertStructure, MeasurementRecord, NamedState,
    PauliTermSum, PureState,
};
pub use record::RecordFile;
pub use scenarios::{
    noise_threshold, propagate_uncertainty, scenario_record, sweep, wc_threshold, ww_threshold,
    Scenario, SweepResult, Uncertainty,
};
