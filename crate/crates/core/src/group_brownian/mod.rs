//! Truncated Brownian motion on the volume-preserving diffeomorphism group of
//! `T^d`, drifted Lagrangian flows and their Monte Carlo diagnostics.
//!
//! The flow is
//!
//! ```text
//! dg = u(t, g) dt + Σ_{k, α} α_k⁻¹ ε_k^α [cos(k·g) dx¹ + sin(k·g) dx²] s + s dy
//! ```
//!
//! with `s = 1` (unscaled) or `s_i = √(ν / c_i)` (generator `ν Δ`).

mod coupling;
mod drift;
mod flow;
mod generator;
mod hoelder;
mod noise;
mod record;
mod stats;

pub use coupling::{
    coupling_moment, dyadic_coupling_test, CouplingLevel, CouplingParams, CouplingReport,
    DEFAULT_MODE_LIMIT,
};
pub use drift::{ConstantDrift, Drift, FrozenDrift, NoDrift, PathDrift, ReversedDrift};
pub use flow::{
    euler_step, simulate_flow, simulate_flow_path, simulate_independent, simulate_inverse_flow,
    FlowConfig, FlowRun,
    NoiseRecord, ParticleEnsemble,
};
pub use generator::{
    estimate_generator, generator_target, ito_stratonovich_gap, perturb_polarizations,
    richardson_generator, sample_points, GeneratorEstimate, RichardsonEstimate, TestFunction,
    MIN_SAMPLES,
};
pub use hoelder::{hoelder_exponent_estimate, hoelder_test, HoelderEstimate, HoelderLayout};
pub use noise::{NoiseIncrement, NoiseModes};
pub use record::{
    read_noise_record, write_noise_record, write_trajectory_csv, NoiseRecordHeader, NOISE_LAYOUT,
};
pub use stats::{mean_displacement, uniformity_chi_square, ChiSquareTest};

#[cfg(test)]
mod tests;
