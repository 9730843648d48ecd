//! Variational characterization of the drift.
//!
//! The action `A(u) = ½ ∫_0^T ||u(t)||²_{H¹} dt` is differentiated along admissible
//! variations `v` (divergence free, vanishing at `t = 0` and `t = T`). For
//! perturbations built by composing the stochastic flow with `e_ε`, solving
//! `∂_t e_ε = ε v̇(t, e_ε)`, the first variation is
//!
//! ```text
//! δA = ∫ ⟨v̇ + (u·∇)v - (v·∇)u + νΔv, (1 - Δ)u⟩ dt
//! ```
//!
//! which vanishes for every `v` exactly when `u` solves viscous Camassa-Holm.
//! Perturbing only the drift drops the `(v·∇)u` term and yields Leray-alpha.

mod criticality;
mod flow;
mod identities;
mod minimize;
mod oracle;
mod quadrature;
mod variation;

pub use criticality::{
    criticality_check, criticality_tolerance, CriticalityReport, CRITICALITY_TOL_COEFFICIENT,
};
pub use flow::{variation_flow, MapJet, VariationFlow};
pub use identities::{
    action, first_variation_ch, first_variation_leray, pairing, time_weights, weak_pairing_ch,
    weak_pairing_leray, PairingTerms, VariationClass,
};
pub use minimize::{
    constrained_minimize, constraint_value, h1_path_distance, minimization_oracle, MinimizeResult,
    OracleMinimizer,
};
pub use oracle::{fd_derivative, fd_study, perturbed_action, FdPoint, FdStudy, OracleConfig};
pub use quadrature::{derivative_stencil, simpson_weights, time_derivative};
pub use variation::{
    random_drift_path, variation_battery, TimeProfile, VariationField, VariationTerm,
};

#[cfg(test)]
mod tests;
