//! States, channels and entanglement-assisted protocols.
//!
//! Conventions used everywhere in the crate:
//!
//! * `|γ⟩ = Σ_i |ii⟩` is unnormalized, so the canonical purification
//!   `|ρ⟩ = (√ρ ⊗ I)|γ⟩` of a state has unit norm.
//! * The Choi matrix of `N: A → B` is `J = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` on
//!   `A' ⊗ B` (reference first), with `tr J = d_in`.
//! * The joint output of `N` on `ρ` is `(√ρ ⊗ I) J (√ρ ⊗ I)`; its `A'`
//!   marginal is `ρ` while the channel itself is fed `ρᵀ`.

mod channel;
mod constructors;
mod io;
mod protocol;
mod state;

pub use channel::{joint_output, joint_output_factor, stinespring, QuantumChannel};
pub use constructors::{
    constant_channel, dephasing, depolarizing, identity_channel, random_channel,
    random_channel_with, random_density, random_density_with, random_unitary,
};
pub use io::{channel_from_json, channel_to_json, matrix_to_json};
pub use protocol::{elocc_to_channel, teleportation, ELOCCProtocol};
pub use state::{canonical_purification, DensityOperator, PureState};

/// Tolerance for `Σ K†K = I` and for the Choi marginal.
pub const TP_TOL: f64 = 1e-8;
/// Channels closer than this in Choi max-entry distance count as equal.
pub const CHANNEL_EQ_TOL: f64 = 1e-9;
