//! Payload-level stealthy-attack detection for CAN bus traffic.
//!
//! The whole bus is monitored as one byte stream: payload bytes of consecutive
//! frames are concatenated in bus order ([`frame`]), a signal subspace is
//! learned from an attack-free prefix and every new byte is scored by its
//! eigenvalue-weighted departure from the training cluster ([`ssa`]). The
//! [`sim`] module generates deterministic bus traffic with suspension,
//! fabrication, masquerade and conquest attacks, and [`tuner`] calibrates the
//! alarm threshold.

pub mod frame;
pub mod sim;
pub mod ssa;
pub mod tuner;
