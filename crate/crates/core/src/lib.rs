//! Solvers and verifiers for finite-dimensional rate-independent systems
//! `∂Ψ₀(u′) + DE(t,u) ∋ 0`.
//!
//! The crate computes viscous and incremental approximations, evaluates the
//! vanishing-viscosity contact potential and Finsler jump costs, and checks
//! candidate curves for the stability conditions, energy balances, and jump
//! conditions that characterize local, energetic, BV, and parametrized solutions.

pub mod analysis;
pub mod contact;
pub mod energy;
pub mod error;
pub mod numeric;
pub mod param;
pub mod solver;
pub mod space;
pub mod transitions;

pub use contact::{ContactClass, ContactPotential, LambdaInterval};
pub use energy::{Energy, EnergyFunctional, EnergyKind, Loading, SearchBox};
pub use error::{Error, Result};
pub use space::{Gauge, GaugeKind, Norm, Viscosity, ViscousPotential};
