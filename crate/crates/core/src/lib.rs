//! Numerics for the compactified (III_b) trigonometric Ruijsenaars-Schneider
//! system.
//!
//! The crate is organized in four layers:
//!
//! * [`matkernel`] — complex matrix arithmetic, eigendecomposition of unitary
//!   matrices, and the alcove (spectral) coordinates of SU(n) elements.
//! * [`classical`] — the local III_b system: unitary Lax matrix, Hamiltonian,
//!   Darboux coordinates, the sphere embedding, the action map into the
//!   Delzant polytope, and finite-difference Poisson-bracket / RK4 flow
//!   harnesses.
//! * [`double`] — the internally fused double SU(n) x SU(n): group-valued
//!   moment map, invariant 2-form, torus flows, and the explicit lift of a
//!   phase-space point onto the moment-map constraint surface.
//! * [`quantum`] — the quantization lattice and the closed-form joint spectra
//!   of the action operators and commuting Hamiltonians.
//!
//! [`verify`] drives seeded randomized checks of every identity the library
//! claims, and [`sample`] holds the deterministic samplers those sweeps use.
//! All operations are pure functions of their inputs; values are immutable
//! after construction and safe to share between threads.

pub mod classical;
pub mod double;
pub mod matkernel;
pub mod quantum;
pub mod sample;
pub mod tol;
pub mod verify;

pub use classical::{derive_params, CouplingParams, DarbouxPoint, Membership, Polytope};
pub use matkernel::{AlcovePoint, CMat, CVec, UnitaryMatrix};
pub use quantum::{QuantizationData, StateIndex};
pub use verify::{Suite, VerifyConfig, VerifyReport};
