//! Exact projection of linear feasible regions onto a renewable-output
//! subspace.
//!
//! The pipeline is: build a linearized power-flow region over
//! `(w, x)` ([`region`]), project it onto `w` by point-hyperplane iteration
//! ([`projector`]) or by Fourier–Motzkin elimination, and certify the result
//! ([`verify`]). Projection methods are registered by name in [`method`].

pub mod linalg;
pub mod lp;
pub mod method;
pub mod projector;
pub mod region;
pub mod verify;
