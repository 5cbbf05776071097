//! Numerical workbench for two-dimensional acoustic scattering with phaseless
//! far-field data.
//!
//! The crate covers the full experimental loop at a fixed wavenumber `k`:
//!
//! * forward solvers for sound-soft / impedance obstacles, inhomogeneous media
//!   and locally perturbed sound-soft half-planes, each producing far-field
//!   patterns normalised so that `u_s ~ e^{ikr}/sqrt(r) * u_inf(x_hat)`,
//! * synthesis of phaseless data `|u_inf|` for single plane waves and for
//!   superpositions with a fixed reference wave, in the presence of a known
//!   sound-soft reference ball,
//! * a constructive phase-recovery pipeline (relative phases from the cosine
//!   identity, sign resolution, a reciprocity-based lift to absolute phases,
//!   conjugation-branch disambiguation against the reference ball, optional
//!   global-phase fixing on the ball boundary),
//! * a linear sampling inversion producing indicator maps of the scatterer
//!   support.
//!
//! Everything is deterministic: noise is injected only through explicitly
//! seeded generators, and solvers are direct or tolerance-controlled.

pub mod analytic;
pub mod error;
pub mod farfield;
pub mod forward_medium;
pub mod forward_obstacle;
pub mod forward_roughsurface;
pub mod geometry;
pub mod inversion_lsm;
pub mod nystrom;
pub mod phase_recovery;
pub mod phaseless;
pub mod scenes;
pub mod specfun;
pub mod validate;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
