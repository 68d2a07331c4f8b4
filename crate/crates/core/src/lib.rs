//! Decay and amplification of a discrete level coupled to a non-Hermitian
//! tight-binding band.
//!
//! A single level of real energy `omega_a` is side-coupled to a one-band
//! chain whose complex dispersion `omega(k)` traces a closed loop in the
//! energy plane. The crate integrates the coupled equations in time
//! ([`dynamics`]), decomposes the survival amplitude into pole and
//! branch-cut pieces via the self-energy and its analytic continuation
//! ([`spectral`]), classifies the bare band as stable, convectively or
//! absolutely unstable from its complex saddle points ([`stability`]), and
//! carries the closed-form solutions of the asymmetric-hopping chain
//! ([`closedform`]) used to cross-validate everything else.

pub mod closedform;
pub mod config;
pub mod csvio;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod spectral;
pub mod stability;

pub use closedform::{AsymmetricModel, Regime, Sheet};
pub use error::{Error, Result};
pub use lattice::{Dispersion, EnergyLoop, LoopLocation};
pub use spectral::{CouplingProfile, SelfEnergy, SpectralResult};
pub use stability::{RegimeClass, SaddlePoint, Verdict};
