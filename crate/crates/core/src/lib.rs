//! Spectral toolkit for studying how shear flows mix and dissipate a passive
//! scalar on the two-dimensional torus.
//!
//! The crate is organized around a handful of small models that share one
//! sparse Fourier representation ([`spectral`]) and one time-series format
//! ([`diagnostics::NormSeries`]):
//!
//! * [`viscous`]: split-step solver for advection-diffusion under a
//!   piecewise-steady horizontal shear, plus the closed-form Couette mode.
//! * [`mixer`]: inviscid shear schedule that contracts the H^-1 norm by a
//!   fixed factor per unit time while preserving L^2.
//! * [`pulsed`]: exactly solvable pulsed lattice cascade (shear or cat map
//!   composed with a heat pulse), tracked in log-magnitude form.
//! * [`confined`]: one-dimensional confined evolution with a discrete
//!   spectrum, used to witness exponential (not faster) lower bounds.
//! * [`diagnostics`]: decay-rate fitting and the pass/fail checks built on it.

pub mod confined;
pub mod diagnostics;
pub mod mixer;
pub mod pulsed;
pub mod spectral;
pub mod viscous;
