//! Time-dependent orbital diamagnetic moment `M_z(t)` of a charged Brownian
//! particle in a uniform magnetic field, coupled to an Ohmic bath.
//!
//! Three independent routes are provided and cross-checked against each
//! other:
//!
//! * residue closed forms in the high- and low-temperature limits
//!   ([`moment_free`], [`moment_confined`]),
//! * direct quadrature of the thermal frequency integrals
//!   ([`thermal`]),
//! * a classical Monte-Carlo estimator built on exact Gaussian updates of
//!   the linear Langevin system ([`mc`]).
//!
//! Everything is expressed in natural units `ħ = k_B = m = c = q = 1`.
//! Moments come out in units of `qħ/mc`, times in the natural unit; the
//! `γ⁻¹` time convention of the published figures is only applied by the
//! output layer ([`figures`], [`csv`]).

pub mod cmath;
pub mod csv;
pub mod error;
pub mod figures;
pub mod mc;
pub mod moment_confined;
pub mod moment_free;
pub mod response;
pub mod series;
pub mod svg;
pub mod thermal;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
pub use series::{Method, MomentSeries};
pub use thermal::{QuadOptions, QuadratureReport, ThermalKernel};
pub use units::{Family, Params, Regime, RegimeKind};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
