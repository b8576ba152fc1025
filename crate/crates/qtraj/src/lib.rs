//! Forward-backward Q-function trajectories for quadrature measurements of
//! cat states, with Born-rule, postselection and meter-collapse estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod core;
pub mod density;
pub mod error;
pub mod postselect;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod sde_engine;
pub mod stats;

pub use crate::core::{AmplifierSpec, Branch, ModeSpec, SuperpositionSpec, TimeGrid, TwoModeSpec};
pub use crate::density::{Fringe, GaussFringeDensity, Gaussian};
pub use crate::error::{Error, Result};
pub use crate::rng::RngStream;
pub use crate::scalar::Real;

pub type Mode = ModeSpec<f64>;
pub type Superposition = SuperpositionSpec<f64>;
pub type TwoMode = TwoModeSpec<f64>;
pub type Amplifier = AmplifierSpec<f64>;
pub type Grid = TimeGrid<f64>;
pub type Density = GaussFringeDensity<f64>;
pub type Marginal1D = density::Marginal1D<f64>;
