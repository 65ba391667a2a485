//! Scale functions, first-passage laws and dividend/bailout optimization for
//! spectrally negative Lévy risk models with hyperexponential claims, under
//! classical and Poisson-observed (Parisian) ruin and reflection.

pub mod control_opt;
pub mod crosscheck;
pub mod error;
pub mod expmix;
pub mod generator;
pub mod levy_model;
pub mod mc_oracle;
pub mod passage_laws;
pub mod quadrature;
pub mod scale_kernel;

pub use error::{Error, Result};
pub use levy_model::{catalog, LevyModel, Phase};
pub use scale_kernel::{build_gerber_shiu, GerberShiu, ParisianContext, Penalty, ScaleContext, Theta, Z0Kind};
