//! Method-of-lines simulator for two competing species that drift
//! downstream in a one-dimensional habitat, where each species disperses by a
//! mixture of linear diffusion and regularized p-Laplacian ("fast") diffusion.
//!
//! The numerics are generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix `f64`, which is what
//! the configuration loader, presets and CLI use.

pub mod scalar;
pub mod model;
pub mod operators;
pub mod integrate;
pub mod diagnostics;
pub mod oracle;
pub mod scenario;
pub mod config;

pub use scalar::Real;

pub type Grid64 = model::Grid<f64>;
pub type State64 = model::State<f64>;
pub type ModelConfig64 = model::ModelConfig<f64>;
pub type DispersalSpec64 = model::DispersalSpec<f64>;
pub type StepControl64 = integrate::StepControl<f64>;
pub type Outcome64 = model::Outcome<f64>;
pub type Grid32 = model::Grid<f32>;
pub type State32 = model::State<f32>;
pub type ModelConfig32 = model::ModelConfig<f32>;
