#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bvp;
pub mod composite;
pub mod error;
pub mod numerics;
pub mod ode;
pub mod painleve;
pub mod scalar;
pub mod spectrum;
pub mod theory;

pub use error::{Error, Result};
pub use painleve::Branch;
pub use scalar::Real;

pub type PainleveSolution = painleve::PainleveSolution<f64>;
pub type DifferenceProfile = painleve::DifferenceProfile<f64>;
pub type CompositeConfig = composite::CompositeConfig<f64>;
pub type CompositeSolution = composite::CompositeSolution<f64>;
pub type Mesh = composite::Mesh<f64>;
pub type MeshSpec = composite::MeshSpec<f64>;
pub type BvpSolution = bvp::BvpSolution<f64>;
pub type SpectrumReport = spectrum::SpectrumReport;
