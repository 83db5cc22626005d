//! Relay-based Byzantine broadcast on complete and complete-bipartite
//! networks, the BA-lever agreement protocol built on it, and a deterministic
//! adversarial simulator with an exhaustive explorer.

pub mod adversary;
pub mod agreement;
pub mod analysis;
pub mod broadcast;
pub mod scalar;
pub mod simulator;
pub mod topology;

pub use scalar::Scalar;

pub type SpectralReportF64 = topology::SpectralReport<f64>;
pub type SpectralReportF32 = topology::SpectralReport<f32>;
pub type CoverageReportF64 = analysis::CoverageReport<f64>;
pub type CoverageReportF32 = analysis::CoverageReport<f32>;
pub type EdgeCountCheckF64 = topology::EdgeCountCheck<f64>;
pub type EdgeCountCheckF32 = topology::EdgeCountCheck<f32>;
