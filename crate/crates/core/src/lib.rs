//! Generation and coherent control of dark-state spatial modes in a
//! counter-propagating Λ-type EIT medium.
//!
//! Two engines share one scenario description:
//!
//! * [`obe`] integrates the full optical-Bloch equations with quasi-static
//!   probe propagation;
//! * [`dsp`] integrates the reduced Schrödinger-like polariton equation with
//!   synthetic scalar and vector potentials.
//!
//! [`eigen`] supplies the spatial modes both engines are measured against,
//! and [`experiments`] wraps presets, configuration files and CSV output.

pub mod analysis;
pub mod dsp;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod model;
pub mod obe;
pub mod potentials;
pub mod scenario;
pub mod schedule;

pub use error::{Error, Result};
