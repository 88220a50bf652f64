//! Stimulated emission tomography of biphoton joint spectral amplitudes.
//!
//! The crate covers kernel construction ([`jsa`]), Schmidt analysis
//! ([`schmidt`]), direct and interferometric detection signals
//! ([`signals`]), an independent multimode Gaussian-state model
//! ([`oracle`]) and inversion of interferometric records back to the
//! kernel ([`reconstruction`]).

pub mod error;
pub mod format;
pub mod grid;
pub mod jsa;
pub mod oracle;
pub mod reconstruction;
pub mod schmidt;
pub mod signals;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{dft2, dft2_onto, inner_product, inner_product_2d, make_grid, Field1D, Field2D, ModeGrid, Sign};
pub use jsa::{
    build_jsa_pump_phasematch, gaussian_jsa, normalize, CouplingParams, JointAmplitude, KernelFile,
    PhaseMatchingFunction, PumpProfile,
};
pub use schmidt::{reconstruct_from_schmidt, schmidt_decompose, schmidt_number, SchmidtData, DEFAULT_TRUNCATION_TOL};
pub use signals::{InterferometerSettings, SeedProfile};
pub use oracle::{build_transform, oracle_expectations, oracle_interferometric, seed_displacement, GaussianTransform};
pub use reconstruction::{
    apply_jitter_analytic, apply_jitter_monte_carlo, fidelity, invert_to_modal, nyquist_check, sample_signal_map,
    ForwardModel, Inversion, MeasurementRecord, NoiseParams, NyquistReport, Provenance,
};
