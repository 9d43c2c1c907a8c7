//! Simulation: synthetic paired data, bootstrap procedures and calibration.

pub mod bootstrap;
pub mod calibration;
pub mod generate;

pub use bootstrap::{
    bootstrap_nstar_ci, bootstrap_power, bootstrap_wald_power, paired_bootstrap_test, power_crossing,
    BootstrapTest, NStarInterval,
};
pub use calibration::{
    calibration_grid, tune_delta_bernoulli, tune_delta_for_power, tune_delta_latent, CalibrationCell,
    GridOptions, Variant,
};
pub use generate::{gen_paired_bernoulli, gen_paired_graded, GeneratorSpec};
