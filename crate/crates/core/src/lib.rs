//! Random-effects meta-analysis of continuous outcomes with estimated
//! within-study variances.
//!
//! Estimators: DerSimonian–Laird, Hardy–Thompson profile likelihood with
//! Bartlett-corrected and Skovgaard-corrected intervals, and a bivariate
//! likelihood that models the sampling variances themselves. A simulator
//! and Monte Carlo harness compare them.

pub mod bivariate;
pub mod classic;
pub mod error;
pub mod harness;
pub mod likelihood;
pub mod model;
mod optim;
mod roots;
pub mod simulation;
pub mod statkit;

pub use bivariate::{bd_estimate, bd_fit, bd_fit_with, BdEstimate, BdModel, BdOptions, EtaRule};
pub use classic::{cochran_q, dl_fit, dl_fit_with, dl_tau2, DlOptions};
pub use error::{Error, Result};
pub use harness::{fit_methods, run_benchmark, BenchmarkConfig, MethodStats, MethodSummary, PerformanceSummary};
pub use likelihood::{gs_ci, ht_mle, ht_profile_ci, nb_ci, HtEstimate, HtProfile, SkovgaardForm};
pub use model::{validate_dataset, FitResult, MetaDataset, Method, StudyRecord};
pub use simulation::{preset, preset_variant, simulate_meta_dataset, IpdSettings, PresetVariant};
