//! Core library for simulating bivariate subordinators and checking when
//! they creep through monotone curves, with matching closed-form passage
//! probabilities evaluated by adaptive quadrature.

pub mod analytic;
pub mod conditioned;
pub mod creep_detect;
pub mod mc_estimator;
pub mod path_engine;
pub mod process_model;
pub mod quad;
pub mod special;
