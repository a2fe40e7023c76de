//! Generalized labeled multi-Bernoulli (GLMB) densities and a sequential Monte
//! Carlo multi-target filter for generic, non-separable measurement models.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure
//! computation; file formats, configuration and the experiment runner live in
//! the `glmb-tbd` companion crate.
//!
//! Module map:
//!
//! * [`label`]: labels, label sets, labeled states and set predicates.
//! * [`glmb`]: δ-GLMB and LMB densities with cardinality, PHD and truncation.
//! * [`approx`]: conjugate separable update and the marginal-product
//!   δ-GLMB approximation of arbitrary labeled densities.
//! * [`oracle`]: exhaustive set integrals on small discrete instances.
//! * [`filter`]: prediction with LMB births, generic and separable updates,
//!   resampling and track extraction.
//! * [`sensor`]: radar track-before-detect dynamics, frame synthesis and
//!   likelihood ratios.
//! * [`metrics`]: OSPA and Monte Carlo aggregation.
#![no_std]
// `!(x >= 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod approx;
pub mod error;
pub mod filter;
pub mod glmb;
pub mod label;
pub mod math;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod sensor;

pub use error::{Error, Result};
pub use label::{Kinematic, Label, LabelSet, LabeledState, STATE_DIM};
