//! Batch audit toolkit for satellite active-fire detection archives in the
//! FIRMS VIIRS CSV format.
//!
//! The toolkit ingests detection CSVs in a single streaming pass and runs a
//! statistical audit battery over them: data-quality validation,
//! contingency/chi-square analysis of confidence versus day/night status,
//! five-way count verification, bootstrap degeneracy testing, decision-tree
//! reconstruction of the confidence assignment, brightness-threshold
//! inference and spatio-temporal consistency checks. A seeded synthetic
//! generator produces FIRMS-format corpora with the nighttime constraint
//! built in, serving as the ground-truth oracle for end-to-end tests.
//!
//! Entry points:
//! - [`audit::run_audit`] orchestrates everything from an [`audit::AuditConfig`];
//! - the `fireaudit` binary exposes each analysis as a subcommand;
//! - individual modules ([`stats`], [`tree`], [`resample`], …) are usable on
//!   their own.

pub mod audit;
pub mod brightness;
#[cfg(feature = "fetch")]
pub mod fetch;
pub mod qc;
pub mod query;
pub mod records;
pub mod resample;
pub mod seeding;
pub mod spacetime;
pub mod stats;
pub mod synth;
pub mod tree;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;
