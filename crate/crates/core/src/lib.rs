//! Toolkit for releasing k-anonymous tables to several recipients with traceable decoy
//! classes.
//!
//! The pipeline: load and strip a dataset ([`dataset`]), anonymize it by optimal global
//! recoding ([`anonymize`]), link its classes to a population to find high-risk residual
//! classes ([`linkage`]), inject per-recipient decoys and harden the releases against
//! collusion ([`decoy`]), simulate colluding recipients ([`collusion`]) and attribute leaked
//! material back to a recipient ([`attribution`]). [`synthpop`] generates synthetic
//! populations for experiments.

pub mod anonymize;
pub mod attribution;
pub mod collusion;
pub mod decoy;
pub mod dataset;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod linkage;
pub mod report;
pub mod seed;
pub mod synthpop;

pub use error::{Error, ErrorClass, Result};
