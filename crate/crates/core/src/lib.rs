//! Membership detectors and constructive boundary-crossing witnesses for
//! bipartite correlation classes (NPT/PPT, CQ, QC, CC), together with POVM
//! kernel-space analysis and the minimal CQ-deciding measurement.

pub mod cli;
pub mod detect;
pub mod error;
pub mod linalg;
pub mod povm;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
