//! Serializable forms of the witness certificates.

use serde::Serialize;

use super::files::{Entries, SCHEMA_VERSION};
use crate::detect::{CcCertificate, Violation};
use crate::linalg::Side;
use crate::witness::{
    BlockCommutator, ClassCrossingCertificate, Crossing, EntanglementWitnessCertificate, FlatCounterexample,
    LemmaBranch,
};

#[derive(Serialize)]
pub struct ReducedRecord {
    pub inner: Entries,
    pub coupling: Entries,
    pub alpha: f64,
}

#[derive(Serialize)]
pub struct EntanglementRecord {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub d: usize,
    pub lambda: f64,
    pub min_pt_eig: f64,
    pub branch: LemmaBranch,
    pub delta: Entries,
    pub u: Entries,
    pub v: Entries,
    pub base: Entries,
    pub kappa: Entries,
    pub reduced: ReducedRecord,
}

impl From<&EntanglementWitnessCertificate> for EntanglementRecord {
    fn from(c: &EntanglementWitnessCertificate) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "entangle",
            d: c.delta.dims().local(),
            lambda: c.lambda,
            min_pt_eig: c.min_pt_eig,
            branch: c.branch,
            delta: Entries::from_matrix(c.delta.op().matrix()),
            u: Entries::from_matrix(&c.u),
            v: Entries::from_matrix(&c.v),
            base: Entries::from_matrix(c.base.op().matrix()),
            kappa: Entries::from_matrix(c.kappa.op().matrix()),
            reduced: ReducedRecord {
                inner: Entries::from_matrix(c.reduced.inner.matrix()),
                coupling: Entries::from_slice(&c.reduced.coupling),
                alpha: c.reduced.alpha,
            },
        }
    }
}

#[derive(Serialize)]
pub struct Verdict {
    pub cq: bool,
    pub qc: bool,
    pub cc: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cq_violation: Option<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qc_violation: Option<Violation>,
}

impl From<&CcCertificate> for Verdict {
    fn from(c: &CcCertificate) -> Self {
        Self {
            cq: c.cq.member,
            qc: c.qc.member,
            cc: c.member,
            cq_violation: c.cq.violation.clone(),
            qc_violation: c.qc.violation.clone(),
        }
    }
}

pub fn crossing_name(c: Crossing) -> &'static str {
    match c {
        Crossing::NonCq => "noncq",
        Crossing::NonCc => "noncc",
        Crossing::NonCqOrQc => "nonclass",
    }
}

#[derive(Serialize)]
pub struct CrossingRecord {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub d: usize,
    pub side: Side,
    pub lambda: f64,
    pub t: usize,
    pub holds: bool,
    pub delta: Entries,
    pub base: Entries,
    pub kappa: Entries,
    pub sigma: Entries,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Entries>,
    pub commutators: Vec<BlockCommutator>,
    pub base_verdict: Verdict,
    pub kappa_verdict: Verdict,
}

impl From<&ClassCrossingCertificate> for CrossingRecord {
    fn from(c: &ClassCrossingCertificate) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: crossing_name(c.crossing),
            d: c.delta.dims().local(),
            side: c.side,
            lambda: c.lambda,
            t: c.t,
            holds: c.holds(),
            delta: Entries::from_matrix(c.delta.op().matrix()),
            base: Entries::from_matrix(c.base.op().matrix()),
            kappa: Entries::from_matrix(c.kappa.op().matrix()),
            sigma: Entries::from_matrix(c.sigma.matrix()),
            gamma: c.gamma.as_ref().map(|g| Entries::from_matrix(g.matrix())),
            commutators: c.commutators.clone(),
            base_verdict: (&c.base_evidence).into(),
            kappa_verdict: (&c.kappa_evidence).into(),
        }
    }
}

#[derive(Serialize)]
pub struct FlatRecord {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub d: usize,
    /// Threshold on the coefficient of the unnormalized direction.
    pub lambda_max: f64,
    pub scan_min: f64,
    pub delta: Entries,
    pub scan: Vec<[f64; 2]>,
}

impl From<&FlatCounterexample> for FlatRecord {
    fn from(f: &FlatCounterexample) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "flat",
            d: f.delta.dims().local(),
            lambda_max: f.lambda_max,
            scan_min: f.scan_min(),
            delta: Entries::from_matrix(f.delta.op().matrix()),
            scan: f.scan.iter().map(|&(l, e)| [l, e]).collect(),
        }
    }
}
