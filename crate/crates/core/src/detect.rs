//! Membership detectors for the correlation classes.
//!
//! A state is CQ exactly when its block family `{A_kl}` is normal and
//! pairwise commuting: a commuting normal family is simultaneously unitarily
//! diagonalizable, and the common eigenbasis `{φ_i}` gives
//! `ρ = Σ_i |φ_i⟩⟨φ_i| ⊗ η̃_i` with `η̃_i = (⟨φ_i| ⊗ I) ρ (|φ_i⟩ ⊗ I)`.
//! The detectors build that decomposition on every positive verdict and
//! report its reassembly residual. Separability itself is not decided; only
//! the PPT necessary condition is reported.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{
    block_family, commutator_norm, eig_hermitian, kron, min_eigenvalue, normality_defect, partial_transpose,
    BipartiteDims, BlockFamily, ComplexMatrix, HermitianOperator, Side, C64,
};
use crate::states::{DensityMatrix, Sampler, Seed};

/// Default detector tolerance (relative to `‖ρ‖_F²` for commutators).
pub const DEFAULT_TOL: f64 = 1e-8;

/// Eigenvalues closer than this (relative to the operator norm) are merged
/// into one cluster during simultaneous diagonalization.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Seed for the fixed random combination used to split the common eigenbasis.
const COMBINATION_SEED: Seed = Seed(0x5eed_c0de);

/// Tolerance from `CORRWIT_TOL`, falling back to [`DEFAULT_TOL`].
pub fn tolerance_from_env() -> f64 {
    std::env::var("CORRWIT_TOL")
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(DEFAULT_TOL)
}

/// `(is PPT, min eigenvalue of ρ^τ)`.
pub fn ppt_check(rho: &DensityMatrix, tol: f64) -> Result<(bool, f64)> {
    let dims = rho.bipartite_dims()?;
    let min = min_eigenvalue(&partial_transpose(rho.op(), dims)?)?;
    Ok((min >= -tol, min))
}

/// The worst offence found in a block family.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Normality { block: (usize, usize), norm: f64 },
    Commutator { first: (usize, usize), second: (usize, usize), norm: f64 },
}

impl Violation {
    pub fn norm(&self) -> f64 {
        match self {
            Violation::Normality { norm, .. } | Violation::Commutator { norm, .. } => *norm,
        }
    }
}

/// Classical-quantum decomposition read off a common eigenbasis. For `Side::A`
/// the state is `Σ_i |φ_i⟩⟨φ_i| ⊗ η̃_i`; for `Side::B` it is
/// `Σ_i η̃_i ⊗ |φ_i⟩⟨φ_i|`. `η̃_i` are unnormalized (trace `c_i`).
#[derive(Clone, Debug)]
pub struct ClassicalDecomposition {
    pub side: Side,
    /// Columns are the basis vectors `φ_i`.
    pub basis: ComplexMatrix,
    pub conditionals: Vec<HermitianOperator>,
    pub residual: f64,
}

impl ClassicalDecomposition {
    pub fn weights(&self) -> Vec<f64> {
        self.conditionals.iter().map(|c| c.trace()).collect()
    }

    pub fn reassemble(&self) -> HermitianOperator {
        assemble(self.side, &self.basis, &self.conditionals)
    }
}

fn assemble(side: Side, basis: &ComplexMatrix, conditionals: &[HermitianOperator]) -> HermitianOperator {
    let d = basis.dim();
    let mut acc = ComplexMatrix::zeros(d * d);
    for (i, cond) in conditionals.iter().enumerate() {
        let p = ComplexMatrix::outer(&basis.column(i), &basis.column(i));
        let term = match side {
            Side::A => kron(&p, cond.matrix()),
            Side::B => kron(cond.matrix(), &p),
        };
        acc = &acc + &term;
    }
    HermitianOperator::symmetrized(acc)
}

/// Result of a CQ (side A) or QC (side B) membership test.
#[derive(Clone, Debug)]
pub struct MembershipCertificate {
    pub side: Side,
    pub member: bool,
    pub max_normality: f64,
    pub max_commutator: f64,
    /// `tol · ‖ρ‖_F²`.
    pub threshold: f64,
    pub violation: Option<Violation>,
    pub decomposition: Option<ClassicalDecomposition>,
}

/// CC verdict: both one-sided certificates.
#[derive(Clone, Debug)]
pub struct CcCertificate {
    pub member: bool,
    pub cq: MembershipCertificate,
    pub qc: MembershipCertificate,
}

impl CcCertificate {
    /// Certificate of whichever side fails, if any.
    pub fn failing(&self) -> Option<&MembershipCertificate> {
        if !self.cq.member {
            Some(&self.cq)
        } else if !self.qc.member {
            Some(&self.qc)
        } else {
            None
        }
    }
}

pub fn cq_check(rho: &DensityMatrix, tol: f64) -> Result<MembershipCertificate> {
    classical_check(rho.op(), rho.bipartite_dims()?, Side::A, tol)
}

pub fn qc_check(rho: &DensityMatrix, tol: f64) -> Result<MembershipCertificate> {
    classical_check(rho.op(), rho.bipartite_dims()?, Side::B, tol)
}

pub fn cc_check(rho: &DensityMatrix, tol: f64) -> Result<CcCertificate> {
    let cq = cq_check(rho, tol)?;
    let qc = qc_check(rho, tol)?;
    Ok(CcCertificate { member: cq.member && qc.member, cq, qc })
}

/// Normality and commutator statistics of a family.
#[derive(Clone, Debug)]
pub struct FamilyDefects {
    pub max_normality: f64,
    pub worst_normal: (usize, usize),
    pub max_commutator: f64,
    pub worst_pair: ((usize, usize), (usize, usize)),
}

pub fn family_defects(family: &BlockFamily) -> FamilyDefects {
    let blocks: Vec<_> = family.iter().collect();
    let mut out = FamilyDefects {
        max_normality: 0.0,
        worst_normal: (0, 0),
        max_commutator: 0.0,
        worst_pair: ((0, 0), (0, 0)),
    };
    for (n, (idx, blk)) in blocks.iter().enumerate() {
        let defect = normality_defect(blk);
        if defect > out.max_normality {
            out.max_normality = defect;
            out.worst_normal = *idx;
        }
        for (jdx, other) in &blocks[n + 1..] {
            let c = commutator_norm(blk, other);
            if c > out.max_commutator {
                out.max_commutator = c;
                out.worst_pair = (*idx, *jdx);
            }
        }
    }
    out
}

/// One-sided classicality test on an arbitrary bipartite Hermitian operator.
pub fn classical_check(
    op: &HermitianOperator,
    dims: BipartiteDims,
    side: Side,
    tol: f64,
) -> Result<MembershipCertificate> {
    let family = block_family(op.matrix(), dims, side)?;
    let defects = family_defects(&family);
    let norm = op.frobenius_norm();
    let threshold = tol * norm * norm;

    let violation = if defects.max_normality > threshold || defects.max_commutator > threshold {
        Some(if defects.max_normality >= defects.max_commutator {
            Violation::Normality { block: defects.worst_normal, norm: defects.max_normality }
        } else {
            Violation::Commutator {
                first: defects.worst_pair.0,
                second: defects.worst_pair.1,
                norm: defects.max_commutator,
            }
        })
    } else {
        None
    };

    let decomposition = match violation {
        Some(_) => None,
        None => {
            let basis = common_eigenbasis(&family)?;
            let conditionals = conditionals(&family, &basis);
            let back = assemble(side, &basis, &conditionals);
            let residual = (op.matrix() - back.matrix()).frobenius_norm();
            Some(ClassicalDecomposition { side, basis, conditionals, residual })
        }
    };

    Ok(MembershipCertificate {
        side,
        member: violation.is_none(),
        max_normality: defects.max_normality,
        max_commutator: defects.max_commutator,
        threshold,
        violation,
        decomposition,
    })
}

fn conditionals(family: &BlockFamily, basis: &ComplexMatrix) -> Vec<HermitianOperator> {
    let d = family.local();
    (0..d)
        .map(|i| {
            let phi = basis.column(i);
            let m = ComplexMatrix::from_fn(d, |a, b| {
                let av = family.get(a, b).apply(&phi);
                phi.iter().zip(&av).map(|(p, x)| p.conj() * x).sum()
            });
            HermitianOperator::symmetrized(m)
        })
        .collect()
}

/// Hermitian and anti-Hermitian parts of every block.
fn hermitian_generators(family: &BlockFamily) -> Vec<HermitianOperator> {
    let half_i = C64::new(0.0, -0.5);
    let mut gens = Vec::new();
    for (_, blk) in family.iter() {
        let adj = blk.adjoint();
        gens.push(HermitianOperator::symmetrized((blk + &adj).scale_real(0.5)));
        gens.push(HermitianOperator::symmetrized((blk - &adj).scale(half_i)));
    }
    gens
}

/// Common eigenbasis of a commuting normal family: diagonalize a fixed random
/// real combination of the Hermitian generators, then split each degenerate
/// cluster by the generators one at a time.
pub fn common_eigenbasis(family: &BlockFamily) -> Result<ComplexMatrix> {
    let d = family.local();
    let gens = hermitian_generators(family);
    let mut sampler = Sampler::new(COMBINATION_SEED);
    let mut combo = HermitianOperator::zeros(d);
    for g in &gens {
        let c: f64 = sampler.rng().random_range(-1.0..1.0);
        combo = &combo + &g.scale(c);
    }

    let mut subspaces = split(&ComplexMatrix::identity(d), d, &combo)?;
    for g in &gens {
        let mut next = Vec::with_capacity(subspaces.len());
        for q in subspaces {
            if q.len() == 1 {
                next.push(q);
            } else {
                let qm = columns_to_rect(&q, d);
                next.extend(split(&qm, q.len(), g)?);
            }
        }
        subspaces = next;
    }
    let cols: Vec<Vec<C64>> = subspaces.into_iter().flatten().collect();
    Ok(ComplexMatrix::from_fn(d, |i, j| cols[j][i]))
}

/// Rectangular `d × m` matrix stored in a `d × d` square with zero padding.
fn columns_to_rect(cols: &[Vec<C64>], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, |i, j| if j < cols.len() { cols[j][i] } else { C64::new(0.0, 0.0) })
}

/// Diagonalizes `Q* G Q` on the `m` leading columns of `q` and groups the
/// resulting vectors into eigenvalue clusters.
fn split(q: &ComplexMatrix, m: usize, g: &HermitianOperator) -> Result<Vec<Vec<Vec<C64>>>> {
    let d = q.dim();
    let cols: Vec<Vec<C64>> = (0..m).map(|j| q.column(j)).collect();
    let gq: Vec<Vec<C64>> = cols.iter().map(|c| g.matrix().apply(c)).collect();
    let restricted = HermitianOperator::symmetrized(ComplexMatrix::from_fn(m, |a, b| {
        cols[a].iter().zip(&gq[b]).map(|(x, y)| x.conj() * y).sum()
    }));
    let eig = eig_hermitian(&restricted)?;
    let scale = g.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut clusters: Vec<Vec<Vec<C64>>> = Vec::new();
    for n in 0..m {
        let coeffs = eig.vector(n);
        let v: Vec<C64> = (0..d).map(|i| (0..m).map(|a| cols[a][i] * coeffs[a]).sum()).collect();
        let new_cluster = n == 0 || eig.values[n] - eig.values[n - 1] >= CLUSTER_GAP * scale;
        if new_cluster {
            clusters.push(vec![v]);
        } else {
            clusters.last_mut().expect("non-empty").push(v);
        }
    }
    Ok(clusters)
}

/// Membership summary for the classes of the inclusion chain
/// CC ⊂ CQ ⊂ SEP ⊂ PPT. Separability is not decided.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub npt: bool,
    pub ppt: bool,
    pub cq: bool,
    pub qc: bool,
    pub cc: bool,
    pub min_pt_eig: f64,
    #[serde(rename = "max_commutator_A")]
    pub max_commutator_a: f64,
    #[serde(rename = "max_normality_A")]
    pub max_normality_a: f64,
    #[serde(rename = "max_commutator_B")]
    pub max_commutator_b: f64,
    #[serde(rename = "max_normality_B")]
    pub max_normality_b: f64,
    pub tolerance: f64,
}

pub fn classify(rho: &DensityMatrix, tol: f64) -> Result<ClassReport> {
    let (ppt, min_pt_eig) = ppt_check(rho, tol)?;
    let cc = cc_check(rho, tol)?;
    Ok(ClassReport {
        npt: !ppt,
        ppt,
        cq: cc.cq.member,
        qc: cc.qc.member,
        cc: cc.member,
        min_pt_eig,
        max_commutator_a: cc.cq.max_commutator,
        max_normality_a: cc.cq.max_normality,
        max_commutator_b: cc.qc.max_commutator,
        max_normality_b: cc.qc.max_normality,
        tolerance: tol,
    })
}
