//! Constructive witnesses: for a perturbation direction `Δ`, build a state in
//! a class together with a step `λ` that pushes it out of the class.
//!
//! Every search here is a geometric halving of `λ` from `0.1/‖Δ‖_F` down to a
//! floor of `1e-6/‖Δ‖_F`. Certificates require margins of `1e-8` so that the
//! verdicts are not at the mercy of round-off.

use serde::Serialize;

use crate::detect::{cc_check, CcCertificate, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    block_family, commutator_norm, eig_hermitian, hermitian_basis, kron, min_eigenvalue, operator_norm,
    partial_transpose, BipartiteDims, ComplexMatrix, HermitianOperator, ReducedBlock, Side, C64, ONE, ZERO,
};
use crate::states::{flip_operator, isotropic_boundary_state, max_entangled, DensityMatrix, Direction, PSD_TOL, UNITARY_TOL};

/// Initial step, relative to `1/‖Δ‖_F`.
pub const LAMBDA_START: f64 = 0.1;
/// Smallest step tried, relative to `1/‖Δ‖_F`.
pub const LAMBDA_FLOOR: f64 = 1e-6;
/// Margin required of the quantity that certifies a crossing.
pub const CERTIFICATE_MARGIN: f64 = 1e-8;
/// Relative size below which an operator counts as a multiple of `I`, or a
/// reduced-block row counts as zero.
pub const SCALAR_TOL: f64 = 1e-10;
/// Relative size an entry of `Δ^τ` must exceed to seed the unitary choice.
pub const ENTRY_TOL: f64 = 1e-12;
/// Agreement required between a certificate's `κ` and `base + λΔ`.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Two-qubit compression

fn f_basis(dims: BipartiteDims) -> [Vec<(usize, f64)>; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (i00, i11, i01, i10) = (dims.index(0, 0), dims.index(1, 1), dims.index(0, 1), dims.index(1, 0));
    [vec![(i00, 1.0)], vec![(i11, 1.0)], vec![(i01, h), (i10, h)], vec![(i01, h), (i10, -h)]]
}

/// `W*XW` for an arbitrary operator, where `W` embeds `C²⊗C²` into `C^d⊗C^d`
/// and the 4×4 result is written in the basis `|00⟩, |11⟩,
/// (|01⟩+|10⟩)/√2, (|01⟩−|10⟩)/√2`.
pub fn compress(x: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    if dims.local() < 2 {
        return Err(Error::LocalDimension { d: dims.local(), min: 2 });
    }
    if x.dim() != dims.total() {
        return Err(Error::DimensionMismatch { expected: dims.total(), found: x.dim() });
    }
    let f = f_basis(dims);
    Ok(ComplexMatrix::from_fn(4, |a, b| {
        let mut acc = ZERO;
        for &(i, ci) in &f[a] {
            for &(j, cj) in &f[b] {
                acc += x.get(i, j) * (ci * cj);
            }
        }
        acc
    }))
}

/// Hermitian version of [`compress`].
pub fn embed_w(x: &HermitianOperator, dims: BipartiteDims) -> Result<HermitianOperator> {
    Ok(HermitianOperator::symmetrized(compress(x.matrix(), dims)?))
}

/// `T' ⊕ I_{d−2}`.
pub fn local_block_unitary(t: [[C64; 2]; 2], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, |i, j| match (i < 2 && j < 2, i == j) {
        (true, _) => t[i][j],
        (false, true) => ONE,
        (false, false) => ZERO,
    })
}

/// `diag(1, −1) ⊕ I`.
pub fn reflection(d: usize) -> ComplexMatrix {
    local_block_unitary([[ONE, ZERO], [ZERO, -ONE]], d)
}

/// `[[0, e^{±iπ/4}], [e^{∓iπ/4}, 0]] ⊕ I`, with `plus` selecting the upper sign.
pub fn twist(plus: bool, d: usize) -> ComplexMatrix {
    let s = if plus { 1.0 } else { -1.0 };
    let phase = C64::from_polar(1.0, s * std::f64::consts::FRAC_PI_4);
    local_block_unitary([[ZERO, phase], [phase.conj(), ZERO]], d)
}

// ---------------------------------------------------------------------------
// Unitary selection

/// Which local correction produced a nonzero last row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaBranch {
    /// `V = V₀`.
    Direct,
    /// `V = V₀T₀`.
    Reflect,
    /// `V = V₀T₊`.
    TwistPlus,
    /// `V = V₀T₋`.
    TwistMinus,
}

/// Local unitaries for which the reduced block of `Δ^τ` has a nonzero last
/// row, with the indices `(p, q, r, s)` of the seeding entry of `Δ^τ`.
#[derive(Clone, Debug)]
pub struct UnitaryChoice {
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub branch: LemmaBranch,
    pub indices: [usize; 4],
    pub block: ReducedBlock,
}

/// Permutation whose first two columns are `|a⟩` and `|b⟩` (or the smallest
/// index other than `a` when `b = a`), followed by the rest in order.
fn spanning_permutation(a: usize, b: usize, d: usize) -> ComplexMatrix {
    let second = if b != a { b } else { (0..d).find(|&k| k != a).expect("d ≥ 2") };
    let mut order = vec![a, second];
    order.extend((0..d).filter(|&k| k != a && k != second));
    ComplexMatrix::from_fn(d, |i, j| if order[j] == i { ONE } else { ZERO })
}

fn last_row_size(block: &ReducedBlock) -> f64 {
    block.alpha.abs().max(block.coupling_norm())
}

pub fn select_unitaries(delta: &Direction) -> Result<UnitaryChoice> {
    let dims = delta.dims();
    let d = dims.local();
    if d < 2 {
        return Err(Error::LocalDimension { d, min: 2 });
    }
    let norm = delta.op().frobenius_norm();
    let pt = partial_transpose(delta.op(), dims)?;
    let mut best = (0usize, 0usize, 0.0f64);
    for row in 0..dims.total() {
        for col in 0..dims.total() {
            let m = pt.get(row, col).norm();
            if m > best.2 {
                best = (row, col, m);
            }
        }
    }
    if best.2 <= ENTRY_TOL * norm {
        return Err(Error::ZeroDirection);
    }
    let (p, q, r, s) = (best.0 / d, best.0 % d, best.1 / d, best.1 % d);
    let u = spanning_permutation(p, r, d);
    let v0 = spanning_permutation(q, s, d);
    let thr = SCALAR_TOL * norm;

    let tilde = embed_w(&pt.conjugate_by(&kron(&u, &v0).adjoint()), dims)?;
    let row_nonzero = (0..4).any(|i| tilde.get(3, i).norm() > thr);
    let mut candidates = Vec::new();
    if row_nonzero {
        candidates.push((LemmaBranch::Direct, v0.clone()));
    } else if tilde.get(2, 2).norm() > thr {
        candidates.push((LemmaBranch::Reflect, &v0 * &reflection(d)));
    } else {
        candidates.push((LemmaBranch::TwistPlus, &v0 * &twist(true, d)));
        candidates.push((LemmaBranch::TwistMinus, &v0 * &twist(false, d)));
    }
    for (branch, v) in candidates {
        let block = reduced_block(delta, &u, &v)?;
        if last_row_size(&block) >= thr {
            return Ok(UnitaryChoice { u, v, branch, indices: [p, q, r, s], block });
        }
    }
    Err(Error::Construction("no local unitary pair gives a nonzero last row".into()))
}

/// Partition of `W*(U⊗V)*Δ^τ(U⊗V)W` at row and column 4.
///
/// The factor `d(d+1)/2` that turns the boundary state into `diag(1,1,1,0)`
/// is not applied; it only rescales `λ`.
pub fn reduced_block(delta: &Direction, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ReducedBlock> {
    let dims = delta.dims();
    for m in [u, v] {
        if m.dim() != dims.local() {
            return Err(Error::DimensionMismatch { expected: dims.local(), found: m.dim() });
        }
        let deviation = m.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
    }
    let pt = partial_transpose(delta.op(), dims)?;
    let rotated = pt.conjugate_by(&kron(u, v).adjoint());
    ReducedBlock::from_4x4(&embed_w(&rotated, dims)?)
}

// ---------------------------------------------------------------------------
// Step search

#[derive(Default)]
struct SearchLog {
    tried: usize,
    last_lambda: f64,
    last_min_eig: f64,
    last_failure: &'static str,
}

/// Halves `λ` from `start` until `base + λΔ` is positive and `accept` holds.
fn search_lambda(
    start: f64,
    base: &HermitianOperator,
    delta: &HermitianOperator,
    mut accept: impl FnMut(&HermitianOperator) -> Result<std::result::Result<(), &'static str>>,
) -> Result<(f64, HermitianOperator)> {
    let norm = delta.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let floor = LAMBDA_FLOOR / norm;
    let mut lambda = start;
    let mut log = SearchLog::default();
    while lambda.abs() >= floor {
        let kappa = base + &delta.scale(lambda);
        let min_eig = min_eigenvalue(&kappa)?;
        log.tried += 1;
        log.last_lambda = lambda;
        log.last_min_eig = min_eig;
        if min_eig < -PSD_TOL {
            log.last_failure = "not positive";
        } else {
            match accept(&kappa)? {
                Ok(()) => return Ok((lambda, kappa)),
                Err(why) => log.last_failure = why,
            }
        }
        lambda *= 0.5;
    }
    Err(Error::NoAdmissibleLambda {
        floor,
        diagnostics: format!(
            "{} steps from {start:.3e}; last lambda {:.3e}, min eigenvalue {:.3e}, rejected: {}",
            log.tried, log.last_lambda, log.last_min_eig, log.last_failure
        ),
    })
}

fn entangling_sign(block: &ReducedBlock, norm: f64) -> f64 {
    if block.alpha.abs() > SCALAR_TOL * norm {
        -block.alpha.signum()
    } else {
        1.0
    }
}

/// Step `λ` for which `base + λΔ` is a state with a partial transpose whose
/// smallest eigenvalue is at most `-1e-8`. The sign is opposite to `α`, or
/// positive when `α` vanishes and the coupling carries the negativity.
pub fn choose_lambda(block: &ReducedBlock, base: &DensityMatrix, delta: &Direction) -> Result<f64> {
    let dims = delta.dims();
    let norm = delta.op().frobenius_norm();
    let start = entangling_sign(block, norm) * LAMBDA_START / norm;
    let (lambda, _) = search_lambda(start, base.op(), delta.op(), |kappa| {
        let pt_min = min_eigenvalue(&partial_transpose(kappa, dims)?)?;
        Ok(if pt_min <= -CERTIFICATE_MARGIN { Ok(()) } else { Err("partial transpose not negative enough") })
    })?;
    Ok(lambda)
}

// ---------------------------------------------------------------------------
// Entanglement

/// A separable boundary state and a step along `Δ` that makes it NPT.
///
/// `v` is the unitary applied to the second factor of the state,
/// `|ψ⟩ = (U ⊗ V)|ψ₀⟩`. Partial transposition conjugates it, so `reduced` is
/// the block of `Δ^τ` rotated by `U ⊗ V̄`.
#[derive(Clone, Debug)]
pub struct EntanglementWitnessCertificate {
    pub delta: Direction,
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub lambda: f64,
    pub base: DensityMatrix,
    pub kappa: DensityMatrix,
    pub min_pt_eig: f64,
    pub reduced: ReducedBlock,
    pub branch: LemmaBranch,
}

impl EntanglementWitnessCertificate {
    /// Recomputes every invariant from `(U, V, λ, Δ)`.
    pub fn verify(&self) -> Result<()> {
        let dims = self.delta.dims();
        let psi = max_entangled(&self.u, &self.v, dims.local())?;
        let base = isotropic_boundary_state(&psi, dims)?;
        let rebuilt = base.op() + &self.delta.op().scale(self.lambda);
        let gap = (rebuilt.matrix() - self.kappa.op().matrix()).max_abs();
        if gap > RECONSTRUCTION_TOL {
            return Err(Error::Construction(format!("kappa differs from base + lambda*delta by {gap:.3e}")));
        }
        let min_eig = min_eigenvalue(self.kappa.op())?;
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositive { min_eig });
        }
        let pt_min = min_eigenvalue(&partial_transpose(self.kappa.op(), dims)?)?;
        if pt_min > -CERTIFICATE_MARGIN {
            return Err(Error::Construction(format!("partial transpose minimum {pt_min:.3e} is not below the margin")));
        }
        Ok(())
    }
}

pub fn build_entangling_perturbation(delta: &Direction) -> Result<EntanglementWitnessCertificate> {
    let dims = delta.dims();
    let choice = select_unitaries(delta)?;
    let v_state = choice.v.conj();
    let psi = max_entangled(&choice.u, &v_state, dims.local())?;
    let base = isotropic_boundary_state(&psi, dims)?;
    let lambda = choose_lambda(&choice.block, &base, delta)?;
    let kappa = base.perturbed(lambda, delta)?;
    let min_pt_eig = min_eigenvalue(&partial_transpose(kappa.op(), dims)?)?;
    Ok(EntanglementWitnessCertificate {
        delta: delta.clone(),
        u: choice.u,
        v: v_state,
        lambda,
        base,
        kappa,
        min_pt_eig,
        reduced: choice.block,
        branch: choice.branch,
    })
}

// ---------------------------------------------------------------------------
// Flat direction

/// `|00⟩⟨00| − |d−1,d−1⟩⟨d−1,d−1|` (unnormalized).
pub fn flat_direction_operator(d: usize) -> Result<HermitianOperator> {
    let dims = BipartiteDims::new(d)?;
    if d < 2 {
        return Err(Error::LocalDimension { d, min: 2 });
    }
    let mut diag = vec![0.0; dims.total()];
    diag[dims.index(0, 0)] = 1.0;
    diag[dims.index(d - 1, d - 1)] = -1.0;
    Ok(HermitianOperator::diag(&diag))
}

/// Smallest eigenvalue of `(ρ + λ′Δ*)^τ` with `ρ` the boundary state for
/// `U = V = I` and `Δ*` unnormalized.
pub fn flat_min_pt_eig(d: usize, lambda_prime: f64) -> Result<f64> {
    let dims = BipartiteDims::new(d)?;
    let base = isotropic_boundary_state(&crate::states::canonical_max_entangled(d), dims)?;
    let kappa = base.op() + &flat_direction_operator(d)?.scale(lambda_prime);
    min_eigenvalue(&partial_transpose(&kappa, dims)?)
}

/// A direction along which the fixed boundary state `U = V = I` stays PPT
/// for small steps, so the choice of local unitaries matters.
#[derive(Clone, Debug)]
pub struct FlatCounterexample {
    pub delta: Direction,
    /// PPT threshold `2/(d(d+1))` on the coefficient of the unnormalized
    /// direction; `‖Δ*‖_F = √2`.
    pub lambda_max: f64,
    /// `(λ′, min eig of κ^τ)` over `[−λ_max, λ_max]`.
    pub scan: Vec<(f64, f64)>,
}

impl FlatCounterexample {
    pub fn scan_min(&self) -> f64 {
        self.scan.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}

pub const FLAT_SCAN_POINTS: usize = 101;

pub fn flat_direction_counterexample(d: usize) -> Result<FlatCounterexample> {
    let op = flat_direction_operator(d)?;
    let dims = BipartiteDims::new(d)?;
    let delta = Direction::new(op, dims)?;
    let lambda_max = 2.0 / (d * (d + 1)) as f64;
    let n = FLAT_SCAN_POINTS - 1;
    let scan = (0..=n)
        .map(|k| {
            let lp = lambda_max * (2.0 * k as f64 / n as f64 - 1.0);
            Ok((lp, flat_min_pt_eig(d, lp)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlatCounterexample { delta, lambda_max, scan })
}

// ---------------------------------------------------------------------------
// Local states that do not commute with a given operator

/// `‖A − (tr A/d) I‖_F`.
pub fn non_scalar_norm(a: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let shift = a.trace() / d as f64;
    (a - &ComplexMatrix::identity(d).scale(shift)).frobenius_norm()
}

/// Full-rank state `(I + μΔ′)/d` with `[A, σ] ≠ 0`, where `Δ′` is the traceless
/// Hermitian basis element of largest commutator with `A`.
pub fn find_noncommuting_state(a: &ComplexMatrix) -> Result<DensityMatrix> {
    let d = a.dim();
    let scale = a.frobenius_norm();
    if non_scalar_norm(a) <= SCALAR_TOL * scale {
        return Err(Error::ScalarOperator);
    }
    let mut best: Option<(HermitianOperator, f64)> = None;
    for (k, e) in hermitian_basis(d).into_iter().enumerate() {
        let e = if k < d { e.traceless_part() } else { e };
        let c = commutator_norm(a, e.matrix());
        if best.as_ref().is_none_or(|b| c > b.1) {
            best = Some((e, c));
        }
    }
    let (dir, _) = best.expect("nonempty basis");
    let mu = 0.5 / operator_norm(&dir)?;
    let sigma = (&HermitianOperator::identity(d) + &dir.scale(mu)).scale(1.0 / d as f64);
    if commutator_norm(a, sigma.matrix()) < SCALAR_TOL * scale {
        return Err(Error::ScalarOperator);
    }
    DensityMatrix::new(sigma)
}

/// Like [`find_noncommuting_state`] but also with `⟨0|σ|1⟩ ≠ 0`.
pub fn find_coherent_noncommuting_state(a: &ComplexMatrix) -> Result<DensityMatrix> {
    let d = a.dim();
    if d < 2 {
        return Err(Error::LocalDimension { d, min: 2 });
    }
    let sigma0 = find_noncommuting_state(a)?;
    if sigma0.op().get(0, 1).norm() > 0.0 {
        return Ok(sigma0);
    }
    let scale = a.frobenius_norm();
    let mut mix = ComplexMatrix::identity(d);
    mix.set(0, 1, ONE);
    mix.set(1, 0, ONE);
    let mix = HermitianOperator::symmetrized(mix.scale_real(1.0 / d as f64));
    let mut mu = 0.1;
    for _ in 0..16 {
        let sigma = &sigma0.op().scale(1.0 - mu) + &mix.scale(mu);
        if commutator_norm(a, sigma.matrix()) >= SCALAR_TOL * scale && min_eigenvalue(&sigma)? >= -PSD_TOL {
            return DensityMatrix::new(sigma);
        }
        mu *= 0.1;
    }
    Err(Error::Construction("no coherent admixture keeps the commutator nonzero".into()))
}

// ---------------------------------------------------------------------------
// Class crossings

/// Which class boundary a certificate crosses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    /// CQ base, non-CQ `κ`.
    NonCq,
    /// CC base, non-CC `κ`.
    NonCc,
    /// CQ (or QC) base, `κ` neither CQ nor QC.
    NonCqOrQc,
}

/// Norm of `[X_first(κ), X_second(κ)]` in the family `X` of `side`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockCommutator {
    pub side: Side,
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub norm: f64,
}

/// A classical state, a step along `Δ` and detector evidence on both ends.
///
/// `side` is `A` when the construction runs on the first factor and `B` when
/// it runs on the mirrored problem (`Δ = I⊗Ξ` for the first factor). The
/// local states `sigma` and `gamma` and the index `t` are reported in the
/// orientation of the construction.
#[derive(Clone, Debug)]
pub struct ClassCrossingCertificate {
    pub crossing: Crossing,
    pub side: Side,
    pub delta: Direction,
    pub base: DensityMatrix,
    pub lambda: f64,
    pub kappa: DensityMatrix,
    pub sigma: HermitianOperator,
    pub gamma: Option<HermitianOperator>,
    pub t: usize,
    pub commutators: Vec<BlockCommutator>,
    pub base_evidence: CcCertificate,
    pub kappa_evidence: CcCertificate,
}

impl ClassCrossingCertificate {
    /// Whether the recorded detector verdicts match the crossing.
    pub fn holds(&self) -> bool {
        crossing_holds(self.crossing, &self.base_evidence, &self.kappa_evidence)
    }

    /// Re-runs the detectors at `tol` and checks `κ = base + λΔ`.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let rebuilt = self.base.op() + &self.delta.op().scale(self.lambda);
        let gap = (rebuilt.matrix() - self.kappa.op().matrix()).max_abs();
        if gap > RECONSTRUCTION_TOL {
            return Err(Error::Construction(format!("kappa differs from base + lambda*delta by {gap:.3e}")));
        }
        let base = cc_check(&self.base, tol)?;
        let kappa = cc_check(&self.kappa, tol)?;
        if !crossing_holds(self.crossing, &base, &kappa) {
            return Err(Error::Construction(format!(
                "detector verdicts at tolerance {tol:e} do not witness the crossing \
                 (base cq={} qc={}, kappa cq={} qc={})",
                base.cq.member, base.qc.member, kappa.cq.member, kappa.qc.member
            )));
        }
        Ok(())
    }
}

fn crossing_holds(crossing: Crossing, base: &CcCertificate, kappa: &CcCertificate) -> bool {
    match crossing {
        Crossing::NonCq => base.cq.member && !kappa.cq.member,
        Crossing::NonCc => base.member && !kappa.member,
        Crossing::NonCqOrQc => (base.cq.member || base.qc.member) && !kappa.cq.member && !kappa.qc.member,
    }
}

/// `(p, q)` maximizing the non-scalar part of `A_pq(Δ)`, if it is not
/// negligible.
fn leading_block(delta: &HermitianOperator, dims: BipartiteDims) -> Result<Option<(usize, usize)>> {
    let family = block_family(delta.matrix(), dims, Side::A)?;
    let mut best = ((0, 0), 0.0f64);
    for (idx, blk) in family.iter() {
        let n = non_scalar_norm(blk);
        if n > best.1 {
            best = (idx, n);
        }
    }
    Ok((best.1 > SCALAR_TOL * delta.frobenius_norm()).then_some(best.0))
}

fn block_commutator(kappa: &HermitianOperator, dims: BipartiteDims, side: Side, first: (usize, usize), second: (usize, usize)) -> Result<f64> {
    let fam = block_family(kappa.matrix(), dims, side)?;
    Ok(commutator_norm(fam.get(first.0, first.1), fam.get(second.0, second.1)))
}

fn basis_projector(t: usize, d: usize) -> HermitianOperator {
    let mut diag = vec![0.0; d];
    diag[t] = 1.0;
    HermitianOperator::diag(&diag)
}

struct Construction {
    base: HermitianOperator,
    lambda: f64,
    kappa: HermitianOperator,
    sigma: HermitianOperator,
    gamma: Option<HermitianOperator>,
    t: usize,
    commutators: Vec<BlockCommutator>,
}

impl Construction {
    /// Maps a construction run on the swapped problem back.
    fn unswap(self, dims: BipartiteDims) -> Result<Self> {
        let flip = |c: BlockCommutator| BlockCommutator { side: other(c.side), ..c };
        Ok(Self {
            base: crate::linalg::swap_factors(&self.base, dims)?,
            kappa: crate::linalg::swap_factors(&self.kappa, dims)?,
            commutators: self.commutators.into_iter().map(flip).collect(),
            ..self
        })
    }
}

fn other(side: Side) -> Side {
    match side {
        Side::A => Side::B,
        Side::B => Side::A,
    }
}

/// Base `½σ⊗|t⟩⟨t| + I/(2d²)` with `[A_pq(Δ), σ] ≠ 0`.
fn noncq_construction(delta: &HermitianOperator, dims: BipartiteDims, pq: (usize, usize)) -> Result<Construction> {
    let d = dims.local();
    let a = block_family(delta.matrix(), dims, Side::A)?.get(pq.0, pq.1).clone();
    let sigma = find_noncommuting_state(&a)?.op().clone();
    let t = (0..d).find(|&k| k != pq.0).expect("d ≥ 2");
    let base = &crate::linalg::kron_hermitian(&sigma, &basis_projector(t, d)).scale(0.5)
        + &HermitianOperator::identity(dims.total()).scale(0.5 / (d * d) as f64);
    let start = LAMBDA_START / delta.frobenius_norm();
    let (lambda, kappa) = search_lambda(start, &base, delta, |k| {
        let c = block_commutator(k, dims, Side::A, pq, (t, t))?;
        Ok(if c >= CERTIFICATE_MARGIN { Ok(()) } else { Err("block commutator too small") })
    })?;
    let norm = block_commutator(&kappa, dims, Side::A, pq, (t, t))?;
    Ok(Construction {
        base,
        lambda,
        kappa,
        sigma,
        gamma: None,
        t,
        commutators: vec![BlockCommutator { side: Side::A, first: pq, second: (t, t), norm }],
    })
}

/// Base `½σ⊗|t⟩⟨t| + (1/(2d)) I⊗γ` with `[A_pq(Δ), σ] ≠ 0`, `⟨0|σ|1⟩ ≠ 0` and
/// `[|t⟩⟨t|, γ] ≠ 0`.
fn non_cq_or_qc_construction(delta: &HermitianOperator, dims: BipartiteDims, pq: (usize, usize)) -> Result<Construction> {
    let d = dims.local();
    let a = block_family(delta.matrix(), dims, Side::A)?.get(pq.0, pq.1).clone();
    let sigma = find_coherent_noncommuting_state(&a)?.op().clone();
    let t = (0..d).find(|&k| k != pq.0).expect("d ≥ 2");
    let proj = basis_projector(t, d);
    let gamma0 = find_noncommuting_state(proj.matrix())?;
    let gamma = &gamma0.op().scale(0.5) + &HermitianOperator::identity(d).scale(0.5 / d as f64);
    let base = &crate::linalg::kron_hermitian(&sigma, &proj).scale(0.5)
        + &crate::linalg::kron_hermitian(&HermitianOperator::identity(d), &gamma).scale(0.5 / d as f64);
    let start = LAMBDA_START / delta.frobenius_norm();
    let (lambda, kappa) = search_lambda(start, &base, delta, |k| {
        if block_commutator(k, dims, Side::A, pq, (t, t))? < CERTIFICATE_MARGIN {
            return Ok(Err("first-factor block commutator too small"));
        }
        if block_commutator(k, dims, Side::B, (0, 1), (0, 0))? < CERTIFICATE_MARGIN {
            return Ok(Err("second-factor block commutator too small"));
        }
        Ok(Ok(()))
    })?;
    let commutators = vec![
        BlockCommutator { side: Side::A, first: pq, second: (t, t), norm: block_commutator(&kappa, dims, Side::A, pq, (t, t))? },
        BlockCommutator { side: Side::B, first: (0, 1), second: (0, 0), norm: block_commutator(&kappa, dims, Side::B, (0, 1), (0, 0))? },
    ];
    Ok(Construction { base, lambda, kappa, sigma, gamma: Some(gamma), t, commutators })
}

type Builder = fn(&HermitianOperator, BipartiteDims, (usize, usize)) -> Result<Construction>;

/// Runs `build` on `Δ` if some `A_pq(Δ)` is non-scalar, otherwise on the
/// swapped direction (when `mirror` allows it).
fn oriented(delta: &Direction, build: Builder, mirror: bool) -> Result<(Side, Construction)> {
    let dims = delta.dims();
    if dims.local() < 2 {
        return Err(Error::LocalDimension { d: dims.local(), min: 2 });
    }
    if let Some(pq) = leading_block(delta.op(), dims)? {
        return Ok((Side::A, build(delta.op(), dims, pq)?));
    }
    if !mirror {
        return Err(Error::InvariantDirection);
    }
    let swapped = delta.swapped();
    let pq = leading_block(swapped.op(), dims)?.ok_or(Error::ZeroDirection)?;
    Ok((Side::B, build(swapped.op(), dims, pq)?.unswap(dims)?))
}

fn certify(crossing: Crossing, delta: &Direction, side: Side, c: Construction, tol: f64) -> Result<ClassCrossingCertificate> {
    let dims = delta.dims();
    let base = DensityMatrix::bipartite(c.base, dims)?;
    let kappa = DensityMatrix::bipartite(c.kappa, dims)?;
    let base_evidence = cc_check(&base, tol)?;
    let kappa_evidence = cc_check(&kappa, tol)?;
    Ok(ClassCrossingCertificate {
        crossing,
        side,
        delta: delta.clone(),
        base,
        lambda: c.lambda,
        kappa,
        sigma: c.sigma,
        gamma: c.gamma,
        t: c.t,
        commutators: c.commutators,
        base_evidence,
        kappa_evidence,
    })
}

/// CC (hence CQ) base and a step leaving CQ. Fails with
/// [`Error::InvariantDirection`] when `Δ = I⊗Ξ`, since such directions keep
/// every CQ state CQ.
pub fn build_noncq_perturbation(delta: &Direction) -> Result<ClassCrossingCertificate> {
    build_noncq_perturbation_with_tol(delta, DEFAULT_TOL)
}

pub fn build_noncq_perturbation_with_tol(delta: &Direction, tol: f64) -> Result<ClassCrossingCertificate> {
    let (side, c) = oriented(delta, noncq_construction, false)?;
    certify(Crossing::NonCq, delta, side, c, tol)
}

/// CC base and a step leaving CC. Directions `I⊗Ξ` are handled on the
/// second factor.
pub fn build_noncc_perturbation(delta: &Direction) -> Result<ClassCrossingCertificate> {
    build_noncc_perturbation_with_tol(delta, DEFAULT_TOL)
}

pub fn build_noncc_perturbation_with_tol(delta: &Direction, tol: f64) -> Result<ClassCrossingCertificate> {
    let (side, c) = oriented(delta, noncq_construction, true)?;
    certify(Crossing::NonCc, delta, side, c, tol)
}

/// CQ (or, mirrored, QC) base and a step leaving both CQ and QC.
pub fn build_non_cq_or_qc_perturbation(delta: &Direction) -> Result<ClassCrossingCertificate> {
    build_non_cq_or_qc_perturbation_with_tol(delta, DEFAULT_TOL)
}

pub fn build_non_cq_or_qc_perturbation_with_tol(delta: &Direction, tol: f64) -> Result<ClassCrossingCertificate> {
    let (side, c) = oriented(delta, non_cq_or_qc_construction, true)?;
    certify(Crossing::NonCqOrQc, delta, side, c, tol)
}

// ---------------------------------------------------------------------------
// Invariant directions

/// Outcome of pushing a CQ state along `I⊗Ξ`.
#[derive(Clone, Debug)]
pub struct InvarianceCheck {
    pub lambda: f64,
    pub kappa: DensityMatrix,
    pub cq: bool,
    pub max_commutator: f64,
}

/// Moves `base` along the direction `I⊗Ξ` with the largest step found by
/// halving from `1/‖I⊗Ξ‖_F` that keeps the state positive, then runs the CQ
/// detector.
pub fn invariant_perturbation(base: &DensityMatrix, xi: &HermitianOperator, tol: f64) -> Result<InvarianceCheck> {
    let dims = base.bipartite_dims()?;
    let op = crate::linalg::kron_hermitian(&HermitianOperator::identity(dims.local()), xi);
    let delta = Direction::projected(op, dims)?;
    let (lambda, kappa) = search_lambda(1.0, base.op(), delta.op(), |_| Ok(Ok(())))?;
    let kappa = DensityMatrix::bipartite(kappa, dims)?;
    let cert = crate::detect::cq_check(&kappa, tol)?;
    Ok(InvarianceCheck { lambda, kappa, cq: cert.member, max_commutator: cert.max_commutator })
}

/// `(I + F)/2`, whose compression is `diag(1, 1, 1, 0)`.
pub fn symmetric_projector(d: usize) -> HermitianOperator {
    (&HermitianOperator::identity(d * d) + &flip_operator(d)).scale(0.5)
}

/// Determinant of `diag(1,1,1,0) + λM` for the reduced block `M`, from its
/// eigenvalues.
pub fn compressed_determinant(block: &ReducedBlock, lambda: f64) -> Result<f64> {
    let m = &HermitianOperator::diag(&[1.0, 1.0, 1.0, 0.0]) + &block.to_4x4().scale(lambda);
    Ok(eig_hermitian(&m)?.values.iter().product())
}
