//! Measurements and the directions they cannot see.
//!
//! For a POVM `E`, the kernel space `X_E` holds the traceless Hermitian `Δ`
//! with `tr(ΔE_j) = 0` for every outcome. Two states are told apart by the
//! statistics of `E` exactly when their difference is not in `X_E`, and
//! `dim span(E) + dim X_E = D²`.

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, hermitian_basis, hs_inner, kron_hermitian, min_eigenvalue, orth_complement, partial_trace,
    real_span_dim, BipartiteDims, HermitianOperator, Side,
};
use crate::states::{DensityMatrix, Seed};

/// Smallest eigenvalue accepted for an element.
pub const ELEMENT_PSD_TOL: f64 = 1e-10;
/// Accepted `‖Σ_j E_j − I‖_F`.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Distance from `span{I⊗Ξ}` accepted for kernel-space basis elements.
pub const INVARIANT_SPAN_TOL: f64 = 1e-9;
/// Default perturbation size of the minimal CQ-deciding POVM.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Halvings of `ε` tried before giving up.
pub const MAX_HALVINGS: usize = 40;

/// Positive operators summing to the identity on `C^d ⊗ C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
    dims: BipartiteDims,
}

/// Worst residuals of the POVM conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validation {
    pub valid: bool,
    pub min_element_eig: f64,
    pub normalization_residual: f64,
}

/// Checks positivity and normalization without constructing a [`Povm`].
pub fn validate(elements: &[HermitianOperator], dims: BipartiteDims) -> Result<Validation> {
    if elements.is_empty() {
        return Err(Error::InvalidPovm("no elements".into()));
    }
    let mut sum = HermitianOperator::zeros(dims.total());
    let mut min_element_eig = f64::INFINITY;
    for e in elements {
        if e.dim() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), found: e.dim() });
        }
        min_element_eig = min_element_eig.min(min_eigenvalue(e)?);
        sum = &sum + e;
    }
    let normalization_residual = (&sum - &HermitianOperator::identity(dims.total())).frobenius_norm();
    Ok(Validation {
        valid: min_element_eig >= -ELEMENT_PSD_TOL && normalization_residual <= NORMALIZATION_TOL,
        min_element_eig,
        normalization_residual,
    })
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>, dims: BipartiteDims) -> Result<Self> {
        let v = validate(&elements, dims)?;
        if !v.valid {
            return Err(Error::InvalidPovm(format!(
                "min element eigenvalue {:.3e}, normalization residual {:.3e}",
                v.min_element_eig, v.normalization_residual
            )));
        }
        Ok(Self { elements, dims })
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Measurement in the computational basis.
    pub fn basis_measurement(dims: BipartiteDims) -> Self {
        let n = dims.total();
        let elements = (0..n)
            .map(|i| {
                let mut diag = vec![0.0; n];
                diag[i] = 1.0;
                HermitianOperator::diag(&diag)
            })
            .collect();
        Self { elements, dims }
    }

    /// The trivial one-outcome measurement `{I}`.
    pub fn trivial(dims: BipartiteDims) -> Self {
        Self { elements: vec![HermitianOperator::identity(dims.total())], dims }
    }

    /// Coarse-graining that merges outcome `from` into outcome `into`.
    pub fn merged(&self, from: usize, into: usize) -> Result<Self> {
        let n = self.len();
        if from >= n || into >= n || from == into {
            return Err(Error::InvalidArgument(format!("cannot merge outcome {from} into {into} of {n}")));
        }
        let mut elements = self.elements.clone();
        let moved = elements[from].clone();
        elements[into] = &elements[into] + &moved;
        elements.remove(from);
        Ok(Self { elements, dims: self.dims })
    }
}

/// Linear-algebraic summary of a POVM.
#[derive(Clone, Debug)]
pub struct PovmAnalysis {
    pub dim_e: usize,
    pub dim_xe: usize,
    pub xe_basis: Vec<HermitianOperator>,
    pub informationally_complete: bool,
    pub decides_cq: bool,
    /// Largest distance of a kernel-space basis element from `span{I⊗Ξ}`.
    pub invariant_span_distance: f64,
}

/// Orthogonal projection onto `{I⊗Ξ : Ξ traceless}`.
pub fn invariant_projection(x: &HermitianOperator, dims: BipartiteDims) -> Result<HermitianOperator> {
    let d = dims.local() as f64;
    let reduced = HermitianOperator::symmetrized(partial_trace(x.matrix(), dims, Side::B)?.scale_real(1.0 / d));
    let lifted = kron_hermitian(&HermitianOperator::identity(dims.local()), &reduced);
    Ok(&lifted - &HermitianOperator::identity(dims.total()).scale(x.trace() / dims.total() as f64))
}

/// Orthonormal basis of `{I⊗Ξ : Ξ Hermitian}`.
fn local_second_factor_basis(dims: BipartiteDims) -> Vec<HermitianOperator> {
    let scale = 1.0 / (dims.local() as f64).sqrt();
    let id = HermitianOperator::identity(dims.local());
    hermitian_basis(dims.local()).iter().map(|b| kron_hermitian(&id, b).scale(scale)).collect()
}

pub fn analyze(povm: &Povm) -> Result<PovmAnalysis> {
    let dims = povm.dims();
    let dim_e = real_span_dim(povm.elements())?;
    let xe_basis = orth_complement(povm.elements(), dims.total(), true)?;
    let mut invariant_span_distance: f64 = 0.0;
    for g in &xe_basis {
        let p = invariant_projection(g, dims)?;
        invariant_span_distance = invariant_span_distance.max((g - &p).frobenius_norm());
    }
    Ok(PovmAnalysis {
        dim_e,
        dim_xe: xe_basis.len(),
        informationally_complete: xe_basis.is_empty(),
        decides_cq: invariant_span_distance <= INVARIANT_SPAN_TOL,
        invariant_span_distance,
        xe_basis,
    })
}

/// POVM with `D² − d² + 1` outcomes whose kernel space is exactly
/// `{I⊗Ξ : Ξ traceless}`: `E_j = (I + εG_j)/m` for an orthonormal basis `G_j`
/// of the traceless complement of that space, and `E_1 = I − Σ_{j≥2} E_j`.
/// `ε` is halved until every element is positive.
pub fn build_minimal_cq_povm(dims: BipartiteDims, epsilon: f64) -> Result<Povm> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    let n = dims.total();
    let generators = orth_complement(&local_second_factor_basis(dims), n, true)?;
    let m = generators.len() + 1;
    let id = HermitianOperator::identity(n);
    let total = generators.iter().fold(HermitianOperator::zeros(n), |acc, g| &acc + g);
    let mut eps = epsilon;
    for _ in 0..=MAX_HALVINGS {
        let mut elements = Vec::with_capacity(m);
        elements.push((&id - &total.scale(eps)).scale(1.0 / m as f64));
        elements.extend(generators.iter().map(|g| (&id + &g.scale(eps)).scale(1.0 / m as f64)));
        let v = validate(&elements, dims)?;
        if v.valid && v.min_element_eig >= 0.0 {
            return Ok(Povm { elements, dims });
        }
        eps *= 0.5;
    }
    Err(Error::EpsilonTooLarge { epsilon, halvings: MAX_HALVINGS })
}

/// Outcome probabilities `p_j = tr(ρE_j)`.
pub fn statistics(povm: &Povm, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if rho.dim() != povm.dims().total() {
        return Err(Error::DimensionMismatch { expected: povm.dims().total(), found: rho.dim() });
    }
    Ok(povm.elements().iter().map(|e| hs_inner(e, rho.op())).collect())
}

/// Whether some outcome probability differs by more than `tol`.
pub fn distinguishes(povm: &Povm, rho1: &DensityMatrix, rho2: &DensityMatrix, tol: f64) -> Result<bool> {
    let p = statistics(povm, rho1)?;
    let q = statistics(povm, rho2)?;
    Ok(p.iter().zip(&q).any(|(a, b)| (a - b).abs() > tol))
}

/// Frobenius norm of the projection of `x` onto `span(E)`, computed from the
/// kernel-space basis rather than from outcome statistics.
pub fn span_projection_norm(analysis: &PovmAnalysis, x: &HermitianOperator) -> f64 {
    let mut rest = x.clone();
    for g in &analysis.xe_basis {
        rest = &rest - &g.scale(hs_inner(g, x));
    }
    rest.frobenius_norm()
}

/// `k` random elements `GG*` (Ginibre `G`) conjugated by `S^{-1/2}`, where
/// `S` is their sum.
pub fn random_povm(dims: BipartiteDims, k: usize, seed: Seed) -> Result<Povm> {
    if k == 0 {
        return Err(Error::InvalidArgument("a POVM needs at least one outcome".into()));
    }
    let n = dims.total();
    let mut sampler = seed.sampler();
    let raw: Vec<HermitianOperator> = (0..k)
        .map(|_| {
            let g = sampler.ginibre(n);
            HermitianOperator::symmetrized(&g * &g.adjoint())
        })
        .collect();
    let sum = raw.iter().fold(HermitianOperator::zeros(n), |acc, a| &acc + a);
    let inv_sqrt = eig_hermitian(&sum)?.map_spectrum(|x| 1.0 / x.sqrt());
    let elements = raw.iter().map(|a| a.conjugate_by(inv_sqrt.matrix())).collect();
    Povm::new(elements, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DEFAULT_TOL;
    use crate::states::{random_direction, sample_cq, Sampler};
    use crate::witness::{build_noncq_perturbation, invariant_perturbation};
    use proptest::prelude::*;

    fn dims(d: usize) -> BipartiteDims {
        BipartiteDims::new(d).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate(Povm::trivial(dims(2)).elements(), dims(2)).unwrap().valid);
        assert!(validate(Povm::basis_measurement(dims(3)).elements(), dims(3)).unwrap().valid);
        let half = HermitianOperator::identity(4).scale(0.6);
        let v = validate(&[half.clone(), half], dims(2)).unwrap();
        assert!(!v.valid);
        assert!((v.normalization_residual - 0.4).abs() < 1e-12);
        assert!(Povm::new(vec![HermitianOperator::diag(&[1.5, 1.0, 1.0, 0.5]), HermitianOperator::diag(&[-0.5, 0.0, 0.0, 0.5])], dims(2)).is_err());
    }

    #[test]
    fn trivial_and_basis_analysis() {
        for d in [2, 3] {
            let big = d * d;
            let a = analyze(&Povm::trivial(dims(d))).unwrap();
            assert_eq!((a.dim_e, a.dim_xe, a.informationally_complete), (1, big * big - 1, false));
            let b = analyze(&Povm::basis_measurement(dims(d))).unwrap();
            assert_eq!((b.dim_e, b.dim_xe), (big, big * big - big));
        }
    }

    #[test]
    fn invariant_projection_is_a_projection() {
        let mut s = Sampler::new(Seed(2));
        let x = s.gue(9);
        let p = invariant_projection(&x, dims(3)).unwrap();
        let pp = invariant_projection(&p, dims(3)).unwrap();
        assert!((&p - &pp).frobenius_norm() < 1e-14);
        assert!(p.trace().abs() < 1e-14);
        // The residual is orthogonal to the image.
        let xi = s.local_traceless(3);
        let lifted = kron_hermitian(&HermitianOperator::identity(3), &xi);
        assert!(hs_inner(&(&x - &p), &lifted).abs() < 1e-13);
    }

    #[test]
    fn minimal_povm_two_qubits() {
        let povm = build_minimal_cq_povm(dims(2), DEFAULT_EPSILON).unwrap();
        assert_eq!(povm.len(), 13);
        let a = analyze(&povm).unwrap();
        assert_eq!(a.dim_e, 13);
        assert_eq!(a.dim_xe, 3);
        assert!(a.decides_cq && !a.informationally_complete);
    }

    #[test]
    fn minimal_povm_two_qutrits() {
        let povm = build_minimal_cq_povm(dims(3), DEFAULT_EPSILON).unwrap();
        assert_eq!(povm.len(), 73);
        let a = analyze(&povm).unwrap();
        assert_eq!((a.dim_e, a.dim_xe), (73, 8));
        assert!(a.decides_cq && !a.informationally_complete);
    }

    #[test]
    fn merging_any_outcome_loses_cq_decidability() {
        let povm = build_minimal_cq_povm(dims(2), DEFAULT_EPSILON).unwrap();
        for k in 0..povm.len() {
            let coarse = povm.merged(k, (k + 1) % povm.len()).unwrap();
            let a = analyze(&coarse).unwrap();
            assert!(a.dim_e < 13 && a.dim_xe == 4 && !a.decides_cq, "outcome {k}");
        }
    }

    #[test]
    fn bad_epsilon_is_rejected() {
        assert!(matches!(build_minimal_cq_povm(dims(2), 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_minimal_cq_povm(dims(2), f64::NAN), Err(Error::InvalidArgument(_))));
        // Large epsilons are shrunk rather than rejected.
        assert_eq!(build_minimal_cq_povm(dims(2), 1e6).unwrap().len(), 13);
    }

    #[test]
    fn statistics_examples() {
        let mixed = DensityMatrix::maximally_mixed(dims(2));
        let p = statistics(&Povm::basis_measurement(dims(2)), &mixed).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let rho = sample_cq(dims(2), Seed(3));
        assert_eq!(statistics(&Povm::trivial(dims(2)), &rho).unwrap().len(), 1);
        assert!((statistics(&Povm::trivial(dims(2)), &rho).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimal_povm_sees_noncq_crossings_but_not_invariant_moves() {
        let povm = build_minimal_cq_povm(dims(2), DEFAULT_EPSILON).unwrap();
        let cert = build_noncq_perturbation(&random_direction(dims(2), Seed(9))).unwrap();
        let p = statistics(&povm, &cert.base).unwrap();
        let q = statistics(&povm, &cert.kappa).unwrap();
        let gap = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap >= 1e-10);

        let base = sample_cq(dims(2), Seed(10));
        let xi = Seed(11).sampler().local_traceless(2);
        let moved = invariant_perturbation(&base, &xi, DEFAULT_TOL).unwrap().kappa;
        assert!(!distinguishes(&povm, &base, &base, 1e-12).unwrap());
        assert!(!distinguishes(&povm, &base, &moved, 1e-12).unwrap());
    }

    #[test]
    fn complete_povm_separates_distinct_states() {
        let povm = random_povm(dims(2), 16, Seed(4)).unwrap();
        assert!(analyze(&povm).unwrap().informationally_complete);
        let a = sample_cq(dims(2), Seed(5));
        let b = sample_cq(dims(2), Seed(6));
        assert!(distinguishes(&povm, &a, &b, 1e-12).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn dimension_identity(seed in any::<u64>(), d in 2usize..=3, k in 1usize..=20) {
            let povm = random_povm(dims(d), k, Seed(seed)).unwrap();
            let a = analyze(&povm).unwrap();
            prop_assert_eq!(a.dim_e + a.dim_xe, d.pow(4));
            prop_assert_eq!(a.dim_e, k.min(d.pow(4)));
        }

        #[test]
        fn statistics_are_probabilities(seed in any::<u64>(), k in 1usize..=12) {
            let povm = random_povm(dims(2), k, Seed(seed)).unwrap();
            let rho = crate::states::random_bipartite_full_rank(dims(2), Seed(seed ^ 1));
            let p = statistics(&povm, &rho).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|&x| x >= -1e-10));
        }

        #[test]
        fn distinguishing_matches_span_projection(seed in any::<u64>(), k in 1usize..=20) {
            let povm = random_povm(dims(2), k, Seed(seed)).unwrap();
            let a = analyze(&povm).unwrap();
            let r1 = crate::states::random_bipartite_full_rank(dims(2), Seed(seed ^ 2));
            // Same state, or a step inside the kernel space, or a generic step.
            let r2 = match seed % 3 {
                0 => r1.clone(),
                1 if !a.xe_basis.is_empty() => {
                    let g = &a.xe_basis[0];
                    let step = 0.5 * min_eigenvalue(r1.op()).unwrap() / crate::linalg::operator_norm(g).unwrap();
                    DensityMatrix::bipartite(r1.op() + &g.scale(step), dims(2)).unwrap()
                }
                _ => crate::states::random_bipartite_full_rank(dims(2), Seed(seed ^ 3)),
            };
            let tol = 1e-9;
            let diff = r1.op() - r2.op();
            let seen = distinguishes(&povm, &r1, &r2, tol).unwrap();
            prop_assert_eq!(seen, span_projection_norm(&a, &diff) > tol * 4.0);
        }
    }
}
