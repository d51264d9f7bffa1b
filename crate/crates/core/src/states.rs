//! State families and seeded samplers.
//!
//! All randomness flows through [`Sampler`], a ChaCha8 stream seeded from a
//! 64-bit [`Seed`]. ChaCha8 output is specified bit-for-bit, so a seed yields
//! the same matrices on every platform for a given build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    kron, kron_hermitian, min_eigenvalue, partial_trace, BipartiteDims, ComplexMatrix, HermitianOperator, Side, C64,
    ONE, ZERO,
};

/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Trace deviation accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Deviation of reduced states from `I/d` accepted for a maximally entangled vector.
pub const MAX_ENTANGLED_TOL: f64 = 1e-10;
/// Unitarity deviation accepted for local unitaries.
pub const UNITARY_TOL: f64 = 1e-12;
/// Floor on the simplex weights drawn by the samplers.
pub const WEIGHT_FLOOR: f64 = 1e-3;
/// Identity admixture used by [`Sampler::density_full_rank`].
pub const FULL_RANK_MIX: f64 = 1e-3;

/// Positive semidefinite, unit-trace operator. Bipartite states carry their
/// local dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    dims: Option<BipartiteDims>,
}

impl DensityMatrix {
    /// Single-system state.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        validate_state(&op)?;
        Ok(Self { op, dims: None })
    }

    pub fn bipartite(op: HermitianOperator, dims: BipartiteDims) -> Result<Self> {
        if op.dim() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), found: op.dim() });
        }
        validate_state(&op)?;
        Ok(Self { op, dims: Some(dims) })
    }

    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let n = dims.total();
        Self { op: HermitianOperator::identity(n).scale(1.0 / n as f64), dims: Some(dims) }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn dims(&self) -> Option<BipartiteDims> {
        self.dims
    }

    pub fn bipartite_dims(&self) -> Result<BipartiteDims> {
        self.dims.ok_or(Error::NotBipartite)
    }

    /// `self + λ·Δ`, validated as a state.
    pub fn perturbed(&self, lambda: f64, delta: &Direction) -> Result<Self> {
        let dims = self.bipartite_dims()?;
        if delta.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims.total(), found: delta.dims().total() });
        }
        Self::bipartite(&self.op + &delta.op().scale(lambda), dims)
    }

    /// Exchanges the tensor factors.
    pub fn swapped(&self) -> Result<Self> {
        let dims = self.bipartite_dims()?;
        Ok(Self { op: crate::linalg::swap_factors(&self.op, dims)?, dims: Some(dims) })
    }
}

fn validate_state(op: &HermitianOperator) -> Result<()> {
    let trace = op.trace();
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::BadTrace { trace });
    }
    let min_eig = min_eigenvalue(op)?;
    if min_eig < -PSD_TOL {
        return Err(Error::NotPositive { min_eig });
    }
    Ok(())
}

/// Nonzero traceless Hermitian perturbation direction, stored with unit
/// Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    op: HermitianOperator,
    dims: BipartiteDims,
}

impl Direction {
    /// Normalizes a traceless operator. Fails on zero or non-traceless input.
    pub fn new(op: HermitianOperator, dims: BipartiteDims) -> Result<Self> {
        if op.dim() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), found: op.dim() });
        }
        let norm = op.frobenius_norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroDirection);
        }
        let trace = op.trace();
        if trace.abs() > 1e-12 * norm {
            return Err(Error::NotTraceless { trace });
        }
        Ok(Self { op: op.scale(1.0 / norm), dims })
    }

    /// Projects out the identity component first.
    pub fn projected(op: HermitianOperator, dims: BipartiteDims) -> Result<Self> {
        Self::new(op.traceless_part(), dims)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn swapped(&self) -> Self {
        let op = crate::linalg::swap_factors(&self.op, self.dims).expect("dims checked at construction");
        Self { op, dims: self.dims }
    }
}

/// 64-bit seed for the sampler stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent sub-seed for trial `index` (SplitMix64 finalizer over the
    /// pair).
    pub fn derive(self, index: u64) -> Seed {
        let mut z = self.0 ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn sampler(self) -> Sampler {
        Sampler::new(self)
    }
}

/// Seeded random source for all state and direction ensembles.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: Seed) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed.0) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Complex Ginibre matrix with standard normal real and imaginary parts.
    pub fn ginibre(&mut self, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let re = self.normal();
                let im = self.normal();
                m.set(i, j, C64::new(re, im));
            }
        }
        m
    }

    /// Gaussian unitary ensemble sample `(G + G*)/2`.
    pub fn gue(&mut self, n: usize) -> HermitianOperator {
        HermitianOperator::symmetrized(self.ginibre(n))
    }

    /// Unitary from Gram-Schmidt orthogonalization of a Ginibre matrix.
    pub fn unitary(&mut self, n: usize) -> ComplexMatrix {
        let g = self.ginibre(n);
        gram_schmidt(&(0..n).map(|j| g.column(j)).collect::<Vec<_>>())
    }

    /// Uniform random unit vector.
    pub fn unit_vector(&mut self, n: usize) -> Vec<C64> {
        let v: Vec<C64> = (0..n).map(|_| C64::new(self.normal(), self.normal())).collect();
        normalize(&v)
    }

    /// Flat simplex sample with every weight at least [`WEIGHT_FLOOR`].
    pub fn weights(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut self.rng)).collect();
        let total: f64 = raw.iter().sum();
        let spread = 1.0 - n as f64 * WEIGHT_FLOOR;
        raw.iter().map(|w| WEIGHT_FLOOR + spread * w / total).collect()
    }

    pub fn direction(&mut self, dims: BipartiteDims) -> Direction {
        loop {
            let h = self.gue(dims.total());
            if let Ok(dir) = Direction::projected(h, dims) {
                return dir;
            }
        }
    }

    /// Traceless, unit-norm Hermitian operator on one factor.
    pub fn local_traceless(&mut self, d: usize) -> HermitianOperator {
        loop {
            let h = self.gue(d).traceless_part();
            let n = h.frobenius_norm();
            if n > 0.0 {
                return h.scale(1.0 / n);
            }
        }
    }

    /// Full-rank state `(1 − p)·GG*/tr + p·I/n` with `p = FULL_RANK_MIX`.
    pub fn density_full_rank(&mut self, n: usize) -> HermitianOperator {
        let g = self.ginibre(n);
        let gg = HermitianOperator::symmetrized(&g * &g.adjoint());
        let base = gg.scale(1.0 / gg.trace());
        &base.scale(1.0 - FULL_RANK_MIX) + &HermitianOperator::identity(n).scale(FULL_RANK_MIX / n as f64)
    }

    pub fn single_state(&mut self, n: usize) -> DensityMatrix {
        DensityMatrix { op: self.density_full_rank(n), dims: None }
    }

    pub fn bipartite_full_rank(&mut self, dims: BipartiteDims) -> DensityMatrix {
        DensityMatrix { op: self.density_full_rank(dims.total()), dims: Some(dims) }
    }

    /// `Σ_i c_i |φ_i⟩⟨φ_i| ⊗ η_i` with a random basis, weights and full-rank η_i.
    pub fn cq(&mut self, dims: BipartiteDims) -> DensityMatrix {
        let d = dims.local();
        let basis = self.unitary(d);
        let weights = self.weights(d);
        let etas: Vec<HermitianOperator> = (0..d).map(|_| self.density_full_rank(d)).collect();
        cq_state(&basis, &weights, &etas, dims).expect("sampled CQ components are valid")
    }

    /// Mirror of [`Sampler::cq`] with the classical register on the second factor.
    pub fn qc(&mut self, dims: BipartiteDims) -> DensityMatrix {
        self.cq(dims).swapped().expect("bipartite")
    }

    /// `Σ_ij c_ij |φ_i⟩⟨φ_i| ⊗ |χ_j⟩⟨χ_j|`.
    pub fn cc(&mut self, dims: BipartiteDims) -> DensityMatrix {
        let d = dims.local();
        let phi = self.unitary(d);
        let chi = self.unitary(d);
        let weights = self.weights(d * d);
        let mut acc = HermitianOperator::zeros(dims.total());
        for i in 0..d {
            let pi = HermitianOperator::projector(&phi.column(i));
            for j in 0..d {
                let pj = HermitianOperator::projector(&chi.column(j));
                acc = &acc + &kron_hermitian(&pi, &pj).scale(weights[i * d + j]);
            }
        }
        DensityMatrix { op: acc, dims: Some(dims) }
    }

    pub fn product(&mut self, dims: BipartiteDims) -> DensityMatrix {
        let sigma = self.density_full_rank(dims.local());
        let eta = self.density_full_rank(dims.local());
        product_state(&sigma, &eta).expect("full-rank local states")
    }
}

fn normalize(v: &[C64]) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

/// Modified Gram-Schmidt (two passes) on linearly independent columns.
pub fn gram_schmidt(columns: &[Vec<C64>]) -> ComplexMatrix {
    let n = columns.len();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(n);
    for col in columns {
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &out {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        out.push(normalize(&v));
    }
    ComplexMatrix::from_fn(n, |i, j| out[j][i])
}

/// `(1/√d) Σ_j |j⟩⊗|j⟩`.
pub fn canonical_max_entangled(d: usize) -> Vec<C64> {
    let dims = BipartiteDims::new(d.max(1)).expect("positive");
    let mut v = vec![ZERO; dims.total()];
    let amp = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        v[dims.index(j, j)] = C64::new(amp, 0.0);
    }
    v
}

/// `(U ⊗ V)|ψ₀⟩`.
pub fn max_entangled(u: &ComplexMatrix, v: &ComplexMatrix, d: usize) -> Result<Vec<C64>> {
    for m in [u, v] {
        if m.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.dim() });
        }
        let deviation = m.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
    }
    Ok(kron(u, v).apply(&canonical_max_entangled(d)))
}

/// Largest deviation of either reduced state of `|ψ⟩⟨ψ|` from `I/d`
/// (Frobenius norm).
pub fn reduced_state_deviation(psi: &[C64], dims: BipartiteDims) -> Result<f64> {
    let proj = ComplexMatrix::outer(psi, psi);
    let target = ComplexMatrix::identity(dims.local()).scale_real(1.0 / dims.local() as f64);
    let mut worst: f64 = 0.0;
    for side in [Side::A, Side::B] {
        let red = partial_trace(&proj, dims, side)?;
        worst = worst.max((&red - &target).frobenius_norm());
    }
    Ok(worst)
}

/// Isotropic state `|ψ⟩⟨ψ|/(d+1) + I/(d(d+1))` on the separable boundary.
pub fn isotropic_boundary_state(psi: &[C64], dims: BipartiteDims) -> Result<DensityMatrix> {
    if psi.len() != dims.total() {
        return Err(Error::DimensionMismatch { expected: dims.total(), found: psi.len() });
    }
    let deviation = reduced_state_deviation(psi, dims)?;
    if deviation > MAX_ENTANGLED_TOL {
        return Err(Error::NotMaximallyEntangled { deviation });
    }
    let d = dims.local() as f64;
    let op = &HermitianOperator::projector(psi).scale(1.0 / (d + 1.0))
        + &HermitianOperator::identity(dims.total()).scale(1.0 / (d * (d + 1.0)));
    DensityMatrix::bipartite(op, dims)
}

/// Flip (swap) operator `F(|φ⟩⊗|χ⟩) = |χ⟩⊗|φ⟩`.
pub fn flip_operator(d: usize) -> HermitianOperator {
    let mut m = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            m.set(i * d + j, j * d + i, ONE);
        }
    }
    HermitianOperator::symmetrized(m)
}

pub fn random_direction(dims: BipartiteDims, seed: Seed) -> Direction {
    Sampler::new(seed).direction(dims)
}

/// Full-rank state on a single system of dimension `dim`.
pub fn random_density_full_rank(dim: usize, seed: Seed) -> DensityMatrix {
    Sampler::new(seed).single_state(dim)
}

pub fn random_bipartite_full_rank(dims: BipartiteDims, seed: Seed) -> DensityMatrix {
    Sampler::new(seed).bipartite_full_rank(dims)
}

pub fn sample_cq(dims: BipartiteDims, seed: Seed) -> DensityMatrix {
    Sampler::new(seed).cq(dims)
}

pub fn sample_qc(dims: BipartiteDims, seed: Seed) -> DensityMatrix {
    Sampler::new(seed).qc(dims)
}

pub fn sample_cc(dims: BipartiteDims, seed: Seed) -> DensityMatrix {
    Sampler::new(seed).cc(dims)
}

pub fn sample_product(dims: BipartiteDims, seed: Seed) -> DensityMatrix {
    Sampler::new(seed).product(dims)
}

/// `Σ_i c_i |φ_i⟩⟨φ_i| ⊗ η_i` from the columns of `basis`, weights `c_i` and
/// local states `η_i`.
pub fn cq_state(
    basis: &ComplexMatrix,
    weights: &[f64],
    etas: &[HermitianOperator],
    dims: BipartiteDims,
) -> Result<DensityMatrix> {
    let d = dims.local();
    if basis.dim() != d || weights.len() != d || etas.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: weights.len().min(etas.len()) });
    }
    let mut acc = HermitianOperator::zeros(dims.total());
    for i in 0..d {
        let p = HermitianOperator::projector(&basis.column(i));
        acc = &acc + &kron_hermitian(&p, &etas[i]).scale(weights[i]);
    }
    DensityMatrix::bipartite(acc, dims)
}

/// `σ ⊗ η`.
pub fn product_state(sigma: &HermitianOperator, eta: &HermitianOperator) -> Result<DensityMatrix> {
    if sigma.dim() != eta.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), found: eta.dim() });
    }
    let dims = BipartiteDims::new(sigma.dim())?;
    DensityMatrix::bipartite(kron_hermitian(sigma, eta), dims)
}

/// Draws a uniformly random `u64`, for callers that need fresh sub-seeds.
pub fn next_seed(sampler: &mut Sampler) -> Seed {
    Seed(sampler.rng().random())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{block_family, eigenvalues, partial_transpose};

    fn dims(d: usize) -> BipartiteDims {
        BipartiteDims::new(d).unwrap()
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    #[test]
    fn canonical_vector() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = canonical_max_entangled(2);
        let want = [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        assert!(v.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-15));
        let v3 = canonical_max_entangled(3);
        let norm: f64 = v3.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        let nz: Vec<_> = v3.iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 3);
        assert!(nz.iter().all(|z| (z.re - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        assert!(reduced_state_deviation(&v3, dims(3)).unwrap() < 1e-15);
    }

    #[test]
    fn local_unitary_max_entangled() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(max_entangled(&id, &id, 2).unwrap(), canonical_max_entangled(2));
        let x = ComplexMatrix::from_row_major(&[ZERO, ONE, ONE, ZERO]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = max_entangled(&x, &id, 2).unwrap();
        let want = [ZERO, C64::new(s, 0.0), C64::new(s, 0.0), ZERO];
        for (a, b) in v.iter().zip(&want) {
            assert!((a - b).norm() < 1e-15);
        }
        let mut sampler = Sampler::new(Seed(9));
        for d in 2..=4 {
            let u = sampler.unitary(d);
            let w = sampler.unitary(d);
            let psi = max_entangled(&u, &w, d).unwrap();
            let overlap: C64 = psi.iter().map(|z| z.conj() * z).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-13);
            assert!(reduced_state_deviation(&psi, dims(d)).unwrap() < 1e-12);
        }
        let bad = ComplexMatrix::diag(&[1.0, 2.0]);
        assert!(matches!(max_entangled(&bad, &id, 2), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn boundary_state_spectrum_and_partial_transpose() {
        let rho = isotropic_boundary_state(&canonical_max_entangled(2), dims(2)).unwrap();
        let ev = eigenvalues(rho.op()).unwrap();
        for v in &ev[..3] {
            assert!((v - 1.0 / 6.0).abs() < 1e-14);
        }
        assert!((ev[3] - 0.5).abs() < 1e-14);
        for d in 2..=4 {
            let dm = dims(d);
            let rho = isotropic_boundary_state(&canonical_max_entangled(d), dm).unwrap();
            assert!((rho.op().trace() - 1.0).abs() < 1e-14);
            let pt = partial_transpose(rho.op(), dm).unwrap();
            let df = d as f64;
            let target = (&HermitianOperator::identity(d * d) + &flip_operator(d)).scale(1.0 / (df * (df + 1.0)));
            assert!(close(pt.matrix(), target.matrix(), 1e-15));
            assert!(crate::linalg::min_eigenvalue(&pt).unwrap().abs() < 1e-14);
        }
        let product = vec![ONE, ZERO, ZERO, ZERO];
        assert!(matches!(
            isotropic_boundary_state(&product, dims(2)),
            Err(Error::NotMaximallyEntangled { .. })
        ));
    }

    #[test]
    fn flip_properties() {
        let f = flip_operator(2);
        assert_eq!(f.get(1, 2), ONE);
        assert_eq!(f.get(2, 1), ONE);
        assert_eq!(f.get(0, 0), ONE);
        for d in 1..=5 {
            let f = flip_operator(d);
            let sq = f.matrix() * f.matrix();
            assert_eq!(sq, ComplexMatrix::identity(d * d));
            let ev = eigenvalues(&f).unwrap();
            let minus = ev.iter().filter(|v| (**v + 1.0).abs() < 1e-12).count();
            let plus = ev.iter().filter(|v| (**v - 1.0).abs() < 1e-12).count();
            assert_eq!(plus, d * (d + 1) / 2);
            assert_eq!(minus, d * (d - 1) / 2);
        }
    }

    #[test]
    fn directions_are_traceless_unit_and_deterministic() {
        for s in 0..20 {
            let dir = random_direction(dims(3), Seed(s));
            assert!(dir.op().trace().abs() <= 1e-14);
            assert!((dir.op().frobenius_norm() - 1.0).abs() < 1e-14);
            assert_eq!(dir, random_direction(dims(3), Seed(s)));
        }
    }

    #[test]
    fn direction_ensemble_is_centered() {
        let n = 4;
        let mut mean = ComplexMatrix::zeros(n);
        for s in 0..1000 {
            mean = &mean + random_direction(dims(2), Seed(1000 + s)).op().matrix();
        }
        mean = mean.scale_real(1.0 / 1000.0);
        assert!(mean.max_abs() < 0.1, "{mean:?}");
    }

    #[test]
    fn full_rank_states() {
        for s in 0..10 {
            let rho = random_density_full_rank(4, Seed(s));
            assert!((rho.op().trace() - 1.0).abs() < 1e-12);
            let min = crate::linalg::min_eigenvalue(rho.op()).unwrap();
            assert!(min >= FULL_RANK_MIX / 4.0 - 1e-15);
            let purity = crate::linalg::hs_inner(rho.op(), rho.op());
            assert!(purity < 1.0);
            assert_eq!(rho, random_density_full_rank(4, Seed(s)));
        }
    }

    #[test]
    fn samplers_produce_states() {
        for d in 2..=3 {
            for s in 0..10 {
                for rho in [
                    sample_cq(dims(d), Seed(s)),
                    sample_qc(dims(d), Seed(s)),
                    sample_cc(dims(d), Seed(s)),
                    sample_product(dims(d), Seed(s)),
                ] {
                    DensityMatrix::bipartite(rho.op().clone(), dims(d)).unwrap();
                }
            }
        }
    }

    #[test]
    fn cq_with_equal_etas_is_product() {
        let mut sampler = Sampler::new(Seed(3));
        let dm = dims(3);
        let basis = sampler.unitary(3);
        let weights = sampler.weights(3);
        let eta = sampler.density_full_rank(3);
        let rho = cq_state(&basis, &weights, &[eta.clone(), eta.clone(), eta.clone()], dm).unwrap();
        let mut sigma = HermitianOperator::zeros(3);
        for (i, &w) in weights.iter().enumerate() {
            sigma = &sigma + &HermitianOperator::projector(&basis.column(i)).scale(w);
        }
        let product = kron_hermitian(&sigma, &eta);
        assert!(close(rho.op().matrix(), product.matrix(), 1e-14));
    }

    #[test]
    fn product_family_is_proportional() {
        let mut sampler = Sampler::new(Seed(4));
        let sigma = sampler.density_full_rank(3);
        let eta = sampler.density_full_rank(3);
        let rho = product_state(&sigma, &eta).unwrap();
        let fam = block_family(rho.op().matrix(), dims(3), Side::A).unwrap();
        for ((k, l), blk) in fam.iter() {
            assert!(close(blk, &sigma.matrix().scale(eta.get(k, l)), 1e-15));
        }
    }

    #[test]
    fn unitaries_and_weights() {
        let mut sampler = Sampler::new(Seed(5));
        for n in 1..=5 {
            assert!(sampler.unitary(n).unitarity_deviation() < 1e-14);
            let w = sampler.weights(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(w.iter().all(|x| *x >= WEIGHT_FLOOR));
        }
    }

    #[test]
    fn seeds_derive_distinct_streams() {
        let s = Seed(7);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(3), Seed(7).derive(3));
    }
}
