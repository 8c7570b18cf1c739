//! Random measurement ensembles and finite-shot simulation.
//!
//! A rank-one POVM is the set `{phi_k phi_kᴴ}` built from the columns of a
//! unitary `Phi`; measuring a state `rho` yields outcome `k` with probability
//! `p_k = phi_kᴴ rho phi_k`, and `M` repetitions produce multinomial counts.
//! Gaussian ensembles (rank-one and dense) are kept for embedding/RIP
//! diagnostics; they are not POVMs.

use nalgebra::Dyn;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::linalg::{gram_identity_defect, thin_qr_phase_fixed, Mat};
use crate::rng::{normal_vec, rng_from_seed, sub_seed, StreamTag};
use crate::tt::{mpo_dense_matrix, DenseState, TensorTrain};

/// Largest dimension for which we materialize a dense `D x D` unitary.
pub const ENSEMBLE_CAPACITY: usize = 1 << 12;

/// Largest dimension for which dense `A_k` matrices are stored.
pub const DENSE_OPERATOR_CAPACITY: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    HaarRankOne,
    GaussianRankOne,
    GaussianDense,
}

/// Draws a Haar-distributed unitary (complex mode) or orthogonal (real mode)
/// matrix: QR of an i.i.d. Gaussian matrix with the R-diagonal phases divided
/// out.
pub fn haar_unitary<T: Scalar>(dim: usize, seed: u64) -> Result<Mat<T>> {
    if dim == 0 {
        return Err(Error::validation("dimension must be >= 1"));
    }
    if dim > ENSEMBLE_CAPACITY {
        return Err(Error::capacity(format!(
            "dense unitary of dimension {dim} exceeds {ENSEMBLE_CAPACITY}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok(haar_unitary_with(&mut rng, dim))
}

pub fn haar_unitary_with<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Mat<T> {
    let z = Mat::from_vec(dim, dim, normal_vec::<T, _>(rng, dim * dim));
    let (q, _) = thin_qr_phase_fixed(z);
    q
}

/// One measurement ensemble: the matrices/vectors defining a linear map `A`.
#[derive(Clone, Debug)]
pub struct MeasurementEnsemble<T: Scalar> {
    kind: EnsembleKind,
    dim: usize,
    seed: u64,
    /// `dim x K` measurement vectors for the rank-one kinds.
    vectors: Option<Mat<T>>,
    /// `K` dense operators for `GaussianDense`.
    matrices: Vec<Mat<T>>,
}

impl<T: Scalar> MeasurementEnsemble<T> {
    /// Haar random rank-one POVM: `K = dim` vectors forming a unitary, so the
    /// operators sum to the identity.
    pub fn haar_rank_one(dim: usize, seed: u64) -> Result<Self> {
        let u = haar_unitary::<T>(dim, seed)?;
        Ok(MeasurementEnsemble {
            kind: EnsembleKind::HaarRankOne,
            dim,
            seed,
            vectors: Some(u),
            matrices: Vec::new(),
        })
    }

    /// Rank-one ensemble with i.i.d. Gaussian vectors (no POVM closure).
    pub fn gaussian_rank_one(dim: usize, k: usize, seed: u64) -> Result<Self> {
        if dim == 0 || k == 0 {
            return Err(Error::validation("dimension and count must be >= 1"));
        }
        if dim > ENSEMBLE_CAPACITY {
            return Err(Error::capacity(format!("dimension {dim} exceeds {ENSEMBLE_CAPACITY}")));
        }
        let mut rng = rng_from_seed(seed);
        let v = Mat::from_vec(dim, k, normal_vec::<T, _>(&mut rng, dim * k));
        Ok(MeasurementEnsemble {
            kind: EnsembleKind::GaussianRankOne,
            dim,
            seed,
            vectors: Some(v),
            matrices: Vec::new(),
        })
    }

    /// Dense ensemble: `k` matrices with i.i.d. standard Gaussian entries.
    pub fn gaussian_dense(dim: usize, k: usize, seed: u64) -> Result<Self> {
        if dim == 0 || k == 0 {
            return Err(Error::validation("dimension and count must be >= 1"));
        }
        if dim > DENSE_OPERATOR_CAPACITY {
            return Err(Error::capacity(format!(
                "dense operators at dimension {dim} exceed {DENSE_OPERATOR_CAPACITY}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let matrices = (0..k)
            .map(|_| Mat::from_vec(dim, dim, normal_vec::<T, _>(&mut rng, dim * dim)))
            .collect();
        Ok(MeasurementEnsemble {
            kind: EnsembleKind::GaussianDense,
            dim,
            seed,
            vectors: None,
            matrices,
        })
    }

    /// Test-only override: a rank-one ensemble with explicit vectors (e.g. the
    /// identity basis).
    pub fn with_vectors(kind: EnsembleKind, vectors: Mat<T>, seed: u64) -> Self {
        let dim = vectors.nrows();
        MeasurementEnsemble {
            kind,
            dim,
            seed,
            vectors: Some(vectors),
            matrices: Vec::new(),
        }
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of outcomes / measurement operators.
    pub fn k(&self) -> usize {
        match self.kind {
            EnsembleKind::GaussianDense => self.matrices.len(),
            _ => self.vectors.as_ref().map_or(0, Mat::ncols),
        }
    }

    pub fn vectors(&self) -> Option<&Mat<T>> {
        self.vectors.as_ref()
    }

    /// `max |PhiᴴPhi - I|` for rank-one kinds (POVM closure defect for Haar).
    pub fn unitarity_defect(&self) -> Option<f64> {
        self.vectors.as_ref().map(gram_identity_defect)
    }
}

// ---------------------------------------------------------------------------
// states and the linear map
// ---------------------------------------------------------------------------

/// A quantum state in one of the forms the measurement map accepts.
#[derive(Clone, Debug)]
pub enum State<T: Scalar> {
    /// Pure state as a dense unit vector (`rho = u uᴴ` implicitly).
    PureDense(DenseState<T>),
    /// Pure state as an MPS over `d`-dimensional modes.
    PureMps(TensorTrain<T>),
    /// Density operator as a tensor train over `d^2`-dimensional modes.
    MpoTrain { tt: TensorTrain<T>, d: usize },
    /// Dense density matrix.
    MpoDense(Mat<T>),
}

impl<T: Scalar> State<T> {
    pub fn dim(&self) -> usize {
        match self {
            State::PureDense(u) => u.dim(),
            State::PureMps(t) => t.dense_dim(),
            State::MpoTrain { tt, d } => {
                let n = tt.n() as u32;
                d.pow(n)
            }
            State::MpoDense(m) => m.nrows(),
        }
    }
}

/// Operand for the raw linear map `A` (PSD not required).
#[derive(Clone, Debug)]
pub enum MapOperand<T: Scalar> {
    /// Dense `D x D` matrix.
    Dense(Mat<T>),
    /// Tensor train over `d^2`-dimensional modes.
    Train { tt: TensorTrain<T>, d: usize },
}

impl<T: Scalar> MapOperand<T> {
    pub fn dim(&self) -> usize {
        match self {
            MapOperand::Dense(m) => m.nrows(),
            MapOperand::Train { tt, d } => d.pow(tt.n() as u32),
        }
    }
}

/// Outcome probabilities of a Haar rank-one POVM on a valid quantum state:
/// `p_k = phi_kᴴ rho phi_k`, computed as `|phi_kᴴ u|^2` for pure states.
///
/// Probabilities are clamped to `[0, 1]` to absorb round-off before sampling.
pub fn population_probabilities<T: Scalar>(
    ensemble: &MeasurementEnsemble<T>,
    state: &State<T>,
) -> Result<Vec<f64>> {
    if ensemble.kind == EnsembleKind::GaussianDense {
        return Err(Error::validation(
            "population probabilities require a rank-one POVM ensemble",
        ));
    }
    let phi = ensemble
        .vectors
        .as_ref()
        .ok_or_else(|| Error::validation("ensemble has no vectors"))?;
    if state.dim() != ensemble.dim {
        return Err(Error::shape(format!(
            "state dimension {} != ensemble dimension {}",
            state.dim(),
            ensemble.dim
        )));
    }
    let p = match state {
        State::PureDense(u) => {
            check_unit_norm(u.norm())?;
            pure_probabilities(phi, u.entries())
        }
        State::PureMps(t) => {
            let u = t.contract_to_dense()?;
            check_unit_norm(u.norm())?;
            pure_probabilities(phi, u.entries())
        }
        State::MpoDense(rho) => {
            let tr: T = (0..rho.nrows()).map(|i| rho[(i, i)]).fold(T::zero(), |a, x| a + x);
            check_unit_trace(tr)?;
            rank_one_map_diagonal_dense(phi, rho)
                .into_iter()
                .map(|x| x.re_im().0)
                .collect()
        }
        State::MpoTrain { tt, d } => {
            check_unit_trace(mpo_trace(tt, *d)?)?;
            let probe = MpoProbe::new(phi.clone(), tt.n(), *d)?;
            probe
                .quadratic_diagonal(tt)?
                .into_iter()
                .map(|x| x.re_im().0)
                .collect()
        }
    };
    Ok(p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
}

fn check_unit_norm(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::validation(format!(
            "pure state must have unit norm (got {norm:.3e})"
        )));
    }
    Ok(())
}

fn check_unit_trace<T: Scalar>(tr: T) -> Result<()> {
    let (re, im) = tr.re_im();
    if (re - 1.0).abs() > 1e-8 || im.abs() > 1e-8 {
        return Err(Error::validation(format!(
            "density operator must have unit trace (got {re:.3e}+{im:.3e}i)"
        )));
    }
    Ok(())
}

fn pure_probabilities<T: Scalar>(phi: &Mat<T>, u: &[T]) -> Vec<f64> {
    let uv = Mat::from_vec(u.len(), 1, u.to_vec());
    let w = phi.adjoint() * uv;
    w.iter().map(|x| x.modulus_squared()).collect()
}

/// Trace of an MPO tensor train over `d^2` modes.
pub fn mpo_trace<T: Scalar>(tt: &TensorTrain<T>, d: usize) -> Result<T> {
    if tt.mode_dims().iter().any(|&m| m != d * d) {
        return Err(Error::shape("mpo_trace requires d^2 modes"));
    }
    let mut env = Mat::<T>::from_element(1, 1, T::one());
    for core in tt.cores() {
        let (rl, _, rr) = core.dim();
        let mut site = Mat::<T>::zeros(rl, rr);
        for i in 0..d {
            for a in 0..rl {
                for b in 0..rr {
                    site[(a, b)] += core[(a, i + d * i, b)];
                }
            }
        }
        env = env * site;
    }
    Ok(env[(0, 0)])
}

/// Applies the linear map of an ensemble to an arbitrary (not necessarily
/// PSD) operand: entry `k` is `<A_k, x>`.
pub fn apply_linear_map<T: Scalar>(
    ensemble: &MeasurementEnsemble<T>,
    x: &MapOperand<T>,
) -> Result<Vec<T>> {
    if x.dim() != ensemble.dim {
        return Err(Error::shape(format!(
            "operand dimension {} != ensemble dimension {}",
            x.dim(),
            ensemble.dim
        )));
    }
    match ensemble.kind {
        EnsembleKind::HaarRankOne | EnsembleKind::GaussianRankOne => {
            let phi = ensemble.vectors.as_ref().unwrap();
            match x {
                MapOperand::Dense(m) => Ok(rank_one_map_diagonal_dense(phi, m)),
                MapOperand::Train { tt, d } => {
                    let probe = MpoProbe::new(phi.clone(), tt.n(), *d)?;
                    probe.quadratic_diagonal(tt)
                }
            }
        }
        EnsembleKind::GaussianDense => {
            let dense = match x {
                MapOperand::Dense(m) => m.clone(),
                MapOperand::Train { tt, d } => mpo_dense_matrix(tt, *d)?,
            };
            Ok(ensemble
                .matrices
                .iter()
                .map(|a| {
                    let mut acc = T::zero();
                    for j in 0..a.ncols() {
                        for i in 0..a.nrows() {
                            acc += a[(i, j)].conjugate() * dense[(i, j)];
                        }
                    }
                    acc
                })
                .collect())
        }
    }
}

/// Reference path for the rank-one map: `diag(Phiᴴ rho Phi)` by dense GEMM.
pub fn rank_one_map_diagonal_dense<T: Scalar>(phi: &Mat<T>, rho: &Mat<T>) -> Vec<T> {
    let y = rho * phi; // D x K
    (0..phi.ncols())
        .map(|k| {
            let mut acc = T::zero();
            for i in 0..phi.nrows() {
                acc += phi[(i, k)].conjugate() * y[(i, k)];
            }
            acc
        })
        .collect()
}

// ---------------------------------------------------------------------------
// fast rank-one map on tensor-train MPOs
// ---------------------------------------------------------------------------

/// Precomputed machinery for evaluating `diag(Phiᴴ rho Phi)` on tensor-train
/// MPOs without densifying `rho`.
///
/// The train is cut at its middle bond, giving `rho = sum_m A_m (x) B_m`
/// with `r_mid` Kronecker terms, and each term reduces to two GEMMs batched
/// over the `K` measurement vectors. Per sample this costs
/// `O(r_mid * K * (D_A + D_B) * D_A D_B)` against `O(K D^2)` for the dense
/// route.
pub struct MpoProbe<T: Scalar> {
    phi: Mat<T>,
    /// conj(Phi) reshaped `(D_A, D_B * K)`; identical storage, conjugated.
    conj_reshaped: Mat<T>,
    split: usize,
    da: usize,
    db: usize,
    /// packed-mode index -> `i + D*j` position for each half
    perm_a: Vec<usize>,
    perm_b: Vec<usize>,
    d: usize,
    n: usize,
}

fn half_perm(d: usize, sites: usize) -> Vec<usize> {
    let m = d * d;
    let dim: usize = m.pow(sites as u32);
    let dhalf = d.pow(sites as u32);
    let mut perm = Vec::with_capacity(dim);
    for mut s_lin in 0..dim {
        let (mut i_lin, mut j_lin, mut stride) = (0usize, 0usize, 1usize);
        for _ in 0..sites {
            let s = s_lin % m;
            s_lin /= m;
            i_lin += (s % d) * stride;
            j_lin += (s / d) * stride;
            stride *= d;
        }
        perm.push(i_lin + dhalf * j_lin);
    }
    perm
}

impl<T: Scalar> MpoProbe<T> {
    pub fn new(phi: Mat<T>, n: usize, d: usize) -> Result<Self> {
        let dim = d.pow(n as u32);
        if phi.nrows() != dim {
            return Err(Error::shape(format!(
                "vectors have {} rows, expected {dim}",
                phi.nrows()
            )));
        }
        if n < 2 {
            return Err(Error::shape("probe needs at least two sites"));
        }
        let split = n / 2;
        let da = d.pow(split as u32);
        let db = d.pow((n - split) as u32);
        let k = phi.ncols();
        let conj = phi.map(|x| x.conjugate());
        let conj_reshaped = conj.reshape_generic(Dyn(da), Dyn(db * k));
        Ok(MpoProbe {
            phi,
            conj_reshaped,
            split,
            da,
            db,
            perm_a: half_perm(d, split),
            perm_b: half_perm(d, n - split),
            d,
            n,
        })
    }

    pub fn vectors(&self) -> &Mat<T> {
        &self.phi
    }

    /// `[phi_kᴴ rho phi_k]_k` for a tensor-train MPO `rho` over `d^2` modes.
    pub fn quadratic_diagonal(&self, tt: &TensorTrain<T>) -> Result<Vec<T>> {
        if tt.n() != self.n || tt.mode_dims().iter().any(|&m| m != self.d * self.d) {
            return Err(Error::shape("train does not match probe geometry"));
        }
        let (da, db, k) = (self.da, self.db, self.phi.ncols());
        let ranks = tt.ranks();
        let r_mid = ranks[self.split];

        // Left half: (packed prefix, r_mid); right half: (r_mid, packed suffix).
        let w_left = contract_prefix(tt, self.split);
        let w_right = contract_suffix(tt, self.split);

        let phi_data = self.phi.as_slice();
        let mut p = vec![T::zero(); k];
        let mut s2 = Mat::<T>::zeros(db, da * k);
        for m in 0..r_mid {
            let mut a_m = Mat::<T>::zeros(da, da);
            for (s, &pos) in self.perm_a.iter().enumerate() {
                a_m.as_mut_slice()[pos] = w_left[(s, m)];
            }
            let mut b_m = Mat::<T>::zeros(db, db);
            for (s, &pos) in self.perm_b.iter().enumerate() {
                b_m.as_mut_slice()[pos] = w_right[(m, s)];
            }

            // S[j_A, (i_B, k)] = sum_{i_A} A_m[i_A, j_A] conj(Phi)[i_A, (i_B, k)]
            let s1 = a_m.transpose() * &self.conj_reshaped;
            // permute to S2[i_B, (j_A, k)]
            {
                let src = s1.as_slice();
                let dst = s2.as_mut_slice();
                for kk in 0..k {
                    for ib in 0..db {
                        let src_base = da * (ib + db * kk);
                        for ja in 0..da {
                            dst[ib + db * (ja + da * kk)] = src[ja + src_base];
                        }
                    }
                }
            }
            // V[j_B, (j_A, k)] = sum_{i_B} B_m[i_B, j_B] S2[i_B, (j_A, k)]
            let v = b_m.transpose() * &s2;
            let vs = v.as_slice();
            for kk in 0..k {
                let mut acc = T::zero();
                for jb in 0..db {
                    for ja in 0..da {
                        acc += vs[jb + db * (ja + da * kk)]
                            * phi_data[ja + da * jb + da * db * kk];
                    }
                }
                p[kk] += acc;
            }
        }
        Ok(p)
    }
}

/// Contracts cores `0..split` into a `(mode-prefix, r_split)` matrix with the
/// prefix linearized first-mode-fastest.
fn contract_prefix<T: Scalar>(tt: &TensorTrain<T>, split: usize) -> Mat<T> {
    let cores = tt.cores();
    let m0 = tt.mode_dims()[0];
    let r1 = cores[0].dim().2;
    let mut acc = Mat::from_fn(m0, r1, |i, b| cores[0][(0, i, b)]);
    for core in &cores[1..split] {
        let (rl, m, rr) = core.dim();
        let right = Mat::from_fn(rl, m * rr, |a, col| core[(a, col % m, col / m)]);
        let prod = &acc * right;
        let p = prod.nrows();
        acc = prod.reshape_generic(Dyn(p * m), Dyn(rr));
    }
    acc
}

/// Contracts cores `split..n` into a `(r_split, mode-suffix)` matrix with the
/// suffix linearized first-mode-fastest.
fn contract_suffix<T: Scalar>(tt: &TensorTrain<T>, split: usize) -> Mat<T> {
    let cores = tt.cores();
    let n = tt.n();
    let last = &cores[n - 1];
    let (rl, m, _) = last.dim();
    let mut acc = Mat::from_fn(rl, m, |a, i| last[(a, i, 0)]);
    for core in cores[split..n - 1].iter().rev() {
        let (rl, m, rr) = core.dim();
        let left = Mat::from_fn(rl * m, rr, |row, b| core[(row % rl, row / rl, b)]);
        let prod = left * acc;
        let cols = prod.ncols();
        acc = prod.reshape_generic(Dyn(rl), Dyn(m * cols));
    }
    acc
}

// ---------------------------------------------------------------------------
// finite-shot sampling
// ---------------------------------------------------------------------------

/// Draws multinomial counts for `shots` measurements of a probability vector
/// by the sequential conditional-binomial method. Counts always sum to
/// `shots` exactly.
pub fn sample_empirical(p: &[f64], shots: u64, seed: u64) -> Result<(Vec<u64>, Vec<f64>)> {
    let mut rng = rng_from_seed(seed);
    sample_empirical_with(p, shots, &mut rng)
}

pub fn sample_empirical_with<R: Rng + ?Sized>(
    p: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<(Vec<u64>, Vec<f64>)> {
    if shots == 0 {
        return Err(Error::validation("shots must be >= 1"));
    }
    if p.is_empty() {
        return Err(Error::validation("empty probability vector"));
    }
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::validation("probabilities must be finite and nonnegative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "probabilities sum to {total}, expected 1 within 1e-9"
        )));
    }
    let k = p.len();
    // Suffix sums for numerically stable conditional probabilities.
    let mut tail = vec![0.0f64; k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + p[i];
    }
    let mut counts = vec![0u64; k];
    let mut remaining = shots;
    for i in 0..k {
        if remaining == 0 {
            break;
        }
        if i == k - 1 {
            counts[i] = remaining;
            remaining = 0;
            break;
        }
        let cond = if tail[i] > 0.0 {
            (p[i] / tail[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond)
                .map_err(|e| Error::validation(format!("binomial: {e}")))?
                .sample(rng)
        };
        counts[i] = c;
        remaining -= c;
    }
    let empirical = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    Ok((counts, empirical))
}

// ---------------------------------------------------------------------------
// measurement records
// ---------------------------------------------------------------------------

/// Population and empirical measurements of one state under `Q` stacked Haar
/// rank-one POVMs, each measured `shots` times.
#[derive(Clone, Debug)]
pub struct MeasurementRecord<T: Scalar> {
    ensembles: Vec<MeasurementEnsemble<T>>,
    population: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    empirical: Vec<Vec<f64>>,
    shots: u64,
    master_seed: u64,
}

impl<T: Scalar> MeasurementRecord<T> {
    pub fn q(&self) -> usize {
        self.ensembles.len()
    }

    pub fn dim(&self) -> usize {
        self.ensembles[0].dim()
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn ensembles(&self) -> &[MeasurementEnsemble<T>] {
        &self.ensembles
    }

    pub fn population(&self) -> &[Vec<f64>] {
        &self.population
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn empirical(&self) -> &[Vec<f64>] {
        &self.empirical
    }

    /// Stacked residual `empirical - population`.
    pub fn noise(&self) -> Vec<f64> {
        self.population
            .iter()
            .zip(&self.empirical)
            .flat_map(|(p, e)| p.iter().zip(e).map(|(x, y)| y - x))
            .collect()
    }

    /// `||empirical - population||_2^2`.
    pub fn noise_energy(&self) -> f64 {
        self.noise().iter().map(|x| x * x).sum()
    }
}

/// Measures `state` with `q` independent Haar rank-one POVMs, `shots` times
/// each. Sub-seeds are derived deterministically from the master seed, one
/// stream per ensemble and one per shot sequence.
pub fn build_record<T: Scalar>(
    state: &State<T>,
    q: usize,
    shots: u64,
    master_seed: u64,
) -> Result<MeasurementRecord<T>> {
    if q == 0 {
        return Err(Error::validation("need at least one POVM"));
    }
    let mut ensembles = Vec::with_capacity(q);
    let mut population = Vec::with_capacity(q);
    let mut counts = Vec::with_capacity(q);
    let mut empirical = Vec::with_capacity(q);
    for i in 0..q {
        let ens = MeasurementEnsemble::haar_rank_one(
            state.dim(),
            sub_seed(master_seed, StreamTag::Ensemble, i as u64),
        )?;
        let p = population_probabilities(&ens, state)?;
        let total: f64 = p.iter().sum();
        let renorm: Vec<f64> = p.iter().map(|x| x / total).collect();
        let (c, e) = sample_empirical(&renorm, shots, sub_seed(master_seed, StreamTag::Shots, i as u64))?;
        ensembles.push(ens);
        population.push(p);
        counts.push(c);
        empirical.push(e);
    }
    Ok(MeasurementRecord {
        ensembles,
        population,
        counts,
        empirical,
        shots,
        master_seed,
    })
}

// ---------------------------------------------------------------------------
// record serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordJson {
    dim: usize,
    q: usize,
    m: u64,
    field: Field,
    master_seed: u64,
    ensemble_seeds: Vec<u64>,
    counts: Vec<Vec<u64>>,
    population: Vec<Vec<f64>>,
    /// Measurement vectors as `[re, im]` pairs in column-major order, stored
    /// only when requested (they are regenerable from the seeds).
    #[serde(skip_serializing_if = "Option::is_none")]
    vectors: Option<Vec<Vec<[f64; 2]>>>,
}

impl<T: Scalar> MeasurementRecord<T> {
    pub fn to_json(&self, embed_vectors: bool) -> Result<String> {
        let doc = RecordJson {
            dim: self.dim(),
            q: self.q(),
            m: self.shots,
            field: T::FIELD,
            master_seed: self.master_seed,
            ensemble_seeds: self.ensembles.iter().map(|e| e.seed).collect(),
            counts: self.counts.clone(),
            population: self.population.clone(),
            vectors: embed_vectors.then(|| {
                self.ensembles
                    .iter()
                    .map(|e| {
                        e.vectors
                            .as_ref()
                            .map(|v| v.iter().map(|x| { let (re, im) = x.re_im(); [re, im] }).collect())
                            .unwrap_or_default()
                    })
                    .collect()
            }),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: RecordJson = serde_json::from_str(s)?;
        if doc.field != T::FIELD {
            return Err(Error::validation(format!(
                "stored field {} does not match requested {}",
                doc.field,
                T::FIELD
            )));
        }
        if doc.ensemble_seeds.len() != doc.q
            || doc.counts.len() != doc.q
            || doc.population.len() != doc.q
        {
            return Err(Error::validation("inconsistent record block counts"));
        }
        let mut ensembles = Vec::with_capacity(doc.q);
        for (i, &seed) in doc.ensemble_seeds.iter().enumerate() {
            let ens = match &doc.vectors {
                Some(all) => {
                    let flat = &all[i];
                    if flat.len() != doc.dim * doc.dim {
                        return Err(Error::validation("embedded vectors have wrong size"));
                    }
                    let v = Mat::from_vec(
                        doc.dim,
                        doc.dim,
                        flat.iter().map(|[re, im]| T::from_re_im(*re, *im)).collect(),
                    );
                    MeasurementEnsemble::with_vectors(EnsembleKind::HaarRankOne, v, seed)
                }
                None => MeasurementEnsemble::haar_rank_one(doc.dim, seed)?,
            };
            ensembles.push(ens);
        }
        let empirical = doc
            .counts
            .iter()
            .map(|c| c.iter().map(|&x| x as f64 / doc.m as f64).collect())
            .collect();
        Ok(MeasurementRecord {
            ensembles,
            population: doc.population,
            counts: doc.counts,
            empirical,
            shots: doc.m,
            master_seed: doc.master_seed,
        })
    }
}
