//! Tensor-train (MPS/MPO) representation and the operations the toolkit is
//! built on: sequential-SVD compression, left-canonicalization, arithmetic,
//! and dense-vector bridging for desk-scale oracles.
//!
//! # Index convention
//!
//! Site 1 is the leftmost core. A dense vector over mode dimensions
//! `(d_1, ..., d_n)` is linearized with the *first* index fastest:
//! `lin = i_1 + d_1*(i_2 + d_2*(i_3 + ...))`. All unfoldings, the sequential
//! SVD, and the dense bridge follow this convention, which makes every
//! reshape a free column-major view.
//!
//! An MPO over local dimension `d` is stored as a tensor train over
//! `d*d`-dimensional modes with the pair `(i_l, j_l)` packed as
//! `s_l = i_l + d*j_l` (row index fastest).

use nalgebra::Dyn;
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::linalg::{slice_inner, slice_norm, thin_qr_phase_fixed, thin_svd, Mat};
use crate::rng::{normal_vec, rng_from_seed};

/// Largest dense dimension the oracle bridge will materialize.
pub const DENSE_CAPACITY: usize = 1 << 24;

/// Default relative singular-value cutoff for sequential-SVD truncation.
pub const DEFAULT_SVD_TOL: f64 = 1e-12;

/// Gauge marker for a tensor train.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Canonical {
    None,
    Left,
}

/// A tensor train: `n` order-3 cores, core `l` of shape
/// `(r_{l-1}, mode_dims[l], r_l)` with `r_0 = r_n = 1`.
#[derive(Clone, Debug)]
pub struct TensorTrain<T: Scalar> {
    mode_dims: Vec<usize>,
    cores: Vec<Array3<T>>,
    canonical: Canonical,
}

/// A dense state vector; the bridge target for desk-scale oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState<T: Scalar> {
    entries: Vec<T>,
}

impl<T: Scalar> DenseState<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::validation("dense state must be non-empty"));
        }
        if entries.iter().any(|x| !x.re_im().0.is_finite() || !x.re_im().1.is_finite()) {
            return Err(Error::validation("dense state has non-finite entries"));
        }
        Ok(DenseState { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn norm(&self) -> f64 {
        slice_norm(&self.entries)
    }

    /// Checks the unit-norm invariant for pure states (tolerance 1e-12).
    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }
}

// ---------------------------------------------------------------------------
// unfolding helpers
// ---------------------------------------------------------------------------

/// Left unfolding: rows grouped `(a, i)` with `a` fastest, columns `b`.
fn left_unfold<T: Scalar>(core: &Array3<T>) -> Mat<T> {
    let (rl, m, rr) = core.dim();
    Mat::from_fn(rl * m, rr, |row, b| core[(row % rl, row / rl, b)])
}

fn fold_left<T: Scalar>(mat: &Mat<T>, rl: usize, m: usize) -> Array3<T> {
    let rr = mat.ncols();
    Array3::from_shape_fn((rl, m, rr), |(a, i, b)| mat[(a + rl * i, b)])
}

/// Right unfolding: rows `a`, columns grouped `(i, b)` with `i` fastest.
fn right_unfold<T: Scalar>(core: &Array3<T>) -> Mat<T> {
    let (rl, m, rr) = core.dim();
    Mat::from_fn(rl, m * rr, |a, col| core[(a, col % m, col / m)])
}

fn fold_right<T: Scalar>(mat: &Mat<T>, m: usize, rr: usize) -> Array3<T> {
    let rl = mat.nrows();
    Array3::from_shape_fn((rl, m, rr), |(a, i, b)| mat[(a, i + m * b)])
}

impl<T: Scalar> TensorTrain<T> {
    /// Builds a tensor train from explicit cores, validating the shape chain.
    ///
    /// The canonical flag is taken at face value here; deserialization and the
    /// test suite verify it with [`TensorTrain::canonical_defect`].
    pub fn from_cores(
        mode_dims: Vec<usize>,
        cores: Vec<Array3<T>>,
        canonical: Canonical,
    ) -> Result<Self> {
        if mode_dims.is_empty() || mode_dims.len() != cores.len() {
            return Err(Error::shape(format!(
                "{} mode dims for {} cores",
                mode_dims.len(),
                cores.len()
            )));
        }
        if mode_dims.iter().any(|&d| d == 0) {
            return Err(Error::shape("zero mode dimension"));
        }
        let mut prev_rank = 1usize;
        for (l, core) in cores.iter().enumerate() {
            let (rl, m, rr) = core.dim();
            if rl != prev_rank {
                return Err(Error::shape(format!(
                    "core {l}: left rank {rl} != previous right rank {prev_rank}"
                )));
            }
            if m != mode_dims[l] {
                return Err(Error::shape(format!(
                    "core {l}: mode {m} != declared {}",
                    mode_dims[l]
                )));
            }
            if rl == 0 || rr == 0 {
                return Err(Error::shape(format!("core {l}: zero rank")));
            }
            if core.iter().any(|x| {
                let (re, im) = x.re_im();
                !re.is_finite() || !im.is_finite()
            }) {
                return Err(Error::validation(format!("core {l} has non-finite entries")));
            }
            prev_rank = rr;
        }
        if prev_rank != 1 {
            return Err(Error::shape(format!("final right rank {prev_rank} != 1")));
        }
        Ok(TensorTrain {
            mode_dims,
            cores,
            canonical,
        })
    }

    pub fn n(&self) -> usize {
        self.cores.len()
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn cores(&self) -> &[Array3<T>] {
        &self.cores
    }

    pub fn canonical(&self) -> Canonical {
        self.canonical
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    /// The full rank chain `r_0, ..., r_n` (boundary ranks included).
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = Vec::with_capacity(self.n() + 1);
        r.push(1);
        for core in &self.cores {
            r.push(core.dim().2);
        }
        r
    }

    /// Interior ranks `r_1, ..., r_{n-1}` (the bond dimensions).
    pub fn interior_ranks(&self) -> Vec<usize> {
        let r = self.ranks();
        r[1..r.len() - 1].to_vec()
    }

    pub fn dense_dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    /// Largest violation of `L(X_l)ᴴ L(X_l) = I` over `l < n`.
    pub fn canonical_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for core in &self.cores[..self.n() - 1] {
            let l = left_unfold(core);
            worst = worst.max(crate::linalg::gram_identity_defect(&l));
        }
        worst
    }

    /// Frobenius norm of the represented tensor. For the left-canonical gauge
    /// this is exactly the norm of the final core.
    pub fn norm(&self) -> f64 {
        match self.canonical {
            Canonical::Left => self.cores[self.n() - 1]
                .iter()
                .map(|x| x.modulus_squared())
                .sum::<f64>()
                .sqrt(),
            Canonical::None => {
                let ip = inner_product(self, self).expect("self inner product");
                ip.re_im().0.max(0.0).sqrt()
            }
        }
    }

    /// Contracts the train to a dense vector (capacity-guarded).
    ///
    /// Entry `(s_1, ..., s_n)` of the result is the matrix product
    /// `X_1^{s_1} ... X_n^{s_n}`.
    pub fn contract_to_dense(&self) -> Result<DenseState<T>> {
        let dim = self.dense_dim();
        if dim > DENSE_CAPACITY {
            return Err(Error::capacity(format!(
                "dense dimension {dim} exceeds {DENSE_CAPACITY}"
            )));
        }
        // (prefix, r_l) accumulator; every reshape is a free column-major view.
        let first = right_unfold(&self.cores[0]); // 1 x (d_1 * r_1)
        let r1 = self.cores[0].dim().2;
        let mut acc = first.reshape_generic(Dyn(self.mode_dims[0]), Dyn(r1));
        for core in &self.cores[1..] {
            let (_, m, rr) = core.dim();
            let prod = &acc * right_unfold(core); // (P, m*rr)
            let p = prod.nrows();
            acc = prod.reshape_generic(Dyn(p * m), Dyn(rr));
        }
        DenseState::new(acc.data.into())
    }

    /// Returns the left-canonical gauge of the same tensor.
    pub fn left_canonicalize(&self) -> Result<TensorTrain<T>> {
        let n = self.n();
        let mut cores = self.cores.clone();
        for l in 0..n - 1 {
            let (rl, m, _) = cores[l].dim();
            let (q, r) = thin_qr_phase_fixed(left_unfold(&cores[l]));
            cores[l] = fold_left(&q, rl, m);
            let (_, m_next, rr_next) = cores[l + 1].dim();
            let pushed = r * right_unfold(&cores[l + 1]);
            cores[l + 1] = fold_right(&pushed, m_next, rr_next);
        }
        TensorTrain::from_cores(self.mode_dims.clone(), cores, Canonical::Left)
    }

    /// Scales the tensor by `1/norm`, leaving the gauge untouched (the factor
    /// is absorbed into the final core).
    pub fn normalized(&self) -> Result<TensorTrain<T>> {
        let nrm = self.norm();
        if nrm <= 1e-300 {
            return Err(Error::validation("cannot normalize a zero tensor train"));
        }
        let mut cores = self.cores.clone();
        let n = self.n();
        let inv = T::from_real(1.0 / nrm);
        cores[n - 1].mapv_inplace(|x| x * inv);
        TensorTrain::from_cores(self.mode_dims.clone(), cores, self.canonical)
    }
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

/// Compresses a dense vector into a tensor train by the sequential SVD,
/// keeping at most `max_rank` singular values (and only those above
/// `tol * sigma_max`) at every bond.
///
/// The output is left-canonical. A zero input yields the all-zero train with
/// unit ranks, flagged non-canonical.
pub fn tt_svd<T: Scalar>(
    v: &DenseState<T>,
    mode_dims: &[usize],
    max_rank: usize,
    tol: f64,
) -> Result<TensorTrain<T>> {
    let dim: usize = mode_dims.iter().product();
    if dim != v.dim() {
        return Err(Error::shape(format!(
            "mode dims product {dim} != dense dim {}",
            v.dim()
        )));
    }
    if max_rank == 0 {
        return Err(Error::validation("max_rank must be >= 1"));
    }
    let n = mode_dims.len();
    if slice_norm(v.entries()) == 0.0 {
        let cores = mode_dims
            .iter()
            .map(|&d| Array3::from_elem((1, d, 1), T::zero()))
            .collect();
        return TensorTrain::from_cores(mode_dims.to_vec(), cores, Canonical::None);
    }
    if n == 1 {
        let core = Array3::from_shape_fn((1, mode_dims[0], 1), |(_, i, _)| v.entries()[i]);
        return TensorTrain::from_cores(mode_dims.to_vec(), vec![core], Canonical::Left);
    }

    let mut cores: Vec<Array3<T>> = Vec::with_capacity(n);
    let mut c = Mat::from_vec(mode_dims[0], dim / mode_dims[0], v.entries().to_vec());
    let mut rl = 1usize;
    for l in 0..n - 1 {
        let (u, s, vh) = thin_svd(&c)?;
        let smax = s[0];
        let mut rank = s
            .iter()
            .take(max_rank)
            .filter(|&&sigma| sigma > tol * smax)
            .count();
        rank = rank.max(1);
        cores.push(fold_left(&u.columns(0, rank).into_owned(), rl, mode_dims[l]));
        let mut next = vh.rows(0, rank).into_owned();
        for (i, &sigma) in s.iter().take(rank).enumerate() {
            let scale = T::from_real(sigma);
            for j in 0..next.ncols() {
                next[(i, j)] *= scale;
            }
        }
        rl = rank;
        if l < n - 2 {
            let cols = next.ncols() / mode_dims[l + 1];
            c = next.reshape_generic(Dyn(rl * mode_dims[l + 1]), Dyn(cols));
        } else {
            c = next;
        }
    }
    // c: (r_{n-1}, d_n)
    cores.push(Array3::from_shape_fn(
        (rl, mode_dims[n - 1], 1),
        |(a, i, _)| c[(a, i)],
    ));
    TensorTrain::from_cores(mode_dims.to_vec(), cores, Canonical::Left)
}

/// Draws a random unit-norm MPS with bond ranks at most `r`: a seeded Gaussian
/// vector compressed by [`tt_svd`] and rescaled to unit Frobenius norm.
pub fn random_unit_mps<T: Scalar>(n: usize, d: usize, r: usize, seed: u64) -> Result<TensorTrain<T>> {
    if n == 0 || d < 2 {
        return Err(Error::validation("need n >= 1 sites of local dimension >= 2"));
    }
    if r == 0 {
        return Err(Error::validation("rank must be >= 1"));
    }
    let bits = (d as f64).log2() * n as f64;
    if bits > 24.0 + 1e-9 {
        return Err(Error::capacity(format!(
            "n*log2(d) = {bits:.2} exceeds the dense guard of 24"
        )));
    }
    let dim = d.pow(n as u32);
    let mut rng = rng_from_seed(seed);
    let g = DenseState::new(normal_vec::<T, _>(&mut rng, dim))?;
    let tt = tt_svd(&g, &vec![d; n], r, DEFAULT_SVD_TOL)?;
    tt.normalized()
}

/// Random tensor train over the given mode dimensions with i.i.d. Gaussian
/// cores at the requested maximum interior rank, left-canonicalized and scaled
/// to unit Frobenius norm. This is the sampler behind the embedding and RIP
/// diagnostics ("random MPO with unit Frobenius norm").
pub fn random_unit_tt<T: Scalar>(
    mode_dims: &[usize],
    max_rank: usize,
    seed: u64,
) -> Result<TensorTrain<T>> {
    if mode_dims.is_empty() || max_rank == 0 {
        return Err(Error::validation("need >= 1 mode and rank >= 1"));
    }
    let n = mode_dims.len();
    let mut ranks = vec![1usize; n + 1];
    for l in 1..n {
        let left: usize = mode_dims[..l]
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        let right: usize = mode_dims[l..]
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        ranks[l] = max_rank.min(left).min(right);
    }
    let mut rng = rng_from_seed(seed);
    let cores: Vec<Array3<T>> = (0..n)
        .map(|l| {
            let shape = (ranks[l], mode_dims[l], ranks[l + 1]);
            let data = normal_vec::<T, _>(&mut rng, shape.0 * shape.1 * shape.2);
            Array3::from_shape_fn(shape, |(a, i, b)| data[a + shape.0 * (i + shape.1 * b)])
        })
        .collect();
    let tt = TensorTrain::from_cores(mode_dims.to_vec(), cores, Canonical::None)?;
    tt.left_canonicalize()?.normalized()
}

/// Inner product `<a, b>` (conjugate-linear in `a`), computed by transfer
/// matrices in time polynomial in ranks and mode dimensions.
pub fn inner_product<T: Scalar>(a: &TensorTrain<T>, b: &TensorTrain<T>) -> Result<T> {
    if a.mode_dims != b.mode_dims {
        return Err(Error::shape(format!(
            "mode dims {:?} vs {:?}",
            a.mode_dims, b.mode_dims
        )));
    }
    let mut env = Mat::<T>::from_element(1, 1, T::one());
    for (ca, cb) in a.cores.iter().zip(b.cores.iter()) {
        let (ral, m, rar) = ca.dim();
        let (rbl, _, rbr) = cb.dim();
        let mut next = Mat::<T>::zeros(rar, rbr);
        for i in 0..m {
            let ai = Mat::from_fn(ral, rar, |p, q| ca[(p, i, q)]);
            let bi = Mat::from_fn(rbl, rbr, |p, q| cb[(p, i, q)]);
            next += ai.adjoint() * &env * bi;
        }
        env = next;
    }
    Ok(env[(0, 0)])
}

/// Structural sum of two tensor trains: block-diagonal interior cores,
/// concatenated boundary cores; interior ranks add exactly.
pub fn tt_add<T: Scalar>(a: &TensorTrain<T>, b: &TensorTrain<T>) -> Result<TensorTrain<T>> {
    if a.mode_dims != b.mode_dims {
        return Err(Error::shape(format!(
            "mode dims {:?} vs {:?}",
            a.mode_dims, b.mode_dims
        )));
    }
    let n = a.n();
    if n == 1 {
        let d = a.mode_dims[0];
        let core = Array3::from_shape_fn((1, d, 1), |(_, i, _)| {
            a.cores[0][(0, i, 0)] + b.cores[0][(0, i, 0)]
        });
        return TensorTrain::from_cores(a.mode_dims.clone(), vec![core], Canonical::None);
    }
    let mut cores = Vec::with_capacity(n);
    for l in 0..n {
        let ca = &a.cores[l];
        let cb = &b.cores[l];
        let (ral, m, rar) = ca.dim();
        let (rbl, _, rbr) = cb.dim();
        let core = if l == 0 {
            Array3::from_shape_fn((1, m, rar + rbr), |(_, i, q)| {
                if q < rar {
                    ca[(0, i, q)]
                } else {
                    cb[(0, i, q - rar)]
                }
            })
        } else if l == n - 1 {
            Array3::from_shape_fn((ral + rbl, m, 1), |(p, i, _)| {
                if p < ral {
                    ca[(p, i, 0)]
                } else {
                    cb[(p - ral, i, 0)]
                }
            })
        } else {
            Array3::from_shape_fn((ral + rbl, m, rar + rbr), |(p, i, q)| {
                if p < ral && q < rar {
                    ca[(p, i, q)]
                } else if p >= ral && q >= rar {
                    cb[(p - ral, i, q - rar)]
                } else {
                    T::zero()
                }
            })
        };
        cores.push(core);
    }
    TensorTrain::from_cores(a.mode_dims.clone(), cores, Canonical::None)
}

/// Lifts an MPS `u` to the MPO of `u uᴴ`: sitewise Kronecker products of the
/// cores with their conjugates. Mode dimensions become `d^2` (pair `(i, j)`
/// packed as `i + d*j`) and interior ranks square.
pub fn mps_to_mpo<T: Scalar>(u: &TensorTrain<T>) -> Result<TensorTrain<T>> {
    let d = u.mode_dims[0];
    if u.mode_dims.iter().any(|&m| m != d) {
        return Err(Error::shape("mps_to_mpo requires uniform local dimension"));
    }
    let cores = u
        .cores
        .iter()
        .map(|c| {
            let (rl, _, rr) = c.dim();
            Array3::from_shape_fn((rl * rl, d * d, rr * rr), |(p, s, q)| {
                let (au, ac) = (p % rl, p / rl);
                let (i, j) = (s % d, s / d);
                let (bu, bc) = (q % rr, q / rr);
                c[(au, i, bu)] * c[(ac, j, bc)].conjugate()
            })
        })
        .collect();
    TensorTrain::from_cores(vec![d * d; u.n()], cores, u.canonical)
}

/// Dense `d^n x d^n` matrix of an MPO train (modes `d^2`), with the row
/// multi-index `(i_1..i_n)` and column multi-index `(j_1..j_n)` both
/// linearized first-index-fastest.
pub fn mpo_dense_matrix<T: Scalar>(t: &TensorTrain<T>, d: usize) -> Result<Mat<T>> {
    if t.mode_dims.iter().any(|&m| m != d * d) {
        return Err(Error::shape(format!(
            "expected uniform mode dimension {} for local dimension {d}",
            d * d
        )));
    }
    let n = t.n();
    let dim = d.pow(n as u32);
    if dim.checked_mul(dim).is_none_or(|x| x > DENSE_CAPACITY) {
        return Err(Error::capacity(format!("dense matrix {dim}x{dim} too large")));
    }
    let v = t.contract_to_dense()?;
    let mut out = Mat::<T>::zeros(dim, dim);
    for (s_lin, &x) in v.entries().iter().enumerate() {
        let mut rest = s_lin;
        let (mut i_lin, mut j_lin, mut stride) = (0usize, 0usize, 1usize);
        for _ in 0..n {
            let s = rest % (d * d);
            rest /= d * d;
            i_lin += (s % d) * stride;
            j_lin += (s / d) * stride;
            stride *= d;
        }
        out[(i_lin, j_lin)] = x;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EntryRepr {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TtJson {
    n: usize,
    mode_dims: Vec<usize>,
    ranks: Vec<usize>,
    field: Field,
    canonical: Canonical,
    /// cores[l][a][m][b], i.e. (left-rank, mode, right-rank) order.
    cores: Vec<Vec<Vec<Vec<EntryRepr>>>>,
}

impl<T: Scalar> TensorTrain<T> {
    pub fn to_json(&self) -> Result<String> {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let (rl, m, rr) = c.dim();
                (0..rl)
                    .map(|a| {
                        (0..m)
                            .map(|i| {
                                (0..rr)
                                    .map(|b| {
                                        let (re, im) = c[(a, i, b)].re_im();
                                        match T::FIELD {
                                            Field::Real => EntryRepr::Real(re),
                                            Field::Complex => EntryRepr::Complex([re, im]),
                                        }
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let doc = TtJson {
            n: self.n(),
            mode_dims: self.mode_dims.clone(),
            ranks: self.ranks(),
            field: T::FIELD,
            canonical: self.canonical,
            cores,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TtJson = serde_json::from_str(s)?;
        if doc.field != T::FIELD {
            return Err(Error::validation(format!(
                "stored field {} does not match requested {}",
                doc.field,
                T::FIELD
            )));
        }
        if doc.n != doc.mode_dims.len() || doc.n != doc.cores.len() || doc.ranks.len() != doc.n + 1 {
            return Err(Error::validation("inconsistent n / mode_dims / ranks / cores"));
        }
        let mut cores = Vec::with_capacity(doc.n);
        for (l, cj) in doc.cores.iter().enumerate() {
            let (rl, rr) = (doc.ranks[l], doc.ranks[l + 1]);
            let m = doc.mode_dims[l];
            if cj.len() != rl {
                return Err(Error::validation(format!("core {l}: bad left-rank extent")));
            }
            let mut arr = Array3::from_elem((rl, m, rr), T::zero());
            for (a, plane) in cj.iter().enumerate() {
                if plane.len() != m {
                    return Err(Error::validation(format!("core {l}: bad mode extent")));
                }
                for (i, row) in plane.iter().enumerate() {
                    if row.len() != rr {
                        return Err(Error::validation(format!("core {l}: bad right-rank extent")));
                    }
                    for (b, e) in row.iter().enumerate() {
                        arr[(a, i, b)] = match e {
                            EntryRepr::Real(re) => T::from_re_im(*re, 0.0),
                            EntryRepr::Complex([re, im]) => {
                                if T::FIELD == Field::Real && *im != 0.0 {
                                    return Err(Error::validation(
                                        "complex entry in a real tensor train",
                                    ));
                                }
                                T::from_re_im(*re, *im)
                            }
                        };
                    }
                }
            }
            cores.push(arr);
        }
        let tt = TensorTrain::from_cores(doc.mode_dims, cores, doc.canonical)?;
        if tt.canonical == Canonical::Left && tt.canonical_defect() > 1e-10 {
            return Err(Error::validation(
                "stored train claims left-canonical but violates the gauge",
            ));
        }
        Ok(tt)
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn dense_of<T: Scalar>(t: &TensorTrain<T>) -> Vec<T> {
        t.contract_to_dense().unwrap().into_entries()
    }

    fn dense_diff<T: Scalar>(a: &[T], b: &[T]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (*x - *y).modulus_squared())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn all_ones_rank_one_contracts_to_ones() {
        let core = Array3::from_elem((1, 2, 1), 1.0f64);
        let t =
            TensorTrain::from_cores(vec![2, 2], vec![core.clone(), core], Canonical::None).unwrap();
        assert_eq!(dense_of(&t), vec![1.0; 4]);
    }

    #[test]
    fn rank_one_product_state_from_seed_zero() {
        let t = random_unit_mps::<f64>(4, 2, 1, 0).unwrap();
        assert_eq!(t.ranks(), vec![1, 1, 1, 1, 1]);
        assert!((t.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_mps_norm_and_ranks() {
        let t = random_unit_mps::<f64>(6, 2, 2, 7).unwrap();
        assert_eq!(t.interior_ranks(), vec![2; 5]);
        let v = t.contract_to_dense().unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_mps_is_deterministic() {
        let a = random_unit_mps::<f64>(6, 2, 2, 7).unwrap();
        let b = random_unit_mps::<f64>(6, 2, 2, 7).unwrap();
        for (ca, cb) in a.cores().iter().zip(b.cores().iter()) {
            assert_eq!(ca, cb);
        }
    }

    #[test]
    fn capacity_guard_rejects_large_mps() {
        assert!(matches!(
            random_unit_mps::<f64>(30, 2, 2, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn tt_svd_basis_vector_is_product_state() {
        let mut e1 = vec![0.0f64; 16];
        e1[0] = 1.0;
        let t = tt_svd(&DenseState::new(e1.clone()).unwrap(), &[2; 4], 4, DEFAULT_SVD_TOL).unwrap();
        assert_eq!(t.ranks(), vec![1; 5]);
        assert!(dense_diff(&dense_of(&t), &e1) < 1e-14);
    }

    #[test]
    fn tt_svd_round_trip_low_rank() {
        let u = random_unit_mps::<f64>(5, 2, 2, 11).unwrap();
        let v = u.contract_to_dense().unwrap();
        let t = tt_svd(&v, &[2; 5], 2, DEFAULT_SVD_TOL).unwrap();
        assert!(dense_diff(&dense_of(&t), v.entries()) <= 1e-10 * v.norm());
        assert!(t.canonical_defect() < 1e-12);
    }

    #[test]
    fn tt_svd_zero_vector() {
        let t = tt_svd(
            &DenseState::new(vec![0.0f64; 8]).unwrap(),
            &[2; 3],
            2,
            DEFAULT_SVD_TOL,
        )
        .unwrap();
        assert_eq!(t.canonical(), Canonical::None);
        assert_eq!(t.ranks(), vec![1; 4]);
        assert_eq!(t.norm(), 0.0);
    }

    /// Truncation error must equal the root-sum-square of discarded singular
    /// values of the unfolding matrices, checked against full-matrix SVDs.
    #[test]
    fn tt_svd_truncation_error_matches_unfolding_svds() {
        // Build a vector with interior ranks (4, 4) at n = 3 over d = 4 modes.
        let t = random_unit_tt::<f64>(&[4, 4, 4], 4, 5).unwrap();
        let v = t.contract_to_dense().unwrap();
        let truncated = tt_svd(&v, &[4, 4, 4], 2, 0.0).unwrap();
        let err = dense_diff(&dense_of(&truncated), v.entries());

        // Oracle: discarded singular values at each sequential sweep step.
        // For the first step they come from the first unfolding of v itself.
        let m1 = Mat::from_vec(4, 16, v.entries().to_vec());
        let (_, s1, _) = thin_svd(&m1).unwrap();
        let discarded1: f64 = s1.iter().skip(2).map(|x| x * x).sum();
        // Quasi-optimality: the sweep error is bounded by the sum over all
        // unfoldings and bounded below by each single unfolding tail.
        let m2 = Mat::from_vec(16, 4, v.entries().to_vec());
        let (_, s2, _) = thin_svd(&m2).unwrap();
        let discarded2: f64 = s2.iter().skip(2).map(|x| x * x).sum();
        assert!(err * err >= discarded1.max(discarded2) - 1e-12);
        assert!(err * err <= discarded1 + discarded2 + 1e-12);
    }

    #[test]
    fn left_canonicalize_preserves_tensor_and_fixes_gauge() {
        let mut t = random_unit_mps::<f64>(5, 2, 2, 3).unwrap();
        // Break the gauge: scale adjacent cores by 2 and 1/2.
        let mut cores = t.cores().to_vec();
        cores[1].mapv_inplace(|x| x * 2.0);
        cores[2].mapv_inplace(|x| x * 0.5);
        t = TensorTrain::from_cores(t.mode_dims().to_vec(), cores, Canonical::None).unwrap();
        let before = dense_of(&t);
        let c = t.left_canonicalize().unwrap();
        assert!(c.canonical_defect() <= 1e-12);
        assert!(dense_diff(&dense_of(&c), &before) <= 1e-10 * slice_norm(&before));
    }

    #[test]
    fn unit_norm_canonical_final_core_has_unit_norm() {
        let t = random_unit_mps::<f64>(6, 2, 3, 9).unwrap();
        let last = &t.cores()[5];
        let nrm: f64 = last.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((nrm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn inner_product_matches_dense_oracle() {
        let a = random_unit_mps::<f64>(10, 2, 3, 21).unwrap();
        let b = random_unit_mps::<f64>(10, 2, 3, 22).unwrap();
        let dense = slice_inner(&dense_of(&a), &dense_of(&b));
        let fast = inner_product(&a, &b).unwrap();
        assert!((dense - fast).abs() < 1e-10);
        assert!((inner_product(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_orthogonal_product_states() {
        let mut e1 = vec![0.0f64; 4];
        e1[0] = 1.0;
        let mut e2 = vec![0.0f64; 4];
        e2[3] = 1.0;
        let a = tt_svd(&DenseState::new(e1).unwrap(), &[2, 2], 1, DEFAULT_SVD_TOL).unwrap();
        let b = tt_svd(&DenseState::new(e2).unwrap(), &[2, 2], 1, DEFAULT_SVD_TOL).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn tt_add_ranks_and_dense_sum() {
        let a = random_unit_tt::<f64>(&[4, 4, 4], 2, 1).unwrap();
        let b = random_unit_tt::<f64>(&[4, 4, 4], 3, 2).unwrap();
        let sum = tt_add(&a, &b).unwrap();
        assert_eq!(sum.interior_ranks(), vec![5, 5]);
        let expect: Vec<f64> = dense_of(&a)
            .iter()
            .zip(dense_of(&b))
            .map(|(x, y)| x + y)
            .collect();
        assert!(dense_diff(&dense_of(&sum), &expect) <= 1e-12);
    }

    #[test]
    fn tt_add_additive_inverse_contracts_to_zero() {
        let a = random_unit_mps::<f64>(4, 2, 2, 13).unwrap();
        let mut neg_cores = a.cores().to_vec();
        neg_cores[0].mapv_inplace(|x| -x);
        let neg = TensorTrain::from_cores(a.mode_dims().to_vec(), neg_cores, Canonical::None).unwrap();
        let sum = tt_add(&a, &neg).unwrap();
        assert!(slice_norm(&dense_of(&sum)) <= 1e-12);
    }

    #[test]
    fn tt_add_cancellation_recovers_minimal_ranks() {
        // a + (-a) has structural ranks 2r but true rank 0; adding a rank-1
        // train back gives true interior ranks 1, recovered by tt_svd.
        let a = random_unit_mps::<f64>(4, 2, 2, 17).unwrap();
        let p = random_unit_mps::<f64>(4, 2, 1, 18).unwrap();
        let mut neg_cores = a.cores().to_vec();
        neg_cores[0].mapv_inplace(|x| -x);
        let neg = TensorTrain::from_cores(a.mode_dims().to_vec(), neg_cores, Canonical::None).unwrap();
        let s = tt_add(&tt_add(&a, &neg).unwrap(), &p).unwrap();
        assert_eq!(s.interior_ranks(), vec![5, 5, 5]);
        let dense = s.contract_to_dense().unwrap();
        let re = tt_svd(&dense, &[2; 4], 8, DEFAULT_SVD_TOL).unwrap();
        assert_eq!(re.interior_ranks(), vec![1, 1, 1]);
    }

    #[test]
    fn mps_to_mpo_ranks_and_outer_product() {
        let u = random_unit_mps::<f64>(3, 2, 2, 4).unwrap();
        let rho = mps_to_mpo(&u).unwrap();
        assert_eq!(rho.interior_ranks(), vec![4, 4]);
        let m = mpo_dense_matrix(&rho, 2).unwrap();
        let uv = dense_of(&u);
        for i in 0..8 {
            for j in 0..8 {
                assert!((m[(i, j)] - uv[i] * uv[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mps_to_mpo_product_state_stays_rank_one() {
        let u = random_unit_mps::<f64>(4, 2, 1, 6).unwrap();
        assert_eq!(mps_to_mpo(&u).unwrap().interior_ranks(), vec![1, 1, 1]);
    }

    #[test]
    fn complex_round_trip_and_canonicalization() {
        let t = random_unit_tt::<Complex64>(&[2, 2, 2, 2, 2], 2, 8).unwrap();
        assert!(t.canonical_defect() < 1e-12);
        let v = t.contract_to_dense().unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let back = tt_svd(&v, &[2; 5], 2, DEFAULT_SVD_TOL).unwrap();
        assert!(dense_diff(&dense_of(&back), v.entries()) <= 1e-10);
    }

    #[test]
    fn json_round_trip_real_and_complex() {
        let t = random_unit_mps::<f64>(4, 2, 2, 30).unwrap();
        let s = t.to_json().unwrap();
        let u = TensorTrain::<f64>::from_json(&s).unwrap();
        assert!(dense_diff(&dense_of(&t), &dense_of(&u)) == 0.0);
        assert_eq!(u.canonical(), t.canonical());

        let c = random_unit_tt::<Complex64>(&[4, 4, 4], 3, 31).unwrap();
        let s = c.to_json().unwrap();
        let u = TensorTrain::<Complex64>::from_json(&s).unwrap();
        assert!(dense_diff(&dense_of(&c), &dense_of(&u)) == 0.0);
        // field mismatch is rejected
        assert!(TensorTrain::<f64>::from_json(&s).is_err());
    }

    #[test]
    fn shape_validation_rejects_bad_chains() {
        let c1 = Array3::from_elem((1, 2, 3), 1.0f64);
        let c2 = Array3::from_elem((2, 2, 1), 1.0f64);
        assert!(TensorTrain::from_cores(vec![2, 2], vec![c1, c2], Canonical::None).is_err());
    }
}
