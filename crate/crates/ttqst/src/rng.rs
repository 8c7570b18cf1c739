//! Seeded random-number streams.
//!
//! Every stochastic routine takes an explicit `u64` seed and derives its
//! generator with [`rng_from_seed`]. Independent substreams (one per POVM, per
//! Monte Carlo trial, ...) are keyed by [`sub_seed`], never by sharing a
//! generator, so results do not depend on scheduling order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::Scalar;

/// Stream tags separating the independent substreams drawn from one master
/// seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Ensemble = 1,
    Shots = 2,
    State = 3,
    Init = 4,
    Trial = 5,
    Sample = 6,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output mix.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the sub-seed for substream `index` of stream `tag` under `master`.
///
/// The mix is `mix64(mix64(master + GAMMA*tag) + GAMMA*(index+1))` with
/// SplitMix64 finalizers at each stage; it is a documented, stable part of the
/// output format (rerunning with the same master seed reproduces every stream).
pub fn sub_seed(master: u64, tag: StreamTag, index: u64) -> u64 {
    let stage = mix64(master.wrapping_add(GAMMA.wrapping_mul(tag as u64)));
    mix64(stage.wrapping_add(GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// Deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector of i.i.d. standard-normal scalars.
pub fn normal_vec<T: Scalar, R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<T> {
    (0..len).map(|_| T::standard_normal(rng)).collect()
}

/// Uniform draw from the real unit sphere in `R^len`.
pub fn unit_sphere_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = normal_vec(rng, len);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_are_stable_and_distinct() {
        let a = sub_seed(42, StreamTag::Ensemble, 0);
        let b = sub_seed(42, StreamTag::Ensemble, 1);
        let c = sub_seed(42, StreamTag::Shots, 0);
        assert_eq!(a, sub_seed(42, StreamTag::Ensemble, 0));
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn seeded_rng_reproduces() {
        let mut r1 = rng_from_seed(7);
        let mut r2 = rng_from_seed(7);
        let x1: Vec<f64> = normal_vec(&mut r1, 16);
        let x2: Vec<f64> = normal_vec(&mut r2, 16);
        assert_eq!(x1, x2);
    }

    #[test]
    fn sphere_vec_is_unit() {
        let mut rng = rng_from_seed(3);
        let v = unit_sphere_vec(&mut rng, 33);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
