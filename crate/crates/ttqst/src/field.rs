//! Scalar-field abstraction: every numerical routine in this crate is generic
//! over [`Scalar`], instantiated at `f64` (real mode) or `Complex64`
//! (complex mode).

use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Runtime tag for the scalar field of a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

/// Scalars the toolkit works over: `f64` and `Complex64`.
///
/// The trait piggybacks on `nalgebra::ComplexField` for arithmetic, conjugation
/// and moduli, and adds the few pieces nalgebra does not provide: a field tag,
/// (re, im) conversions for serialization, and standard-normal sampling.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const FIELD: Field;

    fn from_re_im(re: f64, im: f64) -> Self;

    fn re_im(&self) -> (f64, f64);

    /// Draw one standard-normal scalar. In complex mode the real and imaginary
    /// parts are independent N(0, 1/2), so the variance of the modulus is 1.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn from_re_im(re: f64, _im: f64) -> Self {
        re
    }

    fn re_im(&self) -> (f64, f64) {
        (*self, 0.0)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn re_im(&self) -> (f64, f64) {
        (self.re, self.im)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}
