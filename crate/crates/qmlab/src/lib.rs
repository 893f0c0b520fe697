//! A small laboratory for quasimorphisms built from group actions.
//!
//! A quasimorphism on a group `G` is a map `mu: G -> Q` whose defect
//! `|mu(xy) - mu(x) - mu(y)|` is uniformly bounded.  Everything here is
//! organised around one construction: a group acting on a space that is
//! partitioned into integer-labeled fundamental domains carrying a level
//! function `h`.  When the action displaces domains in a uniformly bounded
//! window, `g -> h(g.a) - h(a)` is a quasimorphism with an explicit defect
//! bound, and the library certifies that bound on finite samples instead of
//! taking it on faith.
//!
//! Modules:
//! - [`words`]: normal forms for free groups and free products of cyclics,
//!   shortlex enumeration, and the 2x2 integer-matrix realization.
//! - [`qmcore`]: evaluators, exhaustive defect lower bounds, homogenization
//!   by repeated squaring.
//! - [`triple`]: leveled spaces, action certificates, and the pipeline that
//!   turns a certified action into a quasimorphism with a claimed defect.
//! - [`ladder`]: embeddings of a group into a ladder metric space indexed by
//!   integer levels, quasi-isometry certificates, reconstruction.
//! - [`circle`]: monotone circle lifts, translation numbers, level functions
//!   obtained by integrating a periodic density.
//! - [`psl2z`]: the modular group as a free product of cyclics, with the
//!   letter-counting quasimorphism and matrix-backed homogenization.
//!
//! All arithmetic is exact (`num_rational::BigRational`); no floating point
//! enters any verdict.

pub mod circle;
pub mod config;
pub mod error;
pub mod ladder;
pub mod psl2z;
pub mod qmcore;
#[doc(hidden)]
pub mod sweep;
pub mod triple;
pub mod words;

pub use error::{Error, Result};

pub mod rational {
    //! Helpers for exact rational values and their `p/q` string form.

    use crate::error::Error;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, Zero};

    pub type Rational = BigRational;

    pub fn rat(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    pub fn ratio(num: i64, den: i64) -> Rational {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Renders `3/4` as `"3/4"` and integers without the denominator.
    pub fn format_rational(r: &Rational) -> String {
        if r.denom().is_one() {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    }

    pub fn parse_rational(s: &str) -> Result<Rational, Error> {
        let s = s.trim();
        let parse_int = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::Config(format!("not a rational: {s:?}")))
        };
        match s.split_once('/') {
            None => Ok(Rational::from_integer(parse_int(s)?)),
            Some((n, d)) => {
                let den = parse_int(d)?;
                if den.is_zero() {
                    return Err(Error::Config(format!("zero denominator: {s:?}")));
                }
                Ok(Rational::new(parse_int(n)?, den))
            }
        }
    }

    /// Nearest integer, halves rounded away from zero.
    pub fn round_half_away(r: &Rational) -> BigInt {
        r.round().to_integer()
    }

    pub fn abs(r: &Rational) -> Rational {
        r.abs()
    }
}

pub use rational::Rational;
