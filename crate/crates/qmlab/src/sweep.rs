//! Max-reduction sweeps behind the exhaustive searches.
//!
//! Every verdict in this crate reduces to "take the maximum of an observable
//! over a finite sample, remember where it happened".  The reduction is
//! associative and commutative with a deterministic tie-break (smallest
//! witness wins), so the parallel and sequential paths return identical
//! results for identical inputs.

use crate::rational::Rational;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// An observed extremum together with the index tuple that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observed<W> {
    pub value: Rational,
    pub witness: W,
}

fn pick<W: Ord>(a: Observed<W>, b: Observed<W>) -> Observed<W> {
    match a.value.cmp(&b.value) {
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Equal => {
            if b.witness < a.witness {
                b
            } else {
                a
            }
        }
    }
}

pub fn max_observed_seq<W, F>(n: usize, f: F) -> Option<Observed<W>>
where
    W: Ord + Send,
    F: Fn(usize) -> Option<Observed<W>> + Sync + Send,
{
    (0..n).filter_map(f).reduce(pick)
}

#[cfg(feature = "parallel")]
pub fn max_observed_par<W, F>(n: usize, f: F) -> Option<Observed<W>>
where
    W: Ord + Send,
    F: Fn(usize) -> Option<Observed<W>> + Sync + Send,
{
    (0..n).into_par_iter().filter_map(f).reduce_with(pick)
}

/// Maximum of `f` over `0..n`, parallel when the feature is enabled.
pub fn max_observed<W, F>(n: usize, f: F) -> Option<Observed<W>>
where
    W: Ord + Send,
    F: Fn(usize) -> Option<Observed<W>> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        max_observed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        max_observed_seq(n, f)
    }
}

pub fn map_indexed_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indexed_par<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// `(0..n).map(f)` collected in index order, parallel when enabled.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn max_is_deterministic_on_ties() {
        // Two indices share the max value; the smaller witness must win.
        let f = |i: usize| {
            Some(Observed {
                value: rat((i as i64 % 3).min(1)),
                witness: i,
            })
        };
        let got = max_observed(10, f).unwrap();
        assert_eq!(got.value, rat(1));
        assert_eq!(got.witness, 1);
        let seq = max_observed_seq(10, f).unwrap();
        assert_eq!(seq, got);
    }

    #[test]
    fn empty_sweep_is_none() {
        assert!(max_observed::<usize, _>(0, |_| None).is_none());
    }
}
