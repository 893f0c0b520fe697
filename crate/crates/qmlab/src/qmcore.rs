//! Quasimorphism evaluators, defect search, homogenization.
//!
//! A map `mu: G -> Q` is a quasimorphism when `|mu(xy) - mu(x) - mu(y)|` is
//! uniformly bounded; the best bound is the defect.  Exhaustive search over
//! enumerated pairs gives a certified lower bound on the defect, and the
//! homogenization `mu^h(g) = lim mu(g^n)/n` is approximated on the doubling
//! subsequence `mu(g^(2^k))/2^k`, which converges with explicit error
//! `defect/2^k`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{format_rational, rat, Rational};
use crate::sweep;
use crate::words::{enumerate_words, Presentation, Word};

/// Cap on doublings; `2^14` already multiplies word lengths by 16384.
pub const DEFAULT_DOUBLINGS: u32 = 14;
/// Exhaustive defect searches certify patterns up to this length by default.
pub const DEFAULT_DEFECT_SEARCH_LENGTH: u32 = 6;

type Evaluator = Arc<dyn Fn(&Word) -> Rational + Send + Sync>;

/// A quasimorphism given by an exact evaluator, with an optional certified
/// defect bound.  The bound is never assumed: sweeps re-check it.
#[derive(Clone)]
pub struct Quasimorphism {
    label: String,
    pres: Arc<Presentation>,
    eval: Evaluator,
    claimed_defect: Option<Rational>,
}

impl Quasimorphism {
    pub fn new(
        label: impl Into<String>,
        pres: &Arc<Presentation>,
        eval: Evaluator,
        claimed_defect: Option<Rational>,
    ) -> Self {
        Quasimorphism {
            label: label.into(),
            pres: Arc::clone(pres),
            eval,
            claimed_defect,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn eval(&self, w: &Word) -> Rational {
        (self.eval)(w)
    }

    pub fn claimed_defect(&self) -> Option<&Rational> {
        self.claimed_defect.as_ref()
    }

    pub fn with_claimed_defect(mut self, bound: Rational) -> Self {
        self.claimed_defect = Some(bound);
        self
    }

    /// Same evaluator scaled by a constant; the defect scales with it.
    pub fn scaled(&self, factor: &Rational) -> Self {
        let eval = Arc::clone(&self.eval);
        let f = factor.clone();
        Quasimorphism {
            label: format!("{}*{}", format_rational(factor), self.label),
            pres: Arc::clone(&self.pres),
            eval: Arc::new(move |w| (eval)(w) * &f),
            claimed_defect: self
                .claimed_defect
                .as_ref()
                .map(|d| d * crate::rational::abs(factor)),
        }
    }
}

impl std::fmt::Debug for Quasimorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Quasimorphism")
            .field("label", &self.label)
            .field(
                "claimed_defect",
                &self.claimed_defect.as_ref().map(format_rational),
            )
            .finish()
    }
}

fn occurrences(text: &[(usize, i64)], pattern: &[(usize, i64)]) -> i64 {
    if pattern.is_empty() || text.len() < pattern.len() {
        return 0;
    }
    let mut count = 0;
    for window in text.windows(pattern.len()) {
        if window == pattern {
            count += 1;
        }
    }
    count
}

/// Signed pattern count on normal forms: occurrences of `pattern` minus
/// occurrences of `pattern^-1`, both read as letter strings.
pub fn pattern_count(pattern: &Word, w: &Word) -> i64 {
    let text = w.single_letters();
    occurrences(&text, &pattern.single_letters())
        - occurrences(&text, &pattern.inverse().single_letters())
}

/// The counting quasimorphism of a pattern, with a certified defect bound
/// obtained by exhaustive pair search up to `search_length` and doubled as a
/// safety factor.
pub fn counting_qm_with_budget(
    pattern: &Word,
    search_length: u32,
) -> Result<Quasimorphism> {
    if pattern.is_identity() {
        return Err(Error::EmptyPattern);
    }
    let pres = Arc::clone(pattern.presentation());
    let pat = pattern.clone();
    let eval: Evaluator = Arc::new(move |w| rat(pattern_count(&pat, w)));
    let mut qm = Quasimorphism::new(
        format!("count[{pattern}]"),
        &pres,
        eval,
        None,
    );
    let observed = defect_lower_bound(&qm, search_length)?;
    qm.claimed_defect = Some(observed * rat(2));
    Ok(qm)
}

pub fn counting_qm(pattern: &Word) -> Result<Quasimorphism> {
    counting_qm_with_budget(pattern, DEFAULT_DEFECT_SEARCH_LENGTH)
}

/// The homomorphism sending each free generator to a chosen weight; its
/// defect is exactly zero.
pub fn exponent_sum_qm(pres: &Arc<Presentation>, weights: Vec<Rational>) -> Result<Quasimorphism> {
    if !pres.is_free() {
        return Err(Error::WeightsNeedFreeGroup);
    }
    if weights.len() != pres.generator_count() {
        return Err(Error::Config(format!(
            "expected {} weights, got {}",
            pres.generator_count(),
            weights.len()
        )));
    }
    let label = format!(
        "hom[{}]",
        weights
            .iter()
            .zip(pres.generator_names())
            .map(|(w, n)| format!("{n}:{}", format_rational(w)))
            .collect::<Vec<_>>()
            .join(",")
    );
    let eval: Evaluator = Arc::new(move |w: &Word| {
        let mut acc = rat(0);
        for l in w.letters() {
            acc += &weights[l.gen] * rat(l.exp);
        }
        acc
    });
    Ok(Quasimorphism::new(label, pres, eval, Some(rat(0))))
}

/// Witness data for an observed defect value.
#[derive(Debug, Clone, Serialize)]
pub struct DefectWitness {
    pub x: String,
    pub y: String,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct DefectReport {
    pub observed: Rational,
    pub witness: Option<(Word, Word)>,
    pub pairs_checked: usize,
}

/// Largest `|mu(xy) - mu(x) - mu(y)|` over all ordered pairs of enumerated
/// words up to `max_length`.  A certified lower bound on the true defect.
pub fn defect_lower_bound(mu: &Quasimorphism, max_length: u32) -> Result<Rational> {
    Ok(defect_lower_bound_report(mu, max_length)?.observed)
}

pub fn defect_lower_bound_report(mu: &Quasimorphism, max_length: u32) -> Result<DefectReport> {
    let words = enumerate_words(mu.presentation(), max_length)?;
    let n = words.len();
    let values = sweep::map_indexed(n, |i| mu.eval(&words[i]));
    let best = sweep::max_observed(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let xy = words[i].multiply(&words[j]).expect("same presentation");
        let gap = mu.eval(&xy) - &values[i] - &values[j];
        Some(sweep::Observed {
            value: crate::rational::abs(&gap),
            witness: (i, j),
        })
    });
    let best = best.expect("enumeration contains at least the identity");
    Ok(DefectReport {
        observed: best.value,
        witness: Some((words[best.witness.0].clone(), words[best.witness.1].clone())),
        pairs_checked: n * n,
    })
}

/// Checks a claimed defect bound against an exhaustive sweep; `None` means
/// no violation was found within the budget.
pub fn claimed_defect_violation(
    mu: &Quasimorphism,
    max_length: u32,
) -> Result<Option<DefectWitness>> {
    let claimed = mu
        .claimed_defect()
        .ok_or(Error::MissingDefectBound)?
        .clone();
    let report = defect_lower_bound_report(mu, max_length)?;
    if report.observed > claimed {
        let (x, y) = report.witness.expect("nonempty sweep");
        return Ok(Some(DefectWitness {
            x: x.to_string(),
            y: y.to_string(),
            value: format_rational(&report.observed),
        }));
    }
    Ok(None)
}

/// Outcome of a doubling-sequence homogenization.
#[derive(Debug, Clone, Serialize)]
pub struct HomogenizationResult {
    /// `mu(g^(2^k))/2^k` at the final doubling.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub value: Rational,
    /// `defect_bound / 2^k`; the limit lies within this of `value`.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub error_bound: Rational,
    pub iterations: u32,
}

/// Estimates `mu^h(g) = lim mu(g^n)/n` along powers `2^k`, `k <= doublings`.
pub fn homogenize(
    mu: &Quasimorphism,
    g: &Word,
    doublings: u32,
    defect_bound: &Rational,
) -> Result<HomogenizationResult> {
    Ok(homogenize_with_trace(mu, g, doublings, defect_bound)?.0)
}

/// Same, returning the whole trace `mu(g^(2^k))/2^k` for `k = 0..=doublings`.
pub fn homogenize_with_trace(
    mu: &Quasimorphism,
    g: &Word,
    doublings: u32,
    defect_bound: &Rational,
) -> Result<(HomogenizationResult, Vec<Rational>)> {
    if doublings == 0 {
        return Err(Error::ZeroDoublings);
    }
    let mut trace = Vec::with_capacity(doublings as usize + 1);
    let mut power = g.clone();
    let mut denom = rat(1);
    trace.push(mu.eval(&power));
    for _ in 0..doublings {
        power = power.multiply(&power).expect("same presentation");
        denom *= rat(2);
        trace.push(mu.eval(&power) / &denom);
    }
    let value = trace.last().expect("nonempty trace").clone();
    Ok((
        HomogenizationResult {
            value,
            error_bound: defect_bound / denom,
            iterations: doublings,
        },
        trace,
    ))
}

/// Convenience: homogenize using the quasimorphism's own certified bound.
pub fn homogenize_claimed(
    mu: &Quasimorphism,
    g: &Word,
    doublings: u32,
) -> Result<HomogenizationResult> {
    let bound = mu.claimed_defect().ok_or(Error::MissingDefectBound)?.clone();
    homogenize(mu, g, doublings, &bound)
}

/// A checked inequality `observed <= allowed`, with rendered values.
#[derive(Debug, Clone, Serialize)]
pub struct BoundVerdict {
    pub pass: bool,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub observed: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub allowed: Rational,
    pub detail: String,
}

impl BoundVerdict {
    pub fn check(observed: Rational, allowed: Rational, detail: impl Into<String>) -> Self {
        BoundVerdict {
            pass: observed <= allowed,
            observed,
            allowed,
            detail: detail.into(),
        }
    }
}

/// Compares the homogenization estimates of `g^k` and `k*g` within the sum
/// of their error bounds plus `tolerance`.
pub fn check_homogeneous(
    mu: &Quasimorphism,
    g: &Word,
    k: i64,
    doublings: u32,
    defect_bound: &Rational,
    tolerance: &Rational,
) -> Result<BoundVerdict> {
    let base = homogenize(mu, g, doublings, defect_bound)?;
    let powered = homogenize(mu, &g.pow(k), doublings, defect_bound)?;
    let difference = crate::rational::abs(&(powered.value.clone() - rat(k) * &base.value));
    let allowed = rat(k.abs()) * &base.error_bound + &powered.error_bound + tolerance;
    Ok(BoundVerdict::check(
        difference,
        allowed,
        format!("|mu^h({g}^{k}) - {k}*mu^h({g})| within combined doubling error"),
    ))
}

/// Compares the homogenization estimates of `t g t^-1` and `g` within the
/// sum of their error bounds plus `tolerance`: homogeneous quasimorphisms
/// are conjugation invariant.
pub fn check_conjugation_invariance(
    mu: &Quasimorphism,
    g: &Word,
    t: &Word,
    doublings: u32,
    defect_bound: &Rational,
    tolerance: &Rational,
) -> Result<BoundVerdict> {
    let base = homogenize(mu, g, doublings, defect_bound)?;
    let conj = homogenize(mu, &g.conjugate_by(t)?, doublings, defect_bound)?;
    let difference = crate::rational::abs(&(conj.value.clone() - &base.value));
    let allowed = base.error_bound.clone() + &conj.error_bound + tolerance;
    Ok(BoundVerdict::check(
        difference,
        allowed,
        format!("|mu^h({t} {g} {t}^-1) - mu^h({g})| within combined doubling error"),
    ))
}
