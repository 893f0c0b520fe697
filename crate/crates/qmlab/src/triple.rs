//! Leveled spaces and certified group actions on them.
//!
//! A *triple* is a space partitioned into fundamental domains indexed by the
//! integers, with a level function `h` that sends the base domain into
//! `[0, 1)` and shifts by `alpha` plus a bounded cocycle `b` (with `|b| <=
//! M0`) under the domain translation.  Points are represented lazily as
//! `(domain, index)`, so the domain translation is the index-preserving
//! shift and the partition axioms are checkable on finite truncations.
//!
//! A group action on the triple that commutes with the translation (exactly,
//! or up to a uniformly bounded level error `beta`) and displaces the base
//! domain into a window of width `C0` yields the quasimorphism
//! `mu(g) = h(g.a) - h(a)` with defect at most `4*M0 + 1 + C0 + 2*beta`.
//! `certify_pipeline` checks every hypothesis on finite samples, produces
//! the quasimorphism with that claimed defect, and re-validates the claim
//! with an independent exhaustive defect sweep.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmcore::{defect_lower_bound_report, Quasimorphism};
use crate::rational::{abs, format_rational, rat, Rational};
use crate::sweep;
use crate::words::{enumerate_words, Presentation, Word};

/// A lazily represented point: fundamental domain label plus an index
/// within the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub domain: i64,
    pub index: u64,
}

impl Point {
    pub fn new(domain: i64, index: u64) -> Self {
        Point { domain, index }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(domain {}, index {})", self.domain, self.index)
    }
}

type LevelFn = Arc<dyn Fn(Point) -> Rational + Send + Sync>;

/// A leveled space with integer-indexed fundamental domains.
#[derive(Clone)]
pub struct Triple {
    label: String,
    points_per_domain: u64,
    m0: Rational,
    h: LevelFn,
}

impl Triple {
    /// `points_per_domain` is the truncated population of each domain; the
    /// index-preserving shift realizes the domain translation.
    pub fn new(
        label: impl Into<String>,
        points_per_domain: u64,
        m0: Rational,
        h: LevelFn,
    ) -> Self {
        Triple {
            label: label.into(),
            points_per_domain: points_per_domain.max(1),
            m0,
            h,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn m0(&self) -> &Rational {
        &self.m0
    }

    pub fn points_per_domain(&self) -> u64 {
        self.points_per_domain
    }

    pub fn h(&self, p: Point) -> Rational {
        (self.h)(p)
    }

    /// The translation action of the domain-index group.
    pub fn translate(&self, alpha: i64, p: Point) -> Point {
        Point::new(p.domain + alpha, p.index)
    }

    pub fn domain_points(&self, domain: i64) -> impl Iterator<Item = Point> + '_ {
        (0..self.points_per_domain).map(move |index| Point { domain, index })
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Triple")
            .field("label", &self.label)
            .field("points_per_domain", &self.points_per_domain)
            .field("m0", &format_rational(&self.m0))
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomFailure {
    pub axiom: String,
    pub witness: String,
    pub detail: String,
}

/// Result of checking the triple axioms on a finite truncation.
#[derive(Debug, Clone, Serialize)]
pub struct TripleReport {
    pub pass: bool,
    pub range_ok: bool,
    pub cocycle_ok: bool,
    pub partition_ok: bool,
    /// Largest `|h(alpha.x) - h(x) - alpha|` seen over the truncation.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub max_abs_cocycle: Rational,
    pub checked_points: usize,
    pub truncation: i64,
    pub violations: Vec<AxiomFailure>,
}

impl TripleReport {
    pub fn first_violation(&self) -> Option<&AxiomFailure> {
        self.violations.first()
    }
}

/// Checks the partition, base-domain range, and cocycle-bound axioms over
/// domains `|alpha| <= truncation`.
pub fn verify_triple(t: &Triple, truncation: i64) -> TripleReport {
    let truncation = truncation.max(1);
    let mut violations = Vec::new();
    let mut range_ok = true;
    let mut cocycle_ok = true;
    let mut partition_ok = true;
    let mut max_b = rat(0);
    let mut checked = 0usize;

    for x in t.domain_points(0).collect::<Vec<_>>() {
        checked += 1;
        let hx = t.h(x);
        if hx < rat(0) || hx >= rat(1) {
            range_ok = false;
            violations.push(AxiomFailure {
                axiom: "base-domain-range".into(),
                witness: x.to_string(),
                detail: format!("h = {} escapes [0, 1)", format_rational(&hx)),
            });
        }
        for alpha in -truncation..=truncation {
            let shifted = t.translate(alpha, x);
            if shifted.index != x.index || shifted.domain != alpha
                || t.translate(-alpha, shifted) != x
            {
                partition_ok = false;
                violations.push(AxiomFailure {
                    axiom: "partition-bijection".into(),
                    witness: x.to_string(),
                    detail: format!("translation by {alpha} is not an index-preserving bijection"),
                });
                continue;
            }
            let b = t.h(shifted) - &hx - rat(alpha);
            let abs_b = abs(&b);
            if abs_b > max_b {
                max_b = abs_b.clone();
            }
            if abs_b > t.m0 {
                cocycle_ok = false;
                violations.push(AxiomFailure {
                    axiom: "cocycle-bound".into(),
                    witness: format!("{x}, alpha = {alpha}"),
                    detail: format!(
                        "|b| = {} exceeds M0 = {}",
                        format_rational(&abs_b),
                        format_rational(&t.m0)
                    ),
                });
            }
        }
    }

    TripleReport {
        pass: range_ok && cocycle_ok && partition_ok,
        range_ok,
        cocycle_ok,
        partition_ok,
        max_abs_cocycle: max_b,
        checked_points: checked,
        truncation,
        violations,
    }
}

/// How an action interacts with the domain translation.
#[derive(Debug, Clone)]
pub enum CommutationMode {
    Exact,
    /// Levels of `g.(alpha.x)` and `alpha.(g.x)` may differ by at most the
    /// claimed bound.
    Almost { claimed: Rational },
}

impl CommutationMode {
    pub fn name(&self) -> &'static str {
        match self {
            CommutationMode::Exact => "exact",
            CommutationMode::Almost { .. } => "almost",
        }
    }
}

pub(crate) type ActFn = Arc<dyn Fn(&Word, Point) -> Option<Point> + Send + Sync>;
pub(crate) type LevelAfterFn = Arc<dyn Fn(&Word, Point) -> Option<Rational> + Send + Sync>;

/// A group action on a triple.  `act` may be partial on a truncated space
/// (`None` signals the image left the truncation, never a wrong answer);
/// `h_after` computes the level of the image and is often total even when
/// `act` is not.
#[derive(Clone)]
pub struct TripleAction {
    label: String,
    group: Arc<Presentation>,
    commutation: CommutationMode,
    act: ActFn,
    h_after: Option<LevelAfterFn>,
    sample_points: Vec<Point>,
    configured_c0: Rational,
    basepoint: Point,
}

impl TripleAction {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        group: &Arc<Presentation>,
        commutation: CommutationMode,
        act: ActFn,
        h_after: Option<LevelAfterFn>,
        sample_points: Vec<Point>,
        configured_c0: Rational,
        basepoint: Point,
    ) -> Self {
        TripleAction {
            label: label.into(),
            group: Arc::clone(group),
            commutation,
            act,
            h_after,
            sample_points,
            configured_c0,
            basepoint,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn group(&self) -> &Arc<Presentation> {
        &self.group
    }

    pub fn commutation(&self) -> &CommutationMode {
        &self.commutation
    }

    pub fn configured_c0(&self) -> &Rational {
        &self.configured_c0
    }

    pub fn basepoint(&self) -> Point {
        self.basepoint
    }

    /// Deterministically ordered points on which the action is sampled.
    pub fn sample_points(&self) -> &[Point] {
        &self.sample_points
    }

    pub fn act(&self, g: &Word, x: Point) -> Result<Point> {
        (self.act)(g, x).ok_or(Error::OutOfTruncation { point: x.to_string() })
    }

    pub fn try_act(&self, g: &Word, x: Point) -> Option<Point> {
        (self.act)(g, x)
    }

    /// Level of `g.x`; falls back to `h(act(g, x))` when no dedicated
    /// evaluator exists.
    pub fn level_after(&self, t: &Triple, g: &Word, x: Point) -> Option<Rational> {
        match &self.h_after {
            Some(f) => f(g, x),
            None => (self.act)(g, x).map(|p| t.h(p)),
        }
    }
}

impl fmt::Debug for TripleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TripleAction")
            .field("label", &self.label)
            .field("commutation", &self.commutation.name())
            .field("samples", &self.sample_points.len())
            .finish()
    }
}

/// `mu(g) = h(g.a) - h(a)` at a chosen basepoint.
pub fn mu_from_action(t: &Triple, act: &TripleAction, g: &Word, basepoint: Point) -> Result<Rational> {
    let after = act
        .level_after(t, g, basepoint)
        .ok_or(Error::OutOfTruncation { point: basepoint.to_string() })?;
    Ok(after - t.h(basepoint))
}

/// An observed supremum with the sample that achieved it.
#[derive(Debug, Clone, Serialize)]
pub struct ObservedBound {
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub value: Rational,
    pub witness: String,
    pub samples: usize,
    pub skipped: usize,
}

impl ObservedBound {
    fn zero(detail: &str) -> Self {
        ObservedBound {
            value: rat(0),
            witness: detail.to_string(),
            samples: 0,
            skipped: 0,
        }
    }
}

/// Largest `|(h(g.x) - h(g.y)) - (h(x) - h(y))|` over all point pairs and
/// elements of `g_set`.  Pairs whose images leave the truncation are
/// skipped and counted.
pub fn check_root_condition(
    t: &Triple,
    act: &TripleAction,
    points: &[Point],
    g_set: &[Word],
) -> ObservedBound {
    let n = points.len();
    if n == 0 || g_set.is_empty() {
        return ObservedBound::zero("empty sample");
    }
    let levels: Vec<Rational> = points.iter().map(|&p| t.h(p)).collect();
    let mut best: Option<sweep::Observed<(usize, usize, usize)>> = None;
    let mut skipped = 0usize;
    for (gi, g) in g_set.iter().enumerate() {
        let after: Vec<Option<Rational>> =
            sweep::map_indexed(n, |i| act.level_after(t, g, points[i]));
        skipped += after.iter().filter(|v| v.is_none()).count();
        let g_best = sweep::max_observed(n * n, |idx| {
            let (i, j) = (idx / n, idx % n);
            if i >= j {
                return None;
            }
            let (hi, hj) = (after[i].as_ref()?, after[j].as_ref()?);
            let value = abs(&((hi - hj) - (&levels[i] - &levels[j])));
            Some(sweep::Observed { value, witness: (gi, i, j) })
        });
        if let Some(candidate) = g_best {
            best = Some(match best {
                None => candidate,
                Some(cur) => {
                    if candidate.value > cur.value
                        || (candidate.value == cur.value && candidate.witness < cur.witness)
                    {
                        candidate
                    } else {
                        cur
                    }
                }
            });
        }
    }
    match best {
        None => ObservedBound {
            value: rat(0),
            witness: "all pairs left the truncation".into(),
            samples: 0,
            skipped,
        },
        Some(found) => {
            let (gi, i, j) = found.witness;
            ObservedBound {
                value: found.value,
                witness: format!("g = {}, x = {}, y = {}", g_set[gi], points[i], points[j]),
                samples: g_set.len() * n * (n - 1) / 2,
                skipped,
            }
        }
    }
}

/// Certificate that `g` displaces the base domain into `[r, r + width]`.
#[derive(Debug, Clone, Serialize)]
pub struct DisplacementCertificate {
    pub element: String,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub r: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub width: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub bound: Rational,
    pub points_used: usize,
    pub skipped: usize,
}

/// Sweeps `h(g.x)` over the sampled base domain; fails when the observed
/// width exceeds the configured `C0`.
pub fn displacement_certificate(
    t: &Triple,
    act: &TripleAction,
    g: &Word,
    c0: &Rational,
) -> Result<DisplacementCertificate> {
    let mut min: Option<Rational> = None;
    let mut max: Option<Rational> = None;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for &x in act.sample_points().iter().filter(|p| p.domain == 0) {
        match act.level_after(t, g, x) {
            None => skipped += 1,
            Some(v) => {
                used += 1;
                if min.as_ref().is_none_or(|m| v < *m) {
                    min = Some(v.clone());
                }
                if max.as_ref().is_none_or(|m| v > *m) {
                    max = Some(v);
                }
            }
        }
    }
    let (min, max) = match (min, max) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::CertificateFailed {
                stage: "displacement".into(),
                detail: format!("no base-domain sample survives the action of {g}"),
            })
        }
    };
    let width = max - &min;
    if width > *c0 {
        return Err(Error::WidthExceeded {
            width: format_rational(&width),
            bound: format_rational(c0),
            element: g.to_string(),
        });
    }
    Ok(DisplacementCertificate {
        element: g.to_string(),
        r: min,
        width,
        bound: c0.clone(),
        points_used: used,
        skipped,
    })
}

/// Largest `|mu_a1(g) - mu_a2(g)|` over basepoint pairs and elements: the
/// quasimorphism is basepoint free up to the root-condition bound.
pub fn basepoint_independence(
    t: &Triple,
    act: &TripleAction,
    pairs: &[(Point, Point)],
    g_set: &[Word],
) -> ObservedBound {
    let mut best = rat(0);
    let mut witness = String::from("no sample");
    let mut samples = 0usize;
    let mut skipped = 0usize;
    for g in g_set {
        for &(a1, a2) in pairs {
            let (m1, m2) = (
                mu_from_action(t, act, g, a1),
                mu_from_action(t, act, g, a2),
            );
            match (m1, m2) {
                (Ok(m1), Ok(m2)) => {
                    samples += 1;
                    let d = abs(&(m1 - m2));
                    if d > best {
                        best = d;
                        witness = format!("g = {g}, a1 = {a1}, a2 = {a2}");
                    }
                }
                _ => skipped += 1,
            }
        }
    }
    ObservedBound { value: best, witness, samples, skipped }
}

/// Orbit growth report for `h(g^n . a)`.
#[derive(Debug, Clone, Serialize)]
pub struct UnboundednessReport {
    pub element: String,
    pub iterations: u64,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub threshold: Rational,
    pub crossed_threshold: bool,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub max_abs_level: Rational,
    /// `(h(g^n.a) - h(a)) / n` at the last computed iterate.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub final_slope: Rational,
    pub iterates_computed: u64,
}

/// Follows `h(g^n . a)` for `n = 1..=n_max` and reports whether the orbit
/// level crosses the threshold: a certified-unbounded orbit forces the
/// homogenization of `mu` to be nonzero.
pub fn unboundedness_check(
    t: &Triple,
    act: &TripleAction,
    g: &Word,
    basepoint: Point,
    n_max: u64,
    threshold: &Rational,
) -> UnboundednessReport {
    let h0 = t.h(basepoint);
    let mut power = Word::identity(act.group());
    let mut max_abs = rat(0);
    let mut crossed = false;
    let mut last_gap = rat(0);
    let mut computed = 0u64;
    for _ in 1..=n_max {
        power = power.multiply(g).expect("same presentation");
        match act.level_after(t, &power, basepoint) {
            None => break,
            Some(level) => {
                computed += 1;
                let a = abs(&level);
                if a > max_abs {
                    max_abs = a;
                }
                if abs(&level) >= *threshold {
                    crossed = true;
                }
                last_gap = level - &h0;
            }
        }
    }
    let slope = if computed > 0 {
        last_gap / rat(computed as i64)
    } else {
        rat(0)
    };
    UnboundednessReport {
        element: g.to_string(),
        iterations: n_max,
        threshold: threshold.clone(),
        crossed_threshold: crossed,
        max_abs_level: max_abs,
        final_slope: slope,
        iterates_computed: computed,
    }
}

/// Sample and budget knobs for `certify_pipeline`.
#[derive(Debug, Clone)]
pub struct PipelineBudgets {
    /// Domain range for the triple axioms and commutation sweeps.
    pub truncation: i64,
    /// Elements up to this length form the tested `g` sample.
    pub g_len: u32,
    /// Root-condition pairs draw from this prefix of the sample points
    /// (`None` = all of them).
    pub root_points: Option<usize>,
    /// Budget for the independent defect sweep on the produced
    /// quasimorphism.
    pub defect_len: u32,
    /// Extra small translations swept in the commutation stage.
    pub extra_alpha: i64,
}

impl Default for PipelineBudgets {
    fn default() -> Self {
        PipelineBudgets {
            truncation: 8,
            g_len: 2,
            root_points: None,
            defect_len: 4,
            extra_alpha: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckedBound {
    pub observed: ObservedBound,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub allowed: Rational,
    pub formula: String,
    pub pass: bool,
}

impl CheckedBound {
    fn new(observed: ObservedBound, allowed: Rational, formula: String) -> Self {
        let pass = observed.value <= allowed;
        CheckedBound { observed, allowed, formula, pass }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectValidation {
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub observed: Rational,
    pub witness: String,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub allowed: Rational,
    pub budget_length: u32,
    pub pass: bool,
}

/// Everything `certify_pipeline` measured, with the tested bounds rendered
/// next to the observed values.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub action: String,
    pub triple: String,
    pub commutation_mode: String,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub m0: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub c0_configured: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub c0_observed: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational_opt")]
    pub beta_claimed: Option<Rational>,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub beta_observed: Rational,
    pub max_abs_cocycle: String,
    /// Width of `h` on each tested domain, against `1 + 2*M0`.
    pub domain_window: CheckedBound,
    /// `|h(g.(alpha.x)) - h(g.x) - alpha|`, against `2*M0 + beta`.
    pub level_shift: CheckedBound,
    pub displacement: Vec<DisplacementCertificate>,
    /// Root-condition sweep against `4*M0 + 1 + C0 + 2*beta` (observed
    /// constants).
    pub root: CheckedBound,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub claimed_defect: Rational,
    pub claimed_defect_formula: String,
    pub defect_validation: DefectValidation,
    pub tested_elements: Vec<String>,
    pub pass: bool,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub qm: Quasimorphism,
    pub report: PipelineReport,
}

/// Runs the full certification chain and produces the quasimorphism
/// `g -> h(g.a) - h(a)` with claimed defect `4*M0 + 1 + C0 + 2*beta`.
/// Hypothesis failures abort with the failing certificate; consequence
/// checks are recorded in the report and folded into `pass`.
pub fn certify_pipeline(
    t: &Triple,
    act: &TripleAction,
    budgets: &PipelineBudgets,
) -> Result<PipelineOutcome> {
    let triple_report = verify_triple(t, budgets.truncation);
    if !triple_report.pass {
        let failure = triple_report.first_violation().expect("failed report has witness");
        return Err(Error::CertificateFailed {
            stage: format!("triple-axioms/{}", failure.axiom),
            detail: format!("{} ({})", failure.witness, failure.detail),
        });
    }

    let m0 = t.m0().clone();

    // Domain windows: the cocycle bound confines h on every domain to a
    // window of width 1 + 2*M0 around its label.
    let domain_window = {
        let allowed = rat(1) + rat(2) * &m0;
        let mut worst = ObservedBound::zero("all observed widths were zero");
        for gamma in -budgets.truncation..=budgets.truncation {
            let mut lo: Option<Rational> = None;
            let mut hi: Option<Rational> = None;
            for x in t.domain_points(gamma) {
                let v = t.h(x);
                if lo.as_ref().is_none_or(|m| v < *m) {
                    lo = Some(v.clone());
                }
                if hi.as_ref().is_none_or(|m| v > *m) {
                    hi = Some(v);
                }
            }
            if let (Some(lo), Some(hi)) = (lo, hi) {
                let width = hi - lo;
                worst.samples += 1;
                if width > worst.value {
                    worst.value = width;
                    worst.witness = format!("domain {gamma}");
                }
            }
        }
        let bound = CheckedBound::new(worst, allowed, "1 + 2*M0".into());
        if !bound.pass {
            return Err(Error::CertificateFailed {
                stage: "domain-window".into(),
                detail: format!(
                    "width {} exceeds 1 + 2*M0 = {} at {}",
                    format_rational(&bound.observed.value),
                    format_rational(&bound.allowed),
                    bound.observed.witness
                ),
            });
        }
        bound
    };

    let g_set: Vec<Word> = enumerate_words(act.group(), budgets.g_len)?
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect();
    if g_set.is_empty() {
        return Err(Error::Config("empty element sample for the pipeline".into()));
    }

    // Commutation stage.  The level-shift observable
    // |h(g.(alpha.x)) - h(g.x) - alpha| doubles as the almost-commutation
    // error beta; in exact mode the action must also commute pointwise.
    let (beta_claimed, beta_allowed) = match act.commutation() {
        CommutationMode::Exact => (None, rat(0)),
        CommutationMode::Almost { claimed } => (Some(claimed.clone()), claimed.clone()),
    };
    let mut level_shift = ObservedBound::zero("all observed shifts were zero");
    {
        let prefix = act.sample_points().len().min(4096);
        let mut tuples: Vec<(Point, i64)> = Vec::new();
        // Every sample point paired with the translation back to the base
        // domain: exactly the links the root-condition chain factors
        // through.
        for &x in act.sample_points() {
            if x.domain != 0 {
                tuples.push((x, -x.domain));
            }
        }
        for &x in &act.sample_points()[..prefix] {
            for alpha in -budgets.extra_alpha..=budgets.extra_alpha {
                if alpha != 0 {
                    tuples.push((x, alpha));
                }
            }
        }
        for g in &g_set {
            let shifts = sweep::map_indexed(tuples.len(), |i| {
                let (x, alpha) = tuples[i];
                let before = act.level_after(t, g, x)?;
                let after = act.level_after(t, g, t.translate(alpha, x))?;
                Some(abs(&(after - before - rat(alpha))))
            });
            for (i, s) in shifts.into_iter().enumerate() {
                match s {
                    None => level_shift.skipped += 1,
                    Some(v) => {
                        level_shift.samples += 1;
                        if v > level_shift.value {
                            let (x, alpha) = tuples[i];
                            level_shift.value = v;
                            level_shift.witness = format!("g = {g}, x = {x}, alpha = {alpha}");
                        }
                    }
                }
            }
            if matches!(act.commutation(), CommutationMode::Exact) {
                for &(x, alpha) in &tuples {
                    let lhs = act.try_act(g, t.translate(alpha, x));
                    let rhs = act.try_act(g, x).map(|p| t.translate(alpha, p));
                    if let (Some(lhs), Some(rhs)) = (lhs, rhs) {
                        if lhs != rhs {
                            return Err(Error::CertificateFailed {
                                stage: "commutation".into(),
                                detail: format!(
                                    "g = {g} does not commute with translation at {x}, alpha = {alpha}"
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    let beta_observed = level_shift.value.clone();
    if let Some(claimed) = &beta_claimed {
        if beta_observed > *claimed {
            return Err(Error::CertificateFailed {
                stage: "commutation".into(),
                detail: format!(
                    "observed level shift {} exceeds the claimed bound {} at {}",
                    format_rational(&beta_observed),
                    format_rational(claimed),
                    level_shift.witness
                ),
            });
        }
    }
    let level_shift = CheckedBound::new(
        level_shift,
        rat(2) * &m0 + &beta_allowed,
        "2*M0 + beta".into(),
    );
    if !level_shift.pass {
        return Err(Error::CertificateFailed {
            stage: "commutation".into(),
            detail: format!(
                "level shift {} exceeds 2*M0 + beta = {} at {}",
                format_rational(&level_shift.observed.value),
                format_rational(&level_shift.allowed),
                level_shift.observed.witness
            ),
        });
    }

    // Displacement stage: every tested element must confine the base
    // domain's image to a window of width <= configured C0.
    let c0_cfg = act.configured_c0().clone();
    let mut displacement = Vec::with_capacity(g_set.len());
    let mut c0_observed = rat(0);
    for g in &g_set {
        let cert = displacement_certificate(t, act, g, &c0_cfg)?;
        if cert.width > c0_observed {
            c0_observed = cert.width.clone();
        }
        displacement.push(cert);
    }

    // Root-condition sweep against the bound assembled from the observed
    // constants.
    let root_sample: Vec<Point> = match budgets.root_points {
        None => act.sample_points().to_vec(),
        Some(k) => act.sample_points().iter().take(k).copied().collect(),
    };
    let observed_root = check_root_condition(t, act, &root_sample, &g_set);
    let root_allowed = rat(4) * &m0 + rat(1) + &c0_observed + rat(2) * &beta_observed;
    let root = CheckedBound::new(
        observed_root,
        root_allowed,
        format!(
            "4*M0 + 1 + C0 + 2*beta = {}",
            format_rational(&(rat(4) * &m0 + rat(1) + &c0_observed + rat(2) * &beta_observed))
        ),
    );

    // The produced quasimorphism and its claimed (configured) defect bound.
    let claimed_defect = rat(4) * &m0 + rat(1) + &c0_cfg + rat(2) * &beta_observed;
    let claimed_defect_formula = format!(
        "4*M0 + 1 + C0 + 2*beta = {}",
        format_rational(&claimed_defect)
    );
    let basepoint = act.basepoint();
    let qm = {
        let label = format!("mu[{}]", act.label());
        let group = Arc::clone(act.group());
        let t = t.clone();
        let act = act.clone();
        let h0 = t.h(basepoint);
        Quasimorphism::new(
            label,
            &group,
            Arc::new(move |g: &Word| {
                act.level_after(&t, g, basepoint)
                    .map(|v| v - &h0)
                    .expect("basepoint image must stay computable")
            }),
            Some(claimed_defect.clone()),
        )
    };

    let defect_report = defect_lower_bound_report(&qm, budgets.defect_len)?;
    let defect_validation = DefectValidation {
        observed: defect_report.observed.clone(),
        witness: defect_report
            .witness
            .map(|(x, y)| format!("x = {x}, y = {y}"))
            .unwrap_or_default(),
        allowed: claimed_defect.clone(),
        budget_length: budgets.defect_len,
        pass: defect_report.observed <= claimed_defect,
    };

    let pass = root.pass && defect_validation.pass && domain_window.pass && level_shift.pass;
    let report = PipelineReport {
        action: act.label().to_string(),
        triple: t.label().to_string(),
        commutation_mode: act.commutation().name().to_string(),
        m0,
        c0_configured: c0_cfg,
        c0_observed,
        beta_claimed,
        beta_observed,
        max_abs_cocycle: format_rational(&triple_report.max_abs_cocycle),
        domain_window,
        level_shift,
        displacement,
        root,
        claimed_defect,
        claimed_defect_formula,
        defect_validation,
        tested_elements: g_set.iter().map(|g| g.to_string()).collect(),
        pass,
    };
    Ok(PipelineOutcome { qm, report })
}

/// The integers acting on themselves: one point per domain, `h(n) = n`,
/// translation by the exponent sum.  `M0 = 0`, `C0 = 0`, exact commutation.
pub fn trivial_z_action(truncation: i64) -> Result<(Triple, TripleAction)> {
    let pres = Presentation::free(1)?;
    let triple = Triple::new("integer-line", 1, rat(0), Arc::new(|p: Point| rat(p.domain)));
    let act: ActFn = Arc::new(|g: &Word, x: Point| {
        let shift: i64 = g.letters().iter().map(|l| l.exp).sum();
        Some(Point::new(x.domain + shift, x.index))
    });
    let sample_points: Vec<Point> = (-truncation..=truncation).map(|d| Point::new(d, 0)).collect();
    let action = TripleAction::new(
        "translation-on-integers",
        &pres,
        CommutationMode::Exact,
        act,
        None,
        sample_points,
        rat(0),
        Point::new(0, 0),
    );
    Ok((triple, action))
}

/// Deliberately broken inputs for negative tests.
pub mod controls {
    use super::*;

    /// The integer line with `h(n) = n^2`: the cocycle is unbounded, the
    /// root condition degrades with the budget, and no translation window
    /// exists.
    pub fn squared_level_z(truncation: i64) -> Result<(Triple, TripleAction)> {
        let (_, action) = trivial_z_action(truncation)?;
        let triple = Triple::new(
            "integer-line-squared",
            1,
            rat(0),
            Arc::new(|p: Point| rat(p.domain) * rat(p.domain)),
        );
        Ok((triple, action))
    }

    /// A base domain whose level reaches 1, violating the range axiom.
    pub fn range_violating_triple() -> Triple {
        Triple::new(
            "unit-level-at-base",
            1,
            rat(0),
            Arc::new(|p: Point| rat(p.domain) + rat(1)),
        )
    }
}
