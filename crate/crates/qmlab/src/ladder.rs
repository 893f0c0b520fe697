//! Ladder spaces: quasi-isometric pictures of a group drawn by an
//! integer-valued quasimorphism.
//!
//! A ladder is the product of a horizontal rail `{1 - 2^-(k+1)}` with the
//! integers; its metric adds the (sub-unit) rail gap to the level gap, so
//! projection to the level is 1-Lipschitz.  An integerized quasimorphism
//! `mu0 = round(mu / scale)` places each group element on the rung given by
//! its value, slots along a rung recording arrival order.  Left translation
//! then acts on the occupied points, distorting the metric by at most a
//! recorded bound, and the bridge back to a leveled-space action lets the
//! whole certification pipeline run on the embedded picture.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmcore::{homogenize_claimed, Quasimorphism};
use crate::rational::{abs, format_rational, rat, round_half_away, Rational};
use crate::triple::{CommutationMode, Point, Triple, TripleAction};
use crate::words::{enumerate_words, Word};

pub const DEFAULT_EQUIVALENCE_ITERATIONS: u64 = 200;
pub const DEFAULT_EQUIVALENCE_THRESHOLD: i64 = 10;

/// A rung-and-slot position on the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LadderPoint {
    pub slot: u64,
    pub level: i64,
}

impl LadderPoint {
    pub fn new(slot: u64, level: i64) -> Self {
        LadderPoint { slot, level }
    }
}

impl fmt::Display for LadderPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(slot {}, level {})", self.slot, self.level)
    }
}

/// Horizontal coordinate of a slot: `1 - 2^-(slot+1)`, strictly increasing
/// and bounded by 1, so any two slots are less than a unit apart.
pub fn slot_coordinate(slot: u64) -> Rational {
    let denom = BigInt::from(1) << (slot + 1);
    rat(1) - Rational::new(BigInt::from(1), denom)
}

/// Ladder metric: rail gap plus level gap.
pub fn distance(p: LadderPoint, q: LadderPoint) -> Rational {
    let rail = abs(&(slot_coordinate(p.slot) - slot_coordinate(q.slot)));
    let level = rat((p.level - q.level).abs());
    rail + level
}

/// `mu0 = round(mu / scale)` where `scale` estimates the homogenized value
/// of `mu` at a chosen reference element.  Integer-valued, and exactly `n`
/// on the n-th power of the reference element for the tested range.
#[derive(Clone)]
pub struct IntegerizedQm {
    base: Quasimorphism,
    g0: Word,
    scale: Rational,
    scale_error: Rational,
    doublings: u32,
}

impl fmt::Debug for IntegerizedQm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegerizedQm")
            .field("base", &self.base.label())
            .field("g0", &self.g0.to_string())
            .field("scale", &format_rational(&self.scale))
            .finish()
    }
}

/// What `integerize` checked, with the witnesses it used.
#[derive(Debug, Clone, Serialize)]
pub struct IntegerizationReport {
    pub base: String,
    pub reference: String,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub scale: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub scale_error: Rational,
    pub doublings: u32,
    /// `mu0(g0^n) = n` held exactly for `n = 1..=powers_tested`.
    pub powers_tested: u64,
    pub identity_is_zero: bool,
}

impl IntegerizedQm {
    pub fn base(&self) -> &Quasimorphism {
        &self.base
    }

    pub fn reference(&self) -> &Word {
        &self.g0
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn scale_error(&self) -> &Rational {
        &self.scale_error
    }

    pub fn doublings(&self) -> u32 {
        self.doublings
    }

    /// The integer rung of `w`.
    pub fn level_of(&self, w: &Word) -> Result<i64> {
        if w.is_identity() {
            return Ok(0);
        }
        let rounded = round_half_away(&(self.base.eval(w) / &self.scale));
        rounded.to_i64().ok_or_else(|| Error::IntegerizationFailed {
            property: "level-range".into(),
            witness: w.to_string(),
            detail: format!("rounded value {rounded} does not fit a machine level"),
        })
    }

    /// Same value as a rational, for plugging into bound arithmetic.
    pub fn mu0(&self, w: &Word) -> Result<Rational> {
        Ok(rat(self.level_of(w)?))
    }

    /// `mu0` packaged as a quasimorphism with the rounding-aware defect
    /// bound `D/|scale| + 3/2`.
    pub fn as_quasimorphism(&self) -> Quasimorphism {
        let claimed = self
            .base
            .claimed_defect()
            .map(|d| d / abs(&self.scale) + crate::rational::ratio(3, 2));
        let this = self.clone();
        Quasimorphism::new(
            format!("round[{} / {}]", self.base.label(), format_rational(&self.scale)),
            self.base.presentation(),
            Arc::new(move |w: &Word| this.mu0(w).expect("level fits")),
            claimed,
        )
    }
}

/// Rescales `mu` by the homogenized value at `g0` and rounds, validating
/// that the result is integer-valued, vanishes at the identity, and counts
/// powers of `g0` exactly.
pub fn integerize(
    mu: &Quasimorphism,
    g0: &Word,
    doublings: u32,
    powers_to_test: u64,
) -> Result<(IntegerizedQm, IntegerizationReport)> {
    if g0.is_identity() {
        return Err(Error::IntegerizationFailed {
            property: "reference-element".into(),
            witness: g0.to_string(),
            detail: "the reference element must not be the identity".into(),
        });
    }
    let hom = homogenize_claimed(mu, g0, doublings)?;
    if abs(&hom.value) <= hom.error_bound {
        return Err(Error::ZeroWitness {
            estimate: format_rational(&hom.value),
            error_bound: format_rational(&hom.error_bound),
        });
    }
    let iq = IntegerizedQm {
        base: mu.clone(),
        g0: g0.clone(),
        scale: hom.value.clone(),
        scale_error: hom.error_bound.clone(),
        doublings,
    };
    let mut power = Word::identity(mu.presentation());
    for n in 1..=powers_to_test {
        power = power.multiply(g0)?;
        let level = iq.level_of(&power)?;
        if level != n as i64 {
            return Err(Error::IntegerizationFailed {
                property: "reference-powers".into(),
                witness: power.to_string(),
                detail: format!("mu0(g0^{n}) = {level}, expected {n}"),
            });
        }
    }
    let report = IntegerizationReport {
        base: mu.label().to_string(),
        reference: g0.to_string(),
        scale: iq.scale.clone(),
        scale_error: iq.scale_error.clone(),
        doublings,
        powers_tested: powers_to_test,
        identity_is_zero: iq.level_of(&Word::identity(mu.presentation()))? == 0,
    };
    Ok((iq, report))
}

/// A finite picture of the group on the ladder: every word up to the
/// length budget is placed on the rung `mu0(w)`, slots in enumeration
/// order.
pub struct LadderEmbedding {
    iq: IntegerizedQm,
    max_length: u32,
    words: Vec<Word>,
    levels_by_index: Vec<i64>,
    assign: HashMap<Word, LadderPoint>,
    reverse: HashMap<LadderPoint, usize>,
    rungs: BTreeMap<i64, Vec<usize>>,
    b_bound: Rational,
    b_witness: String,
    b_g_len: u32,
}

impl fmt::Debug for LadderEmbedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LadderEmbedding")
            .field("base", &self.iq.base.label())
            .field("max_length", &self.max_length)
            .field("words", &self.words.len())
            .field("b_bound", &format_rational(&self.b_bound))
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingSummary {
    pub base: String,
    pub reference: String,
    pub max_length: u32,
    pub words_placed: usize,
    pub lowest_level: i64,
    pub highest_level: i64,
    pub empty_levels: Vec<i64>,
    pub widest_rung: usize,
    /// Recorded distortion bound `B`: translation moves level gaps by at
    /// most this much over every placed pair.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub b_bound: Rational,
    pub b_witness: String,
    pub b_element_length: u32,
}

/// Places every word up to `max_length` and records the distortion bound
/// `B` by sweeping all placed pairs against all elements up to `b_g_len`.
pub fn build_embedding(iq: &IntegerizedQm, max_length: u32, b_g_len: u32) -> Result<LadderEmbedding> {
    let pres = iq.base.presentation();
    let words = enumerate_words(pres, max_length)?;
    let n = words.len();
    let mut levels_by_index = Vec::with_capacity(n);
    let mut assign = HashMap::with_capacity(n);
    let mut reverse = HashMap::with_capacity(n);
    let mut rungs: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        let level = iq.level_of(w)?;
        let rung = rungs.entry(level).or_default();
        let point = LadderPoint::new(rung.len() as u64, level);
        rung.push(i);
        levels_by_index.push(level);
        assign.insert(w.clone(), point);
        reverse.insert(point, i);
    }

    // Distortion sweep: how far left translation moves any placed level
    // gap.  Covers every pair, so later certificates that draw from placed
    // points and the same element budget can cite B as a guarantee.
    let g_set: Vec<Word> = enumerate_words(pres, b_g_len)?
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect();
    let mut b_value: i64 = 0;
    let mut b_witness = String::from("no pairs swept");
    for g in &g_set {
        let moved: Vec<i64> = {
            let results: Result<Vec<i64>> = words
                .iter()
                .map(|w| iq.level_of(&g.multiply(w)?))
                .collect();
            results?
        };
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ((moved[i] - moved[j]) - (levels_by_index[i] - levels_by_index[j])).abs();
                if d > b_value {
                    b_value = d;
                    b_witness = format!("g = {g}, x = {}, y = {}", words[i], words[j]);
                }
            }
        }
    }
    let b_bound = rat(b_value);

    Ok(LadderEmbedding {
        iq: iq.clone(),
        max_length,
        words,
        levels_by_index,
        assign,
        reverse,
        rungs,
        b_bound,
        b_witness,
        b_g_len,
    })
}

impl LadderEmbedding {
    pub fn integerized(&self) -> &IntegerizedQm {
        &self.iq
    }

    pub fn max_length(&self) -> u32 {
        self.max_length
    }

    /// Placed words in enumeration order.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn point_of(&self, w: &Word) -> Option<LadderPoint> {
        self.assign.get(w).copied()
    }

    pub fn word_at(&self, p: LadderPoint) -> Option<&Word> {
        self.reverse.get(&p).map(|&i| &self.words[i])
    }

    pub fn rung_population(&self, level: i64) -> usize {
        self.rungs.get(&level).map_or(0, Vec::len)
    }

    /// Recorded distortion bound `B` and the pair that achieved it.
    pub fn b_bound(&self) -> &Rational {
        &self.b_bound
    }

    pub fn b_witness(&self) -> &str {
        &self.b_witness
    }

    pub fn b_element_length(&self) -> u32 {
        self.b_g_len
    }

    pub fn summary(&self) -> EmbeddingSummary {
        let lowest = self.rungs.keys().next().copied().unwrap_or(0);
        let highest = self.rungs.keys().next_back().copied().unwrap_or(0);
        let empty_levels = (lowest..=highest)
            .filter(|l| !self.rungs.contains_key(l))
            .collect();
        EmbeddingSummary {
            base: self.iq.base.label().to_string(),
            reference: self.iq.g0.to_string(),
            max_length: self.max_length,
            words_placed: self.words.len(),
            lowest_level: lowest,
            highest_level: highest,
            empty_levels,
            widest_rung: self.rungs.values().map(Vec::len).max().unwrap_or(0),
            b_bound: self.b_bound.clone(),
            b_witness: self.b_witness.clone(),
            b_element_length: self.b_g_len,
        }
    }

    /// Left translation on placed points.  `None` means the image fell
    /// outside the placed picture, never a wrong position.
    pub fn induced_action(&self, g: &Word, p: LadderPoint) -> Result<Option<LadderPoint>> {
        let w = match self.word_at(p) {
            None => return Err(Error::UnassignedWord { word: p.to_string() }),
            Some(w) => w,
        };
        let moved = g.multiply(w)?;
        Ok(self.point_of(&moved))
    }

    /// Level of the translated point; total even when the image is not
    /// placed, because the rung is just `mu0(g w)`.
    pub fn level_after(&self, g: &Word, p: LadderPoint) -> Result<i64> {
        let w = self
            .word_at(p)
            .ok_or_else(|| Error::UnassignedWord { word: p.to_string() })?;
        self.iq.level_of(&g.multiply(w)?)
    }
}

/// Distance distortion of left translation on the embedded picture.
#[derive(Debug, Clone, Serialize)]
pub struct QiCertificate {
    pub elements: Vec<String>,
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    /// Largest `|d(g.x, g.y) - d(x, y)|` seen.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub max_distance_distortion: Rational,
    /// `B + 2`: level distortion plus one sub-unit rail gap on each side.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub allowed_distance_distortion: Rational,
    pub distance_formula: String,
    /// Largest level-gap distortion seen; bounded by `B`.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub max_level_distortion: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub allowed_level_distortion: Rational,
    pub witness: String,
    pub pass: bool,
}

/// Sweeps placed pairs under each element of `g_set`, comparing distance
/// and level gaps before and after.  `pair_budget` caps the prefix of
/// placed words used on each side.
pub fn qi_certificate(
    e: &LadderEmbedding,
    g_set: &[Word],
    pair_budget: usize,
) -> Result<QiCertificate> {
    let n = e.words.len().min(pair_budget.max(2));
    let mut skipped = 0usize;
    let mut checked = 0usize;
    let mut max_distance = rat(0);
    let mut max_level = rat(0);
    let mut witness = String::from("no movable pairs");
    for g in g_set {
        let moved: Vec<Option<LadderPoint>> = {
            let results: Result<Vec<_>> = (0..n)
                .map(|i| {
                    Ok(e.point_of(&g.multiply(&e.words[i])?))
                })
                .collect();
            results?
        };
        for i in 0..n {
            let pi = e.point_of(&e.words[i]).expect("placed");
            for j in (i + 1)..n {
                let pj = e.point_of(&e.words[j]).expect("placed");
                match (moved[i], moved[j]) {
                    (Some(qi), Some(qj)) => {
                        checked += 1;
                        let before = distance(pi, pj);
                        let after = distance(qi, qj);
                        let dd = abs(&(after - before));
                        if dd > max_distance {
                            max_distance = dd.clone();
                            witness = format!("g = {g}, x = {}, y = {}", e.words[i], e.words[j]);
                        }
                        let dl = rat(((qi.level - qj.level) - (pi.level - pj.level)).abs());
                        if dl > max_level {
                            max_level = dl;
                        }
                    }
                    _ => skipped += 1,
                }
            }
        }
    }
    let allowed_level = e.b_bound().clone();
    let allowed_distance = e.b_bound() + rat(2);
    let pass = max_distance <= allowed_distance && max_level <= allowed_level;
    Ok(QiCertificate {
        elements: g_set.iter().map(|g| g.to_string()).collect(),
        pairs_checked: checked,
        pairs_skipped: skipped,
        max_distance_distortion: max_distance,
        allowed_distance_distortion: allowed_distance,
        distance_formula: "B + 2".into(),
        max_level_distortion: max_level,
        allowed_level_distortion: allowed_level,
        witness,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub element: String,
    pub iterations: u64,
    /// `mu0(g^n) / n`.
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub value: Rational,
}

/// Recovers the homogenized direction of the base quasimorphism from the
/// picture alone: the rung of `g^n` divided by `n`.
pub fn reconstruct_mu(iq: &IntegerizedQm, g: &Word, n: u64) -> Result<ReconstructionReport> {
    if n == 0 {
        return Err(Error::Config("reconstruction needs at least one iteration".into()));
    }
    let power = g.pow(n as i64);
    let level = iq.level_of(&power)?;
    Ok(ReconstructionReport {
        element: g.to_string(),
        iterations: n,
        value: rat(level) / rat(n as i64),
    })
}

/// Verdict of the iterated-power comparison of two integerizations.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum EquivalenceOutcome {
    EquivalentSoFar {
        iterations: u64,
        max_delta: i64,
    },
    Inequivalent {
        witness_element: String,
        witness_power: u64,
        delta: i64,
        threshold: i64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub left: String,
    pub right: String,
    pub elements: Vec<String>,
    pub threshold: i64,
    /// Per power `n`, the largest `|mu0_left(g^n) - mu0_right(g^n)|` over
    /// the element sample, up to where the test stopped.
    pub delta_trace: Vec<i64>,
    #[serde(flatten)]
    pub outcome: EquivalenceOutcome,
}

/// Do two pictures diverge?  Follows `|mu0_left(g^n) - mu0_right(g^n)|`
/// along powers; crossing the threshold certifies the underlying
/// quasimorphisms are not equivalent, and the first crossing (smallest
/// `n`, then sample order) is the reported witness.
pub fn equivalence_test(
    left: &IntegerizedQm,
    right: &IntegerizedQm,
    g_sample: &[Word],
    max_iterations: u64,
    threshold: i64,
) -> Result<EquivalenceReport> {
    if g_sample.is_empty() {
        return Err(Error::Config("empty element sample for the equivalence test".into()));
    }
    let mut powers: Vec<Word> = g_sample.to_vec();
    let mut trace = Vec::new();
    let mut max_delta: i64 = 0;
    for n in 1..=max_iterations {
        if n > 1 {
            for (p, g) in powers.iter_mut().zip(g_sample) {
                *p = p.multiply(g)?;
            }
        }
        let mut level_max: i64 = 0;
        for (p, g) in powers.iter().zip(g_sample) {
            let delta = (left.level_of(p)? - right.level_of(p)?).abs();
            level_max = level_max.max(delta);
            if delta > threshold {
                trace.push(level_max);
                return Ok(EquivalenceReport {
                    left: left.base.label().to_string(),
                    right: right.base.label().to_string(),
                    elements: g_sample.iter().map(|g| g.to_string()).collect(),
                    threshold,
                    delta_trace: trace,
                    outcome: EquivalenceOutcome::Inequivalent {
                        witness_element: g.to_string(),
                        witness_power: n,
                        delta,
                        threshold,
                    },
                });
            }
        }
        trace.push(level_max);
        max_delta = max_delta.max(level_max);
    }
    Ok(EquivalenceReport {
        left: left.base.label().to_string(),
        right: right.base.label().to_string(),
        elements: g_sample.iter().map(|g| g.to_string()).collect(),
        threshold,
        delta_trace: trace,
        outcome: EquivalenceOutcome::EquivalentSoFar {
            iterations: max_iterations,
            max_delta,
        },
    })
}

/// Bridges the embedded picture back to a leveled-space action: rungs are
/// the domains, slots the indices, `h` the level projection, and left
/// translation almost commutes with the rung shift within the recorded
/// bound `B`.
pub fn ladder_triple_action(e: &LadderEmbedding) -> (Triple, TripleAction) {
    let widest = e.rungs.values().map(Vec::len).max().unwrap_or(1).max(1);
    let triple = Triple::new(
        format!("ladder[{}]", e.iq.base.label()),
        widest as u64,
        rat(0),
        Arc::new(|p: Point| rat(p.domain)),
    );

    let e_act = Arc::new(clone_embedding(e));
    let e_level = Arc::clone(&e_act);

    let act: crate::triple::ActFn =
        Arc::new(move |g: &Word, x: Point| {
            let p = LadderPoint::new(x.index, x.domain);
            match e_act.induced_action(g, p) {
                Ok(Some(q)) => Some(Point::new(q.level, q.slot)),
                _ => None,
            }
        });
    let h_after: crate::triple::LevelAfterFn =
        Arc::new(move |g: &Word, x: Point| {
            let p = LadderPoint::new(x.index, x.domain);
            e_level.level_after(g, p).ok().map(rat)
        });

    let sample_points: Vec<Point> = e
        .words
        .iter()
        .map(|w| {
            let p = e.point_of(w).expect("placed");
            Point::new(p.level, p.slot)
        })
        .collect();

    let basepoint = {
        let identity = Word::identity(e.iq.base.presentation());
        let p = e.point_of(&identity).expect("identity is placed");
        Point::new(p.level, p.slot)
    };

    let action = TripleAction::new(
        format!("translation-on-ladder[{}]", e.iq.base.label()),
        e.iq.base.presentation(),
        CommutationMode::Almost { claimed: e.b_bound().clone() },
        act,
        Some(h_after),
        sample_points,
        e.b_bound().clone(),
        basepoint,
    );
    (triple, action)
}

fn clone_embedding(e: &LadderEmbedding) -> LadderEmbedding {
    LadderEmbedding {
        iq: e.iq.clone(),
        max_length: e.max_length,
        words: e.words.clone(),
        levels_by_index: e.levels_by_index.clone(),
        assign: e.assign.clone(),
        reverse: e.reverse.clone(),
        rungs: e.rungs.clone(),
        b_bound: e.b_bound.clone(),
        b_witness: e.b_witness.clone(),
        b_g_len: e.b_g_len,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmcore::{counting_qm, exponent_sum_qm};
    use crate::rational::ratio;
    use crate::triple::certify_pipeline;
    use crate::words::Presentation;
    use proptest::prelude::*;

    fn z_expsum() -> (Arc<Presentation>, IntegerizedQm) {
        let pres = Presentation::free(1).unwrap();
        let mu = exponent_sum_qm(&pres, vec![rat(1)]).unwrap();
        let g0 = Word::parse(&pres, "a").unwrap();
        let (iq, report) = integerize(&mu, &g0, 8, 8).unwrap();
        assert!(report.identity_is_zero);
        (pres, iq)
    }

    fn f2_counting(pattern: &str) -> (Arc<Presentation>, IntegerizedQm) {
        let pres = Presentation::free(2).unwrap();
        let pat = Word::parse(&pres, pattern).unwrap();
        let mu = counting_qm(&pat).unwrap();
        let g0 = Word::parse(&pres, pattern).unwrap();
        let (iq, _) = integerize(&mu, &g0, 8, 8).unwrap();
        (pres, iq)
    }

    #[test]
    fn slot_coordinates_climb_toward_one() {
        assert_eq!(slot_coordinate(0), ratio(1, 2));
        assert_eq!(slot_coordinate(1), ratio(3, 4));
        assert_eq!(slot_coordinate(2), ratio(7, 8));
        for k in 0..10u64 {
            assert!(slot_coordinate(k) < slot_coordinate(k + 1));
            assert!(slot_coordinate(k) < rat(1));
        }
    }

    #[test]
    fn rail_gap_stays_below_one_level_gap_dominates() {
        let p = LadderPoint::new(0, 3);
        let q = LadderPoint::new(5, -2);
        let d = distance(p, q);
        assert!(d > rat(5) && d < rat(6));
        assert_eq!(distance(p, p), rat(0));
        assert_eq!(distance(p, q), distance(q, p));
    }

    #[test]
    fn integerize_scales_exactly_for_exponent_sums() {
        let (pres, iq) = z_expsum();
        assert_eq!(*iq.scale(), rat(1));
        assert_eq!(*iq.scale_error(), rat(0));
        let w = Word::parse(&pres, "a^-7").unwrap();
        assert_eq!(iq.level_of(&w).unwrap(), -7);
    }

    #[test]
    fn integerize_rejects_vanishing_directions() {
        let pres = Presentation::free(2).unwrap();
        let pat = Word::parse(&pres, "a").unwrap();
        let mu = counting_qm(&pat).unwrap();
        let g0 = Word::parse(&pres, "b").unwrap();
        let err = integerize(&mu, &g0, 8, 4).unwrap_err();
        assert!(matches!(err, Error::ZeroWitness { .. }));
    }

    #[test]
    fn integerize_rejects_the_identity_reference() {
        let (pres, _) = z_expsum();
        let mu = exponent_sum_qm(&pres, vec![rat(1)]).unwrap();
        let err = integerize(&mu, &Word::identity(&pres), 8, 4).unwrap_err();
        assert!(matches!(err, Error::IntegerizationFailed { .. }));
    }

    #[test]
    fn rescaled_base_gives_the_same_picture() {
        let pres = Presentation::free(2).unwrap();
        let pat = Word::parse(&pres, "a").unwrap();
        let mu = counting_qm(&pat).unwrap();
        let seven_mu = mu.scaled(&rat(7));
        let (iq1, _) = integerize(&mu, &pat, 8, 8).unwrap();
        let (iq7, _) = integerize(&seven_mu, &pat, 8, 8).unwrap();
        assert_eq!(*iq7.scale(), rat(7));
        for w in enumerate_words(&pres, 4).unwrap() {
            assert_eq!(iq1.level_of(&w).unwrap(), iq7.level_of(&w).unwrap());
        }
    }

    #[test]
    fn embedding_places_the_line_one_word_per_rung() {
        let (_, iq) = z_expsum();
        let e = build_embedding(&iq, 4, 2).unwrap();
        let s = e.summary();
        assert_eq!(s.words_placed, 9);
        assert_eq!(s.lowest_level, -4);
        assert_eq!(s.highest_level, 4);
        assert!(s.empty_levels.is_empty());
        assert_eq!(s.widest_rung, 1);
        assert_eq!(*e.b_bound(), rat(0));
    }

    #[test]
    fn embedding_slots_follow_enumeration_order() {
        let pres = Presentation::free(2).unwrap();
        let mu = exponent_sum_qm(&pres, vec![rat(1), rat(0)]).unwrap();
        let g0 = Word::parse(&pres, "a").unwrap();
        let (iq, _) = integerize(&mu, &g0, 8, 4).unwrap();
        let e = build_embedding(&iq, 2, 1).unwrap();
        let rung_one: Vec<String> = ["a", "a b", "a b^-1", "b a", "b^-1 a"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for (slot, name) in rung_one.iter().enumerate() {
            let w = Word::parse(&pres, name).unwrap();
            let p = e.point_of(&w).unwrap();
            assert_eq!(p.level, 1, "{name}");
            assert_eq!(p.slot, slot as u64, "{name}");
            assert_eq!(e.word_at(p).unwrap(), &w);
        }
        assert_eq!(e.rung_population(1), 5);
    }

    #[test]
    fn induced_action_moves_points_or_reports_departure() {
        let (pres, iq) = z_expsum();
        let e = build_embedding(&iq, 4, 2).unwrap();
        let g = Word::parse(&pres, "a").unwrap();
        let origin = e.point_of(&Word::identity(&pres)).unwrap();
        let moved = e.induced_action(&g, origin).unwrap().unwrap();
        assert_eq!(moved.level, 1);
        let top = e.point_of(&Word::parse(&pres, "a^4").unwrap()).unwrap();
        assert_eq!(e.induced_action(&g, top).unwrap(), None);
        assert_eq!(e.level_after(&g, top).unwrap(), 5);
        let err = e.induced_action(&g, LadderPoint::new(99, 0)).unwrap_err();
        assert!(matches!(err, Error::UnassignedWord { .. }));
    }

    #[test]
    fn qi_certificate_is_tight_on_the_line() {
        let (pres, iq) = z_expsum();
        let e = build_embedding(&iq, 5, 2).unwrap();
        let g_set = vec![
            Word::parse(&pres, "a").unwrap(),
            Word::parse(&pres, "a^-2").unwrap(),
        ];
        let cert = qi_certificate(&e, &g_set, 64).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.max_distance_distortion, rat(0));
        assert_eq!(cert.max_level_distortion, rat(0));
        assert!(cert.pairs_checked > 0);
    }

    #[test]
    fn qi_certificate_respects_the_recorded_bound_for_counting() {
        let (pres, iq) = f2_counting("a");
        let e = build_embedding(&iq, 4, 2).unwrap();
        let g_set: Vec<Word> = enumerate_words(&pres, 2)
            .unwrap()
            .into_iter()
            .filter(|w| !w.is_identity())
            .collect();
        let cert = qi_certificate(&e, &g_set, 200).unwrap();
        assert!(cert.pass, "cert: {cert:?}");
        assert!(cert.max_level_distortion <= *e.b_bound());
    }

    #[test]
    fn reconstruction_recovers_the_slope() {
        let pres = Presentation::free(2).unwrap();
        let mu = exponent_sum_qm(&pres, vec![rat(1), rat(1)]).unwrap();
        let g0 = Word::parse(&pres, "a").unwrap();
        let (iq, _) = integerize(&mu, &g0, 8, 4).unwrap();
        let g = Word::parse(&pres, "a b a").unwrap();
        let report = reconstruct_mu(&iq, &g, 16).unwrap();
        assert_eq!(report.value, rat(3));
        assert!(reconstruct_mu(&iq, &g, 0).is_err());
    }

    #[test]
    fn counting_directions_diverge_with_a_witness() {
        let (pres, iq_a) = f2_counting("a");
        let (_, iq_b) = {
            let pat = Word::parse(&pres, "b").unwrap();
            let mu = counting_qm(&pat).unwrap();
            let (iq, _) = integerize(&mu, &pat, 8, 8).unwrap();
            (pres.clone(), iq)
        };
        let sample = vec![
            Word::parse(&pres, "a").unwrap(),
            Word::parse(&pres, "a b").unwrap(),
        ];
        let report = equivalence_test(&iq_a, &iq_b, &sample, 200, 10).unwrap();
        match report.outcome {
            EquivalenceOutcome::Inequivalent { witness_element, witness_power, delta, .. } => {
                assert_eq!(witness_element, "a");
                assert_eq!(witness_power, 11);
                assert_eq!(delta, 11);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
        assert_eq!(report.delta_trace.len(), 11);
    }

    #[test]
    fn a_rescaling_stays_equivalent() {
        let pres = Presentation::free(2).unwrap();
        let pat = Word::parse(&pres, "a").unwrap();
        let mu = counting_qm(&pat).unwrap();
        let three_mu = mu.scaled(&rat(3));
        let (iq1, _) = integerize(&mu, &pat, 8, 8).unwrap();
        let (iq3, _) = integerize(&three_mu, &pat, 8, 8).unwrap();
        let sample = vec![
            Word::parse(&pres, "a").unwrap(),
            Word::parse(&pres, "b").unwrap(),
            Word::parse(&pres, "a b").unwrap(),
        ];
        let report = equivalence_test(&iq1, &iq3, &sample, 200, 10).unwrap();
        match report.outcome {
            EquivalenceOutcome::EquivalentSoFar { iterations, max_delta } => {
                assert_eq!(iterations, 200);
                assert_eq!(max_delta, 0);
            }
            other => panic!("expected agreement, got {other:?}"),
        }
    }

    #[test]
    fn bridged_action_passes_the_pipeline() {
        let (_, iq) = f2_counting("a");
        let e = build_embedding(&iq, 3, 2).unwrap();
        let (t, act) = ladder_triple_action(&e);
        let budgets = crate::triple::PipelineBudgets {
            truncation: 4,
            g_len: 2,
            root_points: Some(40),
            defect_len: 3,
            extra_alpha: 2,
        };
        let outcome = certify_pipeline(&t, &act, &budgets).unwrap();
        assert!(outcome.report.pass, "report: {:?}", outcome.report);
        // mu from the bridged action at the identity's point is mu0 itself.
        let pres = iq.base().presentation().clone();
        let g = Word::parse(&pres, "a^2 b").unwrap();
        assert_eq!(outcome.qm.eval(&g), iq.mu0(&g).unwrap());
    }

    #[test]
    fn integerized_quasimorphism_carries_a_defect_bound() {
        let (_, iq) = f2_counting("a");
        let qm = iq.as_quasimorphism();
        let claimed = qm.claimed_defect().expect("bound present").clone();
        let observed = crate::qmcore::defect_lower_bound(&qm, 3).unwrap();
        assert!(observed <= claimed, "{} > {}", observed, claimed);
    }

    proptest! {
        #[test]
        fn distance_is_a_metric_on_sampled_points(
            s1 in 0u64..40, l1 in -50i64..50,
            s2 in 0u64..40, l2 in -50i64..50,
            s3 in 0u64..40, l3 in -50i64..50,
        ) {
            let p = LadderPoint::new(s1, l1);
            let q = LadderPoint::new(s2, l2);
            let r = LadderPoint::new(s3, l3);
            prop_assert_eq!(distance(p, q), distance(q, p));
            prop_assert!(distance(p, q) >= rat(0));
            prop_assert_eq!(distance(p, p), rat(0));
            prop_assert!(distance(p, r) <= distance(p, q) + distance(q, r));
            if p != q {
                prop_assert!(distance(p, q) > rat(0));
            }
        }

        #[test]
        fn rail_component_never_reaches_one(s1 in 0u64..60, s2 in 0u64..60) {
            let gap = abs(&(slot_coordinate(s1) - slot_coordinate(s2)));
            prop_assert!(gap < rat(1));
        }
    }
}
