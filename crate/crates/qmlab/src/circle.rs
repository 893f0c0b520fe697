//! Monotone actions on marked circles, their extension to lifts of circle
//! homeomorphisms, and exact or interval-certified translation numbers.
//!
//! A lift is a monotone map `f` of the line commuting with unit
//! translation.  Its translation number `tau(f) = lim f^n(x)/n` is the
//! homogeneous quasimorphism of circle actions; here it is computed either
//! exactly (rotation representation, or cycle detection on the induced
//! circle orbit) or as a certified interval of radius `1/n`.
//!
//! The module also carries the one-dimensional path-integral level
//! function: integrating a periodic nonnegative density of total mass one
//! yields a leveled space whose unit translation has `mu = 1` exactly.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{abs, format_rational, rat, Rational};
use crate::triple::{
    displacement_certificate, CommutationMode, DisplacementCertificate, Point, Triple,
    TripleAction,
};
use crate::words::Word;

/// Cycle search gives up after this many steps per seed and falls back to
/// the iterative interval.
pub const DEFAULT_CYCLE_BOUND: u64 = 10_000;

fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

fn frac(x: &Rational) -> Rational {
    x - Rational::from_integer(floor_int(x))
}

/// A monotone lift of a circle map: `f(x + 1) = f(x) + 1` holds exactly by
/// construction in every representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CircleLift {
    /// `x -> x + angle`.
    Rotation { angle: Rational },
    /// Piecewise-linear interpolation through `(x, f(x))` pairs with
    /// `x` in `[0, 1)`, extended periodically.
    Pl { breakpoints: Vec<(Rational, Rational)> },
    /// A finite monotone table sampled on a level set, extended by the
    /// same piecewise-linear rule.
    SampledMonotone { table: Vec<(Rational, Rational)> },
}

fn validate_graph(points: &[(Rational, Rational)], what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::NotMonotone {
            detail: format!("{what} needs at least one graph point"),
        });
    }
    for (x, _) in points {
        if *x < rat(0) || *x >= rat(1) {
            return Err(Error::NotMonotone {
                detail: format!("{what} position {} is outside [0, 1)", format_rational(x)),
            });
        }
    }
    for w in points.windows(2) {
        let ((x0, v0), (x1, v1)) = (&w[0], &w[1]);
        if x1 <= x0 {
            return Err(Error::NotMonotone {
                detail: format!(
                    "{what} positions {} and {} are out of order",
                    format_rational(x0),
                    format_rational(x1)
                ),
            });
        }
        if v1 <= v0 {
            return Err(Error::NotMonotone {
                detail: format!(
                    "{what} values {} and {} fail strict increase",
                    format_rational(v0),
                    format_rational(v1)
                ),
            });
        }
    }
    let (_, first_v) = &points[0];
    let (_, last_v) = points.last().expect("nonempty");
    if *last_v >= first_v + rat(1) {
        return Err(Error::NotMonotone {
            detail: format!(
                "{what} wrap segment decreases: last value {} reaches first value {} plus one",
                format_rational(last_v),
                format_rational(first_v)
            ),
        });
    }
    Ok(())
}

/// Linear interpolation through the periodically extended graph.
fn pl_eval(points: &[(Rational, Rational)], x: &Rational) -> Rational {
    let k = floor_int(x);
    let u = x - Rational::from_integer(k.clone());
    let shift = Rational::from_integer(k);
    if points.len() == 1 {
        // One sample pins the whole map to a rotation.
        let (x0, v0) = &points[0];
        return v0 - x0 + u + shift;
    }
    // Segment containing u, wrapping the last point back by a period when
    // u precedes the first breakpoint.
    let idx = points.partition_point(|(px, _)| *px <= u);
    let ((ax, av), (bx, bv)) = if idx == 0 {
        let (lx, lv) = points.last().expect("nonempty");
        ((lx - rat(1), lv - rat(1)), points[0].clone())
    } else if idx == points.len() {
        let (fx, fv) = &points[0];
        (points[idx - 1].clone(), (fx + rat(1), fv + rat(1)))
    } else {
        (points[idx - 1].clone(), points[idx].clone())
    };
    av.clone() + (u - &ax) * (bv - &av) / (bx - ax) + shift
}

/// Inverse evaluation on the same graph (strict monotonicity makes the map
/// a bijection of the line).
fn pl_eval_inv(points: &[(Rational, Rational)], y: &Rational) -> Rational {
    let (_, v0) = &points[0];
    // Integer k with v0 <= y - k < v0 + 1.
    let k = floor_int(&(y - v0));
    let shift = Rational::from_integer(k.clone());
    let u = y - &shift;
    if points.len() == 1 {
        let (x0, v0) = &points[0];
        return u - v0 + x0 + shift;
    }
    let idx = points.partition_point(|(_, pv)| *pv <= u);
    let ((ax, av), (bx, bv)) = if idx == 0 {
        let (lx, lv) = points.last().expect("nonempty");
        ((lx - rat(1), lv - rat(1)), points[0].clone())
    } else if idx == points.len() {
        let (fx, fv) = &points[0];
        (points[idx - 1].clone(), (fx + rat(1), fv + rat(1)))
    } else {
        (points[idx - 1].clone(), points[idx].clone())
    };
    ax.clone() + (u - &av) * (bx - &ax) / (bv - av) + shift
}

impl CircleLift {
    pub fn rotation(angle: Rational) -> Self {
        CircleLift::Rotation { angle }
    }

    pub fn pl(breakpoints: Vec<(Rational, Rational)>) -> Result<Self> {
        validate_graph(&breakpoints, "breakpoint")?;
        Ok(CircleLift::Pl { breakpoints })
    }

    pub fn sampled(table: Vec<(Rational, Rational)>) -> Result<Self> {
        validate_graph(&table, "sample")?;
        Ok(CircleLift::SampledMonotone { table })
    }

    pub fn identity() -> Self {
        CircleLift::Rotation { angle: rat(0) }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        match self {
            CircleLift::Rotation { angle } => x + angle,
            CircleLift::Pl { breakpoints } => pl_eval(breakpoints, x),
            CircleLift::SampledMonotone { table } => pl_eval(table, x),
        }
    }

    pub fn eval_inv(&self, y: &Rational) -> Rational {
        match self {
            CircleLift::Rotation { angle } => y - angle,
            CircleLift::Pl { breakpoints } => pl_eval_inv(breakpoints, y),
            CircleLift::SampledMonotone { table } => pl_eval_inv(table, y),
        }
    }

    /// `f^k(x)` by pointwise iteration; `k` may be negative.
    pub fn eval_pow(&self, x: &Rational, k: i64) -> Rational {
        let mut v = x.clone();
        if k >= 0 {
            for _ in 0..k {
                v = self.eval(&v);
            }
        } else {
            for _ in 0..(-k) {
                v = self.eval_inv(&v);
            }
        }
        v
    }

    pub fn inverse(&self) -> Result<CircleLift> {
        match self {
            CircleLift::Rotation { angle } => Ok(CircleLift::Rotation { angle: -angle }),
            CircleLift::Pl { breakpoints } => Ok(CircleLift::Pl {
                breakpoints: invert_graph(breakpoints),
            }),
            CircleLift::SampledMonotone { table } => Ok(CircleLift::SampledMonotone {
                table: invert_graph(table),
            }),
        }
    }

    /// Orbit seeds for cycle detection: the breakpoints, or 0.
    fn seeds(&self) -> Vec<Rational> {
        match self {
            CircleLift::Rotation { .. } => vec![rat(0)],
            CircleLift::Pl { breakpoints } => {
                breakpoints.iter().map(|(x, _)| x.clone()).collect()
            }
            CircleLift::SampledMonotone { table } => {
                table.iter().map(|(x, _)| x.clone()).collect()
            }
        }
    }
}

fn invert_graph(points: &[(Rational, Rational)]) -> Vec<(Rational, Rational)> {
    // (x, v) on the graph of f puts (v mod 1, x - floor(v)) on the graph
    // of the inverse; strict monotonicity keeps positions distinct.
    let mut out: Vec<(Rational, Rational)> = points
        .iter()
        .map(|(x, v)| {
            let k = Rational::from_integer(floor_int(v));
            (v - &k, x - k)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[derive(Debug, Clone)]
pub enum TauMode {
    /// Detect a periodic orbit of the induced circle map; exact when found.
    Exact { max_steps: u64 },
    /// `f^n(0)/n` with certified error `1/n`.
    Iterative { iterations: u64 },
}

impl Default for TauMode {
    fn default() -> Self {
        TauMode::Exact { max_steps: DEFAULT_CYCLE_BOUND }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauResult {
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub tau: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub error_bound: Rational,
    pub mode: String,
    /// Set when exact mode found no cycle and the iterative interval was
    /// returned instead.
    pub fell_back: bool,
    pub steps: u64,
}

fn tau_iterative(eval: &dyn Fn(&Rational) -> Rational, iterations: u64) -> TauResult {
    let n = iterations.max(1);
    let mut x = rat(0);
    for _ in 0..n {
        x = eval(&x);
    }
    TauResult {
        tau: x / rat(n as i64),
        error_bound: rat(1) / rat(n as i64),
        mode: "iterative".into(),
        fell_back: false,
        steps: n,
    }
}

fn tau_by_cycle(
    eval: &dyn Fn(&Rational) -> Rational,
    seeds: &[Rational],
    max_steps: u64,
) -> Option<TauResult> {
    for seed in seeds {
        let mut u = frac(seed);
        let mut carry = BigInt::from(0);
        let mut seen: HashMap<Rational, (u64, BigInt)> = HashMap::new();
        seen.insert(u.clone(), (0, carry.clone()));
        for step in 1..=max_steps {
            let y = eval(&u);
            let k = floor_int(&y);
            u = y - Rational::from_integer(k.clone());
            carry += k;
            if let Some((first_step, first_carry)) = seen.get(&u) {
                let length = step - first_step;
                let gained = &carry - first_carry;
                return Some(TauResult {
                    tau: Rational::new(gained, BigInt::from(length)),
                    error_bound: rat(0),
                    mode: "exact".into(),
                    fell_back: false,
                    steps: step,
                });
            }
            seen.insert(u.clone(), (step, carry.clone()));
        }
    }
    None
}

/// Translation number of a lift.  Exact mode returns a point value with
/// zero error when the representation or a detected cycle forces it, and
/// otherwise falls back to the `1/max_steps` iterative interval with the
/// fallback reported.
pub fn translation_number(f: &CircleLift, mode: &TauMode) -> TauResult {
    match mode {
        TauMode::Iterative { iterations } => tau_iterative(&|x| f.eval(x), *iterations),
        TauMode::Exact { max_steps } => {
            if let CircleLift::Rotation { angle } = f {
                return TauResult {
                    tau: angle.clone(),
                    error_bound: rat(0),
                    mode: "exact".into(),
                    fell_back: false,
                    steps: 0,
                };
            }
            match tau_by_cycle(&|x| f.eval(x), &f.seeds(), *max_steps) {
                Some(result) => result,
                None => {
                    let mut result = tau_iterative(&|x| f.eval(x), *max_steps);
                    result.fell_back = true;
                    result
                }
            }
        }
    }
}

/// Translation number of `f^k` without building the power as a map: the
/// orbit is iterated pointwise.
pub fn translation_number_pow(f: &CircleLift, k: i64, mode: &TauMode) -> TauResult {
    if let CircleLift::Rotation { angle } = f {
        if matches!(mode, TauMode::Exact { .. }) {
            return TauResult {
                tau: angle * rat(k),
                error_bound: rat(0),
                mode: "exact".into(),
                fell_back: false,
                steps: 0,
            };
        }
    }
    let eval = |x: &Rational| f.eval_pow(x, k);
    match mode {
        TauMode::Iterative { iterations } => tau_iterative(&eval, *iterations),
        TauMode::Exact { max_steps } => match tau_by_cycle(&eval, &f.seeds(), *max_steps) {
            Some(result) => result,
            None => {
                let mut result = tau_iterative(&eval, *max_steps);
                result.fell_back = true;
                result
            }
        },
    }
}

/// Translation number of the conjugate `c f c^-1`, evaluated pointwise.
pub fn translation_number_conjugate(f: &CircleLift, c: &CircleLift, mode: &TauMode) -> TauResult {
    let eval = |x: &Rational| c.eval(&f.eval(&c.eval_inv(x)));
    match mode {
        TauMode::Iterative { iterations } => tau_iterative(&eval, *iterations),
        TauMode::Exact { max_steps } => {
            let mut seeds = f.seeds();
            seeds.extend(c.seeds());
            match tau_by_cycle(&eval, &seeds, *max_steps) {
                Some(result) => result,
                None => {
                    let mut result = tau_iterative(&eval, *max_steps);
                    result.fell_back = true;
                    result
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauHomogeneityVerdict {
    pub k: i64,
    pub tau_of_f: TauResult,
    pub tau_of_power: TauResult,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub difference: Rational,
    #[serde(serialize_with = "crate::config::serialize_rational")]
    pub allowed: Rational,
    pub pass: bool,
}

/// Checks `tau(f^k) = k * tau(f)` within the combined error bounds (zero
/// in exact mode).
pub fn tau_homogeneity_check(f: &CircleLift, k: i64, mode: &TauMode) -> Result<TauHomogeneityVerdict> {
    if k == 0 {
        return Err(Error::Config("homogeneity check needs a nonzero power".into()));
    }
    let tau_f = translation_number(f, mode);
    let tau_pow = translation_number_pow(f, k, mode);
    let difference = abs(&(&tau_pow.tau - rat(k) * &tau_f.tau));
    let allowed = &tau_pow.error_bound + rat(k.abs()) * &tau_f.error_bound;
    let pass = difference <= allowed;
    Ok(TauHomogeneityVerdict {
        k,
        tau_of_f: tau_f,
        tau_of_power: tau_pow,
        difference,
        allowed,
        pass,
    })
}

/// A circle with marked points `offsets` (strictly increasing in `[0, 1)`)
/// whose lifts form the leveled space: the point `(domain, index)` sits at
/// the real number `domain + offsets[index]`.
#[derive(Debug, Clone)]
pub struct MarkedCircle {
    offsets: Vec<Rational>,
}

impl MarkedCircle {
    pub fn new(offsets: Vec<Rational>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Config("a marked circle needs at least one point".into()));
        }
        for o in &offsets {
            if *o < rat(0) || *o >= rat(1) {
                return Err(Error::Config(format!(
                    "marked point {} is outside [0, 1)",
                    format_rational(o)
                )));
            }
        }
        for w in offsets.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "marked points {} and {} are out of order",
                    format_rational(&w[0]),
                    format_rational(&w[1])
                )));
            }
        }
        Ok(MarkedCircle { offsets })
    }

    pub fn offsets(&self) -> &[Rational] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// One generator's effect: marked point `i` goes to the lift of marked
/// point `target` carried by `carry` whole turns.
pub type GeneratorTable = Vec<(usize, i64)>;

fn validate_table(circle: &MarkedCircle, table: &GeneratorTable, which: usize) -> Result<()> {
    let n = circle.len();
    if table.len() != n {
        return Err(Error::Config(format!(
            "generator {which} table covers {} of {} marked points",
            table.len(),
            n
        )));
    }
    let mut hit = vec![false; n];
    for &(target, _) in table {
        if target >= n {
            return Err(Error::Config(format!(
                "generator {which} sends a point to unknown index {target}"
            )));
        }
        if hit[target] {
            return Err(Error::Config(format!(
                "generator {which} is not invertible: index {target} is hit twice"
            )));
        }
        hit[target] = true;
    }
    Ok(())
}

fn inverse_table(table: &GeneratorTable) -> GeneratorTable {
    let mut inv = vec![(0usize, 0i64); table.len()];
    for (i, &(target, carry)) in table.iter().enumerate() {
        inv[target] = (i, -carry);
    }
    inv
}

/// Builds the leveled space of a marked circle together with the action of
/// a free group whose generators permute the marked lifts.  Tables are only
/// required to be invertible; whether they are monotone is the business of
/// `check_monotone_conditions`, so deliberately broken actions can be
/// constructed and then failed.
pub fn circle_triple_action(
    circle: &MarkedCircle,
    tables: Vec<GeneratorTable>,
    truncation: i64,
) -> Result<(Triple, TripleAction)> {
    if tables.is_empty() {
        return Err(Error::Config("at least one generator table is needed".into()));
    }
    for (i, table) in tables.iter().enumerate() {
        validate_table(circle, table, i)?;
    }
    let n = circle.len();
    let offsets = circle.offsets.clone();
    let triple = Triple::new(
        format!("marked-circle[{n}]"),
        n as u64,
        rat(0),
        Arc::new(move |p: Point| rat(p.domain) + &offsets[p.index as usize]),
    );

    let inverses: Vec<GeneratorTable> = tables.iter().map(inverse_table).collect();
    let pres = crate::words::Presentation::free(tables.len())?;
    let act_tables = tables.clone();
    let act: crate::triple::ActFn =
        Arc::new(move |g: &Word, x: Point| {
            let mut p = x;
            // Left action: the rightmost letter acts first.
            for letter in g.letters().iter().rev() {
                let (table, times) = if letter.exp >= 0 {
                    (&act_tables[letter.gen], letter.exp)
                } else {
                    (&inverses[letter.gen], -letter.exp)
                };
                for _ in 0..times {
                    let (target, carry) = table[p.index as usize];
                    p = Point::new(p.domain + carry, target as u64);
                }
            }
            Some(p)
        });

    let sample_points: Vec<Point> = {
        let reach = truncation.clamp(1, 8);
        let mut pts = Vec::new();
        for domain in -reach..=reach {
            for index in 0..n as u64 {
                pts.push(Point::new(domain, index));
            }
        }
        pts
    };

    let action = TripleAction::new(
        format!("marked-circle-action[{n}]"),
        &pres,
        CommutationMode::Exact,
        act,
        None,
        sample_points,
        rat(1),
        Point::new(0, 0),
    );
    Ok((triple, action))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionFailure {
    pub condition: String,
    pub witness: String,
    pub detail: String,
}

/// Verdict of the monotonicity conditions on sampled data: (a) the action
/// preserves the level order both ways, (b) equal levels stay equal, and
/// (c) the translation cocycle vanishes identically.
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneConditionsReport {
    pub order_ok: bool,
    pub level_sets_ok: bool,
    pub cocycle_zero: bool,
    pub pairs_checked: usize,
    pub failures: Vec<ConditionFailure>,
    pub pass: bool,
}

pub fn check_monotone_conditions(
    t: &Triple,
    act: &TripleAction,
    g_set: &[Word],
    alpha_range: i64,
) -> MonotoneConditionsReport {
    let mut failures = Vec::new();
    let mut order_ok = true;
    let mut level_sets_ok = true;
    let mut cocycle_zero = true;
    let mut pairs = 0usize;

    let samples = act.sample_points();
    let levels: Vec<Rational> = samples.iter().map(|&p| t.h(p)).collect();
    for g in g_set {
        let after: Vec<Option<Rational>> = samples
            .iter()
            .map(|&p| act.level_after(t, g, p))
            .collect();
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                let (hi, hj) = match (&after[i], &after[j]) {
                    (Some(a), Some(b)) => (a, b),
                    _ => continue,
                };
                pairs += 1;
                let before = levels[i].cmp(&levels[j]);
                let moved = hi.cmp(hj);
                if before.is_eq() {
                    if !moved.is_eq() {
                        level_sets_ok = false;
                        failures.push(ConditionFailure {
                            condition: "level-sets".into(),
                            witness: format!("g = {g}, x = {}, y = {}", samples[i], samples[j]),
                            detail: format!(
                                "equal levels map to {} and {}",
                                format_rational(hi),
                                format_rational(hj)
                            ),
                        });
                    }
                } else if before != moved {
                    order_ok = false;
                    failures.push(ConditionFailure {
                        condition: "order".into(),
                        witness: format!("g = {g}, x = {}, y = {}", samples[i], samples[j]),
                        detail: format!(
                            "h gap {} -> {} flips direction",
                            format_rational(&(&levels[i] - &levels[j])),
                            format_rational(&(hi - hj))
                        ),
                    });
                }
            }
        }
    }
    for &x in samples {
        let hx = t.h(x);
        for alpha in -alpha_range.max(1)..=alpha_range.max(1) {
            let b = t.h(t.translate(alpha, x)) - &hx - rat(alpha);
            if b != rat(0) {
                cocycle_zero = false;
                failures.push(ConditionFailure {
                    condition: "zero-cocycle".into(),
                    witness: format!("x = {x}, alpha = {alpha}"),
                    detail: format!("b = {}", format_rational(&b)),
                });
            }
        }
    }

    MonotoneConditionsReport {
        order_ok,
        level_sets_ok,
        cocycle_zero,
        pairs_checked: pairs,
        pass: order_ok && level_sets_ok && cocycle_zero,
        failures,
    }
}

/// For monotone actions the base domain is displaced into a window of
/// width at most one.
pub fn unit_width_certificate(
    t: &Triple,
    act: &TripleAction,
    g: &Word,
) -> Result<DisplacementCertificate> {
    displacement_certificate(t, act, g, &rat(1))
}

/// Interpolates the induced map on the base domain's levels into a lift of
/// a circle map: the graph points are `(h(x), h(g.x))` for marked `x`.
pub fn extend_to_line(t: &Triple, act: &TripleAction, g: &Word) -> Result<CircleLift> {
    let mut graph: Vec<(Rational, Rational)> = Vec::new();
    for &x in act.sample_points().iter().filter(|p| p.domain == 0) {
        let before = t.h(x);
        let after = act
            .level_after(t, g, x)
            .ok_or(Error::OutOfTruncation { point: x.to_string() })?;
        graph.push((before, after));
    }
    graph.sort_by(|a, b| a.0.cmp(&b.0));
    graph.dedup_by(|a, b| a.0 == b.0);
    CircleLift::sampled(graph)
}

/// Periodic density on `[0, 1)`: nonnegative, given exactly.
#[derive(Debug, Clone)]
pub enum Density {
    /// Constant pieces `(start, value)`; the first start must be 0.
    Step { pieces: Vec<(Rational, Rational)> },
    /// Linear interpolation between nodes `(x, value)`, wrapping the last
    /// node to the first at `x = 1`.
    Pl { nodes: Vec<(Rational, Rational)> },
}

fn validate_density_grid(points: &[(Rational, Rational)]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config("a density needs at least one piece".into()));
    }
    if points[0].0 != rat(0) {
        return Err(Error::Config("the density grid must start at 0".into()));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Config("density grid positions must increase".into()));
        }
    }
    if let Some((x, _)) = points.iter().find(|(x, _)| *x >= rat(1)) {
        return Err(Error::Config(format!(
            "density grid position {} is outside [0, 1)",
            format_rational(x)
        )));
    }
    for (x, v) in points {
        if *v < rat(0) {
            return Err(Error::NegativeDensity { at: format_rational(x) });
        }
    }
    Ok(())
}

impl Density {
    pub fn step(pieces: Vec<(Rational, Rational)>) -> Result<Self> {
        validate_density_grid(&pieces)?;
        Ok(Density::Step { pieces })
    }

    pub fn pl(nodes: Vec<(Rational, Rational)>) -> Result<Self> {
        validate_density_grid(&nodes)?;
        Ok(Density::Pl { nodes })
    }

    pub fn constant(value: Rational) -> Result<Self> {
        Density::step(vec![(rat(0), value)])
    }

    /// `Integral over [0, u]` for `u` in `[0, 1]`.
    fn partial_mass(&self, u: &Rational) -> Rational {
        let mut total = rat(0);
        match self {
            Density::Step { pieces } => {
                for (i, (start, value)) in pieces.iter().enumerate() {
                    if *start >= *u {
                        break;
                    }
                    let end = pieces.get(i + 1).map(|(s, _)| s.clone()).unwrap_or(rat(1));
                    let end = end.min(u.clone());
                    total += (end - start) * value;
                }
            }
            Density::Pl { nodes } => {
                // Trapezoid areas on the grid extended by the wrap node
                // (1, value at 0).
                let mut extended: Vec<(Rational, Rational)> = nodes.clone();
                extended.push((rat(1), nodes[0].1.clone()));
                for w in extended.windows(2) {
                    let ((ax, av), (bx, bv)) = (&w[0], &w[1]);
                    if *ax >= *u {
                        break;
                    }
                    if *u >= *bx {
                        total += (bx - ax) * (av + bv) / rat(2);
                    } else {
                        let mid = av + (u - ax) * (bv - av) / (bx - ax);
                        total += (u - ax) * (av + mid) / rat(2);
                        break;
                    }
                }
            }
        }
        total
    }

    /// `Integral over one period`.
    pub fn total_mass(&self) -> Rational {
        self.partial_mass(&rat(1))
    }
}

/// Signed integral of the periodic density from 0 to `x`: the level
/// function of the one-dimensional path construction, where the infimum
/// over paths is the straight segment and the sign follows the domain
/// labels.
pub fn path_integral_h(density: &Density, x: &Rational) -> Rational {
    let k = floor_int(x);
    let u = x - Rational::from_integer(k.clone());
    Rational::from_integer(k) * density.total_mass() + density.partial_mass(&u)
}

/// The leveled space of a unit-mass density: `samples` equally spaced
/// marked points per domain, levels given by the path integral, and the
/// free-group generator acting as translation by one.  The cocycle is
/// exactly zero and the unit translation has `mu = 1`.
pub fn density_triple_action(
    density: &Density,
    samples: u64,
    truncation: i64,
) -> Result<(Triple, TripleAction)> {
    let mass = density.total_mass();
    if mass != rat(1) {
        return Err(Error::DensityNotNormalized { integral: format_rational(&mass) });
    }
    let n = samples.max(1);
    let d = density.clone();
    let triple = Triple::new(
        format!("density-line[{n}]"),
        n,
        rat(0),
        Arc::new(move |p: Point| {
            let x = rat(p.domain) + crate::rational::ratio(p.index as i64, n as i64);
            path_integral_h(&d, &x)
        }),
    );
    let pres = crate::words::Presentation::free(1)?;
    let act: crate::triple::ActFn =
        Arc::new(|g: &Word, x: Point| {
            let shift: i64 = g.letters().iter().map(|l| l.exp).sum();
            Some(Point::new(x.domain + shift, x.index))
        });
    let sample_points: Vec<Point> = {
        let reach = truncation.clamp(1, 8);
        let mut pts = Vec::new();
        for domain in -reach..=reach {
            for index in 0..n {
                pts.push(Point::new(domain, index));
            }
        }
        pts
    };
    let action = TripleAction::new(
        format!("unit-translation-on-density-line[{n}]"),
        &pres,
        CommutationMode::Exact,
        act,
        None,
        sample_points,
        rat(1),
        Point::new(0, 0),
    );
    Ok((triple, action))
}

/// Deliberately broken circle data for negative tests.
pub mod controls {
    use super::*;

    /// Reflection of a symmetric 3-point circle: order-reversing, so
    /// condition (a) fails.
    pub fn order_reversing_action() -> Result<(Triple, TripleAction)> {
        let circle = MarkedCircle::new(vec![rat(0), crate::rational::ratio(1, 3), crate::rational::ratio(2, 3)])?;
        // x -> -x on lifts: 0 stays, 1/3 -> -1/3, 2/3 -> -2/3.
        let table = vec![(0, 0), (2, -1), (1, -1)];
        circle_triple_action(&circle, vec![table], 2)
    }

    /// The marked-circle triple with a quarter bump on one lifted point:
    /// the cocycle picks up b = 1/4 there, so condition (c) fails.
    pub fn quarter_bump_triple(circle: &MarkedCircle) -> Triple {
        let offsets = circle.offsets().to_vec();
        Triple::new(
            "marked-circle-with-bump",
            offsets.len() as u64,
            rat(0),
            Arc::new(move |p: Point| {
                let mut v = rat(p.domain) + &offsets[p.index as usize];
                if p.index == 0 && p.domain != 0 {
                    v += crate::rational::ratio(1, 4);
                }
                v
            }),
        )
    }
}

/// Rotation of the `n`-point equally spaced circle by `steps` marks.
pub fn rotation_table(n: usize, steps: i64) -> GeneratorTable {
    (0..n)
        .map(|i| {
            let raw = i as i64 + steps;
            let target = raw.rem_euclid(n as i64) as usize;
            let carry = (raw - target as i64) / n as i64;
            (target, carry)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::triple::{certify_pipeline, mu_from_action, verify_triple, PipelineBudgets};

    fn third_rotation() -> (Triple, TripleAction) {
        let circle =
            MarkedCircle::new(vec![rat(0), ratio(1, 3), ratio(2, 3)]).unwrap();
        circle_triple_action(&circle, vec![rotation_table(3, 1)], 3).unwrap()
    }

    #[test]
    fn rotation_lift_evaluates_exactly() {
        let f = CircleLift::rotation(ratio(2, 5));
        assert_eq!(f.eval(&ratio(1, 2)), ratio(9, 10));
        assert_eq!(f.eval_inv(&f.eval(&ratio(7, 3))), ratio(7, 3));
        assert_eq!(f.eval_pow(&rat(0), 5), rat(2));
        assert_eq!(f.eval_pow(&rat(0), -5), rat(-2));
    }

    #[test]
    fn pl_lift_interpolates_and_commutes_with_translation() {
        // Graph (0, 1/4), (1/2, 3/4): slope one everywhere, rotation 1/4.
        let f = CircleLift::pl(vec![(rat(0), ratio(1, 4)), (ratio(1, 2), ratio(3, 4))]).unwrap();
        assert_eq!(f.eval(&rat(0)), ratio(1, 4));
        assert_eq!(f.eval(&ratio(1, 4)), ratio(1, 2));
        assert_eq!(f.eval(&ratio(3, 4)), rat(1));
        for x in [rat(0), ratio(1, 3), ratio(-7, 5)] {
            assert_eq!(f.eval(&(&x + rat(1))), f.eval(&x) + rat(1));
            assert_eq!(f.eval_inv(&f.eval(&x)), x);
        }
    }

    #[test]
    fn nonuniform_pl_lift_round_trips_through_inverse() {
        let f = CircleLift::pl(vec![
            (rat(0), ratio(1, 8)),
            (ratio(1, 4), ratio(3, 4)),
            (ratio(1, 2), ratio(7, 8)),
        ])
        .unwrap();
        let g = f.inverse().unwrap();
        for x in [rat(0), ratio(1, 5), ratio(2, 3), ratio(-11, 7), rat(3)] {
            assert_eq!(g.eval(&f.eval(&x)), x);
            assert_eq!(f.eval(&g.eval(&x)), x);
        }
    }

    #[test]
    fn degenerate_graphs_are_rejected() {
        assert!(CircleLift::pl(vec![]).is_err());
        // Positions out of order.
        assert!(CircleLift::pl(vec![(ratio(1, 2), rat(0)), (rat(0), rat(1))]).is_err());
        // Values not strictly increasing.
        assert!(CircleLift::pl(vec![(rat(0), ratio(1, 2)), (ratio(1, 2), ratio(1, 2))]).is_err());
        // Wrap segment collapses.
        assert!(CircleLift::pl(vec![(rat(0), rat(0)), (ratio(1, 2), rat(1))]).is_err());
        // Position outside the period.
        assert!(CircleLift::pl(vec![(rat(2), rat(0))]).is_err());
    }

    #[test]
    fn tau_of_rotations_is_the_angle() {
        let mode = TauMode::default();
        for (p, q) in [(1i64, 1i64), (2, 5), (-3, 7), (5, 1)] {
            let f = CircleLift::rotation(ratio(p, q));
            let result = translation_number(&f, &mode);
            assert_eq!(result.tau, ratio(p, q));
            assert_eq!(result.error_bound, rat(0));
            assert!(!result.fell_back);
        }
    }

    #[test]
    fn cycle_detection_agrees_with_the_rotation_shortcut() {
        // The same rotation presented as a PL graph goes through the
        // orbit-cycle path.
        let f = CircleLift::pl(vec![(rat(0), ratio(2, 5))]).unwrap();
        let result = translation_number(&f, &TauMode::default());
        assert_eq!(result.tau, ratio(2, 5));
        assert_eq!(result.mode, "exact");
        assert_eq!(result.steps, 5);
    }

    #[test]
    fn quarter_rotation_pl_example_cross_checks() {
        let f = CircleLift::pl(vec![(rat(0), ratio(1, 4)), (ratio(1, 2), ratio(3, 4))]).unwrap();
        let exact = translation_number(&f, &TauMode::default());
        assert_eq!(exact.tau, ratio(1, 4));
        assert_eq!(exact.steps, 4);
        let iter = translation_number(&f, &TauMode::Iterative { iterations: 64 });
        assert!(abs(&(&iter.tau - &exact.tau)) <= iter.error_bound);
        assert_eq!(iter.error_bound, ratio(1, 64));
    }

    #[test]
    fn contracting_map_falls_back_to_the_interval() {
        // Slope 1/2 through the fixed point 1/2: breakpoint orbits halve
        // their distance each step and never exactly cycle.
        let f = CircleLift::pl(vec![(ratio(1, 4), ratio(3, 8)), (ratio(3, 4), ratio(5, 8))]).unwrap();
        assert_eq!(f.eval(&ratio(1, 2)), ratio(1, 2));
        let result = translation_number(&f, &TauMode::Exact { max_steps: 50 });
        assert!(result.fell_back);
        assert_eq!(result.mode, "iterative");
        assert_eq!(result.error_bound, ratio(1, 50));
        // A fixed point pins tau to 0; the interval must contain it.
        assert!(abs(&result.tau) <= result.error_bound);
    }

    #[test]
    fn tau_negates_under_inversion() {
        let f = CircleLift::pl(vec![(rat(0), ratio(1, 4)), (ratio(1, 2), ratio(3, 4))]).unwrap();
        let forward = translation_number(&f, &TauMode::default());
        let backward = translation_number(&f.inverse().unwrap(), &TauMode::default());
        assert_eq!(backward.tau, -forward.tau);
        assert_eq!(backward.error_bound, rat(0));
    }

    #[test]
    fn tau_homogeneity_exact_for_rotations_and_pl() {
        let f = CircleLift::rotation(ratio(2, 5));
        let verdict = tau_homogeneity_check(&f, 3, &TauMode::default()).unwrap();
        assert!(verdict.pass);
        assert_eq!(verdict.tau_of_power.tau, ratio(6, 5));
        assert_eq!(verdict.difference, rat(0));

        let g = CircleLift::pl(vec![(rat(0), ratio(1, 4)), (ratio(1, 2), ratio(3, 4))]).unwrap();
        let verdict = tau_homogeneity_check(&g, -2, &TauMode::default()).unwrap();
        assert!(verdict.pass);
        assert_eq!(verdict.tau_of_power.tau, ratio(-1, 2));

        assert!(tau_homogeneity_check(&f, 0, &TauMode::default()).is_err());
    }

    #[test]
    fn tau_is_conjugation_invariant_in_exact_mode() {
        let f = CircleLift::pl(vec![(rat(0), ratio(1, 4)), (ratio(1, 2), ratio(3, 4))]).unwrap();
        let c = CircleLift::pl(vec![
            (rat(0), rat(0)),
            (ratio(1, 4), ratio(1, 2)),
            (ratio(3, 4), ratio(5, 6)),
        ])
        .unwrap();
        let plain = translation_number(&f, &TauMode::default());
        let conj = translation_number_conjugate(&f, &c, &TauMode::default());
        assert_eq!(conj.tau, plain.tau);
        assert_eq!(conj.error_bound, rat(0));
    }

    #[test]
    fn marked_circle_action_passes_axioms_and_conditions() {
        let (t, act) = third_rotation();
        let report = verify_triple(&t, 5);
        assert!(report.pass, "violations: {:?}", report.violations);
        assert_eq!(report.max_abs_cocycle, rat(0));

        let pres = act.group().clone();
        let g_set = vec![Word::parse(&pres, "a").unwrap(), Word::parse(&pres, "a^-1").unwrap()];
        let mono = check_monotone_conditions(&t, &act, &g_set, 2);
        assert!(mono.pass, "failures: {:?}", mono.failures);
        assert!(mono.pairs_checked > 0);
    }

    #[test]
    fn rotation_action_has_sub_unit_width() {
        let (t, act) = third_rotation();
        let g = Word::parse(act.group(), "a").unwrap();
        let cert = unit_width_certificate(&t, &act, &g).unwrap();
        assert!(cert.width < rat(1));
        assert_eq!(cert.r, ratio(1, 3));
        // Three applications make a full turn: levels shift by exactly 1,
        // keeping the base domain's own width.
        let g3 = Word::parse(act.group(), "a^3").unwrap();
        let cert = unit_width_certificate(&t, &act, &g3).unwrap();
        assert_eq!(cert.width, ratio(2, 3));
        assert_eq!(cert.r, rat(1));
    }

    #[test]
    fn extend_to_line_recovers_the_rotation() {
        let (t, act) = third_rotation();
        let g = Word::parse(act.group(), "a").unwrap();
        let lift = extend_to_line(&t, &act, &g).unwrap();
        let tau = translation_number(&lift, &TauMode::default());
        assert_eq!(tau.tau, ratio(1, 3));
        for x in [rat(0), ratio(1, 6), ratio(5, 3)] {
            assert_eq!(lift.eval(&x), x + ratio(1, 3));
        }
        let identity = Word::identity(act.group());
        let id_lift = extend_to_line(&t, &act, &identity).unwrap();
        assert_eq!(translation_number(&id_lift, &TauMode::default()).tau, rat(0));
    }

    #[test]
    fn pipeline_mu_matches_the_translation_number() {
        let (t, act) = third_rotation();
        let outcome = certify_pipeline(
            &t,
            &act,
            &PipelineBudgets { truncation: 4, g_len: 2, root_points: None, defect_len: 3, extra_alpha: 2 },
        )
        .unwrap();
        assert!(outcome.report.pass);
        let g = Word::parse(act.group(), "a").unwrap();
        let lift = extend_to_line(&t, &act, &g).unwrap();
        let n = 256u64;
        let tau_est = translation_number(&lift, &TauMode::Iterative { iterations: n });
        let g_n = g.pow(n as i64);
        let mu_avg = mu_from_action(&t, &act, &g_n, act.basepoint()).unwrap() / rat(n as i64);
        assert!(abs(&(mu_avg - &tau_est.tau)) <= ratio(1, n as i64));
    }

    #[test]
    fn order_reversal_fails_condition_a_with_witness() {
        let (t, act) = controls::order_reversing_action().unwrap();
        let g_set = vec![Word::parse(act.group(), "a").unwrap()];
        let report = check_monotone_conditions(&t, &act, &g_set, 2);
        assert!(!report.pass);
        assert!(!report.order_ok);
        let failure = report.failures.iter().find(|f| f.condition == "order").unwrap();
        assert!(failure.witness.contains("g = a"));
    }

    #[test]
    fn quarter_bump_fails_condition_c_with_witness() {
        let circle = MarkedCircle::new(vec![rat(0), ratio(1, 2)]).unwrap();
        let t = controls::quarter_bump_triple(&circle);
        let (_, act) = circle_triple_action(&circle, vec![rotation_table(2, 1)], 2).unwrap();
        let g_set = vec![Word::parse(act.group(), "a").unwrap()];
        let report = check_monotone_conditions(&t, &act, &g_set, 2);
        assert!(!report.cocycle_zero);
        let failure = report.failures.iter().find(|f| f.condition == "zero-cocycle").unwrap();
        assert!(failure.detail.contains("1/4"));
    }

    #[test]
    fn constant_density_integrates_to_the_identity_level() {
        let d = Density::constant(rat(1)).unwrap();
        assert_eq!(path_integral_h(&d, &ratio(7, 3)), ratio(7, 3));
        assert_eq!(path_integral_h(&d, &rat(-3)), rat(-3));
        assert_eq!(d.total_mass(), rat(1));
    }

    #[test]
    fn step_density_matches_hand_integration() {
        let d = Density::step(vec![(rat(0), ratio(1, 2)), (ratio(1, 2), ratio(3, 2))]).unwrap();
        assert_eq!(d.total_mass(), rat(1));
        assert_eq!(path_integral_h(&d, &ratio(1, 2)), ratio(1, 4));
        assert_eq!(path_integral_h(&d, &rat(1)), rat(1));
        assert_eq!(path_integral_h(&d, &ratio(3, 4)), ratio(1, 4) + ratio(3, 8));
        assert_eq!(path_integral_h(&d, &ratio(-1, 2)), rat(-1) + ratio(1, 4));
    }

    #[test]
    fn pl_density_trapezoids_are_exact() {
        // Tent from 1/2 at 0 up to 3/2 at 1/2 and back down.
        let d = Density::pl(vec![(rat(0), ratio(1, 2)), (ratio(1, 2), ratio(3, 2))]).unwrap();
        assert_eq!(d.total_mass(), rat(1));
        assert_eq!(path_integral_h(&d, &ratio(1, 2)), ratio(1, 2));
        // Density runs linearly from 1/2 to 1 over [0, 1/4]: area 3/16.
        assert_eq!(path_integral_h(&d, &ratio(1, 4)), ratio(3, 16));
    }

    #[test]
    fn negative_density_is_rejected() {
        let err = Density::step(vec![(rat(0), ratio(-1, 2))]).unwrap_err();
        assert!(matches!(err, Error::NegativeDensity { .. }));
    }

    #[test]
    fn density_triple_validates_and_translation_has_mu_one() {
        let d = Density::step(vec![(rat(0), ratio(1, 2)), (ratio(1, 2), ratio(3, 2))]).unwrap();
        let (t, act) = density_triple_action(&d, 4, 4).unwrap();
        let report = verify_triple(&t, 5);
        assert!(report.pass, "violations: {:?}", report.violations);
        assert_eq!(report.max_abs_cocycle, rat(0));
        let g = Word::parse(act.group(), "a").unwrap();
        assert_eq!(mu_from_action(&t, &act, &g, act.basepoint()).unwrap(), rat(1));
    }

    #[test]
    fn unnormalized_density_is_refused_for_the_triple() {
        let d = Density::constant(rat(2)).unwrap();
        let err = density_triple_action(&d, 4, 4).unwrap_err();
        assert!(matches!(err, Error::DensityNotNormalized { .. }));
    }

    #[test]
    fn rotation_tables_wrap_carries_correctly() {
        let table = rotation_table(3, 1);
        assert_eq!(table, vec![(1, 0), (2, 0), (0, 1)]);
        let back = rotation_table(3, -1);
        assert_eq!(back, vec![(2, -1), (0, 0), (1, 0)]);
        let (_, act) = third_rotation();
        let pres = act.group().clone();
        let g = Word::parse(&pres, "a^3").unwrap();
        let moved = act.try_act(&g, Point::new(0, 0)).unwrap();
        assert_eq!(moved, Point::new(1, 0));
        let back = act.try_act(&Word::parse(&pres, "a^-3").unwrap(), moved).unwrap();
        assert_eq!(back, Point::new(0, 0));
    }
}
