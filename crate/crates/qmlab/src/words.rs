//! Group elements as words in normal form.
//!
//! Two presentation families are supported:
//!
//! - free groups: a word is a sequence of generator powers, adjacent letters
//!   use distinct generators, and length counts `|exponent|` per letter;
//! - free products of cyclic groups: exponents are reduced to the canonical
//!   residues `1..order-1`, adjacent letters come from distinct factors, and
//!   each letter counts 1 toward the length.
//!
//! The order-(2,3) free product is the modular group.  Its elements carry a
//! faithful realization by sign-normalized 2x2 integer matrices of
//! determinant 1 (`matrix_of` / `word_of`): the order-2 generator maps to
//! `[[0,-1],[1,0]]` and the order-3 generator to `[[0,-1],[1,1]]`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Order of one cyclic factor in a free product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorOrder {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PresentationKind {
    Free { rank: usize },
    CyclicFreeProduct { orders: Vec<FactorOrder> },
    /// 2x2 integer matrices modulo sign; words behave exactly like the
    /// order-(2,3) free product, which this group is isomorphic to.
    IntegerMatrixGroup { dimension: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Presentation {
    kind: PresentationKind,
    names: Vec<String>,
}

fn default_free_names(rank: usize) -> Vec<String> {
    (0..rank)
        .map(|i| {
            if rank <= 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("g{i}")
            }
        })
        .collect()
}

fn validate_names(names: &[String]) -> Result<()> {
    for n in names {
        if n.is_empty()
            || n == "1"
            || n.contains(char::is_whitespace)
            || n.contains('^')
            || n.contains('-')
        {
            return Err(Error::Config(format!("invalid generator name {n:?}")));
        }
    }
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Config(format!("duplicate generator name {n:?}")));
        }
    }
    Ok(())
}

impl Presentation {
    pub fn free(rank: usize) -> Result<Arc<Self>> {
        Self::free_named(default_free_names(rank))
    }

    pub fn free_named(names: Vec<String>) -> Result<Arc<Self>> {
        if names.is_empty() {
            return Err(Error::Config("a presentation needs at least one generator".into()));
        }
        validate_names(&names)?;
        Ok(Arc::new(Presentation {
            kind: PresentationKind::Free { rank: names.len() },
            names,
        }))
    }

    pub fn cyclic_free_product(orders: Vec<FactorOrder>) -> Result<Arc<Self>> {
        let names = if orders == [FactorOrder::Finite(2), FactorOrder::Finite(3)] {
            vec!["S".to_string(), "R".to_string()]
        } else {
            (0..orders.len()).map(|i| format!("t{}", i + 1)).collect()
        };
        Self::cyclic_free_product_named(orders, names)
    }

    pub fn cyclic_free_product_named(orders: Vec<FactorOrder>, names: Vec<String>) -> Result<Arc<Self>> {
        if orders.is_empty() {
            return Err(Error::Config("a presentation needs at least one generator".into()));
        }
        if orders.len() != names.len() {
            return Err(Error::Config("one name per cyclic factor".into()));
        }
        if let Some(FactorOrder::Finite(0)) = orders.iter().find(|o| matches!(o, FactorOrder::Finite(0))) {
            return Err(Error::Config("cyclic factor orders must be strictly positive".into()));
        }
        validate_names(&names)?;
        Ok(Arc::new(Presentation {
            kind: PresentationKind::CyclicFreeProduct { orders },
            names,
        }))
    }

    /// The 2x2 integer-matrix group modulo sign, presented on the standard
    /// order-2 and order-3 generators.
    pub fn integer_matrix_group(dimension: usize) -> Result<Arc<Self>> {
        if dimension != 2 {
            return Err(Error::NoMatrixRealization);
        }
        Ok(Arc::new(Presentation {
            kind: PresentationKind::IntegerMatrixGroup { dimension },
            names: vec!["S".to_string(), "R".to_string()],
        }))
    }

    pub fn kind(&self) -> &PresentationKind {
        &self.kind
    }

    pub fn generator_count(&self) -> usize {
        self.names.len()
    }

    pub fn generator_names(&self) -> &[String] {
        &self.names
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, PresentationKind::Free { .. })
    }

    /// Order of the cyclic subgroup generated by one generator.
    pub fn order_of(&self, gen: usize) -> FactorOrder {
        match &self.kind {
            PresentationKind::Free { .. } => FactorOrder::Infinite,
            PresentationKind::CyclicFreeProduct { orders } => orders[gen],
            PresentationKind::IntegerMatrixGroup { .. } => {
                [FactorOrder::Finite(2), FactorOrder::Finite(3)][gen]
            }
        }
    }

    pub fn has_matrix_realization(&self) -> bool {
        match &self.kind {
            PresentationKind::IntegerMatrixGroup { dimension } => *dimension == 2,
            PresentationKind::CyclicFreeProduct { orders } => {
                orders.as_slice() == [FactorOrder::Finite(2), FactorOrder::Finite(3)]
            }
            PresentationKind::Free { .. } => false,
        }
    }

    /// Canonical exponent residue; 0 means the letter is trivial.
    fn canonical_exp(&self, gen: usize, exp: i64) -> i64 {
        match self.order_of(gen) {
            FactorOrder::Infinite => exp,
            FactorOrder::Finite(o) => exp.rem_euclid(o as i64),
        }
    }

    fn generator_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownGenerator { name: name.to_string() })
    }
}

/// One normal-form letter: a generator power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: usize,
    pub exp: i64,
}

/// A group element in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pres: Arc<Presentation>,
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity(pres: &Arc<Presentation>) -> Self {
        Word { pres: Arc::clone(pres), letters: Vec::new() }
    }

    pub fn generator(pres: &Arc<Presentation>, gen: usize) -> Result<Self> {
        if gen >= pres.generator_count() {
            return Err(Error::Config(format!("no generator with index {gen}")));
        }
        let mut w = Word::identity(pres);
        w.push(gen, 1);
        Ok(w)
    }

    /// Parses whitespace-separated letters like `"S R^2 S"` or `"a b^-1"`.
    /// `"1"` and the empty string denote the identity.  Input need not be in
    /// normal form; the result always is.
    pub fn parse(pres: &Arc<Presentation>, input: &str) -> Result<Self> {
        let mut w = Word::identity(pres);
        let trimmed = input.trim();
        if trimmed.is_empty() || trimmed == "1" {
            return Ok(w);
        }
        for token in trimmed.split_whitespace() {
            let (name, exp) = match token.split_once('^') {
                None => (token, 1),
                Some((name, e)) => {
                    let exp = e.parse::<i64>().map_err(|_| Error::WordParse {
                        input: input.to_string(),
                        reason: format!("bad exponent in {token:?}"),
                    })?;
                    (name, exp)
                }
            };
            match pres.generator_index(name) {
                Ok(gen) => w.push(gen, exp),
                Err(err) => {
                    // Single-character names may be run together, as in
                    // "ab"; the exponent binds to the last letter.
                    let gens: Option<Vec<usize>> = name
                        .chars()
                        .map(|c| pres.generator_index(&c.to_string()).ok())
                        .collect();
                    match gens {
                        Some(gens) if gens.len() >= 2 => {
                            for &g in &gens[..gens.len() - 1] {
                                w.push(g, 1);
                            }
                            w.push(*gens.last().expect("len >= 2"), exp);
                        }
                        _ => return Err(err),
                    }
                }
            }
        }
        Ok(w)
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Normal-form length: `|exponent|` per letter in free groups, one per
    /// letter in free products.
    pub fn length(&self) -> usize {
        if self.pres.is_free() {
            self.letters.iter().map(|l| l.exp.unsigned_abs() as usize).sum()
        } else {
            self.letters.len()
        }
    }

    /// Appends one generator power, restoring normal form.
    fn push(&mut self, gen: usize, exp: i64) {
        let exp = self.pres.canonical_exp(gen, exp);
        if exp == 0 {
            return;
        }
        if let Some(last) = self.letters.last_mut() {
            if last.gen == gen {
                let combined = self.pres.canonical_exp(gen, last.exp + exp);
                if combined == 0 {
                    self.letters.pop();
                } else {
                    last.exp = combined;
                }
                return;
            }
        }
        self.letters.push(Letter { gen, exp });
    }

    pub fn multiply(&self, other: &Word) -> Result<Word> {
        if self.pres != other.pres {
            return Err(Error::PresentationMismatch {
                left: self.pres.describe(),
                right: other.pres.describe(),
            });
        }
        let mut out = self.clone();
        for l in &other.letters {
            out.push(l.gen, l.exp);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Word {
        let mut out = Word::identity(&self.pres);
        for l in self.letters.iter().rev() {
            out.push(l.gen, -l.exp);
        }
        out
    }

    /// `self^n` by binary exponentiation on normal forms.
    pub fn pow(&self, n: i64) -> Word {
        if n < 0 {
            return self.inverse().pow(-n);
        }
        let mut result = Word::identity(&self.pres);
        let mut base = self.clone();
        let mut n = n as u64;
        while n > 0 {
            if n & 1 == 1 {
                result = result.multiply(&base).expect("same presentation");
            }
            n >>= 1;
            if n > 0 {
                base = base.multiply(&base).expect("same presentation");
            }
        }
        result
    }

    pub fn conjugate_by(&self, t: &Word) -> Result<Word> {
        t.multiply(self)?.multiply(&t.inverse())
    }

    /// The word flattened into single letters: `(gen, +-1)` repeated
    /// `|exponent|` times for free groups, `(gen, residue)` for products.
    pub fn single_letters(&self) -> Vec<(usize, i64)> {
        let mut out = Vec::with_capacity(self.length());
        for l in &self.letters {
            if self.pres.is_free() {
                let s = l.exp.signum();
                for _ in 0..l.exp.unsigned_abs() {
                    out.push((l.gen, s));
                }
            } else {
                out.push((l.gen, l.exp));
            }
        }
        out
    }

    /// Shortlex order: by length, then lexicographically on single letters
    /// with `(gen asc, positive before negative / residue asc)`.
    pub fn shortlex_cmp(&self, other: &Word) -> std::cmp::Ordering {
        fn key(l: (usize, i64)) -> (usize, i64) {
            // +1 sorts before -1; residues sort ascending already.
            let (g, e) = l;
            if e == -1 {
                (g, i64::MAX)
            } else {
                (g, e)
            }
        }
        self.length()
            .cmp(&other.length())
            .then_with(|| {
                let a = self.single_letters();
                let b = other.single_letters();
                a.into_iter().map(key).cmp(b.into_iter().map(key))
            })
    }
}

impl Presentation {
    fn describe(&self) -> String {
        match &self.kind {
            PresentationKind::Free { rank } => format!("free group of rank {rank}"),
            PresentationKind::CyclicFreeProduct { orders } => {
                let parts: Vec<String> = orders
                    .iter()
                    .map(|o| match o {
                        FactorOrder::Finite(n) => n.to_string(),
                        FactorOrder::Infinite => "inf".to_string(),
                    })
                    .collect();
                format!("free product of cyclic groups of orders [{}]", parts.join(", "))
            }
            PresentationKind::IntegerMatrixGroup { dimension } => {
                format!("integer matrix group of dimension {dimension}")
            }
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for l in &self.letters {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let name = &self.pres.generator_names()[l.gen];
            if l.exp == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{}", l.exp)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// All normal-form words of length at most `max_length`, in shortlex order,
/// beginning with the identity.  Fails for free products with an
/// infinite-order factor, where length classes are infinite.
pub fn enumerate_words(pres: &Arc<Presentation>, max_length: u32) -> Result<Vec<Word>> {
    let alphabet = letter_alphabet(pres)?;
    let mut out = vec![Word::identity(pres)];
    let mut level = vec![Word::identity(pres)];
    for _ in 0..max_length {
        let mut next = Vec::new();
        for w in &level {
            for &(gen, exp) in &alphabet {
                if can_extend(w, gen, exp) {
                    let mut e = w.clone();
                    e.push(gen, exp);
                    next.push(e);
                }
            }
        }
        out.extend(next.iter().cloned());
        level = next;
        if level.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Single letters in shortlex order.
fn letter_alphabet(pres: &Arc<Presentation>) -> Result<Vec<(usize, i64)>> {
    let mut alphabet = Vec::new();
    for gen in 0..pres.generator_count() {
        match pres.order_of(gen) {
            FactorOrder::Infinite if pres.is_free() => {
                alphabet.push((gen, 1));
                alphabet.push((gen, -1));
            }
            FactorOrder::Infinite => return Err(Error::InfiniteEnumeration { factor: gen }),
            FactorOrder::Finite(o) => {
                for e in 1..o as i64 {
                    alphabet.push((gen, e));
                }
            }
        }
    }
    Ok(alphabet)
}

/// True when appending the letter extends the normal form by one letter
/// (no cancellation, no merge into a shorter or equal form).
fn can_extend(w: &Word, gen: usize, exp: i64) -> bool {
    match w.letters.last() {
        None => true,
        Some(last) if last.gen != gen => true,
        Some(last) => w.pres.is_free() && last.exp.signum() == exp.signum(),
    }
}

/// A 2x2 integer matrix of determinant 1, modulo sign.  The stored
/// representative has its first nonzero first-column entry positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    entries: [BigInt; 4], // row-major: a b / c d
}

impl IntMatrix {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        let det = &a * &d - &b * &c;
        if !det.is_one() {
            return Err(Error::NonUnimodular { det: det.to_string() });
        }
        Ok(Self::normalized([a, b, c, d]))
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(BigInt::from(a), BigInt::from(b), BigInt::from(c), BigInt::from(d))
    }

    fn normalized(mut e: [BigInt; 4]) -> Self {
        let flip = if !e[0].is_zero() {
            e[0].is_negative()
        } else {
            e[2].is_negative()
        };
        if flip {
            for x in &mut e {
                *x = -std::mem::take(x);
            }
        }
        IntMatrix { entries: e }
    }

    pub fn identity() -> Self {
        IntMatrix {
            entries: [BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one()],
        }
    }

    pub fn is_identity(&self) -> bool {
        let [a, b, c, d] = &self.entries;
        a.is_one() && b.is_zero() && c.is_zero() && d.is_one()
    }

    pub fn entries(&self) -> &[BigInt; 4] {
        &self.entries
    }

    pub fn multiply(&self, other: &IntMatrix) -> IntMatrix {
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &other.entries;
        IntMatrix::normalized([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    pub fn pow(&self, n: u64) -> IntMatrix {
        let mut result = IntMatrix::identity();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.multiply(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.multiply(&base);
            }
        }
        result
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.entries;
        write!(f, "[[{a}, {b}], [{c}, {d}]]")
    }
}

/// The order-2 and order-3 matrices realizing the two factors.
pub fn standard_generators() -> (IntMatrix, IntMatrix) {
    let s = IntMatrix::from_i64(0, -1, 1, 0).expect("det 1");
    let r = IntMatrix::from_i64(0, -1, 1, 1).expect("det 1");
    (s, r)
}

/// Realizes a word of the order-(2,3) free product as an integer matrix.
pub fn matrix_of(w: &Word) -> Result<IntMatrix> {
    if !w.presentation().has_matrix_realization() {
        return Err(Error::NoMatrixRealization);
    }
    let (s, r) = standard_generators();
    let mut m = IntMatrix::identity();
    for l in w.letters() {
        let base = match l.gen {
            0 => &s,
            _ => &r,
        };
        for _ in 0..l.exp {
            m = m.multiply(base);
        }
    }
    Ok(m)
}

/// Recovers the normal-form word of a determinant-1 matrix by running the
/// Euclidean algorithm on its first column.  Inverse of `matrix_of`.
pub fn word_of(pres: &Arc<Presentation>, m: &IntMatrix) -> Result<Word> {
    if !pres.has_matrix_realization() {
        return Err(Error::NoMatrixRealization);
    }
    let s_word = Word::generator(pres, 0)?;
    let r_word = Word::generator(pres, 1)?;
    // T = [[1,1],[0,1]] = S R, the unit translation.
    let t_word = s_word.multiply(&r_word)?;

    let [mut a, mut b, mut c, mut d] = m.entries().clone();
    let mut out = Word::identity(pres);
    loop {
        if c.is_zero() {
            // a d = 1 with integer entries, so a = d = +-1 and the matrix
            // is T^b up to sign.
            let exp = if a.is_one() { b.clone() } else { -b.clone() };
            let exp_i64 = i64::try_from(&exp).map_err(|_| Error::Config(
                "translation exponent exceeds i64 range".into(),
            ))?;
            out = out.multiply(&t_word.pow(exp_i64))?;
            return Ok(out);
        }
        // Peel T^q S from the left; the first-column remainder shrinks.
        let (q, _) = a.div_mod_floor(&c);
        let q_i64 = i64::try_from(&q)
            .map_err(|_| Error::Config("translation exponent exceeds i64 range".into()))?;
        out = out.multiply(&t_word.pow(q_i64))?.multiply(&s_word)?;
        let a1 = &a - &q * &c;
        let b1 = &b - &q * &d;
        (a, b, c, d) = (c, d, -a1, -b1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn f2() -> Arc<Presentation> {
        Presentation::free(2).unwrap()
    }

    fn z2z3() -> Arc<Presentation> {
        Presentation::cyclic_free_product(vec![FactorOrder::Finite(2), FactorOrder::Finite(3)])
            .unwrap()
    }

    fn w(p: &Arc<Presentation>, s: &str) -> Word {
        Word::parse(p, s).unwrap()
    }

    #[test]
    fn torsion_relations_collapse() {
        let p = z2z3();
        let s = w(&p, "S");
        assert!(s.multiply(&s).unwrap().is_identity());
        let r = w(&p, "R");
        assert!(r.pow(3).is_identity());
        assert_eq!(r.pow(2), w(&p, "R^2"));
        assert_eq!(r.pow(-1), w(&p, "R^2"));
    }

    #[test]
    fn free_reduction_cancels_across_the_junction() {
        let p = f2();
        let ab = w(&p, "a b");
        let b_inv_a = w(&p, "b^-1 a");
        assert_eq!(ab.multiply(&b_inv_a).unwrap(), w(&p, "a^2"));
        let u = w(&p, "a b a^-1");
        assert!(u.multiply(&u.inverse()).unwrap().is_identity());
    }

    #[test]
    fn inverse_of_mixed_word() {
        let p = z2z3();
        assert_eq!(w(&p, "S R").inverse(), w(&p, "R^2 S"));
        let p2 = f2();
        assert_eq!(w(&p2, "a b^-1").inverse(), w(&p2, "b a^-1"));
    }

    #[test]
    fn parse_normalizes_and_round_trips() {
        let p = z2z3();
        assert!(w(&p, "S S").is_identity());
        assert_eq!(w(&p, "R^-1"), w(&p, "R^2"));
        assert_eq!(w(&p, "1"), Word::identity(&p));
        let x = w(&p, "S R^2 S");
        assert_eq!(x.to_string(), "S R^2 S");
        assert_eq!(Word::parse(&p, &x.to_string()).unwrap(), x);
        let q = f2();
        let y = w(&q, "a^3 b^-2");
        assert_eq!(Word::parse(&q, &y.to_string()).unwrap(), y);
    }

    #[test]
    fn parse_accepts_run_together_letters() {
        let p = f2();
        assert_eq!(w(&p, "ab"), w(&p, "a b"));
        assert_eq!(w(&p, "ab^2"), w(&p, "a b^2"));
        assert_eq!(w(&p, "aba"), w(&p, "a b a"));
        assert!(Word::parse(&p, "ac").is_err());
        let q = z2z3();
        assert_eq!(w(&q, "SR"), w(&q, "S R"));
    }

    #[test]
    fn lengths_follow_the_convention() {
        assert_eq!(w(&f2(), "a^3 b^-2").length(), 5);
        assert_eq!(w(&z2z3(), "S R^2 S").length(), 3);
        assert_eq!(Word::identity(&f2()).length(), 0);
    }

    #[test]
    fn enumerate_free_rank_two_through_length_one() {
        let p = f2();
        let words = enumerate_words(&p, 1).unwrap();
        let shown: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, vec!["1", "a", "a^-1", "b", "b^-1"]);
    }

    /// Independent oracle: generate every string over the single-letter
    /// alphabet, reduce through multiplication, and deduplicate.
    fn brute_force_elements(p: &Arc<Presentation>, max_len: u32) -> HashSet<Word> {
        let alphabet = letter_alphabet(p).unwrap();
        let mut frontier = vec![Word::identity(p)];
        let mut seen: HashSet<Word> = frontier.iter().cloned().collect();
        for _ in 0..max_len {
            let mut next = Vec::new();
            for wd in &frontier {
                for &(gen, exp) in &alphabet {
                    let mut e = wd.clone();
                    e.push(gen, exp);
                    next.push(e);
                }
            }
            for e in &next {
                seen.insert(e.clone());
            }
            frontier = next;
        }
        // Only keep elements whose normal form fits the budget: longer
        // strings can reduce into it, shorter ones cannot leave it.
        seen.into_iter().filter(|w| w.length() <= max_len as usize).collect()
    }

    #[test]
    fn enumerate_matches_brute_force_dedup_oracle() {
        let p = z2z3();
        let words = enumerate_words(&p, 2).unwrap();
        // Letters: S, R, R^2; alternation leaves SR, SR^2, RS, R^2 S at
        // length two, so 1 + 3 + 4 elements in total.
        assert_eq!(words.len(), 8);
        let oracle = brute_force_elements(&p, 2);
        assert_eq!(oracle.len(), 8);
        let listed: HashSet<Word> = words.iter().cloned().collect();
        assert_eq!(listed, oracle);

        let q = f2();
        let words = enumerate_words(&q, 3).unwrap();
        let oracle = brute_force_elements(&q, 3);
        assert_eq!(words.len(), oracle.len());
        assert_eq!(words.iter().cloned().collect::<HashSet<_>>(), oracle);
    }

    #[test]
    fn enumerate_is_shortlex_sorted_without_duplicates() {
        for p in [f2(), z2z3()] {
            let words = enumerate_words(&p, 5).unwrap();
            assert!(words[0].is_identity());
            for pair in words.windows(2) {
                assert_eq!(pair[0].shortlex_cmp(&pair[1]), std::cmp::Ordering::Less);
            }
            let set: HashSet<_> = words.iter().cloned().collect();
            assert_eq!(set.len(), words.len());
        }
    }

    #[test]
    fn enumerate_closed_under_inversion_within_length() {
        for p in [f2(), z2z3()] {
            let words = enumerate_words(&p, 5).unwrap();
            let set: HashSet<_> = words.iter().cloned().collect();
            for wd in &words {
                let inv = wd.inverse();
                assert_eq!(inv.length(), wd.length());
                assert!(set.contains(&inv));
            }
        }
    }

    #[test]
    fn enumerate_rejects_infinite_factors() {
        let p = Presentation::cyclic_free_product(vec![
            FactorOrder::Finite(2),
            FactorOrder::Infinite,
        ])
        .unwrap();
        assert!(matches!(
            enumerate_words(&p, 2),
            Err(Error::InfiniteEnumeration { factor: 1 })
        ));
    }

    #[test]
    fn associativity_spot_check() {
        let p = z2z3();
        let words = enumerate_words(&p, 4).unwrap();
        for x in &words {
            for y in &words {
                let xy = x.multiply(y).unwrap();
                for z in &words {
                    let left = xy.multiply(z).unwrap();
                    let right = x.multiply(&y.multiply(z).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn mismatched_presentations_refuse_to_multiply() {
        let a = w(&f2(), "a");
        let s = w(&z2z3(), "S");
        assert!(matches!(
            a.multiply(&s),
            Err(Error::PresentationMismatch { .. })
        ));
    }

    #[test]
    fn matrix_of_standard_generators() {
        let p = z2z3();
        let m_s = matrix_of(&w(&p, "S")).unwrap();
        assert_eq!(m_s, IntMatrix::from_i64(0, -1, 1, 0).unwrap());
        let m_r = matrix_of(&w(&p, "R")).unwrap();
        assert_eq!(m_r, IntMatrix::from_i64(0, -1, 1, 1).unwrap());
        // R^3 = -I, the identity modulo sign.
        assert!(m_r.pow(3).is_identity());
        // S R is the unit translation after sign normalization.
        let t = matrix_of(&w(&p, "S R")).unwrap();
        assert_eq!(t, IntMatrix::from_i64(1, 1, 0, 1).unwrap());
    }

    #[test]
    fn matrix_of_kills_inverses() {
        let p = z2z3();
        for input in ["S R S", "R^2 S R", "S R^2 S R S"] {
            let x = w(&p, input);
            let prod = x.multiply(&x.inverse()).unwrap();
            assert!(matrix_of(&prod).unwrap().is_identity());
            let direct = matrix_of(&x).unwrap().multiply(&matrix_of(&x.inverse()).unwrap());
            assert!(direct.is_identity());
        }
    }

    #[test]
    fn word_of_round_trips_exhaustively_to_length_eight() {
        let p = z2z3();
        for wd in enumerate_words(&p, 8).unwrap() {
            let m = matrix_of(&wd).unwrap();
            let back = word_of(&p, &m).unwrap();
            assert_eq!(back, wd, "round trip failed for {wd}");
            assert_eq!(matrix_of(&back).unwrap(), m);
        }
    }

    #[test]
    fn word_of_translation_powers() {
        let p = z2z3();
        let t = IntMatrix::from_i64(1, 17, 0, 1).unwrap();
        let word = word_of(&p, &t).unwrap();
        assert_eq!(word, w(&p, "S R").pow(17));
        let t_neg = IntMatrix::from_i64(1, -4, 0, 1).unwrap();
        assert_eq!(word_of(&p, &t_neg).unwrap(), w(&p, "S R").pow(-4));
    }

    #[test]
    fn word_of_rejects_non_unimodular() {
        assert!(matches!(
            IntMatrix::from_i64(2, 0, 0, 1),
            Err(Error::NonUnimodular { .. })
        ));
    }

    #[test]
    fn sign_normalization_identifies_negatives() {
        let m = IntMatrix::from_i64(-1, -7, 0, -1).unwrap();
        assert_eq!(m, IntMatrix::from_i64(1, 7, 0, 1).unwrap());
        let n = IntMatrix::from_i64(0, 1, -1, 0).unwrap();
        assert_eq!(n, IntMatrix::from_i64(0, -1, 1, 0).unwrap());
    }

    #[test]
    fn free_rank_one_is_the_integers() {
        let p = Presentation::free(1).unwrap();
        let words = enumerate_words(&p, 3).unwrap();
        assert_eq!(words.len(), 7); // 1, a^{+-1}, a^{+-2}, a^{+-3}
        let a = w(&p, "a");
        assert_eq!(a.pow(5).to_string(), "a^5");
        assert_eq!(a.pow(5).length(), 5);
    }
}
