//! The modular group as a free product of cyclics, its normal-form
//! counting quasimorphism of Rademacher type, and the ladder built from it.
//!
//! Elements are words over `S` (order 2) and `R` (order 3); the counting
//! value of a word is the number of `R` letters minus the number of `R^2`
//! letters in its normal form.  Powers are homogenized through the matrix
//! realization: squaring matrices and re-extracting normal forms keeps the
//! word length linear in the entry bit size instead of exponential.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::ladder::{build_embedding, integerize, IntegerizedQm, LadderEmbedding};
use crate::qmcore::{defect_lower_bound_report, DefectReport, HomogenizationResult, Quasimorphism};
use crate::rational::{rat, Rational};
use crate::words::{matrix_of, word_of, FactorOrder, IntMatrix, Presentation, Word};

/// Bound length used to certify the counting quasimorphism's defect.
pub const DEFECT_CERTIFICATE_LENGTH: u32 = 6;
/// Torsion in the modular group has order at most 3 (up to sign 6); powers
/// are probed this far before trusting an element to be non-torsion.
const TORSION_PROBE: u64 = 6;

/// The standard two-generator presentation: an order-2 factor `S` and an
/// order-3 factor `R`.
pub fn standard_presentation() -> Arc<Presentation> {
    static PRES: OnceLock<Arc<Presentation>> = OnceLock::new();
    Arc::clone(PRES.get_or_init(|| {
        Presentation::cyclic_free_product(vec![FactorOrder::Finite(2), FactorOrder::Finite(3)])
            .expect("orders 2, 3 are valid")
    }))
}

fn order_three_generator(pres: &Arc<Presentation>) -> Result<usize> {
    if !pres.has_matrix_realization() {
        return Err(Error::NoMatrixRealization);
    }
    for gen in 0..pres.generator_count() {
        if pres.order_of(gen) == FactorOrder::Finite(3) {
            return Ok(gen);
        }
    }
    Err(Error::NoMatrixRealization)
}

/// `#R - #R^2` over the letters of the normal form.
pub fn rademacher_count(w: &Word) -> i64 {
    let r = match order_three_generator(w.presentation()) {
        Ok(gen) => gen,
        Err(_) => return 0,
    };
    let mut total = 0i64;
    for letter in w.letters() {
        if letter.gen == r {
            match letter.exp {
                1 => total += 1,
                2 => total -= 1,
                _ => {}
            }
        }
    }
    total
}

/// The counting quasimorphism on any presentation realizable in the
/// modular group, with a certified defect bound: twice the exhaustive
/// lower bound over words up to length 6.
pub fn rademacher_qm_on(pres: &Arc<Presentation>) -> Result<Quasimorphism> {
    order_three_generator(pres)?;
    let unclaimed = Quasimorphism::new(
        "rademacher-count",
        pres,
        Arc::new(|w: &Word| rat(rademacher_count(w))),
        None,
    );
    let observed = defect_lower_bound_report(&unclaimed, DEFECT_CERTIFICATE_LENGTH)?.observed;
    Ok(unclaimed.with_claimed_defect(rat(2) * observed))
}

pub fn rademacher_qm() -> Result<Quasimorphism> {
    rademacher_qm_on(&standard_presentation())
}

/// Exhaustive defect lower bound of the counting quasimorphism.
pub fn rademacher_defect(max_length: u32) -> Result<DefectReport> {
    defect_lower_bound_report(&rademacher_qm()?, max_length)
}

fn claimed_defect_bound() -> Rational {
    static BOUND: OnceLock<Rational> = OnceLock::new();
    BOUND
        .get_or_init(|| {
            rademacher_qm()
                .map(|mu| mu.claimed_defect().cloned())
                .ok()
                .flatten()
                .expect("counting quasimorphism carries its certificate")
        })
        .clone()
}

/// Is `m` torsion in the projective group?  Probes small powers; torsion
/// elements are conjugates of `S` or `R` powers, so order at most 3 in the
/// quotient (6 is probed for slack).
pub fn torsion_order(m: &IntMatrix) -> Option<u64> {
    let mut power = m.clone();
    for k in 1..=TORSION_PROBE {
        if power.is_identity() {
            return Some(k);
        }
        power = power.multiply(m);
    }
    None
}

/// Homogenization of the counting quasimorphism at a matrix, backed by
/// matrix squaring with normal forms re-extracted at each doubling.
/// Torsion elements short-circuit to exactly zero: their powers cycle, so
/// the averages vanish identically.
pub fn homogenized_rademacher_matrix(
    m: &IntMatrix,
    doublings: u32,
) -> Result<HomogenizationResult> {
    if doublings == 0 {
        return Err(Error::ZeroDoublings);
    }
    if torsion_order(m).is_some() {
        return Ok(HomogenizationResult {
            value: rat(0),
            error_bound: rat(0),
            iterations: 0,
        });
    }
    let pres = standard_presentation();
    let mut mat = m.clone();
    let mut denom = rat(1);
    let mut value = rat(rademacher_count(&word_of(&pres, &mat)?));
    for _ in 0..doublings {
        mat = mat.multiply(&mat);
        denom *= rat(2);
        value = rat(rademacher_count(&word_of(&pres, &mat)?)) / &denom;
    }
    Ok(HomogenizationResult {
        value,
        error_bound: claimed_defect_bound() / denom,
        iterations: doublings,
    })
}

/// Word-level entry point: converts to the matrix realization first.
pub fn homogenized_rademacher(g: &Word, doublings: u32) -> Result<HomogenizationResult> {
    homogenized_rademacher_matrix(&matrix_of(g)?, doublings)
}

/// Integerization of the counting quasimorphism with reference `S R`
/// (the shortest element with linear count growth).
pub fn integerized_rademacher(doublings: u32) -> Result<IntegerizedQm> {
    let pres = standard_presentation();
    let mu = rademacher_qm_on(&pres)?;
    let g0 = Word::parse(&pres, "S R")?;
    let (iq, _) = integerize(&mu, &g0, doublings, 8)?;
    Ok(iq)
}

/// The ladder picture of the modular group under the counting
/// quasimorphism, feeding the certification pipeline in almost-commutation
/// mode.
pub fn build_psl2z_ladder(max_length: u32, b_g_len: u32) -> Result<LadderEmbedding> {
    let iq = integerized_rademacher(8)?;
    build_embedding(&iq, max_length, b_g_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::{ladder_triple_action, reconstruct_mu};
    use crate::qmcore::homogenize_claimed;
    use crate::rational::abs;
    use crate::triple::{certify_pipeline, PipelineBudgets};
    use crate::words::{enumerate_words, standard_generators};

    fn w(s: &str) -> Word {
        Word::parse(&standard_presentation(), s).unwrap()
    }

    #[test]
    fn counting_values_on_normal_forms() {
        assert_eq!(rademacher_count(&w("1")), 0);
        assert_eq!(rademacher_count(&w("S")), 0);
        assert_eq!(rademacher_count(&w("R")), 1);
        assert_eq!(rademacher_count(&w("R^2")), -1);
        assert_eq!(rademacher_count(&w("S R S R^2")), 0);
        // (S R)^3 normalizes to S R S R S R.
        let srsrsr = w("S R").pow(3);
        assert_eq!(srsrsr.length(), 6);
        assert_eq!(rademacher_count(&srsrsr), 3);
    }

    #[test]
    fn count_is_well_defined_through_the_matrix_round_trip() {
        let pres = standard_presentation();
        for word in enumerate_words(&pres, 6).unwrap() {
            let back = word_of(&pres, &matrix_of(&word).unwrap()).unwrap();
            assert_eq!(
                rademacher_count(&word),
                rademacher_count(&back),
                "word {word} re-extracted as {back}"
            );
        }
    }

    #[test]
    fn counting_rejects_presentations_without_matrices() {
        let free = Presentation::free(2).unwrap();
        assert!(matches!(rademacher_qm_on(&free), Err(Error::NoMatrixRealization)));
    }

    #[test]
    fn defect_grows_monotonically_and_stays_certified() {
        let v2 = rademacher_defect(2).unwrap().observed;
        let v4 = rademacher_defect(4).unwrap().observed;
        assert!(v2 >= rat(0));
        assert!(v4 >= v2);
        // The doubled exhaustive-to-6 certificate survives length 8.
        let claimed = claimed_defect_bound();
        let v8 = rademacher_defect(8).unwrap().observed;
        assert!(v8 <= claimed, "observed {v8} exceeds certificate {claimed}");
    }

    #[test]
    fn torsion_is_detected_and_homogenizes_to_zero() {
        let (s, r) = standard_generators();
        assert_eq!(torsion_order(&s), Some(2));
        assert_eq!(torsion_order(&r), Some(3));
        assert_eq!(torsion_order(&s.multiply(&r)), None);
        for g in ["S", "R", "R^2", "S R S^-1", "R S R^2 S R^2"] {
            let m = matrix_of(&w(g)).unwrap();
            if torsion_order(&m).is_some() {
                let hom = homogenized_rademacher(&w(g), 10).unwrap();
                assert_eq!(hom.value, rat(0), "{g}");
                assert_eq!(hom.error_bound, rat(0), "{g}");
            }
        }
        let hom_s = homogenized_rademacher(&w("S"), 10).unwrap();
        let hom_r = homogenized_rademacher(&w("R"), 10).unwrap();
        assert_eq!(hom_s.value, rat(0));
        assert_eq!(hom_r.value, rat(0));
    }

    #[test]
    fn parabolic_direction_homogenizes_to_one() {
        let hom = homogenized_rademacher(&w("S R"), 12).unwrap();
        assert_eq!(hom.value, rat(1));
        let hom10 = homogenized_rademacher(&w("S R"), 10).unwrap();
        let hom14 = homogenized_rademacher(&w("S R"), 14).unwrap();
        assert_eq!(hom10.value, hom14.value, "stable across budgets");
    }

    #[test]
    fn matrix_squaring_agrees_with_word_homogenization() {
        let mu = rademacher_qm().unwrap();
        for g in ["S R", "S R^2", "R S R"] {
            let by_words = homogenize_claimed(&mu, &w(g), 8).unwrap();
            let by_matrices = homogenized_rademacher(&w(g), 8).unwrap();
            assert_eq!(by_words.value, by_matrices.value, "{g}");
            assert_eq!(by_words.error_bound, by_matrices.error_bound, "{g}");
        }
    }

    #[test]
    fn homogeneity_on_the_same_base() {
        let one = homogenized_rademacher(&w("S R"), 12).unwrap();
        let two = homogenized_rademacher(&w("S R").pow(2), 12).unwrap();
        let diff = abs(&(&two.value - rat(2) * &one.value));
        assert!(diff <= &two.error_bound + rat(2) * &one.error_bound);
    }

    #[test]
    fn homogenization_is_conjugation_invariant_within_bounds() {
        let g = w("S R");
        let base = homogenized_rademacher(&g, 12).unwrap();
        for t in enumerate_words(&standard_presentation(), 4).unwrap() {
            let conj = g.conjugate_by(&t).unwrap();
            let hom = homogenized_rademacher(&conj, 12).unwrap();
            let allowed = &base.error_bound + &hom.error_bound;
            assert!(
                abs(&(&hom.value - &base.value)) <= allowed,
                "conjugator {t}: {} vs {}",
                hom.value,
                base.value
            );
        }
    }

    #[test]
    fn ladder_places_the_small_elements() {
        let e = build_psl2z_ladder(4, 2).unwrap();
        assert_eq!(*e.integerized().scale(), rat(1));
        let psi_r = e.point_of(&w("R")).unwrap();
        assert_eq!(psi_r.level, 1);
        let psi_s = e.point_of(&w("S")).unwrap();
        assert_eq!(psi_s.level, 0);
    }

    #[test]
    fn torsion_orbits_stay_in_a_narrow_window() {
        let e = build_psl2z_ladder(4, 2).unwrap();
        let iq = e.integerized();
        for torsion in ["S", "R", "R^2"] {
            let g = w(torsion);
            let mut power = Word::identity(&standard_presentation());
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for _ in 0..6 {
                power = power.multiply(&g).unwrap();
                let level = iq.level_of(&power).unwrap();
                lo = lo.min(level);
                hi = hi.max(level);
            }
            let width = rat(hi - lo);
            assert!(width <= *e.b_bound(), "{torsion}: window {width} exceeds B");
        }
    }

    #[test]
    fn reconstruction_sees_the_positive_slope() {
        let iq = integerized_rademacher(8).unwrap();
        let report = reconstruct_mu(&iq, &w("S R"), 64).unwrap();
        assert!(report.value > rat(0));
        assert_eq!(report.value, rat(1));
    }

    #[test]
    fn pipeline_output_matches_the_count_at_the_base() {
        let e = build_psl2z_ladder(4, 2).unwrap();
        let (t, act) = ladder_triple_action(&e);
        let budgets = PipelineBudgets {
            truncation: 4,
            g_len: 2,
            root_points: Some(30),
            defect_len: 3,
            extra_alpha: 2,
        };
        let outcome = certify_pipeline(&t, &act, &budgets).unwrap();
        assert!(outcome.report.pass, "report: {:?}", outcome.report);
        for g in ["S", "R", "S R", "R^2 S"] {
            assert_eq!(outcome.qm.eval(&w(g)), rat(rademacher_count(&w(g))), "{g}");
        }
    }
}
