mod common;

use latred::exactmath::{
    determinant, gram_determinant, norm_power, rank, ExactMatrix, ExactScalar, ExactVector, PNorm,
};
use latred::gapsat::reduce_3sat_to_2sat;
use latred::lattice::LatticeBasis;
use latred::reductions::{
    chain_from_2sat, cvp_to_sivp_with_alpha, sat_to_cvp, AlphaChoice, AlphaConfig,
};
use latred::satcore::{
    max_sat_fraction, parse_dimacs_str, Assignment, CnfFormula, GapSatInstance, Promise,
};
use latred::solvers::{decide_sivp, solve_cvp, successive_minima, EnumBudget, SivpAnswer};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

fn scalar() -> impl Strategy<Value = ExactScalar> {
    (-10_000i64..10_000, 1i64..500).prop_map(|(n, d)| ExactScalar::ratio(n, d))
}

fn norm() -> impl Strategy<Value = PNorm> {
    prop_oneof![(1u32..=4).prop_map(PNorm::Finite), Just(PNorm::Infinity),]
}

fn int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, cols), rows)
}

fn to_matrix(rows: &[Vec<i64>]) -> ExactMatrix {
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    ExactMatrix::from_int_rows(&refs)
}

fn lattice(cols: &[Vec<i64>]) -> LatticeBasis {
    let cols: Vec<ExactVector> = cols.iter().map(|c| ExactVector::from_ints(c)).collect();
    LatticeBasis::from_columns(&cols).unwrap()
}

fn formula(n: usize, clauses: &[Vec<i64>]) -> CnfFormula {
    CnfFormula::from_dimacs_clauses(n, clauses).unwrap()
}

/// A random formula in which every variable occurs.
fn covering_clauses(seed: u64, n: usize, m: usize, width: usize) -> Option<Vec<Vec<i64>>> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let clauses = common::random_clauses(&mut rng, n, m, width);
    let covered = (1..=n as i64).all(|v| clauses.iter().flatten().any(|l| l.abs() == v));
    covered.then_some(clauses)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_text_and_json_round_trip(x in scalar()) {
        let back: ExactScalar = x.to_string().parse().unwrap();
        prop_assert_eq!(&back, &x);
        let json = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(serde_json::from_str::<ExactScalar>(&json).unwrap(), x);
    }

    #[test]
    fn scalar_field_identities(a in scalar(), b in scalar()) {
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        if !b.is_zero() {
            prop_assert_eq!(&(&a * &b) / &b, a.clone());
        }
        prop_assert!(a.floor() <= a.ceil());
        prop_assert!(ExactScalar::from_bigint(a.floor()) <= a);
    }

    #[test]
    fn norm_power_is_homogeneous(v in prop::collection::vec(-20i64..20, 1..6), c in -5i64..=5, p in norm()) {
        let x = ExactVector::from_ints(&v);
        let cx = x.scale(&ExactScalar::from_int(c));
        let factor = match p {
            PNorm::Finite(e) => ExactScalar::from_int(c.abs()).pow(e),
            PNorm::Infinity => ExactScalar::from_int(c.abs()),
        };
        prop_assert_eq!(norm_power(&cx, p), factor * norm_power(&x, p));
        prop_assert_eq!(norm_power(&x, p), ExactScalar::from_int(common::norm_pow(&v, p.exponent()) as i64));
    }

    #[test]
    fn rank_and_determinant_survive_transpose(rows in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| int_matrix(r, c))) {
        let m = to_matrix(&rows);
        prop_assert_eq!(rank(&m), rank(&m.transpose()));
        prop_assert!(rank(&m) <= m.rows().min(m.cols()));
        if m.rows() == m.cols() {
            let d = determinant(&m).unwrap();
            prop_assert_eq!(&d, &determinant(&m.transpose()).unwrap());
            let square: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
            prop_assert_eq!(d.clone(), ExactScalar::from_int(common::det_i128(square) as i64));
            if !d.is_zero() {
                prop_assert_eq!(gram_determinant(&m).unwrap(), d.pow(2));
            }
        }
    }

    #[test]
    fn dimacs_round_trip(seed in any::<u64>(), n in 3usize..8, m in 1usize..10) {
        let clauses = {
            let mut rng = SplitMix64::seed_from_u64(seed);
            common::random_clauses(&mut rng, n, m, 3)
        };
        let f = formula(n, &clauses);
        let (normalized, _) = f.normalize();
        let parsed = parse_dimacs_str(&f.to_dimacs()).unwrap();
        prop_assert_eq!(&parsed.formula, &normalized);
        let again = parse_dimacs_str(&parsed.formula.to_dimacs()).unwrap();
        prop_assert_eq!(again.formula, parsed.formula);
    }

    #[test]
    fn gap_instance_json_round_trip(seed in any::<u64>(), d in 0i64..8) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let clauses = common::random_clauses(&mut rng, 4, 5, 2);
        let inst = GapSatInstance::new(formula(4, &clauses), ExactScalar::ratio(d, 8), ExactScalar::one(), Promise::No).unwrap();
        let json = serde_json::to_string(&inst).unwrap();
        prop_assert_eq!(serde_json::from_str::<GapSatInstance>(&json).unwrap(), inst);
    }

    #[test]
    fn max_sat_matches_search_oracle(seed in any::<u64>(), n in 1usize..9, m in 0usize..14, width in 1usize..4) {
        let width = width.min(n);
        let mut rng = SplitMix64::seed_from_u64(seed);
        let clauses = common::random_clauses(&mut rng, n, m, width);
        let best = max_sat_fraction(&formula(n, &clauses)).unwrap();
        prop_assert_eq!(best.satisfied, common::max_sat(n, &clauses));
        prop_assert_eq!(common::satisfied(&clauses, best.assignment.bits()), best.satisfied);
    }

    #[test]
    fn gadget_bookkeeping_on_small_formulas(seed in any::<u64>(), n in 3usize..6, m in 1usize..5) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let clauses = common::random_clauses(&mut rng, n, m, 3);
        let inst = GapSatInstance::new(formula(n, &clauses), ExactScalar::zero(), ExactScalar::one(), Promise::Unknown).unwrap();
        let out = reduce_3sat_to_2sat(&inst).unwrap();
        let out_clauses = out.formula.dimacs_clauses();
        prop_assert_eq!(out_clauses.len(), 10 * m);
        prop_assert_eq!(common::max_sat(n + m, &out_clauses), 6 * m + common::max_sat(n, &clauses));
    }

    #[test]
    fn boolean_points_cost_one_or_three_per_clause(seed in any::<u64>(), n in 2usize..6, extra in 0usize..5, p in 1u32..=3) {
        let Some(clauses) = covering_clauses(seed, n, n + extra, 2) else { return Ok(()); };
        let inst = GapSatInstance::new(formula(n, &clauses), ExactScalar::zero(), ExactScalar::one(), Promise::Unknown).unwrap();
        let Ok(cvp) = sat_to_cvp(&inst, PNorm::Finite(p)) else { return Ok(()); };
        let m = clauses.len();
        for code in 0..1u64 << n {
            let a = Assignment::from_code(code, n);
            let z: Vec<i64> = a.bits().iter().map(|&b| b as i64).collect();
            let diff = cvp.cvp.basis.point(&z).sub(&cvp.cvp.target);
            let s = common::satisfied(&clauses, a.bits());
            let want = s as i64 + (m - s) as i64 * 3i64.pow(p);
            prop_assert_eq!(norm_power(&diff, PNorm::Finite(p)), ExactScalar::from_int(want));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minima_invariant_under_unimodular_change(seed in any::<u64>(), n in 1usize..4, p in norm()) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let cols = common::random_basis(&mut rng, n, n, 4);
        let budget = EnumBudget::default();
        let base = successive_minima(&lattice(&cols), p, &budget).unwrap();
        let mixed = common::unimodular_mix(&mut rng, &cols, 5);
        let other = successive_minima(&lattice(&mixed), p, &budget).unwrap();
        prop_assert_eq!(&base.values_pow, &other.values_pow);
        for w in &base.witnesses {
            prop_assert_eq!(&w.vector, &lattice(&cols).point(&w.coefficients));
        }
    }

    #[test]
    fn minima_scale_with_the_lattice(seed in any::<u64>(), n in 1usize..4, c in 2i64..4, p in norm()) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let cols = common::random_basis(&mut rng, n, n, 4);
        let scaled: Vec<Vec<i64>> = cols.iter().map(|col| col.iter().map(|x| x * c).collect()).collect();
        let budget = EnumBudget::default();
        let base = successive_minima(&lattice(&cols), p, &budget).unwrap();
        let big = successive_minima(&lattice(&scaled), p, &budget).unwrap();
        let factor = match p {
            PNorm::Finite(e) => ExactScalar::from_int(c).pow(e),
            PNorm::Infinity => ExactScalar::from_int(c),
        };
        let expect: Vec<ExactScalar> = base.values_pow.iter().map(|x| x * &factor).collect();
        prop_assert_eq!(big.values_pow, expect);
    }

    #[test]
    fn first_minimum_is_the_shortest_enumerated_vector(seed in any::<u64>(), n in 1usize..4, p in norm()) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let cols = common::random_basis(&mut rng, n + 1, n, 4);
        let radius = cols.iter().map(|c| common::norm_pow(c, p.exponent())).min().unwrap();
        let center = vec![0i64; n + 1];
        let shortest = common::naive_within(&cols, &center, radius, p.exponent())
            .into_iter()
            .map(|(_, np)| np)
            .find(|&np| np > 0)
            .unwrap();
        let minima = successive_minima(&lattice(&cols), p, &EnumBudget::default()).unwrap();
        prop_assert_eq!(minima.values_pow[0].clone(), ExactScalar::from_int(shortest as i64));
    }

    #[test]
    fn cvp_distance_vanishes_exactly_on_the_lattice(seed in any::<u64>(), n in 1usize..4, shift in prop::collection::vec(-1i64..=1, 4), p in norm()) {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let cols = common::random_basis(&mut rng, n + 1, n, 4);
        let b = lattice(&cols);
        let z: Vec<i64> = (0..n as i64).map(|i| i - 1).collect();
        let point = common::combine(&cols, &z);
        let target: Vec<i64> = point.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let t = ExactVector::from_ints(&target);
        let sol = solve_cvp(&b, &t, p, &EnumBudget::default()).unwrap();
        prop_assert_eq!(sol.dist_pow.is_zero(), b.contains(&t));
        prop_assert_eq!(norm_power(&sol.witness.vector.sub(&t), p), sol.dist_pow.clone());
        let on = solve_cvp(&b, &ExactVector::from_ints(&point), p, &EnumBudget::default()).unwrap();
        prop_assert!(on.dist_pow.is_zero());
    }

    #[test]
    fn larger_alpha_keeps_the_separation(seed in any::<u64>(), n in 2usize..5, extra in 0usize..4, p in 1u32..=3, bump in 1i64..4) {
        let Some(clauses) = covering_clauses(seed, n, n + extra, 2) else { return Ok(()); };
        let m = clauses.len();
        let s = common::max_sat(n, &clauses) as i64;
        let mut cases = vec![(ExactScalar::ratio(2 * s - 1, 2 * m as i64), ExactScalar::ratio(s, m as i64), SivpAnswer::Yes)];
        if (s as usize) < m {
            cases.push((ExactScalar::ratio(2 * s + 1, 2 * m as i64), ExactScalar::ratio(s + 1, m as i64), SivpAnswer::No));
        }
        for (delta, epsilon, want) in cases {
            let inst = GapSatInstance::new(formula(n, &clauses), delta, epsilon, Promise::Unknown).unwrap();
            let Ok(chain) = chain_from_2sat(&inst, PNorm::Finite(p), &AlphaConfig::default()) else { return Ok(()); };
            let budget = EnumBudget::default();
            prop_assert_eq!(decide_sivp(&chain.sivp, &budget).unwrap(), want);
            let alpha_rat = &chain.alpha.alpha_rat + &ExactScalar::from_int(bump);
            let bigger = AlphaChoice {
                alpha_rat_pow: alpha_rat.pow(p),
                alpha_rat,
                ..chain.alpha.clone()
            };
            let sivp = cvp_to_sivp_with_alpha(&chain.cvp, &bigger).unwrap();
            prop_assert_eq!(decide_sivp(&sivp, &budget).unwrap(), want);
        }
    }
}
