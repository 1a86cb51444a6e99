//! Ground-truth certification of reduction chains.
//!
//! Each stage is re-solved exactly (MAX-SAT by exhaustion, CVP and successive
//! minima by enumeration) and compared against the promise it is supposed to
//! carry. Inconsistencies come back as [`Violation`]s in the report; they are
//! findings, not errors.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exactmath::{ExactScalar, PNorm};
use crate::lattice::{CvpBoundedInstance, SuccessiveMinima, Witness};
use crate::reductions::{clause_cost, Chain, ChainParams};
use crate::satcore::{max_sat_fraction, GapClass, GapSatInstance, Promise};
use crate::solvers::{decide_sivp, solve_cvp, successive_minima, EnumBudget, SivpAnswer};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedMinimaReport {
    pub lambda_n_pow: ExactScalar,
    /// `τ r^p`.
    pub bound: ExactScalar,
    pub pass: bool,
    pub minima: SuccessiveMinima,
}

/// Checks `λ_n^p <= τ r^p` exactly.
pub fn validate_bounded_minima(
    inst: &CvpBoundedInstance,
    budget: &EnumBudget,
) -> Result<BoundedMinimaReport> {
    let minima = successive_minima(&inst.cvp.basis, inst.cvp.p, budget)?;
    let lambda_n_pow = minima.last().clone();
    let bound = inst.minima_bound();
    Ok(BoundedMinimaReport {
        pass: lambda_n_pow <= bound,
        lambda_n_pow,
        bound,
        minima,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatStageReport {
    pub vars: usize,
    pub clauses: usize,
    pub satisfied: usize,
    pub max_fraction: ExactScalar,
    pub delta: ExactScalar,
    pub epsilon: ExactScalar,
    pub promise: Promise,
    pub class: GapClass,
}

fn sat_stage(inst: &GapSatInstance) -> Result<SatStageReport> {
    let best = max_sat_fraction(&inst.formula)?;
    Ok(SatStageReport {
        vars: inst.formula.num_vars(),
        clauses: inst.formula.num_clauses(),
        satisfied: best.satisfied,
        class: inst.classify(&best.fraction),
        max_fraction: best.fraction,
        delta: inst.delta.clone(),
        epsilon: inst.epsilon.clone(),
        promise: inst.promise,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvpStageReport {
    pub dist_pow: ExactScalar,
    pub closest: Witness,
    /// `m (ε* + (1 - ε*) 3^p)` from the 2-SAT optimum.
    pub predicted_dist_pow: ExactScalar,
    pub r_pow: ExactScalar,
    pub gamma_pow: ExactScalar,
    pub class: GapClass,
    pub lambda_n_pow: ExactScalar,
    /// `τ r^p`.
    pub tau_bound: ExactScalar,
    /// `2^p m`: every basis column has entries in {0, ±2}.
    pub column_bound: ExactScalar,
    pub promise: Promise,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessCase {
    /// The witness does not use the appended `(t, α)` column.
    Lattice,
    /// Coefficient ±1: the vector is `(v - t, ±α)` up to sign, so its norm
    /// power is at least `dist(t, L)^p + α^p`.
    Unit,
    /// |coefficient| >= 2: the last coordinate alone is at least `2α`.
    Multiple,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub index: usize,
    pub last_coefficient: i64,
    pub case: WitnessCase,
    pub norm_pow: ExactScalar,
    /// The lower bound this case guarantees, if any.
    pub lower_bound: Option<ExactScalar>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SivpStageReport {
    pub rank: usize,
    pub expected_rank: usize,
    pub lambda_pows: Vec<ExactScalar>,
    pub witnesses: Vec<Witness>,
    /// `r'^p = r^p + α^p`.
    pub yes_bound: ExactScalar,
    /// `γ^p r^p + α^p`.
    pub no_bound: ExactScalar,
    pub gamma_prime_pow: ExactScalar,
    pub class: GapClass,
    pub decision: SivpAnswer,
    pub witness_checks: Vec<WitnessCheck>,
    pub promise: Promise,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub p: PNorm,
    pub params: ChainParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sat3: Option<SatStageReport>,
    pub sat2: SatStageReport,
    /// `10 m s2*/(10m) == 6m + s3*`, when the chain starts from 3-SAT.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gadget_identity: Option<bool>,
    pub cvp: CvpStageReport,
    pub sivp: SivpStageReport,
    /// Ground-truth class of the source SAT instance; what every later stage
    /// must reproduce.
    pub source_class: GapClass,
    pub violations: Vec<Violation>,
}

impl GapReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Findings(Vec<Violation>);

impl Findings {
    fn check(&mut self, ok: bool, stage: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.0.push(Violation {
                stage: stage.to_string(),
                message: message(),
            });
        }
    }
}

/// Re-solves every stage of `chain` and checks each promise and proved bound.
///
/// YES chains must satisfy `λ'^p <= r^p + α^p`; NO chains
/// `λ'^p >= γ^p r^p + α^p`. Independently of the class, the report checks
/// the gadget identity, the CVP distance identity, the bounded-minima
/// promise, the rank accounting and the case split on the SIVP witnesses.
pub fn check_gap_preservation(chain: &Chain, budget: &EnumBudget) -> Result<GapReport> {
    let mut f = Findings(Vec::new());
    let p = chain.cvp.cvp.p;
    let pe = p.exponent().unwrap_or(1);

    let sat3 = chain.sat3.as_ref().map(sat_stage).transpose()?;
    let sat2 = sat_stage(&chain.sat2)?;

    // SAT stages.
    let gadget_identity = sat3.as_ref().map(|s3| {
        let m = s3.clauses;
        let ok = sat2.satisfied == 6 * m + s3.satisfied && sat2.clauses == 10 * m;
        f.check(ok, "sat2", || {
            format!(
                "gadget identity fails: 10m*maxfrac = {} but 6m + s* = {}",
                sat2.satisfied,
                6 * m + s3.satisfied
            )
        });
        ok
    });
    if let Some(s3) = &sat3 {
        f.check(s3.class.honours(s3.promise), "sat3", || {
            format!(
                "promise {} but the optimum {} is {:?}",
                s3.promise, s3.max_fraction, s3.class
            )
        });
    }
    f.check(sat2.class.honours(sat2.promise), "sat2", || {
        format!(
            "promise {} but the optimum {} is {:?}",
            sat2.promise, sat2.max_fraction, sat2.class
        )
    });
    let source_class = sat3.as_ref().map_or(sat2.class, |s| s.class);
    if sat3.is_some() && source_class != GapClass::Gap {
        f.check(sat2.class == source_class, "sat2", || {
            format!(
                "source is {source_class:?} but the 2-SAT stage is {:?}",
                sat2.class
            )
        });
    }

    // CVP stage.
    let cvp = &chain.cvp;
    let closest = solve_cvp(&cvp.cvp.basis, &cvp.cvp.target, p, budget)?;
    let m2 = ExactScalar::from_int(sat2.clauses as i64);
    let predicted = &m2 * &clause_cost(&sat2.max_fraction, pe);
    f.check(closest.dist_pow == predicted, "cvp", || {
        format!(
            "distance power {} differs from m(ε* + (1-ε*)3^p) = {predicted}",
            closest.dist_pow
        )
    });
    let cvp_class = cvp.cvp.classify(&closest.dist_pow);
    f.check(cvp_class.honours(cvp.cvp.promise), "cvp", || {
        format!(
            "promise {} but the distance power {} is {cvp_class:?}",
            cvp.cvp.promise, closest.dist_pow
        )
    });
    let no_threshold = &cvp.cvp.gamma_pow * &cvp.cvp.r_pow;
    match source_class {
        GapClass::Yes => f.check(closest.dist_pow <= cvp.cvp.r_pow, "cvp", || {
            format!(
                "YES source but distance power {} > r^p = {}",
                closest.dist_pow, cvp.cvp.r_pow
            )
        }),
        GapClass::No => f.check(closest.dist_pow >= no_threshold, "cvp", || {
            format!(
                "NO source but distance power {} < γ^p r^p = {no_threshold}",
                closest.dist_pow
            )
        }),
        GapClass::Gap => {}
    }
    let cvp_minima = successive_minima(&cvp.cvp.basis, p, budget)?;
    let lambda_n_pow = cvp_minima.last().clone();
    let tau_bound = cvp.minima_bound();
    let column_bound = ExactScalar::from_int(2).pow(pe) * &m2;
    f.check(lambda_n_pow <= tau_bound, "cvp", || {
        format!("bounded-minima promise fails: λ_n^p = {lambda_n_pow} > τ r^p = {tau_bound}")
    });
    f.check(lambda_n_pow <= column_bound, "cvp", || {
        format!("λ_n^p = {lambda_n_pow} exceeds 2^p m = {column_bound}")
    });

    // SIVP stage.
    let sivp = &chain.sivp;
    let alpha = &chain.alpha;
    f.check(
        chain.ranks.consistent && sivp.basis.rank() == chain.ranks.expected_sivp_rank,
        "sivp",
        || {
            format!(
                "rank {} differs from the expected {}",
                sivp.basis.rank(),
                chain.ranks.expected_sivp_rank
            )
        },
    );
    f.check(
        alpha.alpha_rat_pow >= alpha.alpha_pow_required,
        "sivp",
        || {
            format!(
                "α^p = {} is below the required {}",
                alpha.alpha_rat_pow, alpha.alpha_pow_required
            )
        },
    );
    let minima = successive_minima(&sivp.basis, p, budget)?;
    let lambda = minima.last().clone();
    let yes_bound = &cvp.cvp.r_pow + &alpha.alpha_rat_pow;
    let no_bound = &no_threshold + &alpha.alpha_rat_pow;
    let sivp_class = sivp.classify(&lambda);
    let decision = decide_sivp(sivp, budget)?;
    f.check(sivp_class.honours(sivp.promise), "sivp", || {
        format!(
            "promise {} but λ'^p = {lambda} is {sivp_class:?}",
            sivp.promise
        )
    });
    match source_class {
        GapClass::Yes => f.check(lambda <= yes_bound, "sivp", || {
            format!("YES source but λ'^p = {lambda} > r^p + α^p = {yes_bound}")
        }),
        GapClass::No => f.check(lambda >= no_bound, "sivp", || {
            format!("NO source but λ'^p = {lambda} < γ^p r^p + α^p = {no_bound}")
        }),
        GapClass::Gap => {}
    }

    let last = sivp.basis.rank() - 1;
    let two_alpha_pow = (ExactScalar::from_int(2) * &alpha.alpha_rat).abs().pow(pe);
    let unit_bound = &closest.dist_pow + &alpha.alpha_rat_pow;
    let mut uses_last = false;
    let witness_checks: Vec<WitnessCheck> = minima
        .witnesses
        .iter()
        .enumerate()
        .map(|(index, w)| {
            let c = w.coefficients[last];
            let (case, lower_bound, holds) = match c.unsigned_abs() {
                0 => (WitnessCase::Lattice, None, true),
                1 => {
                    uses_last = true;
                    let holds = w.norm_pow >= unit_bound
                        && (source_class != GapClass::No || w.norm_pow >= no_bound);
                    (WitnessCase::Unit, Some(unit_bound.clone()), holds)
                }
                _ => {
                    uses_last = true;
                    let last_coord = w.vector[w.vector.len() - 1].abs();
                    let holds = last_coord >= ExactScalar::from_int(2) * alpha.alpha_rat.abs();
                    (WitnessCase::Multiple, Some(two_alpha_pow.clone()), holds)
                }
            };
            WitnessCheck {
                index,
                last_coefficient: c,
                case,
                norm_pow: w.norm_pow.clone(),
                lower_bound,
                holds,
            }
        })
        .collect();
    f.check(uses_last, "sivp", || {
        "no successive-minima witness uses the (t, α) column".to_string()
    });
    for wc in &witness_checks {
        f.check(wc.holds, "sivp", || {
            format!(
                "witness {} (coefficient {} on (t, α)) violates its case bound",
                wc.index, wc.last_coefficient
            )
        });
    }

    Ok(GapReport {
        p,
        params: chain.params(),
        sat3,
        gadget_identity,
        cvp: CvpStageReport {
            predicted_dist_pow: predicted,
            dist_pow: closest.dist_pow.clone(),
            closest: closest.witness,
            r_pow: cvp.cvp.r_pow.clone(),
            gamma_pow: cvp.cvp.gamma_pow.clone(),
            class: cvp_class,
            lambda_n_pow,
            tau_bound,
            column_bound,
            promise: cvp.cvp.promise,
        },
        sat2,
        sivp: SivpStageReport {
            rank: sivp.basis.rank(),
            expected_rank: chain.ranks.expected_sivp_rank,
            lambda_pows: minima.values_pow.clone(),
            witnesses: minima.witnesses,
            yes_bound,
            no_bound,
            gamma_prime_pow: sivp.gamma_pow.clone(),
            class: sivp_class,
            decision,
            witness_checks,
            promise: sivp.promise,
        },
        source_class,
        violations: f.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{ExactMatrix, ExactVector};
    use crate::lattice::{CvpInstance, LatticeBasis};
    use crate::reductions::{chain_from_2sat, full_chain, AlphaConfig};
    use crate::satcore::CnfFormula;

    fn formula(n: usize, clauses: &[&[i64]]) -> CnfFormula {
        let cl: Vec<Vec<i64>> = clauses.iter().map(|c| c.to_vec()).collect();
        CnfFormula::from_dimacs_clauses(n, &cl).unwrap()
    }

    #[test]
    fn bounded_minima_examples() {
        let budget = EnumBudget::default();
        let z2 = LatticeBasis::new(ExactMatrix::identity(2)).unwrap();
        let cvp = CvpInstance::new(
            z2,
            ExactVector::zeros(2),
            ExactScalar::one(),
            PNorm::Finite(2),
            ExactScalar::one(),
            Promise::Unknown,
        )
        .unwrap();
        let ok = CvpBoundedInstance::new(cvp.clone(), ExactScalar::one()).unwrap();
        let r = validate_bounded_minima(&ok, &budget).unwrap();
        assert!(r.pass);
        assert_eq!(r.lambda_n_pow, ExactScalar::one());

        let tight = CvpBoundedInstance::new(cvp, ExactScalar::ratio(1, 2)).unwrap();
        let r = validate_bounded_minima(&tight, &budget).unwrap();
        assert!(!r.pass);
        assert_eq!(r.minima.witnesses.len(), 2);
    }

    #[test]
    fn satisfiable_3cnf_chain_is_yes_consistent() {
        let f = formula(3, &[&[1, 2, 3], &[-1, 2, -3]]);
        let inst = GapSatInstance::new(
            f,
            ExactScalar::ratio(1, 2),
            ExactScalar::one(),
            Promise::Yes,
        )
        .unwrap();
        let chain = full_chain(&inst, PNorm::Finite(2), &AlphaConfig::default()).unwrap();
        let report = check_gap_preservation(&chain, &EnumBudget::default()).unwrap();
        assert!(report.is_consistent(), "{:?}", report.violations);
        assert_eq!(report.source_class, GapClass::Yes);
        assert_eq!(report.gadget_identity, Some(true));
        assert_eq!(report.sivp.decision, SivpAnswer::Yes);
        assert_eq!(report.sivp.rank, 3 + 2 + 1);
    }

    #[test]
    fn contradictory_2cnf_chain_is_no_consistent() {
        // (x1)(¬x1)(x1 ∨ x2)(¬x2): at most 3 of 4 clauses hold.
        let f = formula(2, &[&[1], &[-1], &[1, 2], &[-2]]);
        let inst =
            GapSatInstance::new(f, ExactScalar::ratio(7, 8), ExactScalar::one(), Promise::No)
                .unwrap();
        let chain = chain_from_2sat(&inst, PNorm::Finite(2), &AlphaConfig::default()).unwrap();
        let report = check_gap_preservation(&chain, &EnumBudget::default()).unwrap();
        assert!(report.is_consistent(), "{:?}", report.violations);
        assert_eq!(report.source_class, GapClass::No);
        assert_eq!(report.sivp.decision, SivpAnswer::No);
    }

    #[test]
    fn alpha_below_requirement_is_reported() {
        let f = formula(2, &[&[1], &[-1], &[1, 2], &[-2]]);
        let inst =
            GapSatInstance::new(f, ExactScalar::ratio(7, 8), ExactScalar::one(), Promise::No)
                .unwrap();
        let mut chain = chain_from_2sat(&inst, PNorm::Finite(2), &AlphaConfig::default()).unwrap();
        let mut alpha = chain.alpha.clone();
        alpha.alpha_rat = ExactScalar::ratio(1, 2);
        alpha.alpha_rat_pow = ExactScalar::ratio(1, 4);
        chain.sivp = crate::reductions::cvp_to_sivp_with_alpha(&chain.cvp, &alpha).unwrap();
        chain.alpha = alpha;
        let report = check_gap_preservation(&chain, &EnumBudget::default()).unwrap();
        assert!(!report.is_consistent());
        assert!(report.violations.iter().any(|v| v.stage == "sivp"));
    }
}
