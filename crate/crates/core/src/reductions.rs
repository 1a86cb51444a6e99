//! Gap-2SAT to bounded-minima CVP, bounded-minima CVP to gap-SIVP, and the
//! full chain starting from Gap-3SAT.
//!
//! Every parameter is carried exactly as a p-th power. The one irrational
//! quantity, `α`, is replaced by an upward-rounded rational (see
//! [`AlphaChoice`]), and every derived threshold is computed from that
//! rational rather than from the ideal value.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{ExactMatrix, ExactScalar, ExactVector, PNorm};
use crate::gapsat::reduce_3sat_to_2sat;
use crate::lattice::{CvpBoundedInstance, CvpInstance, LatticeBasis, SivpInstance};
use crate::satcore::GapSatInstance;

fn finite_exponent(p: PNorm) -> Result<u32> {
    p.exponent().ok_or_else(|| {
        Error::InvalidParameter("the lattice reductions are defined for finite p only".into())
    })
}

/// `x + (1 - x) 3^p`: the per-clause l_p cost averaged over a fraction `x`
/// of satisfied clauses, where satisfied rows contribute 1 and others 3^p.
pub fn clause_cost(fraction: &ExactScalar, p: u32) -> ExactScalar {
    let three_p = ExactScalar::from_int(3).pow(p);
    fraction + &((ExactScalar::one() - fraction) * three_p)
}

/// Builds the bounded-minima CVP instance of a width-2 gap instance.
///
/// Row `i` of the basis has `2` in column `j` when clause `i` contains `x_j`
/// and `-2` when it contains `¬x_j`; the target is `t_i = 3 - 2η_i` with
/// `η_i` the number of negated literals. A boolean `x` then gives
/// `|(Bx - t)_i| = 1` for satisfied clauses and `3` otherwise.
pub fn sat_to_cvp(inst: &GapSatInstance, p: PNorm) -> Result<CvpBoundedInstance> {
    let pe = finite_exponent(p)?;
    let f = &inst.formula;
    let (m, n) = (f.num_clauses(), f.num_vars());
    if m == 0 {
        return Err(Error::InvalidFormula("formula has no clauses".into()));
    }
    let mut rows = Vec::with_capacity(m);
    let mut target = Vec::with_capacity(m);
    for (i, clause) in f.clauses().iter().enumerate() {
        if clause.is_empty() || clause.len() > 2 {
            return Err(Error::Width {
                clause: i,
                reason: format!("expected 1 or 2 literals, found {}", clause.len()),
            });
        }
        let mut row = vec![ExactScalar::zero(); n];
        for lit in clause.literals() {
            row[lit.var - 1] = ExactScalar::from_int(if lit.negated { -2 } else { 2 });
        }
        rows.push(row);
        target.push(ExactScalar::from_int(3 - 2 * clause.negations() as i64));
    }
    let basis = LatticeBasis::new(ExactMatrix::from_rows(rows)?)?;

    let cost_eps = clause_cost(&inst.epsilon, pe);
    let cost_delta = clause_cost(&inst.delta, pe);
    let r_pow = ExactScalar::from_int(m as i64) * &cost_eps;
    let gamma_pow = &cost_delta / &cost_eps;
    let tau = ExactScalar::from_int(2).pow(pe) / &cost_eps;
    let cvp = CvpInstance::new(
        basis,
        ExactVector::new(target),
        r_pow,
        p,
        gamma_pow,
        inst.promise,
    )?;
    CvpBoundedInstance::new(cvp, tau)
}

/// How `α` is rounded to a rational.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaConfig {
    /// Initial denominator `D` (a positive integer); `α` is taken of the form `k / D`.
    pub denominator: ExactScalar,
    /// Allowed relative excess of the rounded `α^p` over the required value.
    pub slack: ExactScalar,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        AlphaConfig {
            denominator: ExactScalar::from_int(1_000_000),
            slack: ExactScalar::ratio(1, 1_000_000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaChoice {
    /// `max(r^p (τ - 1), γ^p r^p / (2^p - 1))`.
    pub alpha_pow_required: ExactScalar,
    /// The rational placed in the basis.
    pub alpha_rat: ExactScalar,
    pub alpha_rat_pow: ExactScalar,
    /// Denominator actually used; larger than the configured one only when
    /// the slack bound forced a refinement.
    pub denominator: ExactScalar,
}

/// Smallest `k >= 0` with `(k / denom)^p >= target`, by binary search on `k`.
fn smallest_numerator(target: &ExactScalar, denom: &BigInt, p: u32) -> BigInt {
    let d = ExactScalar::from_bigint(denom.clone());
    let ok = |k: &BigInt| (ExactScalar::from_bigint(k.clone()) / &d).pow(p) >= *target;
    let mut hi = BigInt::one();
    while !ok(&hi) {
        hi <<= 1;
    }
    let mut lo = BigInt::zero();
    if ok(&lo) {
        return lo;
    }
    // Invariant: !ok(lo), ok(hi).
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1;
        if ok(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Chooses `α` for [`cvp_to_sivp`]. `α^p` must dominate both `r^p (τ - 1)`
/// (keeps the lattice minima below the new radius) and `γ^p r^p / (2^p - 1)`
/// (makes coefficients of absolute value 2 or more on the new column too
/// long in NO instances).
pub fn compute_alpha(
    r_pow: &ExactScalar,
    tau: &ExactScalar,
    gamma_pow: &ExactScalar,
    p: PNorm,
    config: &AlphaConfig,
) -> Result<AlphaChoice> {
    let pe = finite_exponent(p)?;
    if !r_pow.is_positive() || !tau.is_positive() || gamma_pow < &ExactScalar::one() {
        return Err(Error::InvalidParameter(
            "compute_alpha needs r^p > 0, tau > 0 and gamma^p >= 1".into(),
        ));
    }
    if !config.denominator.is_positive()
        || !config.denominator.is_integer()
        || config.slack.is_negative()
    {
        return Err(Error::InvalidParameter(
            "alpha denominator must be positive and slack non-negative".into(),
        ));
    }
    let minima_term = r_pow * &(tau - &ExactScalar::one());
    let gap_term = gamma_pow * r_pow / &(ExactScalar::from_int(2).pow(pe) - ExactScalar::one());
    let required = std::cmp::max(minima_term, gap_term);
    let ceiling = &required * &(ExactScalar::one() + &config.slack);

    let mut denom = config.denominator.numer().clone();
    loop {
        let k = smallest_numerator(&required, &denom, pe);
        let alpha = ExactScalar::from_parts(k, denom.clone())?;
        let alpha_pow = alpha.pow(pe);
        if alpha_pow <= ceiling {
            return Ok(AlphaChoice {
                alpha_pow_required: required,
                alpha_rat: alpha,
                alpha_rat_pow: alpha_pow,
                denominator: ExactScalar::from_bigint(denom),
            });
        }
        denom *= 10;
    }
}

/// `(γ^p r^p + α^p) / (r^p + α^p)`: the NO bound over the YES bound.
pub fn gamma_prime_pow(
    r_pow: &ExactScalar,
    gamma_pow: &ExactScalar,
    alpha_pow: &ExactScalar,
) -> ExactScalar {
    (gamma_pow * r_pow + alpha_pow) / (r_pow + alpha_pow)
}

/// Appends the column `(t, α)` to the basis (extended by a zero row) and
/// sets `r'^p = r^p + α^p`.
pub fn cvp_to_sivp_with_alpha(
    inst: &CvpBoundedInstance,
    alpha: &AlphaChoice,
) -> Result<SivpInstance> {
    let cvp = &inst.cvp;
    finite_exponent(cvp.p)?;
    let mut columns: Vec<ExactVector> = cvp
        .basis
        .columns()
        .into_iter()
        .map(|c| c.extended(ExactScalar::zero()))
        .collect();
    columns.push(cvp.target.extended(alpha.alpha_rat.clone()));
    let basis = LatticeBasis::from_columns(&columns)?;
    let r_pow = &cvp.r_pow + &alpha.alpha_rat_pow;
    let gamma_pow = gamma_prime_pow(&cvp.r_pow, &cvp.gamma_pow, &alpha.alpha_rat_pow);
    SivpInstance::new(basis, r_pow, cvp.p, gamma_pow, cvp.promise)
}

/// Reduces a bounded-minima CVP instance to gap-SIVP of rank `n + 1`.
pub fn cvp_to_sivp(
    inst: &CvpBoundedInstance,
    config: &AlphaConfig,
) -> Result<(SivpInstance, AlphaChoice)> {
    let cvp = &inst.cvp;
    let alpha = compute_alpha(&cvp.r_pow, &inst.tau, &cvp.gamma_pow, cvp.p, config)?;
    let sivp = cvp_to_sivp_with_alpha(inst, &alpha)?;
    Ok((sivp, alpha))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    /// Variables and clauses of the first SAT stage.
    pub source_vars: usize,
    pub source_clauses: usize,
    pub sat2_vars: usize,
    pub sat2_clauses: usize,
    pub cvp_rank: usize,
    pub cvp_dim: usize,
    pub sivp_rank: usize,
    pub sivp_dim: usize,
    /// `n + m + 1` from a 3-SAT source, `n + 1` from a 2-SAT source.
    pub expected_sivp_rank: usize,
    pub consistent: bool,
}

/// All artifacts of one run of the reduction chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub sat3: Option<GapSatInstance>,
    pub sat2: GapSatInstance,
    pub cvp: CvpBoundedInstance,
    pub sivp: SivpInstance,
    pub alpha: AlphaChoice,
    pub ranks: RankReport,
}

fn assemble(
    sat3: Option<GapSatInstance>,
    sat2: GapSatInstance,
    p: PNorm,
    config: &AlphaConfig,
) -> Result<Chain> {
    let cvp = sat_to_cvp(&sat2, p)?;
    let (sivp, alpha) = cvp_to_sivp(&cvp, config)?;
    Ok(Chain::from_parts(sat3, sat2, cvp, sivp, alpha))
}

impl Chain {
    /// Reassembles a chain from stored stages, recomputing the rank report.
    /// Nothing is checked here; that is the verifier's job.
    pub fn from_parts(
        sat3: Option<GapSatInstance>,
        sat2: GapSatInstance,
        cvp: CvpBoundedInstance,
        sivp: SivpInstance,
        alpha: AlphaChoice,
    ) -> Chain {
        let (source_vars, source_clauses, expected_sivp_rank) = match &sat3 {
            Some(s) => {
                let (n, m) = (s.formula.num_vars(), s.formula.num_clauses());
                (n, m, n + m + 1)
            }
            None => (
                sat2.formula.num_vars(),
                sat2.formula.num_clauses(),
                sat2.formula.num_vars() + 1,
            ),
        };
        let ranks = RankReport {
            source_vars,
            source_clauses,
            sat2_vars: sat2.formula.num_vars(),
            sat2_clauses: sat2.formula.num_clauses(),
            cvp_rank: cvp.cvp.basis.rank(),
            cvp_dim: cvp.cvp.basis.dim(),
            sivp_rank: sivp.basis.rank(),
            sivp_dim: sivp.basis.dim(),
            expected_sivp_rank,
            consistent: sivp.basis.rank() == expected_sivp_rank,
        };
        Chain {
            sat3,
            sat2,
            cvp,
            sivp,
            alpha,
            ranks,
        }
    }
}

/// Gap-3SAT → Gap-2SAT → bounded-minima CVP → gap-SIVP.
pub fn full_chain(inst3: &GapSatInstance, p: PNorm, config: &AlphaConfig) -> Result<Chain> {
    let sat2 = reduce_3sat_to_2sat(inst3)?;
    assemble(Some(inst3.clone()), sat2, p, config)
}

/// The lattice half of the chain, starting from a width-2 instance.
pub fn chain_from_2sat(inst2: &GapSatInstance, p: PNorm, config: &AlphaConfig) -> Result<Chain> {
    assemble(None, inst2.clone(), p, config)
}

/// Every intermediate parameter of a chain, as recorded in the run manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub p: PNorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta3: Option<ExactScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon3: Option<ExactScalar>,
    pub delta2: ExactScalar,
    pub epsilon2: ExactScalar,
    pub r_pow: ExactScalar,
    pub gamma_pow: ExactScalar,
    pub tau: ExactScalar,
    pub alpha_pow_required: ExactScalar,
    pub alpha_rat: ExactScalar,
    pub alpha_rat_pow: ExactScalar,
    pub alpha_denominator: ExactScalar,
    pub r_prime_pow: ExactScalar,
    pub gamma_prime_pow: ExactScalar,
    pub ranks: RankReport,
}

impl Chain {
    pub fn params(&self) -> ChainParams {
        ChainParams {
            p: self.cvp.cvp.p,
            delta3: self.sat3.as_ref().map(|s| s.delta.clone()),
            epsilon3: self.sat3.as_ref().map(|s| s.epsilon.clone()),
            delta2: self.sat2.delta.clone(),
            epsilon2: self.sat2.epsilon.clone(),
            r_pow: self.cvp.cvp.r_pow.clone(),
            gamma_pow: self.cvp.cvp.gamma_pow.clone(),
            tau: self.cvp.tau.clone(),
            alpha_pow_required: self.alpha.alpha_pow_required.clone(),
            alpha_rat: self.alpha.alpha_rat.clone(),
            alpha_rat_pow: self.alpha.alpha_rat_pow.clone(),
            alpha_denominator: self.alpha.denominator.clone(),
            r_prime_pow: self.sivp.r_pow.clone(),
            gamma_prime_pow: self.sivp.gamma_pow.clone(),
            ranks: self.ranks.clone(),
        }
    }
}
