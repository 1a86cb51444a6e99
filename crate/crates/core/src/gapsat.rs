//! Gap-3SAT to Gap-2SAT via the ten-clause gadget.
//!
//! Each clause `(l1 ∨ l2 ∨ l3)` gets a fresh variable `y` and becomes
//!
//! ```text
//! (l1) (l2) (l3) (¬l1 ∨ ¬l2) (¬l1 ∨ ¬l3) (¬l2 ∨ ¬l3) (y) (l1 ∨ ¬y) (l2 ∨ ¬y) (l3 ∨ ¬y)
//! ```
//!
//! With `y` chosen optimally, a satisfied source clause yields exactly 7 true
//! gadget clauses and an unsatisfied one exactly 6, so the gap parameters map
//! `(δ, ε)` to `((6 + δ)/10, (6 + ε)/10)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::ExactScalar;
use crate::satcore::{Clause, CnfFormula, GapSatInstance, Literal};

/// Clauses emitted per source clause.
pub const GADGET_CLAUSES: usize = 10;

/// The gadget for one clause with fresh variable `y`, in the fixed output order.
pub fn gadget(lits: [Literal; 3], y: usize) -> [Vec<Literal>; GADGET_CLAUSES] {
    let [a, b, c] = lits;
    let y = Literal::pos(y);
    [
        vec![a],
        vec![b],
        vec![c],
        vec![a.negate(), b.negate()],
        vec![a.negate(), c.negate()],
        vec![b.negate(), c.negate()],
        vec![y],
        vec![a, y.negate()],
        vec![b, y.negate()],
        vec![c, y.negate()],
    ]
}

fn three_literals(clause: &Clause, index: usize) -> Result<[Literal; 3]> {
    let lits = clause.literals();
    if lits.len() != 3 {
        return Err(Error::Width {
            clause: index,
            reason: format!("expected exactly 3 literals, found {}", lits.len()),
        });
    }
    if lits[0].var == lits[1].var || lits[0].var == lits[2].var || lits[1].var == lits[2].var {
        return Err(Error::Width {
            clause: index,
            reason: "literals must use 3 distinct variables".into(),
        });
    }
    Ok([lits[0], lits[1], lits[2]])
}

/// Maps a width-3 gap instance to a width-2 one with `n + m` variables and
/// `10m` clauses. The promise tag is carried over unchanged.
pub fn reduce_3sat_to_2sat(inst: &GapSatInstance) -> Result<GapSatInstance> {
    let f = &inst.formula;
    let n = f.num_vars();
    let mut clauses = Vec::with_capacity(GADGET_CLAUSES * f.num_clauses());
    for (i, clause) in f.clauses().iter().enumerate() {
        let lits = three_literals(clause, i)?;
        for g in gadget(lits, n + i + 1) {
            let idx = clauses.len();
            clauses.push(Clause::new(g, idx)?);
        }
    }
    let formula = CnfFormula::new(n + f.num_clauses(), clauses)?;
    let (delta, epsilon) = map_gap(&inst.delta, &inst.epsilon);
    GapSatInstance::new(formula, delta, epsilon, inst.promise)
}

/// `((6 + δ)/10, (6 + ε)/10)`.
pub fn map_gap(delta: &ExactScalar, epsilon: &ExactScalar) -> (ExactScalar, ExactScalar) {
    let six = ExactScalar::from_int(6);
    let ten = ExactScalar::from_int(10);
    ((&six + delta) / &ten, (&six + epsilon) / &ten)
}

/// What [`pad_to_width3`] changed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddingReport {
    pub padded_clauses: Vec<usize>,
    pub fresh_vars: usize,
    /// Padding can only raise the optimum: every fresh variable may be set to
    /// satisfy its clause. The gap parameters are not adjusted for this.
    pub note: String,
}

/// Pads 1- and 2-literal clauses with fresh positive variables so that every
/// clause has exactly three distinct variables. Setting all fresh variables
/// false recovers the original clause; setting one true satisfies it, so the
/// MAX-SAT fraction may go up.
pub fn pad_to_width3(f: &CnfFormula) -> Result<(CnfFormula, PaddingReport)> {
    let mut next_var = f.num_vars();
    let mut report = PaddingReport::default();
    let mut clauses = Vec::with_capacity(f.num_clauses());
    for (i, clause) in f.clauses().iter().enumerate() {
        let mut lits = clause.literals().to_vec();
        if lits.len() > 3 {
            return Err(Error::Width {
                clause: i,
                reason: format!("{} literals cannot be padded down to 3", lits.len()),
            });
        }
        if lits.is_empty() {
            return Err(Error::Width {
                clause: i,
                reason: "empty clause".into(),
            });
        }
        if lits.len() < 3 {
            report.padded_clauses.push(i);
            while lits.len() < 3 {
                next_var += 1;
                lits.push(Literal::pos(next_var));
            }
        }
        clauses.push(Clause::new(lits, i)?);
    }
    report.fresh_vars = next_var - f.num_vars();
    report.note = if report.fresh_vars == 0 {
        "no padding needed".into()
    } else {
        format!(
            "{} clauses padded with {} fresh variables; the padded formula's optimum can exceed the original's",
            report.padded_clauses.len(),
            report.fresh_vars
        )
    };
    Ok((CnfFormula::new(next_var, clauses)?, report))
}
