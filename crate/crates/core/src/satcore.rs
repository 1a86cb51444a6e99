//! CNF formulas, DIMACS ingestion, assignment evaluation, and the exhaustive
//! MAX-SAT oracle.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;

use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::ExactScalar;

/// Default ceiling on the variable count accepted by [`max_sat_fraction`].
pub const BRUTE_SAT_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    pub fn from_dimacs(x: i64) -> Option<Self> {
        if x == 0 {
            return None;
        }
        Some(Literal {
            var: x.unsigned_abs() as usize,
            negated: x < 0,
        })
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64;
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn negate(self) -> Self {
        Literal {
            var: self.var,
            negated: !self.negated,
        }
    }

    pub fn eval(self, assignment: &Assignment) -> bool {
        assignment.0[self.var - 1] != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Rejects repeated literals and clauses containing a variable in both
    /// polarities. `index` is only used in error messages.
    pub fn new(literals: Vec<Literal>, index: usize) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for lit in &literals {
            if lit.var == 0 {
                return Err(Error::InvalidFormula(format!(
                    "clause {index} uses variable index 0"
                )));
            }
            if seen.contains(&lit.negate()) {
                return Err(Error::Tautology {
                    clause: index,
                    variable: lit.var,
                });
            }
            if !seen.insert(*lit) {
                return Err(Error::InvalidFormula(format!(
                    "clause {index} repeats literal {lit}"
                )));
            }
        }
        Ok(Clause { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_satisfied(&self, assignment: &Assignment) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }

    /// Number of negated literals.
    pub fn negations(&self) -> usize {
        self.literals.iter().filter(|l| l.negated).count()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A conjunction of clauses over variables `1..=num_vars`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FormulaJson", into = "FormulaJson")]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

#[derive(Serialize, Deserialize)]
struct FormulaJson {
    n: usize,
    clauses: Vec<Vec<i64>>,
}

impl TryFrom<FormulaJson> for CnfFormula {
    type Error = Error;
    fn try_from(json: FormulaJson) -> Result<Self> {
        CnfFormula::from_dimacs_clauses(json.n, &json.clauses)
    }
}

impl From<CnfFormula> for FormulaJson {
    fn from(f: CnfFormula) -> Self {
        FormulaJson {
            n: f.num_vars,
            clauses: f.dimacs_clauses(),
        }
    }
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            if let Some(l) = c.literals.iter().find(|l| l.var > num_vars) {
                return Err(Error::InvalidFormula(format!(
                    "clause {i} uses x{} but the formula has {num_vars} variables",
                    l.var
                )));
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Builds a formula from DIMACS-style signed literals.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[Vec<i64>]) -> Result<Self> {
        let clauses = clauses
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let lits = c
                    .iter()
                    .map(|&x| {
                        Literal::from_dimacs(x).ok_or_else(|| {
                            Error::InvalidFormula(format!("clause {i} contains literal 0"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Clause::new(lits, i)
            })
            .collect::<Result<Vec<_>>>()?;
        CnfFormula::new(num_vars, clauses)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Maximum clause length.
    pub fn width(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    pub fn dimacs_clauses(&self) -> Vec<Vec<i64>> {
        self.clauses
            .iter()
            .map(|c| c.literals.iter().map(|l| l.to_dimacs()).collect())
            .collect()
    }

    /// Variables that occur in no clause.
    pub fn unused_vars(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_vars + 1];
        for c in &self.clauses {
            for l in &c.literals {
                used[l.var] = true;
            }
        }
        (1..=self.num_vars).filter(|&v| !used[v]).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.unused_vars().is_empty()
    }

    /// Drops unused variables and compacts the remaining indices, keeping
    /// their relative order.
    pub fn normalize(&self) -> (CnfFormula, VariableRemap) {
        let unused = self.unused_vars();
        let mut new_index = vec![0usize; self.num_vars + 1];
        let mut original = Vec::new();
        for v in 1..=self.num_vars {
            if !unused.contains(&v) {
                original.push(v);
                new_index[v] = original.len();
            }
        }
        let clauses = self
            .clauses
            .iter()
            .map(|c| Clause {
                literals: c
                    .literals
                    .iter()
                    .map(|l| Literal {
                        var: new_index[l.var],
                        negated: l.negated,
                    })
                    .collect(),
            })
            .collect();
        (
            CnfFormula {
                num_vars: original.len(),
                clauses,
            },
            VariableRemap {
                original,
                dropped: unused,
            },
        )
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in &c.literals {
                out.push_str(&l.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "⊤");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Index translation produced by [`CnfFormula::normalize`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRemap {
    /// `original[i]` is the input index of normalized variable `i + 1`.
    pub original: Vec<usize>,
    /// Input variables that appeared in no clause.
    pub dropped: Vec<usize>,
}

impl VariableRemap {
    pub fn is_identity(&self) -> bool {
        self.dropped.is_empty()
    }
}

/// Result of [`parse_dimacs`]: the normalized formula and how indices moved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimacsFormula {
    pub formula: CnfFormula,
    pub remap: VariableRemap,
    pub declared_vars: usize,
}

/// Parses DIMACS CNF. Repeated literals inside a clause are merged; unused
/// variables are removed by normalization.
pub fn parse_dimacs<R: Read>(mut input: R) -> Result<DimacsFormula> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_dimacs_str(&text)
}

pub fn parse_dimacs_str(text: &str) -> Result<DimacsFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_start = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            // Some benchmark sets end with a "%" trailer.
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::parse(line_no, "expected \"p cnf <vars> <clauses>\""));
            }
            let n = parts[2]
                .parse()
                .map_err(|_| Error::parse(line_no, "variable count is not a number"))?;
            let m = parts[3]
                .parse()
                .map_err(|_| Error::parse(line_no, "clause count is not a number"))?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(Error::parse(line_no, "clause before the \"p cnf\" header"));
        };
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad literal {tok:?}")))?;
            match Literal::from_dimacs(x) {
                None => {
                    clauses.push(std::mem::take(&mut current));
                }
                Some(lit) => {
                    if lit.var > n {
                        return Err(Error::parse(
                            line_no,
                            format!("literal {x} out of range for {n} variables"),
                        ));
                    }
                    if current.is_empty() {
                        current_start = line_no;
                    }
                    if !current.contains(&lit) {
                        current.push(lit);
                    }
                }
            }
        }
    }

    let Some((n, m)) = header else {
        return Err(Error::parse(0, "missing \"p cnf\" header"));
    };
    if !current.is_empty() {
        return Err(Error::parse(
            current_start,
            "last clause is missing its terminating 0",
        ));
    }
    if clauses.len() != m {
        return Err(Error::parse(
            0,
            format!(
                "header declares {m} clauses but {} were given",
                clauses.len()
            ),
        ));
    }
    let clauses = clauses
        .into_iter()
        .enumerate()
        .map(|(i, lits)| Clause::new(lits, i))
        .collect::<Result<Vec<_>>>()?;
    let raw = CnfFormula::new(n, clauses)?;
    let (formula, remap) = raw.normalize();
    Ok(DimacsFormula {
        formula,
        remap,
        declared_vars: n,
    })
}

/// Truth values for variables `1..=n`; index 0 holds `x1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<bool>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// The assignment whose bit for `x_j` is bit `n - j` of `code`, so that
    /// increasing codes enumerate assignments lexicographically.
    pub fn from_code(code: u64, n: usize) -> Self {
        Assignment((1..=n).map(|j| (code >> (n - j)) & 1 == 1).collect())
    }
}

pub fn count_satisfied(formula: &CnfFormula, assignment: &Assignment) -> usize {
    assert_eq!(
        assignment.len(),
        formula.num_vars(),
        "assignment length must equal the variable count"
    );
    formula
        .clauses
        .iter()
        .filter(|c| c.is_satisfied(assignment))
        .count()
}

/// Optimum of the exhaustive MAX-SAT search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxSat {
    /// `satisfied / m`; 1 for a formula without clauses.
    pub fraction: ExactScalar,
    pub satisfied: usize,
    /// Lexicographically smallest maximizer (false < true, x1 first).
    pub assignment: Assignment,
}

pub fn max_sat_fraction(formula: &CnfFormula) -> Result<MaxSat> {
    max_sat_fraction_with_limit(formula, BRUTE_SAT_LIMIT)
}

pub fn max_sat_fraction_with_limit(formula: &CnfFormula, limit: usize) -> Result<MaxSat> {
    let n = formula.num_vars;
    if n > limit || n >= 63 {
        return Err(Error::TooLarge {
            what: "MAX-SAT instance",
            size: n,
            limit,
        });
    }
    // Clause i is satisfied by code `a` iff (a & pos) | (!a & neg) != 0.
    let masks: Vec<(u64, u64)> = formula
        .clauses
        .iter()
        .map(|c| {
            c.literals.iter().fold((0u64, 0u64), |(pos, neg), l| {
                let bit = 1u64 << (n - l.var);
                if l.negated {
                    (pos, neg | bit)
                } else {
                    (pos | bit, neg)
                }
            })
        })
        .collect();
    let m = masks.len();
    let mut best = 0usize;
    let mut best_code = 0u64;
    let mut first = true;
    for code in 0..(1u64 << n) {
        let inv = !code;
        let s = masks
            .iter()
            .filter(|&&(pos, neg)| (code & pos) | (inv & neg) != 0)
            .count();
        if first || s > best {
            best = s;
            best_code = code;
            first = false;
            if best == m {
                break;
            }
        }
    }
    let fraction = if m == 0 {
        ExactScalar::one()
    } else {
        ExactScalar::ratio(best as i64, m as i64)
    };
    Ok(MaxSat {
        fraction,
        satisfied: best,
        assignment: Assignment::from_code(best_code, n),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Promise {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Promise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Promise::Yes => "YES",
            Promise::No => "NO",
            Promise::Unknown => "UNKNOWN",
        })
    }
}

impl std::str::FromStr for Promise {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "YES" => Ok(Promise::Yes),
            "NO" => Ok(Promise::No),
            "UNKNOWN" => Ok(Promise::Unknown),
            _ => Err(Error::InvalidParameter(format!("unknown promise {s:?}"))),
        }
    }
}

/// Where a value falls relative to a pair of promise thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GapClass {
    Yes,
    No,
    /// Strictly between the thresholds: neither side of the promise holds.
    Gap,
}

impl GapClass {
    /// Whether a promise tag is consistent with this ground-truth class.
    pub fn honours(self, promise: Promise) -> bool {
        match promise {
            Promise::Yes => self == GapClass::Yes,
            Promise::No => self == GapClass::No,
            Promise::Unknown => true,
        }
    }
}

/// A formula with (δ, ε) gap parameters and a promise tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GapSatJson")]
pub struct GapSatInstance {
    pub formula: CnfFormula,
    pub delta: ExactScalar,
    pub epsilon: ExactScalar,
    pub promise: Promise,
}

#[derive(Deserialize)]
struct GapSatJson {
    formula: CnfFormula,
    delta: ExactScalar,
    epsilon: ExactScalar,
    promise: Promise,
}

impl TryFrom<GapSatJson> for GapSatInstance {
    type Error = Error;
    fn try_from(j: GapSatJson) -> Result<Self> {
        GapSatInstance::new(j.formula, j.delta, j.epsilon, j.promise)
    }
}

impl GapSatInstance {
    pub fn new(
        formula: CnfFormula,
        delta: ExactScalar,
        epsilon: ExactScalar,
        promise: Promise,
    ) -> Result<Self> {
        if delta.is_negative() || delta >= epsilon || epsilon > ExactScalar::one() {
            return Err(Error::InvalidParameter(format!(
                "gap parameters must satisfy 0 <= delta < epsilon <= 1, got delta={delta}, epsilon={epsilon}"
            )));
        }
        Ok(GapSatInstance {
            formula,
            delta,
            epsilon,
            promise,
        })
    }

    /// YES when the best fraction reaches ε, NO when it is at most δ.
    pub fn classify(&self, fraction: &ExactScalar) -> GapClass {
        if fraction >= &self.epsilon {
            GapClass::Yes
        } else if fraction <= &self.delta {
            GapClass::No
        } else {
            GapClass::Gap
        }
    }
}

/// Uniform random k-CNF: each clause draws `width` distinct variables and
/// independent signs from a SplitMix64 stream seeded with `seed`.
pub fn random_cnf(vars: usize, clauses: usize, width: usize, seed: u64) -> Result<CnfFormula> {
    if width == 0 || width > vars {
        return Err(Error::InvalidParameter(format!(
            "clause width {width} must lie in 1..={vars}"
        )));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut out = Vec::with_capacity(clauses);
    for i in 0..clauses {
        let mut lits: Vec<Literal> = Vec::with_capacity(width);
        while lits.len() < width {
            let var = rng.random_range(1..=vars);
            if lits.iter().any(|l| l.var == var) {
                continue;
            }
            let negated = rng.random_bool(0.5);
            lits.push(Literal { var, negated });
        }
        out.push(Clause::new(lits, i)?);
    }
    CnfFormula::new(vars, out)
}
