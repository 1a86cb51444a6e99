//! Lattice bases and the CVP, bounded-minima CVP and SIVP instance types.
//!
//! Thresholds are stored as p-th powers (`r_pow`, `gamma_pow`). For the max
//! norm the "power" is the value itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{rank, ExactMatrix, ExactScalar, ExactVector, PNorm};
use crate::satcore::{GapClass, Promise};

/// Linearly independent columns `b_1..b_n` in `d` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    matrix: ExactMatrix,
}

impl LatticeBasis {
    /// Integer basis. Fails with [`Error::RankDeficient`] on dependent columns.
    pub fn new(matrix: ExactMatrix) -> Result<Self> {
        if !matrix.is_integral() {
            return Err(Error::InvalidParameter(
                "basis entries must be integers; use LatticeBasis::new_rational".into(),
            ));
        }
        Self::new_rational(matrix)
    }

    /// Basis whose entries may be arbitrary rationals.
    pub fn new_rational(matrix: ExactMatrix) -> Result<Self> {
        let (d, n) = (matrix.rows(), matrix.cols());
        if n == 0 || d < n {
            return Err(Error::Dimension(format!(
                "a basis needs d >= n >= 1, got d={d}, n={n}"
            )));
        }
        if rank(&matrix) < n {
            let kernel = matrix
                .kernel_vector()
                .expect("rank-deficient matrix has a kernel vector");
            return Err(Error::RankDeficient { kernel });
        }
        Ok(LatticeBasis { matrix })
    }

    pub fn from_columns(columns: &[ExactVector]) -> Result<Self> {
        Self::new_rational(ExactMatrix::from_columns(columns)?)
    }

    pub fn matrix(&self) -> &ExactMatrix {
        &self.matrix
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column(&self, j: usize) -> ExactVector {
        self.matrix.column(j)
    }

    pub fn columns(&self) -> Vec<ExactVector> {
        self.matrix.columns()
    }

    pub fn is_integral(&self) -> bool {
        self.matrix.is_integral()
    }

    /// The lattice point with integer coefficients `z`.
    pub fn point(&self, z: &[i64]) -> ExactVector {
        self.matrix.mul_int_vec(z)
    }

    /// Integer coordinates of `v` in this basis, if `v` lies in the lattice.
    pub fn coordinates(&self, v: &ExactVector) -> Option<Vec<i64>> {
        let x = self.matrix.solve(v)?;
        if self.matrix.mul_vec(&x) != *v {
            return None;
        }
        x.iter()
            .map(|c| {
                if c.is_integer() {
                    i64::try_from(c.numer()).ok()
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn contains(&self, v: &ExactVector) -> bool {
        self.coordinates(v).is_some()
    }
}

/// Checks that `b` has `d >= n >= 1` and independent columns.
pub fn validate_basis(b: &ExactMatrix) -> Result<LatticeBasis> {
    LatticeBasis::new_rational(b.clone())
}

/// A lattice vector together with its coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub coefficients: Vec<i64>,
    pub vector: ExactVector,
    /// `norm_power` of the vector (or of its offset from a CVP target).
    pub norm_pow: ExactScalar,
}

/// `λ_1^p <= ... <= λ_n^p`, each attained by the witness at the same index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessiveMinima {
    pub values_pow: Vec<ExactScalar>,
    pub witnesses: Vec<Witness>,
}

impl SuccessiveMinima {
    /// `λ_n^p`.
    pub fn last(&self) -> &ExactScalar {
        self.values_pow.last().expect("rank is at least 1")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvpInstance {
    pub basis: LatticeBasis,
    pub target: ExactVector,
    pub r_pow: ExactScalar,
    pub p: PNorm,
    pub gamma_pow: ExactScalar,
    pub promise: Promise,
}

impl CvpInstance {
    pub fn new(
        basis: LatticeBasis,
        target: ExactVector,
        r_pow: ExactScalar,
        p: PNorm,
        gamma_pow: ExactScalar,
        promise: Promise,
    ) -> Result<Self> {
        if target.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "target has {} coordinates, basis has {}",
                target.len(),
                basis.dim()
            )));
        }
        if !target.is_integral() {
            return Err(Error::InvalidParameter(
                "CVP targets must be integral".into(),
            ));
        }
        if !r_pow.is_positive() {
            return Err(Error::InvalidParameter("r must be positive".into()));
        }
        if gamma_pow < ExactScalar::one() {
            return Err(Error::InvalidParameter("gamma must be at least 1".into()));
        }
        Ok(CvpInstance {
            basis,
            target,
            r_pow,
            p,
            gamma_pow,
            promise,
        })
    }

    /// YES when `dist_pow <= r^p`, NO when `dist_pow > γ^p r^p`.
    pub fn classify(&self, dist_pow: &ExactScalar) -> GapClass {
        if dist_pow <= &self.r_pow {
            GapClass::Yes
        } else if dist_pow > &(&self.gamma_pow * &self.r_pow) {
            GapClass::No
        } else {
            GapClass::Gap
        }
    }
}

/// CVP with the extra promise `λ_n^p <= τ r^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvpBoundedInstance {
    pub cvp: CvpInstance,
    pub tau: ExactScalar,
}

impl CvpBoundedInstance {
    pub fn new(cvp: CvpInstance, tau: ExactScalar) -> Result<Self> {
        if !tau.is_positive() {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        Ok(CvpBoundedInstance { cvp, tau })
    }

    /// `τ r^p`.
    pub fn minima_bound(&self) -> ExactScalar {
        &self.tau * &self.cvp.r_pow
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SivpInstance {
    pub basis: LatticeBasis,
    pub r_pow: ExactScalar,
    pub p: PNorm,
    pub gamma_pow: ExactScalar,
    pub promise: Promise,
}

impl SivpInstance {
    pub fn new(
        basis: LatticeBasis,
        r_pow: ExactScalar,
        p: PNorm,
        gamma_pow: ExactScalar,
        promise: Promise,
    ) -> Result<Self> {
        if !r_pow.is_positive() {
            return Err(Error::InvalidParameter("r must be positive".into()));
        }
        if gamma_pow < ExactScalar::one() {
            return Err(Error::InvalidParameter("gamma must be at least 1".into()));
        }
        Ok(SivpInstance {
            basis,
            r_pow,
            p,
            gamma_pow,
            promise,
        })
    }

    /// YES when `λ_n^p <= r^p`, NO when `λ_n^p > γ^p r^p`.
    pub fn classify(&self, lambda_pow: &ExactScalar) -> GapClass {
        if lambda_pow <= &self.r_pow {
            GapClass::Yes
        } else if lambda_pow > &(&self.gamma_pow * &self.r_pow) {
            GapClass::No
        } else {
            GapClass::Gap
        }
    }
}

/// On-disk form shared by every lattice instance. `basis` lists the columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeInstanceJson {
    pub d: usize,
    pub n: usize,
    pub basis: Vec<ExactVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ExactVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_pow: Option<ExactScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_pow: Option<ExactScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<ExactScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promise: Option<Promise>,
}

impl LatticeInstanceJson {
    fn from_basis(basis: &LatticeBasis) -> Self {
        LatticeInstanceJson {
            d: basis.dim(),
            n: basis.rank(),
            basis: basis.columns(),
            target: None,
            r_pow: None,
            p: None,
            gamma_pow: None,
            tau: None,
            promise: None,
        }
    }

    /// Rebuilds and validates the basis. Integer entries are not required so
    /// that SIVP instances with a rational last coordinate load unchanged.
    pub fn basis(&self) -> Result<LatticeBasis> {
        if self.basis.len() != self.n || self.basis.iter().any(|c| c.len() != self.d) {
            return Err(Error::Dimension(format!(
                "basis does not have {} columns of length {}",
                self.n, self.d
            )));
        }
        LatticeBasis::from_columns(&self.basis)
    }

    fn require<T: Clone>(field: &Option<T>, name: &str) -> Result<T> {
        field
            .clone()
            .ok_or_else(|| Error::InvalidParameter(format!("instance is missing \"{name}\"")))
    }

    pub fn to_cvp(&self) -> Result<CvpInstance> {
        CvpInstance::new(
            self.basis()?,
            Self::require(&self.target, "target")?,
            Self::require(&self.r_pow, "r_pow")?,
            Self::require(&self.p, "p")?,
            self.gamma_pow.clone().unwrap_or_else(ExactScalar::one),
            self.promise.unwrap_or(Promise::Unknown),
        )
    }

    pub fn to_bounded_cvp(&self) -> Result<CvpBoundedInstance> {
        CvpBoundedInstance::new(self.to_cvp()?, Self::require(&self.tau, "tau")?)
    }

    pub fn to_sivp(&self) -> Result<SivpInstance> {
        SivpInstance::new(
            self.basis()?,
            Self::require(&self.r_pow, "r_pow")?,
            Self::require(&self.p, "p")?,
            self.gamma_pow.clone().unwrap_or_else(ExactScalar::one),
            self.promise.unwrap_or(Promise::Unknown),
        )
    }
}

impl From<&LatticeBasis> for LatticeInstanceJson {
    fn from(b: &LatticeBasis) -> Self {
        LatticeInstanceJson::from_basis(b)
    }
}

impl From<&CvpInstance> for LatticeInstanceJson {
    fn from(c: &CvpInstance) -> Self {
        LatticeInstanceJson {
            target: Some(c.target.clone()),
            r_pow: Some(c.r_pow.clone()),
            p: Some(c.p),
            gamma_pow: Some(c.gamma_pow.clone()),
            promise: Some(c.promise),
            ..LatticeInstanceJson::from_basis(&c.basis)
        }
    }
}

impl From<&CvpBoundedInstance> for LatticeInstanceJson {
    fn from(c: &CvpBoundedInstance) -> Self {
        LatticeInstanceJson {
            tau: Some(c.tau.clone()),
            ..LatticeInstanceJson::from(&c.cvp)
        }
    }
}

impl From<&SivpInstance> for LatticeInstanceJson {
    fn from(s: &SivpInstance) -> Self {
        LatticeInstanceJson {
            r_pow: Some(s.r_pow.clone()),
            p: Some(s.p),
            gamma_pow: Some(s.gamma_pow.clone()),
            promise: Some(s.promise),
            ..LatticeInstanceJson::from_basis(&s.basis)
        }
    }
}
