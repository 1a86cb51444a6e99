//! Exact brute-force solvers: lattice point enumeration, CVP, successive
//! minima, SIVP decisions and Minkowski's second theorem as a check.
//!
//! Enumeration walks the l2 ellipsoid that contains the requested l_p ball,
//! pruning level by level with exact rational Gram-Schmidt data, and then
//! filters candidates by their exact l_p norm power. Nothing is rounded.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{
    gram_determinant, norm_power, ExactScalar, ExactVector, PNorm, SpanTracker,
};
use crate::lattice::{LatticeBasis, SivpInstance, SuccessiveMinima, Witness};

/// Precision (binary digits) of the rational over-approximation used when an
/// l2 radius has to be derived through a p-th root.
const ROOT_BITS: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumBudget {
    pub max_rank: usize,
    /// Cap on visited enumeration-tree nodes, summed over one operation.
    pub max_nodes: u64,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget {
            max_rank: 10,
            max_nodes: 100_000_000,
        }
    }
}

/// Upper bound on `||x||_2^2` for vectors in `d` coordinates whose l_p norm
/// power is at most `radius_pow` (the radius itself for the max norm).
pub fn l2_bound_sq(radius_pow: &ExactScalar, p: PNorm, d: usize) -> ExactScalar {
    if radius_pow.is_negative() {
        return ExactScalar::from_int(-1);
    }
    match p {
        PNorm::Infinity => ExactScalar::from_int(d as i64) * radius_pow.pow(2),
        PNorm::Finite(1) => radius_pow.pow(2),
        PNorm::Finite(2) => radius_pow.clone(),
        // ||x||_2 <= d^(1/2 - 1/p) ||x||_p, i.e.
        // ||x||_2^2 <= (d^(p-2) * (||x||_p^p)^2)^(1/p).
        PNorm::Finite(p) => {
            let q = ExactScalar::from_int(d as i64).pow(p - 2) * radius_pow.pow(2);
            q.root_upper_bound(p, ROOT_BITS)
        }
    }
}

/// What a visitor asks the enumeration to do next.
enum Step {
    Continue,
    /// Continue with a smaller l_p radius power.
    Shrink(ExactScalar),
    Stop,
}

/// Gram-Schmidt data of a basis plus the projection of a fixed center.
struct Enumerator<'a> {
    basis: &'a LatticeBasis,
    p: PNorm,
    /// `mu[j][i] = <b_j, b*_i> / ||b*_i||^2` for `i < j`.
    mu: Vec<Vec<ExactScalar>>,
    bstar_sq: Vec<ExactScalar>,
    center: ExactVector,
    center_coords: Vec<ExactScalar>,
    /// l2 budget left after removing the part of the center orthogonal to the lattice.
    limit: ExactScalar,
    perp_sq: ExactScalar,
    /// Current l_p radius power; only consulted by the Hölder cut.
    radius_pow: ExactScalar,
    /// For p = 1 and p = ∞: the Gram-Schmidt vectors and, per level, the
    /// projection of `Bz - center` orthogonal to the still-free basis vectors.
    holder: Option<Holder>,
    rows: Option<RowCut>,
    /// Coefficient-space span of the points kept so far. Subtrees lying
    /// inside it are skipped when this is set.
    span: Option<SpanTracker>,
    /// Largest `k` with `e_0..e_{k-1}` in `span`.
    span_prefix: usize,
    nodes: u64,
    max_nodes: u64,
}

/// Data for the coordinate cut. After scaling by a common denominator every
/// entry is an integer; with `z_k..z_{n-1}` fixed, coordinate `i` of
/// `Bz - center` lies in `u_i + g_i Z` where `g_i` is the gcd of the free
/// entries of row `i`, so `sum dist(u_i, g_i Z)^p` bounds the norm power.
struct RowCut {
    /// Scaled columns.
    cols: Vec<Vec<i128>>,
    /// `gcds[k][i]`: gcd of row `i` over columns `0..k`.
    gcds: Vec<Vec<i128>>,
    /// `levels[k]`: scaled `sum_{j >= k} z_j b_j - center`.
    levels: Vec<Vec<i128>>,
    scale: ExactScalar,
    /// `floor(radius_pow * scale^p)`, or `None` when it does not fit.
    limit: Option<i128>,
}

impl RowCut {
    fn new(basis: &LatticeBasis, center: &ExactVector) -> Option<RowCut> {
        let cols = basis.columns();
        let mut lcm = BigInt::one();
        for x in cols.iter().flat_map(|c| c.iter()).chain(center.iter()) {
            lcm = lcm.lcm(x.denom());
        }
        let scale = ExactScalar::from_bigint(lcm);
        let to_int = |x: &ExactScalar| (x * &scale).numer().to_i128();
        let cols: Vec<Vec<i128>> = cols
            .iter()
            .map(|c| c.iter().map(to_int).collect::<Option<Vec<_>>>())
            .collect::<Option<_>>()?;
        let start: Vec<i128> = center
            .iter()
            .map(|x| to_int(x).map(|v| -v))
            .collect::<Option<_>>()?;
        let (n, d) = (cols.len(), center.len());
        let mut gcds = vec![vec![0i128; d]; n + 1];
        for k in 0..n {
            for i in 0..d {
                gcds[k + 1][i] = gcds[k][i].gcd(&cols[k][i]);
            }
        }
        let mut levels = vec![vec![0i128; d]; n + 1];
        levels[n] = start;
        Some(RowCut {
            cols,
            gcds,
            levels,
            scale,
            limit: None,
        })
    }

    fn set_radius(&mut self, radius_pow: &ExactScalar, p: PNorm) {
        let scaled = match p {
            PNorm::Finite(e) => radius_pow * &self.scale.pow(e),
            PNorm::Infinity => radius_pow * &self.scale,
        };
        self.limit = scaled.floor().to_i128();
    }

    /// Fixes `z_k` and reports whether the subtree can be skipped, or `None`
    /// on overflow (the levels are then stale and must be dropped).
    fn cut(&mut self, k: usize, zk: i64, p: PNorm) -> Option<bool> {
        let (lower, upper) = self.levels.split_at_mut(k + 1);
        let (u, prev) = (&mut lower[k], &upper[0]);
        let zk = zk as i128;
        let mut total: i128 = 0;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = prev[i].checked_add(zk.checked_mul(self.cols[k][i])?)?;
            let g = self.gcds[k][i];
            let lb = if g == 0 {
                ui.checked_abs()?
            } else {
                let r = ui.rem_euclid(g);
                r.min(g - r)
            };
            total = match p {
                PNorm::Finite(e) => total.checked_add(lb.checked_pow(e)?)?,
                PNorm::Infinity => total.max(lb),
            };
        }
        Some(self.limit.is_some_and(|limit| total > limit))
    }
}

/// Data for the cut `||x||_p >= <x, y> / ||y||_q` with `y` the projection of
/// `x` away from the free part of the lattice. `<x, y> = ||y||^2` is known
/// exactly at every node, and `q` is `∞` or `1` so the bound stays rational.
struct Holder {
    bstar: Vec<ExactVector>,
    /// `levels[k]` is the projection once `z_k..z_{n-1}` are fixed;
    /// `levels[n]` is minus the part of the center orthogonal to the lattice.
    levels: Vec<Vec<ExactScalar>>,
}

impl<'a> Enumerator<'a> {
    fn new(
        basis: &'a LatticeBasis,
        center: &ExactVector,
        p: PNorm,
        budget: &EnumBudget,
    ) -> Result<Self> {
        let n = basis.rank();
        if n > budget.max_rank {
            return Err(Error::RankTooLarge {
                rank: n,
                limit: budget.max_rank,
            });
        }
        if center.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "center has {} coordinates, lattice has {}",
                center.len(),
                basis.dim()
            )));
        }
        let cols = basis.columns();
        let mut bstar: Vec<ExactVector> = Vec::with_capacity(n);
        let mut bstar_sq = Vec::with_capacity(n);
        let mut mu = vec![vec![ExactScalar::zero(); n]; n];
        for j in 0..n {
            let mut v = cols[j].clone();
            for i in 0..j {
                let m = cols[j].dot(&bstar[i]) / &bstar_sq[i];
                if !m.is_zero() {
                    v = v.sub(&bstar[i].scale(&m));
                }
                mu[j][i] = m;
            }
            bstar_sq.push(v.dot(&v));
            bstar.push(v);
        }
        let center_coords: Vec<ExactScalar> = (0..n)
            .map(|i| center.dot(&bstar[i]) / &bstar_sq[i])
            .collect();
        let projected: ExactScalar = center_coords
            .iter()
            .zip(&bstar_sq)
            .map(|(c, b)| c * c * b)
            .sum();
        let perp_sq = center.dot(center) - projected;
        let holder = matches!(p, PNorm::Finite(1) | PNorm::Infinity).then(|| {
            let mut perp = center.clone();
            for (c, b) in center_coords.iter().zip(&bstar) {
                if !c.is_zero() {
                    perp = perp.sub(&b.scale(c));
                }
            }
            let mut levels = vec![vec![ExactScalar::zero(); basis.dim()]; n + 1];
            levels[n] = perp.iter().map(|x| -x.clone()).collect();
            Holder { bstar, levels }
        });
        Ok(Enumerator {
            basis,
            p,
            mu,
            bstar_sq,
            center: center.clone(),
            center_coords,
            limit: ExactScalar::zero(),
            perp_sq,
            radius_pow: ExactScalar::zero(),
            holder,
            rows: RowCut::new(basis, center),
            span: None,
            span_prefix: 0,
            nodes: 0,
            max_nodes: budget.max_nodes,
        })
    }

    fn set_radius(&mut self, radius_pow: &ExactScalar) {
        let l2 = l2_bound_sq(radius_pow, self.p, self.basis.dim());
        self.limit = l2 - &self.perp_sq;
        self.radius_pow = radius_pow.clone();
        if let Some(rows) = self.rows.as_mut() {
            rows.set_radius(radius_pow, self.p);
        }
    }

    /// Updates the level-`k` projection for coefficient offset `diff` and
    /// reports whether the Hölder bound already exceeds the radius. `total`
    /// is the squared length of the projection minus the orthogonal part.
    fn holder_cut(&mut self, k: usize, diff: &ExactScalar, total: &ExactScalar) -> bool {
        let Some(h) = self.holder.as_mut() else {
            return false;
        };
        let (lower, upper) = h.levels.split_at_mut(k + 1);
        let (y, prev) = (&mut lower[k], &upper[0]);
        let mut dual = ExactScalar::zero();
        for ((yi, pi), bi) in y.iter_mut().zip(prev).zip(h.bstar[k].iter()) {
            *yi = if bi.is_zero() {
                pi.clone()
            } else {
                pi + &(diff * bi)
            };
            match self.p {
                PNorm::Infinity => dual += yi.abs(),
                _ => {
                    let a = yi.abs();
                    if a > dual {
                        dual = a;
                    }
                }
            }
        }
        if dual.is_zero() {
            return false;
        }
        let y_sq = total + &self.perp_sq;
        y_sq > &self.radius_pow * &dual
    }

    fn witness(&self, z: &[i64]) -> Witness {
        let vector = self.basis.point(z);
        let norm_pow = norm_power(&vector.sub(&self.center), self.p);
        Witness {
            coefficients: z.to_vec(),
            vector,
            norm_pow,
        }
    }

    /// Starts tracking a span; from now on subtrees inside it are skipped.
    fn track_span(&mut self) {
        self.span = Some(SpanTracker::new(self.basis.rank()));
        self.span_prefix = 0;
    }

    fn in_span(&self, z: &[i64]) -> bool {
        self.span.as_ref().is_some_and(|s| s.contains_ints(z))
    }

    fn span_insert(&mut self, z: &[i64]) -> bool {
        let n = self.basis.rank();
        let Some(span) = self.span.as_mut() else {
            return false;
        };
        if !span.insert_ints(z) {
            return false;
        }
        let mut unit = vec![0i64; n];
        while self.span_prefix < n {
            unit[self.span_prefix] = 1;
            let inside = span.contains_ints(&unit);
            unit[self.span_prefix] = 0;
            if !inside {
                break;
            }
            self.span_prefix += 1;
        }
        true
    }

    fn span_is_full(&self) -> bool {
        self.span.as_ref().is_some_and(SpanTracker::is_full)
    }

    /// Visits every coefficient vector inside the current l2 ellipsoid that
    /// survives the l_p cuts, in depth-first order.
    fn run<F>(&mut self, visit: &mut F) -> Result<()>
    where
        F: FnMut(&mut Self, &[i64]) -> Step,
    {
        let n = self.basis.rank();
        if self.limit.is_negative() {
            return Ok(());
        }
        let mut z = vec![0i64; n];
        self.descend(n - 1, &ExactScalar::zero(), &mut z, visit)
            .map(|_| ())
    }

    /// Returns `true` once a visitor asked to stop.
    fn descend<F>(
        &mut self,
        k: usize,
        partial: &ExactScalar,
        z: &mut [i64],
        visit: &mut F,
    ) -> Result<bool>
    where
        F: FnMut(&mut Self, &[i64]) -> Step,
    {
        let n = z.len();
        let mut c = self.center_coords[k].clone();
        for j in k + 1..n {
            if z[j] != 0 && !self.mu[j][k].is_zero() {
                c -= &self.mu[j][k] * &ExactScalar::from_int(z[j]);
            }
        }
        let nearest = c
            .round()
            .to_i64()
            .ok_or_else(|| Error::InvalidParameter("enumeration coefficient overflow".into()))?;
        // The cost (z - c)^2 ||b*_k||^2 grows monotonically walking outward
        // from the nearest integer, so each direction stops at its first miss.
        for step in [1i64, -1] {
            let mut zk = if step == 1 { nearest } else { nearest - 1 };
            loop {
                self.nodes += 1;
                if self.nodes > self.max_nodes {
                    return Err(Error::BudgetExceeded {
                        limit: self.max_nodes,
                    });
                }
                let diff = ExactScalar::from_int(zk) - &c;
                let total = partial + &(&diff * &diff * &self.bstar_sq[k]);
                if total > self.limit {
                    break;
                }
                let row_cut = match self.rows.as_mut() {
                    Some(rows) => rows.cut(k, zk, self.p),
                    None => Some(false),
                };
                if row_cut.is_none() {
                    self.rows = None;
                }
                if row_cut == Some(true) || self.holder_cut(k, &diff, &total) {
                    zk += step;
                    continue;
                }
                z[k] = zk;
                if k == 0 {
                    match visit(self, z) {
                        Step::Continue => {}
                        Step::Shrink(r) => self.set_radius(&r),
                        Step::Stop => {
                            z[k] = 0;
                            return Ok(true);
                        }
                    }
                } else if !(k <= self.span_prefix && self.in_span(z))
                    && self.descend(k - 1, &total, z, visit)?
                {
                    z[k] = 0;
                    return Ok(true);
                }
                zk += step;
            }
        }
        z[k] = 0;
        Ok(false)
    }

    /// Babai's nearest-plane candidate.
    fn nearest_plane(&self) -> Vec<i64> {
        let n = self.basis.rank();
        let mut z = vec![0i64; n];
        for k in (0..n).rev() {
            let mut c = self.center_coords[k].clone();
            for j in k + 1..n {
                c -= &self.mu[j][k] * &ExactScalar::from_int(z[j]);
            }
            z[k] = c.round().to_i64().unwrap_or(0);
        }
        z
    }
}

fn by_norm_then_coefficients(a: &Witness, b: &Witness) -> Ordering {
    a.norm_pow
        .cmp(&b.norm_pow)
        .then_with(|| a.coefficients.cmp(&b.coefficients))
}

/// All lattice points `v` with `norm_power(v - center) <= radius_pow`, sorted
/// by that norm power and then by coefficient vector.
pub fn enumerate_within(
    basis: &LatticeBasis,
    center: &ExactVector,
    radius_pow: &ExactScalar,
    p: PNorm,
    budget: &EnumBudget,
) -> Result<Vec<Witness>> {
    let mut e = Enumerator::new(basis, center, p, budget)?;
    let points = collect_within(&mut e, radius_pow)?;
    Ok(points)
}

fn collect_within(e: &mut Enumerator<'_>, radius_pow: &ExactScalar) -> Result<Vec<Witness>> {
    e.set_radius(radius_pow);
    let mut out = Vec::new();
    e.run(&mut |e: &mut Enumerator<'_>, z: &[i64]| {
        let w = e.witness(z);
        if &w.norm_pow <= radius_pow {
            out.push(w);
        }
        Step::Continue
    })?;
    out.sort_by(by_norm_then_coefficients);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvpSolution {
    /// `min_v norm_power(v - t)`.
    pub dist_pow: ExactScalar,
    /// A closest lattice vector; among ties, the lexicographically smallest
    /// coefficient vector.
    pub witness: Witness,
}

/// Exact closest vector. Starts from the nearest-plane candidate and shrinks
/// the search radius to every improvement found.
pub fn solve_cvp(
    basis: &LatticeBasis,
    target: &ExactVector,
    p: PNorm,
    budget: &EnumBudget,
) -> Result<CvpSolution> {
    let mut e = Enumerator::new(basis, target, p, budget)?;
    let mut best = e.witness(&e.nearest_plane());
    e.set_radius(&best.norm_pow);
    e.run(&mut |e: &mut Enumerator<'_>, z: &[i64]| improve(&mut best, e.witness(z)))?;
    Ok(CvpSolution {
        dist_pow: best.norm_pow.clone(),
        witness: best,
    })
}

/// Replaces `best` by `w` when `w` comes first in (norm, coefficients)
/// order; asks for a smaller radius when the norm strictly dropped.
fn improve(best: &mut Witness, w: Witness) -> Step {
    if by_norm_then_coefficients(&w, best) != Ordering::Less {
        return Step::Continue;
    }
    let shrink = w.norm_pow < best.norm_pow;
    *best = w;
    if shrink {
        Step::Shrink(best.norm_pow.clone())
    } else {
        Step::Continue
    }
}

/// Exact `λ_1^p..λ_n^p` with witnesses.
///
/// Greedy: the `i`-th witness is the first vector in (norm, coefficients)
/// order outside the span of the previous ones. Each search starts from the
/// shortest basis vector outside that span, shrinks its radius on every
/// improvement and skips subtrees that lie inside the span.
pub fn successive_minima(
    basis: &LatticeBasis,
    p: PNorm,
    budget: &EnumBudget,
) -> Result<SuccessiveMinima> {
    let n = basis.rank();
    let origin = ExactVector::zeros(basis.dim());
    let mut e = Enumerator::new(basis, &origin, p, budget)?;
    e.track_span();
    let mut chosen: Vec<Witness> = Vec::with_capacity(n);
    let mut unit = vec![0i64; n];
    for _ in 0..n {
        let mut start: Option<Witness> = None;
        for j in 0..n {
            unit[j] = 1;
            if !e.in_span(&unit) {
                let w = e.witness(&unit);
                if start
                    .as_ref()
                    .is_none_or(|b| by_norm_then_coefficients(&w, b) == Ordering::Less)
                {
                    start = Some(w);
                }
            }
            unit[j] = 0;
        }
        let mut best = start.expect("the span is not full yet");
        e.set_radius(&best.norm_pow);
        e.run(&mut |e: &mut Enumerator<'_>, z: &[i64]| {
            if e.in_span(z) {
                Step::Continue
            } else {
                improve(&mut best, e.witness(z))
            }
        })?;
        e.span_insert(&best.coefficients);
        chosen.push(best);
    }
    Ok(SuccessiveMinima {
        values_pow: chosen.iter().map(|w| w.norm_pow.clone()).collect(),
        witnesses: chosen,
    })
}

/// Whether the lattice vectors with `norm_power <= radius_pow` span the lattice.
fn spans_within(e: &mut Enumerator<'_>, radius_pow: &ExactScalar) -> Result<bool> {
    e.track_span();
    e.set_radius(radius_pow);
    e.run(&mut |e: &mut Enumerator<'_>, z: &[i64]| {
        if !e.in_span(z) && &e.witness(z).norm_pow <= radius_pow {
            e.span_insert(z);
            if e.span_is_full() {
                return Step::Stop;
            }
        }
        Step::Continue
    })?;
    Ok(e.span_is_full())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SivpAnswer {
    Yes,
    No,
    /// `λ_n` lies strictly between `r` and `γ r`: the promise is violated.
    Inconclusive,
}

/// Decides a gap-SIVP instance exactly: YES iff `λ_n^p <= r^p`, NO iff
/// `λ_n^p > γ^p r^p`, INCONCLUSIVE otherwise.
pub fn decide_sivp(inst: &SivpInstance, budget: &EnumBudget) -> Result<SivpAnswer> {
    let origin = ExactVector::zeros(inst.basis.dim());
    let mut e = Enumerator::new(&inst.basis, &origin, inst.p, budget)?;
    if spans_within(&mut e, &inst.r_pow)? {
        return Ok(SivpAnswer::Yes);
    }
    let outer = &inst.gamma_pow * &inst.r_pow;
    if spans_within(&mut e, &outer)? {
        Ok(SivpAnswer::Inconclusive)
    } else {
        Ok(SivpAnswer::No)
    }
}

/// Both sides of Minkowski's second theorem, raised to rational powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinkowskiCheck {
    pub lambda_pows: Vec<ExactScalar>,
    pub gram_det: ExactScalar,
    /// `(prod λ_i^p)^2`, or `(prod λ_i)^2` for the max norm.
    pub lhs: ExactScalar,
    /// `n^(2n) det(B^T B)^p`, or `det(B^T B)` for the max norm.
    pub rhs: ExactScalar,
    pub holds: bool,
}

/// Full-rank square bases only.
pub fn minkowski_check(
    basis: &LatticeBasis,
    p: PNorm,
    budget: &EnumBudget,
) -> Result<MinkowskiCheck> {
    let n = basis.rank();
    if basis.dim() != n {
        return Err(Error::Dimension(format!(
            "Minkowski's second theorem is checked on full-rank lattices, got {}x{}",
            basis.dim(),
            n
        )));
    }
    let gram_det = gram_determinant(basis.matrix())?;
    let minima = successive_minima(basis, p, budget)?;
    let product: ExactScalar = minima
        .values_pow
        .iter()
        .fold(ExactScalar::one(), |acc, x| acc * x);
    let lhs = product.pow(2);
    let rhs = match p {
        PNorm::Finite(p) => ExactScalar::from_int(n as i64).pow(2 * n as u32) * gram_det.pow(p),
        // The max-norm unit ball has volume 2^n, which gives prod λ_i <= det.
        PNorm::Infinity => gram_det.clone(),
    };
    Ok(MinkowskiCheck {
        lambda_pows: minima.values_pow,
        holds: lhs <= rhs,
        gram_det,
        lhs,
        rhs,
    })
}

/// `true` when Minkowski's inequality holds; `false` would mean a solver bug.
pub fn check_minkowski(basis: &LatticeBasis, p: PNorm, budget: &EnumBudget) -> Result<bool> {
    Ok(minkowski_check(basis, p, budget)?.holds)
}
