//! Independent oracles shared by the integration tests. Nothing here calls
//! the solver or reduction code; lattices are plain `i64` column lists.

#![allow(dead_code)]

use rand::{Rng, RngExt};

/// Best number of simultaneously satisfiable clauses, by depth-first search
/// over variables with an upper-bound cut.
pub fn max_sat(n: usize, clauses: &[Vec<i64>]) -> usize {
    fn go(
        var: usize,
        n: usize,
        clauses: &[Vec<i64>],
        assign: &mut Vec<Option<bool>>,
        best: &mut usize,
    ) {
        let mut sat = 0;
        let mut open = 0;
        for c in clauses {
            let mut done = false;
            let mut undecided = false;
            for &l in c {
                match assign[l.unsigned_abs() as usize] {
                    Some(v) if v == (l > 0) => done = true,
                    None => undecided = true,
                    _ => {}
                }
            }
            if done {
                sat += 1;
            } else if undecided {
                open += 1;
            }
        }
        if sat + open <= *best {
            return;
        }
        if var > n {
            *best = sat;
            return;
        }
        for v in [false, true] {
            assign[var] = Some(v);
            go(var + 1, n, clauses, assign, best);
        }
        assign[var] = None;
    }
    let mut best = 0;
    let mut assign = vec![None; n + 1];
    if clauses.is_empty() {
        return 0;
    }
    go(1, n, clauses, &mut assign, &mut best);
    best
}

/// Number of clauses satisfied by `bits` (`bits[i]` is variable `i + 1`).
pub fn satisfied(clauses: &[Vec<i64>], bits: &[bool]) -> usize {
    clauses
        .iter()
        .filter(|c| {
            c.iter()
                .any(|&l| bits[l.unsigned_abs() as usize - 1] == (l > 0))
        })
        .count()
}

/// Random clauses over distinct variables, uniform signs.
pub fn random_clauses(rng: &mut impl Rng, n: usize, m: usize, width: usize) -> Vec<Vec<i64>> {
    (0..m)
        .map(|_| {
            let mut vars: Vec<i64> = Vec::with_capacity(width);
            while vars.len() < width {
                let v = rng.random_range(1..=n as i64);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.into_iter()
                .map(|v| if rng.random_bool(0.5) { -v } else { v })
                .collect()
        })
        .collect()
}

/// `sum |x_i|^p`, or `max |x_i|` when `p` is `None`.
pub fn norm_pow(x: &[i64], p: Option<u32>) -> i128 {
    match p {
        Some(p) => x.iter().map(|&v| (v as i128).abs().pow(p)).sum(),
        None => x.iter().map(|&v| (v as i128).abs()).max().unwrap_or(0),
    }
}

/// `B z` for a basis given by columns.
pub fn combine(cols: &[Vec<i64>], z: &[i64]) -> Vec<i64> {
    let d = cols.first().map_or(0, Vec::len);
    let mut out = vec![0i64; d];
    for (c, &k) in cols.iter().zip(z) {
        for (o, &x) in out.iter_mut().zip(c) {
            *o += k * x;
        }
    }
    out
}

/// Determinant of a small integer matrix by fraction-free elimination.
pub fn det_i128(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

pub fn gram(cols: &[Vec<i64>]) -> Vec<Vec<i128>> {
    cols.iter()
        .map(|a| {
            cols.iter()
                .map(|b| a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum())
                .collect()
        })
        .collect()
}

pub fn is_independent(cols: &[Vec<i64>]) -> bool {
    det_i128(gram(cols)) != 0
}

/// `n` independent random columns of length `d` with entries in `[-bound, bound]`.
pub fn random_basis(rng: &mut impl Rng, d: usize, n: usize, bound: i64) -> Vec<Vec<i64>> {
    loop {
        let cols: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-bound..=bound)).collect())
            .collect();
        if is_independent(&cols) {
            return cols;
        }
    }
}

/// Applies a random product of elementary unimodular column operations.
pub fn unimodular_mix(rng: &mut impl Rng, cols: &[Vec<i64>], steps: usize) -> Vec<Vec<i64>> {
    let mut out = cols.to_vec();
    let n = out.len();
    for _ in 0..steps {
        match rng.random_range(0..3) {
            0 if n > 1 => {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                let k = if rng.random_bool(0.5) { 1 } else { -1 };
                let src = out[j].clone();
                for (x, s) in out[i].iter_mut().zip(&src) {
                    *x += k * s;
                }
            }
            1 if n > 1 => {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                out.swap(i, j);
            }
            _ => {
                let i = rng.random_range(0..n);
                for x in &mut out[i] {
                    *x = -*x;
                }
            }
        }
    }
    out
}

/// Upper bound on the Euclidean length of a vector whose l_p norm power is
/// at most `radius_pow` in dimension `d`.
fn l2_radius(radius_pow: f64, p: Option<u32>, d: usize) -> f64 {
    let d = d as f64;
    match p {
        Some(p) => {
            let r = radius_pow.powf(1.0 / p as f64);
            if p <= 2 {
                r
            } else {
                r * d.powf(0.5 - 1.0 / p as f64)
            }
        }
        None => radius_pow * d.sqrt(),
    }
}

/// Rows of `(B^T B)^{-1} B^T` in floating point: coefficient `j` of a lattice
/// vector `v` is `<dual_j, v>`.
fn dual_rows(cols: &[Vec<i64>]) -> Vec<Vec<f64>> {
    let n = cols.len();
    let d = cols[0].len();
    let g: Vec<Vec<f64>> = gram(cols)
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as f64).collect())
        .collect();
    // Gauss-Jordan on [G | I].
    let mut a: Vec<Vec<f64>> = g
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .unwrap();
        a.swap(k, piv);
        let lead = a[k][k];
        for v in &mut a[k] {
            *v /= lead;
        }
        for i in 0..n {
            if i != k {
                let f = a[i][k];
                let rk = a[k].clone();
                for (x, y) in a[i].iter_mut().zip(rk) {
                    *x -= f * y;
                }
            }
        }
    }
    (0..n)
        .map(|j| {
            (0..d)
                .map(|c| (0..n).map(|i| a[j][n + i] * cols[i][c] as f64).sum())
                .collect()
        })
        .collect()
}

/// Every `(z, norm_pow(Bz - center))` with norm power at most `radius_pow`,
/// found by scanning a coefficient box derived from dual-basis bounds.
/// Sorted by norm power, then by `z`.
pub fn naive_within(
    cols: &[Vec<i64>],
    center: &[i64],
    radius_pow: i128,
    p: Option<u32>,
) -> Vec<(Vec<i64>, i128)> {
    let n = cols.len();
    let d = center.len();
    let r2 = l2_radius(radius_pow as f64, p, d);
    let duals = dual_rows(cols);
    let ranges: Vec<(i64, i64)> = duals
        .iter()
        .map(|row| {
            let c: f64 = row.iter().zip(center).map(|(x, &y)| x * y as f64).sum();
            let len: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            let slack = len * r2 + 1.0;
            ((c - slack).floor() as i64, (c + slack).ceil() as i64)
        })
        .collect();
    let mut out = Vec::new();
    let mut z: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let v = combine(cols, &z);
        let diff: Vec<i64> = v.iter().zip(center).map(|(a, b)| a - b).collect();
        let np = norm_pow(&diff, p);
        if np <= radius_pow {
            out.push((z.clone(), np));
        }
        let mut k = 0;
        loop {
            if k == n {
                out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                return out;
            }
            if z[k] < ranges[k].1 {
                z[k] += 1;
                break;
            }
            z[k] = ranges[k].0;
            k += 1;
        }
    }
}

/// Number of coefficient vectors [`naive_within`] would scan.
pub fn box_volume(cols: &[Vec<i64>], center: &[i64], radius_pow: i128, p: Option<u32>) -> f64 {
    let r2 = l2_radius(radius_pow as f64, p, center.len());
    dual_rows(cols)
        .iter()
        .map(|row| {
            let len: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            2.0 * (len * r2 + 1.0).ceil() + 2.0
        })
        .product()
}
