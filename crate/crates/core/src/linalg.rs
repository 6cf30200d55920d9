//! Small linear-algebra helpers: numeric rank and least squares over ℂ, and
//! exact elimination over the field of rational expressions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{Expr, SampleDomain, ZeroVerdict};

/// Relative singular-value cutoff used for numeric rank.
pub const RANK_TOL: f64 = 1e-8;
/// Relative residual bound for numeric span membership.
pub const RESIDUAL_TOL: f64 = 1e-8;

fn matrix(cols: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let rows = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Numeric rank of the matrix with the given columns.
pub fn rank(cols: &[Vec<Complex64>]) -> usize {
    if cols.is_empty() || cols[0].is_empty() {
        return 0;
    }
    let sv = matrix(cols).singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * max.max(1.0)).count()
}

/// `min_c |A c − b| / max(1, |b|)` for `A` given by columns.
pub fn lstsq_residual(cols: &[Vec<Complex64>], b: &[Complex64]) -> f64 {
    let bn = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if cols.is_empty() {
        return bn / bn.max(1.0);
    }
    let a = matrix(cols);
    let bv = DMatrix::from_fn(b.len(), 1, |i, _| b[i]);
    let svd = a.clone().svd(true, true);
    let c = match svd.solve(&bv, RANK_TOL) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    let r = &a * c - bv;
    r.norm() / bn.max(1.0)
}

/// Result of an exact span-membership solve.
pub struct ExactSolve {
    /// False when the right-hand side is outside the span.
    pub member: bool,
    /// Entries of the reduced right-hand side that failed to vanish.
    pub residual: Vec<Expr>,
    /// True when some pivot or residual decision was made by sampling.
    pub sampled: bool,
}

fn decided(v: ZeroVerdict) -> Result<(bool, bool)> {
    match v {
        ZeroVerdict::Exact(z) => Ok((z, false)),
        ZeroVerdict::Probable(z) => Ok((z, true)),
        ZeroVerdict::Undecidable => Err(Error::Undecidable("pivot could not be decided".into())),
    }
}

/// Decide whether `b` lies in the span of `cols` over rational expressions by
/// Gaussian elimination. Fails with `DegenerateFrame` when the columns are
/// dependent.
pub fn exact_span_member(cols: &[Vec<Expr>], b: &[Expr], domain: &SampleDomain) -> Result<ExactSolve> {
    let n = cols.len();
    let rows = b.len();
    let mut m: Vec<Vec<Expr>> = (0..rows)
        .map(|i| {
            let mut r: Vec<Expr> = cols.iter().map(|c| c[i].clone()).collect();
            r.push(b[i].clone());
            r
        })
        .collect();
    let mut sampled = false;
    let mut used = vec![false; rows];
    for c in 0..n {
        let mut pivot: Option<usize> = None;
        let mut best = usize::MAX;
        for (r, row) in m.iter().enumerate() {
            if used[r] || row[c].is_zero() {
                continue;
            }
            let (z, s) = decided(row[c].is_zero_on(domain))?;
            sampled |= s;
            if !z && row[c].term_count() < best {
                best = row[c].term_count();
                pivot = Some(r);
            }
        }
        let p = pivot.ok_or_else(|| Error::DegenerateFrame(format!("column {} is dependent on the others", c + 1)))?;
        used[p] = true;
        let prow = m[p].clone();
        let inv = prow[c].recip()?;
        for (r, row) in m.iter_mut().enumerate() {
            if r == p || row[c].is_zero() {
                continue;
            }
            let factor = row[c].mul(&inv);
            for j in c..=n {
                if !prow[j].is_zero() {
                    row[j] = row[j].sub(&factor.mul(&prow[j])).simplify();
                }
            }
            row[c] = Expr::zero();
        }
    }
    let mut residual = Vec::new();
    for (r, row) in m.iter().enumerate() {
        if used[r] || row[n].is_zero() {
            continue;
        }
        let (z, s) = decided(row[n].is_zero_on(domain))?;
        sampled |= s;
        if !z {
            residual.push(row[n].clone());
        }
    }
    Ok(ExactSolve {
        member: residual.is_empty(),
        residual,
        sampled,
    })
}
