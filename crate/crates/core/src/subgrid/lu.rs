//! Sparse LU factorisation over any [`Scalar`] field.
//!
//! Columns are eliminated in a caller-supplied static order; within a column
//! the pivot row is the sparsest acceptable row (threshold partial pivoting
//! for floats, any nonzero entry for exact arithmetic).

use std::collections::BTreeSet;

use crate::error::LinearError;
use crate::scalar::Scalar;

/// Fraction of the column maximum a float pivot must reach.
const FLOAT_PIVOT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct SparseLu<C> {
    dim: usize,
    pivot_rows: Vec<usize>,
    pivot_cols: Vec<usize>,
    /// `(row, pivot_row, multiplier)`: `b[row] -= multiplier * b[pivot_row]`.
    lower: Vec<(usize, usize, C)>,
    /// Off-pivot entries of each pivot row, by step.
    upper: Vec<Vec<(usize, C)>>,
    diag: Vec<C>,
}

impl<C: Scalar> SparseLu<C> {
    /// Factors the square matrix given by sparse `rows` (entries `(column, value)`).
    pub fn factor(
        rows: Vec<Vec<(usize, C)>>,
        column_order: &[usize],
    ) -> Result<Self, LinearError> {
        let dim = rows.len();
        assert_eq!(column_order.len(), dim, "column order must cover every column");
        let mut rows: Vec<Vec<(usize, C)>> = rows
            .into_iter()
            .map(|mut r| {
                r.retain(|(_, v)| !v.is_zero());
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0f64, |m, (_, v)| m.max(v.magnitude()));
        let tiny = if C::EXACT { 0.0 } else { 1e-13 * scale };

        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); dim];
        for (r, row) in rows.iter().enumerate() {
            for (c, _) in row {
                col_rows[*c].insert(r);
            }
        }

        let mut lu = SparseLu {
            dim,
            pivot_rows: Vec::with_capacity(dim),
            pivot_cols: Vec::with_capacity(dim),
            lower: Vec::new(),
            upper: Vec::with_capacity(dim),
            diag: Vec::with_capacity(dim),
        };

        for (step, &col) in column_order.iter().enumerate() {
            let candidates: Vec<usize> = col_rows[col].iter().copied().collect();
            let max = candidates
                .iter()
                .map(|&r| entry_of(&rows, r, col).magnitude())
                .fold(0.0f64, f64::max);
            if candidates.is_empty() || max <= tiny {
                return Err(LinearError::Singular { step, column: col });
            }
            let accept = if C::EXACT { 0.0 } else { FLOAT_PIVOT_THRESHOLD * max };
            let pivot = candidates
                .iter()
                .copied()
                .filter(|&r| entry_of(&rows, r, col).magnitude() >= accept)
                .min_by(|&x, &y| {
                    rows[x].len().cmp(&rows[y].len()).then_with(|| {
                        entry_of(&rows, y, col)
                            .magnitude()
                            .total_cmp(&entry_of(&rows, x, col).magnitude())
                    })
                })
                .expect("at least the maximal entry is acceptable");

            let prow = std::mem::take(&mut rows[pivot]);
            for (c, _) in &prow {
                col_rows[*c].remove(&pivot);
            }
            let pk = prow.binary_search_by_key(&col, |e| e.0).unwrap();
            let pval = prow[pk].1.clone();

            for &r in candidates.iter().filter(|&&r| r != pivot) {
                let mut m = entry_of(&rows, r, col).clone();
                m /= &pval;
                let old = std::mem::take(&mut rows[r]);
                let merged = eliminate(&old, &prow, &m, col);
                for (c, _) in &old {
                    col_rows[*c].remove(&r);
                }
                for (c, _) in &merged {
                    col_rows[*c].insert(r);
                }
                rows[r] = merged;
                lu.lower.push((r, pivot, m));
            }

            lu.pivot_rows.push(pivot);
            lu.pivot_cols.push(col);
            lu.upper
                .push(prow.iter().filter(|e| e.0 != col).cloned().collect());
            lu.diag.push(pval);
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored factor entries (fill-in diagnostic).
    pub fn stored_entries(&self) -> usize {
        self.lower.len() + self.upper.iter().map(Vec::len).sum::<usize>() + self.dim
    }

    pub fn solve(&self, rhs: &[C]) -> Result<Vec<C>, LinearError> {
        if rhs.len() != self.dim {
            return Err(LinearError::RhsLength {
                expected: self.dim,
                found: rhs.len(),
            });
        }
        let mut b = rhs.to_vec();
        for (r, p, m) in &self.lower {
            if b[*p].is_zero() {
                continue;
            }
            let mut t = m.clone();
            t *= &b[*p];
            b[*r] -= &t;
        }
        let mut x = vec![C::zero(); self.dim];
        for step in (0..self.dim).rev() {
            let mut s = b[self.pivot_rows[step]].clone();
            for (c, u) in &self.upper[step] {
                if x[*c].is_zero() {
                    continue;
                }
                let mut t = u.clone();
                t *= &x[*c];
                s -= &t;
            }
            s /= &self.diag[step];
            x[self.pivot_cols[step]] = s;
        }
        Ok(x)
    }
}

fn entry_of<C>(rows: &[Vec<(usize, C)>], r: usize, col: usize) -> &C {
    let row = &rows[r];
    let k = row
        .binary_search_by_key(&col, |e| e.0)
        .expect("column index out of sync");
    &row[k].1
}

/// `old - m * pivot_row`, with column `col` removed.
fn eliminate<C: Scalar>(
    old: &[(usize, C)],
    pivot_row: &[(usize, C)],
    m: &C,
    col: usize,
) -> Vec<(usize, C)> {
    let mut out = Vec::with_capacity(old.len() + pivot_row.len());
    let (mut i, mut j) = (0, 0);
    while i < old.len() || j < pivot_row.len() {
        let ci = old.get(i).map_or(usize::MAX, |e| e.0);
        let cj = pivot_row.get(j).map_or(usize::MAX, |e| e.0);
        let (c, v) = if ci < cj {
            i += 1;
            (ci, old[i - 1].1.clone())
        } else if cj < ci {
            j += 1;
            let mut t = pivot_row[j - 1].1.clone();
            t *= m;
            (cj, -t)
        } else {
            i += 1;
            j += 1;
            let mut t = pivot_row[j - 1].1.clone();
            t *= m;
            let mut v = old[i - 1].1.clone();
            v -= &t;
            (ci, v)
        };
        if c != col && !v.is_zero() {
            out.push((c, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn dense_mul(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        rows.iter()
            .map(|r| r.iter().map(|(c, v)| v * x[*c]).sum())
            .collect()
    }

    #[test]
    fn exact_small_system() {
        // [[0,2],[1,1]] x = [2,3] -> x = [2,1]
        let rows = vec![
            vec![(1, rational(2, 1))],
            vec![(0, rational(1, 1)), (1, rational(1, 1))],
        ];
        let lu = SparseLu::factor(rows, &[0, 1]).unwrap();
        let x = lu.solve(&[rational(2, 1), rational(3, 1)]).unwrap();
        assert_eq!(x, vec![rational(2, 1), rational(1, 1)]);
    }

    #[test]
    fn singular_detected() {
        let rows: Vec<Vec<(usize, BigRational)>> = vec![
            vec![(0, rational(1, 1)), (1, rational(2, 1))],
            vec![(0, rational(2, 1)), (1, rational(4, 1))],
        ];
        assert!(matches!(
            SparseLu::factor(rows, &[0, 1]),
            Err(LinearError::Singular { .. })
        ));
    }

    #[test]
    fn rhs_length_checked() {
        let lu = SparseLu::factor(vec![vec![(0, 1.0)]], &[0]).unwrap();
        assert!(lu.solve(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn float_solve_recovers_solution(
            n in 2usize..12,
            seed in prop::collection::vec(-3.0f64..3.0, 144),
            xs in prop::collection::vec(-1.0f64..1.0, 12),
        ) {
            // diagonally dominant random sparse matrix
            let rows: Vec<Vec<(usize, f64)>> = (0..n)
                .map(|i| {
                    let mut r = vec![(i, 10.0 + seed[i].abs())];
                    for j in 0..n {
                        if j != i && (i * 7 + j * 3) % 4 == 0 {
                            r.push((j, seed[(i * n + j) % 144]));
                        }
                    }
                    r
                })
                .collect();
            let x = &xs[..n];
            let b = dense_mul(&rows, x);
            let order: Vec<usize> = (0..n).rev().collect();
            let lu = SparseLu::factor(rows, &order).unwrap();
            let got = lu.solve(&b).unwrap();
            for (g, w) in got.iter().zip(x) {
                prop_assert!((g - w).abs() < 1e-10);
            }
        }
    }
}
