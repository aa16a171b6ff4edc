//! Dense row reduction over a [`Scalar`] field.
//!
//! Pivots are accepted when they are not negligible, so rational matrices are
//! reduced exactly and float matrices use the scalar tolerance.

use crate::scalar::Scalar;

/// Reduced row echelon form. Returns the reduced matrix and pivot columns.
pub fn rref<S: Scalar>(rows: &[Vec<S>]) -> (Vec<Vec<S>>, Vec<usize>) {
    let mut m: Vec<Vec<S>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let pivot = if S::EXACT {
            (r..m.len()).find(|&i| !m[i][c].is_negligible())
        } else {
            (r..m.len())
                .filter(|&i| !m[i][c].is_negligible())
                .max_by(|&a, &b| {
                    m[a][c]
                        .abs()
                        .partial_cmp(&m[b][c].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        };
        let Some(p) = pivot else { continue };
        m.swap(r, p);
        let inv = S::one() / m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for i in 0..m.len() {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c].clone();
            for j in 0..ncols {
                if !m[r][j].is_zero() {
                    let delta = factor.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - delta;
                }
            }
            m[i][c] = S::zero();
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank<S: Scalar>(rows: &[Vec<S>]) -> usize {
    rref(rows).1.len()
}

/// Rank of a set of vectors given as columns (each inner vector is one column).
pub fn column_rank<S: Scalar>(columns: &[Vec<S>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    rank(columns)
}

/// Basis of the right null space `{x : A x = 0}` of an `m x n` matrix.
pub fn null_space<S: Scalar>(rows: &[Vec<S>], ncols: usize) -> Vec<Vec<S>> {
    let (reduced, pivots) = rref(rows);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); ncols];
            v[f] = S::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -reduced[r][f].clone();
            }
            v
        })
        .collect()
}

/// Solves `A x = b` when `A` is square and invertible.
pub fn solve_square<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) || b.len() != n {
        return None;
    }
    let augmented: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let (reduced, pivots) = rref(&augmented);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(reduced.into_iter().map(|row| row[n].clone()).collect())
}

/// Inverse of a square matrix, if it exists.
pub fn inverse<S: Scalar>(a: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return None;
    }
    let augmented: Vec<Vec<S>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
            r
        })
        .collect();
    let (reduced, pivots) = rref(&augmented);
    if pivots.len() < n || pivots[..n].iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(reduced.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Matrix product of row-major matrices.
pub fn matmul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let inner = b.len();
    let ncols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..ncols)
                .map(|j| {
                    (0..inner).fold(S::zero(), |acc, k| {
                        if row[k].is_zero() || b[k][j].is_zero() {
                            acc
                        } else {
                            acc + row[k].clone() * b[k][j].clone()
                        }
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| int(v)).collect())
            .collect()
    }

    #[test]
    fn rank_of_dependent_rows() {
        assert_eq!(rank(&m(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]])), 2);
        assert_eq!(rank(&m(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank::<Rational>(&[]), 0);
    }

    #[test]
    fn null_space_is_annihilated() {
        let a = m(&[&[-4, 2, 0], &[1, -2, 1], &[3, 0, -1]]);
        let basis = null_space(&a, 3);
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        let scaled: Vec<Rational> = v.iter().map(|x| x.clone() / v[0].clone()).collect();
        assert_eq!(scaled, vec![int(1), int(2), int(3)]);
    }

    #[test]
    fn inverse_and_solve() {
        let y = m(&[&[3, 1], &[0, 2]]);
        let inv = inverse(&y).unwrap();
        assert_eq!(
            inv,
            vec![vec![ratio(1, 3), ratio(-1, 6)], vec![int(0), ratio(1, 2)]]
        );
        let x = solve_square(&y, &[int(1), int(2)]).unwrap();
        assert_eq!(x, vec![int(0), int(1)]);
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn float_rank_uses_tolerance() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-12]];
        assert_eq!(rank(&a), 1);
    }
}
