//! Unimodular reductions over the integers: column Hermite reduction for
//! integer kernels, Smith normal form, and integer solvability of `A·x = b`.

use num_traits::One;

use crate::matrix::DenseMatrix;
use crate::scalar::{ext_gcd, IntLike};

/// Replaces columns `p` and `j` of both matrices by the unimodular combination
/// that leaves `gcd(a[row][p], a[row][j])` in column `p` and zero in column `j`.
fn column_gcd_step<T: IntLike>(a: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, row: usize, p: usize, j: usize) {
    let x = a[(row, p)].clone();
    let y = a[(row, j)].clone();
    if y.is_zero() {
        return;
    }
    if !x.is_zero() && (y.clone() % x.clone()).is_zero() {
        let q = y / x;
        for m in [a, v] {
            for i in 0..m.rows() {
                if m[(i, p)].is_zero() {
                    continue;
                }
                let delta = q.clone() * m[(i, p)].clone();
                m[(i, j)] = m[(i, j)].clone() - delta;
            }
        }
        return;
    }
    let (g, s, t) = ext_gcd(&x, &y);
    let xg = x / g.clone();
    let yg = y / g;
    for m in [a, v] {
        for i in 0..m.rows() {
            if m[(i, p)].is_zero() && m[(i, j)].is_zero() {
                continue;
            }
            let cp = m[(i, p)].clone();
            let cj = m[(i, j)].clone();
            m[(i, p)] = s.clone() * cp.clone() + t.clone() * cj.clone();
            m[(i, j)] = xg.clone() * cj - yg.clone() * cp;
        }
    }
}

/// A ℤ-basis of `{x ∈ ℤⁿ : A·x = 0}`, returned as column vectors.
pub fn integer_kernel<T: IntLike>(a: &DenseMatrix<T>) -> Vec<Vec<T>> {
    let (rows, cols) = a.shape();
    let mut work = a.clone();
    let mut v = DenseMatrix::<T>::identity(cols);
    let mut p = 0;
    for row in 0..rows {
        if p == cols {
            break;
        }
        let Some(first) = (p..cols).find(|&j| !work[(row, j)].is_zero()) else {
            continue;
        };
        work.swap_cols(p, first);
        v.swap_cols(p, first);
        for j in p + 1..cols {
            column_gcd_step(&mut work, &mut v, row, p, j);
        }
        p += 1;
    }
    (p..cols).map(|j| v.column(j)).collect()
}

/// `U·A·V = D` with `U`, `V` unimodular and `D` diagonal with
/// `d₀ | d₁ | … `, all non-negative.
#[derive(Clone, Debug)]
pub struct Smith<T> {
    pub u: DenseMatrix<T>,
    pub v: DenseMatrix<T>,
    pub diagonal: Vec<T>,
}

impl<T: IntLike> Smith<T> {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }

    /// Non-zero invariant factors.
    pub fn invariant_factors(&self) -> Vec<T> {
        self.diagonal.iter().filter(|d| !d.is_zero()).cloned().collect()
    }
}

pub fn smith_normal_form<T: IntLike>(a: &DenseMatrix<T>) -> Smith<T> {
    let (m, n) = a.shape();
    let mut d = a.clone();
    let mut u = DenseMatrix::<T>::identity(m);
    let mut v = DenseMatrix::<T>::identity(n);

    for t in 0..m.min(n) {
        // smallest non-zero entry of the trailing block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if d[(i, j)].is_zero() {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        d.swap_rows(t, bi);
        u.swap_rows(t, bi);
        d.swap_cols(t, bj);
        v.swap_cols(t, bj);

        loop {
            let mut changed = false;
            for i in t + 1..m {
                if d[(i, t)].is_zero() {
                    continue;
                }
                row_gcd_step(&mut d, &mut u, t, i, t);
                changed = true;
            }
            for j in t + 1..n {
                if d[(t, j)].is_zero() {
                    continue;
                }
                column_gcd_step(&mut d, &mut v, t, t, j);
                changed = true;
            }
            if changed {
                continue;
            }
            // divisibility: fold an offending row into the pivot row
            let pivot = d[(t, t)].clone();
            let offender = (t + 1..m)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !(d[(i, j)].clone() % pivot.clone()).is_zero());
            match offender {
                Some((i, _)) => {
                    for j in 0..n {
                        let x = d[(i, j)].clone();
                        d[(t, j)] = d[(t, j)].clone() + x;
                    }
                    for j in 0..m {
                        let x = u[(i, j)].clone();
                        u[(t, j)] = u[(t, j)].clone() + x;
                    }
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            for j in 0..n {
                d[(t, j)] = -d[(t, j)].clone();
            }
            for j in 0..m {
                u[(t, j)] = -u[(t, j)].clone();
            }
        }
    }
    let diagonal = (0..m.min(n)).map(|i| d[(i, i)].clone()).collect();
    Smith { u, v, diagonal }
}

/// Row analogue of [`column_gcd_step`]: clears `a[r][col]` against the pivot row `p`.
fn row_gcd_step<T: IntLike>(a: &mut DenseMatrix<T>, u: &mut DenseMatrix<T>, p: usize, r: usize, col: usize) {
    let x = a[(p, col)].clone();
    let y = a[(r, col)].clone();
    if !x.is_zero() && (y.clone() % x.clone()).is_zero() {
        let q = y / x;
        for m in [a, u] {
            for j in 0..m.cols() {
                let delta = q.clone() * m[(p, j)].clone();
                m[(r, j)] = m[(r, j)].clone() - delta;
            }
        }
        return;
    }
    let (g, s, t) = ext_gcd(&x, &y);
    let xg = x / g.clone();
    let yg = y / g;
    for m in [a, u] {
        for j in 0..m.cols() {
            let rp = m[(p, j)].clone();
            let rr = m[(r, j)].clone();
            m[(p, j)] = s.clone() * rp.clone() + t.clone() * rr.clone();
            m[(r, j)] = xg.clone() * rr - yg.clone() * rp;
        }
    }
}

/// An integer solution of `A·x = b`, or `None` if none exists over ℤ.
pub fn integer_solution<T: IntLike>(a: &DenseMatrix<T>, b: &[T]) -> Option<Vec<T>> {
    assert_eq!(a.rows(), b.len());
    let smith = smith_normal_form(a);
    let ub = smith.u.mul_vec(b);
    let n = a.cols();
    let mut y = vec![T::zero(); n];
    for (i, c) in ub.iter().enumerate() {
        let d = smith.diagonal.get(i).cloned().unwrap_or_else(T::zero);
        if d.is_zero() {
            if !c.is_zero() {
                return None;
            }
        } else {
            let (q, r) = (c.clone() / d.clone(), c.clone() % d);
            if !r.is_zero() {
                return None;
            }
            y[i] = q;
        }
    }
    Some(smith.v.mul_vec(&y))
}

/// `true` iff the image of the injective integer matrix `a` is a direct
/// summand of ℤᵐ, i.e. every invariant factor equals one.
pub fn image_is_summand<T: IntLike>(a: &DenseMatrix<T>) -> bool {
    smith_normal_form(a).invariant_factors().iter().all(One::is_one)
}
