//! Dense and banded Gaussian elimination at working precision.
//!
//! The dense path (full pivoting) serves the small characteristic matrices of
//! the correction recursion: determinant, one-dimensional null spaces, and the
//! bordered solves. The banded path computes determinants in O(N) so the same
//! root-finding machinery scales to the fine meshes used by the reference
//! oracle.

use rug::ops::CompleteRound;
use rug::Float;

use crate::scalars::PrecisionContext;
use crate::{Error, Result};

/// Row-major dense matrix of reals.
#[derive(Debug, Clone)]
pub(crate) struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Float>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize, ctx: &PrecisionContext) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![ctx.zero(); n_rows * n_cols],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn at(&self, r: usize, c: usize) -> &Float {
        &self.data[r * self.n_cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Float) {
        self.data[r * self.n_cols + c] = v;
    }

    pub fn transpose(&self, ctx: &PrecisionContext) -> Self {
        let mut out = Self::zeros(self.n_cols, self.n_rows, ctx);
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                out.set(c, r, self.at(r, c).clone());
            }
        }
        out
    }

    fn max_abs(&self, ctx: &PrecisionContext) -> Float {
        let mut best = ctx.zero();
        for v in &self.data {
            if *v.as_abs() > best {
                best = v.clone().abs();
            }
        }
        best
    }

    /// Determinant by full-pivot elimination.
    pub fn det(&self, ctx: &PrecisionContext) -> Float {
        assert_eq!(self.n_rows, self.n_cols);
        let (_, _, pivots, sign, _) = self.clone().eliminate_full_pivot(ctx);
        let mut det = ctx.float(sign);
        for p in pivots {
            det *= &p;
        }
        det
    }

    /// Full-pivot Gaussian elimination, in place. Returns
    /// `(upper, col_perm, pivots, sign, rank)` where `upper` is the eliminated
    /// matrix in permuted row/column order (rows are physically swapped,
    /// column swaps recorded in `col_perm`), and `rank` counts pivots above
    /// `sqrt(tolerance) * max_abs`.
    fn eliminate_full_pivot(
        mut self,
        ctx: &PrecisionContext,
    ) -> (Self, Vec<usize>, Vec<Float>, i32, usize) {
        let n = self.n_rows;
        let prec = ctx.prec();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::with_capacity(n);
        let mut sign = 1i32;
        let scale = {
            let m = self.max_abs(ctx);
            if m.is_zero() {
                ctx.one()
            } else {
                m
            }
        };
        let rank_floor = ctx.tolerance().clone().sqrt() * &scale;
        let mut rank = 0usize;

        for k in 0..n {
            // locate largest remaining entry
            let (mut pr, mut pc) = (k, k);
            let mut best = ctx.zero();
            for r in k..n {
                for c in k..n {
                    let v = self.at(r, c);
                    if *v.as_abs() > best {
                        best = v.clone().abs();
                        pr = r;
                        pc = c;
                    }
                }
            }
            if pr != k {
                for c in 0..n {
                    self.data.swap(pr * n + c, k * n + c);
                }
                sign = -sign;
            }
            if pc != k {
                for r in 0..n {
                    self.data.swap(r * n + pc, r * n + k);
                }
                col_perm.swap(pc, k);
                sign = -sign;
            }
            let pivot = self.at(k, k).clone();
            if *pivot.as_abs() > rank_floor {
                rank += 1;
            }
            if pivot.is_zero() {
                pivots.push(pivot);
                continue;
            }
            for r in k + 1..n {
                let factor = (self.at(r, k) / &pivot).complete(prec);
                if factor.is_zero() {
                    continue;
                }
                for c in k..n {
                    let sub = (&factor * self.at(k, c)).complete(prec);
                    self.data[r * n + c] -= sub;
                }
            }
            pivots.push(pivot);
        }
        (self, col_perm, pivots, sign, rank)
    }

    /// Unit-norm vector spanning the null space of a square matrix whose rank
    /// is exactly `n - 1`. The sign is fixed so the component of largest
    /// magnitude is positive.
    pub fn null_vector(&self, ctx: &PrecisionContext) -> Result<Vec<Float>> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        let prec = ctx.prec();
        let (upper, col_perm, _, _, rank) = self.clone().eliminate_full_pivot(ctx);
        if rank < n - 1 {
            return Err(Error::RankDeficiency {
                rank,
                expected: n - 1,
            });
        }
        // back-substitute with the last (free) permuted variable set to 1
        let mut x = vec![ctx.zero(); n];
        x[n - 1] = ctx.one();
        for i in (0..n - 1).rev() {
            let mut acc = ctx.zero();
            for j in i + 1..n {
                acc += (upper.at(i, j) * &x[j]).complete(prec);
            }
            x[i] = -(acc / upper.at(i, i));
        }
        let mut out = vec![ctx.zero(); n];
        for (permuted, original) in col_perm.iter().enumerate() {
            out[*original] = x[permuted].clone();
        }
        normalize_unit(&mut out, ctx)?;
        Ok(out)
    }

    /// Solve a nonsingular square system `A x = b` by full-pivot elimination.
    pub fn solve(&self, rhs: &[Float], ctx: &PrecisionContext) -> Result<Vec<Float>> {
        assert_eq!(self.n_rows, self.n_cols);
        assert_eq!(rhs.len(), self.n_rows);
        let n = self.n_rows;
        let prec = ctx.prec();
        // eliminate on an augmented copy
        let mut aug = DenseMatrix::zeros(n, n + 1, ctx);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.at(r, c).clone());
            }
            aug.set(r, n, rhs[r].clone());
        }
        let scale = {
            let m = self.max_abs(ctx);
            if m.is_zero() {
                ctx.one()
            } else {
                m
            }
        };
        let floor = ctx.tolerance().clone().sqrt() * &scale;
        let mut col_perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pr, mut pc) = (k, k);
            let mut best = ctx.zero();
            for r in k..n {
                for c in k..n {
                    let v = aug.at(r, c);
                    if *v.as_abs() > best {
                        best = v.clone().abs();
                        pr = r;
                        pc = c;
                    }
                }
            }
            if best <= floor {
                return Err(Error::RankDeficiency { rank: k, expected: n });
            }
            if pr != k {
                for c in 0..=n {
                    let a = aug.at(pr, c).clone();
                    let b = aug.at(k, c).clone();
                    aug.set(pr, c, b);
                    aug.set(k, c, a);
                }
            }
            if pc != k {
                for r in 0..n {
                    let a = aug.at(r, pc).clone();
                    let b = aug.at(r, k).clone();
                    aug.set(r, pc, b);
                    aug.set(r, k, a);
                }
                col_perm.swap(pc, k);
            }
            let pivot = aug.at(k, k).clone();
            for r in k + 1..n {
                let factor = (aug.at(r, k) / &pivot).complete(prec);
                if factor.is_zero() {
                    continue;
                }
                for c in k..=n {
                    let sub = (&factor * aug.at(k, c)).complete(prec);
                    let cur = aug.at(r, c).clone();
                    aug.set(r, c, cur - sub);
                }
            }
        }
        let mut x = vec![ctx.zero(); n];
        for i in (0..n).rev() {
            let mut acc = aug.at(i, n).clone();
            for j in i + 1..n {
                acc -= (aug.at(i, j) * &x[j]).complete(prec);
            }
            x[i] = acc / aug.at(i, i);
        }
        let mut out = vec![ctx.zero(); n];
        for (permuted, original) in col_perm.iter().enumerate() {
            out[*original] = x[permuted].clone();
        }
        Ok(out)
    }
}

/// Scale a vector to unit Euclidean norm; the component of largest magnitude
/// is made positive.
pub(crate) fn normalize_unit(v: &mut [Float], ctx: &PrecisionContext) -> Result<()> {
    let prec = ctx.prec();
    let mut norm2 = ctx.zero();
    for x in v.iter() {
        norm2 += (x * x).complete(prec);
    }
    let norm = norm2.sqrt();
    if ctx.below_tol(&norm, &ctx.one()) {
        return Err(Error::ZeroNorm);
    }
    let mut max_idx = 0;
    for (i, x) in v.iter().enumerate() {
        if *x.as_abs() > *v[max_idx].as_abs() {
            max_idx = i;
        }
    }
    let flip = v[max_idx].is_sign_negative();
    for x in v.iter_mut() {
        *x /= &norm;
        if flip {
            *x = -x.clone();
        }
    }
    Ok(())
}

/// One row of a banded matrix: entries start at column `first_col`.
#[derive(Debug, Clone)]
pub(crate) struct BandRow {
    pub first_col: usize,
    pub entries: Vec<Float>,
}

impl BandRow {
    fn get(&self, col: usize, ctx: &PrecisionContext) -> Float {
        if col < self.first_col || col >= self.first_col + self.entries.len() {
            ctx.zero()
        } else {
            self.entries[col - self.first_col].clone()
        }
    }

    fn last_col(&self) -> usize {
        self.first_col + self.entries.len() - 1
    }
}

/// Determinant of a banded matrix by partial-pivot elimination over rows,
/// after rescaling every row to unit max-magnitude. Returns
/// `(scaled_det, scale_product)`: the true determinant is their product, and
/// the scaled value has the same sign and the same roots in any parameter.
///
/// Rows must be sorted by `first_col` (nondecreasing).
pub(crate) fn banded_det_scaled(
    mut rows: Vec<BandRow>,
    ctx: &PrecisionContext,
) -> (Float, Float) {
    let n = rows.len();
    let prec = ctx.prec();
    let mut scale_product = ctx.one();
    for row in rows.iter_mut() {
        let mut m = ctx.zero();
        for e in &row.entries {
            if *e.as_abs() > m {
                m = e.clone().abs();
            }
        }
        if m.is_zero() {
            return (ctx.zero(), ctx.one());
        }
        for e in row.entries.iter_mut() {
            *e /= &m;
        }
        scale_product *= m;
    }

    let mut det = ctx.one();
    for k in 0..n {
        // eligible pivot rows: index >= k with first_col <= k; rows stay
        // sorted by first_col throughout elimination
        let mut limit = k;
        while limit < n && rows[limit].first_col <= k {
            limit += 1;
        }
        if limit == k {
            return (ctx.zero(), scale_product);
        }
        let mut pivot_idx = k;
        let mut best = ctx.zero();
        for (r, row) in rows.iter().enumerate().take(limit).skip(k) {
            let v = row.get(k, ctx).abs();
            if v > best {
                best = v;
                pivot_idx = r;
            }
        }
        if best.is_zero() {
            return (ctx.zero(), scale_product);
        }
        if pivot_idx != k {
            rows.swap(pivot_idx, k);
            det = -det;
        }
        let pivot = rows[k].get(k, ctx);
        det *= &pivot;
        let pivot_row = rows[k].clone();
        for row in rows.iter_mut().take(limit).skip(k + 1) {
            let lead = row.get(k, ctx);
            if lead.is_zero() {
                continue;
            }
            let factor = lead / &pivot;
            // widen the row to cover the pivot row's span
            let new_last = row.last_col().max(pivot_row.last_col());
            let mut entries = Vec::with_capacity(new_last - k);
            for col in k + 1..=new_last {
                let mut v = row.get(col, ctx);
                v -= (&factor * &pivot_row.get(col, ctx)).complete(prec);
                entries.push(v);
            }
            row.first_col = k + 1;
            row.entries = entries;
        }
    }
    (det, scale_product)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50, 10).unwrap()
    }

    fn from_rows(rows: &[&[i32]], c: &PrecisionContext) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows.len(), rows[0].len(), c);
        for (r, row) in rows.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                m.set(r, col, c.float(*v));
            }
        }
        m
    }

    #[test]
    fn det_of_small_matrices() {
        let c = ctx();
        let m = from_rows(&[&[2, 1], &[1, 3]], &c);
        assert!(c.below_tol(&(m.det(&c) - 5u32), &c.one()));
        let m3 = from_rows(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]], &c);
        assert!(c.below_tol(&(m3.det(&c) + 3u32), &c.one()));
    }

    #[test]
    fn null_vector_of_singular_matrix() {
        let c = ctx();
        // rank 2, null vector along (1, 1, -1)
        let m = from_rows(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 2]], &c);
        let v = m.null_vector(&c).unwrap();
        // check A v = 0 and unit norm
        for r in 0..3 {
            let mut acc = c.zero();
            for j in 0..3 {
                acc += (m.at(r, j) * &v[j]).complete(c.prec());
            }
            assert!(c.below_tol(&acc, &c.one()));
        }
        let mut norm2 = c.zero();
        for x in &v {
            norm2 += (x * x).complete(c.prec());
        }
        assert!(c.below_tol(&(norm2 - 1u32), &c.one()));
    }

    #[test]
    fn rank_deficiency_detected() {
        let c = ctx();
        let m = from_rows(&[&[1, 1, 1], &[2, 2, 2], &[3, 3, 3]], &c);
        assert!(matches!(
            m.null_vector(&c),
            Err(Error::RankDeficiency { .. })
        ));
    }

    #[test]
    fn solve_square_system() {
        let c = ctx();
        let m = from_rows(&[&[2, 1], &[1, 3]], &c);
        let rhs = [c.float(5), c.float(10)];
        let x = m.solve(&rhs, &c).unwrap();
        assert!(c.below_tol(&(x[0].clone() - 1u32), &c.one()));
        assert!(c.below_tol(&(x[1].clone() - 3u32), &c.one()));
    }

    #[test]
    fn banded_det_matches_dense() {
        let c = ctx();
        // tridiagonal-ish 5x5
        let dense = from_rows(
            &[
                &[2, -1, 0, 0, 0],
                &[-1, 2, -1, 0, 0],
                &[0, -1, 2, -1, 0],
                &[0, 0, -1, 2, -1],
                &[0, 0, 0, -1, 2],
            ],
            &c,
        );
        let rows = vec![
            BandRow { first_col: 0, entries: vec![c.float(2), c.float(-1)] },
            BandRow { first_col: 0, entries: vec![c.float(-1), c.float(2), c.float(-1)] },
            BandRow { first_col: 1, entries: vec![c.float(-1), c.float(2), c.float(-1)] },
            BandRow { first_col: 2, entries: vec![c.float(-1), c.float(2), c.float(-1)] },
            BandRow { first_col: 3, entries: vec![c.float(-1), c.float(2)] },
        ];
        let (scaled, scale) = banded_det_scaled(rows, &c);
        let banded = scaled * scale;
        let diff = (&banded - &dense.det(&c)).complete(c.prec());
        assert!(c.below_tol(&diff, &banded));
    }
}
