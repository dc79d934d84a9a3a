//! Small dense linear algebra: a checked GEMM wrapper and a row-major matrix
//! type sized for state spaces (tens of states, not thousands).

use crate::scalar::Scalar;

/// Strided read-only view of a `rows x cols` matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a, S> {
    pub data: &'a [S],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, S> MatRef<'a, S> {
    pub fn row_major(data: &'a [S], rows: usize, cols: usize) -> Self {
        MatRef {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    /// The transpose of a row-major `rows x cols` buffer, without copying.
    pub fn transposed(data: &'a [S], rows: usize, cols: usize) -> Self {
        MatRef {
            data,
            rows: cols,
            cols: rows,
            row_stride: 1,
            col_stride: cols,
        }
    }

    fn max_index(&self) -> Option<usize> {
        if self.rows == 0 || self.cols == 0 {
            None
        } else {
            Some((self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride)
        }
    }
}

/// `c <- alpha * a * b + beta * c`, with `c` row-major `a.rows x b.cols`.
///
/// Panics if the shapes disagree or a view would read out of bounds.
pub fn gemm<S: Scalar>(alpha: S, a: MatRef<'_, S>, b: MatRef<'_, S>, beta: S, c: &mut [S]) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension mismatch");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(c.len() >= m * n, "gemm output buffer too small");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in c[..m * n].iter_mut() {
            *v = if beta == S::zero() {
                S::zero()
            } else {
                *v * beta
            };
        }
        return;
    }
    if let Some(ix) = a.max_index() {
        assert!(ix < a.data.len(), "gemm lhs view out of bounds");
    }
    if let Some(ix) = b.max_index() {
        assert!(ix < b.data.len(), "gemm rhs view out of bounds");
    }
    // SAFETY: bounds of all three operands were checked above.
    unsafe {
        S::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let mut out = Self::zeros(self.n);
        gemm(
            S::one(),
            MatRef::row_major(&self.data, self.n, self.n),
            MatRef::row_major(&rhs.data, rhs.n, rhs.n),
            S::zero(),
            &mut out.data,
        );
        out
    }

    /// Row vector times matrix: `v * self`.
    pub fn left_mul(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![S::zero(); self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == S::zero() {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        out
    }

    pub fn scaled(&self, k: S) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * k).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> S {
        (0..self.n)
            .map(|i| self.row(i).iter().fold(S::zero(), |acc, &x| acc + x.abs()))
            .fold(S::zero(), S::max)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> S {
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(S::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// Solves `self * X = rhs` by LU with partial pivoting. `None` if singular.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[pivot * n + col] == S::zero() {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    x.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == S::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
                for j in 0..n {
                    let v = x[col * n + j];
                    x[r * n + j] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..n {
                let mut acc = x[col * n + j];
                for k in col + 1..n {
                    acc -= a[col * n + k] * x[k * n + j];
                }
                x[col * n + j] = acc / d;
            }
        }
        Some(Matrix { n, data: x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_naive_product_with_transpose() {
        // a: 2x3, b: 2x3 used transposed -> 2x2
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let mut c = [0.0f64; 4];
        gemm(
            1.0,
            MatRef::row_major(&a, 2, 3),
            MatRef::transposed(&b, 2, 3),
            0.0,
            &mut c,
        );
        assert_eq!(c, [50.0, 68.0, 122.0, 167.0]);
    }

    #[test]
    fn solve_recovers_inverse() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 2.0, 5.0],
        ]);
        let inv = m.solve(&Matrix::identity(3)).unwrap();
        let id = m.matmul(&inv);
        assert!(id.max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn singular_matrix_has_no_solution() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(m.solve(&Matrix::identity(2)).is_none());
    }
}
