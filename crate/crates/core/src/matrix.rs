//! Small dense complex matrices (a handful of rows at most).

use num_complex::Complex;

use crate::scalar::Real;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Panics if `rows` has ragged lengths.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Complex::new(T::zero(), T::zero()), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// Gram matrix M†M.
    pub fn gram(&self) -> Self {
        self.adjoint().matmul(self)
    }

    /// max |M†M − I| over all entries.
    pub fn isometry_deviation(&self) -> T {
        let g = self.gram();
        let id = Self::identity(self.cols);
        g.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Singular values in descending order, one per column.
    ///
    /// Eigenvalues of the Hermitian Gram matrix by cyclic Jacobi rotation;
    /// columns beyond the row count give zeros.
    pub fn singular_values(&self) -> Vec<T> {
        let mut ev = hermitian_eigenvalues(&self.gram());
        ev.iter_mut().for_each(|x| *x = x.max(T::zero()).sqrt());
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a Hermitian matrix via complex Jacobi rotations.
pub fn hermitian_eigenvalues<T: Real>(h: &CMatrix<T>) -> Vec<T> {
    assert_eq!(h.rows, h.cols, "square matrix required");
    let n = h.rows;
    let mut a = h.clone();
    let tol = T::epsilon() * T::lit(4.0);
    for _sweep in 0..64 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        let scale: T = (0..n).map(|i| a[(i, i)].norm_sqr()).sum::<T>() + off;
        if off <= tol * tol * scale.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == T::zero() {
                    continue;
                }
                // Phase that makes the (p, q) entry real, then a real rotation.
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (T::two() * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let cs = (t * t + T::one()).sqrt().recip();
                let sn = t * cs;
                // Rotation J with J[p][p]=c, J[p][q]=s·phase, J[q][p]=-s·conj(phase), J[q][q]=c.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cs - akq * phase.conj() * sn;
                    a[(k, q)] = akp * phase * sn + akq * cs;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cs - aqk * phase * sn;
                    a[(q, k)] = apk * phase.conj() * sn + aqk * cs;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)].re).collect()
}
