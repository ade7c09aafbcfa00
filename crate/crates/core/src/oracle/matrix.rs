use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Dense square complex matrix, row-major. Sized for the handful of dimensions the
/// oracle works in.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_real_rows(rows: &[&[T]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = Complex::new(v, T::zero());
            }
        }
        m
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex::new(v, T::zero());
        }
        m
    }

    /// `sum_k w_k u_k v_k^H` style outer product `u v^H`.
    pub fn outer(u: &[Complex<T>], v: &[Complex<T>]) -> Self {
        let n = u.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..self.n {
                    m[(i, j)] = m[(i, j)] + a * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn hermitian_defect(&self) -> T {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// The leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self[(i, j)];
            }
        }
        m
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.n, other.n);
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect() }
    }
}

impl<T> Index<(usize, usize)> for SquareMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for SquareMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.n {
            write!(f, " ")?;
            for j in 0..self.n {
                let v = &self.data[i * self.n + j];
                write!(f, " ({:?}, {:?})", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigenvalues (ascending) and unitary eigenvector matrix (columns) of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: SquareMatrix<T>,
}

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot and then
/// applies a real plane rotation.
pub fn hermitian_eigen<T: Real>(a: &SquareMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = a.dim();
    let scale = a.frobenius_norm();
    if a.hermitian_defect() > lit::<T>(1e-12) * scale.max(T::min_positive_value()) {
        return Err(Error::InvalidRepresentation("matrix is not Hermitian".into()));
    }
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = Complex::new(m[(i, i)].re, T::zero());
    }
    let mut v = SquareMatrix::identity(n);
    let zero = Complex::new(T::zero(), T::zero());
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                // relative criterion, so tiny diagonal blocks keep their own precision
                let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
                if mag == T::zero() || mag <= lit::<T>(0.5) * T::epsilon() * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let tau = (aqq - app) / (lit::<T>(2.0) * mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // U acts on columns p, q: U_pp = c, U_pq = s, U_qp = -s conj(phase), U_qq = c conj(phase)
                let mut u = SquareMatrix::identity(n);
                u[(p, p)] = Complex::new(c, T::zero());
                u[(p, q)] = Complex::new(s, T::zero());
                u[(q, p)] = phase.conj() * (-s);
                u[(q, q)] = phase.conj() * c;
                m = u.adjoint().matmul(&m).matmul(&u);
                m[(p, q)] = zero;
                m[(q, p)] = zero;
                m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
                m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
                v = v.matmul(&u);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, i)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> SquareMatrix<f64> {
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn reconstructs_random_hermitian_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=5 {
            for _ in 0..20 {
                let a = random_hermitian(n, &mut rng);
                let e = hermitian_eigen(&a).unwrap();
                let d = SquareMatrix::diagonal(&e.values);
                let back = e.vectors.matmul(&d).matmul(&e.vectors.adjoint());
                assert!(back.sub(&a).frobenius_norm() < 1e-13 * a.frobenius_norm().max(1.0));
                let gram = e.vectors.adjoint().matmul(&e.vectors);
                assert!(gram.sub(&SquareMatrix::identity(n)).frobenius_norm() < 1e-13);
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn pauli_y() {
        let mut a = SquareMatrix::<f64>::zeros(2);
        a[(0, 1)] = Complex::new(0.0, -1.0);
        a[(1, 0)] = Complex::new(0.0, 1.0);
        let e = hermitian_eigen(&a).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_block_keeps_relative_accuracy() {
        let a = SquareMatrix::<f64>::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 3e-13, 1e-13], &[0.0, 1e-13, 3e-13]]);
        let e = hermitian_eigen(&a).unwrap();
        assert!((e.values[0] - 2e-13).abs() < 1e-27);
        assert!((e.values[1] - 4e-13).abs() < 1e-27);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = SquareMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(hermitian_eigen(&a).is_err());
    }
}
