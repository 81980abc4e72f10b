//! Dense complex LU with partial pivoting and a 1-norm condition estimate.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Row-major square complex matrix.
#[derive(Debug, Clone)]
pub struct Matrix<F> {
    n: usize,
    data: Vec<C<F>>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(F::zero(), F::zero()); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C<F>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<F> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C<F>) {
        self.data[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[C<F>]) -> Vec<C<F>> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter()
                    .zip(x)
                    .fold(Complex::new(F::zero(), F::zero()), |acc, (a, b)| {
                        acc + a * b
                    })
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> F {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).norm()).sum::<F>())
            .fold(F::zero(), F::max)
    }
}

/// LU factors `P A = L U` stored in place.
#[derive(Debug, Clone)]
pub struct Lu<F> {
    lu: Matrix<F>,
    perm: Vec<usize>,
    anorm: F,
}

impl<F: Real> Lu<F> {
    pub fn factor(mut a: Matrix<F>) -> Result<Self> {
        let n = a.n;
        let anorm = a.norm1();
        let scale = a.data.iter().map(|v| v.norm()).fold(F::zero(), F::max);
        let tiny = scale * F::epsilon() * F::from_usize_lossy(n.max(1));
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a.get(i, k).norm()))
                    .fold(
                        (k, F::neg_infinity()),
                        |acc, x| if x.1 > acc.1 { x } else { acc },
                    );
            if !(pmax > tiny) {
                return Err(Error::SingularSystem {
                    size: n,
                    cond_estimate: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a.get(k, k);
            for i in (k + 1)..n {
                let l = a.get(i, k) / pivot;
                a.set(i, k, l);
                if l.re == F::zero() && l.im == F::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let v = a.get(i, j) - l * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        Ok(Self { lu: a, perm, anorm })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[C<F>]) -> Vec<C<F>> {
        let n = self.lu.n;
        let mut x: Vec<C<F>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }

    /// Solves A^H x = b.
    pub fn solve_adjoint(&self, b: &[C<F>]) -> Vec<C<F>> {
        let n = self.lu.n;
        // A^H = U^H L^H P
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s = s - self.lu.get(j, i).conj() * y[j];
            }
            y[i] = s / self.lu.get(i, i).conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s = s - self.lu.get(j, i).conj() * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![Complex::new(F::zero(), F::zero()); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    /// Estimate of the 1-norm condition number (Hager/Higham).
    pub fn cond1_estimate(&self) -> F {
        let n = self.lu.n;
        if n == 0 {
            return F::one();
        }
        let nf = F::from_usize_lossy(n);
        let mut x = vec![Complex::new(F::one() / nf, F::zero()); n];
        let mut est = F::zero();
        for iter in 0..5 {
            let y = self.solve(&x);
            let ynorm: F = y.iter().map(|v| v.norm()).sum();
            if iter > 0 && ynorm <= est {
                break;
            }
            est = ynorm;
            let xi: Vec<C<F>> = y
                .iter()
                .map(|v| {
                    let r = v.norm();
                    if r > F::zero() {
                        v / r
                    } else {
                        Complex::new(F::one(), F::zero())
                    }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (jmax, zmax) = z.iter().enumerate().map(|(j, v)| (j, v.norm())).fold(
                (0, F::neg_infinity()),
                |acc, v| if v.1 > acc.1 { v } else { acc },
            );
            let ztx = z
                .iter()
                .zip(&x)
                .fold(F::zero(), |acc, (a, b)| acc + (a.conj() * b).re);
            if zmax <= ztx {
                break;
            }
            x = vec![Complex::new(F::zero(), F::zero()); n];
            x[jmax] = Complex::new(F::one(), F::zero());
        }
        // alternating-sign probe guards against the power iteration stalling
        let alt: Vec<C<F>> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { F::one() } else { -F::one() };
                let v = F::one() + F::from_usize_lossy(i) / (nf - F::one()).max(F::one());
                Complex::new(s * v, F::zero())
            })
            .collect();
        let y = self.solve(&alt);
        let probe = F::lit(2.0) * y.iter().map(|v| v.norm()).sum::<F>() / (F::lit(3.0) * nf);
        est.max(probe) * self.anorm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    fn test_matrix(n: usize) -> Matrix<f64> {
        Matrix::from_fn(n, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            c(
                d + ((i * 7 + j * 3) % 5) as f64 * 0.3,
                ((i + 2 * j) % 3) as f64 * 0.2 - 0.2,
            )
        })
    }

    #[test]
    fn solve_and_adjoint_solve() {
        let a = test_matrix(7);
        let lu = Lu::factor(a.clone()).unwrap();
        let x: Vec<_> = (0..7).map(|i| c(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let b = a.matvec(&x);
        let got = lu.solve(&b);
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).norm() < 1e-12);
        }
        let ah = Matrix::from_fn(7, |i, j| a.get(j, i).conj());
        let b2 = ah.matvec(&x);
        let got2 = lu.solve_adjoint(&b2);
        for (g, w) in got2.iter().zip(&x) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_fn(3, |i, j| c((i + 1) as f64 * (j + 1) as f64, 0.0));
        assert!(matches!(Lu::factor(a), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn cond_estimate_brackets_truth() {
        // diag(1, 1e-6): kappa_1 = 1e6
        let a = Matrix::from_fn(2, |i, j| {
            if i == j {
                c(if i == 0 { 1.0 } else { 1e-6 }, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let k = Lu::factor(a).unwrap().cond1_estimate();
        assert!((0.999e6..=3e6).contains(&k), "{k}");
        let id = Matrix::from_fn(5, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let k1 = Lu::factor(id).unwrap().cond1_estimate();
        assert!((k1 - 1.0).abs() < 1.0);
    }
}
