//! Small dense square matrices over a generic [`Scalar`].
//!
//! Group elements live in low-dimensional defining representations (1×1 for
//! abelian factors, 2×2 for the rank-one cases shipped here), and ODE states
//! carry jet-valued entries, so a minimal row-major container with
//! Gauss–Jordan inversion pivoted on primal magnitude covers every need.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::jet::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub n: usize,
    pub a: Vec<S>,
}

pub type CMat = Mat<C64>;

impl<S: Scalar> Mat<S> {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = S::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.a[i * self.n + j] = v;
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        Mat {
            n: self.n,
            a: self.a.iter().zip(o.a.iter()).map(|(x, y)| x.clone() + y.clone()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        Mat {
            n: self.n,
            a: self.a.iter().zip(o.a.iter()).map(|(x, y)| x.clone() - y.clone()).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Mat { n: self.n, a: self.a.iter().map(|x| -x.clone()).collect() }
    }

    pub fn scale_s(&self, s: &S) -> Self {
        Mat { n: self.n, a: self.a.iter().map(|x| x.clone() * s.clone()).collect() }
    }

    pub fn scale_c(&self, c: C64) -> Self {
        Mat { n: self.n, a: self.a.iter().map(|x| x.clone().scale(c)).collect() }
    }

    pub fn matmul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.n, o.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k].clone();
                for j in 0..n {
                    out.a[i * n + j] =
                        out.a[i * n + j].clone() + aik.clone() * o.a[k * n + j].clone();
                }
            }
        }
        out
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.matmul(o).sub(&o.matmul(self))
    }

    /// Gauss–Jordan inverse with partial pivoting on primal magnitude.
    pub fn inverse(&self) -> Result<Self, MatError> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let mut piv = col;
            let mut best = a.at(col, col).abs_primal();
            for r in (col + 1)..n {
                let v = a.at(r, col).abs_primal();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(MatError::Singular(format!(
                    "pivot {best:.3e} in column {col} of {n}x{n} matrix"
                )));
            }
            if piv != col {
                for j in 0..n {
                    a.a.swap(col * n + j, piv * n + j);
                    inv.a.swap(col * n + j, piv * n + j);
                }
            }
            let d = a.at(col, col).inv();
            for j in 0..n {
                a.a[col * n + j] = a.a[col * n + j].clone() * d.clone();
                inv.a[col * n + j] = inv.a[col * n + j].clone() * d.clone();
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.at(r, col).clone();
                for j in 0..n {
                    a.a[r * n + j] =
                        a.a[r * n + j].clone() - f.clone() * a.a[col * n + j].clone();
                    inv.a[r * n + j] =
                        inv.a[r * n + j].clone() - f.clone() * inv.a[col * n + j].clone();
                }
            }
        }
        Ok(inv)
    }

    pub fn map_primal(&self) -> CMat {
        Mat { n: self.n, a: self.a.iter().map(|x| x.primal()).collect() }
    }
}

impl CMat {
    pub fn frobenius(&self) -> f64 {
        num_traits::Float::sqrt(self.a.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn det(&self) -> C64 {
        match self.n {
            1 => self.a[0],
            2 => self.a[0] * self.a[3] - self.a[1] * self.a[2],
            _ => {
                // LU with partial pivoting; sizes stay tiny.
                let n = self.n;
                let mut a = self.a.clone();
                let mut det = C64::new(1.0, 0.0);
                for col in 0..n {
                    let mut piv = col;
                    let mut best = a[col * n + col].norm();
                    for r in (col + 1)..n {
                        if a[r * n + col].norm() > best {
                            best = a[r * n + col].norm();
                            piv = r;
                        }
                    }
                    if best == 0.0 {
                        return C64::default();
                    }
                    if piv != col {
                        for j in 0..n {
                            a.swap(col * n + j, piv * n + j);
                        }
                        det = -det;
                    }
                    det *= a[col * n + col];
                    for r in (col + 1)..n {
                        let f = a[r * n + col] / a[col * n + col];
                        for j in col..n {
                            let v = a[col * n + j];
                            a[r * n + j] -= f * v;
                        }
                    }
                }
                det
            }
        }
    }

    /// Frobenius-norm condition estimate ‖A‖·‖A⁻¹‖.
    pub fn cond_estimate(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.frobenius() * inv.frobenius(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Solve the dense complex system `A x = b` in place; `A` is `n×n`, row-major.
pub fn solve_complex(a: &mut [C64], b: &mut [C64], n: usize) -> Result<(), MatError> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in (col + 1)..n {
            if a[r * n + col].norm() > best {
                best = a[r * n + col].norm();
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(MatError::Singular(format!("linear solve pivot {best:.3e}")));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in (col + 1)..n {
            s -= a[col * n + j] * b[j];
        }
        b[col] = s / a[col * n + col];
    }
    Ok(())
}

/// Least squares by normal equations: minimizes ‖M x − y‖ for tall `M` (rows×cols).
/// Suitable here because the fitted systems are tiny and well conditioned.
pub fn lstsq_complex(m_rows: usize, m_cols: usize, m: &[C64], y: &[C64]) -> Result<Vec<C64>, MatError> {
    debug_assert_eq!(m.len(), m_rows * m_cols);
    debug_assert_eq!(y.len(), m_rows);
    let mut ata = vec![C64::default(); m_cols * m_cols];
    let mut aty = vec![C64::default(); m_cols];
    for r in 0..m_rows {
        for i in 0..m_cols {
            let mi = m[r * m_cols + i].conj();
            aty[i] += mi * y[r];
            for j in 0..m_cols {
                ata[i * m_cols + j] += mi * m[r * m_cols + j];
            }
        }
    }
    solve_complex(&mut ata, &mut aty, m_cols)?;
    Ok(aty)
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatError {
    Singular(String),
}

impl core::fmt::Display for MatError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MatError::Singular(s) => write!(f, "singular matrix: {s}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    #[test]
    fn inverse_roundtrip_complex() {
        let m = Mat::from_fn(3, |i, j| C64::new((i * 3 + j) as f64 + 1.0, (i as f64) - (j as f64)))
            .add(&Mat::identity(3).scale_c(C64::new(5.0, 0.0)));
        let inv = m.inverse().unwrap();
        let p = m.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.at(i, j) - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn jet_matrix_inverse_carries_derivatives() {
        // d/dt (I + tN)⁻¹ at t=0 is −N.
        let n01 = C64::new(2.0, -1.0);
        let m = Mat::from_fn(2, |i, j| {
            if i == j {
                Jet::one()
            } else if i == 0 && j == 1 {
                Jet::with_grad(C64::default(), alloc::vec![n01])
            } else {
                Jet::zero()
            }
        });
        let inv = m.inverse().unwrap();
        assert!((inv.at(0, 1).grad(0) + n01).norm() < 1e-14);
    }

    #[test]
    fn lstsq_recovers_exact_coefficients() {
        // y = 2x₀ − 3i·x₁ over 5 sample rows.
        let rows = 5;
        let mut m = Vec::new();
        let mut y = Vec::new();
        for r in 0..rows {
            let a = C64::new(r as f64 + 1.0, 0.3 * r as f64);
            let b = C64::new(0.5 - r as f64, 1.0);
            m.push(a);
            m.push(b);
            y.push(a * C64::new(2.0, 0.0) + b * C64::new(0.0, -3.0));
        }
        let x = lstsq_complex(rows, 2, &m, &y).unwrap();
        assert!((x[0] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((x[1] - C64::new(0.0, -3.0)).norm() < 1e-12);
    }
}
