//! Forward-mode truncated Taylor arithmetic.
//!
//! Two carriers are provided and both implement [`Scalar`]:
//!
//! * [`Jet`] — value, gradient and symmetric Hessian with respect to a set of
//!   seed directions (second-order multivariate Taylor arithmetic). The number
//!   of directions is dynamic; constants are jets with no directions and are
//!   broadcast on combination, so `Scalar::zero`/`Scalar::one` need no context.
//! * [`Dual`] — a first-order dual layer over any other scalar, used where a
//!   single extra derivative direction has to ride on top of an existing jet
//!   computation (e.g. parameter sensitivities through an integrator).
//!
//! All arithmetic is complex and holomorphic: there is no conjugation, so a
//! jet of a polynomial evaluation carries exact complex partial derivatives.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

/// Scalar ring for generic field evaluation.
///
/// Implementors: `Complex64` (plain values), [`Jet`] (order-2 seeds),
/// [`Dual<S>`] (one extra derivative over any scalar).
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_c(c: C64) -> Self;
    /// Multiplicative inverse. Panics or produces NaNs on exact zero like `1/0.0`.
    fn inv(&self) -> Self;
    /// Underlying value with all derivative information stripped.
    fn primal(&self) -> C64;

    fn abs_primal(&self) -> f64 {
        self.primal().norm()
    }

    /// Integer power by binary exponentiation.
    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn scale(&self, c: C64) -> Self {
        self.clone() * Self::from_c(c)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_c(c: C64) -> Self {
        c
    }
    fn inv(&self) -> Self {
        C64::new(1.0, 0.0) / self
    }
    fn primal(&self) -> C64 {
        *self
    }
}

/// Second-order multivariate jet: value, gradient, symmetric Hessian.
///
/// `g.len()` is the number of seed directions `m`; `h` is the full `m × m`
/// Hessian in row-major order (kept symmetric by construction). A jet with
/// `m = 0` behaves as a constant and is padded with zero derivatives when
/// combined with a wider jet.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub v: C64,
    pub g: Vec<C64>,
    pub h: Vec<C64>,
}

impl Jet {
    pub fn constant(v: C64) -> Self {
        Jet { v, g: Vec::new(), h: Vec::new() }
    }

    /// Seed variable: value `v` with unit first derivative along direction `i` of `m`.
    pub fn var(v: C64, i: usize, m: usize) -> Self {
        let mut g = vec![C64::default(); m];
        g[i] = C64::new(1.0, 0.0);
        Jet { v, g, h: vec![C64::default(); m * m] }
    }

    /// Jet with explicitly given value and gradient (zero Hessian).
    pub fn with_grad(v: C64, g: Vec<C64>) -> Self {
        let m = g.len();
        Jet { v, g, h: vec![C64::default(); m * m] }
    }

    pub fn dirs(&self) -> usize {
        self.g.len()
    }

    pub fn grad(&self, i: usize) -> C64 {
        if i < self.g.len() { self.g[i] } else { C64::default() }
    }

    /// Symmetric second derivative along directions `i`, `j`.
    pub fn hess(&self, i: usize, j: usize) -> C64 {
        let m = self.dirs();
        if i < m && j < m { self.h[i * m + j] } else { C64::default() }
    }

    /// Widen to `m` seed directions, filling missing derivatives with zeros.
    pub fn pad_to(&self, m: usize) -> Jet {
        if self.dirs() == m {
            return self.clone();
        }
        debug_assert!(self.dirs() <= m);
        let mut g = vec![C64::default(); m];
        let mut h = vec![C64::default(); m * m];
        let old = self.dirs();
        g[..old].copy_from_slice(&self.g);
        for i in 0..old {
            for j in 0..old {
                h[i * m + j] = self.h[i * old + j];
            }
        }
        Jet { v: self.v, g, h }
    }

    fn broadcast(a: &Jet, b: &Jet) -> (Jet, Jet) {
        let m = a.dirs().max(b.dirs());
        (a.pad_to(m), b.pad_to(m))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let (mut a, b) = Jet::broadcast(&self, &rhs);
        a.v += b.v;
        for (x, y) in a.g.iter_mut().zip(b.g.iter()) {
            *x += y;
        }
        for (x, y) in a.h.iter_mut().zip(b.h.iter()) {
            *x += y;
        }
        a
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.v = -self.v;
        for x in self.g.iter_mut() {
            *x = -*x;
        }
        for x in self.h.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (a, b) = Jet::broadcast(&self, &rhs);
        let m = a.dirs();
        let mut out = Jet {
            v: a.v * b.v,
            g: vec![C64::default(); m],
            h: vec![C64::default(); m * m],
        };
        for i in 0..m {
            out.g[i] = a.g[i] * b.v + a.v * b.g[i];
        }
        for i in 0..m {
            for j in 0..m {
                out.h[i * m + j] =
                    a.h[i * m + j] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[i * m + j];
            }
        }
        out
    }
}

impl Scalar for Jet {
    fn zero() -> Self {
        Jet::constant(C64::default())
    }
    fn one() -> Self {
        Jet::constant(C64::new(1.0, 0.0))
    }
    fn from_c(c: C64) -> Self {
        Jet::constant(c)
    }
    fn inv(&self) -> Self {
        let m = self.dirs();
        let w = C64::new(1.0, 0.0) / self.v;
        let w2 = w * w;
        let w3 = w2 * w;
        let mut g = vec![C64::default(); m];
        let mut h = vec![C64::default(); m * m];
        for i in 0..m {
            g[i] = -self.g[i] * w2;
        }
        for i in 0..m {
            for j in 0..m {
                h[i * m + j] = (self.g[i] * self.g[j]).scale(2.0) * w3 - self.h[i * m + j] * w2;
            }
        }
        Jet { v: w, g, h }
    }
    fn primal(&self) -> C64 {
        self.v
    }
}

/// First-order dual layer over an arbitrary scalar: `re + ε·du` with `ε² = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<S: Scalar> {
    pub re: S,
    pub du: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, du: S) -> Self {
        Dual { re, du }
    }
    pub fn constant(re: S) -> Self {
        Dual { re, du: S::zero() }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Dual<S>;
    fn add(self, rhs: Dual<S>) -> Dual<S> {
        Dual { re: self.re + rhs.re, du: self.du + rhs.du }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Dual<S>;
    fn sub(self, rhs: Dual<S>) -> Dual<S> {
        Dual { re: self.re - rhs.re, du: self.du - rhs.du }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Dual<S>;
    fn neg(self) -> Dual<S> {
        Dual { re: -self.re, du: -self.du }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Dual<S>;
    fn mul(self, rhs: Dual<S>) -> Dual<S> {
        Dual {
            re: self.re.clone() * rhs.re.clone(),
            du: self.re * rhs.du + self.du * rhs.re,
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn zero() -> Self {
        Dual { re: S::zero(), du: S::zero() }
    }
    fn one() -> Self {
        Dual { re: S::one(), du: S::zero() }
    }
    fn from_c(c: C64) -> Self {
        Dual { re: S::from_c(c), du: S::zero() }
    }
    fn inv(&self) -> Self {
        // (a + εb)⁻¹ = a⁻¹ − ε a⁻¹ b a⁻¹ (commutative scalars)
        let ai = self.re.inv();
        Dual { re: ai.clone(), du: -(ai.clone() * self.du.clone() * ai) }
    }
    fn primal(&self) -> C64 {
        self.re.primal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // p(x, y) = (x + 2y)³ + x·y, evaluated generically.
    fn poly<S: Scalar>(x: S, y: S) -> S {
        let lin = x.clone() + y.clone().scale(c(2.0, 0.0));
        lin.powi(3) + x * y
    }

    #[test]
    fn jet_matches_finite_differences() {
        let x0 = c(0.3, -0.2);
        let y0 = c(-1.1, 0.4);
        let x = Jet::var(x0, 0, 2);
        let y = Jet::var(y0, 1, 2);
        let p = poly(x, y);

        let h = 1e-5;
        let f = |dx: C64, dy: C64| poly(x0 + dx, y0 + dy);
        let e = c(h, 0.0);
        let fd_x = (f(e, C64::default()) - f(-e, C64::default())) / c(2.0 * h, 0.0);
        let fd_yy = (f(C64::default(), e) - f(C64::default(), C64::default()).scale(2.0)
            + f(C64::default(), -e))
            / c(h * h, 0.0);
        let fd_xy = (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / c(4.0 * h * h, 0.0);

        assert!((p.grad(0) - fd_x).norm() < 1e-7);
        assert!((p.hess(1, 1) - fd_yy).norm() < 1e-4);
        assert!((p.hess(0, 1) - fd_xy).norm() < 1e-4);
        assert!((p.hess(0, 1) - p.hess(1, 0)).norm() < 1e-15);
    }

    #[test]
    fn jet_inverse_is_exact() {
        let x = Jet::var(c(2.0, 1.0), 0, 1);
        let w = x.clone().inv();
        let prod = w * x;
        assert!((prod.v - C64::one()).norm() < 1e-15);
        assert!(prod.grad(0).norm() < 1e-15);
        assert!(prod.hess(0, 0).norm() < 1e-15);
    }

    #[test]
    fn constants_broadcast() {
        let x = Jet::var(c(1.0, 0.0), 2, 3);
        let s = x + Jet::one();
        assert_eq!(s.dirs(), 3);
        assert!((s.v - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dual_over_jet_gives_third_order_mixed() {
        // f(t, x) = (x + t·x²)² = x² + 2tx³ + t²x⁴; ∂x²∂t f at t=0 is 12x.
        let x0 = c(0.7, 0.1);
        let x = Dual::constant(Jet::var(x0, 0, 1));
        let t = Dual::new(Jet::zero(), Jet::one());
        let f = (x.clone() + t * x.clone() * x).powi(2);
        let mixed = f.du.hess(0, 0); // ∂x² of the t-derivative
        let expect = x0 * c(12.0, 0.0);
        assert!((mixed - expect).norm() < 1e-12);
    }
}
