//! Complexified compact Lie algebras.
//!
//! An [`AlgebraBasis`] stores a basis of the compact real form gᵒ (or of igᵒ,
//! per-element), its structure constants, an Ad-invariant Euclidean inner
//! product that equals minus the Cartan–Killing form on the semisimple part,
//! and a faithful defining representation when one is available. Elements of
//! g = gᵒ + igᵒ are complex coefficient vectors against that basis.
//!
//! Shipped bases: `u1` (one central generator, identity inner product) and
//! `sl2` (compact basis iσ₁, iσ₂, iσ₃ with the standard raising/lowering
//! triple available as distinguished elements).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::jet::Scalar;
use crate::mat::{CMat, Mat};
use crate::tol;

#[derive(Clone, Debug, PartialEq)]
pub enum LieError {
    BasisMismatch,
    Validation(String),
    IllConditioned(f64),
    NotInSpan(f64),
}

impl core::fmt::Display for LieError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LieError::BasisMismatch => write!(f, "elements belong to different algebra bases"),
            LieError::Validation(s) => write!(f, "invalid algebra data: {s}"),
            LieError::IllConditioned(c) => write!(f, "group element ill-conditioned (cond ≈ {c:.3e})"),
            LieError::NotInSpan(r) => write!(f, "matrix lies off the representation span (residual {r:.3e})"),
        }
    }
}

/// Basis data of a complexified compact Lie algebra.
#[derive(Debug)]
pub struct AlgebraBasis {
    pub name: String,
    pub dim: usize,
    /// Structure constants f[i][j][k] with [T_i, T_j] = Σ_k f_{ij}^k T_k.
    pub f: Vec<C64>,
    /// True where the basis element lies in gᵒ, false where it lies in igᵒ.
    pub compact_flags: Vec<bool>,
    /// Real symmetric Gram matrix of ⟨·,·⟩ on the real-form basis.
    pub ip: Vec<f64>,
    /// Defining representation matrices ρ(T_a).
    pub rep: Vec<CMat>,
    pub rep_dim: usize,
    /// Whether `rep` is faithful (adjoint fallback is not, for centered algebras).
    pub rep_faithful: bool,
    /// Inverse Gram matrix of the rep matrices under the Frobenius pairing,
    /// used to re-express rep-space matrices in the basis.
    gram_inv: Vec<C64>,
}

pub type BasisRef = Arc<AlgebraBasis>;

impl AlgebraBasis {
    fn fidx(&self, i: usize, j: usize, k: usize) -> C64 {
        self.f[(i * self.dim + j) * self.dim + k]
    }

    /// Build and validate a basis. `rep` may be empty, in which case the
    /// adjoint representation is synthesized (faithful only for trivial center).
    pub fn new(
        name: &str,
        dim: usize,
        f: Vec<C64>,
        compact_flags: Vec<bool>,
        ip: Vec<f64>,
        rep: Vec<CMat>,
    ) -> Result<BasisRef, LieError> {
        if f.len() != dim * dim * dim {
            return Err(LieError::Validation(format!(
                "structure constants have {} entries, expected {}",
                f.len(),
                dim * dim * dim
            )));
        }
        if compact_flags.len() != dim || ip.len() != dim * dim {
            return Err(LieError::Validation("flag or inner-product shape mismatch".to_string()));
        }

        let (rep, rep_faithful) = if rep.is_empty() {
            // Adjoint: ρ(T_a)_{kj} = f_{aj}^k.
            let mut mats = Vec::with_capacity(dim);
            for a in 0..dim {
                let mut m = Mat::zeros(dim);
                for j in 0..dim {
                    for k in 0..dim {
                        m.set(k, j, f[(a * dim + j) * dim + k]);
                    }
                }
                mats.push(m);
            }
            let central = (0..dim).any(|a| mats[a].frobenius() == 0.0);
            (mats, !central && dim > 0)
        } else {
            if rep.len() != dim {
                return Err(LieError::Validation("representation has wrong generator count".to_string()));
            }
            (rep, true)
        };
        let rep_dim = rep[0].n;

        let gram_inv = {
            let mut g = vec![C64::default(); dim * dim];
            for a in 0..dim {
                for b in 0..dim {
                    let mut s = C64::default();
                    for (x, y) in rep[a].a.iter().zip(rep[b].a.iter()) {
                        s += x.conj() * y;
                    }
                    g[a * dim + b] = s;
                }
            }
            let gm = Mat { n: dim, a: g };
            gm.inverse()
                .map_err(|e| LieError::Validation(format!("rep matrices not independent: {e}")))?
                .a
        };

        let basis = AlgebraBasis {
            name: name.to_string(),
            dim,
            f,
            compact_flags,
            ip,
            rep,
            rep_dim,
            rep_faithful,
            gram_inv,
        };
        basis.validate()?;
        Ok(Arc::new(basis))
    }

    fn validate(&self) -> Result<(), LieError> {
        let d = self.dim;
        // Antisymmetry in the first two indices.
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let r = (self.fidx(i, j, k) + self.fidx(j, i, k)).norm();
                    if r > tol::STRUCTURE_CONSTANTS {
                        return Err(LieError::Validation(format!(
                            "antisymmetry violated at ({i},{j},{k}): {r:.3e}"
                        )));
                    }
                }
            }
        }
        // Jacobi identity on basis triples.
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for m in 0..d {
                        let mut s = C64::default();
                        for l in 0..d {
                            s += self.fidx(j, k, l) * self.fidx(i, l, m)
                                + self.fidx(k, i, l) * self.fidx(j, l, m)
                                + self.fidx(i, j, l) * self.fidx(k, l, m);
                        }
                        if s.norm() > tol::STRUCTURE_CONSTANTS {
                            return Err(LieError::Validation(format!(
                                "Jacobi identity violated at ({i},{j},{k}→{m}): {:.3e}",
                                s.norm()
                            )));
                        }
                    }
                }
            }
        }
        // Inner product equals minus the Killing form on non-central generators.
        for a in 0..d {
            if self.is_central(a) {
                continue;
            }
            for b in 0..d {
                if self.is_central(b) {
                    continue;
                }
                let k = self.killing(a, b);
                let want = -k;
                if (self.ip[a * d + b] - want).abs() > tol::KILLING_MATCH {
                    return Err(LieError::Validation(format!(
                        "inner product at ({a},{b}) is {} but minus Killing gives {}",
                        self.ip[a * d + b],
                        want
                    )));
                }
            }
        }
        // Rep matrices must realize the bracket.
        for a in 0..d {
            for b in 0..d {
                let mut want = Mat::zeros(self.rep_dim);
                for k in 0..d {
                    want = want.add(&self.rep[k].scale_c(self.fidx(a, b, k)));
                }
                let got = self.rep[a].commutator(&self.rep[b]);
                if got.sub(&want).frobenius() > 1e-10 {
                    return Err(LieError::Validation(format!(
                        "representation fails bracket at ({a},{b})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_central(&self, a: usize) -> bool {
        let d = self.dim;
        (0..d).all(|j| (0..d).all(|k| self.fidx(a, j, k).norm() == 0.0))
    }

    /// Cartan–Killing form K(T_a, T_b) computed from structure constants.
    pub fn killing(&self, a: usize, b: usize) -> f64 {
        let d = self.dim;
        let mut s = C64::default();
        for c in 0..d {
            for e in 0..d {
                s += self.fidx(a, c, e) * self.fidx(b, e, c);
            }
        }
        s.re
    }

    /// Coefficients of the bracket of two coefficient vectors, generic in the scalar.
    pub fn bracket_coeffs<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let d = self.dim;
        let mut out = vec![S::zero(); d];
        for i in 0..d {
            for j in 0..d {
                let prod = x[i].clone() * y[j].clone();
                for k in 0..d {
                    let c = self.fidx(i, j, k);
                    if c.norm() != 0.0 {
                        out[k] = out[k].clone() + prod.clone().scale(c);
                    }
                }
            }
        }
        out
    }

    /// Matrix of a coefficient vector in the defining representation.
    pub fn rep_matrix<S: Scalar>(&self, z: &[S]) -> Mat<S> {
        let mut m = Mat::<S>::zeros(self.rep_dim);
        for (a, za) in z.iter().enumerate() {
            for (idx, entry) in self.rep[a].a.iter().enumerate() {
                if entry.norm() != 0.0 {
                    m.a[idx] = m.a[idx].clone() + za.clone().scale(*entry);
                }
            }
        }
        m
    }

    /// Re-express a rep-space matrix in the basis; also returns the residual
    /// Frobenius norm of the part off the representation span.
    pub fn project_matrix<S: Scalar>(&self, m: &Mat<S>) -> (Vec<S>, f64) {
        let d = self.dim;
        let mut pair = vec![S::zero(); d];
        for a in 0..d {
            let mut s = S::zero();
            for (idx, entry) in self.rep[a].a.iter().enumerate() {
                if entry.norm() != 0.0 {
                    s = s + m.a[idx].clone().scale(entry.conj());
                }
            }
            pair[a] = s;
        }
        let mut coeffs = vec![S::zero(); d];
        for a in 0..d {
            for b in 0..d {
                let g = self.gram_inv[a * d + b];
                if g.norm() != 0.0 {
                    coeffs[a] = coeffs[a].clone() + pair[b].clone().scale(g);
                }
            }
        }
        let recon = self.rep_matrix(&coeffs);
        let mut res = 0.0;
        for (x, y) in recon.a.iter().zip(m.a.iter()) {
            res += (x.primal() - y.primal()).norm_sqr();
        }
        (coeffs, Float::sqrt(res))
    }

    /// Hermitian norm of a coefficient vector: ‖X + iY‖ = √(‖X‖² + ‖Y‖²)
    /// with X, Y the gᵒ-components.
    pub fn hermitian_norm_coeffs(&self, z: &[C64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for a in 0..d {
            let wa = if self.compact_flags[a] { z[a] } else { z[a] * C64::i() };
            for b in 0..d {
                let g = self.ip[a * d + b];
                if g != 0.0 {
                    let wb = if self.compact_flags[b] { z[b] } else { z[b] * C64::i() };
                    s += g * (wa * wb.conj()).re;
                }
            }
        }
        Float::sqrt(Float::max(s, 0.0))
    }
}

/// The one-dimensional abelian algebra u(1)^ℂ with generator i.
pub fn u1() -> BasisRef {
    AlgebraBasis::new(
        "u1",
        1,
        vec![C64::default()],
        vec![true],
        vec![1.0],
        vec![Mat { n: 1, a: vec![C64::i()] }],
    )
    .expect("u1 basis is valid")
}

/// sl₂(ℂ) with compact basis T_a = iσ_a; [T_a, T_b] = −2ε_{abc}T_c,
/// inner product 8·δ_ab (minus the Killing form).
pub fn sl2() -> BasisRef {
    let d = 3;
    let mut f = vec![C64::default(); d * d * d];
    let mut set = |i: usize, j: usize, k: usize, v: f64| {
        f[(i * d + j) * d + k] = C64::new(v, 0.0);
    };
    // ε_{123} = 1 and cyclic; f_{ab}^c = −2ε_{abc}.
    set(0, 1, 2, -2.0);
    set(1, 0, 2, 2.0);
    set(1, 2, 0, -2.0);
    set(2, 1, 0, 2.0);
    set(2, 0, 1, -2.0);
    set(0, 2, 1, 2.0);

    let i = C64::i();
    let z = C64::default();
    let sigma1 = Mat { n: 2, a: vec![z, i, i, z] }; // iσ₁
    let sigma2 = Mat { n: 2, a: vec![z, C64::new(1.0, 0.0), C64::new(-1.0, 0.0), z] }; // iσ₂
    let sigma3 = Mat { n: 2, a: vec![i, z, z, -i] }; // iσ₃

    let mut ip = vec![0.0; 9];
    for a in 0..3 {
        ip[a * 3 + a] = 8.0;
    }
    AlgebraBasis::new("sl2", 3, f, vec![true; 3], ip, vec![sigma1, sigma2, sigma3])
        .expect("sl2 basis is valid")
}

/// Coefficients of the standard triple in the `sl2` compact basis.
///
/// ρ(h0) = diag(1, −1), ρ(hpp) = (0 1; 0 0), ρ(hmm) = (0 0; 1 0).
pub fn sl2_h0(basis: &BasisRef) -> AlgebraElement {
    AlgebraElement::new(basis.clone(), vec![C64::default(), C64::default(), -C64::i()])
}
pub fn sl2_hpp(basis: &BasisRef) -> AlgebraElement {
    AlgebraElement::new(basis.clone(), vec![C64::new(0.0, -0.5), C64::new(0.5, 0.0), C64::default()])
}
pub fn sl2_hmm(basis: &BasisRef) -> AlgebraElement {
    AlgebraElement::new(basis.clone(), vec![C64::new(0.0, -0.5), C64::new(-0.5, 0.0), C64::default()])
}

/// Element of g in a fixed basis.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    pub basis: BasisRef,
    pub coeffs: Vec<C64>,
}

impl AlgebraElement {
    pub fn new(basis: BasisRef, coeffs: Vec<C64>) -> Self {
        debug_assert_eq!(coeffs.len(), basis.dim);
        AlgebraElement { basis, coeffs }
    }

    pub fn zero(basis: &BasisRef) -> Self {
        AlgebraElement { basis: basis.clone(), coeffs: vec![C64::default(); basis.dim] }
    }

    pub fn generator(basis: &BasisRef, a: usize) -> Self {
        let mut coeffs = vec![C64::default(); basis.dim];
        coeffs[a] = C64::new(1.0, 0.0);
        AlgebraElement { basis: basis.clone(), coeffs }
    }

    fn same_basis(&self, o: &Self) -> Result<(), LieError> {
        if Arc::ptr_eq(&self.basis, &o.basis) || self.basis.name == o.basis.name {
            Ok(())
        } else {
            Err(LieError::BasisMismatch)
        }
    }

    pub fn bracket(&self, o: &Self) -> Result<Self, LieError> {
        self.same_basis(o)?;
        Ok(AlgebraElement {
            basis: self.basis.clone(),
            coeffs: self.basis.bracket_coeffs(&self.coeffs, &o.coeffs),
        })
    }

    pub fn add(&self, o: &Self) -> Self {
        AlgebraElement {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(o.coeffs.iter()).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        AlgebraElement {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(o.coeffs.iter()).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        AlgebraElement {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
        }
    }

    pub fn hermitian_norm(&self) -> f64 {
        self.basis.hermitian_norm_coeffs(&self.coeffs)
    }

    /// True when all real-form coefficients are real, i.e. the element lies in gᵒ.
    pub fn in_real_form(&self, eps: f64) -> bool {
        self.coeffs.iter().zip(self.basis.compact_flags.iter()).all(|(z, &flag)| {
            let w = if flag { *z } else { z * C64::i() };
            Float::abs(w.im) <= eps
        })
    }

    pub fn rep_matrix(&self) -> CMat {
        self.basis.rep_matrix(&self.coeffs)
    }
}

/// Group element in the defining representation.
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub basis: BasisRef,
    pub matrix: CMat,
}

impl GroupElement {
    pub fn identity(basis: &BasisRef) -> Self {
        GroupElement { basis: basis.clone(), matrix: Mat::identity(basis.rep_dim) }
    }

    pub fn det_defect(&self) -> f64 {
        (self.matrix.det() - C64::new(1.0, 0.0)).norm()
    }

    /// Distance of g†g from the identity; zero on the compact real form.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.matrix.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut e = C64::default();
                for k in 0..n {
                    e += self.matrix.at(k, i).conj() * self.matrix.at(k, j);
                }
                if i == j {
                    e -= C64::new(1.0, 0.0);
                }
                s += e.norm_sqr();
            }
        }
        Float::sqrt(s)
    }

    pub fn inverse(&self) -> Result<Self, LieError> {
        let cond = self.matrix.cond_estimate();
        if !(cond < tol::CONDITION_GUARD) {
            return Err(LieError::IllConditioned(cond));
        }
        Ok(GroupElement {
            basis: self.basis.clone(),
            matrix: self.matrix.inverse().map_err(|_| LieError::IllConditioned(cond))?,
        })
    }
}

/// Matrix exponential by scaling and squaring with a Taylor kernel, generic in
/// the scalar so jets ride through unchanged. Primal Frobenius norm drives the
/// scaling; truncation targets machine precision for the small ranks used here.
pub fn exp_mat<S: Scalar>(m: &Mat<S>) -> Mat<S> {
    let n = m.n;
    let norm = {
        let mut s = 0.0;
        for x in m.a.iter() {
            s += x.primal().norm_sqr();
        }
        Float::sqrt(s)
    };
    let mut squarings = 0u32;
    let mut scaled = m.clone();
    if norm > 0.25 {
        squarings = Float::ceil(Float::log2(norm / 0.25)) as u32;
        let factor = C64::new(Float::powi(0.5, squarings as i32), 0.0);
        scaled = scaled.scale_c(factor);
    }
    let mut acc = Mat::<S>::identity(n);
    let mut term = Mat::<S>::identity(n);
    for k in 1..=40u32 {
        term = term.matmul(&scaled).scale_c(C64::new(1.0 / k as f64, 0.0));
        let tnorm: f64 = term.a.iter().map(|x| x.primal().norm()).sum();
        acc = acc.add(&term);
        if tnorm < tol::EXP_RELATIVE * 1e-2 {
            break;
        }
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    acc
}

/// Group exponential of an algebra element.
pub fn group_exp(x: &AlgebraElement) -> GroupElement {
    GroupElement { basis: x.basis.clone(), matrix: exp_mat(&x.rep_matrix()) }
}

/// Adjoint action g X g⁻¹ re-expressed in the basis.
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement, LieError> {
    let gi = g.inverse()?;
    let m = g.matrix.matmul(&x.rep_matrix()).matmul(&gi.matrix);
    let (coeffs, res) = x.basis.project_matrix(&m);
    let scale = 1.0 + x.hermitian_norm();
    if res > 1e-8 * scale {
        return Err(LieError::NotInSpan(res));
    }
    Ok(AlgebraElement::new(x.basis.clone(), coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;

    #[test]
    fn sl2_triple_brackets() {
        let b = sl2();
        let h0 = sl2_h0(&b);
        let hpp = sl2_hpp(&b);
        let hmm = sl2_hmm(&b);
        // [H₀, H₊₊] = 2H₊₊, [H₀, H₋₋] = −2H₋₋, [H₊₊, H₋₋] = H₀.
        let c1 = h0.bracket(&hpp).unwrap().sub(&hpp.scale(C64::new(2.0, 0.0)));
        let c2 = h0.bracket(&hmm).unwrap().add(&hmm.scale(C64::new(2.0, 0.0)));
        let c3 = hpp.bracket(&hmm).unwrap().sub(&h0);
        assert!(c1.hermitian_norm() < 1e-12);
        assert!(c2.hermitian_norm() < 1e-12);
        assert!(c3.hermitian_norm() < 1e-12);
        // Matrix forms match the structure-constant bracket.
        let mc = hpp.rep_matrix().commutator(&hmm.rep_matrix());
        assert!(mc.sub(&h0.rep_matrix()).frobenius() < 1e-14);
    }

    #[test]
    fn bracket_antisymmetric_and_mismatch_rejected() {
        let b = sl2();
        let x = AlgebraElement::new(b.clone(), vec![C64::new(0.3, 0.1); 3]);
        assert!(x.bracket(&x).unwrap().hermitian_norm() < 1e-14);
        let other = u1();
        let y = AlgebraElement::generator(&other, 0);
        assert_eq!(x.bracket(&y).unwrap_err(), LieError::BasisMismatch);
    }

    #[test]
    fn hermitian_norm_is_ad_invariant() {
        let b = sl2();
        let mut s = Sampler::new(11);
        for _ in 0..100 {
            let x = AlgebraElement::new(
                b.clone(),
                (0..3).map(|_| C64::new(s.normal(), s.normal())).collect(),
            );
            // Random compact rotation: exp of a real-coefficient element.
            let k = group_exp(&AlgebraElement::new(
                b.clone(),
                (0..3).map(|_| C64::new(s.normal(), 0.0)).collect(),
            ));
            assert!(k.unitarity_defect() < 1e-11);
            let ad = adjoint(&k, &x).unwrap();
            assert!(
                Float::abs(ad.hermitian_norm() - x.hermitian_norm())
                    < tol::AD_INVARIANCE * (1.0 + x.hermitian_norm())
            );
        }
    }

    #[test]
    fn norm_symmetric_under_multiplication_by_i() {
        let b = sl2();
        let x = AlgebraElement::new(b, vec![C64::new(0.5, 0.0), C64::new(-1.25, 0.0), C64::new(2.0, 0.0)]);
        let ix = x.scale(C64::i());
        assert!(Float::abs(x.hermitian_norm() - ix.hermitian_norm()) < 1e-12);
        let zero = AlgebraElement::zero(&x.basis);
        assert_eq!(zero.hermitian_norm(), 0.0);
    }

    #[test]
    fn exp_inverse_identity_up_to_norm_ten() {
        let b = sl2();
        let mut s = Sampler::new(5);
        for _ in 0..20 {
            let mut x = AlgebraElement::new(
                b.clone(),
                (0..3).map(|_| C64::new(s.normal(), s.normal())).collect(),
            );
            let n = x.hermitian_norm();
            if n > 0.0 {
                x = x.scale(C64::new(10.0 / n, 0.0)); // push to the norm-10 boundary
            }
            let g = group_exp(&x);
            let gi = group_exp(&x.scale(C64::new(-1.0, 0.0)));
            let p = g.matrix.matmul(&gi.matrix).sub(&Mat::identity(2));
            assert!(p.frobenius() < 1e-12 * Float::max(1.0, g.matrix.frobenius().powi(2)));
        }
        assert!(group_exp(&AlgebraElement::zero(&b)).matrix.sub(&Mat::identity(2)).frobenius() == 0.0);
    }

    #[test]
    fn adjoint_first_order_expansion() {
        let b = sl2();
        let mut s = Sampler::new(2);
        let x = AlgebraElement::new(b.clone(), (0..3).map(|_| C64::new(s.normal(), s.normal())).collect());
        let y = AlgebraElement::new(b.clone(), (0..3).map(|_| C64::new(s.normal(), s.normal())).collect());
        let t = 1e-5;
        let g = group_exp(&y.scale(C64::new(t, 0.0)));
        let lhs = adjoint(&g, &x).unwrap();
        let rhs = x.add(&y.bracket(&x).unwrap().scale(C64::new(t, 0.0)));
        assert!(lhs.sub(&rhs).hermitian_norm() < 1e-8);
        // Identity adjoint is the identity map.
        let id = GroupElement::identity(&b);
        assert!(adjoint(&id, &x).unwrap().sub(&x).hermitian_norm() < 1e-14);
    }

    #[test]
    fn u1_center_uses_identity_inner_product() {
        let b = u1();
        assert!(b.is_central(0));
        let x = AlgebraElement::new(b, vec![C64::new(3.0, 4.0)]);
        assert!(Float::abs(x.hermitian_norm() - 5.0) < 1e-12);
    }

    #[test]
    fn invalid_structure_constants_rejected() {
        // Symmetric (non-antisymmetric) tensor must fail validation.
        let mut f = vec![C64::default(); 8];
        f[(0 * 2 + 1) * 2 + 0] = C64::new(1.0, 0.0);
        f[(1 * 2 + 0) * 2 + 0] = C64::new(1.0, 0.0);
        let r = AlgebraBasis::new("bad", 2, f, vec![true; 2], vec![1.0, 0.0, 0.0, 1.0], vec![]);
        assert!(matches!(r, Err(LieError::Validation(_))));
    }
}
