//! The flat model ℝ⁴ⁿ in adapted coordinates.
//!
//! Points carry complex coordinates x^{ia} (i ∈ {1,2}, a ∈ {1..2n}); the
//! Euclidean real slice is cut out by conj(x^{ia}) = ε_{ij}ε_{ab}x^{jb} with
//! ε₁₂ = −1 and the 2n×2n block version of ε on the a-indices. Frame
//! derivations are e_{±a} = u^i_± ∂/∂x^{ia}; two-forms split into the part
//! proportional to ε_{ij} (self-dual under the quaternionic structure) and
//! its complement, which must vanish for an instanton.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::harmonics::{seeded_point, ChargedField, FieldError, Harmonic, SeedDir};
use crate::jet::Scalar;
use crate::lie::{AlgebraElement, BasisRef};
use crate::report::ResidualReport;

/// Point of the complexified flat model, with its Euclidean reality flag.
#[derive(Clone, Debug, PartialEq)]
pub struct PointX {
    pub n_quat: usize,
    /// Row-major over (i, a): x[i·2n + a].
    pub x: Vec<C64>,
    pub reality: bool,
}

impl PointX {
    pub fn zero(n_quat: usize) -> Self {
        PointX { n_quat, x: vec![C64::default(); 4 * n_quat], reality: true }
    }

    pub fn from_complex(n_quat: usize, x: Vec<C64>) -> Self {
        debug_assert_eq!(x.len(), 4 * n_quat);
        let mut p = PointX { n_quat, x, reality: false };
        p.reality = p.reality_defect() < crate::tol::UNIT_DET;
        p
    }

    /// Real coordinates y ∈ ℝ⁴ⁿ: per quaternionic block b,
    /// x^{1,2b} = y₀+iy₁, x^{1,2b+1} = y₂+iy₃, x^{2,2b} = −y₂+iy₃, x^{2,2b+1} = y₀−iy₁.
    pub fn from_real(y: &[f64]) -> Self {
        debug_assert_eq!(y.len() % 4, 0);
        let n = y.len() / 4;
        let mut x = vec![C64::default(); 4 * n];
        for b in 0..n {
            let (y0, y1, y2, y3) = (y[4 * b], y[4 * b + 1], y[4 * b + 2], y[4 * b + 3]);
            x[0 * 2 * n + 2 * b] = C64::new(y0, y1);
            x[0 * 2 * n + 2 * b + 1] = C64::new(y2, y3);
            x[1 * 2 * n + 2 * b] = C64::new(-y2, y3);
            x[1 * 2 * n + 2 * b + 1] = C64::new(y0, -y1);
        }
        PointX { n_quat: n, x, reality: true }
    }

    pub fn to_real(&self) -> Option<Vec<f64>> {
        if self.reality_defect() > 1e-9 {
            return None;
        }
        let n = self.n_quat;
        let mut y = vec![0.0; 4 * n];
        for b in 0..n {
            let z = self.at(0, 2 * b);
            let w = self.at(0, 2 * b + 1);
            y[4 * b] = z.re;
            y[4 * b + 1] = z.im;
            y[4 * b + 2] = w.re;
            y[4 * b + 3] = w.im;
        }
        Some(y)
    }

    pub fn at(&self, i: usize, a: usize) -> C64 {
        self.x[i * 2 * self.n_quat + a]
    }

    /// Residual of the Euclidean reality condition.
    pub fn reality_defect(&self) -> f64 {
        let n = self.n_quat;
        let mut s = 0.0;
        for i in 0..2 {
            for a in 0..2 * n {
                // conj(x^{ia}) − ε_{ij} ε_{ab} x^{jb}
                let j = 1 - i;
                let b = a ^ 1; // block partner
                let eps_h = if i == 0 { -1.0 } else { 1.0 }; // ε_{12} = −1
                let eps_e = if a % 2 == 0 { -1.0 } else { 1.0 };
                let want = self.at(j, b) * C64::new(eps_h * eps_e, 0.0);
                s += (self.at(i, a).conj() - want).norm_sqr();
            }
        }
        Float::sqrt(s)
    }
}

/// Constant Jacobian column ∂x/∂y^μ as a complex displacement of the x-entries.
pub fn real_direction(n_quat: usize, mu: usize) -> Vec<C64> {
    let b = mu / 4;
    let r = mu % 4;
    let mut v = vec![C64::default(); 4 * n_quat];
    let one = C64::new(1.0, 0.0);
    let i = C64::i();
    match r {
        0 => {
            v[0 * 2 * n_quat + 2 * b] = one;
            v[1 * 2 * n_quat + 2 * b + 1] = one;
        }
        1 => {
            v[0 * 2 * n_quat + 2 * b] = i;
            v[1 * 2 * n_quat + 2 * b + 1] = -i;
        }
        2 => {
            v[0 * 2 * n_quat + 2 * b + 1] = one;
            v[1 * 2 * n_quat + 2 * b] = -one;
        }
        _ => {
            v[0 * 2 * n_quat + 2 * b + 1] = i;
            v[1 * 2 * n_quat + 2 * b] = i;
        }
    }
    v
}

/// Frame direction e_{±a} at a harmonic: the tangent vector u^i_± ∂/∂x^{ia}.
#[derive(Clone, Debug)]
pub struct FrameDirection {
    pub plus: bool,
    pub a: usize,
    pub at: Harmonic,
}

/// Displacement of the x-entries realizing e_{±a} at U.
pub fn frame_seed(n_quat: usize, plus: bool, a: usize, u: &Harmonic) -> Vec<C64> {
    let col = if plus { &u.u_plus } else { &u.u_minus };
    let mut v = vec![C64::default(); 4 * n_quat];
    v[0 * 2 * n_quat + a] = col[0];
    v[1 * 2 * n_quat + a] = col[1];
    v
}

/// Exact frame derivative u^{±i}·∂f/∂x^{ia} at (x, dir.at).
pub fn frame_derivative(
    f: &dyn ChargedField,
    dir: &FrameDirection,
    x: &PointX,
) -> Result<AlgebraElement, FieldError> {
    let seed = frame_seed(x.n_quat, dir.plus, dir.a, &dir.at);
    let p = seeded_point(&x.x, x.n_quat, &dir.at, &[SeedDir::Point(seed)]);
    let coeffs = f.eval(&p)?;
    Ok(AlgebraElement::new(
        f.basis().clone(),
        coeffs.iter().map(|j| j.grad(0)).collect(),
    ))
}

/// Complex two-form on the flat model with g-valued coefficients F_{ia,jb},
/// antisymmetric under (ia) ↔ (jb). Entries are algebra coefficient vectors.
#[derive(Clone, Debug)]
pub struct TwoForm {
    pub n_quat: usize,
    pub basis: BasisRef,
    /// Row-major over flattened pair indices p = i·2n + a, q = j·2n + b.
    pub f: Vec<Vec<C64>>,
}

impl TwoForm {
    pub fn zeros(n_quat: usize, basis: &BasisRef) -> Self {
        let k = 4 * n_quat;
        TwoForm {
            n_quat,
            basis: basis.clone(),
            f: vec![vec![C64::default(); basis.dim]; k * k],
        }
    }

    pub fn entry(&self, i: usize, a: usize, j: usize, b: usize) -> &[C64] {
        let k = 4 * self.n_quat;
        debug_assert_eq!(self.f.len(), k * k);
        &self.f[(i * 2 * self.n_quat + a) * k + (j * 2 * self.n_quat + b)]
    }

    pub fn set_entry(&mut self, i: usize, a: usize, j: usize, b: usize, v: Vec<C64>) {
        let k = 4 * self.n_quat;
        let neg = v.iter().map(|z| -z).collect();
        self.f[(i * 2 * self.n_quat + a) * k + (j * 2 * self.n_quat + b)] = v;
        self.f[(j * 2 * self.n_quat + b) * k + (i * 2 * self.n_quat + a)] = neg;
    }

    pub fn add(&self, o: &TwoForm) -> TwoForm {
        let mut out = self.clone();
        for (x, y) in out.f.iter_mut().zip(o.f.iter()) {
            for (a, b) in x.iter_mut().zip(y.iter()) {
                *a += b;
            }
        }
        out
    }

    pub fn sub(&self, o: &TwoForm) -> TwoForm {
        let mut out = self.clone();
        for (x, y) in out.f.iter_mut().zip(o.f.iter()) {
            for (a, b) in x.iter_mut().zip(y.iter()) {
                *a -= b;
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> TwoForm {
        let mut out = self.clone();
        for x in out.f.iter_mut() {
            for a in x.iter_mut() {
                *a *= c;
            }
        }
        out
    }

    /// Largest antisymmetry violation (zero for anything built via `set_entry`).
    pub fn antisymmetry_defect(&self) -> f64 {
        let k = 4 * self.n_quat;
        let mut worst = 0.0f64;
        for p in 0..k {
            for q in 0..k {
                for d in 0..self.basis.dim {
                    worst = Float::max(worst, (self.f[p * k + q][d] + self.f[q * k + p][d]).norm());
                }
            }
        }
        worst
    }

    /// Frame component F_{±a|±b} = u^i_± u^j_± F_{ia,jb} at a harmonic.
    pub fn frame_component(&self, plus_first: bool, a: usize, plus_second: bool, b: usize, u: &Harmonic) -> Vec<C64> {
        let ci = if plus_first { &u.u_plus } else { &u.u_minus };
        let cj = if plus_second { &u.u_plus } else { &u.u_minus };
        let mut out = vec![C64::default(); self.basis.dim];
        for i in 0..2 {
            for j in 0..2 {
                let w = ci[i] * cj[j];
                for (o, e) in out.iter_mut().zip(self.entry(i, a, j, b).iter()) {
                    *o += w * e;
                }
            }
        }
        out
    }

    /// Pointwise tensor norm over orthonormal real coordinates:
    /// √(Σ_{μ<ν} ‖F_{μν}‖²_h).
    pub fn real_norm(&self) -> f64 {
        let n = self.n_quat;
        let mut s = 0.0;
        for mu in 0..4 * n {
            let jmu = real_direction(n, mu);
            for nu in (mu + 1)..4 * n {
                let jnu = real_direction(n, nu);
                let mut comp = vec![C64::default(); self.basis.dim];
                for p in 0..4 * n {
                    if jmu[p].norm() == 0.0 {
                        continue;
                    }
                    for q in 0..4 * n {
                        let w = jmu[p] * jnu[q];
                        if w.norm() == 0.0 {
                            continue;
                        }
                        let k = 4 * n;
                        for (o, e) in comp.iter_mut().zip(self.f[p * k + q].iter()) {
                            *o += w * e;
                        }
                    }
                }
                s += self.basis.hermitian_norm_coeffs(&comp).powi(2);
            }
        }
        Float::sqrt(s)
    }
}

/// Split F into the ε_{ij}-proportional part and its complement: F = F1 + F2,
/// computed by contraction with the symplectic form of the i-indices. F1 is
/// the component that survives the instanton conditions.
pub fn decompose_two_form(f: &TwoForm) -> (TwoForm, TwoForm) {
    let n = f.n_quat;
    let dim = f.basis.dim;
    let mut f1 = TwoForm::zeros(n, &f.basis);
    // S_{ab} = −½ ε^{kl} F_{ka,lb} with ε^{12} = 1;  F1_{ia,jb} = ε_{ij} S_{ab}.
    for a in 0..2 * n {
        for b in 0..2 * n {
            let mut s = vec![C64::default(); dim];
            for d in 0..dim {
                s[d] = (f.entry(0, a, 1, b)[d] - f.entry(1, a, 0, b)[d]) * C64::new(-0.5, 0.0);
            }
            // ε_{12} = −1, ε_{21} = +1.
            let k = 4 * n;
            let p12 = (0 * 2 * n + a) * k + (1 * 2 * n + b);
            let p21 = (1 * 2 * n + a) * k + (0 * 2 * n + b);
            for d in 0..dim {
                f1.f[p12][d] = -s[d];
                f1.f[p21][d] = s[d];
            }
        }
    }
    let f2 = f.sub(&f1);
    (f1, f2)
}

/// Contract F into frame components at each sample harmonic and report the
/// four instanton-condition residual families.
pub fn asd_residual(f: &TwoForm, samples: &[Harmonic], tol: f64) -> ResidualReport {
    let basis = f.basis.clone();
    let mut pp = Vec::new();
    let mut mm = Vec::new();
    let mut anti = Vec::new();
    let mut sym = Vec::new();
    let nrm = |v: &[C64]| basis.hermitian_norm_coeffs(v);
    for u in samples {
        for a in 0..2 * f.n_quat {
            for b in 0..2 * f.n_quat {
                pp.push(nrm(&f.frame_component(true, a, true, b, u)));
                mm.push(nrm(&f.frame_component(false, a, false, b, u)));
                let pm = f.frame_component(true, a, false, b, u);
                let mp = f.frame_component(false, a, true, b, u);
                let pm_ba = f.frame_component(true, b, false, a, u);
                let plus: Vec<C64> = pm.iter().zip(mp.iter()).map(|(x, y)| x + y).collect();
                let diff: Vec<C64> = pm.iter().zip(pm_ba.iter()).map(|(x, y)| x - y).collect();
                anti.push(nrm(&plus));
                sym.push(nrm(&diff));
            }
        }
    }
    let mut rep = ResidualReport::new();
    rep.insert_samples("asd_plus_plus", &pp, tol);
    rep.insert_samples("asd_minus_minus", &mm, tol);
    rep.insert_samples("asd_mixed_antisymmetry", &anti, tol);
    rep.insert_samples("asd_mixed_ab_symmetry", &sym, tol);
    rep
}

/// Evaluate a formal atom x^{±a} = x^{ia}·raise(u_±)_i generically; shared by
/// the expression evaluator and the closed-form engine.
pub fn contract_x_pm<S: Scalar>(x: &[S], n_quat: usize, u: &[S; 4], plus: bool, a: usize) -> S {
    // u slots: [u1p, u2p, u1m, u2m]; raise(v) = (−v₂, v₁).
    let (c1, c2) = if plus { (u[0].clone(), u[1].clone()) } else { (u[2].clone(), u[3].clone()) };
    let x1 = x[0 * 2 * n_quat + a].clone();
    let x2 = x[1 * 2 * n_quat + a].clone();
    // x^{1a}·(−u₂) + x^{2a}·u₁
    -(x1 * c2) + x2 * c1
}

#[derive(Clone, Debug)]
pub enum FlatError {
    Shape(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{sl2, u1, AlgebraElement};
    use crate::sample::Sampler;

    fn random_two_form(basis: &BasisRef, s: &mut Sampler) -> TwoForm {
        let mut f = TwoForm::zeros(1, basis);
        for p in 0..4 {
            for q in (p + 1)..4 {
                let (i, a, j, b) = (p / 2, p % 2, q / 2, q % 2);
                let v: Vec<C64> =
                    (0..basis.dim).map(|_| C64::new(s.normal(), s.normal())).collect();
                f.set_entry(i, a, j, b, v);
            }
        }
        f
    }

    #[test]
    fn reality_roundtrip() {
        let y = [0.3, -1.2, 0.7, 2.5];
        let p = PointX::from_real(&y);
        assert!(p.reality_defect() < 1e-15);
        assert_eq!(p.to_real().unwrap(), y);
        let q = PointX::from_complex(1, vec![C64::new(1.0, 0.0); 4]);
        assert!(q.reality_defect() > 0.1);
        assert!(!q.reality);
    }

    #[test]
    fn decompose_is_idempotent_projection() {
        let basis = sl2();
        let mut s = Sampler::new(4);
        for _ in 0..20 {
            let f = random_two_form(&basis, &mut s);
            let (f1, f2) = decompose_two_form(&f);
            // Sum reconstructs, projection is idempotent, parts are antisymmetric.
            let back = f1.add(&f2).sub(&f);
            assert!(back.antisymmetry_defect() < 1e-14);
            for e in back.f.iter().flatten() {
                assert!(e.norm() < 1e-13);
            }
            let (f11, f12) = decompose_two_form(&f1);
            for (x, y) in f11.f.iter().flatten().zip(f1.f.iter().flatten()) {
                assert!((x - y).norm() < 1e-13);
            }
            for e in f12.f.iter().flatten() {
                assert!(e.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn decompose_matches_index_swap_oracle() {
        // Independent route: F1_{ia,jb} = ½ (F_{ia,jb} − F_{ja,ib}).
        let basis = u1();
        let mut s = Sampler::new(8);
        let f = random_two_form(&basis, &mut s);
        let (f1, _) = decompose_two_form(&f);
        for i in 0..2 {
            for a in 0..2 {
                for j in 0..2 {
                    for b in 0..2 {
                        let want = (f.entry(i, a, j, b)[0] - f.entry(j, a, i, b)[0]) * 0.5;
                        assert!((f1.entry(i, a, j, b)[0] - want).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn pure_parts_classified() {
        let basis = u1();
        // F_{ia,jb} = ε_{ij} S_{ab} with S symmetric: pure first summand.
        let mut f = TwoForm::zeros(1, &basis);
        let sym = [[1.5, 0.25], [0.25, -2.0]];
        for a in 0..2 {
            for b in 0..2 {
                // only (i,j) = (1,2)/(2,1) nonzero
                f.set_entry(0, a, 1, b, vec![C64::new(-sym[a][b], 0.0)]); // ε_{12} = −1
            }
        }
        let (f1, f2) = decompose_two_form(&f);
        for e in f2.f.iter().flatten() {
            assert!(e.norm() < 1e-14);
        }
        let rep = asd_residual(&f, &HaarGridSamples::few(), 1e-10);
        assert!(rep.all_pass(), "pure eps part must pass: {:?}", rep.failing());
        // F_{ia,jb} = T_{ij} ε_{ab} with T symmetric: pure second summand.
        let mut g = TwoForm::zeros(1, &basis);
        let t = [[0.7, 0.2], [0.2, 1.1]];
        for i in 0..2 {
            for j in 0..2 {
                // ε_{ab}: only (a,b) = (0,1)/(1,0) nonzero; antisymmetry under
                // pair exchange requires T symmetric, set both orientations.
                if t[i][j] != 0.0 {
                    g.set_entry(i, 0, j, 1, vec![C64::new(-t[i][j], 0.0)]);
                }
            }
        }
        let (g1, _) = decompose_two_form(&g);
        for e in g1.f.iter().flatten() {
            assert!(e.norm() < 1e-14);
        }
        assert!(f1.antisymmetry_defect() < 1e-14);
    }

    struct HaarGridSamples;
    impl HaarGridSamples {
        fn few() -> Vec<Harmonic> {
            let mut s = Sampler::new(17);
            (0..12).map(|_| s.su2()).collect()
        }
    }

    #[test]
    fn asd_vanishes_iff_second_part_vanishes() {
        let basis = sl2();
        let mut s = Sampler::new(21);
        let samples = HaarGridSamples::few();
        for _ in 0..30 {
            let f = random_two_form(&basis, &mut s);
            let (_, f2) = decompose_two_form(&f);
            let f2_norm: f64 = f2.f.iter().flatten().map(|z| z.norm()).sum();
            let rep = asd_residual(&f, &samples, 1e-10);
            let worst = rep.entries.values().map(|e| e.max).fold(0.0, f64::max);
            if f2_norm < 1e-12 {
                assert!(worst < 1e-10);
            } else {
                assert!(worst > 1e-6 * f2_norm, "worst {worst} vs F2 {f2_norm}");
            }
        }
    }

    #[test]
    fn real_norm_positive_definite() {
        let basis = u1();
        let mut f = TwoForm::zeros(1, &basis);
        f.set_entry(0, 0, 1, 1, vec![C64::new(1.0, 0.0)]);
        assert!(f.real_norm() > 0.0);
        let z = TwoForm::zeros(1, &basis);
        assert_eq!(z.real_norm(), 0.0);
        let _ = AlgebraElement::zero(&basis);
    }
}
