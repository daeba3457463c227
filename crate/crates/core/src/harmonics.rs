//! The SL₂(ℂ) fiber of harmonic space.
//!
//! A [`Harmonic`] is a point U ∈ SL₂(ℂ) stored by its two columns u₊, u₋.
//! The fiber vector fields H₀, H₊₊, H₋₋ act as right-multiplication flows
//! U ↦ U·exp(t·Hᵒ); with the generator matrices
//!
//! ```text
//! H₀ᵒ = (1  0; 0 −1),   H₊₊ᵒ = (0 1; 0 0),   H₋₋ᵒ = (0 0; 1 0),
//! ```
//!
//! this realizes the commutation table [H₀, H±±] = ±2H±±, [H₊₊, H₋₋] = H₀ as
//! derivations, which the test suite enforces. The compact directions
//! G₀ = iH₀, G₁ = H₊₊ − H₋₋, G₂ = i(H₊₊ + H₋₋) are tangent to SU(2).
//!
//! Index conventions, fixed once for the whole crate: raising acts on a pair
//! by `raise(v) = (−v₂, v₁)`, so u⁺ⁱu⁻ᵢ ≡ raise(u₊)·u₋ = det U = 1 and on the
//! compact slice u₋ equals the entrywise conjugate of raise(u₊).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::jet::{Jet, Scalar};
use crate::lie::BasisRef;
use crate::mat::{CMat, Mat};
use crate::sample::Sampler;

/// Raised companion of a 2-vector: `raise(v) = (−v₂, v₁)`.
pub fn raise<S: Scalar>(v: &[S; 2]) -> [S; 2] {
    [-v[1].clone(), v[0].clone()]
}

/// Point of the SL₂(ℂ) fiber, stored as the two columns of U.
#[derive(Clone, Debug, PartialEq)]
pub struct Harmonic {
    pub u_plus: [C64; 2],
    pub u_minus: [C64; 2],
}

impl Harmonic {
    pub fn identity() -> Self {
        Harmonic {
            u_plus: [C64::new(1.0, 0.0), C64::default()],
            u_minus: [C64::default(), C64::new(1.0, 0.0)],
        }
    }

    pub fn from_columns(u_plus: [C64; 2], u_minus: [C64; 2]) -> Self {
        Harmonic { u_plus, u_minus }
    }

    pub fn from_matrix(m: &CMat) -> Self {
        debug_assert_eq!(m.n, 2);
        Harmonic {
            u_plus: [*m.at(0, 0), *m.at(1, 0)],
            u_minus: [*m.at(0, 1), *m.at(1, 1)],
        }
    }

    pub fn matrix(&self) -> CMat {
        Mat {
            n: 2,
            a: vec![self.u_plus[0], self.u_minus[0], self.u_plus[1], self.u_minus[1]],
        }
    }

    pub fn det(&self) -> C64 {
        self.u_plus[0] * self.u_minus[1] - self.u_minus[0] * self.u_plus[1]
    }

    pub fn det_defect(&self) -> f64 {
        (self.det() - C64::new(1.0, 0.0)).norm()
    }

    /// Distance of u₋ from the entrywise conjugate of the raised u₊;
    /// zero exactly on SU(2).
    pub fn reality_defect(&self) -> f64 {
        let r = raise(&self.u_plus);
        Float::sqrt(
            (self.u_minus[0] - r[0].conj()).norm_sqr() + (self.u_minus[1] - r[1].conj()).norm_sqr(),
        )
    }

    /// Right-multiplication flow U·exp(t·gen) in closed form.
    pub fn flow(&self, gen: FiberDir, t: C64) -> Harmonic {
        let m = self.matrix().matmul(&fiber_flow_matrix(gen, t));
        Harmonic::from_matrix(&m)
    }
}

/// Fiber directions available to flows and derivations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FiberDir {
    H0,
    Hpp,
    Hmm,
    G0,
    G1,
    G2,
}

/// The 2×2 generator matrix of a fiber direction.
pub fn fiber_generator(gen: FiberDir) -> CMat {
    let z = C64::default();
    let one = C64::new(1.0, 0.0);
    let i = C64::i();
    let a = match gen {
        FiberDir::H0 => vec![one, z, z, -one],
        FiberDir::Hpp => vec![z, one, z, z],
        FiberDir::Hmm => vec![z, z, one, z],
        FiberDir::G0 => vec![i, z, z, -i],
        FiberDir::G1 => vec![z, one, -one, z],
        FiberDir::G2 => vec![z, i, i, z],
    };
    Mat { n: 2, a }
}

/// exp(t·gen) in closed form; entire in complex t and exactly unimodular.
pub fn fiber_flow_matrix(gen: FiberDir, t: C64) -> CMat {
    let z = C64::default();
    let one = C64::new(1.0, 0.0);
    let i = C64::i();
    let a = match gen {
        FiberDir::H0 => vec![t.exp(), z, z, (-t).exp()],
        FiberDir::Hpp => vec![one, t, z, one],
        FiberDir::Hmm => vec![one, z, t, one],
        FiberDir::G0 => vec![(i * t).exp(), z, z, (-i * t).exp()],
        FiberDir::G1 => {
            let (c, s) = ((i * t).exp() + (-i * t).exp(), (i * t).exp() - (-i * t).exp());
            let (c, s) = (c * 0.5, s * 0.5 * (-i));
            vec![c, s, -s, c]
        }
        FiberDir::G2 => {
            let (c, s) = ((i * t).exp() + (-i * t).exp(), (i * t).exp() - (-i * t).exp());
            let (c, s) = (c * 0.5, s * 0.5 * (-i));
            vec![c, i * s, i * s, c]
        }
    };
    Mat { n: 2, a }
}

/// Evaluation request: the entries of x and U as jets over a shared seed space.
///
/// `x` is row-major over (i, a) with i ∈ {0,1}, a ∈ {0..2n−1}; `u` is
/// `[u¹₊, u²₊, u¹₋, u²₋]`.
#[derive(Clone, Debug)]
pub struct EvalPoint {
    pub n_quat: usize,
    pub x: Vec<Jet>,
    pub u: [Jet; 4],
}

impl EvalPoint {
    pub fn xe(&self, i: usize, a: usize) -> &Jet {
        &self.x[i * 2 * self.n_quat + a]
    }
}

/// A direction of differentiation for a seeded evaluation.
#[derive(Clone, Debug)]
pub enum SeedDir {
    /// Displacement of the x-entries: dx^{ia} = v[i·2n + a].
    Point(Vec<C64>),
    /// Fiber flow U·exp(t·gen).
    Fiber(FiberDir),
}

/// Build an [`EvalPoint`] at (x, U) carrying first/second-order seeds for the
/// given directions, in order. Fiber seeds use canonical coordinates of the
/// composed flow U·exp(Σ t_k G_k), so mixed second derivatives come out
/// symmetrized.
pub fn seeded_point(xs: &[C64], n_quat: usize, u: &Harmonic, dirs: &[SeedDir]) -> EvalPoint {
    let m = dirs.len();
    let nx = 4 * n_quat;
    debug_assert_eq!(xs.len(), nx);

    let mut x: Vec<Jet> = xs.iter().map(|&v| Jet::constant(v).pad_to(m)).collect();
    for (k, d) in dirs.iter().enumerate() {
        if let SeedDir::Point(v) = d {
            for (e, dv) in v.iter().enumerate() {
                x[e].g[k] = *dv;
            }
        }
    }

    let umat = u.matrix();
    let mut uj: [Jet; 4] = core::array::from_fn(|idx| {
        let (i, col) = (idx % 2, idx / 2); // idx: 0=u1p,1=u2p,2=u1m,3=u2m
        Jet::constant(*umat.at(i, col)).pad_to(m)
    });
    // First order: d/dt_k U = U·G_k. Second order (canonical coordinates):
    // d²/dt_k dt_l U = U·(G_k G_l + G_l G_k)/2.
    let gens: Vec<Option<CMat>> = dirs
        .iter()
        .map(|d| match d {
            SeedDir::Fiber(g) => Some(fiber_generator(*g)),
            SeedDir::Point(_) => None,
        })
        .collect();
    for (k, gk) in gens.iter().enumerate() {
        if let Some(gk) = gk {
            let ug = umat.matmul(gk);
            for idx in 0..4 {
                let (i, col) = (idx % 2, idx / 2);
                uj[idx].g[k] = *ug.at(i, col);
            }
            for (l, gl) in gens.iter().enumerate() {
                if let Some(gl) = gl {
                    let sym = gk.matmul(gl).add(&gl.matmul(gk)).scale_c(C64::new(0.5, 0.0));
                    let ugg = umat.matmul(&sym);
                    for idx in 0..4 {
                        let (i, col) = (idx % 2, idx / 2);
                        uj[idx].h[k * m + l] = *ugg.at(i, col);
                    }
                }
            }
        }
    }

    EvalPoint { n_quat, x, u: uj }
}

#[derive(Clone, Debug)]
pub enum FieldError {
    Eval(String),
    UnsupportedOrder(usize),
    Lie(crate::lie::LieError),
    Ode(String),
    Cell(String),
}

impl core::fmt::Display for FieldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FieldError::Eval(s) => write!(f, "evaluation failed: {s}"),
            FieldError::UnsupportedOrder(k) => write!(f, "derivative order {k} unsupported (max 2)"),
            FieldError::Lie(e) => write!(f, "{e}"),
            FieldError::Ode(s) => write!(f, "integrator failure: {s}"),
            FieldError::Cell(s) => write!(f, "outside big-cell trivialization: {s}"),
        }
    }
}

impl From<crate::lie::LieError> for FieldError {
    fn from(e: crate::lie::LieError) -> Self {
        FieldError::Lie(e)
    }
}

/// Evaluation request with one extra dual derivative riding over the jets;
/// the bridge integrator uses it to push a flow sensitivity through an ODE
/// whose coefficients are themselves jet-valued.
#[derive(Clone, Debug)]
pub struct DualEvalPoint {
    pub n_quat: usize,
    pub x: Vec<crate::jet::Dual<Jet>>,
    pub u: [crate::jet::Dual<Jet>; 4],
}

/// A g-valued function of (x, U) with a declared H₀-charge, evaluable with
/// exact first and second directional derivatives through jet seeds.
pub trait ChargedField {
    fn charge(&self) -> i64;
    fn basis(&self) -> &BasisRef;
    fn n_quat(&self) -> usize;
    /// Coefficients against the algebra basis, as jets over the seed space of `p`.
    fn eval(&self, p: &EvalPoint) -> Result<Vec<Jet>, FieldError>;
    /// Dual-over-jet evaluation; only analytic (expression/polynomial) fields
    /// support it, and only those appear inside the bridge integrand.
    fn eval_dual(&self, _p: &DualEvalPoint) -> Result<Vec<crate::jet::Dual<Jet>>, FieldError> {
        Err(FieldError::Eval(
            alloc::string::String::from("dual evaluation unsupported for this field"),
        ))
    }
}

/// Plain value of a field at (x, U).
pub fn field_value(
    f: &dyn ChargedField,
    xs: &[C64],
    u: &Harmonic,
) -> Result<Vec<C64>, FieldError> {
    let p = seeded_point(xs, f.n_quat(), u, &[]);
    Ok(f.eval(&p)?.iter().map(|j| j.v).collect())
}

/// First derivative of a field along a fiber flow: d/dt f(x, U·exp(t·gen)).
pub fn harmonic_derivative(
    f: &dyn ChargedField,
    gen: FiberDir,
    xs: &[C64],
    u: &Harmonic,
) -> Result<Vec<C64>, FieldError> {
    let p = seeded_point(xs, f.n_quat(), u, &[SeedDir::Fiber(gen)]);
    Ok(f.eval(&p)?.iter().map(|j| j.grad(0)).collect())
}

/// Iterated fiber derivative X·(Y·f) in the flow-composition sense
/// ∂_s∂_t f(x, U·e^{sX}e^{tY}).
pub fn harmonic_second_derivative(
    f: &dyn ChargedField,
    first: FiberDir,
    second: FiberDir,
    xs: &[C64],
    u: &Harmonic,
) -> Result<Vec<C64>, FieldError> {
    // One jet evaluation with ordered flows: seeds (s, t) on
    // U(s,t) = U e^{sX} e^{tY}, whose entries are exact order-2 jets.
    // The mixed partial of the smooth map U(s,t) is U·Gx·Gy with no
    // ordering ambiguity, so the symmetric Hessian storage is exact.
    let m = 2;
    let nx = xs.len();
    let x: Vec<Jet> = xs.iter().map(|&v| Jet::constant(v).pad_to(m)).collect();
    debug_assert_eq!(nx, 4 * f.n_quat());
    let gx = fiber_generator(first);
    let gy = fiber_generator(second);
    let umat = u.matrix();
    let ux = umat.matmul(&gx);
    let uy = umat.matmul(&gy);
    let uxy = umat.matmul(&gx).matmul(&gy);
    let uxx = umat.matmul(&gx).matmul(&gx);
    let uyy = umat.matmul(&gy).matmul(&gy);
    let uj: [Jet; 4] = core::array::from_fn(|idx| {
        let (i, col) = (idx % 2, idx / 2);
        let mut j = Jet::constant(*umat.at(i, col)).pad_to(m);
        j.g[0] = *ux.at(i, col);
        j.g[1] = *uy.at(i, col);
        j.h[0 * m + 1] = *uxy.at(i, col);
        j.h[1 * m + 0] = *uxy.at(i, col);
        j.h[0 * m + 0] = *uxx.at(i, col);
        j.h[1 * m + 1] = *uyy.at(i, col);
        j
    });
    let p = EvalPoint { n_quat: f.n_quat(), x, u: uj };
    Ok(f.eval(&p)?.iter().map(|j| j.hess(0, 1)).collect())
}

/// Quadrature grid on SU(2) against normalized Haar measure.
#[derive(Clone, Debug)]
pub struct HaarGrid {
    pub nodes: Vec<Harmonic>,
    pub weights: Vec<f64>,
}

impl HaarGrid {
    /// Product grid in Euler-type coordinates: Gauss–Legendre in cos θ and
    /// uniform angles. Exact for harmonic polynomials well past degree 4.
    pub fn euler(n: [usize; 3]) -> Self {
        let (gl_nodes, gl_weights) = gauss_legendre(n[0]);
        let mut nodes = Vec::with_capacity(n[0] * n[1] * n[2]);
        let mut weights = Vec::with_capacity(n[0] * n[1] * n[2]);
        for (c, wc) in gl_nodes.iter().zip(gl_weights.iter()) {
            let half = Float::sqrt((1.0 + c) / 2.0); // cos(θ/2)
            let other = Float::sqrt((1.0 - c) / 2.0); // sin(θ/2)
            for k1 in 0..n[1] {
                let xi1 = 2.0 * core::f64::consts::PI * (k1 as f64 + 0.5) / n[1] as f64;
                for k2 in 0..n[2] {
                    let xi2 = 2.0 * core::f64::consts::PI * (k2 as f64 + 0.5) / n[2] as f64;
                    let alpha = C64::new(half * Float::cos(xi1), half * Float::sin(xi1));
                    let beta = C64::new(other * Float::cos(xi2), other * Float::sin(xi2));
                    nodes.push(Harmonic::from_columns(
                        [alpha, -beta.conj()],
                        [beta, alpha.conj()],
                    ));
                    weights.push(wc / 2.0 / (n[1] * n[2]) as f64);
                }
            }
        }
        HaarGrid { nodes, weights }
    }

    /// Monte Carlo grid with a fixed seed; used as a cross-validation oracle.
    pub fn monte_carlo(n: usize, seed: u64) -> Self {
        let mut s = Sampler::new(seed);
        let nodes: Vec<Harmonic> = (0..n).map(|_| s.su2()).collect();
        HaarGrid { nodes, weights: vec![1.0 / n as f64; n] }
    }

    pub fn integrate_scalar(&self, mut f: impl FnMut(&Harmonic) -> C64) -> C64 {
        let mut acc = C64::default();
        for (node, w) in self.nodes.iter().zip(self.weights.iter()) {
            acc += f(node) * C64::new(*w, 0.0);
        }
        acc
    }

    /// Smallest |u²₋| over the nodes: the margin to the lower-cell boundary.
    pub fn cell_margin(&self) -> f64 {
        self.nodes
            .iter()
            .map(|u| u.u_minus[1].norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Chebyshev-based initial guess.
        let mut x = Float::cos(core::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if Float::abs(dx) < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fiber Cᵏ norm of a charged field at fixed x: sup over grid nodes of the
/// accumulated h-norms of symmetrized derivatives along G₀, G₁, G₂ up to
/// order k. Only k ∈ {0, 1, 2} is supported.
pub fn fiber_ck_norm(
    f: &dyn ChargedField,
    xs: &[C64],
    k: usize,
    grid: &HaarGrid,
) -> Result<f64, FieldError> {
    if k > 2 {
        return Err(FieldError::UnsupportedOrder(k));
    }
    let basis = f.basis().clone();
    let dirs = [SeedDir::Fiber(FiberDir::G0), SeedDir::Fiber(FiberDir::G1), SeedDir::Fiber(FiberDir::G2)];
    let used: &[SeedDir] = &dirs[..if k == 0 { 0 } else { 3 }];
    let mut sup: f64 = 0.0;
    for node in grid.nodes.iter() {
        let p = seeded_point(xs, f.n_quat(), node, used);
        let coeffs = f.eval(&p)?;
        let value: Vec<C64> = coeffs.iter().map(|j| j.v).collect();
        let mut total = basis.hermitian_norm_coeffs(&value);
        if k >= 1 {
            let mut s1 = 0.0;
            for d in 0..3 {
                let g: Vec<C64> = coeffs.iter().map(|j| j.grad(d)).collect();
                s1 += basis.hermitian_norm_coeffs(&g).powi(2);
            }
            total += Float::sqrt(s1);
        }
        if k >= 2 {
            let mut s2 = 0.0;
            for d1 in 0..3 {
                for d2 in 0..3 {
                    let h: Vec<C64> = coeffs.iter().map(|j| j.hess(d1, d2)).collect();
                    s2 += basis.hermitian_norm_coeffs(&h).powi(2);
                }
            }
            total += Float::sqrt(s2);
        }
        sup = Float::max(sup, total);
    }
    Ok(sup)
}

/// Convenience wrapper used by grid configuration code.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum GridSpec {
    Euler { n: [usize; 3] },
    Mc { n: usize, seed: u64 },
}

impl GridSpec {
    pub fn build(&self) -> HaarGrid {
        match self {
            GridSpec::Euler { n } => HaarGrid::euler(*n),
            GridSpec::Mc { n, seed } => HaarGrid::monte_carlo(*n, *seed),
        }
    }

    /// One refinement step, used by stability checks.
    pub fn refined(&self) -> GridSpec {
        match self {
            GridSpec::Euler { n } => GridSpec::Euler { n: [n[0] + 4, n[1] + 4, n[2] + 4] },
            GridSpec::Mc { n, seed } => GridSpec::Mc { n: n * 4, seed: *seed },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GridSpec::Euler { n } => format!("euler:{}x{}x{}", n[0], n[1], n[2]),
            GridSpec::Mc { n, seed } => format!("mc:{n}:{seed}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_closed_forms() {
        let id = Harmonic::identity();
        let t = C64::new(0.37, -0.21);
        let f = id.flow(FiberDir::Hmm, t);
        // exp(t·H₋₋ᵒ) = (1 0; t 1).
        assert!((f.u_plus[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((f.u_plus[1] - t).norm() < 1e-15);
        assert!((f.u_minus[1] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let g = f.flow(FiberDir::H0, C64::default());
        assert_eq!(g, f);
        for gen in [FiberDir::H0, FiberDir::Hpp, FiberDir::Hmm, FiberDir::G0, FiberDir::G1, FiberDir::G2] {
            assert!(id.flow(gen, t).det_defect() < 1e-13);
        }
    }

    #[test]
    fn flow_commutator_defect_matches_bracket() {
        // flow(flow(U,Hpp,s),Hmm,t) vs flow(flow(U,Hmm,t),Hpp,s):
        // to O(st) the discrepancy is the bracket [H₊₊,H₋₋] = H₀.
        let mut smp = Sampler::new(9);
        let u = smp.su2();
        let (s, t) = (1e-4, 1e-4);
        let a = u.flow(FiberDir::Hpp, C64::new(s, 0.0)).flow(FiberDir::Hmm, C64::new(t, 0.0));
        let b = u.flow(FiberDir::Hmm, C64::new(t, 0.0)).flow(FiberDir::Hpp, C64::new(s, 0.0));
        let diff = a.matrix().sub(&b.matrix());
        let want = u.matrix().matmul(&fiber_generator(FiberDir::H0)).scale_c(C64::new(-s * t, 0.0));
        assert!(diff.sub(&want).frobenius() < 1e-7);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let total: f64 = w.iter().sum();
        assert!(Float::abs(total - 2.0) < 1e-13);
        // ∫ x² over [−1,1] = 2/3; ∫ x²² exactly integrated by 12 nodes.
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!(Float::abs(m2 - 2.0 / 3.0) < 1e-13);
        let m22: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(22) * w).sum();
        assert!(Float::abs(m22 - 2.0 / 23.0) < 1e-12);
    }

    #[test]
    fn haar_grid_normalized_and_charge_selection() {
        let grid = HaarGrid::euler([12, 12, 12]);
        let one = grid.integrate_scalar(|_| C64::new(1.0, 0.0));
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-13);
        // Monomials of nonzero net charge integrate to zero.
        let z = grid.integrate_scalar(|u| u.u_plus[0] * u.u_plus[1]);
        assert!(z.norm() < crate::tol::HAAR_EXACTNESS);
        let z2 = grid
            .integrate_scalar(|u| u.u_plus[0] * u.u_minus[0] * u.u_minus[1] * u.u_minus[1]);
        assert!(z2.norm() < crate::tol::HAAR_EXACTNESS);
        // |u¹₊|² integrates to 1/2 (the two |u^i₊|² are exchangeable, sum 1).
        let half = grid.integrate_scalar(|u| C64::new(u.u_plus[0].norm_sqr(), 0.0));
        assert!((half - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn haar_schur_orthogonality_degree_two() {
        let grid = HaarGrid::euler([12, 12, 12]);
        // ∫ U_{kl} conj(U_{mn}) = δ_{km} δ_{ln} / 2 for the fundamental.
        for k in 0..2 {
            for l in 0..2 {
                for m in 0..2 {
                    for n in 0..2 {
                        let v = grid.integrate_scalar(|u| {
                            let um = u.matrix();
                            *um.at(k, l) * um.at(m, n).conj()
                        });
                        let want = if k == m && l == n { 0.5 } else { 0.0 };
                        assert!(
                            (v - C64::new(want, 0.0)).norm() < crate::tol::HAAR_EXACTNESS,
                            "Schur failure at ({k}{l},{m}{n}): {v}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn euler_grid_matches_monte_carlo_on_charge_zero() {
        let euler = HaarGrid::euler([12, 12, 12]);
        let mc = HaarGrid::monte_carlo(100_000, 7);
        let f = |u: &Harmonic| u.u_plus[0] * u.u_minus[1].conj() * C64::new(u.u_minus[0].norm_sqr(), 0.0);
        let a = euler.integrate_scalar(f);
        let b = mc.integrate_scalar(f);
        assert!((a - b).norm() < 5e-3, "euler {a} vs mc {b}");
    }

    #[test]
    fn euler_grid_stays_inside_big_cell() {
        let grid = HaarGrid::euler([12, 12, 12]);
        assert!(grid.cell_margin() > 0.05);
        for u in grid.nodes.iter() {
            assert!(u.det_defect() < 1e-14);
            assert!(u.reality_defect() < 1e-14);
        }
    }
}
