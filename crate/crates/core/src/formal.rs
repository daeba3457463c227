//! Closed-form polynomial engine.
//!
//! Fields built from the DSL atoms are polynomials in the raw variables
//! x^{ia} and the four entries of U, so the fiber derivations act as honest
//! first-order derivations on a sparse polynomial ring:
//!
//! ```text
//! H₋₋ = Σᵢ u^i₋ ∂/∂u^i₊      H₊₊ = Σᵢ u^i₊ ∂/∂u^i₋      H₀ = Σᵢ (u^i₊∂₊ − u^i₋∂₋)
//! e₋ₐ = Σᵢ u^i₋ ∂/∂x^{ia}    e₊ₐ = Σᵢ u^i₊ ∂/∂x^{ia}
//! ```
//!
//! On this ring the transport problem H₋₋ψ = f is a block-diagonal linear
//! system (blocks share the x-part, the total u-degree and the charge), which
//! yields the bridge, second prepotential, plus components, curvature and
//! central potential of a prepotential in closed form whenever the values of
//! the prepotential span a commuting subalgebra — the abelian and
//! single-generator families used by the oracle suites. The resulting gauge
//! is polynomial in the harmonics, hence bounded on SU(2); norm-based
//! estimates run against this realization.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::fields::{eval_expr, DslField};
use crate::harmonics::{ChargedField, DualEvalPoint, EvalPoint, FieldError};
use crate::jet::{Dual, Jet, Scalar};
use crate::lie::BasisRef;

/// Sparse monomial: sorted (variable, exponent) pairs. Variables are indexed
/// x^{ia} → i·2n + a and u-entries → 4n + {0: u¹₊, 1: u²₊, 2: u¹₋, 3: u²₋}.
pub type Mono = Vec<(u16, u16)>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Mono, C64>,
}

const EPS_DROP: f64 = 0.0; // keep exact zeros out, nothing else

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out: Mono = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Poly {
    pub fn constant(c: C64) -> Self {
        let mut terms = BTreeMap::new();
        if c.norm() > EPS_DROP {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    pub fn var(v: u16) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(v, 1)], C64::new(1.0, 0.0));
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, m: Mono, c: C64) {
        if c.norm() == 0.0 {
            return;
        }
        use alloc::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().norm() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    /// Formal partial derivative with respect to a variable.
    pub fn deriv(&self, v: u16) -> Poly {
        let mut out = Poly::default();
        for (m, c) in self.terms.iter() {
            if let Some(pos) = m.iter().position(|&(w, _)| w == v) {
                let e = m[pos].1;
                let mut nm = m.clone();
                if e == 1 {
                    nm.remove(pos);
                } else {
                    nm[pos].1 = e - 1;
                }
                out.push(nm, c * C64::new(e as f64, 0.0));
            }
        }
        out
    }

    /// Multiplication by a single variable.
    pub fn mul_var(&self, v: u16) -> Poly {
        let mut out = Poly::default();
        let unit = vec![(v, 1)];
        for (m, c) in self.terms.iter() {
            out.push(mono_mul(m, &unit), *c);
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluate over any scalar; `vars[v]` supplies the value of variable v.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> S {
        let mut acc = S::zero();
        for (m, c) in self.terms.iter() {
            let mut t = S::from_c(*c);
            for &(v, e) in m.iter() {
                t = t * vars[v as usize].powi(e as u32);
            }
            acc = acc + t;
        }
        acc
    }

    /// Partially evaluate: substitute numeric values for all variables with
    /// index ≥ `from_var`, leaving a polynomial in the lower variables.
    pub fn substitute_from(&self, from_var: u16, values: &[C64]) -> Poly {
        let mut out = Poly::default();
        for (m, c) in self.terms.iter() {
            let mut coeff = *c;
            let mut rest: Mono = Vec::new();
            for &(v, e) in m.iter() {
                if v >= from_var {
                    let base = values[(v - from_var) as usize];
                    let mut p = C64::new(1.0, 0.0);
                    for _ in 0..e {
                        p *= base;
                    }
                    coeff *= p;
                } else {
                    rest.push((v, e));
                }
            }
            out.push(rest, coeff);
        }
        out
    }

    pub fn scaled(&self, c: C64) -> Poly {
        if c.norm() == 0.0 {
            return Poly::default();
        }
        Poly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }
}

impl core::ops::Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        let mut out = self;
        for (m, c) in rhs.terms {
            out.push(m, c);
        }
        out
    }
}

impl core::ops::Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        let mut out = self;
        for (m, c) in rhs.terms {
            out.push(m, -c);
        }
        out
    }
}

impl core::ops::Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl core::ops::Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::default();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in rhs.terms.iter() {
                out.push(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }
}

impl Scalar for Poly {
    fn zero() -> Self {
        Poly::default()
    }
    fn one() -> Self {
        Poly::constant(C64::new(1.0, 0.0))
    }
    fn from_c(c: C64) -> Self {
        Poly::constant(c)
    }
    fn inv(&self) -> Self {
        unreachable!("polynomials admit no inverse; expression grammar is division-free")
    }
    fn primal(&self) -> C64 {
        self.terms.get(&Vec::new() as &Mono).copied().unwrap_or_default()
    }
}

/// Derivation context for a fixed quaternionic dimension.
#[derive(Clone, Copy, Debug)]
pub struct Ring {
    pub n_quat: usize,
}

impl Ring {
    pub fn u_var(&self, k: usize) -> u16 {
        (4 * self.n_quat + k) as u16
    }
    pub fn x_var(&self, i: usize, a: usize) -> u16 {
        (i * 2 * self.n_quat + a) as u16
    }
    pub fn n_vars(&self) -> usize {
        4 * self.n_quat + 4
    }

    pub fn hmm(&self, p: &Poly) -> Poly {
        // Σᵢ u^i₋ ∂/∂u^i₊
        p.deriv(self.u_var(0)).mul_var(self.u_var(2))
            + p.deriv(self.u_var(1)).mul_var(self.u_var(3))
    }

    pub fn hpp(&self, p: &Poly) -> Poly {
        p.deriv(self.u_var(2)).mul_var(self.u_var(0))
            + p.deriv(self.u_var(3)).mul_var(self.u_var(1))
    }

    pub fn h0(&self, p: &Poly) -> Poly {
        let plus = p.deriv(self.u_var(0)).mul_var(self.u_var(0))
            + p.deriv(self.u_var(1)).mul_var(self.u_var(1));
        let minus = p.deriv(self.u_var(2)).mul_var(self.u_var(2))
            + p.deriv(self.u_var(3)).mul_var(self.u_var(3));
        plus - minus
    }

    pub fn frame_minus(&self, p: &Poly, a: usize) -> Poly {
        p.deriv(self.x_var(0, a)).mul_var(self.u_var(2))
            + p.deriv(self.x_var(1, a)).mul_var(self.u_var(3))
    }

    pub fn frame_plus(&self, p: &Poly, a: usize) -> Poly {
        p.deriv(self.x_var(0, a)).mul_var(self.u_var(0))
            + p.deriv(self.x_var(1, a)).mul_var(self.u_var(1))
    }

    fn mono_charge(&self, m: &Mono) -> i64 {
        let mut q = 0i64;
        for &(v, e) in m.iter() {
            let v = v as usize;
            if v >= 4 * self.n_quat {
                let k = v - 4 * self.n_quat;
                if k < 2 {
                    q += e as i64;
                } else {
                    q -= e as i64;
                }
            }
        }
        q
    }

    fn mono_u_degree(&self, m: &Mono) -> u32 {
        m.iter()
            .filter(|&&(v, _)| (v as usize) >= 4 * self.n_quat)
            .map(|&(_, e)| e as u32)
            .sum()
    }

    fn mono_x_part(&self, m: &Mono) -> Mono {
        m.iter().copied().filter(|&(v, _)| (v as usize) < 4 * self.n_quat).collect()
    }

    /// Solve H₋₋ψ = f in the polynomial ring. The system splits into blocks
    /// indexed by (x-part, total u-degree); inside each block a rank-revealing
    /// elimination picks a canonical basic solution with free coefficients
    /// zero. Errors when a block is inconsistent.
    pub fn hmm_primitive(&self, f: &Poly) -> Result<Poly, FormalError> {
        // block key → rhs coefficients over image monomials
        let mut blocks: BTreeMap<(Mono, u32, i64), Vec<(Mono, C64)>> = BTreeMap::new();
        for (m, c) in f.terms.iter() {
            let key = (self.mono_x_part(m), self.mono_u_degree(m), self.mono_charge(m));
            blocks.entry(key).or_default().push((m.clone(), *c));
        }
        let mut psi = Poly::default();
        for ((xpart, udeg, q), rhs) in blocks {
            let cand = self.u_monomials(udeg, q + 2);
            if cand.is_empty() {
                return Err(FormalError::NotIntegrable(format!(
                    "no candidate monomials at u-degree {udeg}, charge {}",
                    q + 2
                )));
            }
            // Columns: candidate ψ monomials (x-part ⊗ u-monomial).
            // Rows: all monomials in the image of H₋₋ on the candidates.
            let mut row_index: BTreeMap<Mono, usize> = BTreeMap::new();
            let mut cols: Vec<Vec<(usize, C64)>> = Vec::with_capacity(cand.len());
            for um in cand.iter() {
                let mono = mono_mul(&xpart, um);
                let mut p = Poly::default();
                p.push(mono, C64::new(1.0, 0.0));
                let img = self.hmm(&p);
                let mut col = Vec::new();
                for (m, c) in img.terms.iter() {
                    let next = row_index.len();
                    let idx = *row_index.entry(m.clone()).or_insert(next);
                    col.push((idx, *c));
                }
                cols.push(col);
            }
            for (m, _) in rhs.iter() {
                let next = row_index.len();
                row_index.entry(m.clone()).or_insert(next);
            }
            let n_rows = row_index.len();
            let n_cols = cand.len();
            let mut a = vec![C64::default(); n_rows * n_cols];
            for (j, col) in cols.iter().enumerate() {
                for &(i, c) in col.iter() {
                    a[i * n_cols + j] = c;
                }
            }
            let mut b = vec![C64::default(); n_rows];
            for (m, c) in rhs.iter() {
                b[row_index[m]] = *c;
            }
            let sol = solve_basic(&mut a, &mut b, n_rows, n_cols).ok_or_else(|| {
                FormalError::NotIntegrable(format!(
                    "inconsistent transport block at u-degree {udeg}, charge {q}"
                ))
            })?;
            for (um, c) in cand.iter().zip(sol.iter()) {
                if c.norm() > 0.0 {
                    psi.push(mono_mul(&xpart, um), *c);
                }
            }
        }
        // Exactness check.
        let res = self.hmm(&psi) - f.clone();
        if res.max_norm() > 1e-9 * (1.0 + f.max_norm()) {
            return Err(FormalError::NotIntegrable(format!(
                "primitive residual {:.3e}",
                res.max_norm()
            )));
        }
        Ok(psi)
    }

    fn u_monomials(&self, degree: u32, charge: i64) -> Vec<Mono> {
        let mut out = Vec::new();
        for e0 in 0..=degree {
            for e1 in 0..=(degree - e0) {
                for e2 in 0..=(degree - e0 - e1) {
                    let e3 = degree - e0 - e1 - e2;
                    let q = e0 as i64 + e1 as i64 - e2 as i64 - e3 as i64;
                    if q != charge {
                        continue;
                    }
                    let mut m: Mono = Vec::new();
                    for (k, e) in [e0, e1, e2, e3].into_iter().enumerate() {
                        if e > 0 {
                            m.push((self.u_var(k), e as u16));
                        }
                    }
                    out.push(m);
                }
            }
        }
        out
    }
}

/// Rank-revealing Gaussian elimination with complete pivoting; free variables
/// are set to zero. Returns None when the system is inconsistent.
fn solve_basic(a: &mut [C64], b: &mut [C64], rows: usize, cols: usize) -> Option<Vec<C64>> {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    let mut col_of_row: Vec<usize> = Vec::new();
    let mut used_col = vec![false; cols];
    let mut r = 0;
    while r < rows {
        // complete pivot over remaining submatrix
        let mut best = 0.0;
        let mut prc = (r, 0usize);
        for rr in r..rows {
            for cc in 0..cols {
                if used_col[cc] {
                    continue;
                }
                let v = a[rr * cols + cc].norm();
                if v > best {
                    best = v;
                    prc = (rr, cc);
                }
            }
        }
        if best <= tol {
            break;
        }
        let (pr, pc) = prc;
        if pr != r {
            for cc in 0..cols {
                a.swap(r * cols + cc, pr * cols + cc);
            }
            b.swap(r, pr);
        }
        used_col[pc] = true;
        col_of_row.push(pc);
        let d = a[r * cols + pc];
        for rr in 0..rows {
            if rr == r {
                continue;
            }
            let f = a[rr * cols + pc] / d;
            if f.norm() == 0.0 {
                continue;
            }
            for cc in 0..cols {
                let v = a[r * cols + cc];
                a[rr * cols + cc] -= f * v;
            }
            let v = b[r];
            b[rr] -= f * v;
        }
        r += 1;
    }
    // Consistency: remaining rows must have ~zero rhs.
    let rank = col_of_row.len();
    for rr in rank..rows {
        if b[rr].norm() > 1e-9 * scale.max(b.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
            return None;
        }
    }
    let mut x = vec![C64::default(); cols];
    for (rr, &pc) in col_of_row.iter().enumerate() {
        x[pc] = b[rr] / a[rr * cols + pc];
    }
    Some(x)
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormalError {
    NotIntegrable(String),
    NonCommutingValues(String),
    NotPolynomial(String),
}

impl core::fmt::Display for FormalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FormalError::NotIntegrable(s) => write!(f, "no polynomial transport solution: {s}"),
            FormalError::NonCommutingValues(s) => {
                write!(f, "closed-form gauge needs commuting prepotential values: {s}")
            }
            FormalError::NotPolynomial(s) => {
                write!(f, "second prepotential is not polynomial: {s}")
            }
        }
    }
}

/// x-degree of a monomial (exponent sum over the coordinate variables).
fn mono_x_degree(ring: &Ring, m: &Mono) -> usize {
    m.iter()
        .filter(|&&(v, _)| (v as usize) < 4 * ring.n_quat)
        .map(|&(_, e)| e as usize)
        .sum()
}

fn split_by_x_degree(ring: &Ring, p: &Poly) -> Vec<Poly> {
    let mut out: Vec<Poly> = Vec::new();
    for (m, c) in p.terms.iter() {
        let d = mono_x_degree(ring, m);
        while out.len() <= d {
            out.push(Poly::default());
        }
        out[d].push(m.clone(), *c);
    }
    out
}

/// Solve the compatibility transport H₋₋·A₊₊ = H₊₊·A₋₋ + [A₊₊, A₋₋] for a
/// polynomial A₊₊ of charge +2, ascending in x-degree.
///
/// The kernel of H₋₋ at charge +2 is trivial on polynomials, so the solution
/// is unique whenever it exists. When the values of A₋₋ commute the series
/// collapses to one transport solve; otherwise the bracket feeds lower
/// degrees into higher ones and the recursion must terminate below `cap`
/// (non-terminating data is rejected — its second prepotential is entire but
/// not polynomial). An x-free non-central part of A₋₋ would couple each
/// degree to itself and is not supported.
pub fn leznov_app(
    ring: &Ring,
    basis: &BasisRef,
    amm: &[Poly],
    cap: usize,
    tail_tol: f64,
) -> Result<Vec<Poly>, FormalError> {
    let dim = basis.dim;
    // Split A₋₋ and H₊₊A₋₋ by x-degree, componentwise.
    let amm_deg: Vec<Vec<Poly>> = amm.iter().map(|c| split_by_x_degree(ring, c)).collect();
    let hpp_amm: Vec<Vec<Poly>> =
        amm.iter().map(|c| split_by_x_degree(ring, &ring.hpp(c))).collect();
    let m0: Vec<Poly> = (0..dim)
        .map(|d| amm_deg[d].first().cloned().unwrap_or_default())
        .collect();
    let m0_zero = m0.iter().all(|p| p.is_zero());

    let mut app_deg: Vec<Vec<Poly>> = Vec::new(); // [k][component]
    let mut app_total: Vec<Poly> = vec![Poly::default(); dim];
    for k in 0..=cap {
        // R_k = (H₊₊A₋₋)_k + Σ_{j≥1} [A₊₊^{(k−j)}, A₋₋^{(j)}]
        let mut rhs: Vec<Poly> =
            (0..dim).map(|d| hpp_amm[d].get(k).cloned().unwrap_or_default()).collect();
        for j in 1..=k {
            if app_deg.len() < k - j + 1 {
                continue;
            }
            let p_prev: Vec<Poly> = app_deg[k - j].clone();
            let m_j: Vec<Poly> =
                (0..dim).map(|d| amm_deg[d].get(j).cloned().unwrap_or_default()).collect();
            let br = basis.bracket_coeffs(&p_prev, &m_j);
            for d in 0..dim {
                rhs[d] = rhs[d].clone() + br[d].clone();
            }
        }
        // The x-free part couples the degree to itself through the bracket;
        // resolve by fixed-point iteration (closes immediately when the
        // values commute or M₀ vanishes).
        let mut p_k: Vec<Poly> =
            rhs.iter().map(|r| ring.hmm_primitive(r)).collect::<Result<_, _>>()?;
        if !m0_zero {
            let mut converged = false;
            for _ in 0..24 {
                let br = basis.bracket_coeffs(&p_k, &m0);
                if br.iter().all(|p| p.max_norm() < 1e-13) {
                    converged = true;
                    break;
                }
                let next: Vec<Poly> = rhs
                    .iter()
                    .zip(br.iter())
                    .map(|(r, b)| ring.hmm_primitive(&(r.clone() + b.clone())))
                    .collect::<Result<_, _>>()?;
                let drift = next
                    .iter()
                    .zip(p_k.iter())
                    .map(|(a, b)| (a.clone() - b.clone()).max_norm())
                    .fold(0.0, f64::max);
                p_k = next;
                if drift < 1e-13 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(FormalError::NotIntegrable(
                    "x-independent part of the prepotential does not close the transport"
                        .to_string(),
                ));
            }
        }
        for d in 0..dim {
            app_total[d] = app_total[d].clone() + p_k[d].clone();
        }
        app_deg.push(p_k);
    }

    // The transport must close exactly; a nonzero residual means the series
    // continues past the cap.
    let br = basis.bracket_coeffs(&app_total, &amm.to_vec());
    let mut worst = 0.0f64;
    for d in 0..dim {
        let res = ring.hmm(&app_total[d]) - ring.hpp(&amm[d]) - br[d].clone();
        worst = num_traits::Float::max(worst, res.max_norm());
    }
    if worst > tail_tol {
        return Err(FormalError::NotPolynomial(alloc::format!(
            "transport residual {worst:.3e} at degree cap {cap}"
        )));
    }
    Ok(app_total)
}

/// Algebra-valued polynomial field with a declared charge.
#[derive(Clone, Debug)]
pub struct PolyField {
    pub basis: BasisRef,
    pub n_quat: usize,
    pub charge: i64,
    pub comps: Vec<Poly>,
}

impl PolyField {
    fn vars_from_point(p: &EvalPoint) -> Vec<Jet> {
        let mut vars: Vec<Jet> = p.x.clone();
        vars.extend_from_slice(&p.u);
        vars
    }

    fn vars_from_dual_point(p: &DualEvalPoint) -> Vec<Dual<Jet>> {
        let mut vars: Vec<Dual<Jet>> = p.x.clone();
        vars.extend(p.u.iter().cloned());
        vars
    }
}

impl ChargedField for PolyField {
    fn charge(&self) -> i64 {
        self.charge
    }
    fn basis(&self) -> &BasisRef {
        &self.basis
    }
    fn n_quat(&self) -> usize {
        self.n_quat
    }
    fn eval(&self, p: &EvalPoint) -> Result<Vec<Jet>, FieldError> {
        let vars = Self::vars_from_point(p);
        Ok(self.comps.iter().map(|c| c.eval(&vars)).collect())
    }
    fn eval_dual(&self, p: &DualEvalPoint) -> Result<Vec<Dual<Jet>>, FieldError> {
        let vars = Self::vars_from_dual_point(p);
        Ok(self.comps.iter().map(|c| c.eval(&vars)).collect())
    }
}

/// Closed-form gauge data for prepotentials whose values span a commuting
/// subalgebra: the ψ-potential with H₋₋ψ = A₋₋, the second prepotential
/// H₊₊ψ, plus components, mixed curvature and the central potential, all as
/// polynomial fields. This realization is holomorphic on the whole fiber and
/// bounded on SU(2).
pub struct ClosedFormGauge {
    pub basis: BasisRef,
    pub n_quat: usize,
    pub ring: Ring,
    /// A₋₋ components.
    pub amm: Vec<Poly>,
    /// ψ with H₋₋ψ = A₋₋ and the canonical basic normalization.
    pub psi: Vec<Poly>,
    /// A₊₊ = H₊₊ψ.
    pub app: Vec<Poly>,
    /// A₊ₐ = −e₋ₐA₊₊ per a.
    pub apa: Vec<Vec<Poly>>,
    /// F₊ₐ|₋ᵦ = e₋ᵦ(e₋ₐ A₊₊), row-major over (a, b).
    pub fpm: Vec<Vec<Poly>>,
    /// Central potential along minus frames: Ã(e₋ₐ) = −e₋ₐψ.
    pub central_minus: Vec<Vec<Poly>>,
    /// Central potential along plus frames: Ã(e₊ₐ) = A₊ₐ − e₊ₐψ.
    pub central_plus: Vec<Vec<Poly>>,
}

impl ClosedFormGauge {
    pub fn try_new(field: &DslField) -> Result<Self, FormalError> {
        let n = field.n_quat;
        let ring = Ring { n_quat: n };
        let basis = field.basis.clone();
        let dim = basis.dim;

        // Expand the expression over the polynomial ring.
        let xv: Vec<Poly> = (0..4 * n).map(|e| Poly::var(e as u16)).collect();
        let uv: [Poly; 4] = core::array::from_fn(|k| Poly::var(ring.u_var(k)));
        let value = eval_expr(&field.expr, &xv, n, &uv, dim)
            .map_err(|e| FormalError::NotIntegrable(alloc::format!("{e}")))?;
        let amm = value
            .vector
            .ok_or_else(|| FormalError::NotIntegrable("expression is not algebra-valued".to_string()))?;

        // Commutativity of the value span: collect distinct coefficient
        // vectors over monomials and test pairwise brackets.
        let mut monos: BTreeMap<Mono, Vec<C64>> = BTreeMap::new();
        for (k, comp) in amm.iter().enumerate() {
            for (m, c) in comp.terms.iter() {
                monos.entry(m.clone()).or_insert_with(|| vec![C64::default(); dim])[k] = *c;
            }
        }
        let vecs: Vec<Vec<C64>> = monos.into_values().collect();
        for i in 0..vecs.len() {
            for j in (i + 1)..vecs.len() {
                let br = basis.bracket_coeffs(&vecs[i], &vecs[j]);
                let nrm = basis.hermitian_norm_coeffs(&br);
                if nrm > 1e-12 {
                    return Err(FormalError::NonCommutingValues(alloc::format!(
                        "bracket norm {nrm:.3e} between value directions"
                    )));
                }
            }
        }

        let psi: Vec<Poly> = amm
            .iter()
            .map(|c| ring.hmm_primitive(c))
            .collect::<Result<_, _>>()?;
        let app: Vec<Poly> = psi.iter().map(|p| ring.hpp(p)).collect();
        let mut apa = Vec::with_capacity(2 * n);
        let mut central_minus = Vec::with_capacity(2 * n);
        let mut central_plus = Vec::with_capacity(2 * n);
        for a in 0..2 * n {
            let pa: Vec<Poly> = app.iter().map(|p| -ring.frame_minus(p, a)).collect();
            let cm: Vec<Poly> = psi.iter().map(|p| -ring.frame_minus(p, a)).collect();
            let cp: Vec<Poly> = pa
                .iter()
                .zip(psi.iter())
                .map(|(pa, ps)| pa.clone() - ring.frame_plus(ps, a))
                .collect();
            apa.push(pa);
            central_minus.push(cm);
            central_plus.push(cp);
        }
        let mut fpm = Vec::with_capacity(4 * n * n);
        for a in 0..2 * n {
            for b in 0..2 * n {
                let f: Vec<Poly> = app
                    .iter()
                    .map(|p| ring.frame_minus(&ring.frame_minus(p, a), b))
                    .collect();
                fpm.push(f);
            }
        }
        Ok(ClosedFormGauge {
            basis,
            n_quat: n,
            ring,
            amm,
            psi,
            app,
            apa,
            fpm,
            central_minus,
            central_plus,
        })
    }

    pub fn field(&self, comps: Vec<Poly>, charge: i64) -> PolyField {
        PolyField { basis: self.basis.clone(), n_quat: self.n_quat, charge, comps }
    }

    pub fn amm_field(&self) -> PolyField {
        self.field(self.amm.clone(), -2)
    }

    pub fn app_field(&self) -> PolyField {
        self.field(self.app.clone(), 2)
    }

    pub fn apa_field(&self, a: usize) -> PolyField {
        self.field(self.apa[a].clone(), 1)
    }

    pub fn psi_field(&self) -> PolyField {
        self.field(self.psi.clone(), 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_prepotential;
    use crate::harmonics::{field_value, seeded_point, Harmonic};
    use crate::lie::{sl2, u1};
    use crate::sample::Sampler;

    fn vars_at(n: usize, xs: &[C64], u: &Harmonic) -> Vec<C64> {
        let mut v = xs.to_vec();
        let m = u.matrix();
        v.extend_from_slice(&[*m.at(0, 0), *m.at(1, 0), *m.at(0, 1), *m.at(1, 1)]);
        debug_assert_eq!(v.len(), 4 * n + 4);
        v
    }

    #[test]
    fn fiber_derivations_match_flows() {
        let ring = Ring { n_quat: 1 };
        // p = u¹₊·u²₋² + x^{11}·u¹₋
        let p = Poly::var(ring.u_var(0)) * Poly::var(ring.u_var(3)).powi(2)
            + Poly::var(ring.x_var(0, 0)) * Poly::var(ring.u_var(2));
        let mut s = Sampler::new(13);
        let xs: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
        let u = s.su2();
        let h = 1e-6;
        for (d, gen) in [
            (ring.hmm(&p), crate::harmonics::FiberDir::Hmm),
            (ring.hpp(&p), crate::harmonics::FiberDir::Hpp),
            (ring.h0(&p), crate::harmonics::FiberDir::H0),
        ] {
            let lhs = d.eval(&vars_at(1, &xs, &u));
            let up = p.eval(&vars_at(1, &xs, &u.flow(gen, C64::new(h, 0.0))));
            let dn = p.eval(&vars_at(1, &xs, &u.flow(gen, C64::new(-h, 0.0))));
            let fd = (up - dn) / C64::new(2.0 * h, 0.0);
            assert!((lhs - fd).norm() < 1e-8, "{gen:?}: {lhs} vs {fd}");
        }
    }

    #[test]
    fn primitive_solves_transport() {
        let ring = Ring { n_quat: 1 };
        let b = u1();
        let f = make_prepotential("T1*xm1*xm2", b, 1).unwrap();
        let g = ClosedFormGauge::try_new(&f).unwrap();
        // H₋₋ψ = A₋₋ and H₀ψ = 0 exactly.
        let res = ring.hmm(&g.psi[0]) - g.amm[0].clone();
        assert!(res.max_norm() < 1e-12);
        assert!(ring.h0(&g.psi[0]).max_norm() < 1e-12);
        // A₊₊ has charge +2: H₀A₊₊ = 2A₊₊.
        let charge = ring.h0(&g.app[0]) - (g.app[0].clone() + g.app[0].clone());
        assert!(charge.max_norm() < 1e-12);
    }

    #[test]
    fn primitive_handles_up_dependent_prepotential() {
        let ring = Ring { n_quat: 1 };
        let b = sl2();
        let f = make_prepotential("T1*xm1^4*xm2^3*up1^5", b, 1).unwrap();
        let g = ClosedFormGauge::try_new(&f).unwrap();
        let res = ring.hmm(&g.psi[0]) - g.amm[0].clone();
        assert!(res.max_norm() < 1e-10);
    }

    #[test]
    fn non_commuting_values_rejected() {
        let b = sl2();
        let f = make_prepotential("T1*xm1*xm2 + T2*xm1^2", b, 1).unwrap();
        assert!(matches!(
            ClosedFormGauge::try_new(&f),
            Err(FormalError::NonCommutingValues(_))
        ));
    }

    #[test]
    fn poly_field_matches_dsl_field() {
        let b = sl2();
        let f = make_prepotential("T2*xm1*xm2*um1*up2", b, 1).unwrap();
        let g = ClosedFormGauge::try_new(&f).unwrap();
        let amm = g.amm_field();
        let mut s = Sampler::new(31);
        for _ in 0..20 {
            let xs: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
            let u = s.su2();
            let a = field_value(&f, &xs, &u).unwrap();
            let bb = field_value(&amm, &xs, &u).unwrap();
            for (x, y) in a.iter().zip(bb.iter()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        // Jet path agrees with the plain DSL evaluation too.
        let xs: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
        let u = s.su2();
        let p = seeded_point(&xs, 1, &u, &[crate::harmonics::SeedDir::Fiber(crate::harmonics::FiberDir::Hpp)]);
        let ja = f.eval(&p).unwrap();
        let jb = amm.eval(&p).unwrap();
        for (x, y) in ja.iter().zip(jb.iter()) {
            assert!((x.grad(0) - y.grad(0)).norm() < 1e-12);
        }
    }
}
