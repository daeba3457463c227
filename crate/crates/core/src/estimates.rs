//! Norms, the radial gauge, bound-ratio checks and the curvature-convergence
//! harness.
//!
//! All bound statements are reported as ratio observations: the claim under
//! test is existence and stability of a constant, never its value. Ratios
//! where both sides vanish are reported as not applicable via the 0/0
//! sentinel.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::flatspace::{real_direction, PointX, TwoForm};
use crate::harmonics::{
    fiber_ck_norm, gauss_legendre, seeded_point, ChargedField, FieldError, HaarGrid, SeedDir,
};
use crate::jet::{Jet, Scalar};
use crate::lie::BasisRef;
use crate::mat::{CMat, Mat};
use crate::ode::{integrate, OdeOptions};
use crate::reconstruct::{extract_central, GaugeData};
use crate::report::Ratio;
use crate::tol::RATIO_SENTINEL;

/// Rectangular real grid over the centered box [−w, w]^{4n}.
pub fn box_grid(n_quat: usize, half_width: f64, nx: usize) -> Vec<Vec<f64>> {
    let count = (nx.max(1)).pow(4 * n_quat as u32);
    let mut out = Vec::with_capacity(count);
    let coords: Vec<f64> = if nx == 1 {
        vec![0.0]
    } else {
        (0..nx).map(|k| -half_width + 2.0 * half_width * k as f64 / (nx - 1) as f64).collect()
    };
    let dims = 4 * n_quat;
    let mut idx = vec![0usize; dims];
    loop {
        out.push(idx.iter().map(|&k| coords[k]).collect());
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < coords.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dims {
                return out;
            }
        }
    }
}

/// Sup of the pointwise Hermitian norm of a charged field over a box grid ×
/// Haar grid: the C⁰ norm of the restriction to the compact set.
pub fn c0_norm(
    f: &dyn ChargedField,
    half_width: f64,
    nx: usize,
    grid: &HaarGrid,
) -> Result<f64, FieldError> {
    let basis = f.basis().clone();
    let mut sup = 0.0f64;
    for y in box_grid(f.n_quat(), half_width, nx) {
        let xs = PointX::from_real(&y).x;
        for u in grid.nodes.iter() {
            let p = seeded_point(&xs, f.n_quat(), u, &[]);
            let v = f.eval(&p)?;
            let coeffs: Vec<C64> = v.iter().map(|j| j.v).collect();
            sup = Float::max(sup, basis.hermitian_norm_coeffs(&coeffs));
        }
    }
    Ok(sup)
}

/// Cᵏ norm over the same compact set: accumulated h-norms of derivatives up
/// to order k along the 4n real coordinate directions and the three compact
/// fiber directions. k ≤ 2.
pub fn ck_norm(
    f: &dyn ChargedField,
    k: usize,
    half_width: f64,
    nx: usize,
    grid: &HaarGrid,
) -> Result<f64, FieldError> {
    if k > 2 {
        return Err(FieldError::UnsupportedOrder(k));
    }
    if k == 0 {
        return c0_norm(f, half_width, nx, grid);
    }
    let basis = f.basis().clone();
    let n = f.n_quat();
    let mut dirs: Vec<SeedDir> =
        (0..4 * n).map(|mu| SeedDir::Point(real_direction(n, mu))).collect();
    dirs.push(SeedDir::Fiber(crate::harmonics::FiberDir::G0));
    dirs.push(SeedDir::Fiber(crate::harmonics::FiberDir::G1));
    dirs.push(SeedDir::Fiber(crate::harmonics::FiberDir::G2));
    let m = dirs.len();
    let mut sup = 0.0f64;
    for y in box_grid(n, half_width, nx) {
        let xs = PointX::from_real(&y).x;
        for u in grid.nodes.iter() {
            let p = seeded_point(&xs, n, u, &dirs);
            let jets = f.eval(&p)?;
            let value: Vec<C64> = jets.iter().map(|j| j.v).collect();
            let mut total = basis.hermitian_norm_coeffs(&value);
            let mut s1 = 0.0;
            for d in 0..m {
                let g: Vec<C64> = jets.iter().map(|j| j.grad(d)).collect();
                s1 += basis.hermitian_norm_coeffs(&g).powi(2);
            }
            total += Float::sqrt(s1);
            if k >= 2 {
                let mut s2 = 0.0;
                for d1 in 0..m {
                    for d2 in 0..m {
                        let h: Vec<C64> = jets.iter().map(|j| j.hess(d1, d2)).collect();
                        s2 += basis.hermitian_norm_coeffs(&h).powi(2);
                    }
                }
                total += Float::sqrt(s2);
            }
            sup = Float::max(sup, total);
        }
    }
    Ok(sup)
}

/// Lᵖ norm of a pointwise scalar density over the box, by tensor-product
/// Gauss–Legendre quadrature of order 8 per axis.
pub fn lp_norm_box(
    density: &mut dyn FnMut(&[f64]) -> Result<f64, FieldError>,
    n_quat: usize,
    half_width: f64,
    p: f64,
) -> Result<f64, FieldError> {
    let (nodes, weights) = gauss_legendre(8);
    let dims = 4 * n_quat;
    let mut idx = vec![0usize; dims];
    let mut acc = 0.0f64;
    loop {
        let mut y = Vec::with_capacity(dims);
        let mut w = 1.0;
        for d in 0..dims {
            y.push(nodes[idx[d]] * half_width);
            w *= weights[idx[d]] * half_width;
        }
        let v = density(&y)?;
        acc += w * Float::powf(v, p);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < nodes.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dims {
                return Ok(Float::powf(acc, 1.0 / p));
            }
        }
    }
}

/// Harmonic-independent central data as an evaluable map, with first-order
/// seeds for transport sensitivities. Built over a gauge reconstruction and a
/// Haar grid; the grid's least-squares projector is precomputed, so jet
/// right-hand sides pass through linearly.
pub struct CentralMap {
    pub basis: BasisRef,
    pub n_quat: usize,
    gd: Arc<GaugeData>,
    grid: HaarGrid,
    /// Pseudo-inverse rows of the (2·K × 2) potential design matrix.
    pinv: Vec<C64>,
    /// For the closed-form realization: the grid projector pushed through the
    /// gauge polynomials once, leaving the central potential Ã_{ia} and the
    /// curvature entries F̃_{ia,jb} as explicit polynomials in x.
    fast: Option<FastCentral>,
}

struct FastCentral {
    /// Row-major over (i, a): algebra coefficient polynomials in x.
    pot: Vec<Vec<crate::formal::Poly>>,
    /// Row-major over pair indices (i·2n+a, j·2n+b) like [`TwoForm`].
    cur: Vec<Vec<crate::formal::Poly>>,
}

impl CentralMap {
    pub fn new(gd: Arc<GaugeData>, grid: HaarGrid) -> Result<Self, FieldError> {
        let k = grid.nodes.len();
        let rows = 2 * k;
        let mut design = Vec::with_capacity(rows * 2);
        for u in grid.nodes.iter() {
            design.push(u.u_minus[0]);
            design.push(u.u_minus[1]);
        }
        for u in grid.nodes.iter() {
            design.push(u.u_plus[0]);
            design.push(u.u_plus[1]);
        }
        // P = (A†A)⁻¹ A†, a 2 × rows complex matrix.
        let mut ata = [C64::default(); 4];
        for r in 0..rows {
            for i in 0..2 {
                for j in 0..2 {
                    ata[i * 2 + j] += design[r * 2 + i].conj() * design[r * 2 + j];
                }
            }
        }
        let ata_mat = Mat { n: 2, a: ata.to_vec() };
        let inv = ata_mat.inverse().map_err(|e| FieldError::Eval(alloc::format!("{e}")))?;
        let mut pinv = vec![C64::default(); 2 * rows];
        for i in 0..2 {
            for r in 0..rows {
                let mut s = C64::default();
                for j in 0..2 {
                    s += inv.at(i, j) * design[r * 2 + j].conj();
                }
                pinv[i * rows + r] = s;
            }
        }
        let fast = match gd.closed_form.as_ref() {
            Some(cf) => Some(Self::build_fast(&gd, cf, &grid, &pinv)?),
            None => None,
        };
        Ok(CentralMap { basis: gd.basis.clone(), n_quat: gd.n_quat, gd, grid, pinv, fast })
    }

    fn build_fast(
        gd: &GaugeData,
        cf: &crate::formal::ClosedFormGauge,
        grid: &HaarGrid,
        pinv: &[C64],
    ) -> Result<FastCentral, FieldError> {
        use crate::formal::Poly;
        let n = gd.n_quat;
        let dim = gd.basis.dim;
        let k_nodes = grid.nodes.len();
        let rows = 2 * k_nodes;
        let from_var = (4 * n) as u16;
        let node_vals: Vec<[C64; 4]> = grid
            .nodes
            .iter()
            .map(|u| {
                let um = u.matrix();
                [*um.at(0, 0), *um.at(1, 0), *um.at(0, 1), *um.at(1, 1)]
            })
            .collect();

        // Potential: Ã_{ia} = Σ_r P[i][r]·Φ-row-poly_r per (a, component).
        let mut pot = vec![vec![Poly::default(); dim]; 4 * n];
        for a in 0..2 * n {
            for d in 0..dim {
                for i in 0..2 {
                    let mut acc = Poly::default();
                    for (knode, uv) in node_vals.iter().enumerate() {
                        let w_minus = pinv[i * rows + knode];
                        if w_minus.norm() != 0.0 {
                            acc = acc
                                + cf.central_minus[a][d]
                                    .substitute_from(from_var, uv)
                                    .scaled(w_minus);
                        }
                        let w_plus = pinv[i * rows + k_nodes + knode];
                        if w_plus.norm() != 0.0 {
                            acc = acc
                                + cf.central_plus[a][d]
                                    .substitute_from(from_var, uv)
                                    .scaled(w_plus);
                        }
                    }
                    pot[i * 2 * n + a][d] = acc;
                }
            }
        }

        // Curvature projector for the bilinear model.
        let mut cdesign = Vec::with_capacity(k_nodes * 4);
        for uv in node_vals.iter() {
            for i in 0..2 {
                for j in 0..2 {
                    cdesign.push(uv[i] * uv[2 + j]);
                }
            }
        }
        let mut ata = [C64::default(); 16];
        for r in 0..k_nodes {
            for i in 0..4 {
                for j in 0..4 {
                    ata[i * 4 + j] += cdesign[r * 4 + i].conj() * cdesign[r * 4 + j];
                }
            }
        }
        let inv = Mat { n: 4, a: ata.to_vec() }
            .inverse()
            .map_err(|e| FieldError::Eval(alloc::format!("{e}")))?;
        let mut cpinv = vec![C64::default(); 4 * k_nodes];
        for i in 0..4 {
            for r in 0..k_nodes {
                let mut s = C64::default();
                for j in 0..4 {
                    s += inv.at(i, j) * cdesign[r * 4 + j].conj();
                }
                cpinv[i * k_nodes + r] = s;
            }
        }
        let pairs = 4 * n;
        let mut fitted = vec![vec![Poly::default(); dim]; pairs * pairs];
        for a in 0..2 * n {
            for b in 0..2 * n {
                let subs: Vec<Vec<Poly>> = (0..dim)
                    .map(|d| {
                        node_vals
                            .iter()
                            .map(|uv| cf.fpm[a * 2 * n + b][d].substitute_from(from_var, uv))
                            .collect()
                    })
                    .collect();
                for i in 0..2 {
                    for j in 0..2 {
                        for d in 0..dim {
                            let mut acc = Poly::default();
                            for (knode, s) in subs[d].iter().enumerate() {
                                let w = cpinv[(i * 2 + j) * k_nodes + knode];
                                if w.norm() != 0.0 {
                                    acc = acc + s.scaled(w);
                                }
                            }
                            fitted[(i * 2 * n + a) * pairs + (j * 2 * n + b)][d] = acc;
                        }
                    }
                }
            }
        }
        // Antisymmetrize pair exchange.
        let mut cur = vec![vec![Poly::default(); dim]; pairs * pairs];
        for p in 0..pairs {
            for q in 0..pairs {
                for d in 0..dim {
                    let fwd = fitted[p * pairs + q][d].clone();
                    let bwd = fitted[q * pairs + p][d].clone();
                    cur[p * pairs + q][d] = (fwd - bwd).scaled(C64::new(0.5, 0.0));
                }
            }
        }
        Ok(FastCentral { pot, cur })
    }

    /// Ã_{ia}(x) with first-order jets along the supplied x-displacement
    /// directions. Output is row-major over (i, a); Hessians are not
    /// propagated.
    pub fn potential_seeded(
        &self,
        xs: &[C64],
        dirs: &[Vec<C64>],
    ) -> Result<Vec<Vec<Jet>>, FieldError> {
        let n = self.n_quat;
        let dim = self.basis.dim;
        let m_ext = dirs.len();
        let k_nodes = self.grid.nodes.len();
        let rows = 2 * k_nodes;

        // Φ rows as jets over the external dirs: minus rows then plus rows,
        // per frame index a.
        let mut phi = vec![vec![Jet::zero(); rows]; 2 * n * dim];
        if let Some(fast) = self.fast.as_ref() {
            // Closed-form path: evaluate the projected polynomials directly.
            let x_jets: Vec<Jet> = xs
                .iter()
                .enumerate()
                .map(|(e, &v)| {
                    let mut j = Jet::constant(v).pad_to(m_ext);
                    for (s, dvec) in dirs.iter().enumerate() {
                        j.g[s] = dvec[e];
                    }
                    j
                })
                .collect();
            return Ok(fast
                .pot
                .iter()
                .map(|row| row.iter().map(|p| p.eval(&x_jets)).collect())
                .collect());
        }
        for (knode, u) in self.grid.nodes.iter().enumerate() {
            let mut all_dirs: Vec<SeedDir> =
                dirs.iter().map(|d| SeedDir::Point(d.clone())).collect();
            for a in 0..2 * n {
                all_dirs.push(SeedDir::Point(crate::flatspace::frame_seed(n, false, a, u)));
            }
            for a in 0..2 * n {
                all_dirs.push(SeedDir::Point(crate::flatspace::frame_seed(n, true, a, u)));
            }
            let gj = self.gd.bridge.eval_jets(xs, u, &all_dirs)?;
            // First-order sub-jets over the external dirs.
            let sub = |j: &Jet, slot: usize| -> Jet {
                Jet {
                    v: j.grad(slot),
                    g: (0..m_ext).map(|e| j.hess(e, slot)).collect(),
                    h: vec![C64::default(); m_ext * m_ext],
                }
            };
            let g_ext = Mat {
                n: gj.n,
                a: gj
                    .a
                    .iter()
                    .map(|j| Jet {
                        v: j.v,
                        g: (0..m_ext).map(|e| j.grad(e)).collect(),
                        h: vec![C64::default(); m_ext * m_ext],
                    })
                    .collect(),
            };
            let g_inv = g_ext
                .inverse()
                .map_err(|e| FieldError::Eval(alloc::format!("bridge inverse: {e}")))?;
            for a in 0..2 * n {
                // Ã(e₋ₐ) = g⁻¹ (e₋ₐ g)
                let dg = Mat { n: gj.n, a: gj.a.iter().map(|j| sub(j, m_ext + a)).collect() };
                let phi_m = g_inv.matmul(&dg);
                let (coeffs, _) = self.basis.project_matrix(&phi_m);
                for d in 0..dim {
                    phi[a * dim + d][knode] = coeffs[d].clone();
                }
                // Ã(e₊ₐ) = g⁻¹ A₊ₐ g + g⁻¹ (e₊ₐ g)
                let p = crate::harmonics::EvalPoint {
                    n_quat: n,
                    x: xs
                        .iter()
                        .enumerate()
                        .map(|(e, &v)| {
                            let mut j = Jet::constant(v).pad_to(m_ext);
                            for (s, dvec) in dirs.iter().enumerate() {
                                j.g[s] = dvec[e];
                            }
                            j
                        })
                        .collect(),
                    u: core::array::from_fn(|kk| {
                        let um = u.matrix();
                        let (i, col) = (kk % 2, kk / 2);
                        Jet::constant(*um.at(i, col)).pad_to(m_ext)
                    }),
                };
                let apa = self.gd.apa[a].eval(&p)?;
                let apa_mat = self.basis.rep_matrix(&apa);
                let dgp =
                    Mat { n: gj.n, a: gj.a.iter().map(|j| sub(j, m_ext + 2 * n + a)).collect() };
                let phi_p = g_inv.matmul(&apa_mat).matmul(&g_ext).add(&g_inv.matmul(&dgp));
                let (coeffs_p, _) = self.basis.project_matrix(&phi_p);
                for d in 0..dim {
                    phi[a * dim + d][k_nodes + knode] = coeffs_p[d].clone();
                }
            }
        }

        Ok(self.apply_projector(&phi))
    }

    /// Apply the precomputed projector: Ã_{ia} = Σ_r P[i][r]·Φ_a[r].
    fn apply_projector(&self, phi: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
        let n = self.n_quat;
        let dim = self.basis.dim;
        let rows = 2 * self.grid.nodes.len();
        let mut out = vec![vec![Jet::zero(); dim]; 4 * n];
        for a in 0..2 * n {
            for d in 0..dim {
                for i in 0..2 {
                    let mut acc = Jet::zero();
                    for r in 0..rows {
                        let c = self.pinv[i * rows + r];
                        if c.norm() != 0.0 {
                            acc = acc + phi[a * dim + d][r].clone().scale(c);
                        }
                    }
                    out[i * 2 * n + a][d] = acc;
                }
            }
        }
        out
    }

    pub fn potential(&self, xs: &[C64]) -> Result<Vec<Vec<C64>>, FieldError> {
        if let Some(fast) = self.fast.as_ref() {
            return Ok(fast
                .pot
                .iter()
                .map(|row| row.iter().map(|p| p.eval(xs)).collect())
                .collect());
        }
        Ok(self
            .potential_seeded(xs, &[])?
            .into_iter()
            .map(|row| row.into_iter().map(|j| j.v).collect())
            .collect())
    }

    /// Central curvature two-form at x (grid-projected).
    pub fn curvature(&self, xs: &[C64]) -> Result<TwoForm, FieldError> {
        if let Some(fast) = self.fast.as_ref() {
            let n = self.n_quat;
            let pairs = 4 * n;
            let mut f = TwoForm::zeros(n, &self.basis);
            for p in 0..pairs {
                for q in (p + 1)..pairs {
                    let v: Vec<C64> =
                        fast.cur[p * pairs + q].iter().map(|poly| poly.eval(xs)).collect();
                    let (i, a) = (p / (2 * n), p % (2 * n));
                    let (j, b) = (q / (2 * n), q % (2 * n));
                    f.set_entry(i, a, j, b, v);
                }
            }
            return Ok(f);
        }
        Ok(extract_central(&self.gd, xs, &self.grid)?.f)
    }
}

/// Radial-gauge construction: parallel transport along straight rays from a
/// base point, with endpoint sensitivities for the transformed potential.
/// Rays run in the complex adapted coordinates, so the gauge extends off the
/// real slice (holomorphic leaves sample it there).
pub struct RadialGauge {
    pub map: Arc<CentralMap>,
    /// Base point in complex adapted coordinates.
    pub base: Vec<C64>,
    pub ode: OdeOptions,
}

impl RadialGauge {
    /// Transport h(x) with endpoint derivatives ∂h/∂x^{ia} as jets over the
    /// 4n coordinate directions.
    pub fn transport(&self, x: &[C64]) -> Result<Mat<Jet>, FieldError> {
        let n = self.map.n_quat;
        let dims = 4 * n;
        let rep_dim = self.map.basis.rep_dim;
        let w: Vec<C64> = x.iter().zip(self.base.iter()).map(|(a, b)| a - b).collect();
        let base = self.base.clone();
        let map = self.map.clone();
        let rhs = move |s: f64, state: &[C64]| -> Result<Vec<C64>, String> {
            let h = crate::reconstruct::unflatten_mat_jet(state, rep_dim, dims);
            let xp: Vec<C64> =
                base.iter().zip(w.iter()).map(|(b, d)| b + d * C64::new(s, 0.0)).collect();
            // Seeds: ∂(path)/∂x^{ia} = s·e_{ia}.
            let dirs: Vec<Vec<C64>> = (0..dims)
                .map(|e| {
                    let mut v = vec![C64::default(); dims];
                    v[e] = C64::new(s, 0.0);
                    v
                })
                .collect();
            let pot = map.potential_seeded(&xp, &dirs).map_err(|e| alloc::format!("{e}"))?;
            // A_r(s, x) = Σ_{ia} w^{ia}·Ã_{ia}(path), with w carrying unit seeds.
            let mut a_r = Mat::<Jet>::zeros(rep_dim);
            for e in 0..dims {
                let mut wj = Jet::constant(w[e]).pad_to(dims);
                wj.g[e] = C64::new(1.0, 0.0);
                let amat = map.basis.rep_matrix(&pot[e]);
                for (o, entry) in a_r.a.iter_mut().zip(amat.a.iter()) {
                    *o = o.clone() + entry.clone() * wj.clone();
                }
            }
            let d = a_r.matmul(&h).neg();
            Ok(crate::reconstruct::flatten_mat_jet(&d, dims))
        };
        let h0 = Mat::<Jet>::identity(rep_dim);
        let sol = integrate(
            rhs,
            0.0,
            1.0,
            crate::reconstruct::flatten_mat_jet(&h0, dims),
            &self.ode,
        )
        .map_err(|e| FieldError::Ode(alloc::format!("{e}")))?;
        Ok(crate::reconstruct::unflatten_mat_jet(&sol.y_end, rep_dim, dims))
    }

    /// Radial-gauge potential on the adapted basis: A^exp_{ia}(x) row-major
    /// over (i, a).
    pub fn potential_adapted(&self, x: &[C64]) -> Result<Vec<Vec<C64>>, FieldError> {
        let n = self.map.n_quat;
        let dims = 4 * n;
        let h = self.transport(x)?;
        let h_val = h.map_primal();
        let h_inv = h_val
            .inverse()
            .map_err(|e| FieldError::Eval(alloc::format!("transport inverse: {e}")))?;
        let pot = self.map.potential(x)?;
        let mut out = Vec::with_capacity(dims);
        for e in 0..dims {
            let amat = self.map.basis.rep_matrix(&pot[e]);
            let dh = Mat { n: h.n, a: h.a.iter().map(|j| j.grad(e)).collect() };
            let total = h_inv.matmul(&amat).matmul(&h_val).add(&h_inv.matmul(&dh));
            let (coeffs, _) = self.map.basis.project_matrix(&total);
            out.push(coeffs);
        }
        Ok(out)
    }

    /// Radial-gauge potential components A^exp_μ(y) on real directions.
    pub fn potential_at(&self, y: &[f64]) -> Result<Vec<Vec<C64>>, FieldError> {
        let n = self.map.n_quat;
        let dims = 4 * n;
        let xs = PointX::from_real(y).x;
        let adapted = self.potential_adapted(&xs)?;
        let mut out = Vec::with_capacity(dims);
        for mu in 0..dims {
            let jmu = real_direction(n, mu);
            let mut comp = vec![C64::default(); self.map.basis.dim];
            for (e, c) in jmu.iter().enumerate() {
                if c.norm() != 0.0 {
                    for d in 0..self.map.basis.dim {
                        comp[d] += adapted[e][d] * c;
                    }
                }
            }
            out.push(comp);
        }
        Ok(out)
    }

    /// Residuals of the defining conditions: vanishing at the base point and
    /// vanishing radial component along sampled rays.
    pub fn condition_residuals(&self, probes: &[Vec<f64>]) -> Result<(f64, f64), FieldError> {
        let n = self.map.n_quat;
        let base_pot = self.potential_adapted(&self.base)?;
        let mut at_base = 0.0f64;
        for c in base_pot.iter() {
            at_base = Float::max(at_base, self.map.basis.hermitian_norm_coeffs(c));
        }
        let mut radial = 0.0f64;
        for y in probes {
            let xs = PointX::from_real(y).x;
            let pot = self.potential_adapted(&xs)?;
            let mut comp = vec![C64::default(); self.map.basis.dim];
            for e in 0..4 * n {
                let we = xs[e] - self.base[e];
                for d in 0..self.map.basis.dim {
                    comp[d] += pot[e][d] * we;
                }
            }
            radial = Float::max(radial, self.map.basis.hermitian_norm_coeffs(&comp));
        }
        Ok((at_base, radial))
    }
}

/// Sup over a y-grid of the pointwise tensor norm of the radial potential.
pub fn radial_potential_c0(
    rg: &RadialGauge,
    half_width: f64,
    nx: usize,
) -> Result<f64, FieldError> {
    let n = rg.map.n_quat;
    let mut sup = 0.0f64;
    for y in box_grid(n, half_width, nx) {
        let pot = rg.potential_at(&y)?;
        let mut s = 0.0;
        for c in pot.iter() {
            s += rg.map.basis.hermitian_norm_coeffs(c).powi(2);
        }
        sup = Float::max(sup, Float::sqrt(s));
    }
    Ok(sup)
}

/// Sup over a y-grid of ‖Ad_{h⁻¹}F̃‖ — the curvature in the radial gauge.
pub fn radial_curvature_c0(
    rg: &RadialGauge,
    half_width: f64,
    nx: usize,
) -> Result<f64, FieldError> {
    let n = rg.map.n_quat;
    let mut sup = 0.0f64;
    for y in box_grid(n, half_width, nx) {
        let xs = PointX::from_real(&y).x;
        let f = rg.map.curvature(&xs)?;
        let h = rg.transport(&xs)?.map_primal();
        let f_exp = conjugate_two_form(&f, &h)?;
        sup = Float::max(sup, f_exp.real_norm());
    }
    Ok(sup)
}

/// Ad_{g⁻¹} applied entrywise to a two-form.
pub fn conjugate_two_form(f: &TwoForm, g: &CMat) -> Result<TwoForm, FieldError> {
    let gi = g.inverse().map_err(|e| FieldError::Eval(alloc::format!("{e}")))?;
    let mut out = f.clone();
    for entry in out.f.iter_mut() {
        let m = f.basis.rep_matrix(entry);
        let t = gi.matmul(&m).matmul(g);
        let (coeffs, _) = f.basis.project_matrix(&t);
        *entry = coeffs;
    }
    Ok(out)
}

/// Ratio observation of the radial-gauge bound ‖A‖_{C⁰} ≤ c·‖F‖_{C⁰}.
pub fn exp_gauge_bound_check(
    rg: &RadialGauge,
    half_width: f64,
    nx: usize,
) -> Result<Ratio, FieldError> {
    let a = radial_potential_c0(rg, half_width, nx)?;
    let f = radial_curvature_c0(rg, half_width, nx)?;
    Ok(Ratio::of(a, f, RATIO_SENTINEL))
}

/// Ratio observation of the prepotential bound
/// ‖A₋₋‖_{C⁰(K)} ≤ c·‖F‖^{exp}_{C⁰(V̄)}.
pub fn prepotential_bound_check(
    amm: &dyn ChargedField,
    rg: &RadialGauge,
    half_width: f64,
    nx: usize,
    grid: &HaarGrid,
) -> Result<Ratio, FieldError> {
    let a = c0_norm(amm, half_width, nx, grid)?;
    let f = radial_curvature_c0(rg, half_width, nx)?;
    Ok(Ratio::of(a, f, RATIO_SENTINEL))
}

/// Two-sided fiber-norm ratios of the prepotential pair at sampled x:
/// sup of ‖A₋₋‖_{Cᵏ}/‖A₊₊‖_{Cᵏ} over samples, and of the reciprocal.
pub struct EllipticRatios {
    pub forward: Ratio,
    pub reverse: Ratio,
}

pub fn elliptic_ratio_check(
    amm: &dyn ChargedField,
    app: &dyn ChargedField,
    x_samples: &[Vec<C64>],
    k: usize,
    grid: &HaarGrid,
) -> Result<EllipticRatios, FieldError> {
    let mut fwd: Option<Ratio> = None;
    let mut rev: Option<Ratio> = None;
    let mut fwd_max = f64::NEG_INFINITY;
    let mut rev_max = f64::NEG_INFINITY;
    for xs in x_samples {
        let na = fiber_ck_norm(amm, xs, k, grid)?;
        let nb = fiber_ck_norm(app, xs, k, grid)?;
        let f = Ratio::of(na, nb, RATIO_SENTINEL);
        let r = Ratio::of(nb, na, RATIO_SENTINEL);
        if let Ratio::Violation { .. } = f {
            return Ok(EllipticRatios { forward: f, reverse: r });
        }
        if let Ratio::Violation { .. } = r {
            return Ok(EllipticRatios { forward: f, reverse: r });
        }
        if let Some(v) = f.value() {
            if v > fwd_max {
                fwd_max = v;
                fwd = Some(f);
            }
        }
        if let Some(v) = r.value() {
            if v > rev_max {
                rev_max = v;
                rev = Some(r);
            }
        }
    }
    Ok(EllipticRatios {
        forward: fwd.unwrap_or(Ratio::NotApplicable),
        reverse: rev.unwrap_or(Ratio::NotApplicable),
    })
}

/// Result of a curvature-convergence run over a prepotential family.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompactnessReport {
    /// ‖A₋₋⁽ᵏ⁾‖_{C⁰(K)} per member.
    pub prepotential_norms: Vec<f64>,
    /// Uniform bound: the max of the above.
    pub uniform_bound: f64,
    /// ‖F⁽ᵏ⁾ − F^{(∞)}‖_{C⁰(K)} per non-limit member.
    pub deviations: Vec<f64>,
    /// Slope of log(deviation) against log(member index + 1).
    pub fitted_rate: Option<f64>,
    pub monotone: bool,
    /// ‖F^{(∞)}‖_{C⁰(K)} for scale.
    pub limit_norm: f64,
}

/// Reconstruct each family member, compare central curvatures against the
/// designated limit member on a fixed x-sample set, and fit the decay rate.
pub fn compactness_run(
    members: &[Arc<GaugeData>],
    limit: &GaugeData,
    x_samples: &[Vec<f64>],
    half_width: f64,
    nx: usize,
    grid: &HaarGrid,
) -> Result<CompactnessReport, FieldError> {
    let mut prepotential_norms = Vec::with_capacity(members.len());
    for m in members.iter() {
        prepotential_norms.push(c0_norm(m.amm.as_ref(), half_width, nx, grid)?);
    }
    let uniform_bound = prepotential_norms.iter().copied().fold(0.0, f64::max);

    let limit_f: Vec<TwoForm> = x_samples
        .iter()
        .map(|y| extract_central(limit, &PointX::from_real(y).x, grid).map(|c| c.f))
        .collect::<Result<_, _>>()?;
    let mut limit_norm = 0.0f64;
    for f in limit_f.iter() {
        limit_norm = Float::max(limit_norm, f.real_norm());
    }

    let mut deviations = Vec::with_capacity(members.len());
    for m in members.iter() {
        let mut dev = 0.0f64;
        for (y, f_inf) in x_samples.iter().zip(limit_f.iter()) {
            let f = extract_central(m, &PointX::from_real(y).x, grid)?.f;
            dev = Float::max(dev, f.sub(f_inf).real_norm());
        }
        deviations.push(dev);
    }

    // log-log fit of deviation against member index (1-based).
    let usable: Vec<(f64, f64)> = deviations
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 1e-14)
        .map(|(k, &d)| (Float::ln((k + 1) as f64), Float::ln(d)))
        .collect();
    let fitted_rate = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let sx: f64 = usable.iter().map(|(a, _)| a).sum();
        let sy: f64 = usable.iter().map(|(_, b)| b).sum();
        let sxx: f64 = usable.iter().map(|(a, _)| a * a).sum();
        let sxy: f64 = usable.iter().map(|(a, b)| a * b).sum();
        let denom = n * sxx - sx * sx;
        if Float::abs(denom) > 1e-12 {
            Some((n * sxy - sx * sy) / denom)
        } else {
            None
        }
    } else {
        None
    };
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    Ok(CompactnessReport {
        prepotential_norms,
        uniform_bound,
        deviations,
        fitted_rate,
        monotone,
        limit_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_prepotential;
    use crate::lie::u1;
    use crate::reconstruct::GaugeData;
    use crate::sample::Sampler;

    #[test]
    fn lp_norms_monotone_in_region_and_homogeneous() {
        let mut f = |y: &[f64]| -> Result<f64, FieldError> {
            Ok((y[0] * y[0] + 0.3 * y[1].abs() + 0.1).sqrt())
        };
        let small = lp_norm_box(&mut f, 1, 0.5, 2.0).unwrap();
        let large = lp_norm_box(&mut f, 1, 1.0, 2.0).unwrap();
        assert!(small <= large);
        let mut g = |y: &[f64]| -> Result<f64, FieldError> {
            Ok(3.0 * (y[0] * y[0] + 0.3 * y[1].abs() + 0.1).sqrt())
        };
        let scaled = lp_norm_box(&mut g, 1, 0.5, 2.0).unwrap();
        assert!((scaled - 3.0 * small).abs() < 1e-10 * scaled);
    }

    #[test]
    fn c0_norm_homogeneity_and_triangle() {
        let b = u1();
        let f = make_prepotential("(0.5 + 0.1*i)*T1*xm1*xm2", b.clone(), 1).unwrap();
        let g = make_prepotential("0.25*T1*(um1^2)", b, 1).unwrap();
        let grid = HaarGrid::euler([8, 8, 8]);
        let nf = c0_norm(&f, 1.0, 3, &grid).unwrap();
        let f2 = make_prepotential("(1.0 + 0.2*i)*T1*xm1*xm2", f.basis.clone(), 1).unwrap();
        let nf2 = c0_norm(&f2, 1.0, 3, &grid).unwrap();
        assert!((nf2 - 2.0 * nf).abs() < 1e-10 * nf2);
        // Triangle on the sum expression.
        let sum =
            make_prepotential("(0.5 + 0.1*i)*T1*xm1*xm2 + 0.25*T1*(um1^2)", f.basis.clone(), 1)
                .unwrap();
        let ns = c0_norm(&sum, 1.0, 3, &grid).unwrap();
        let ng = c0_norm(&g, 1.0, 3, &grid).unwrap();
        assert!(ns <= nf + ng + 1e-12);
    }

    #[test]
    fn central_map_matches_extraction() {
        let f = make_prepotential("(0.4 + 0.3*i)*T1*xm1*xm2", u1(), 1).unwrap();
        let gd = Arc::new(GaugeData::reconstruct_poly(&f).unwrap());
        let grid = HaarGrid::euler([8, 8, 8]);
        let map = CentralMap::new(gd.clone(), grid.clone()).unwrap();
        let xs = PointX::from_real(&[0.2, -0.4, 0.6, 0.1]).x;
        let pot = map.potential(&xs).unwrap();
        let direct = extract_central(&gd, &xs, &grid).unwrap();
        for (a, b) in pot.iter().zip(direct.potential.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).norm() < 1e-10);
            }
        }
        // Seeded evaluation gives exact directional derivatives of Ã.
        let mut s = Sampler::new(4);
        let dir: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
        let jets = map.potential_seeded(&xs, &[dir.clone()]).unwrap();
        let h = 1e-5;
        let shift: Vec<C64> =
            xs.iter().zip(dir.iter()).map(|(x, d)| x + d * C64::new(h, 0.0)).collect();
        let shift_m: Vec<C64> =
            xs.iter().zip(dir.iter()).map(|(x, d)| x - d * C64::new(h, 0.0)).collect();
        let pp = map.potential(&shift).unwrap();
        let pm = map.potential(&shift_m).unwrap();
        for e in 0..4 {
            let fd = (pp[e][0] - pm[e][0]) / C64::new(2.0 * h, 0.0);
            assert!((jets[e][0].grad(0) - fd).norm() < 1e-7, "{fd} vs {}", jets[e][0].grad(0));
        }
    }

    #[test]
    fn radial_gauge_conditions_hold_for_abelian_instanton() {
        let f = make_prepotential("(0.4 + 0.3*i)*T1*xm1*xm2", u1(), 1).unwrap();
        let gd = Arc::new(GaugeData::reconstruct_poly(&f).unwrap());
        let grid = HaarGrid::euler([8, 8, 8]);
        let map = Arc::new(CentralMap::new(gd, grid).unwrap());
        let rg = RadialGauge { map, base: vec![C64::default(); 4], ode: OdeOptions::default() };
        let probes: Vec<Vec<f64>> = vec![
            vec![0.5, 0.0, -0.3, 0.2],
            vec![-0.4, 0.6, 0.1, -0.2],
            vec![0.2, 0.2, 0.2, 0.2],
        ];
        let (at_base, radial) = rg.condition_residuals(&probes).unwrap();
        assert!(at_base < 1e-8, "base {at_base}");
        assert!(radial < 1e-8, "radial {radial}");
    }
}
