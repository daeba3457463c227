//! Adaptive embedded Runge–Kutta 5(4) with continuous output.
//!
//! Dormand–Prince coefficients with the classical quartic interpolant; the
//! state is a flat complex vector so that jet-valued matrix states ride
//! through unchanged (the variational system is integrated alongside the
//! primal one by construction). Step size is driven by the weighted RMS of
//! the embedded error over all components.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial step size as a fraction of the interval.
    pub h_init: f64,
    pub safety: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: crate::tol::ODE_ABS,
            rel_tol: crate::tol::ODE_REL,
            h_init: 0.1,
            safety: 0.9,
            max_steps: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub enum OdeError {
    StepUnderflow { t: f64, h: f64 },
    MaxSteps(usize),
    Rhs(String),
}

impl core::fmt::Display for OdeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OdeError::StepUnderflow { t, h } => {
                write!(f, "step size underflow at t = {t:.6e} (h = {h:.3e})")
            }
            OdeError::MaxSteps(n) => write!(f, "exceeded {n} steps"),
            OdeError::Rhs(s) => write!(f, "right-hand side failed: {s}"),
        }
    }
}

/// One accepted step with its interpolation polynomial.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    /// rcont1..rcont5, each of state length.
    pub rcont: [Vec<C64>; 5],
}

impl DenseStep {
    /// Interpolated state at t ∈ [t0, t0 + h].
    pub fn eval(&self, t: f64) -> Vec<C64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let n = self.rcont[0].len();
        let mut out = vec![C64::default(); n];
        for i in 0..n {
            out[i] = self.rcont[0][i]
                + (self.rcont[1][i]
                    + (self.rcont[2][i]
                        + (self.rcont[3][i] + self.rcont[4][i] * C64::new(th1, 0.0))
                            * C64::new(th, 0.0))
                        * C64::new(th1, 0.0))
                    * C64::new(th, 0.0);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub t0: f64,
    pub t1: f64,
    pub y_end: Vec<C64>,
    pub steps: Vec<DenseStep>,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl OdeSolution {
    /// Dense-output state at any t in the solved interval.
    pub fn eval(&self, t: f64) -> Vec<C64> {
        let dir = if self.t1 >= self.t0 { 1.0 } else { -1.0 };
        for s in self.steps.iter() {
            if dir * (t - s.t0) <= dir * s.h * (1.0 + 1e-12) {
                return s.eval(t);
            }
        }
        self.steps.last().map(|s| s.eval(t)).unwrap_or_else(|| self.y_end.clone())
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Integrate y' = f(t, y) from t0 to t1 with dense output.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: Vec<C64>,
    opts: &OdeOptions,
) -> Result<OdeSolution, OdeError>
where
    F: FnMut(f64, &[C64]) -> Result<Vec<C64>, String>,
{
    let n = y0.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(OdeSolution {
            t0,
            t1,
            y_end: y0,
            steps: Vec::new(),
            n_accepted: 0,
            n_rejected: 0,
        });
    }
    let dir = if span > 0.0 { 1.0 } else { -1.0 };
    let mut h = span * opts.h_init.min(1.0);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y).map_err(OdeError::Rhs)?;
    let mut steps = Vec::new();
    let mut n_accepted = 0;
    let mut n_rejected = 0;

    let axpy = |out: &mut [C64], c: f64, v: &[C64]| {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x * C64::new(c, 0.0);
        }
    };

    for _ in 0..opts.max_steps {
        if dir * (t - t1) >= 0.0 {
            return Ok(OdeSolution { t0, t1, y_end: y, steps, n_accepted, n_rejected });
        }
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        if Float::abs(h) < 1e-14 * Float::max(1.0, Float::abs(t)) {
            return Err(OdeError::StepUnderflow { t, h });
        }

        let stage = |coeffs: &[(f64, &Vec<C64>)], y: &[C64], h: f64| -> Vec<C64> {
            let mut out = y.to_vec();
            for &(c, k) in coeffs {
                axpy(&mut out, h * c, k);
            }
            out
        };

        let y2 = stage(&[(A21, &k1)], &y, h);
        let k2 = f(t + C2 * h, &y2).map_err(OdeError::Rhs)?;
        let y3 = stage(&[(A31, &k1), (A32, &k2)], &y, h);
        let k3 = f(t + C3 * h, &y3).map_err(OdeError::Rhs)?;
        let y4 = stage(&[(A41, &k1), (A42, &k2), (A43, &k3)], &y, h);
        let k4 = f(t + C4 * h, &y4).map_err(OdeError::Rhs)?;
        let y5 = stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &y, h);
        let k5 = f(t + C5 * h, &y5).map_err(OdeError::Rhs)?;
        let y6 = stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &y, h);
        let k6 = f(t + h, &y6).map_err(OdeError::Rhs)?;
        let y_new = stage(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &y, h);
        let k7 = f(t + h, &y_new).map_err(OdeError::Rhs)?;

        // Embedded error estimate.
        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k1[i] * C64::new(E1, 0.0)
                + k3[i] * C64::new(E3, 0.0)
                + k4[i] * C64::new(E4, 0.0)
                + k5[i] * C64::new(E5, 0.0)
                + k6[i] * C64::new(E6, 0.0)
                + k7[i] * C64::new(E7, 0.0))
                * C64::new(h, 0.0);
            let sc = opts.abs_tol + opts.rel_tol * Float::max(y[i].norm(), y_new[i].norm());
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = Float::sqrt(err_sq / n as f64);

        if err <= 1.0 {
            // Accept; build the interpolant.
            let rcont1 = y.clone();
            let ydiff: Vec<C64> = y_new.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
            let bspl: Vec<C64> = k1
                .iter()
                .zip(ydiff.iter())
                .map(|(k, d)| k * C64::new(h, 0.0) - d)
                .collect();
            let rcont4: Vec<C64> = ydiff
                .iter()
                .zip(k7.iter())
                .zip(bspl.iter())
                .map(|((d, k), b)| d - k * C64::new(h, 0.0) - b)
                .collect();
            let mut rcont5 = vec![C64::default(); n];
            for i in 0..n {
                rcont5[i] = (k1[i] * C64::new(D1, 0.0)
                    + k3[i] * C64::new(D3, 0.0)
                    + k4[i] * C64::new(D4, 0.0)
                    + k5[i] * C64::new(D5, 0.0)
                    + k6[i] * C64::new(D6, 0.0)
                    + k7[i] * C64::new(D7, 0.0))
                    * C64::new(h, 0.0);
            }
            steps.push(DenseStep {
                t0: t,
                h,
                rcont: [rcont1, ydiff, bspl, rcont4, rcont5],
            });
            t += h;
            y = y_new;
            k1 = k7; // FSAL
            n_accepted += 1;
            let fac = if err == 0.0 {
                5.0
            } else {
                Float::min(5.0, Float::max(0.2, opts.safety * Float::powf(err, -0.2)))
            };
            h *= fac;
        } else {
            n_rejected += 1;
            let fac = Float::min(1.0, Float::max(0.1, opts.safety * Float::powf(err, -0.2)));
            h *= fac;
        }
    }
    Err(OdeError::MaxSteps(opts.max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_dense_output() {
        // y' = λ y with complex λ; closed form e^{λt}.
        let lam = C64::new(-0.7, 2.3);
        let sol = integrate(
            |_, y| Ok(vec![lam * y[0]]),
            0.0,
            2.0,
            vec![C64::new(1.0, 0.0)],
            &OdeOptions::default(),
        )
        .unwrap();
        let want = (lam * 2.0).exp();
        assert!((sol.y_end[0] - want).norm() < 1e-9);
        for &t in [0.13, 0.5, 1.11, 1.97].iter() {
            let y = sol.eval(t);
            let w = (lam * t).exp();
            assert!((y[0] - w).norm() < 1e-8, "dense at {t}: {} vs {w}", y[0]);
        }
    }

    #[test]
    fn nonautonomous_polynomial_is_exact_to_tolerance() {
        // y' = 3t² → y = t³.
        let sol = integrate(
            |t, _| Ok(vec![C64::new(3.0 * t * t, 0.0)]),
            0.0,
            1.5,
            vec![C64::default()],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((sol.y_end[0] - C64::new(1.5f64.powi(3), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn tolerance_controls_error() {
        let lam = C64::new(0.0, 10.0);
        let loose = OdeOptions { abs_tol: 1e-5, rel_tol: 1e-4, ..Default::default() };
        let tight = OdeOptions { abs_tol: 1e-12, rel_tol: 1e-11, ..Default::default() };
        let run = |o: &OdeOptions| {
            integrate(|_, y| Ok(vec![lam * y[0]]), 0.0, 1.0, vec![C64::new(1.0, 0.0)], o)
                .unwrap()
                .y_end[0]
        };
        let want = lam.exp();
        let e_loose = (run(&loose) - want).norm();
        let e_tight = (run(&tight) - want).norm();
        assert!(e_tight < e_loose);
        assert!(e_tight < 1e-9);
    }

    #[test]
    fn rhs_error_propagates() {
        let r = integrate(
            |_, _| Err("boom".into()),
            0.0,
            1.0,
            vec![C64::default()],
            &OdeOptions::default(),
        );
        assert!(matches!(r, Err(OdeError::Rhs(_))));
    }
}
