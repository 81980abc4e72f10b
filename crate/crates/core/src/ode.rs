//! Dormand–Prince 5(4) with step-size control and an absolute step cap.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<F> {
    pub rtol: F,
    pub atol: F,
    /// Hard upper bound on the step size (stiffness guard).
    pub h_max: F,
    pub max_steps: usize,
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

/// Integrates y' = f(y) from t=0 and returns the state at each of `times`
/// (non-decreasing, non-negative).
pub fn integrate_autonomous<F: Real>(
    mut f: impl FnMut(&[F], &mut [F]),
    y0: &[F],
    times: &[F],
    opts: &OdeOptions<F>,
) -> Result<Vec<Vec<F>>> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = F::zero();
    let mut h = opts.h_max;
    let mut out = Vec::with_capacity(times.len());
    let mut k: Vec<Vec<F>> = vec![vec![F::zero(); n]; 7];
    let mut tmp = vec![F::zero(); n];
    let mut ynew = vec![F::zero(); n];
    let mut steps = 0usize;
    f(&y, &mut k[0]);
    let lit = F::lit;

    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::InvalidInput(format!(
                    "ODE step limit {} reached at t={}",
                    opts.max_steps,
                    t.as_f64()
                )));
            }
            let mut step = h.min(opts.h_max);
            let last = target - t <= step;
            if last {
                step = target - t;
            }
            let stage = |k: &[Vec<F>], coeffs: &[f64], tmp: &mut [F], y: &[F]| {
                for i in 0..n {
                    let mut s = F::zero();
                    for (j, &c) in coeffs.iter().enumerate() {
                        if c != 0.0 {
                            s = s + lit(c) * k[j][i];
                        }
                    }
                    tmp[i] = y[i] + step * s;
                }
            };
            stage(&k, &[A21], &mut tmp, &y);
            f(&tmp, &mut k[1]);
            stage(&k, &[A31, A32], &mut tmp, &y);
            f(&tmp, &mut k[2]);
            stage(&k, &[A41, A42, A43], &mut tmp, &y);
            f(&tmp, &mut k[3]);
            stage(&k, &[A51, A52, A53, A54], &mut tmp, &y);
            f(&tmp, &mut k[4]);
            stage(&k, &[A61, A62, A63, A64, A65], &mut tmp, &y);
            f(&tmp, &mut k[5]);
            stage(&k, &[B1, 0.0, B3, B4, B5, B6], &mut ynew, &y);
            f(&ynew, &mut k[6]);

            let mut err = F::zero();
            for i in 0..n {
                let e = step
                    * (lit(E1) * k[0][i]
                        + lit(E3) * k[2][i]
                        + lit(E4) * k[3][i]
                        + lit(E5) * k[4][i]
                        + lit(E6) * k[5][i]
                        + lit(E7) * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                let r = e / sc;
                err = err + r * r;
            }
            err = (err / F::from_usize_lossy(n.max(1))).sqrt();
            steps += 1;

            if err <= F::one() {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                let fac = if err == F::zero() {
                    lit(5.0)
                } else {
                    (lit(0.9) * err.powf(lit(-0.2))).min(lit(5.0))
                };
                if !last {
                    h = (step * fac).min(opts.h_max);
                }
            } else {
                let fac = (lit(0.9) * err.powf(lit(-0.2))).max(lit(0.2));
                h = step * fac;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            h_max: 0.1,
            max_steps: 1_000_000,
        };
        let out = integrate_autonomous(
            |y: &[f64], d: &mut [f64]| d[0] = -2.0 * y[0],
            &[1.0],
            &[0.0, 0.5, 3.0],
            &opts,
        )
        .unwrap();
        assert_eq!(out[0][0], 1.0);
        assert!((out[1][0] - (-1.0f64).exp()).abs() < 1e-11);
        assert!((out[2][0] - (-6.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator() {
        let opts = OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            h_max: 0.05,
            max_steps: 1_000_000,
        };
        let out = integrate_autonomous(
            |y: &[f64], d: &mut [f64]| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            &[1.0, 0.0],
            &[10.0],
            &opts,
        )
        .unwrap();
        assert!((out[0][0] - 10.0f64.cos()).abs() < 1e-9);
    }
}
