//! Dormand-Prince 5(4) for two-component systems, stopping exactly at
//! requested output abscissae.

use crate::error::{CavError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(x, y)` from `x0` and returns `y` at each output point
/// (ascending, all `>= x0`). `atol(x)` gives per-component absolute floors
/// and `hmax(x)` the largest admissible step.
pub fn dopri5<F, T, H>(
    f: F,
    x0: f64,
    y0: State,
    outputs: &[f64],
    atol: T,
    hmax: H,
    ctl: StepControl,
) -> Result<(Vec<State>, OdeStats)>
where
    F: Fn(f64, &State) -> State,
    T: Fn(f64) -> State,
    H: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut stats = OdeStats::default();
    let (mut x, mut y) = (x0, y0);
    let mut k1 = f(x, &y);
    let mut h = 0.01 * hmax(x);
    for &target in outputs {
        if target < x {
            return Err(CavError::Integrator {
                nu: target,
                xi: f64::NAN,
                msg: "output points must be ascending and past the start".into(),
            });
        }
        while x < target {
            if stats.accepted + stats.rejected >= ctl.max_steps {
                return Err(CavError::Integrator {
                    nu: x,
                    xi: f64::NAN,
                    msg: "step budget exhausted".into(),
                });
            }
            h = h.min(hmax(x));
            let last = x + h >= target;
            let hh = if last { target - x } else { h };
            if !(hh > 1e-15 * x.abs().max(1e-300)) && !last {
                return Err(CavError::Integrator {
                    nu: x,
                    xi: f64::NAN,
                    msg: format!("step underflow (h = {hh:e})"),
                });
            }
            let mut k = [[0.0; 2]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        ys[0] += hh * a * kj[0];
                        ys[1] += hh * a * kj[1];
                    }
                }
                k[s] = f(x + C[s] * hh, &ys);
            }
            let mut ynew = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                ynew[0] += hh * A[6][j] * kj[0];
                ynew[1] += hh * A[6][j] * kj[1];
            }
            let tol = atol(x + hh);
            let mut err = 0.0;
            for i in 0..2 {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * hh;
                let sc = tol[i] + ctl.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (0.5 * err).sqrt();
            if !err.is_finite() {
                return Err(CavError::Integrator {
                    nu: x,
                    xi: f64::NAN,
                    msg: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                x = if last { target } else { x + hh };
                y = ynew;
                k1 = k[6];
                stats.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let proposed = hh * fac;
                h = if last { h.max(proposed) } else { proposed };
            } else {
                stats.rejected += 1;
                h = hh * (0.9 * err.powf(-0.2)).max(0.1);
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}
