//! Dormand-Prince 5(4) with embedded error control, for small fixed-size systems.

use crate::error::SolveError;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Advance `y` from `x0` to `x1` with adaptive steps. `h` carries the last
/// accepted step size between calls.
pub(crate) fn integrate<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    y: [f64; N],
    h: &mut f64,
    tol: Tolerances,
) -> Result<[f64; N], SolveError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut x = x0;
    let mut y = y;
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y);
    }
    let dir = span.signum();
    if !(*h > 0.0) || *h > span.abs() {
        *h = span.abs();
    }
    let mut steps = 0usize;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(SolveError::Integration { s: x, reason: "too many steps".into() });
        }
        let remaining = (x1 - x).abs();
        let last = *h >= remaining;
        let step = if last { remaining } else { *h } * dir;
        let mut k = [[0.0; N]; 7];
        for i in 0..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                let a = A[i][j];
                if a != 0.0 {
                    for n in 0..N {
                        yi[n] += step * a * kj[n];
                    }
                }
            }
            k[i] = f(x + C[i] * step, &yi);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for n in 0..N {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for i in 0..7 {
                s5 += B5[i] * k[i][n];
                s4 += B4[i] * k[i][n];
            }
            y5[n] = y[n] + step * s5;
            let scale = tol.atol + tol.rtol * y[n].abs().max(y5[n].abs());
            err = err.max((step * (s5 - s4)).abs() / scale);
        }
        if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            *h = step.abs() * 0.2;
        } else if err <= 1.0 {
            x = if last { x1 } else { x + step };
            y = y5;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
            if !last || grow < 1.0 {
                *h = step.abs() * grow;
            }
            continue;
        } else {
            *h = step.abs() * (0.9 * err.powf(-0.2)).max(0.2);
        }
        if *h < 1e-14 * (1.0 + x.abs()) {
            return Err(SolveError::Integration { s: x, reason: "step size underflow".into() });
        }
    }
    Ok(y)
}
