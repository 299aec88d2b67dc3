//! Adaptive Dormand–Prince 5(4) integrator for planar systems.
//!
//! Every system in this crate is two-dimensional and autonomous after the
//! logarithmic change of variables, so the state is a fixed `[f64; 2]`.
//! The integrator lands exactly on each requested output abscissa, which
//! keeps tabulated solutions free of interpolation error.

use crate::error::{GelfandError, Result};

pub type State = [f64; 2];

/// How the local error estimate is scaled before comparison with 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorControl {
    /// `sc_i = atol + rtol * max(|y_i|, |y_i_new|)`
    Componentwise { rtol: f64, atol: f64 },
    /// `sc = atol + rtol * max(|y|_inf, |y_new|_inf)` shared by both components.
    ///
    /// Suited to decaying spirals, where the individual components cross zero
    /// but the state norm does not.
    StateNorm { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub control: ErrorControl,
    pub h_max: f64,
    pub max_steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

impl Dopri5 {
    pub fn new(control: ErrorControl) -> Self {
        Self {
            control,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    fn error_norm(&self, y: &State, y_new: &State, err: &State) -> f64 {
        match self.control {
            ErrorControl::Componentwise { rtol, atol } => {
                let mut acc: f64 = 0.0;
                for i in 0..2 {
                    let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
                    acc = acc.max((err[i] / sc).abs());
                }
                acc
            }
            ErrorControl::StateNorm { rtol, atol } => {
                let m = y[0].abs().max(y[1].abs()).max(y_new[0].abs()).max(y_new[1].abs());
                let sc = atol + rtol * m;
                (err[0].abs().max(err[1].abs())) / sc
            }
        }
    }

    /// Integrate from `(t0, y0)` through every abscissa in `outputs`
    /// (monotone, all on the same side of `t0`), returning the state at each.
    ///
    /// `guard` is checked after every accepted step; returning `false` aborts
    /// with [`GelfandError::BlowUp`].
    pub fn integrate<F, G>(&self, f: F, t0: f64, y0: State, outputs: &[f64], guard: G) -> Result<Vec<State>>
    where
        F: Fn(f64, &State) -> State,
        G: Fn(&State) -> bool,
    {
        let mut out = Vec::with_capacity(outputs.len());
        if outputs.is_empty() {
            return Ok(out);
        }
        let dir = if outputs[outputs.len() - 1] >= t0 {
            1.0
        } else {
            -1.0
        };
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&f, t, &y, &k1, dir);
        let mut steps = 0usize;

        for &target in outputs {
            if (target - t) * dir < 0.0 {
                return Err(GelfandError::InvalidParameter(
                    "output abscissae must be monotone".into(),
                ));
            }
            while (target - t) * dir > 0.0 {
                steps += 1;
                if steps > self.max_steps {
                    return Err(GelfandError::Integration {
                        s: t,
                        reason: "step budget exhausted".into(),
                    });
                }
                let remaining = (target - t).abs();
                let mut step = h.abs().min(self.h_max);
                let landing = step >= remaining * (1.0 - 1e-12);
                if landing {
                    step = remaining;
                }
                let hs = dir * step;

                let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
                let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
                let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
                let k5 = f(
                    t + C5 * hs,
                    &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
                );
                let k6 = f(
                    t + hs,
                    &axpy(
                        &y,
                        hs,
                        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    ),
                );
                let y_new = axpy(
                    &y,
                    hs,
                    &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
                );
                let k7 = f(t + hs, &y_new);
                let mut err = [0.0; 2];
                for i in 0..2 {
                    err[i] =
                        hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                }
                let en = self.error_norm(&y, &y_new, &err);
                if !en.is_finite() || !y_new[0].is_finite() || !y_new[1].is_finite() {
                    h = step * 0.25;
                    if h < 1e-14 * (1.0 + t.abs()) {
                        return Err(GelfandError::BlowUp { last_s: t });
                    }
                    continue;
                }
                if en <= 1.0 {
                    t = if landing { target } else { t + hs };
                    y = y_new;
                    k1 = k7;
                    if !guard(&y) {
                        return Err(GelfandError::BlowUp { last_s: t });
                    }
                    let fac = if en == 0.0 {
                        5.0
                    } else {
                        (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // a clipped landing step says nothing about the natural step size
                    if !landing || fac < 1.0 {
                        h = step * fac;
                    }
                } else {
                    h = step * (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
                    if h < 1e-14 * (1.0 + t.abs()) {
                        return Err(GelfandError::Integration {
                            s: t,
                            reason: "step size underflow".into(),
                        });
                    }
                }
            }
            out.push(y);
        }
        Ok(out)
    }

    fn initial_step<F>(&self, f: &F, t: f64, y: &State, k1: &State, dir: f64) -> f64
    where
        F: Fn(f64, &State) -> State,
    {
        let (rtol, atol) = match self.control {
            ErrorControl::Componentwise { rtol, atol } => (rtol, atol),
            ErrorControl::StateNorm { rtol, atol } => (rtol, atol),
        };
        let sc = |v: f64| atol + rtol * v.abs();
        let d0 = (y[0] / sc(y[0])).abs().max((y[1] / sc(y[1])).abs());
        let d1 = (k1[0] / sc(y[0])).abs().max((k1[1] / sc(y[1])).abs());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy(y, dir * h0, &[(1.0, k1)]);
        let k2 = f(t + dir * h0, &y1);
        let d2 = ((k2[0] - k1[0]) / sc(y[0]))
            .abs()
            .max(((k2[1] - k1[1]) / sc(y[1])).abs())
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max).max(1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        let solver = Dopri5::new(ErrorControl::Componentwise {
            rtol: 1e-12,
            atol: 1e-14,
        });
        let tau = 2.0 * std::f64::consts::PI;
        let out = solver
            .integrate(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], &[tau / 4.0, tau], |_| true)
            .unwrap();
        assert!((out[0][0]).abs() < 1e-10);
        assert!((out[0][1] + 1.0).abs() < 1e-10);
        assert!((out[1][0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_of_decay() {
        // y' = -y integrated backwards grows like e^{-t}
        let solver = Dopri5::new(ErrorControl::Componentwise {
            rtol: 1e-12,
            atol: 0.0,
        });
        let out = solver
            .integrate(|_, y| [-y[0], -2.0 * y[1]], 0.0, [1.0, 1.0], &[-3.0], |_| true)
            .unwrap();
        assert!((out[0][0] / 3f64.exp() - 1.0).abs() < 1e-10);
        assert!((out[0][1] / 6f64.exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn guard_reports_blow_up() {
        let solver = Dopri5::new(ErrorControl::Componentwise {
            rtol: 1e-8,
            atol: 1e-12,
        });
        // y' = y^2 blows up at t = 1
        let res = solver.integrate(|_, y| [y[0] * y[0], 0.0], 0.0, [1.0, 0.0], &[2.0], |y| y[0] < 1e8);
        match res {
            Err(GelfandError::BlowUp { last_s }) => assert!(last_s < 1.0 && last_s > 0.9),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
