//! Dormand–Prince 5(4) stepper with PI step control, continuous extension
//! and bisection-based event localization.
//!
//! Only the surface the solvers in this crate need: fixed-size states,
//! one accepted step at a time, and dense evaluation inside that step.

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

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side of an autonomous-or-not first-order system.
pub(crate) trait System<const D: usize> {
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D];
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest admissible step in the independent variable.
    pub max_step: f64,
    /// Smallest admissible step relative to `max(|t|, 1)`.
    pub min_step_rel: f64,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseStep<const D: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; D],
    pub y1: [f64; D],
    rc: [[f64; D]; 3],
}

impl<const D: usize> DenseStep<D> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut out = [0.0; D];
        for i in 0..D {
            let r2 = self.y1[i] - self.y0[i];
            out[i] = self.y0[i]
                + th * (r2 + th1 * (self.rc[0][i] + th * (self.rc[1][i] + th1 * self.rc[2][i])));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum StepError {
    /// The controller asked for a step below the minimum.
    Underflow { t: f64 },
    /// The right-hand side produced a non-finite value.
    NonFinite { t: f64 },
}

pub(crate) struct Stepper<'a, S, const D: usize> {
    sys: &'a S,
    opts: StepperOptions,
    pub t: f64,
    pub y: [f64; D],
    dy: [f64; D],
    h: f64,
    facold: f64,
    rejected_last: bool,
    /// Right-hand side evaluations so far.
    pub nfev: usize,
}

impl<'a, S: System<D>, const D: usize> Stepper<'a, S, D> {
    pub fn new(sys: &'a S, t0: f64, y0: [f64; D], direction_hint: f64, opts: StepperOptions) -> Self {
        let dy = sys.rhs(t0, &y0);
        let mut st = Stepper {
            sys,
            opts,
            t: t0,
            y: y0,
            dy,
            h: 0.0,
            facold: 1e-4,
            rejected_last: false,
            nfev: 1,
        };
        st.h = st.initial_step(direction_hint);
        st
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn rms(&self, v: &[f64; D], y: &[f64; D]) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let q = v[i] / self.scale(y[i], y[i]);
            s += q * q;
        }
        (s / D as f64).sqrt()
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        let span = span.abs().max(f64::MIN_POSITIVE);
        let d0 = self.rms(&self.y, &self.y);
        let d1 = self.rms(&self.dy, &self.y);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span).min(self.opts.max_step);
        let mut y1 = [0.0; D];
        for i in 0..D {
            y1[i] = self.y[i] + h0 * self.dy[i];
        }
        let f1 = self.sys.rhs(self.t + h0, &y1);
        self.nfev += 1;
        let mut ddy = [0.0; D];
        for i in 0..D {
            ddy[i] = (f1[i] - self.dy[i]) / h0;
        }
        let d2 = self.rms(&ddy, &self.y);
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / m).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.opts.max_step)
    }

    /// Advance by one accepted step, never stepping past `t_bound`.
    pub fn step(&mut self, t_bound: f64) -> Result<DenseStep<D>, StepError> {
        const SAFE: f64 = 0.9;
        const BETA: f64 = 0.04;
        const EXPO1: f64 = 0.2 - BETA * 0.75;
        let sys = self.sys;
        loop {
            let remaining = t_bound - self.t;
            let mut h = self.h.min(self.opts.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hmin = self.opts.min_step_rel * self.t.abs().max(1.0);
            if h < hmin && !last {
                return Err(StepError::Underflow { t: self.t });
            }
            let (t, y, k1) = (self.t, self.y, self.dy);
            let mut yt = [0.0; D];
            for i in 0..D {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            let k2 = sys.rhs(t + C2 * h, &yt);
            for i in 0..D {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = sys.rhs(t + C3 * h, &yt);
            for i in 0..D {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = sys.rhs(t + C4 * h, &yt);
            for i in 0..D {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = sys.rhs(t + C5 * h, &yt);
            for i in 0..D {
                yt[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let k6 = sys.rhs(t + h, &yt);
            let mut y1 = [0.0; D];
            for i in 0..D {
                y1[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            let k7 = sys.rhs(t + h, &y1);
            self.nfev += 6;

            let finite = y1.iter().chain(k7.iter()).all(|v| v.is_finite());
            let err = if finite {
                let mut s = 0.0;
                for i in 0..D {
                    let e = h
                        * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i]);
                    let q = e / self.scale(y[i], y1[i]);
                    s += q * q;
                }
                (s / D as f64).sqrt()
            } else {
                f64::INFINITY
            };

            if err <= 1.0 {
                let fac11 = err.powf(EXPO1);
                let mut fac = fac11 / self.facold.powf(BETA);
                fac = (fac / SAFE).clamp(0.1, 5.0);
                let mut hnew = h / fac;
                if self.rejected_last {
                    hnew = hnew.min(h);
                }
                self.facold = err.max(1e-4);
                self.rejected_last = false;

                let mut rc = [[0.0; D]; 3];
                for i in 0..D {
                    let r2 = y1[i] - y[i];
                    let r3 = h * k1[i] - r2;
                    rc[0][i] = r3;
                    rc[1][i] = r2 - h * k7[i] - r3;
                    rc[2][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = DenseStep { t0: t, h, y0: y, y1, rc };
                self.t = if last { t_bound } else { t + h };
                self.y = y1;
                self.dy = k7;
                if !last || hnew < self.h {
                    self.h = hnew;
                }
                return Ok(step);
            }

            if !err.is_finite() && h <= hmin {
                return Err(StepError::NonFinite { t });
            }
            let shrink = if err.is_finite() {
                (err.powf(EXPO1) / SAFE).min(5.0)
            } else {
                10.0
            };
            self.h = h / shrink;
            self.rejected_last = true;
            if self.h < hmin {
                return Err(if err.is_finite() {
                    StepError::Underflow { t }
                } else {
                    StepError::NonFinite { t }
                });
            }
        }
    }
}

/// Locate the first sign change of `g` along a dense step.
///
/// `g0` is the event value at the step start. Interior probes catch
/// double crossings that end values alone would miss. Returns the event
/// abscissa, localized by bisection to `rel_tol * max(|t|, 1)`.
pub(crate) fn locate_event<const D: usize, G>(
    step: &DenseStep<D>,
    g0: f64,
    g: G,
    rel_tol: f64,
) -> Option<f64>
where
    G: Fn(f64, &[f64; D]) -> f64,
{
    const PROBES: usize = 4;
    let mut a = step.t0;
    let mut ga = g0;
    for k in 1..=PROBES {
        let b = if k == PROBES {
            step.t1()
        } else {
            step.t0 + step.h * k as f64 / PROBES as f64
        };
        let yb = if k == PROBES { step.y1 } else { step.eval(b) };
        let gb = g(b, &yb);
        if crosses(ga, gb) {
            return Some(bisect(step, &g, a, b, ga, rel_tol));
        }
        a = b;
        ga = gb;
    }
    None
}

fn crosses(ga: f64, gb: f64) -> bool {
    (ga > 0.0 && gb <= 0.0) || (ga < 0.0 && gb >= 0.0)
}

fn bisect<const D: usize, G>(step: &DenseStep<D>, g: &G, mut a: f64, mut b: f64, mut ga: f64, rel_tol: f64) -> f64
where
    G: Fn(f64, &[f64; D]) -> f64,
{
    let tol = rel_tol * a.abs().max(b.abs()).max(1.0);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m, &step.eval(m));
        if crosses(ga, gm) {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp;
    impl System<1> for Exp {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
            [y[0]]
        }
    }

    struct Osc;
    impl System<2> for Osc {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    fn opts(tol: f64) -> StepperOptions {
        StepperOptions { rtol: tol, atol: tol * 1e-2, max_step: f64::INFINITY, min_step_rel: 1e-15 }
    }

    #[test]
    fn exponential_to_tolerance() {
        let mut st = Stepper::new(&Exp, 0.0, [1.0], 5.0, opts(1e-12));
        while st.t < 5.0 {
            st.step(5.0).unwrap();
        }
        assert_eq!(st.t, 5.0);
        assert!((st.y[0] / 5f64.exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_fourth_order() {
        // error of the continuous extension at the step midpoint, for two step sizes
        let sys = Osc;
        let mid_err = |h: f64| {
            let o = StepperOptions { rtol: 1.0, atol: 1.0, max_step: h, min_step_rel: 1e-15 };
            let mut st = Stepper::new(&sys, 0.0, [0.0, 1.0], h, o);
            let s = st.step(h).unwrap();
            assert_eq!(s.h, h);
            let m = 0.5 * h;
            (s.eval(m)[0] - m.sin()).abs()
        };
        let e1 = mid_err(0.2);
        let e2 = mid_err(0.1);
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed local order {order}");
    }

    #[test]
    fn dense_output_hits_endpoints() {
        let mut st = Stepper::new(&Osc, 0.0, [0.0, 1.0], 1.0, opts(1e-8));
        let s = st.step(1.0).unwrap();
        assert_eq!(s.eval(s.t0), s.y0);
        let e = s.eval(s.t1());
        assert!((e[0] - s.y1[0]).abs() < 1e-15 && (e[1] - s.y1[1]).abs() < 1e-15);
    }

    #[test]
    fn event_localized_to_relative_tolerance() {
        // first zero of sin(t) is pi
        let mut st = Stepper::new(&Osc, 0.0, [0.0, 1.0], 10.0, opts(1e-12));
        let mut g0 = 1.0;
        loop {
            let s = st.step(10.0).unwrap();
            if let Some(te) = locate_event(&s, g0, |_, y| y[0], 1e-12) {
                assert!((te - std::f64::consts::PI).abs() < 1e-10, "{te}");
                break;
            }
            g0 = s.y1[0];
            assert!(st.t < 10.0);
        }
    }
}
