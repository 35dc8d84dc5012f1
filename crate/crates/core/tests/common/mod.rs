//! Independent oracle: classical RK4 with a fixed step in u = log r on the
//! second-order profile equation, written in the unknowns (f, F) with
//! F = |f'|^{p-2} f'. Shares no code with the library's right-hand sides.
#![allow(dead_code)]

pub struct Oracle {
    pub n: f64,
    pub p: f64,
    pub mu: f64,
    pub w_star: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    A,
    C,
    Open,
}

impl Oracle {
    pub fn new(n: u32, p: f64, beta: f64) -> Oracle {
        let nf = n as f64;
        let mu = p / (2.0 - p);
        let w_star = (mu - nf).powf(2.0 / (2.0 - p)) / mu;
        Oracle {
            n: nf,
            p,
            mu,
            w_star,
            beta,
        }
    }

    fn fprime(&self, big_f: f64) -> f64 {
        big_f.signum() * big_f.abs().powf(1.0 / (self.p - 1.0))
    }

    /// d/du of (f, F) where F' + (N-1)F/r + β(μf + r f') − |f'|^{p/2} = 0.
    fn rhs(&self, u: f64, y: [f64; 2]) -> [f64; 2] {
        let r = u.exp();
        let fp = self.fprime(y[1]);
        let dfdr = fp;
        let dbigf = -(self.n - 1.0) * y[1] / r - self.beta * (self.mu * y[0] + r * fp) + fp.abs().powf(self.p / 2.0);
        [r * dfdr, r * dbigf]
    }

    fn rk4(&self, u: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
        let k1 = self.rhs(u, y);
        let k2 = self.rhs(u + h / 2.0, add(y, k1, h / 2.0));
        let k3 = self.rhs(u + h / 2.0, add(y, k2, h / 2.0));
        let k4 = self.rhs(u + h, add(y, k3, h));
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    /// Leading-order start: f = 1 − c r^{p/(p−1)}, F = −(βμ/N) r.
    fn start(&self, r0: f64) -> [f64; 2] {
        let bm = self.beta * self.mu / self.n;
        let q = self.p / (self.p - 1.0);
        let f = 1.0 - (self.p - 1.0) / self.p * bm.powf(1.0 / (self.p - 1.0)) * r0.powf(q);
        [f, -bm * r0]
    }

    /// Integrate from `r0` to `r1`, returning (r, f, f') at every step.
    pub fn path(&self, r0: f64, r1: f64, h: f64) -> Vec<(f64, f64, f64)> {
        let (mut u, u1) = (r0.ln(), r1.ln());
        let mut y = self.start(r0);
        let mut out = vec![(r0, y[0], self.fprime(y[1]))];
        while u < u1 - 1e-12 {
            let hh = h.min(u1 - u);
            y = self.rk4(u, y, hh);
            u += hh;
            out.push((u.exp(), y[0], self.fprime(y[1])));
        }
        out
    }

    /// A/C decision with the same margin δ_C = 1e-6, scanning step ends.
    pub fn classify(&self, r0: f64, log_r_max: f64, h: f64) -> OracleVerdict {
        let mut u = r0.ln();
        let mut y = self.start(r0);
        while u < log_r_max {
            y = self.rk4(u, y, h);
            u += h;
            let r = u.exp();
            let w = r.powf(self.mu) * y[0];
            let wp_sign = self.mu * y[0] + r * self.fprime(y[1]);
            if y[0] <= 0.0 || (wp_sign <= 0.0 && w < self.w_star) {
                return OracleVerdict::A;
            }
            if w >= self.w_star * (1.0 + 1e-6) {
                return OracleVerdict::C;
            }
        }
        OracleVerdict::Open
    }
}

/// Bisection on oracle verdicts between a C-point and an A-point.
pub fn oracle_beta_star(n: u32, p: f64, mut lo: f64, mut hi: f64, tol: f64, h: f64) -> f64 {
    let v = |b: f64| Oracle::new(n, p, b).classify(1e-5, 30.0, h);
    assert_eq!(v(lo), OracleVerdict::C, "oracle bracket low end");
    assert_eq!(v(hi), OracleVerdict::A, "oracle bracket high end");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match v(mid) {
            OracleVerdict::C => lo = mid,
            OracleVerdict::A => hi = mid,
            OracleVerdict::Open => break,
        }
    }
    0.5 * (lo + hi)
}
