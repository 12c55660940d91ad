//! Radial ODE `Q'' + (n-1) coth(r) Q' + lambda Q + |Q|^{p-1} Q = 0`, `Q'(0) = 0`,
//! integrated by fixed-step RK4 from a series start at the first node.

use crate::hypgeom::coth;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shot {
    /// Amplitude too small: the trajectory turns back up before reaching zero.
    TooSmall,
    /// Amplitude too large: the trajectory crosses zero (or stops being finite).
    TooLarge,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeSpec {
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    /// Node spacing; nodes are `(j + 1/2) dr`.
    pub dr: f64,
}

/// Steps are refined by `ceil(REFINE_RADIUS / r)` near the origin, where the
/// `coth` coefficient is stiff.
const REFINE_RADIUS: f64 = 1.0;

impl OdeSpec {
    fn rho(&self) -> f64 {
        0.5 * (self.n as f64 - 1.0)
    }

    #[inline]
    fn rhs(&self, r: f64, q: f64, dq: f64) -> (f64, f64) {
        let nl = q.abs().powf(self.p - 1.0) * q;
        (dq, -(self.n as f64 - 1.0) * coth(r) * dq - self.lambda * q - nl)
    }

    /// Regular expansion `a + b r^2 + c r^4` at the first node.
    pub fn series_start(&self, a: f64) -> (f64, f64, f64) {
        let rho = self.rho();
        let r = 0.5 * self.dr;
        let b = -(self.lambda * a + a.powf(self.p)) / (2.0 * self.n as f64);
        let c = -b * (4.0 * rho / 3.0 + self.lambda + self.p * a.powf(self.p - 1.0)) / (12.0 + 8.0 * rho);
        let r2 = r * r;
        (r, a + r2 * (b + r2 * c), r * (2.0 * b + 4.0 * c * r2))
    }

    fn rk4(&self, r: f64, q: f64, dq: f64, h: f64) -> (f64, f64) {
        let (k1q, k1p) = self.rhs(r, q, dq);
        let (k2q, k2p) = self.rhs(r + 0.5 * h, q + 0.5 * h * k1q, dq + 0.5 * h * k1p);
        let (k3q, k3p) = self.rhs(r + 0.5 * h, q + 0.5 * h * k2q, dq + 0.5 * h * k2p);
        let (k4q, k4p) = self.rhs(r + h, q + h * k3q, dq + h * k3p);
        (
            q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
            dq + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        )
    }

    /// Advance one node spacing from `r`.
    fn advance(&self, r: f64, q: f64, dq: f64) -> (f64, f64) {
        let sub = if r < REFINE_RADIUS { (REFINE_RADIUS / r).ceil() as usize } else { 1 };
        let h = self.dr / sub as f64;
        let (mut q, mut dq) = (q, dq);
        for i in 0..sub {
            (q, dq) = self.rk4(r + i as f64 * h, q, dq, h);
        }
        (q, dq)
    }

    /// Integrate from the origin until the trajectory is classified or `r_end` is
    /// reached. Node values are pushed into `trace` when provided.
    ///
    /// The turn test runs on `w = sinh^rho(r) Q`, whose slow mode grows like
    /// `e^{+sqrt(rho^2 - lambda) r}`; a plain `Q' > 0` test never fires when
    /// `lambda >= 0` because undersized trajectories still decay.
    pub fn shoot(&self, a: f64, r_end: f64, mut trace: Option<&mut Vec<f64>>) -> Shot {
        let rho = self.rho();
        let (mut r, mut q, mut dq) = self.series_start(a);
        let mut seen_descent = false;
        let steps = (r_end / self.dr).ceil() as usize;
        for j in 0..steps {
            if !(q.is_finite() && dq.is_finite()) || q <= 0.0 {
                return Shot::TooLarge;
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(q);
            }
            let slope = rho * coth(r) * q + dq;
            if slope < 0.0 {
                seen_descent = true;
            } else if seen_descent && slope > 0.0 {
                return Shot::TooSmall;
            }
            if j + 1 == steps {
                break;
            }
            (q, dq) = self.advance(r, q, dq);
            r = (j as f64 + 1.5) * self.dr;
        }
        if rho * coth(r) * q + dq > 0.0 {
            Shot::TooSmall
        } else {
            Shot::TooLarge
        }
    }
}
