//! Potential kernel of the planar simple random walk and the Green function
//! of the quarter plane absorbed on the axes, via the reflection (image)
//! method. Gives the exit law of the cone walk from any interior site in
//! closed form, with no time truncation.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Table of the potential kernel a(x) for 0 <= |x1|, |x2| <= max_coord,
/// computed from the one-dimensional integral representation
/// a(x1,x2) = (2/pi) Int_0^pi (1 - e^{-|x1| mu(t)} cos(x2 t)) / sinh(mu(t)) dt
/// with cosh(mu) = 2 - cos(t).
pub struct PotentialTable {
    max: usize,
    vals: Vec<f64>,
}

impl PotentialTable {
    pub fn build(max_coord: usize) -> Self {
        let max = max_coord;
        let dim = max + 1;
        let mut vals = vec![0.0; dim * dim];
        // Node count grows with the oscillation frequency (cos(x2 t) has up
        // to max_coord half-periods on [0, pi]).
        let n = (4 * max_coord).max(512).next_power_of_two().min(8192);
        let (nodes, weights) = gauss_legendre(n);
        // Map to t in (0, pi).
        let theta: Vec<f64> = nodes.iter().map(|&z| 0.5 * PI * (z + 1.0)).collect();
        let wscaled: Vec<f64> = weights.iter().map(|&w| 0.5 * PI * w * (2.0 / PI)).collect();
        let inv_sinh: Vec<f64> = theta
            .iter()
            .map(|&t| {
                let a = 2.0 - t.cos();
                1.0 / (a * a - 1.0).sqrt()
            })
            .collect();
        let emu: Vec<f64> = theta
            .iter()
            .map(|&t| {
                let a = 2.0 - t.cos();
                // e^{-mu} with cosh(mu) = a.
                1.0 / (a + (a * a - 1.0).sqrt())
            })
            .collect();
        let cos_t: Vec<f64> = theta.iter().map(|&t| t.cos()).collect();

        // vals[n1][n2] with n1 the exponential coordinate. Chebyshev
        // recurrence for cos(n2 t); running powers for e^{-n1 mu}. Fill
        // n1 >= n2 and mirror (a is symmetric under coordinate swap).
        let mut c_prev: Vec<f64> = vec![1.0; n]; // cos(0 t)
        let mut c_cur: Vec<f64> = cos_t.clone(); // cos(1 t)
        let mut base: Vec<f64> = vec![1.0; n]; // e^{-n2 mu} at the diagonal start
        for n2 in 0..=max {
            let c_n2: &Vec<f64> = if n2 == 0 { &c_prev } else { &c_cur };
            // Running power p = e^{-n1 mu}, starting at n1 = n2.
            let mut p = base.clone();
            for n1 in n2..=max {
                let mut acc = 0.0;
                for q in 0..n {
                    acc += wscaled[q] * (1.0 - p[q] * c_n2[q]) * inv_sinh[q];
                }
                vals[n1 * dim + n2] = acc;
                vals[n2 * dim + n1] = acc;
                if n1 < max {
                    for q in 0..n {
                        p[q] *= emu[q];
                    }
                }
            }
            // Advance cos(n2 t) -> cos((n2+1) t) and the diagonal power.
            if n2 == 0 {
                // c_cur already holds cos(1 t); nothing to do.
            } else {
                let mut c_next = vec![0.0; n];
                for q in 0..n {
                    c_next[q] = 2.0 * cos_t[q] * c_cur[q] - c_prev[q];
                }
                c_prev = std::mem::replace(&mut c_cur, c_next);
            }
            for q in 0..n {
                base[q] *= emu[q];
            }
        }
        PotentialTable { max, vals }
    }

    pub fn max_coord(&self) -> usize {
        self.max
    }

    /// a(x1, x2); panics outside the table range.
    pub fn at(&self, x1: i64, x2: i64) -> f64 {
        let n1 = x1.unsigned_abs() as usize;
        let n2 = x2.unsigned_abs() as usize;
        assert!(n1 <= self.max && n2 <= self.max, "potential table too small");
        self.vals[n1 * (self.max + 1) + n2]
    }

    /// Green function of the positive quadrant absorbed on both axes:
    /// expected visits to w from z before hitting an axis. Images with
    /// alternating signs over the two reflections.
    pub fn quadrant_green(&self, z: (i64, i64), w: (i64, i64)) -> f64 {
        debug_assert!(z.0 > 0 && z.1 > 0 && w.0 > 0 && w.1 > 0);
        self.at(z.0 + w.0, z.1 - w.1) + self.at(z.0 - w.0, z.1 + w.1)
            - self.at(z.0 - w.0, z.1 - w.1)
            - self.at(z.0 + w.0, z.1 + w.1)
    }

    /// Exit law of the quadrant walk from z: masses to (j, 0) and (0, j) for
    /// j = 1..=rmax.
    pub fn quadrant_exit_law(&self, z: (i64, i64), rmax: usize) -> (Vec<f64>, Vec<f64>) {
        let mut to_x1 = vec![0.0; rmax + 1];
        let mut to_x2 = vec![0.0; rmax + 1];
        for j in 1..=rmax as i64 {
            to_x1[j as usize] = 0.25 * self.quadrant_green(z, (j, 1));
            to_x2[j as usize] = 0.25 * self.quadrant_green(z, (1, j));
        }
        (to_x1, to_x2)
    }
}
