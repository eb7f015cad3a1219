//! Linear solves on the axis chain: the walk restricted to the four arms and
//! the origin, absorbed on first entry to the cone. Each arm is a
//! one-dimensional chain coupled to the others only through the origin, so
//! every system is solved by a backward sweep per arm, a scalar solve at the
//! origin, and forward substitution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{classify, Arm, LatticePoint, RegionKind, WalkParams};
use crate::measure::EmpiricalMeasure;

/// The truncated axis chain: arm sites i = 1..R-1 on each of the four arms
/// plus the origin; sites with max_norm >= R are killed (truncation deficit).
pub struct AxisChain {
    params: WalkParams,
    r: usize,
    /// out[i] = 1/(4 i^alpha): outward and cone-side step probability.
    out: Vec<f64>,
    /// inw[i] = 1 - 3/(4 i^alpha): inward step probability.
    inw: Vec<f64>,
}

/// Values on the chain: the origin plus one array per arm (index 1..R-1;
/// index 0 unused).
#[derive(Debug, Clone)]
pub struct ChainValues {
    pub origin: f64,
    pub arms: [Vec<f64>; 4],
}

impl ChainValues {
    pub fn zeros(r: usize) -> Self {
        ChainValues {
            origin: 0.0,
            arms: std::array::from_fn(|_| vec![0.0; r]),
        }
    }

    pub fn at(&self, p: LatticePoint) -> f64 {
        match classify(p) {
            RegionKind::Origin => self.origin,
            RegionKind::AxisArm { arm, i } => self.arms[arm_index(arm)][i as usize],
            RegionKind::Cone => panic!("not an axis point: {p}"),
        }
    }
}

pub fn arm_index(arm: Arm) -> usize {
    match arm {
        Arm::PlusX1 => 0,
        Arm::MinusX1 => 1,
        Arm::PlusX2 => 2,
        Arm::MinusX2 => 3,
    }
}

impl AxisChain {
    pub fn new(params: WalkParams, r: usize) -> Result<Self> {
        if r < 2 {
            return Err(Error::Precondition("axis chain needs R >= 2".into()));
        }
        let mut out = vec![0.0; r];
        let mut inw = vec![0.0; r];
        for i in 1..r {
            out[i] = params.outward_prob(i as i64);
            inw[i] = params.inward_prob(i as i64);
        }
        Ok(AxisChain { params, r, out, inw })
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    /// Solves u = b + M u, where M is the axis sub-kernel (`transposed` =
    /// false) or its transpose (`transposed` = true). The sub-kernel drops
    /// the absorbing cone moves and the killed outward move at i = R-1.
    pub fn solve(&self, b: &ChainValues, transposed: bool) -> ChainValues {
        let r = self.r;
        // upc[i] multiplies u(i+1), downc[i] multiplies u(i-1) (u(0) = origin
        // for i = 1) in the equation for u(i); c_o multiplies each u_a(1) in
        // the origin equation.
        let mut upc = vec![0.0; r];
        let mut downc = vec![0.0; r];
        for i in 1..r {
            if !transposed {
                upc[i] = if i + 1 < r { self.out[i] } else { 0.0 };
                downc[i] = if i > 1 { self.inw[i] } else { 0.25 };
            } else {
                upc[i] = if i + 1 < r { self.inw[i + 1] } else { 0.0 };
                downc[i] = if i > 1 { self.out[i - 1] } else { 0.25 };
            }
        }
        let c_o = 0.25;

        // Backward sweep: u(i) = e(i) + f(i) u(i-1). The f coefficients are
        // arm-independent; e depends on the arm's b.
        let mut f = vec![0.0; r];
        f[r - 1] = downc[r - 1];
        let mut gdiv = vec![1.0; r];
        for i in (1..r - 1).rev() {
            gdiv[i] = 1.0 - upc[i] * f[i + 1];
            f[i] = downc[i] / gdiv[i];
        }
        let mut es: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; r]);
        for a in 0..4 {
            let e = &mut es[a];
            e[r - 1] = b.arms[a][r - 1];
            for i in (1..r - 1).rev() {
                e[i] = (b.arms[a][i] + upc[i] * e[i + 1]) / gdiv[i];
            }
        }
        let sum_e1: f64 = es.iter().map(|e| e[1]).sum();
        let origin = (b.origin + c_o * sum_e1) / (1.0 - 4.0 * c_o * f[1]);
        let mut arms: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; r]);
        for a in 0..4 {
            let mut prev = origin;
            for i in 1..r {
                arms[a][i] = es[a][i] + f[i] * prev;
                prev = arms[a][i];
            }
        }
        ChainValues { origin, arms }
    }

    /// Applies the (forward) axis sub-kernel to a value function:
    /// (Qv)(s) = sum over axis neighbors of p(s, nbr) v(nbr).
    pub fn apply_kernel(&self, v: &ChainValues) -> ChainValues {
        let r = self.r;
        let mut out = ChainValues::zeros(r);
        out.origin = 0.25 * v.arms.iter().map(|arm| arm[1]).sum::<f64>();
        for a in 0..4 {
            for i in 1..r {
                let up = if i + 1 < r { self.out[i] * v.arms[a][i + 1] } else { 0.0 };
                let down = if i > 1 {
                    self.inw[i] * v.arms[a][i - 1]
                } else {
                    0.25 * v.origin
                };
                out.arms[a][i] = up + down;
            }
        }
        out
    }

    /// E_s[rho] for every axis state.
    pub fn expected_rho(&self) -> ChainValues {
        let mut b = ChainValues::zeros(self.r);
        b.origin = 1.0;
        for arm in b.arms.iter_mut() {
            for v in arm.iter_mut().skip(1) {
                *v = 1.0;
            }
        }
        self.solve(&b, false)
    }

    /// E_s[rho^2] for every axis state.
    pub fn expected_rho_sq(&self, m1: &ChainValues) -> ChainValues {
        let qm1 = self.apply_kernel(m1);
        let mut b = ChainValues::zeros(self.r);
        b.origin = 1.0 + 2.0 * qm1.origin;
        for a in 0..4 {
            for i in 1..self.r {
                b.arms[a][i] = 1.0 + 2.0 * qm1.arms[a][i];
            }
        }
        self.solve(&b, false)
    }

    /// E_s[number of visits to the origin strictly before rho, at times >= 1].
    pub fn origin_visits(&self) -> ChainValues {
        let mut b = ChainValues::zeros(self.r);
        for a in 0..4 {
            b.arms[a][1] = self.inw[1]; // = 1/4: the inward move from distance 1
        }
        self.solve(&b, false)
    }

    /// E_s[max_norm(X_rho)] for every axis state (killed mass contributes 0).
    pub fn expected_exit_norm(&self) -> ChainValues {
        let mut b = ChainValues::zeros(self.r);
        for a in 0..4 {
            for i in 1..self.r {
                // Both cone-side exits from (a, i) land at norm i.
                b.arms[a][i] = 2.0 * self.out[i] * i as f64;
            }
        }
        self.solve(&b, false)
    }

    /// P_s(X_rho = target) for every axis state, for a fixed cone-boundary
    /// target site.
    pub fn hit_prob(&self, target: LatticePoint) -> Result<ChainValues> {
        if !target.on_cone() || !target.on_cone_boundary() {
            return Err(Error::Precondition(format!(
                "target {target} is not on the cone boundary"
            )));
        }
        // The unique axis neighbor of the target.
        let (axis_nbr, _) = boundary_axis_neighbor(target);
        let mut b = ChainValues::zeros(self.r);
        match classify(axis_nbr) {
            RegionKind::AxisArm { arm, i } if (i as usize) < self.r => {
                b.arms[arm_index(arm)][i as usize] = self.out[i as usize];
            }
            _ => {
                return Err(Error::Precondition(format!(
                    "target {target} out of the truncated chain"
                )))
            }
        }
        Ok(self.solve(&b, false))
    }

    /// Green function g(s) = expected visits to s before rho (including time
    /// 0) for the walk started at `start`.
    pub fn green_from(&self, start: LatticePoint) -> Result<ChainValues> {
        let mut b = ChainValues::zeros(self.r);
        match classify(start) {
            RegionKind::Origin => b.origin = 1.0,
            RegionKind::AxisArm { arm, i } if (i as usize) < self.r => {
                b.arms[arm_index(arm)][i as usize] = 1.0;
            }
            _ => {
                return Err(Error::Precondition(format!(
                    "start {start} must be an axis point with max_norm < R"
                )))
            }
        }
        Ok(self.solve(&b, true))
    }

    /// Law of X_rho from the Green function of `start`, with the killed
    /// outward mass as deficit.
    pub fn absorption_law(&self, green: &ChainValues) -> EmpiricalMeasure {
        let mut law = EmpiricalMeasure::new();
        let mut deficit = 0.0;
        for arm in Arm::ALL {
            let g = &green.arms[arm_index(arm)];
            for i in 1..self.r {
                let mass = g[i] * self.out[i];
                if mass > 0.0 {
                    let [s1, s2] = arm.cone_sides(i as i64);
                    law.add(s1, mass);
                    law.add(s2, mass);
                }
            }
            deficit += g[self.r - 1] * self.out[self.r - 1];
        }
        law.deficit = deficit;
        law
    }

    /// P_start(rho > m) for m = 0..=horizon, by iterating the sub-kernel.
    pub fn survival_from(&self, start: LatticePoint, horizon: usize) -> Result<Vec<f64>> {
        let r = self.r;
        let mut mu = ChainValues::zeros(r);
        match classify(start) {
            RegionKind::Origin => mu.origin = 1.0,
            RegionKind::AxisArm { arm, i } if (i as usize) < r => {
                mu.arms[arm_index(arm)][i as usize] = 1.0;
            }
            _ => {
                return Err(Error::Precondition(format!(
                    "start {start} must be an axis point with max_norm < R"
                )))
            }
        }
        Ok(self.survival_of_measure(mu, horizon))
    }

    /// P(rho > m) for a walk whose time-0 law on the axis is `mu`.
    pub fn survival_of_measure(&self, mut mu: ChainValues, horizon: usize) -> Vec<f64> {
        let r = self.r;
        let mut surv = Vec::with_capacity(horizon + 1);
        surv.push(mu.origin + mu.arms.iter().map(|a| a.iter().sum::<f64>()).sum::<f64>());
        for _ in 0..horizon {
            // Push mu forward one step: nu(s') = sum_s mu(s) Q(s, s').
            let mut nu = ChainValues::zeros(r);
            nu.origin = 0.25 * mu.arms.iter().map(|a| a[1]).sum::<f64>();
            for a in 0..4 {
                for i in 1..r {
                    let from_below = if i == 1 {
                        0.25 * mu.origin
                    } else {
                        mu.arms[a][i - 1] * self.out[i - 1]
                    };
                    let from_above = if i + 1 < r {
                        mu.arms[a][i + 1] * self.inw[i + 1]
                    } else {
                        0.0
                    };
                    nu.arms[a][i] = from_below + from_above;
                }
            }
            mu = nu;
            surv.push(mu.origin + mu.arms.iter().map(|a| a.iter().sum::<f64>()).sum::<f64>());
        }
        surv
    }
}

/// For a cone-boundary site, its unique axis neighbor and the unit step from
/// that axis point to the site.
pub fn boundary_axis_neighbor(p: LatticePoint) -> (LatticePoint, LatticePoint) {
    debug_assert!(p.on_cone_boundary());
    if p.x2.abs() == 1 {
        (LatticePoint::new(p.x1, 0), LatticePoint::new(0, p.x2))
    } else {
        (LatticePoint::new(0, p.x2), LatticePoint::new(p.x1, 0))
    }
}

/// Everything the spec's axis_absorption returns for one start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisSolveResult {
    pub absorption_law: EmpiricalMeasure,
    pub expected_rho: f64,
    pub expected_rho_sq: f64,
    pub origin_visits: f64,
    pub survival: Vec<f64>,
}

/// Absorption law, absorption-time moments, origin visits and survival for a
/// walk started on the axis.
pub fn axis_absorption(
    start: LatticePoint,
    params: WalkParams,
    r: usize,
    horizon: usize,
) -> Result<AxisSolveResult> {
    if !start.on_axis() {
        return Err(Error::Precondition(format!("start {start} is not on the axis")));
    }
    if start.max_norm() as usize >= r {
        return Err(Error::Precondition(format!(
            "start {start} outside truncation radius {r}"
        )));
    }
    let chain = AxisChain::new(params, r)?;
    let green = chain.green_from(start)?;
    let law = chain.absorption_law(&green);
    let m1 = chain.expected_rho();
    let m2 = chain.expected_rho_sq(&m1);
    let visits = chain.origin_visits();
    let survival = chain.survival_from(start, horizon)?;
    Ok(AxisSolveResult {
        absorption_law: law,
        expected_rho: m1.at(start),
        expected_rho_sq: m2.at(start),
        origin_visits: visits.at(start),
        survival,
    })
}

/// Probability of the unique shortest axis path from x to y (through the
/// origin when they sit on different arms); 1 when x = y.
pub fn shortest_path_log_prob(x: LatticePoint, y: LatticePoint, params: &WalkParams) -> f64 {
    assert!(x.on_axis() && y.on_axis(), "shortest paths live on the axis");
    let cx = classify(x);
    let cy = classify(y);
    let same_arm = match (cx, cy) {
        (RegionKind::AxisArm { arm: a, .. }, RegionKind::AxisArm { arm: b, .. }) => a == b,
        _ => true, // one of them is the origin: a single-arm segment
    };
    let xb = x.max_norm();
    let yb = y.max_norm();
    let mut lp = 0.0;
    if same_arm {
        if yb > xb {
            // Outward along the arm; the step from the origin has prob 1/4.
            if xb == 0 {
                lp += 0.25f64.ln();
            }
            for i in xb.max(1)..yb {
                lp += params.outward_prob(i).ln();
            }
        } else {
            for i in (yb + 1)..=xb {
                lp += params.inward_prob(i).ln();
            }
        }
    } else {
        // Inward x -> origin, then outward origin -> y.
        for i in 1..=xb {
            lp += params.inward_prob(i).ln();
        }
        lp += 0.25f64.ln();
        for i in 1..yb {
            lp += params.outward_prob(i).ln();
        }
    }
    lp
}

pub fn shortest_path_prob(x: LatticePoint, y: LatticePoint, params: &WalkParams) -> f64 {
    shortest_path_log_prob(x, y, params).exp()
}

/// |LHS - RHS| of the axis reversibility identity
/// P_x(X_rho = y + e) = [P(x->y)/P(y->x)] (xbar/ybar)^alpha P_y(X_rho = x + e'),
/// with e, e' the first cone-side neighbors of the respective arms.
pub fn reversibility_residual(
    x: LatticePoint,
    y: LatticePoint,
    params: WalkParams,
    r: usize,
) -> Result<f64> {
    for p in [x, y] {
        if !p.on_axis() || p == LatticePoint::ORIGIN {
            return Err(Error::Precondition(format!(
                "{p} must be a non-origin axis point"
            )));
        }
    }
    let chain = AxisChain::new(params, r)?;
    let side = |p: LatticePoint| -> LatticePoint {
        match classify(p) {
            RegionKind::AxisArm { arm, i } => arm.cone_sides(i)[0],
            _ => unreachable!(),
        }
    };
    let lhs = chain.hit_prob(side(y))?.at(x);
    let rhs_prob = chain.hit_prob(side(x))?.at(y);
    let log_ratio = shortest_path_log_prob(x, y, &params)
        - shortest_path_log_prob(y, x, &params)
        + params.alpha() * ((x.max_norm() as f64).ln() - (y.max_norm() as f64).ln());
    let rhs = (log_ratio + rhs_prob.ln()).exp();
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::lattice::transition_distribution;

    fn pt(x1: i64, x2: i64) -> LatticePoint {
        LatticePoint::new(x1, x2)
    }

    #[test]
    fn shortest_path_examples() {
        let a1 = WalkParams::new(1.0).unwrap();
        assert_abs_diff_eq!(shortest_path_prob(pt(0, 3), pt(0, 3), &a1), 1.0);
        assert_abs_diff_eq!(
            shortest_path_prob(pt(0, 2), pt(0, 0), &a1),
            5.0 / 32.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            shortest_path_prob(pt(0, 2), pt(2, 0), &a1),
            5.0 / 512.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn shortest_path_matches_step_products() {
        // Same-arm outward from the origin and from an arm site.
        let params = WalkParams::new(2.0).unwrap();
        let manual = |path: &[LatticePoint]| -> f64 {
            path.windows(2)
                .map(|w| transition_distribution(w[0], &params).prob_to(w[1]))
                .product()
        };
        let cases: Vec<Vec<LatticePoint>> = vec![
            vec![pt(0, 0), pt(0, 1), pt(0, 2), pt(0, 3)],
            vec![pt(2, 0), pt(3, 0), pt(4, 0)],
            vec![pt(-3, 0), pt(-2, 0), pt(-1, 0), pt(0, 0), pt(0, 1), pt(0, 2)],
            vec![pt(0, -2), pt(0, -1), pt(0, 0), pt(-1, 0)],
        ];
        for path in cases {
            let x = path[0];
            let y = *path.last().unwrap();
            assert_abs_diff_eq!(
                shortest_path_prob(x, y, &params),
                manual(&path),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn one_step_absorption_from_distance_one() {
        let res = axis_absorption(pt(0, 1), WalkParams::new(3.0).unwrap(), 50, 10).unwrap();
        // P(rho = 1) = 1/2, split evenly between (1,1) and (-1,1).
        assert!(res.survival[0] == 1.0);
        assert_abs_diff_eq!(res.survival[1], 0.5, epsilon = 1e-12);
        let p_up = res.absorption_law.mass_at(pt(1, 1));
        let p_um = res.absorption_law.mass_at(pt(-1, 1));
        assert_abs_diff_eq!(p_up, p_um, epsilon = 1e-12);
        assert!(p_up > 0.25); // one-step mass alone is 1/4
        // Mirror symmetry of the law across the starting arm.
        for (p, &m) in res.absorption_law.iter() {
            assert_abs_diff_eq!(
                res.absorption_law.mass_at(pt(-p.x1, p.x2)),
                m,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn absorption_law_is_a_probability() {
        for &(x1, x2) in &[(0i64, 1i64), (0, 5), (7, 0), (0, -3), (0, 0)] {
            let res = axis_absorption(pt(x1, x2), WalkParams::new(4.0).unwrap(), 80, 5).unwrap();
            let total = res.absorption_law.total_mass() + res.absorption_law.deficit;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            assert!(res.expected_rho >= 1.0);
            assert!(res.expected_rho_sq >= res.expected_rho);
        }
    }

    #[test]
    fn survival_matches_expected_rho() {
        // E[rho] = sum_{m>=0} P(rho > m); the tail beyond the horizon is tiny
        // for a start near the origin.
        let res = axis_absorption(pt(0, 2), WalkParams::new(4.0).unwrap(), 60, 4000).unwrap();
        let sum: f64 = res.survival.iter().sum();
        assert_abs_diff_eq!(sum, res.expected_rho, epsilon = 1e-6);
    }

    #[test]
    fn second_moment_via_survival() {
        // E[rho^2] = sum_{m>=0} (2m+1) P(rho > m).
        let res = axis_absorption(pt(0, 3), WalkParams::new(4.0).unwrap(), 60, 6000).unwrap();
        let sum: f64 = res
            .survival
            .iter()
            .enumerate()
            .map(|(m, p)| (2 * m + 1) as f64 * p)
            .sum();
        assert_abs_diff_eq!(sum / res.expected_rho_sq, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn origin_visits_from_origin() {
        // From the origin, the first step leaves; visits at times >= 1 before
        // rho are the returns. Cross-check against a small Monte Carlo.
        let params = WalkParams::new(4.0).unwrap();
        let chain = AxisChain::new(params, 80).unwrap();
        let v = chain.origin_visits();
        use crate::lattice::step;
        use crate::rng::CounterRng;
        let mut rng = CounterRng::new(31337, 0);
        let trials = 200_000;
        let mut total = 0u64;
        for _ in 0..trials {
            let mut p = LatticePoint::ORIGIN;
            loop {
                p = step(p, &params, &mut rng);
                if p.on_cone() {
                    break;
                }
                if p == LatticePoint::ORIGIN {
                    total += 1;
                }
            }
        }
        let mc = total as f64 / trials as f64;
        let se = (v.origin / trials as f64).sqrt(); // crude Poisson-scale bound
        assert!(
            (mc - v.origin).abs() < 6.0 * se.max(1e-3),
            "solver {} vs mc {}",
            v.origin,
            mc
        );
    }

    #[test]
    fn reversibility_small_pairs() {
        let params = WalkParams::new(4.0).unwrap();
        let res = reversibility_residual(pt(0, 3), pt(0, 7), params, 200).unwrap();
        assert!(res <= 1e-8, "same-arm residual {res}");
        let res = reversibility_residual(pt(0, 3), pt(5, 0), params, 200).unwrap();
        assert!(res <= 1e-8, "cross-arm residual {res}");
        // And a relative check so roundoff, not just smallness, is bounded.
        let chain = AxisChain::new(params, 200).unwrap();
        let res = reversibility_residual(pt(0, 2), pt(0, 4), params, 200).unwrap();
        let scale = chain.hit_prob(pt(1, 4)).unwrap().at(pt(0, 2));
        assert!(scale > 0.0);
        assert!(res / scale < 1e-9, "relative residual {}", res / scale);
    }

    #[test]
    fn green_identity_total_time() {
        // Sum of Green values over all states = E[rho] (time before
        // absorption counts every visit).
        let params = WalkParams::new(4.0).unwrap();
        let chain = AxisChain::new(params, 100).unwrap();
        let g = chain.green_from(pt(0, 4)).unwrap();
        let total: f64 =
            g.origin + g.arms.iter().map(|a| a.iter().sum::<f64>()).sum::<f64>();
        let m1 = chain.expected_rho();
        // E[rho] counts steps, Green counts visits including time 0; for an
        // absorbed chain these agree (each visit is followed by one step).
        assert_abs_diff_eq!(total / m1.at(pt(0, 4)), 1.0, epsilon = 1e-9);
    }
}
