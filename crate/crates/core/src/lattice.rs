//! State space, region classification and the one-step transition kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// A site of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x1: i64,
    pub x2: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x1: 0, x2: 0 };

    pub fn new(x1: i64, x2: i64) -> Self {
        LatticePoint { x1, x2 }
    }

    /// `max(|x1|, |x2|)`, the norm used throughout.
    pub fn max_norm(&self) -> i64 {
        self.x1.abs().max(self.x2.abs())
    }

    /// True on the cone K (both coordinates nonzero).
    pub fn on_cone(&self) -> bool {
        self.x1 != 0 && self.x2 != 0
    }

    /// True on the axes K^c (at least one coordinate zero).
    pub fn on_axis(&self) -> bool {
        !self.on_cone()
    }

    /// True on the cone boundary: min(|x1|,|x2|) = 1.
    pub fn on_cone_boundary(&self) -> bool {
        self.x1.abs().min(self.x2.abs()) == 1
    }

    pub fn neighbors(&self) -> [LatticePoint; 4] {
        [
            LatticePoint::new(self.x1 + 1, self.x2),
            LatticePoint::new(self.x1 - 1, self.x2),
            LatticePoint::new(self.x1, self.x2 + 1),
            LatticePoint::new(self.x1, self.x2 - 1),
        ]
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x1, self.x2)
    }
}

/// The four axis arms, named by the sign of the nonzero coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    PlusX1,
    MinusX1,
    PlusX2,
    MinusX2,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::PlusX1, Arm::MinusX1, Arm::PlusX2, Arm::MinusX2];

    /// The arm site at distance `i >= 1` from the origin.
    pub fn site(&self, i: i64) -> LatticePoint {
        debug_assert!(i >= 1);
        match self {
            Arm::PlusX1 => LatticePoint::new(i, 0),
            Arm::MinusX1 => LatticePoint::new(-i, 0),
            Arm::PlusX2 => LatticePoint::new(0, i),
            Arm::MinusX2 => LatticePoint::new(0, -i),
        }
    }

    /// The two cone-side neighbors of `self.site(i)`.
    pub fn cone_sides(&self, i: i64) -> [LatticePoint; 2] {
        match self {
            Arm::PlusX1 => [LatticePoint::new(i, 1), LatticePoint::new(i, -1)],
            Arm::MinusX1 => [LatticePoint::new(-i, 1), LatticePoint::new(-i, -1)],
            Arm::PlusX2 => [LatticePoint::new(1, i), LatticePoint::new(-1, i)],
            Arm::MinusX2 => [LatticePoint::new(1, -i), LatticePoint::new(-1, -i)],
        }
    }
}

/// Partition of the lattice: cone, origin, or a point of an axis arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    Cone,
    Origin,
    AxisArm { arm: Arm, i: i64 },
}

pub fn classify(p: LatticePoint) -> RegionKind {
    match (p.x1, p.x2) {
        (0, 0) => RegionKind::Origin,
        (a, 0) if a > 0 => RegionKind::AxisArm { arm: Arm::PlusX1, i: a },
        (a, 0) => RegionKind::AxisArm { arm: Arm::MinusX1, i: -a },
        (0, b) if b > 0 => RegionKind::AxisArm { arm: Arm::PlusX2, i: b },
        (0, b) => RegionKind::AxisArm { arm: Arm::MinusX2, i: -b },
        _ => RegionKind::Cone,
    }
}

/// Model parameters: the return-force exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    alpha: f64,
}

impl WalkParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be a finite real >= 0, got {alpha}"
            )));
        }
        Ok(WalkParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `1/(4 i^alpha)`: probability of the outward axis move and of each
    /// cone-side move from an arm site at distance `i`.
    pub fn outward_prob(&self, i: i64) -> f64 {
        debug_assert!(i >= 1);
        0.25 * (-self.alpha * (i as f64).ln()).exp()
    }

    /// `1 - 3/(4 i^alpha)`: probability of the inward axis move.
    pub fn inward_prob(&self, i: i64) -> f64 {
        1.0 - 3.0 * self.outward_prob(i)
    }
}

/// The one-step law at a site: at most four (neighbor, probability) outcomes,
/// listed in the fixed CDF sampling order used by [`step`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDist {
    pub outcomes: Vec<(LatticePoint, f64)>,
}

impl TransitionDist {
    pub fn total_mass(&self) -> f64 {
        self.outcomes.iter().map(|&(_, p)| p).sum()
    }

    pub fn prob_to(&self, q: LatticePoint) -> f64 {
        self.outcomes
            .iter()
            .find(|&&(site, _)| site == q)
            .map_or(0.0, |&(_, p)| p)
    }
}

/// One-step transition law. Outcome order is (+x1, -x1, +x2, -x2) with the
/// axis-inward outcome moved to the last slot, so inverse-CDF sampling is
/// bit-reproducible.
pub fn transition_distribution(p: LatticePoint, params: &WalkParams) -> TransitionDist {
    let [e, w, n, s] = p.neighbors();
    match classify(p) {
        RegionKind::Cone | RegionKind::Origin => TransitionDist {
            outcomes: vec![(e, 0.25), (w, 0.25), (n, 0.25), (s, 0.25)],
        },
        RegionKind::AxisArm { arm, i } => {
            let out = params.outward_prob(i);
            let inw = params.inward_prob(i);
            let (inward, others) = match arm {
                Arm::PlusX1 => (w, [e, n, s]),
                Arm::MinusX1 => (e, [w, n, s]),
                Arm::PlusX2 => (s, [e, w, n]),
                Arm::MinusX2 => (n, [e, w, s]),
            };
            TransitionDist {
                outcomes: vec![
                    (others[0], out),
                    (others[1], out),
                    (others[2], out),
                    (inward, inw),
                ],
            }
        }
    }
}

/// Samples one step by inverse CDF over the fixed outcome order.
pub fn step(p: LatticePoint, params: &WalkParams, rng: &mut impl RandomSource) -> LatticePoint {
    let dist = transition_distribution(p, params);
    sample_dist(&dist, rng.next_f64())
}

/// Inverse-CDF lookup at a fixed uniform draw `u` in [0,1).
pub fn sample_dist(dist: &TransitionDist, u: f64) -> LatticePoint {
    let mut acc = 0.0;
    for &(site, prob) in &dist.outcomes {
        acc += prob;
        if u < acc {
            return site;
        }
    }
    dist.outcomes.last().expect("nonempty distribution").0
}

/// Sampling fast path used by the simulation loop; avoids building the
/// outcome vector. Behaviour is identical to [`step`].
#[inline]
pub fn step_fast(p: LatticePoint, params: &WalkParams, u: f64) -> LatticePoint {
    let LatticePoint { x1, x2 } = p;
    if x1 != 0 && x2 != 0 {
        // Cone: uniform over (+x1, -x1, +x2, -x2).
        return match (u * 4.0) as u32 {
            0 => LatticePoint::new(x1 + 1, x2),
            1 => LatticePoint::new(x1 - 1, x2),
            2 => LatticePoint::new(x1, x2 + 1),
            _ => LatticePoint::new(x1, x2 - 1),
        };
    }
    if x1 == 0 && x2 == 0 {
        return match (u * 4.0) as u32 {
            0 => LatticePoint::new(1, 0),
            1 => LatticePoint::new(-1, 0),
            2 => LatticePoint::new(0, 1),
            _ => LatticePoint::new(0, -1),
        };
    }
    let i = p.max_norm();
    let out = params.outward_prob(i);
    let toward_origin = |q: LatticePoint| -> LatticePoint {
        LatticePoint::new(q.x1 - q.x1.signum(), q.x2 - q.x2.signum())
    };
    let away = LatticePoint::new(x1 + x1.signum(), x2 + x2.signum());
    // CDF order matches transition_distribution: the three 1/(4 i^alpha)
    // outcomes in (+x1, -x1, +x2, -x2) order, inward last. On a +-x1 arm that
    // is (outward, side +x2, side -x2); on a +-x2 arm the two +-x1 sides come
    // before the outward move.
    let (b0, b1, b2) = if x2 == 0 {
        (away, LatticePoint::new(x1, 1), LatticePoint::new(x1, -1))
    } else {
        (LatticePoint::new(1, x2), LatticePoint::new(-1, x2), away)
    };
    if u < out {
        b0
    } else if u < 2.0 * out {
        b1
    } else if u < 3.0 * out {
        b2
    } else {
        toward_origin(p)
    }
}

/// The eight symmetries of the lattice generated by coordinate swap and sign
/// flips, indexed 0..8; index 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DihedralElement(u8);

impl DihedralElement {
    pub const ALL: [DihedralElement; 8] = [
        DihedralElement(0),
        DihedralElement(1),
        DihedralElement(2),
        DihedralElement(3),
        DihedralElement(4),
        DihedralElement(5),
        DihedralElement(6),
        DihedralElement(7),
    ];

    pub fn apply(&self, p: LatticePoint) -> LatticePoint {
        let (mut a, mut b) = (p.x1, p.x2);
        if self.0 & 4 != 0 {
            std::mem::swap(&mut a, &mut b);
        }
        if self.0 & 1 != 0 {
            a = -a;
        }
        if self.0 & 2 != 0 {
            b = -b;
        }
        LatticePoint::new(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classify_examples() {
        assert_eq!(classify(LatticePoint::new(0, 0)), RegionKind::Origin);
        assert_eq!(
            classify(LatticePoint::new(4, 0)),
            RegionKind::AxisArm { arm: Arm::PlusX1, i: 4 }
        );
        assert_eq!(
            classify(LatticePoint::new(0, -9)),
            RegionKind::AxisArm { arm: Arm::MinusX2, i: 9 }
        );
        assert_eq!(classify(LatticePoint::new(2, -7)), RegionKind::Cone);
    }

    #[test]
    fn max_norm_examples() {
        assert_eq!(LatticePoint::new(-3, 2).max_norm(), 3);
        assert_eq!(LatticePoint::new(0, 0).max_norm(), 0);
        assert_eq!(LatticePoint::new(5, 5).max_norm(), 5);
    }

    #[test]
    fn kernel_at_inner_arm_site_is_uniform() {
        // i = 1 forces 1/(4 * 1^alpha) = 1/4 regardless of alpha.
        let params = WalkParams::new(7.0).unwrap();
        let d = transition_distribution(LatticePoint::new(1, 0), &params);
        for &(_, p) in &d.outcomes {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(d.prob_to(LatticePoint::new(2, 0)), 0.25);
        assert_abs_diff_eq!(d.prob_to(LatticePoint::new(0, 0)), 0.25);
    }

    #[test]
    fn kernel_on_plus_x2_arm() {
        let params = WalkParams::new(2.0).unwrap();
        let d = transition_distribution(LatticePoint::new(0, 2), &params);
        assert_abs_diff_eq!(d.prob_to(LatticePoint::new(0, 3)), 1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.prob_to(LatticePoint::new(1, 2)), 1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.prob_to(LatticePoint::new(-1, 2)), 1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.prob_to(LatticePoint::new(0, 1)), 13.0 / 16.0, epsilon = 1e-15);
        // Inward outcome sits in the last CDF slot.
        assert_eq!(d.outcomes[3].0, LatticePoint::new(0, 1));
    }

    #[test]
    fn kernel_on_cone_is_simple() {
        let params = WalkParams::new(3.3).unwrap();
        let d = transition_distribution(LatticePoint::new(-3, 5), &params);
        assert_eq!(d.outcomes.len(), 4);
        for &(_, p) in &d.outcomes {
            assert_abs_diff_eq!(p, 0.25);
        }
    }

    #[test]
    fn cdf_buckets_at_fixed_draws() {
        let params = WalkParams::new(2.0).unwrap();
        let origin = transition_distribution(LatticePoint::ORIGIN, &params);
        assert_eq!(sample_dist(&origin, 0.10), LatticePoint::new(1, 0));
        assert_eq!(sample_dist(&origin, 0.30), LatticePoint::new(-1, 0));
        let arm = transition_distribution(LatticePoint::new(2, 0), &params);
        assert_eq!(sample_dist(&arm, 0.999), LatticePoint::new(1, 0));
    }

    #[test]
    fn step_fast_matches_sample_dist() {
        let params = WalkParams::new(2.5).unwrap();
        let sites = [
            LatticePoint::new(0, 0),
            LatticePoint::new(3, 0),
            LatticePoint::new(-3, 0),
            LatticePoint::new(0, 7),
            LatticePoint::new(0, -2),
            LatticePoint::new(4, -5),
            LatticePoint::new(1, 1),
        ];
        for &p in &sites {
            let dist = transition_distribution(p, &params);
            for k in 0..1000 {
                let u = (k as f64 + 0.5) / 1000.0;
                assert_eq!(step_fast(p, &params, u), sample_dist(&dist, u), "p={p} u={u}");
            }
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(WalkParams::new(-0.5).is_err());
        assert!(WalkParams::new(f64::NAN).is_err());
    }
}
