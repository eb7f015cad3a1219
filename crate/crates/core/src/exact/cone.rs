//! Exit laws of the simple walk inside a quadrant of the cone.
//!
//! Two dynamic programs over the quarter plane, both with killing (absorbing
//! deficit) at the spatial radius and at the time horizon:
//! - a forward DP from a single start site, giving the joint law of
//!   (exit site, exit time) on the axes;
//! - a backward DP toward a single axis target, giving the hitting
//!   probability of that target from every cone site at once, which is what
//!   the boundary reverse sum needs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{classify, LatticePoint, RegionKind};
use crate::measure::EmpiricalMeasure;

/// Exit law of the simple walk started inside one quadrant, absorbed on the
/// axes, killed past `max_norm >= r` and at time `t`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeExitLaw {
    pub start: LatticePoint,
    pub r: i64,
    pub t: usize,
    /// Marginal law of the exit site; its `deficit` is `alive + escaped`.
    pub site_law: EmpiricalMeasure,
    /// `eta_law[k]` = P(exit exactly at step k); index 0 is 0.
    pub eta_law: Vec<f64>,
    /// Mass still inside the quadrant at the time horizon.
    pub alive: f64,
    /// Mass killed at the spatial truncation radius.
    pub escaped: f64,
    /// Per-step exit-site laws for steps `k <= joint_cap`; the joint law at
    /// later times is summarized by the two marginals above.
    pub joint: Vec<EmpiricalMeasure>,
}

/// Forward DP for the joint exit law from `start`, a cone site with
/// `max_norm(start) < r`. Sites with `max_norm >= r` are killed; the walk is
/// stepped `t` times. `joint_cap` bounds how many per-step exit laws are
/// retained (the marginals are always complete).
pub fn cone_exit(start: LatticePoint, r: i64, t: usize, joint_cap: usize) -> Result<ConeExitLaw> {
    if classify(start) != RegionKind::Cone {
        return Err(Error::Precondition(format!(
            "cone_exit start {start:?} must lie inside the cone"
        )));
    }
    if r < 2 || start.max_norm() >= r {
        return Err(Error::Precondition(format!(
            "cone_exit needs r >= 2 and max_norm(start) < r, got start {start:?}, r {r}"
        )));
    }
    // Reduce to the positive quadrant; exits are mapped back at the end.
    let sgn1 = start.x1.signum();
    let sgn2 = start.x2.signum();
    let s1 = start.x1.unsigned_abs() as usize;
    let s2 = start.x2.unsigned_abs() as usize;
    let rr = r as usize;
    // Alive coordinates are 1..=rr-1; indices 0 and rr are permanent zeros.
    let d = rr + 1;
    let mut f = vec![0.0f64; d * d];
    let mut g = vec![0.0f64; d * d];
    f[s1 * d + s2] = 1.0;

    let mut exit_row = vec![0.0f64; d]; // cumulative mass exiting at (j, 0)
    let mut exit_col = vec![0.0f64; d]; // cumulative mass exiting at (0, j)
    let mut eta_law = vec![0.0f64; t + 1];
    let mut escaped = 0.0f64;
    let mut joint: Vec<EmpiricalMeasure> = vec![EmpiricalMeasure::new()];

    for k in 1..=t {
        // The support after k-1 steps sits within L1 distance k-1 of start.
        let lo1 = s1.saturating_sub(k - 1).max(1);
        let hi1 = (s1 + k - 1).min(rr - 1);
        let lo2 = s2.saturating_sub(k - 1).max(1);
        let hi2 = (s2 + k - 1).min(rr - 1);

        // Mass leaving the quadrant this step, read from the old layer.
        let mut step_exit = 0.0f64;
        let mut step_joint = if k <= joint_cap {
            Some(EmpiricalMeasure::new())
        } else {
            None
        };
        if lo2 == 1 {
            for j in lo1..=hi1 {
                let m = 0.25 * f[j * d + 1];
                if m > 0.0 {
                    exit_row[j] += m;
                    step_exit += m;
                    if let Some(jm) = step_joint.as_mut() {
                        jm.add(LatticePoint::new(sgn1 * j as i64, 0), m);
                    }
                }
            }
        }
        if lo1 == 1 {
            for j in lo2..=hi2 {
                let m = 0.25 * f[d + j];
                if m > 0.0 {
                    exit_col[j] += m;
                    step_exit += m;
                    if let Some(jm) = step_joint.as_mut() {
                        jm.add(LatticePoint::new(0, sgn2 * j as i64), m);
                    }
                }
            }
        }
        if hi1 == rr - 1 {
            for j in lo2..=hi2 {
                escaped += 0.25 * f[(rr - 1) * d + j];
            }
        }
        if hi2 == rr - 1 {
            for j in lo1..=hi1 {
                escaped += 0.25 * f[j * d + (rr - 1)];
            }
        }
        eta_law[k] = step_exit;
        if let Some(jm) = step_joint {
            joint.push(jm);
        }

        // Gather update; padding zeros implement absorption and killing.
        let glo1 = lo1.max(2) - 1;
        let ghi1 = (hi1 + 1).min(rr - 1);
        let glo2 = lo2.max(2) - 1;
        let ghi2 = (hi2 + 1).min(rr - 1);
        let mut total = 0.0f64;
        for z1 in glo1..=ghi1 {
            let row = z1 * d;
            let up = (z1 + 1) * d;
            let down = (z1 - 1) * d;
            for z2 in glo2..=ghi2 {
                let v = 0.25 * (f[down + z2] + f[up + z2] + f[row + z2 - 1] + f[row + z2 + 1]);
                g[row + z2] = v;
                total += v;
            }
        }
        std::mem::swap(&mut f, &mut g);
        // Zero the stale layer only where the next gather will not overwrite
        // it: cheapest is to clear the written window of the old buffer.
        for z1 in glo1..=ghi1 {
            for z2 in glo2..=ghi2 {
                g[z1 * d + z2] = 0.0;
            }
        }
        if total < 1e-300 {
            // Everything has exited; remaining steps contribute nothing.
            break;
        }
    }

    let alive: f64 = f.iter().sum();
    let mut site_law = EmpiricalMeasure::new();
    for j in 1..d {
        if exit_row[j] > 0.0 {
            site_law.add(LatticePoint::new(sgn1 * j as i64, 0), exit_row[j]);
        }
        if exit_col[j] > 0.0 {
            site_law.add(LatticePoint::new(0, sgn2 * j as i64), exit_col[j]);
        }
    }
    site_law.deficit = alive + escaped;
    Ok(ConeExitLaw {
        start,
        r,
        t,
        site_law,
        eta_law,
        alive,
        escaped,
        joint,
    })
}

/// Truncated boundary sum of hitting probabilities of one axis site.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReverseSum {
    /// Plain truncated sum over (boundary site, adjacent arm) pairs; the
    /// corner sites next to the origin border two arms and count twice.
    pub raw: f64,
    /// Same sum with each term divided by the probability that the walk from
    /// that site exits at all within the truncation; corrects the deficits.
    pub extrapolated: f64,
    /// Hitting probability of the target from the adjacent corner site.
    pub corner: f64,
    /// Smallest per-site exit-completeness weight entering the sum; close to
    /// 1 means the truncation barely binds.
    pub min_completeness: f64,
}

/// Backward DP: sums P_y(X_eta = x) over cone-boundary sites y with
/// max_norm(y) <= r, walks truncated at max_norm > r and at t steps. Corner
/// sites are counted once per adjacent axis arm. The sum is non-decreasing
/// in both r and t and tends to 2 (to 0 for the origin, which no cone walk
/// can hit first).
pub fn reverse_sum(x: LatticePoint, r: i64, t: usize) -> Result<ReverseSum> {
    if classify(x) == RegionKind::Cone {
        return Err(Error::Precondition(format!(
            "reverse_sum target {x:?} must lie on the axes"
        )));
    }
    let a = x.max_norm() as usize;
    if a == 0 {
        return Ok(ReverseSum {
            raw: 0.0,
            extrapolated: 0.0,
            corner: 0.0,
            min_completeness: 1.0,
        });
    }
    let rr = r as usize;
    if rr < a + 1 || rr < 2 {
        return Err(Error::Precondition(format!(
            "reverse_sum needs r > max_norm(x), got r {r}, x {x:?}"
        )));
    }
    // By symmetry put the target on the +x2 arm at (0, a) and work in the
    // upper-right quadrant; the upper-left mirror doubles the sum.
    // Alive coordinates 1..=rr; indices 0 and rr+1 are permanent zeros.
    let d = rr + 2;
    let mut h = vec![0.0f64; d * d]; // P_z(X_eta = target, eta <= step)
    let mut g = vec![0.0f64; d * d]; // P_z(eta <= step, never killed)
    let mut hn = vec![0.0f64; d * d];
    let mut gn = vec![0.0f64; d * d];
    for _ in 0..t {
        for z1 in 1..=rr {
            let row = z1 * d;
            let up = (z1 + 1) * d;
            let down = (z1 - 1) * d;
            for z2 in 1..=rr {
                hn[row + z2] =
                    0.25 * (h[down + z2] + h[up + z2] + h[row + z2 - 1] + h[row + z2 + 1]);
                let mut gv =
                    0.25 * (g[down + z2] + g[up + z2] + g[row + z2 - 1] + g[row + z2 + 1]);
                if z1 == 1 {
                    gv += 0.25;
                }
                if z2 == 1 {
                    gv += 0.25;
                }
                gn[row + z2] = gv;
            }
        }
        hn[d + a] += 0.25; // the move (1,a) -> (0,a) lands on the target
        std::mem::swap(&mut h, &mut hn);
        std::mem::swap(&mut g, &mut gn);
    }

    let mut raw = 0.0f64;
    let mut extrapolated = 0.0f64;
    let mut min_completeness = f64::INFINITY;
    let mut add = |hv: f64, gv: f64, mult: f64| {
        raw += mult * hv;
        if gv > 0.0 {
            extrapolated += mult * hv / gv;
            min_completeness = min_completeness.min(gv);
        }
    };
    add(h[d + 1], g[d + 1], 2.0); // corner (1,1), adjacent to both arms
    for j in 2..=rr {
        add(h[j * d + 1], g[j * d + 1], 1.0); // (j, 1)
        add(h[d + j], g[d + j], 1.0); // (1, j)
    }
    Ok(ReverseSum {
        raw: 2.0 * raw,
        extrapolated: 2.0 * extrapolated,
        corner: h[d + 1],
        min_completeness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::potential::PotentialTable;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pt(x1: i64, x2: i64) -> LatticePoint {
        LatticePoint::new(x1, x2)
    }

    #[test]
    fn rejects_axis_starts_and_tight_radii() {
        assert!(cone_exit(pt(0, 3), 50, 10, 0).is_err());
        assert!(cone_exit(pt(5, 5), 5, 10, 0).is_err());
        assert!(reverse_sum(pt(1, 1), 50, 10).is_err());
        assert!(reverse_sum(pt(0, 50), 50, 10).is_err());
    }

    #[test]
    fn first_step_law_from_corner() {
        let law = cone_exit(pt(1, 1), 50, 5, 2).unwrap();
        assert_abs_diff_eq!(law.eta_law[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.joint[1].mass_at(pt(0, 1)), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(law.joint[1].mass_at(pt(1, 0)), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn short_horizon_eta_law_by_hand() {
        // From (1,2): step 1 exits only at (0,2) with mass 1/4. Step 2 exits
        // via (1,1) -> {(0,1),(1,0)} and (1,3) -> (0,3): 1/8 + 1/16 = 3/16.
        let law = cone_exit(pt(1, 2), 210, 2, 0).unwrap();
        assert_abs_diff_eq!(law.eta_law[1], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(law.eta_law[2], 3.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        let law = cone_exit(pt(2, 3), 40, 5_000, 0).unwrap();
        let total = law.site_law.total_mass() + law.alive + law.escaped;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let eta_total: f64 = law.eta_law.iter().sum();
        assert_abs_diff_eq!(eta_total, law.site_law.total_mass(), epsilon = 1e-12);
        assert!(law.escaped > 0.0); // r = 40 is reachable within 5000 steps
    }

    #[test]
    fn time_reversal_identity_is_exact_under_matched_truncation() {
        // P_{(1,x)}(X_eta=(y,0)) = P_{(y,1)}(X_eta=(0,x)): path reversal
        // preserves length and max-norm, so truncated values match exactly.
        for (x, y) in [(2i64, 3i64), (1, 4), (3, 3)] {
            let lhs = cone_exit(pt(1, x), 50, 2_000, 0).unwrap();
            let rhs = cone_exit(pt(y, 1), 50, 2_000, 0).unwrap();
            let a = lhs.site_law.mass_at(pt(y, 0));
            let b = rhs.site_law.mass_at(pt(0, x));
            assert!((a - b).abs() <= 1e-10, "x={x} y={y}: {a} vs {b}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn dp_site_law_matches_image_method() {
        // Untruncated exit masses from the potential-kernel image method
        // dominate the DP values by at most the DP deficit.
        let table = PotentialTable::build(130);
        let law = cone_exit(pt(2, 3), 120, 100_000, 0).unwrap();
        let deficit = law.alive + law.escaped;
        assert!(deficit < 0.01, "deficit {deficit}");
        for j in [1i64, 2, 5, 11] {
            let exact = 0.25 * table.quadrant_green((2, 3), (j, 1));
            let got = law.site_law.mass_at(pt(j, 0));
            assert!(got <= exact + 1e-9, "j={j}: {got} > {exact}");
            assert!(exact - got <= deficit + 1e-12, "j={j}: {got} vs {exact}");
        }
    }

    #[test]
    fn quadrant_sign_mapping() {
        let base = cone_exit(pt(2, 3), 40, 3_000, 0).unwrap();
        let flipped = cone_exit(pt(-2, 3), 40, 3_000, 0).unwrap();
        for (p, &m) in base.site_law.iter() {
            assert_abs_diff_eq!(
                flipped.site_law.mass_at(pt(-p.x1, p.x2)),
                m,
                epsilon = 1e-14
            );
        }
        assert_abs_diff_eq!(base.alive, flipped.alive, epsilon = 1e-14);
    }

    #[test]
    fn corner_exit_mass_has_closed_form() {
        // P_{(1,1)}(X_eta=(0,1)) = (1/4)[a(2,0)+a(0,2)-a(0,0)-a(2,2)]
        //                        = 2 - 16/(3 pi).
        let exact = 2.0 - 16.0 / (3.0 * PI);
        let law = cone_exit(pt(1, 1), 100, 20_000, 0).unwrap();
        let got = law.site_law.mass_at(pt(0, 1));
        assert!(got <= exact + 1e-12);
        assert!(exact - got <= law.alive + law.escaped + 1e-12);
    }

    #[test]
    fn reverse_sum_is_monotone_and_near_two() {
        let small = reverse_sum(pt(0, 3), 40, 2_000).unwrap();
        let bigger = reverse_sum(pt(0, 3), 60, 4_000).unwrap();
        assert!(small.raw <= bigger.raw + 1e-15);
        assert!(bigger.raw <= 2.0 + 1e-12);
        let full = reverse_sum(pt(0, 1), 120, 40_000).unwrap();
        assert!(full.raw > 1.9 && full.raw <= 2.0 + 1e-12, "raw {}", full.raw);
        assert!(
            (full.extrapolated - 2.0).abs() < 0.02,
            "extrapolated {}",
            full.extrapolated
        );
        // The corner term is the closed-form exit mass from (1,1) to (0,1),
        // up to the truncation deficit.
        let exact_corner = 2.0 - 16.0 / (3.0 * PI);
        assert!(full.corner <= exact_corner + 1e-12);
        assert!(exact_corner - full.corner < 0.01);
    }

    #[test]
    fn reverse_sum_is_arm_symmetric() {
        let a = reverse_sum(pt(0, 5), 50, 3_000).unwrap();
        let b = reverse_sum(pt(5, 0), 50, 3_000).unwrap();
        let c = reverse_sum(pt(0, -5), 50, 3_000).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.raw, c.raw);
        assert_eq!(reverse_sum(pt(0, 0), 50, 100).unwrap().raw, 0.0);
    }

    #[test]
    fn reverse_sum_terms_match_forward_dp() {
        // The backward DP's corner entry is P_{(1,1)}(X_eta=(0,3), eta<=t,
        // no kill); the forward DP from (1,1) computes the same quantity.
        let rs = reverse_sum(pt(0, 3), 50, 2_000).unwrap();
        let fwd = cone_exit(pt(1, 1), 51, 2_000, 0).unwrap();
        // Radii differ by one in convention (alive <= r vs alive < r), so
        // compare with matched alive sets: backward alive norms <= 50,
        // forward alive norms <= 50.
        assert_abs_diff_eq!(rs.corner, fwd.site_law.mass_at(pt(0, 3)), epsilon = 1e-12);
    }
}
