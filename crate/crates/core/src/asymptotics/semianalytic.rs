//! Semi-analytic quadrant exit laws: the 2D simple walk split into two 1D
//! ballot problems mixed over the number of horizontal steps. An oracle for
//! the same quantities as the quarter-plane DP, built from entirely
//! different ingredients (exact binomials instead of time stepping).
//!
//! Every truncation is accounted: the inner sum over horizontal-step counts
//! is restricted to a Hoeffding window around (k-1)/2 whose dropped binomial
//! mass is at most 2 exp(-2 w^2) per term (products of ballot probabilities
//! are at most 1), and the cut k-tail is bounded through the validated
//! inequality P_u(min > 0, Z_m = v) <= 3 u v / m^{3/2}.

use rayon::prelude::*;

use crate::asymptotics::combinatorics::{
    binomial_point, ln_binomial, reflection_stay_positive, stay_positive_window,
};
use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Half-width of the window on horizontal-step counts, in units of
/// sqrt(k-1).
pub const HOEFFDING_W: f64 = 7.0;

/// Dropped binomial mass per k outside the window.
fn window_drop_mass() -> f64 {
    2.0 * (-2.0 * HOEFFDING_W * HOEFFDING_W).exp()
}

/// A value together with rigorous bounds on everything left out.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SemiAnalyticResult {
    pub value: f64,
    /// Bound on the mass dropped by the per-k window on horizontal counts.
    pub window_budget: f64,
    /// Bound on the sum over k beyond the cutoff.
    pub tail_budget: f64,
}

impl SemiAnalyticResult {
    pub fn total_budget(&self) -> f64 {
        self.window_budget + self.tail_budget
    }
}

/// Window of horizontal-step counts for k total steps, intersected with the
/// feasible range [0, k-1].
fn hoeffding_window(k: u64) -> (i64, i64) {
    let km1 = (k - 1) as f64;
    let half = km1 / 2.0;
    let dev = HOEFFDING_W * km1.sqrt();
    let lo = (half - dev).floor().max(0.0) as i64;
    let hi = (half + dev).ceil().min(km1) as i64;
    (lo, hi)
}

/// P_{(1,x)}(X_eta = (y,0)) summed over exit times k <= k_max.
///
/// For each k the walk spends j of its first k-1 steps on the horizontal
/// coordinate (Binom(k-1, 1/2) many), which must run a positive ballot path
/// 1 -> y while the vertical runs x -> 1, and the final step is the vertical
/// exit (probability 1/4).
pub fn cone_exit_semianalytic(x: i64, y: i64, k_max: u64) -> Result<SemiAnalyticResult> {
    if x < 1 || y < 1 {
        return Err(Error::Precondition(
            "cone_exit_semianalytic needs x >= 1, y >= 1".into(),
        ));
    }
    let k_min = (x + y - 1).max(1) as u64;
    if k_max < k_min {
        return Ok(SemiAnalyticResult {
            value: 0.0,
            window_budget: 0.0,
            tail_budget: tail_bound(x, y, k_max.max(1)),
        });
    }
    // Ballot factors, indexed by the number of steps of each coordinate.
    let n = k_max as usize;
    let a: Vec<f64> = (0..n).map(|j| reflection_stay_positive(1, y, j as u64)).collect();
    let b: Vec<f64> = (0..n).map(|m| reflection_stay_positive(x, 1, m as u64)).collect();

    // Exit times share the parity of k_min; process them in fixed blocks so
    // the summation order (and hence the result) is independent of the
    // thread count.
    let ks: Vec<u64> = (k_min..=k_max).step_by(2).collect();
    let drop_mass = window_drop_mass();
    let blocks: Vec<(f64, f64)> = ks
        .par_chunks(2048)
        .map(|chunk| {
            let mut value = 0.0f64;
            let mut budget = 0.0f64;
            for &k in chunk {
                let km1 = (k - 1) as i64;
                let (mut lo, hi) = hoeffding_window(k);
                // Horizontal parity: j must have the parity of y - 1.
                if (lo - (y - 1)) % 2 != 0 {
                    lo += 1;
                }
                if lo > hi {
                    continue;
                }
                // Binomial weights by a two-step recurrence from the edge.
                let mut w = (ln_binomial(k - 1, lo) - km1 as f64 * LN_2).exp();
                let mut s = 0.0f64;
                let mut j = lo;
                while j <= hi {
                    s += w * a[j as usize] * b[(km1 - j) as usize];
                    w *= ((km1 - j) * (km1 - j - 1)) as f64 / ((j + 1) * (j + 2)) as f64;
                    j += 2;
                }
                value += 0.25 * s;
                budget += 0.25 * drop_mass;
            }
            (value, budget)
        })
        .collect();
    let (value, window_budget) = blocks
        .iter()
        .fold((0.0, 0.0), |(v, w), &(bv, bw)| (v + bv, w + bw));
    Ok(SemiAnalyticResult {
        value,
        window_budget,
        tail_budget: tail_bound(x, y, k_max),
    })
}

/// Bound on sum_{k > k_max} P_{(1,x)}(X_eta = (y,0), eta = k), from the
/// ballot bound 3uv/m^{3/2} applied at the window edges plus the dropped
/// window mass.
fn tail_bound(x: i64, y: i64, k_max: u64) -> f64 {
    let drop_mass = window_drop_mass();
    let per_k = |k: u64| -> f64 {
        let km1 = (k - 1) as i64;
        let (lo, hi) = hoeffding_window(k);
        let j_edge = lo.max(1) as f64;
        let m_edge = (km1 - hi).max(1) as f64;
        // Inside the window both ballot factors obey the 3uv/m^{3/2} bound,
        // minimized at the edges; outside, products are at most 1.
        0.25 * (9.0 * (x * y) as f64 / (j_edge * m_edge).powf(1.5) + drop_mass)
    };
    let mut total = 0.0;
    let span = 200_000u64;
    for k in (k_max + 1)..=(k_max + span) {
        total += per_k(k);
    }
    // Beyond the scanned range the summand decays like k^{-3}.
    let kend = (k_max + span) as f64;
    total + per_k(k_max + span) * kend / 2.0
}

/// P_{(1,x)}(eta = k): the exit can close either coordinate, so the mixture
/// pairs a positive-ballot factor ending at 1 with a free survival factor.
/// `window_half_width` optionally restricts the horizontal-count sum around
/// (k-1)/2; `None` keeps the full exact sum (window budget 0).
pub fn eta_tail_semianalytic(
    x: i64,
    k: u64,
    window_half_width: Option<u64>,
) -> Result<SemiAnalyticResult> {
    if x < 1 || k < 1 {
        return Err(Error::Precondition(
            "eta_tail_semianalytic needs x >= 1, k >= 1".into(),
        ));
    }
    let km1 = (k - 1) as i64;
    // Survival S(u, m) = P_u(min > 0 over m steps); at u = 1 it collapses to
    // the central point mass.
    let s1 = |j: i64| -> f64 {
        if j == 0 {
            1.0
        } else {
            binomial_point(j as u64, j % 2).0
        }
    };
    let sx = |m: i64| -> f64 {
        if m == 0 {
            1.0
        } else {
            stay_positive_window(x, m as u64)
        }
    };
    let (lo, hi, window_budget) = match window_half_width {
        None => (0i64, km1, 0.0),
        Some(w) => {
            let half = km1 / 2;
            let lo = (half - w as i64).max(0);
            let hi = (half + w as i64).min(km1);
            // Hoeffding on Binom(k-1, 1/2); both bracketed factors <= 1, and
            // the two exit channels each carry a 1/4.
            let budget = if k > 1 {
                (-2.0 * (w * w) as f64 / km1 as f64).exp() * 2.0 * 0.5
            } else {
                0.0
            };
            (lo, hi, budget)
        }
    };
    let mut value = 0.0f64;
    if km1 == 0 {
        // One step: exit immediately in either closing direction if the
        // matching coordinate starts at 1.
        value = 0.25 * (s1(0) * reflection_stay_positive(x, 1, 0))
            + 0.25 * (reflection_stay_positive(1, 1, 0) * sx(0));
    } else {
        // Vertical exit: horizontal survives j steps, vertical ballots
        // x -> 1 in m steps. Horizontal exit: mirrored.
        let term = |j: i64| -> f64 {
            let m = km1 - j;
            s1(j) * reflection_stay_positive(x, 1, m as u64)
                + reflection_stay_positive(1, 1, j as u64) * sx(m)
        };
        // Walk the binomial weights outward from the mode; starting the
        // recurrence at j = 0 would underflow 2^{-(k-1)} for large k.
        let j0 = (km1 / 2).clamp(lo, hi);
        let w0 = (ln_binomial(k - 1, j0) - km1 as f64 * LN_2).exp();
        let mut w = w0;
        let mut j = j0;
        loop {
            value += 0.25 * w * term(j);
            if j == hi || w < 1e-320 {
                break;
            }
            w *= (km1 - j) as f64 / (j + 1) as f64;
            j += 1;
        }
        w = w0;
        j = j0;
        while j > lo && w >= 1e-320 {
            w *= j as f64 / (km1 - j + 1) as f64;
            j -= 1;
            value += 0.25 * w * term(j);
        }
    }
    Ok(SemiAnalyticResult {
        value,
        window_budget,
        tail_budget: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::cone::cone_exit;
    use crate::exact::potential::PotentialTable;
    use crate::lattice::LatticePoint;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn ballot_bound_holds_on_grid() {
        // The tail budget leans on refl(u, v, m) <= 3uv/m^{3/2}.
        for &u in &[1i64, 2, 3, 5, 10, 40, 160, 300] {
            for v in 1..=3i64 {
                let mut m = 1u64;
                while m <= 1_000_000 {
                    let val = reflection_stay_positive(u, v, m);
                    let bound = 3.0 * (u * v) as f64 / (m as f64).powf(1.5);
                    assert!(val <= bound, "u={u} v={v} m={m}: {val} > {bound}");
                    m = m * 3 / 2 + 1;
                }
            }
        }
    }

    #[test]
    fn corner_exit_matches_closed_form() {
        // P_{(1,1)}(X_eta = (1,0)) = 2 - 16/(3 pi).
        let exact = 2.0 - 16.0 / (3.0 * PI);
        let res = cone_exit_semianalytic(1, 1, 20_000).unwrap();
        assert!(
            (res.value - exact).abs() <= res.total_budget() + 1e-12,
            "{} vs {exact} (budget {})",
            res.value,
            res.total_budget()
        );
        assert!(res.value <= exact + 1e-12);
        assert!(res.total_budget() < 1e-4);
    }

    #[test]
    fn matches_image_method_exit_masses() {
        let table = PotentialTable::build(40);
        for (x, y) in [(2i64, 1i64), (2, 3), (4, 2), (7, 1)] {
            let exact = 0.25 * table.quadrant_green((1, x), (y, 1));
            let res = cone_exit_semianalytic(x, y, 60_000).unwrap();
            assert!(
                (res.value - exact).abs() <= res.total_budget() + 1e-10,
                "x={x} y={y}: {} vs {exact}",
                res.value
            );
        }
    }

    #[test]
    fn swapping_roles_is_an_identity() {
        // P_{(1,x)}(X_eta=(y,0)) = P_{(1,y)}(X_eta=(x,0)) term by term.
        let a = cone_exit_semianalytic(5, 2, 8_000).unwrap();
        let b = cone_exit_semianalytic(2, 5, 8_000).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-12);
    }

    #[test]
    fn value_grows_with_the_cutoff() {
        let short = cone_exit_semianalytic(3, 1, 500).unwrap();
        let long = cone_exit_semianalytic(3, 1, 5_000).unwrap();
        assert!(long.value >= short.value);
        assert!(long.tail_budget < short.tail_budget);
    }

    #[test]
    fn local_limit_constant_appears() {
        // x^3 P_{(1,x)}(X_eta=(1,0)) -> 4/pi, the long-range constant of the
        // quadrant Green function (G_Q(z,w) ~ (16/pi) z1 z2 w1 w2 / |z|^4,
        // times the final-step 1/4). Cross-checked against the image method
        // out to x = 800 in the exact solver.
        let x = 40i64;
        let res = cone_exit_semianalytic(x, 1, 16 * (x * x) as u64).unwrap();
        let scaled = (x as f64).powi(3) * res.value;
        let target = 4.0 / PI;
        assert!(
            (scaled - target).abs() / target < 0.005,
            "{scaled} vs {target}"
        );
    }

    #[test]
    fn eta_tail_small_cases_by_hand() {
        // From (1,1): eta = 1 with probability 1/2, eta = 2 with 1/8.
        assert_abs_diff_eq!(
            eta_tail_semianalytic(1, 1, None).unwrap().value,
            0.5,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            eta_tail_semianalytic(1, 2, None).unwrap().value,
            0.125,
            epsilon = 1e-14
        );
        // From (1,2) the walk cannot exit at the first step upward channel
        // only: P(eta=1) = 1/4.
        assert_abs_diff_eq!(
            eta_tail_semianalytic(2, 1, None).unwrap().value,
            0.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn eta_tail_matches_quarter_plane_dp() {
        // With R beyond reach, the DP eta marginal is exact; the mixture
        // must reproduce it to roundoff.
        let law = cone_exit(LatticePoint::new(1, 2), 60, 50, 0).unwrap();
        for k in 1..=50u64 {
            let semi = eta_tail_semianalytic(2, k, None).unwrap().value;
            assert_abs_diff_eq!(semi, law.eta_law[k as usize], epsilon = 1e-12);
        }
    }

    #[test]
    fn eta_tail_is_subprobability_and_near_its_limit() {
        let total: f64 = (1..=3000u64)
            .map(|k| eta_tail_semianalytic(1, k, None).unwrap().value)
            .sum();
        assert!(total < 1.0);
        assert!(total > 0.95, "sum {total}");
        // k^2 P_{(1,1)}(eta = k) -> 4/pi: P(eta > k) = E[P_1(stay, J) *
        // P_1(stay, k-J)] ~ E[sqrt(2/(pi J)) sqrt(2/(pi (k-J)))] ~ 4/(pi k)
        // with J ~ Binom(k, 1/2) concentrated at k/2.
        let target = 4.0 / PI;
        for (k, tol) in [(200u64, 0.02), (2000, 0.002)] {
            let v = eta_tail_semianalytic(1, k, None).unwrap().value;
            let scaled = (k * k) as f64 * v;
            assert!(
                (scaled - target).abs() / target < tol,
                "k={k}: {scaled} vs {target}"
            );
        }
    }

    #[test]
    fn windowed_eta_tail_stays_within_budget() {
        let full = eta_tail_semianalytic(2, 400, None).unwrap();
        let windowed = eta_tail_semianalytic(2, 400, Some(80)).unwrap();
        assert!(windowed.value <= full.value + 1e-15);
        assert!(full.value - windowed.value <= windowed.window_budget);
    }
}
