//! The acceptance suite: one check per verification item, each returning a
//! pass/fail verdict with the measured values, sized by a [`VerifyConfig`].
//!
//! Checks 5, 6 and 9 compare against the published asymptotic constants
//! (16/pi, 8/pi, and the (pi/8)-normalized renewal constants). Every exact
//! oracle in this crate (time-stepping DP, image-method Green function,
//! ballot mixture) and the Monte Carlo engine agree that the true limits are
//! 4/pi, 4/pi, and twice the (pi/8)-normalized constants respectively, so
//! those sub-checks fail by the corresponding factor; the verdict lines
//! report both comparisons.

use serde::{Deserialize, Serialize};

use crate::asymptotics::combinatorics::{
    binomial_point, chernoff_window_bound, reflection_stay_positive, srw_upper_tail,
};
use crate::asymptotics::semianalytic::{cone_exit_semianalytic, eta_tail_semianalytic};
use crate::error::Result;
use crate::exact::axis::{axis_absorption, reversibility_residual, AxisChain};
use crate::exact::cone::{cone_exit, reverse_sum};
use crate::exact::invariant::{constants, embedded_invariant, ChainKind};
use crate::excursion::builtin_functionals;
use crate::lattice::{
    step, transition_distribution, Arm, LatticePoint, WalkParams,
};
use crate::measure::{ols_slope, shell_slope};
use crate::montecarlo::{replicate, Campaign};
use crate::rng::CounterRng;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CheckResult {
    fn ok(name: &str, passed: bool, details: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            details,
        }
    }

    fn from_error(name: &str, e: &crate::error::Error) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: false,
            details: format!("error: {e}"),
        }
    }
}

/// Problem sizes for one verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub alpha: f64,
    pub seed: u64,
    /// Truncation radius of the axis chain and the embedded chains.
    pub r: usize,
    /// Kernel checks cover all sites with max_norm up to this cap.
    pub kernel_norm_cap: i64,
    pub reversibility_pairs: usize,
    /// Backward-DP truncation for the boundary-sum identity.
    pub reverse_r: i64,
    pub reverse_t: usize,
    /// Forward-DP sizes (x, R, T) for the DP/semi-analytic cross-checks.
    pub dp_grid: Vec<(i64, i64, usize)>,
    /// Start norms for the local-limit scaling check.
    pub local_xs: Vec<i64>,
    /// Exit-time tail checkpoint and DP cross-check range.
    pub eta_k: u64,
    pub eta_dp_kmax: usize,
    /// Monte Carlo campaign sizes.
    pub mc_n: u64,
    pub mc_replicas: u32,
    pub mc_snapshots: Vec<u64>,
    /// Sample count for the exit-bracket Monte Carlo oracle.
    pub exit_mc_samples: u64,
}

impl VerifyConfig {
    /// The acceptance-scale configuration.
    pub fn full(alpha: f64, seed: u64) -> Self {
        VerifyConfig {
            alpha,
            seed,
            r: 200,
            kernel_norm_cap: 1000,
            reversibility_pairs: 100,
            reverse_r: 140,
            reverse_t: 60_000,
            dp_grid: vec![
                (2, 60, 50_000),
                (5, 100, 100_000),
                (10, 150, 200_000),
                (20, 200, 250_000),
                (30, 250, 300_000),
            ],
            local_xs: vec![40, 80, 160],
            eta_k: 2000,
            eta_dp_kmax: 200,
            mc_n: 10_000_000,
            mc_replicas: 50,
            mc_snapshots: vec![100_000, 1_000_000],
            exit_mc_samples: 1_000_000,
        }
    }

    /// A reduced configuration for smoke runs and determinism checks.
    pub fn quick(alpha: f64, seed: u64) -> Self {
        VerifyConfig {
            alpha,
            seed,
            r: 80,
            kernel_norm_cap: 100,
            reversibility_pairs: 20,
            reverse_r: 60,
            reverse_t: 8_000,
            dp_grid: vec![(2, 60, 20_000), (5, 80, 50_000)],
            local_xs: vec![20, 40],
            eta_k: 400,
            eta_dp_kmax: 60,
            mc_n: 200_000,
            mc_replicas: 4,
            mc_snapshots: vec![50_000],
            exit_mc_samples: 100_000,
        }
    }
}

const DIHEDRAL_GENERATORS: [fn(LatticePoint) -> LatticePoint; 2] = [
    |p| LatticePoint::new(p.x2, p.x1),
    |p| LatticePoint::new(-p.x1, p.x2),
];

/// Criterion 1: transition rows are stochastic and dihedral-symmetric.
pub fn check_kernel_soundness(cfg: &VerifyConfig) -> CheckResult {
    let name = "1-kernel-soundness";
    let mut worst_sum = 0.0f64;
    let mut worst_sym = 0.0f64;
    for alpha in [1.5, 2.0, 3.5, 4.0] {
        let params = match WalkParams::new(alpha) {
            Ok(p) => p,
            Err(e) => return CheckResult::from_error(name, &e),
        };
        let cap = cfg.kernel_norm_cap;
        for x1 in -cap..=cap {
            for x2 in -cap..=cap {
                let p = LatticePoint::new(x1, x2);
                let dist = transition_distribution(p, &params);
                worst_sum = worst_sum.max((dist.total_mass() - 1.0).abs());
                for g in DIHEDRAL_GENERATORS {
                    let mirrored = transition_distribution(g(p), &params);
                    for &(q, pr) in &dist.outcomes {
                        worst_sym = worst_sym.max((mirrored.prob_to(g(q)) - pr).abs());
                    }
                }
            }
        }
    }
    let passed = worst_sum <= 1e-12 && worst_sym <= 1e-13;
    CheckResult::ok(
        name,
        passed,
        format!(
            "max |row sum - 1| = {worst_sum:.2e}, max dihedral gap = {worst_sym:.2e} \
             over all sites with max_norm <= {} and alpha in {{1.5, 2, 3.5, 4}}",
            cfg.kernel_norm_cap
        ),
    )
}

/// Criterion 2: the axis reversibility identity on random site pairs.
pub fn check_reversibility(cfg: &VerifyConfig) -> CheckResult {
    let name = "2-reversibility";
    let params = WalkParams::new(cfg.alpha).unwrap();
    let mut rng = CounterRng::new(cfg.seed, 1_000);
    let arms = [Arm::PlusX1, Arm::MinusX1, Arm::PlusX2, Arm::MinusX2];
    let mut worst = 0.0f64;
    let mut done = 0usize;
    while done < cfg.reversibility_pairs {
        let a = arms[(rng.next_u64() % 4) as usize];
        // Alternate same-arm and cross-arm pairs; every other pair is drawn
        // with a small norm gap, where the identity carries real mass.
        let b = if done % 2 == 0 { a } else { arms[(rng.next_u64() % 4) as usize] };
        // Norms start at 2: the cone side of a norm-1 site is a corner,
        // which collects exits from two arms, and the site-law identity
        // holds there only with per-arm exit bookkeeping.
        let cap = (cfg.r as i64 / 4).max(8);
        let i = 2 + (rng.next_u64() % (cap - 1) as u64) as i64;
        let j = if done % 4 < 2 {
            (i + 1 + (rng.next_u64() % 5) as i64).min(cap)
        } else {
            2 + (rng.next_u64() % (cap - 1) as u64) as i64
        };
        let (x, y) = (a.site(i), b.site(j));
        if x == y {
            continue;
        }
        match reversibility_residual(x, y, params, cfg.r) {
            Ok(res) => worst = worst.max(res),
            Err(e) => return CheckResult::from_error(name, &e),
        }
        done += 1;
    }
    CheckResult::ok(
        name,
        worst <= 1e-8,
        format!(
            "max |LHS - RHS| = {worst:.2e} over {} random axis pairs (alpha = {}, R = {})",
            cfg.reversibility_pairs, cfg.alpha, cfg.r
        ),
    )
}

/// Criterion 3: the boundary sum of hitting probabilities equals 2.
pub fn check_reverse_sum(cfg: &VerifyConfig) -> CheckResult {
    let name = "3-boundary-sum";
    let mut passed = true;
    let mut lines = Vec::new();
    for target in [LatticePoint::new(0, 1), LatticePoint::new(0, 3), LatticePoint::new(0, 10)] {
        let rs = match reverse_sum(target, cfg.reverse_r, cfg.reverse_t) {
            Ok(v) => v,
            Err(e) => return CheckResult::from_error(name, &e),
        };
        let ok = rs.raw >= 1.9 && rs.raw <= 2.0 && (rs.extrapolated - 2.0).abs() <= 0.04;
        passed &= ok;
        lines.push(format!(
            "x={target}: raw={:.6}, extrapolated={:.6} ({})",
            rs.raw,
            rs.extrapolated,
            if ok { "ok" } else { "out of band" }
        ));
    }
    CheckResult::ok(name, passed, lines.join("; "))
}

/// Criterion 4: the one-sided cone-entry bracket with an MC cross-check.
pub fn check_exit_bracket(cfg: &VerifyConfig) -> CheckResult {
    let name = "4-exit-bracket";
    let params = WalkParams::new(cfg.alpha).unwrap();
    let chain = match AxisChain::new(params, cfg.r.max(64)) {
        Ok(c) => c,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let mut prev = f64::INFINITY;
    let mut passed = true;
    let mut worst_excess = 0.0f64;
    let mut p_mc_target = 0.0f64;
    for i in 2..=50i64 {
        let g = match chain.green_from(LatticePoint::new(0, i)) {
            Ok(g) => g,
            Err(e) => return CheckResult::from_error(name, &e),
        };
        let p = chain.absorption_law(&g).mass_at(LatticePoint::new(1, i));
        if i == 5 {
            p_mc_target = p;
        }
        let scaled = 4.0 * (i as f64).powf(cfg.alpha) * p;
        let upper = 1.0 + 10.0 * (i as f64).powf(-cfg.alpha);
        if !(scaled > 1.0 && scaled < upper && scaled < prev) {
            passed = false;
        }
        worst_excess = worst_excess.max(scaled - 1.0);
        prev = scaled;
    }
    // Independent oracle: direct simulation of the axis walk from (0,5).
    let mut rng = CounterRng::new(cfg.seed, 2_000);
    let mut hits = 0u64;
    for _ in 0..cfg.exit_mc_samples {
        let mut pos = LatticePoint::new(0, 5);
        while pos.on_axis() {
            pos = step(pos, &params, &mut rng);
        }
        if pos == LatticePoint::new(1, 5) {
            hits += 1;
        }
    }
    let p_hat = hits as f64 / cfg.exit_mc_samples as f64;
    let sigma = (p_mc_target * (1.0 - p_mc_target) / cfg.exit_mc_samples as f64).sqrt();
    let mc_ok = (p_hat - p_mc_target).abs() <= 5.0 * sigma;
    passed &= mc_ok;
    CheckResult::ok(
        name,
        passed,
        format!(
            "4 i^a P in (1, 1+10 i^-a) and decreasing for i in [2,50] (max excess {worst_excess:.3e}); \
             MC oracle at i=5: {p_hat:.6} vs exact {p_mc_target:.6} ({} samples, {})",
            cfg.exit_mc_samples,
            if mc_ok { "within 5 sigma" } else { "outside 5 sigma" }
        ),
    )
}

/// Criterion 5: the exit-site local limit, against the published constant
/// 16/pi and against the DP oracle.
pub fn check_local_limit(cfg: &VerifyConfig) -> CheckResult {
    let name = "5-local-limit";
    let spec_target = 16.0 / PI;
    let true_limit = 4.0 / PI;
    let mut scaled = Vec::new();
    for &x in &cfg.local_xs {
        let res = match cone_exit_semianalytic(x, 1, 16 * (x * x) as u64) {
            Ok(r) => r,
            Err(e) => return CheckResult::from_error(name, &e),
        };
        scaled.push((x, (x as f64).powi(3) * res.value));
    }
    let last = scaled.last().unwrap().1;
    let spec_band_ok = (last - spec_target).abs() / spec_target <= 0.10;
    let spec_trend_ok = scaled
        .windows(2)
        .all(|w| (w[1].1 - spec_target).abs() < (w[0].1 - spec_target).abs());
    let true_band = (last - true_limit).abs() / true_limit;
    let true_trend_ok = scaled
        .windows(2)
        .all(|w| (w[1].1 - true_limit).abs() < (w[0].1 - true_limit).abs());

    // DP versus semi-analytic, with every truncation budget on the table.
    let mut dp_ok = true;
    let mut worst_rel = 0.0f64;
    for &(x, r, t) in &cfg.dp_grid {
        let dp = match cone_exit(LatticePoint::new(1, x), r, t, 0) {
            Ok(d) => d,
            Err(e) => return CheckResult::from_error(name, &e),
        };
        for y in 1..=3i64 {
            let semi = match cone_exit_semianalytic(x, y, 16 * (x * x).max(400) as u64) {
                Ok(s) => s,
                Err(e) => return CheckResult::from_error(name, &e),
            };
            let tol = 1e-6 + semi.total_budget() + dp.site_law.deficit;
            let gap = (dp.site_law.mass_at(LatticePoint::new(y, 0)) - semi.value).abs();
            if gap > tol {
                dp_ok = false;
            }
            worst_rel = worst_rel.max(gap / tol);
        }
    }
    let passed = spec_band_ok && spec_trend_ok && dp_ok;
    let pts: Vec<String> = scaled.iter().map(|(x, s)| format!("x={x}: {s:.5}")).collect();
    CheckResult::ok(
        name,
        passed,
        format!(
            "x^3 P [{}]; vs 16/pi = {spec_target:.4}: band {}, trend {}; \
             vs 4/pi = {true_limit:.4}: rel dev {true_band:.2e}, trend {}; \
             DP agreement {} (worst gap/tol = {worst_rel:.2e})",
            pts.join(", "),
            if spec_band_ok { "ok" } else { "FAIL" },
            if spec_trend_ok { "ok" } else { "FAIL" },
            if true_trend_ok { "ok" } else { "fail" },
            if dp_ok { "ok" } else { "FAIL" },
        ),
    )
}

/// Criterion 6: the exit-time tail, against the published constant 8/pi and
/// against the DP oracle.
pub fn check_eta_tail(cfg: &VerifyConfig) -> CheckResult {
    let name = "6-exit-time-tail";
    let spec_target = 8.0 / PI;
    let true_limit = 4.0 / PI;
    let v = match eta_tail_semianalytic(1, cfg.eta_k, None) {
        Ok(r) => r.value,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let scaled = (cfg.eta_k * cfg.eta_k) as f64 * v;
    let spec_ok = (scaled - spec_target).abs() / spec_target <= 0.10;
    let true_dev = (scaled - true_limit).abs() / true_limit;

    let kmax = cfg.eta_dp_kmax;
    let dp = match cone_exit(LatticePoint::new(1, 1), kmax as i64 + 3, kmax, 0) {
        Ok(d) => d,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let mut worst = 0.0f64;
    for k in 1..=kmax {
        let semi = match eta_tail_semianalytic(1, k as u64, None) {
            Ok(r) => r.value,
            Err(e) => return CheckResult::from_error(name, &e),
        };
        worst = worst.max((semi - dp.eta_law[k]).abs());
    }
    let dp_ok = worst <= 1e-8;
    CheckResult::ok(
        name,
        spec_ok && dp_ok,
        format!(
            "k^2 P(eta=k) = {scaled:.5} at k = {}; vs 8/pi = {spec_target:.4}: {}; \
             vs 4/pi = {true_limit:.4}: rel dev {true_dev:.2e}; \
             DP cross-check k <= {kmax}: max gap {worst:.2e} ({})",
            cfg.eta_k,
            if spec_ok { "ok" } else { "FAIL" },
            if dp_ok { "ok" } else { "FAIL" },
        ),
    )
}

/// Criterion 7: the ballot combinatorics against brute-force enumeration and
/// the stated point values.
pub fn check_combinatorics(_cfg: &VerifyConfig) -> CheckResult {
    let name = "7-combinatorics";
    // Exhaustive path enumeration.
    let mut worst_rel = 0.0f64;
    for x in 1..=4i64 {
        for y in 1..=4i64 {
            for k in 1..=14u32 {
                let mut count = 0u64;
                for mask in 0u32..(1 << k) {
                    let mut z = x;
                    let mut ok = true;
                    for b in 0..k {
                        z += if mask >> b & 1 == 1 { 1 } else { -1 };
                        if z <= 0 {
                            ok = false;
                            break;
                        }
                    }
                    if ok && z == y {
                        count += 1;
                    }
                }
                let brute = count as f64 / (1u64 << k) as f64;
                let refl = reflection_stay_positive(x, y, k as u64);
                let gap = (refl - brute).abs();
                let rel = if brute > 0.0 { gap / brute } else { gap };
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    let enum_ok = worst_rel <= 1e-12;

    let (exact, gaussian) = binomial_point(100, 0);
    let point_ok = (exact / 0.0795892 - 1.0).abs() <= 1e-6;
    let gauss_ok = (gaussian / exact - 1.0).abs() <= 0.003;

    // Tail bound over the stated grid: for x = 50 and k up to x^2, the
    // out-of-window upper tail of the slower coordinate is exponentially
    // small in x^2/k.
    let x = 50i64;
    let mut bound_ok = true;
    let mut k = x as u64;
    while k <= (x * x) as u64 {
        let (_, (_, hi)) = chernoff_window_bound(k, 0.3);
        let steps = (k as i64 - 1 - hi).max(1) as u64;
        let tail = srw_upper_tail(steps, x - 1);
        if tail > (-0.15 * (x * x) as f64 / k as f64).exp() {
            bound_ok = false;
        }
        k = (k as f64 * 1.7) as u64 + 1;
    }
    let passed = enum_ok && point_ok && gauss_ok && bound_ok;
    CheckResult::ok(
        name,
        passed,
        format!(
            "enumeration x,y <= 4, k <= 14: worst rel gap {worst_rel:.2e}; \
             binomial_point(100,0) = {exact:.7} (gaussian off by {:.2e}); tail bound grid {}",
            (gaussian / exact - 1.0).abs(),
            if bound_ok { "ok" } else { "FAIL" }
        ),
    )
}

/// Criterion 8: invariant-measure tail slopes and stationarity residuals.
pub fn check_invariant_tails(cfg: &VerifyConfig) -> CheckResult {
    let name = "8-invariant-tails";
    let params = WalkParams::new(cfg.alpha).unwrap();
    let star = match embedded_invariant(ChainKind::AxisEntry, params, cfg.r, 1e-10) {
        Ok(v) => v,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let dagger = match embedded_invariant(ChainKind::ConeEntry, params, cfg.r, 1e-10) {
        Ok(v) => v,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let hi_star = (cfg.r as i64 / 5).clamp(12, 40);
    let hi_dag = (cfg.r as i64 / 13).clamp(6, 15);
    let (s_star, _) = shell_slope(&star.measure, (5, hi_star), 1.0, 0.0, |_| 4.0)
        .unwrap_or((f64::NAN, f64::NAN));
    let (s_dag, _) = shell_slope(
        &dagger.measure,
        (2, hi_dag),
        1.0,
        0.0,
        |u| if u == 1 { 4.0 } else { 8.0 },
    )
    .unwrap_or((f64::NAN, f64::NAN));
    let slopes_ok = (s_star + 3.0).abs() <= 0.3 && (s_dag + 6.0).abs() <= 0.5;
    let resid_ok = star.residual <= 1e-9 && dagger.residual <= 1e-9;
    CheckResult::ok(
        name,
        slopes_ok && resid_ok,
        format!(
            "pi* slope {s_star:.3} over [5,{hi_star}] (want -3 +- 0.3), \
             pi-dagger slope {s_dag:.3} over [2,{hi_dag}] (want -6 +- 0.5); \
             residuals {:.2e} / {:.2e} (<= 1e-9: {})",
            star.residual,
            dagger.residual,
            if resid_ok { "ok" } else { "FAIL" }
        ),
    )
}

/// Criterion 9: Monte Carlo renewal rates against the exact-solver
/// constants, with the snapshot trend.
pub fn check_renewal_rates(cfg: &VerifyConfig) -> CheckResult {
    let name = "9-renewal-rates";
    let params = WalkParams::new(cfg.alpha).unwrap();
    let cons = match constants(params, cfg.r, 1e-10, false) {
        Ok(c) => c,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let mut campaign = Campaign::new(params, cfg.mc_n, cfg.mc_replicas, cfg.seed);
    campaign.functionals = builtin_functionals();
    campaign.snapshots = cfg.mc_snapshots.clone();
    let report = match replicate(&campaign) {
        Ok(r) => r,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    // Third column: the parity-corrected limit (constants are doubled, so
    // the reciprocal cone-time target is halved).
    let targets = [
        ("excursion_count", cons.c1, 2.0),
        ("axis_local_time", cons.c, 2.0),
        ("origin_local_time", cons.c_prime, 2.0),
        ("cone_time_ratio", 1.0 / cons.c1, 0.5),
    ];
    let mut spec_ok = true;
    let mut lines = Vec::new();
    for (est_name, target, corr) in targets {
        let series: Vec<f64> = report
            .snapshots
            .iter()
            .map(|s| {
                s.estimators
                    .iter()
                    .find(|e| e.name == est_name)
                    .map(|e| e.mean)
                    .unwrap_or(f64::NAN)
            })
            .collect();
        let last = *series.last().unwrap();
        let band = (last - target).abs() / target <= 0.25;
        let trend = series
            .windows(2)
            .all(|w| (w[1] - target).abs() < (w[0] - target).abs());
        // The same comparisons against the parity-corrected limits.
        let target2 = corr * target;
        let band2 = (last - target2).abs() / target2 <= 0.25;
        let trend2 = series
            .windows(2)
            .all(|w| (w[1] - target2).abs() < (w[0] - target2).abs());
        spec_ok &= band && trend;
        lines.push(format!(
            "{est_name}: {last:.4} vs {target:.4} (band {}, trend {}) | vs corrected {target2:.4} (band {}, trend {})",
            b(band), b(trend), b(band2), b(trend2)
        ));
    }
    CheckResult::ok(name, spec_ok, lines.join("; "))
}

fn b(v: bool) -> &'static str {
    if v {
        "ok"
    } else {
        "FAIL"
    }
}

/// Criterion 10: axis absorption-time moments and survival decay.
pub fn check_axis_moments(cfg: &VerifyConfig) -> CheckResult {
    let name = "10-axis-moments";
    let params = WalkParams::new(cfg.alpha).unwrap();
    let r = (cfg.r * 2).max(400);
    let res = match axis_absorption(LatticePoint::new(0, 100), params, r, 0) {
        Ok(v) => v,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let m1 = res.expected_rho / 100.0;
    let m2 = res.expected_rho_sq / 10_000.0;
    let surv = match axis_absorption(LatticePoint::new(0, 3), params, r, 1000) {
        Ok(v) => v.survival,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let pts: Vec<(f64, f64)> = (2..=20)
        .map(|i| {
            let m = 50 * i;
            ((m as f64).ln(), surv[m].max(f64::MIN_POSITIVE).ln())
        })
        .collect();
    let (slope, _) = ols_slope(&pts);
    let passed = (0.95..=1.05).contains(&m1) && (0.9..=1.1).contains(&m2) && slope < -5.0;
    CheckResult::ok(
        name,
        passed,
        format!(
            "E[rho]/100 = {m1:.4} (want [0.95,1.05]), E[rho^2]/100^2 = {m2:.4} (want [0.9,1.1]), \
             survival slope {slope:.2} on m in [100,1000] (want < -5)"
        ),
    )
}

/// Criterion 11: byte-identical artifacts across thread counts.
pub fn check_determinism(cfg: &VerifyConfig) -> CheckResult {
    let name = "11-determinism";
    let run = |jobs: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            let params = WalkParams::new(cfg.alpha)?;
            let mut campaign = Campaign::new(params, 100_000, 4, cfg.seed);
            campaign.snapshots = vec![20_000];
            let report = replicate(&campaign)?;
            let semi = cone_exit_semianalytic(20, 1, 40_000)?;
            Ok(format!(
                "{}|{:.17e}|{:.17e}",
                serde_json::to_string(&report)?,
                semi.value,
                semi.total_budget()
            ))
        })
    };
    let a = match run(1) {
        Ok(v) => v,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let c = match run(4) {
        Ok(v) => v,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let d = match run(4) {
        Ok(v) => v,
        Err(e) => return CheckResult::from_error(name, &e),
    };
    let passed = a == c && c == d;
    CheckResult::ok(
        name,
        passed,
        format!(
            "artifact bytes identical across --jobs 1/4/4: {} ({} bytes)",
            passed,
            a.len()
        ),
    )
}

/// Runs the full suite in order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckResult> {
    vec![
        check_kernel_soundness(cfg),
        check_reversibility(cfg),
        check_reverse_sum(cfg),
        check_exit_bracket(cfg),
        check_local_limit(cfg),
        check_eta_tail(cfg),
        check_combinatorics(cfg),
        check_invariant_tails(cfg),
        check_renewal_rates(cfg),
        check_axis_moments(cfg),
        check_determinism(cfg),
    ]
}
