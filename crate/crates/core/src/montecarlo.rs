//! Replicated simulation campaigns: confidence intervals for the local-time
//! estimators, empirical invariant measures with tail-slope fits, and the
//! distributional cross-checks against the exact solvers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::axis::{arm_index, AxisChain, ChainValues};
use crate::excursion::{
    builtin_functionals, theorem_estimates, FunctionalId, RunStats, WalkSim, DURATION_BINS,
};
use crate::lattice::{classify, RegionKind, WalkParams};
use crate::measure::{shell_slope, EmpiricalMeasure};

/// Exponent of the entry-norm exceedance threshold n^{1/2 + 2*eps} with
/// eps = 0.025 (valid for alpha = 4 since eps < (alpha-3)/4).
pub const THRESHOLD_EXPONENT: f64 = 0.55;

/// A reproducible set of independent walks: replica r runs on stream r of
/// the base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub params: WalkParams,
    pub n: u64,
    pub replicas: u32,
    pub base_seed: u64,
    pub functionals: Vec<FunctionalId>,
    /// Intermediate horizons at which per-replica estimates are also
    /// recorded (strictly increasing, below n).
    pub snapshots: Vec<u64>,
}

impl Campaign {
    pub fn new(params: WalkParams, n: u64, replicas: u32, base_seed: u64) -> Self {
        Campaign {
            params,
            n,
            replicas,
            base_seed,
            functionals: builtin_functionals(),
            snapshots: Vec::new(),
        }
    }
}

/// One estimator aggregated across replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStat {
    pub name: String,
    pub mean: f64,
    /// Standard error of the mean across replicas.
    pub stderr: f64,
    pub replicas: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub n: u64,
    pub estimators: Vec<EstimatorStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub campaign: Campaign,
    /// Estimators at the full horizon, including `cone_time_ratio`.
    pub estimators: Vec<EstimatorStat>,
    pub snapshots: Vec<SnapshotStats>,
    /// All replicas merged.
    pub merged: RunStats,
    /// Entry-norm^1.5 blocks aggregated by excursion-index block across
    /// replicas: (count, sum) per block.
    pub norm_blocks: Vec<(u64, f64)>,
}

/// Per-replica estimates at one horizon: the log(n)/n-scaled counters plus
/// the cone-time ratio sum(eta_i - rho_{i-1}) / (m log m).
fn horizon_estimates(stats: &RunStats) -> Vec<(String, f64)> {
    let mut est = theorem_estimates(stats);
    let m = stats.excursions as f64;
    let ratio = if stats.excursions >= 2 {
        stats.sum_cone_time as f64 / (m * m.ln())
    } else {
        f64::NAN
    };
    est.push(("cone_time_ratio".to_string(), ratio));
    est
}

fn aggregate(per_replica: &[Vec<(String, f64)>]) -> Vec<EstimatorStat> {
    let r = per_replica.len();
    let names: Vec<&String> = per_replica[0].iter().map(|(n, _)| n).collect();
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let vals: Vec<f64> = per_replica.iter().map(|e| e[i].1).collect();
            let mean = vals.iter().sum::<f64>() / r as f64;
            let var =
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r as f64 - 1.0);
            EstimatorStat {
                name: (*name).clone(),
                mean,
                stderr: (var / r as f64).sqrt(),
                replicas: r as u32,
            }
        })
        .collect()
}

/// Runs the campaign's replicas concurrently and merges them in replica
/// order, so the report is a pure function of the campaign.
pub fn replicate(campaign: &Campaign) -> Result<EstimateReport> {
    if campaign.replicas < 2 {
        return Err(Error::Precondition("replicate needs at least 2 replicas".into()));
    }
    if campaign.n < 2 {
        return Err(Error::Precondition("replicate needs n >= 2".into()));
    }
    let mut last = 0u64;
    for &s in &campaign.snapshots {
        if s <= last || s >= campaign.n {
            return Err(Error::Precondition(
                "snapshots must be strictly increasing and below n".into(),
            ));
        }
        last = s;
    }
    let threshold = (campaign.n as f64).powf(THRESHOLD_EXPONENT);
    type ReplicaOut = (RunStats, Vec<(u64, f64)>, Vec<Vec<(String, f64)>>);
    let runs: Result<Vec<ReplicaOut>> = (0..campaign.replicas)
        .into_par_iter()
        .map(|r| {
            let mut sim = WalkSim::new(
                campaign.params,
                campaign.base_seed,
                r as u64,
                campaign.functionals.clone(),
                threshold,
            );
            let mut snaps = Vec::with_capacity(campaign.snapshots.len() + 1);
            let mut done = 0u64;
            for &s in &campaign.snapshots {
                sim.advance(s - done)?;
                done = s;
                snaps.push(horizon_estimates(&sim.stats));
            }
            sim.advance(campaign.n - done)?;
            snaps.push(horizon_estimates(&sim.stats));
            Ok((sim.stats, sim.norm_blocks, snaps))
        })
        .collect();
    let runs = runs?;

    let mut merged = RunStats::new(campaign.functionals.clone(), threshold);
    let mut norm_blocks: Vec<(u64, f64)> = Vec::new();
    for (stats, blocks, _) in &runs {
        merged.merge(stats);
        for (i, b) in blocks.iter().enumerate() {
            if i == norm_blocks.len() {
                norm_blocks.push(*b);
            } else {
                norm_blocks[i].0 += b.0;
                norm_blocks[i].1 += b.1;
            }
        }
    }
    let n_snap = campaign.snapshots.len();
    let snapshots = (0..=n_snap)
        .map(|si| {
            let per: Vec<Vec<(String, f64)>> =
                runs.iter().map(|(_, _, s)| s[si].clone()).collect();
            SnapshotStats {
                n: if si < n_snap { campaign.snapshots[si] } else { campaign.n },
                estimators: aggregate(&per),
            }
        })
        .collect::<Vec<_>>();
    let estimators = snapshots.last().unwrap().estimators.clone();
    Ok(EstimateReport {
        campaign: campaign.clone(),
        estimators,
        snapshots,
        merged,
        norm_blocks,
    })
}

/// Normalized empirical invariant measures with per-site tail slopes.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantEstimates {
    /// Law of X_{eta_i} (axis entries).
    pub pi_star: EmpiricalMeasure,
    /// Law of X_{rho_i} (cone entries).
    pub pi_dagger: EmpiricalMeasure,
    /// (slope, stderr) of log per-site mass vs log max-norm.
    pub star_slope: (f64, f64),
    pub dagger_slope: (f64, f64),
}

/// Minimum raw count per max-norm shell entering a slope fit.
pub const MIN_SHELL_COUNT: f64 = 30.0;

pub fn empirical_invariants(
    report: &EstimateReport,
    star_band: (i64, i64),
    dagger_band: (i64, i64),
) -> Result<InvariantEstimates> {
    let m = report.merged.excursions;
    if m < 10_000 {
        return Err(Error::Precondition(format!(
            "empirical invariants need >= 10^4 excursions, have {m}"
        )));
    }
    let pi_star = report.merged.entry_histogram.normalized();
    let pi_dagger = report.merged.exit_histogram.normalized();
    let entries = report.merged.entries as f64;
    // Axis shells hold 4 sites; cone-boundary shells hold 8 except the
    // corner shell (+-1, +-1).
    let star_slope = shell_slope(&pi_star, star_band, 1.0 / entries, MIN_SHELL_COUNT, |_| 4.0)
        .ok_or_else(|| Error::Precondition("too few populated shells for the pi* fit".into()))?;
    let dagger_slope = shell_slope(
        &pi_dagger,
        dagger_band,
        1.0 / m as f64,
        MIN_SHELL_COUNT,
        |u| if u == 1 { 4.0 } else { 8.0 },
    )
    .ok_or_else(|| Error::Precondition("too few populated shells for the pi-dagger fit".into()))?;
    Ok(InvariantEstimates {
        pi_star,
        pi_dagger,
        star_slope,
        dagger_slope,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConeTimeCheck {
    /// sum(eta_i - rho_{i-1}) / (m log m), per replica average.
    pub empirical: f64,
    /// (8/pi) E_{pi-dagger}[max_norm], from the exact solver.
    pub target: f64,
    pub ratio: f64,
}

/// Compares the per-excursion cone time against the exact-solver target
/// (8/pi) * e_dagger_norm; that target equals 1/c1 exactly.
pub fn cone_time_check(report: &EstimateReport, e_dagger_norm: f64) -> ConeTimeCheck {
    let reps = report.campaign.replicas as f64;
    let m = report.merged.excursions as f64 / reps;
    let empirical = report.merged.sum_cone_time as f64 / reps / (m * m.ln());
    let target = 8.0 / std::f64::consts::PI * e_dagger_norm;
    ConeTimeCheck {
        empirical,
        target,
        ratio: empirical / target,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    /// Running maximum over i of the prefix mean of max_norm(X_{eta_i})^1.5,
    /// maximized over replicas.
    pub max_prefix_mean_p15: f64,
    /// Overall mean of max_norm(X_{eta_i})^1.5.
    pub mean_p15: f64,
    /// Mean entry norm, which equals E_{pi-hat*}[max_norm] by construction.
    pub mean_norm: f64,
    /// Entries with max_norm above n^0.55, and the threshold used.
    pub threshold_exceed: u64,
    pub norm_threshold: f64,
    /// Mean of norm^1.5 per excursion-index decile (flat when the entry
    /// norms carry no trend).
    pub decile_means_p15: Vec<f64>,
}

pub fn moment_check(report: &EstimateReport) -> MomentCheck {
    let s = &report.merged;
    let entries = s.entries.max(1) as f64;
    let blocks = &report.norm_blocks;
    let mut decile_means_p15 = Vec::new();
    if blocks.len() >= 10 {
        let per = blocks.len() / 10;
        for d in 0..10 {
            let hi = if d == 9 { blocks.len() } else { (d + 1) * per };
            let (mut c, mut v) = (0u64, 0.0f64);
            for b in &blocks[d * per..hi] {
                c += b.0;
                v += b.1;
            }
            decile_means_p15.push(v / c.max(1) as f64);
        }
    }
    MomentCheck {
        max_prefix_mean_p15: s.max_prefix_mean_p15,
        mean_p15: s.sum_entry_norm_p15 / entries,
        mean_norm: report
            .merged
            .entry_histogram
            .normalized()
            .max_norm_moment(1.0),
        threshold_exceed: s.threshold_exceed,
        norm_threshold: s.norm_threshold,
        decile_means_p15,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DurationChiSquare {
    pub statistic: f64,
    pub dof: usize,
    /// 1% critical value of chi-square with `dof` degrees of freedom.
    pub critical_1pct: f64,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
}

/// Chi-square critical value at the 1% level for dof = 20.
const CHI2_1PCT_DOF20: f64 = 37.566;

/// Tests the empirical law of rho_i - eta_i against the exact axis chain's
/// law of rho started from the empirical entry measure. Bins r = 1..=20
/// plus one tail bin.
pub fn duration_chi_square(report: &EstimateReport) -> Result<DurationChiSquare> {
    let s = &report.merged;
    let m: u64 = s.duration_histogram.iter().sum();
    if m < 10_000 {
        return Err(Error::Precondition(format!(
            "chi-square check needs >= 10^4 excursions, have {m}"
        )));
    }
    let r_chain = (s.max_entry_norm as usize + 2).max(64);
    let chain = AxisChain::new(report.campaign.params, r_chain)?;
    let pi_star = s.entry_histogram.normalized();
    let mut mu = ChainValues::zeros(r_chain);
    for (&p, &mass) in pi_star.iter() {
        match classify(p) {
            RegionKind::Origin => mu.origin += mass,
            RegionKind::AxisArm { arm, i } => mu.arms[arm_index(arm)][i as usize] += mass,
            RegionKind::Cone => {
                return Err(Error::Precondition(format!("entry site {p} not on the axis")))
            }
        }
    }
    let surv = chain.survival_of_measure(mu, 21);
    let cells = 21usize; // r = 1..=20 plus the tail
    let mut observed = Vec::with_capacity(cells);
    let mut expected = Vec::with_capacity(cells);
    for r in 1..=20usize {
        observed.push(s.duration_histogram[r]);
        expected.push((surv[r - 1] - surv[r]) * m as f64);
    }
    let tail_obs: u64 = s.duration_histogram[21..DURATION_BINS].iter().sum();
    observed.push(tail_obs);
    expected.push(surv[20] * m as f64);
    let statistic = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    Ok(DurationChiSquare {
        statistic,
        dof: cells - 1,
        critical_1pct: CHI2_1PCT_DOF20,
        observed,
        expected,
    })
}
