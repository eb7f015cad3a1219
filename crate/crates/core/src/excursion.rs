//! Streaming trajectory engine: detects the alternating axis-entry times
//! eta_i and cone-entry times rho_i, folds the path into two-type excursions,
//! and evaluates axis functionals without ever storing the path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{step_fast, LatticePoint, WalkParams};
use crate::measure::EmpiricalMeasure;
use crate::rng::{CounterRng, RandomSource};

/// Walks that wander past this norm abort: with a sane alpha the entry-norm
/// distribution has a cubic tail, so reaching 10^6 signals misconfiguration.
pub const RUNAWAY_LIMIT: i64 = 1_000_000;

/// Axis-duration histogram length; the last slot is an overflow bin.
pub const DURATION_BINS: usize = 64;

/// Built-in axis functionals f(B_i): both positive and non-decreasing under
/// segment extension, as the limit theorem requires.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum FunctionalId {
    /// Counts every site of the axis segment: f(B_i) = rho_i - eta_i.
    AxisLocalTime,
    /// Counts the visits to the origin within the segment.
    OriginLocalTime,
}

impl FunctionalId {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalId::AxisLocalTime => "axis_local_time",
            FunctionalId::OriginLocalTime => "origin_local_time",
        }
    }

    /// Contract flags: (positive, non-decreasing).
    pub fn contract(&self) -> (bool, bool) {
        (true, true)
    }

    /// Incremental evaluator: contribution of one more segment site.
    #[inline]
    pub fn consume(&self, site: LatticePoint) -> f64 {
        match self {
            FunctionalId::AxisLocalTime => 1.0,
            FunctionalId::OriginLocalTime => {
                if site == LatticePoint::ORIGIN {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The two built-ins, in canonical order.
pub fn builtin_functionals() -> Vec<FunctionalId> {
    vec![FunctionalId::AxisLocalTime, FunctionalId::OriginLocalTime]
}

/// One completed two-type excursion, as yielded to observers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub index: u64,
    pub eta: u64,
    pub rho: u64,
    pub entry_site: LatticePoint,
    pub exit_site: LatticePoint,
    pub functional_values: Vec<(FunctionalId, f64)>,
}

/// Streaming aggregate of one (or several merged) trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Steps simulated.
    pub n: u64,
    /// N_n: completed excursions (rho_i <= n).
    pub excursions: u64,
    /// Axis entries observed (equals excursions or excursions + 1).
    pub entries: u64,
    pub local_time_axis: u64,
    pub local_time_origin: u64,
    /// Sum of (rho_i - eta_i) over completed excursions.
    pub sum_axis_time: u64,
    /// Sum of (eta_i - rho_{i-1}) over observed entries.
    pub sum_cone_time: u64,
    pub functional_ids: Vec<FunctionalId>,
    /// Sum of f(B_i) over completed excursions, per functional.
    pub functional_sums: Vec<f64>,
    /// f(B*_n): value of the incomplete tail segment, per functional.
    pub functional_tails: Vec<f64>,
    /// Counts of X_{eta_i}.
    pub entry_histogram: EmpiricalMeasure,
    /// Counts of X_{rho_i}.
    pub exit_histogram: EmpiricalMeasure,
    /// Counts of rho_i - eta_i; last bin is overflow.
    pub duration_histogram: Vec<u64>,
    pub max_entry_norm: i64,
    /// Entry-norm moment data: sum of max_norm(X_{eta_i})^1.5.
    pub sum_entry_norm_p15: f64,
    /// Running maximum over i of the prefix mean of max_norm(X_{eta_i})^1.5.
    pub max_prefix_mean_p15: f64,
    /// Entries with max_norm above `norm_threshold`.
    pub threshold_exceed: u64,
    /// Threshold used for `threshold_exceed` (0 disables).
    pub norm_threshold: f64,
}

impl RunStats {
    pub fn new(functional_ids: Vec<FunctionalId>, norm_threshold: f64) -> Self {
        let k = functional_ids.len();
        RunStats {
            n: 0,
            excursions: 0,
            entries: 0,
            local_time_axis: 0,
            local_time_origin: 0,
            sum_axis_time: 0,
            sum_cone_time: 0,
            functional_ids,
            functional_sums: vec![0.0; k],
            functional_tails: vec![0.0; k],
            entry_histogram: EmpiricalMeasure::new(),
            exit_histogram: EmpiricalMeasure::new(),
            duration_histogram: vec![0; DURATION_BINS],
            max_entry_norm: 0,
            sum_entry_norm_p15: 0.0,
            max_prefix_mean_p15: 0.0,
            threshold_exceed: 0,
            norm_threshold,
        }
    }

    /// Component-wise merge (addition; max for the max fields). Associative
    /// and commutative, so replica merge order is irrelevant.
    pub fn merge(&mut self, other: &RunStats) {
        assert_eq!(
            self.functional_ids, other.functional_ids,
            "cannot merge stats with different functionals"
        );
        self.n += other.n;
        self.excursions += other.excursions;
        self.entries += other.entries;
        self.local_time_axis += other.local_time_axis;
        self.local_time_origin += other.local_time_origin;
        self.sum_axis_time += other.sum_axis_time;
        self.sum_cone_time += other.sum_cone_time;
        for i in 0..self.functional_sums.len() {
            self.functional_sums[i] += other.functional_sums[i];
            self.functional_tails[i] += other.functional_tails[i];
        }
        self.entry_histogram.merge(&other.entry_histogram);
        self.exit_histogram.merge(&other.exit_histogram);
        for i in 0..DURATION_BINS {
            self.duration_histogram[i] += other.duration_histogram[i];
        }
        self.max_entry_norm = self.max_entry_norm.max(other.max_entry_norm);
        self.sum_entry_norm_p15 += other.sum_entry_norm_p15;
        self.max_prefix_mean_p15 = self.max_prefix_mean_p15.max(other.max_prefix_mean_p15);
        self.threshold_exceed += other.threshold_exceed;
    }
}

/// Estimators of the limit theorems, all scaled by log(n)/n.
pub fn theorem_estimates(stats: &RunStats) -> Vec<(String, f64)> {
    assert!(stats.n >= 2, "estimators need n >= 2");
    let scale = (stats.n as f64).ln() / stats.n as f64;
    let mut out = vec![
        ("axis_local_time".to_string(), scale * stats.local_time_axis as f64),
        (
            "origin_local_time".to_string(),
            scale * stats.local_time_origin as f64,
        ),
        ("excursion_count".to_string(), scale * stats.excursions as f64),
    ];
    for (i, id) in stats.functional_ids.iter().enumerate() {
        out.push((
            format!("functional_{}", id.name()),
            scale * (stats.functional_sums[i] + stats.functional_tails[i]),
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Phase {
    Cone,
    Axis,
}

/// Per-excursion entry-norm block sums, for trend diagnostics. Kept outside
/// RunStats so that RunStats merging stays order-independent.
pub const NORM_BLOCK: u64 = 8192;

/// A resumable walk. Serializing and deserializing mid-run continues the
/// trajectory bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSim {
    params: WalkParams,
    rng: CounterRng,
    pos: LatticePoint,
    phase: Phase,
    cur_eta: u64,
    cur_entry: LatticePoint,
    last_rho: u64,
    seg_acc: Vec<f64>,
    pub stats: RunStats,
    /// (count, sum of norm^1.5) blocks of NORM_BLOCK entries each.
    pub norm_blocks: Vec<(u64, f64)>,
}

impl WalkSim {
    pub fn new(
        params: WalkParams,
        seed: u64,
        stream: u64,
        functionals: Vec<FunctionalId>,
        norm_threshold: f64,
    ) -> Self {
        let k = functionals.len();
        WalkSim {
            params,
            rng: CounterRng::new(seed, stream),
            pos: LatticePoint::new(1, 1),
            phase: Phase::Cone,
            cur_eta: 0,
            cur_entry: LatticePoint::new(1, 1),
            last_rho: 0,
            seg_acc: vec![0.0; k],
            stats: RunStats::new(functionals, norm_threshold),
            norm_blocks: Vec::new(),
        }
    }

    pub fn position(&self) -> LatticePoint {
        self.pos
    }

    /// Advances `steps` steps, streaming every excursion event into stats.
    pub fn advance(&mut self, steps: u64) -> Result<()> {
        self.advance_observed(steps, |_| {})
    }

    /// Like [`advance`](Self::advance), invoking `observer` on each completed
    /// excursion.
    pub fn advance_observed(
        &mut self,
        steps: u64,
        mut observer: impl FnMut(&ExcursionRecord),
    ) -> Result<()> {
        let ids = self.stats.functional_ids.clone();
        for _ in 0..steps {
            let u = self.rng.next_f64();
            self.pos = step_fast(self.pos, &self.params, u);
            let t = self.stats.n + 1;
            self.stats.n = t;
            if self.pos.on_axis() {
                self.stats.local_time_axis += 1;
                if self.pos == LatticePoint::ORIGIN {
                    self.stats.local_time_origin += 1;
                }
                if self.phase == Phase::Cone {
                    // eta: entry to the axis.
                    self.phase = Phase::Axis;
                    self.cur_eta = t;
                    self.cur_entry = self.pos;
                    self.stats.entries += 1;
                    self.stats.sum_cone_time += t - self.last_rho;
                    self.stats.entry_histogram.add(self.pos, 1.0);
                    let norm = self.pos.max_norm();
                    self.stats.max_entry_norm = self.stats.max_entry_norm.max(norm);
                    let p15 = (norm as f64).powf(1.5);
                    self.stats.sum_entry_norm_p15 += p15;
                    let prefix_mean =
                        self.stats.sum_entry_norm_p15 / self.stats.entries as f64;
                    self.stats.max_prefix_mean_p15 =
                        self.stats.max_prefix_mean_p15.max(prefix_mean);
                    if self.stats.norm_threshold > 0.0
                        && norm as f64 > self.stats.norm_threshold
                    {
                        self.stats.threshold_exceed += 1;
                    }
                    match self.norm_blocks.last_mut() {
                        Some(block) if block.0 < NORM_BLOCK => {
                            block.0 += 1;
                            block.1 += p15;
                        }
                        _ => self.norm_blocks.push((1, p15)),
                    }
                    for (i, id) in ids.iter().enumerate() {
                        self.seg_acc[i] = id.consume(self.pos);
                    }
                } else {
                    for (i, id) in ids.iter().enumerate() {
                        self.seg_acc[i] += id.consume(self.pos);
                    }
                }
            } else {
                if self.phase == Phase::Axis {
                    // rho: entry to the cone, closing excursion `excursions + 1`.
                    debug_assert!(self.pos.on_cone_boundary());
                    self.phase = Phase::Cone;
                    self.stats.excursions += 1;
                    self.stats.exit_histogram.add(self.pos, 1.0);
                    let dur = t - self.cur_eta;
                    let bin = (dur as usize).min(DURATION_BINS - 1);
                    self.stats.duration_histogram[bin] += 1;
                    self.stats.sum_axis_time += dur;
                    for i in 0..self.seg_acc.len() {
                        self.stats.functional_sums[i] += self.seg_acc[i];
                    }
                    observer(&ExcursionRecord {
                        index: self.stats.excursions,
                        eta: self.cur_eta,
                        rho: t,
                        entry_site: self.cur_entry,
                        exit_site: self.pos,
                        functional_values: ids
                            .iter()
                            .cloned()
                            .zip(self.seg_acc.iter().cloned())
                            .collect(),
                    });
                    self.last_rho = t;
                    for v in self.seg_acc.iter_mut() {
                        *v = 0.0;
                    }
                }
                if self.pos.max_norm() > RUNAWAY_LIMIT {
                    return Err(Error::RunawayWalk {
                        norm: self.pos.max_norm(),
                        limit: RUNAWAY_LIMIT,
                    });
                }
            }
        }
        // Tail value f(B*_n): the open axis segment if the walk is currently
        // on the axis, else 0 (the current excursion has no axis part yet).
        for i in 0..self.seg_acc.len() {
            self.stats.functional_tails[i] = if self.phase == Phase::Axis {
                self.seg_acc[i]
            } else {
                0.0
            };
        }
        Ok(())
    }
}

/// Runs a fresh walk from (1,1) for `n` steps.
pub fn run_walk(
    params: WalkParams,
    n: u64,
    seed: u64,
    stream: u64,
    functionals: Vec<FunctionalId>,
) -> Result<RunStats> {
    let mut sim = WalkSim::new(params, seed, stream, functionals, 0.0);
    sim.advance(n)?;
    Ok(sim.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> WalkParams {
        WalkParams::new(4.0).unwrap()
    }

    #[test]
    fn one_step_from_start() {
        for seed in 0..20 {
            let stats = run_walk(params(), 1, seed, 0, builtin_functionals()).unwrap();
            assert_eq!(stats.excursions, 0);
            assert!(stats.local_time_axis <= 1);
        }
    }

    #[test]
    fn determinism() {
        let a = run_walk(params(), 100_000, 12, 3, builtin_functionals()).unwrap();
        let b = run_walk(params(), 100_000, 12, 3, builtin_functionals()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conservation_and_bracketing() {
        let n = 200_000;
        let stats = run_walk(params(), n, 7, 0, builtin_functionals()).unwrap();
        assert!(stats.excursions > 1000);
        // Every step is on the axis or on a cone; completed + tail accounts
        // for all of them.
        let cone_steps = stats.n - stats.local_time_axis;
        assert!(stats.sum_cone_time >= stats.entries); // each gap >= 1
        // sum_cone_time counts, for each entry, the steps since the previous
        // rho including the entry step itself (an axis step); so
        // cone-position steps = sum_cone_time - entries + (tail cone steps).
        assert!(stats.sum_cone_time - stats.entries <= cone_steps);
        // Axis local time of completed excursions is exactly sum_axis_time.
        assert!(stats.local_time_axis >= stats.sum_axis_time);
        // The axis functional over completed excursions equals sum_axis_time.
        assert_eq!(stats.functional_sums[0], stats.sum_axis_time as f64);
        // Full conservation: axis time = completed axis durations + tail.
        assert_eq!(
            stats.local_time_axis as f64,
            stats.sum_axis_time as f64 + stats.functional_tails[0]
        );
        // Entries and exits interleave.
        assert!(stats.entries == stats.excursions || stats.entries == stats.excursions + 1);
        // Histograms count what they should.
        assert_eq!(stats.entry_histogram.total_mass(), stats.entries as f64);
        assert_eq!(stats.exit_histogram.total_mass(), stats.excursions as f64);
        // Entry sites are on the axis, exit sites on the cone boundary.
        for (p, _) in stats.entry_histogram.iter() {
            assert!(p.on_axis());
        }
        for (p, _) in stats.exit_histogram.iter() {
            assert!(p.on_cone_boundary());
        }
    }

    #[test]
    fn resume_equals_continuous() {
        let mut one = WalkSim::new(params(), 5, 2, builtin_functionals(), 0.0);
        one.advance(50_000).unwrap();

        let mut split = WalkSim::new(params(), 5, 2, builtin_functionals(), 0.0);
        split.advance(17_123).unwrap();
        let saved = serde_json::to_string(&split).unwrap();
        let mut resumed: WalkSim = serde_json::from_str(&saved).unwrap();
        resumed.advance(50_000 - 17_123).unwrap();

        assert_eq!(one, resumed);
    }

    #[test]
    fn origin_functional_counts_origin_visits() {
        let stats = run_walk(params(), 100_000, 9, 1, builtin_functionals()).unwrap();
        // Completed origin-visit counts can never exceed total origin local time.
        assert!(stats.functional_sums[1] + stats.functional_tails[1] <= stats.local_time_origin as f64);
        assert!(stats.functional_sums[1] > 0.0);
    }

    // Integer fields must agree exactly under reordering; float accumulators
    // only up to summation-order roundoff.
    fn assert_merge_equivalent(a: &RunStats, b: &RunStats) {
        assert_eq!(a.n, b.n);
        assert_eq!(a.excursions, b.excursions);
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.local_time_axis, b.local_time_axis);
        assert_eq!(a.local_time_origin, b.local_time_origin);
        assert_eq!(a.sum_axis_time, b.sum_axis_time);
        assert_eq!(a.sum_cone_time, b.sum_cone_time);
        assert_eq!(a.duration_histogram, b.duration_histogram);
        assert_eq!(a.max_entry_norm, b.max_entry_norm);
        assert_eq!(a.threshold_exceed, b.threshold_exceed);
        assert_eq!(a.entry_histogram, b.entry_histogram);
        assert_eq!(a.exit_histogram, b.exit_histogram);
        for (x, y) in a.functional_sums.iter().zip(&b.functional_sums) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
        for (x, y) in a.functional_tails.iter().zip(&b.functional_tails) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
        assert_relative_eq!(
            a.sum_entry_norm_p15,
            b.sum_entry_norm_p15,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            a.max_prefix_mean_p15,
            b.max_prefix_mean_p15,
            max_relative = 1e-12
        );
    }

    #[test]
    fn merge_is_commutative_and_associative() {
        let runs: Vec<RunStats> = (0..4)
            .map(|s| run_walk(params(), 30_000, 11, s, builtin_functionals()).unwrap())
            .collect();
        let mut forward = RunStats::new(builtin_functionals(), 0.0);
        for r in &runs {
            forward.merge(r);
        }
        let mut backward = RunStats::new(builtin_functionals(), 0.0);
        for r in runs.iter().rev() {
            backward.merge(r);
        }
        assert_merge_equivalent(&forward, &backward);
        let mut paired = RunStats::new(builtin_functionals(), 0.0);
        let mut left = runs[0].clone();
        left.merge(&runs[1]);
        let mut right = runs[2].clone();
        right.merge(&runs[3]);
        paired.merge(&left);
        paired.merge(&right);
        assert_merge_equivalent(&forward, &paired);
    }

    #[test]
    fn estimates_have_expected_names() {
        let stats = run_walk(params(), 10_000, 3, 0, builtin_functionals()).unwrap();
        let est = theorem_estimates(&stats);
        let names: Vec<&str> = est.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "axis_local_time",
                "origin_local_time",
                "excursion_count",
                "functional_axis_local_time",
                "functional_origin_local_time"
            ]
        );
    }
}
