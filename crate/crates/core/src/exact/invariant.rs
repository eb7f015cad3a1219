//! Invariant measures of the chains embedded at excursion boundaries, and
//! the limit constants built from them.
//!
//! One excursion alternates an axis leg (axis site -> cone-boundary
//! absorption, matrix A from the axis chain solver) and a cone leg
//! (cone-boundary site -> axis entry, matrix C from the quadrant Green
//! function). The axis-entry chain has kernel A*C, the cone-entry chain C*A;
//! both kernels are substochastic on the truncated state space, so power
//! iteration renormalizes each iterate and the per-row kill masses are
//! reported as deficits.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::axis::{arm_index, AxisChain};
use crate::exact::potential::PotentialTable;
use crate::lattice::{Arm, LatticePoint, WalkParams};
use crate::measure::EmpiricalMeasure;

/// Iteration cap for the invariant-measure power iteration.
pub const ITERATION_CAP: usize = 100_000;

/// Which embedded chain: the axis-entry points (X at the eta times) or the
/// cone-entry points (X at the rho times).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    AxisEntry,
    ConeEntry,
}

/// Invariant measure with its convergence diagnostics. `measure.deficit` is
/// the expected one-round kill mass under the measure (spatial truncation).
#[derive(Debug, Clone)]
pub struct InvariantResult {
    pub measure: EmpiricalMeasure,
    pub residual: f64,
    pub iterations: usize,
}

/// Truncated two-leg transition structure shared by both embedded chains.
pub struct EmbeddedSystem {
    params: WalkParams,
    r: usize,
    axis_sites: Vec<LatticePoint>,
    boundary_sites: Vec<LatticePoint>,
    /// Row-major axis -> boundary absorption laws.
    a: Vec<f64>,
    a_deficit: Vec<f64>,
    /// Row-major boundary -> axis entry laws.
    c: Vec<f64>,
    c_deficit: Vec<f64>,
}

fn quadrant_of(x1: i64, x2: i64) -> usize {
    match (x1 > 0, x2 > 0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

const QUADRANT_SIGNS: [(i64, i64); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];

impl EmbeddedSystem {
    pub fn build(params: WalkParams, r: usize) -> Result<Self> {
        if params.alpha() <= 1.0 {
            return Err(Error::InvalidParameter(
                "embedded chains need alpha > 1".into(),
            ));
        }
        if r < 20 {
            return Err(Error::Precondition("embedded chains need R >= 20".into()));
        }
        let n_arm = r - 1;
        let na = 4 * n_arm;
        let n_rep = 2 * n_arm - 1;
        let nb = 4 * n_rep;

        let mut axis_sites = vec![LatticePoint::new(0, 0); na];
        for arm in Arm::ALL {
            for i in 1..r {
                axis_sites[arm_index(arm) * n_arm + (i - 1)] = arm.site(i as i64);
            }
        }
        // Boundary representatives in the upper-right quadrant: the row
        // (u, 1) for u = 1..r-1, then the column (1, v) for v = 2..r-1; the
        // corner (1,1) appears once.
        let mut reps = Vec::with_capacity(n_rep);
        for u in 1..r {
            reps.push((u as i64, 1i64));
        }
        for v in 2..r {
            reps.push((1i64, v as i64));
        }
        let mut boundary_sites = vec![LatticePoint::new(0, 0); nb];
        for (q, &(s1, s2)) in QUADRANT_SIGNS.iter().enumerate() {
            for (k, &(u, v)) in reps.iter().enumerate() {
                boundary_sites[q * n_rep + k] = LatticePoint::new(s1 * u, s2 * v);
            }
        }

        // Axis leg: one transposed Green solve per start gives its full
        // absorption law over the cone boundary.
        let chain = AxisChain::new(params, r)?;
        let mut a = vec![0.0f64; na * nb];
        let mut a_deficit = vec![0.0f64; na];
        for arm in Arm::ALL {
            for i in 1..r {
                let row = arm_index(arm) * n_arm + (i - 1);
                let green = chain.green_from(arm.site(i as i64))?;
                let law = chain.absorption_law(&green);
                for (&p, &m) in law.iter() {
                    let b = boundary_slot(p, r)
                        .expect("absorption law lands on the truncated boundary");
                    a[row * nb + b] += m;
                }
                a_deficit[row] = law.deficit;
            }
        }

        // Cone leg: exact exit laws from the quadrant Green function; one
        // representative per site shape, replicated over the four quadrants.
        let table = PotentialTable::build(2 * r);
        let mut c = vec![0.0f64; nb * na];
        let mut c_deficit = vec![0.0f64; nb];
        for (k, &(u, v)) in reps.iter().enumerate() {
            let mut m_row = vec![0.0f64; r]; // exit at (i, 0) in local coords
            let mut m_col = vec![0.0f64; r]; // exit at (0, i)
            let mut total = 0.0f64;
            for i in 1..r as i64 {
                m_row[i as usize] = 0.25 * table.quadrant_green((u, v), (i, 1));
                m_col[i as usize] = 0.25 * table.quadrant_green((u, v), (1, i));
                total += m_row[i as usize] + m_col[i as usize];
            }
            for (q, &(s1, s2)) in QUADRANT_SIGNS.iter().enumerate() {
                let b = q * n_rep + k;
                let row1 = if s1 > 0 { Arm::PlusX1 } else { Arm::MinusX1 };
                let row2 = if s2 > 0 { Arm::PlusX2 } else { Arm::MinusX2 };
                for i in 1..r {
                    c[b * na + arm_index(row1) * n_arm + (i - 1)] = m_row[i];
                    c[b * na + arm_index(row2) * n_arm + (i - 1)] = m_col[i];
                }
                c_deficit[b] = 1.0 - total;
            }
        }

        Ok(EmbeddedSystem {
            params,
            r,
            axis_sites,
            boundary_sites,
            a,
            a_deficit,
            c,
            c_deficit,
        })
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn axis_sites(&self) -> &[LatticePoint] {
        &self.axis_sites
    }

    pub fn boundary_sites(&self) -> &[LatticePoint] {
        &self.boundary_sites
    }

    /// Row of the axis leg: absorption law and deficit for one axis start.
    pub fn axis_row(&self, row: usize) -> (&[f64], f64) {
        let nb = self.boundary_sites.len();
        (&self.a[row * nb..(row + 1) * nb], self.a_deficit[row])
    }

    /// Row of the cone leg: axis-entry law and deficit for a boundary start.
    pub fn boundary_row(&self, row: usize) -> (&[f64], f64) {
        let na = self.axis_sites.len();
        (&self.c[row * na..(row + 1) * na], self.c_deficit[row])
    }

    fn axis_to_boundary(&self, mu: &[f64], out: &mut [f64]) {
        let nb = self.boundary_sites.len();
        out.fill(0.0);
        for (row, &m) in mu.iter().enumerate() {
            if m != 0.0 {
                let base = row * nb;
                for (j, o) in out.iter_mut().enumerate() {
                    *o += m * self.a[base + j];
                }
            }
        }
    }

    fn boundary_to_axis(&self, mu: &[f64], out: &mut [f64]) {
        let na = self.axis_sites.len();
        out.fill(0.0);
        for (row, &m) in mu.iter().enumerate() {
            if m != 0.0 {
                let base = row * na;
                for (j, o) in out.iter_mut().enumerate() {
                    *o += m * self.c[base + j];
                }
            }
        }
    }

    /// One renormalized round trip of the requested chain.
    fn round_trip(&self, kind: ChainKind, mu: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        match kind {
            ChainKind::AxisEntry => {
                self.axis_to_boundary(mu, tmp);
                self.boundary_to_axis(tmp, out);
            }
            ChainKind::ConeEntry => {
                self.boundary_to_axis(mu, tmp);
                self.axis_to_boundary(tmp, out);
            }
        }
        let z: f64 = out.iter().sum();
        for o in out.iter_mut() {
            *o /= z;
        }
    }

    /// Power iteration from the uniform law on the truncated support until
    /// successive iterates differ by less than `tol` in L1.
    pub fn invariant(&self, kind: ChainKind, tol: f64, cap: usize) -> Result<InvariantResult> {
        let (sites, other_len) = match kind {
            ChainKind::AxisEntry => (&self.axis_sites, self.boundary_sites.len()),
            ChainKind::ConeEntry => (&self.boundary_sites, self.axis_sites.len()),
        };
        let n = sites.len();
        let mut mu = vec![1.0 / n as f64; n];
        let mut next = vec![0.0f64; n];
        let mut tmp = vec![0.0f64; other_len];
        let mut diff = f64::INFINITY;
        for it in 1..=cap {
            self.round_trip(kind, &mu, &mut tmp, &mut next);
            diff = mu
                .iter()
                .zip(&next)
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>();
            std::mem::swap(&mut mu, &mut next);
            if diff < tol {
                let mut measure = EmpiricalMeasure::new();
                for (site, &m) in sites.iter().zip(&mu) {
                    if m > 0.0 {
                        measure.add(*site, m);
                    }
                }
                measure.deficit = self.one_round_deficit(kind, &mu);
                return Ok(InvariantResult {
                    measure,
                    residual: diff,
                    iterations: it,
                });
            }
        }
        Err(Error::NoConvergence { cap, residual: diff })
    }

    /// Expected truncation-kill mass over one round trip started from `mu`.
    fn one_round_deficit(&self, kind: ChainKind, mu: &[f64]) -> f64 {
        match kind {
            ChainKind::AxisEntry => {
                let mut on_b = vec![0.0f64; self.boundary_sites.len()];
                self.axis_to_boundary(mu, &mut on_b);
                let first: f64 = mu
                    .iter()
                    .zip(&self.a_deficit)
                    .map(|(m, d)| m * d)
                    .sum();
                let second: f64 = on_b
                    .iter()
                    .zip(&self.c_deficit)
                    .map(|(m, d)| m * d)
                    .sum();
                first + second
            }
            ChainKind::ConeEntry => {
                let mut on_a = vec![0.0f64; self.axis_sites.len()];
                self.boundary_to_axis(mu, &mut on_a);
                let first: f64 = mu
                    .iter()
                    .zip(&self.c_deficit)
                    .map(|(m, d)| m * d)
                    .sum();
                let second: f64 = on_a
                    .iter()
                    .zip(&self.a_deficit)
                    .map(|(m, d)| m * d)
                    .sum();
                first + second
            }
        }
    }
}

/// Index of a cone-boundary site in the truncated enumeration.
fn boundary_slot(p: LatticePoint, r: usize) -> Option<usize> {
    let u = p.x1.unsigned_abs() as usize;
    let v = p.x2.unsigned_abs() as usize;
    if u == 0 || v == 0 || u.min(v) != 1 || u.max(v) > r - 1 {
        return None;
    }
    let n_rep = 2 * (r - 1) - 1;
    let k = if v == 1 { u - 1 } else { (r - 1) + (v - 2) };
    Some(quadrant_of(p.x1, p.x2) * n_rep + k)
}

/// Invariant measure of one embedded chain on the R-truncated state space.
pub fn embedded_invariant(
    kind: ChainKind,
    params: WalkParams,
    r: usize,
    tol: f64,
) -> Result<InvariantResult> {
    EmbeddedSystem::build(params, r)?.invariant(kind, tol, ITERATION_CAP)
}

/// The limit constants of the model at one (alpha, R).
#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub alpha: f64,
    pub r: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    pub c_prime: f64,
    /// c^f = c1 * E_pi*[f over one excursion] per built-in functional.
    pub c_f: BTreeMap<String, f64>,
    /// E_pi*[rho] with the analytic tail correction, and without it.
    pub e_rho: f64,
    pub e_rho_raw: f64,
    pub e_exit_norm: f64,
    pub e_origin_visits: f64,
    pub e_dagger_norm: f64,
    /// Tail coefficient read off the pi* shells: per-site mass ~ c0_hat/x^3.
    pub c0_hat: f64,
    pub pi_star_residual: f64,
    pub pi_dagger_residual: f64,
    pub pi_star_deficit: f64,
    pub pi_dagger_deficit: f64,
}

/// Computes pi*, pi†, and every limit constant. `tol` is the power-iteration
/// tolerance. Alpha <= 3 breaks the renewal structure the constants describe
/// and is refused unless explicitly allowed.
pub fn constants(
    params: WalkParams,
    r: usize,
    tol: f64,
    allow_subcritical: bool,
) -> Result<Constants> {
    if !allow_subcritical && params.alpha() <= 3.0 {
        return Err(Error::InvalidParameter(
            "constants need alpha > 3 (pass allow_subcritical to override)".into(),
        ));
    }
    let sys = EmbeddedSystem::build(params, r)?;
    let star = sys.invariant(ChainKind::AxisEntry, tol, ITERATION_CAP)?;
    let dagger = sys.invariant(ChainKind::ConeEntry, tol, ITERATION_CAP)?;

    let chain = AxisChain::new(params, r)?;
    let m1 = chain.expected_rho();
    let visits = chain.origin_visits();
    let exit_norm = chain.expected_exit_norm();
    let e_rho_raw = star.measure.expect(|p| m1.at(p));
    let e_origin_visits = star.measure.expect(|p| visits.at(p));
    let e_exit_norm = star.measure.expect(|p| exit_norm.at(p));
    let e_dagger_norm = dagger.measure.max_norm_moment(1.0);

    // Tail coefficient of pi* from mid-range shells (the outermost shells
    // are depressed by the killing), then the missing-mass correction
    // sum_{i>=R} 4 c0_hat i^{-3} * E_i[rho] with E_i[rho] ~ i.
    let mut vals = Vec::new();
    for (norm, mass) in star.measure.shell_masses() {
        if norm >= (r / 2) as i64 && norm <= (3 * r / 4) as i64 {
            vals.push(mass / 4.0 * (norm as f64).powi(3));
        }
    }
    let c0_hat = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    let tail_rho = 4.0 * c0_hat / (r as f64 - 0.5);
    let e_rho = e_rho_raw + tail_rho;

    let c1 = (PI / 8.0) / e_dagger_norm;
    let c2 = (2.0 / PI) * e_dagger_norm;
    let c0 = (16.0 / PI) * e_exit_norm;
    let c = c1 * e_rho;
    let c_prime = c1 * e_origin_visits;
    let mut c_f = BTreeMap::new();
    c_f.insert("axis_local_time".to_string(), c);
    c_f.insert("origin_local_time".to_string(), c_prime);

    Ok(Constants {
        alpha: params.alpha(),
        r,
        c0,
        c1,
        c2,
        c,
        c_prime,
        c_f,
        e_rho,
        e_rho_raw,
        e_exit_norm,
        e_origin_visits,
        e_dagger_norm,
        c0_hat,
        pi_star_residual: star.residual,
        pi_dagger_residual: dagger.residual,
        pi_star_deficit: star.measure.deficit,
        pi_dagger_deficit: dagger.measure.deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::shell_slope;
    use approx::assert_abs_diff_eq;

    fn params() -> WalkParams {
        WalkParams::new(4.0).unwrap()
    }

    #[test]
    fn rows_are_stochastic_up_to_deficit() {
        let sys = EmbeddedSystem::build(params(), 40).unwrap();
        for row in 0..sys.axis_sites().len() {
            let (vals, deficit) = sys.axis_row(row);
            let total: f64 = vals.iter().sum::<f64>() + deficit;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            assert!(deficit >= 0.0);
        }
        for row in 0..sys.boundary_sites().len() {
            let (vals, deficit) = sys.boundary_row(row);
            let total: f64 = vals.iter().sum::<f64>() + deficit;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
            assert!(deficit >= -1e-9);
        }
    }

    #[test]
    fn invariants_normalize_and_are_symmetric() {
        let sys = EmbeddedSystem::build(params(), 60).unwrap();
        let star = sys.invariant(ChainKind::AxisEntry, 1e-10, ITERATION_CAP).unwrap();
        let dagger = sys.invariant(ChainKind::ConeEntry, 1e-10, ITERATION_CAP).unwrap();
        assert_abs_diff_eq!(star.measure.total_mass(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dagger.measure.total_mass(), 1.0, epsilon = 1e-9);
        assert!(star.residual < 1e-10);
        assert!(dagger.residual < 1e-10);
        // The kernel commutes with the lattice symmetries and the uniform
        // start is symmetric, so the fixed points are too.
        assert!(star.measure.dihedral_asymmetry() < 1e-12);
        assert!(dagger.measure.dihedral_asymmetry() < 1e-12);
    }

    #[test]
    fn invariance_survives_one_more_round() {
        let sys = EmbeddedSystem::build(params(), 50).unwrap();
        let star = sys.invariant(ChainKind::AxisEntry, 1e-12, ITERATION_CAP).unwrap();
        let mu: Vec<f64> = sys
            .axis_sites()
            .iter()
            .map(|p| star.measure.mass_at(*p))
            .collect();
        let mut tmp = vec![0.0; sys.boundary_sites().len()];
        let mut out = vec![0.0; mu.len()];
        sys.round_trip(ChainKind::AxisEntry, &mu, &mut tmp, &mut out);
        let l1: f64 = mu.iter().zip(&out).map(|(x, y)| (x - y).abs()).sum();
        assert!(l1 < 1e-11, "one-round L1 drift {l1}");
    }

    #[test]
    fn tail_slopes_near_theory() {
        let sys = EmbeddedSystem::build(params(), 120).unwrap();
        let star = sys.invariant(ChainKind::AxisEntry, 1e-10, ITERATION_CAP).unwrap();
        let dagger = sys.invariant(ChainKind::ConeEntry, 1e-10, ITERATION_CAP).unwrap();
        let (s_star, _) = shell_slope(&star.measure, (5, 40), 1e-300, 0.0, |_| 4.0).unwrap();
        assert!((s_star + 3.0).abs() < 0.4, "pi* slope {s_star}");
        let (s_dag, _) = shell_slope(
            &dagger.measure,
            (2, 15),
            1e-300,
            0.0,
            |norm| if norm == 1 { 4.0 } else { 8.0 },
        )
        .unwrap();
        assert!((s_dag + 6.0).abs() < 0.8, "pi-dagger slope {s_dag}");
    }

    #[test]
    fn constants_satisfy_internal_identities() {
        let k = constants(params(), 80, 1e-10, false).unwrap();
        // c1 * c2 = 1/4 by construction of the two formulas.
        assert_abs_diff_eq!(k.c1 * k.c2, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(k.c, k.c1 * k.e_rho, epsilon = 1e-15);
        assert_abs_diff_eq!(k.c_prime, k.c1 * k.e_origin_visits, epsilon = 1e-15);
        assert_eq!(k.c_f["axis_local_time"], k.c);
        assert_eq!(k.c_f["origin_local_time"], k.c_prime);
        assert!(k.c0 > 0.0 && k.c1 > 0.0 && k.c2 > 0.0);
        assert!(k.e_rho > k.e_rho_raw);
        // Long-range expansion of the quadrant Green function: the landing
        // mass at (i,0) from boundary y is ~ (4/pi) y1 y2 / i^3, and the two
        // adjacent quadrants contribute, so the per-site tail coefficient of
        // pi* equals (2/pi) E_{pi-dagger}[norm] = c0 / 8.
        assert!(
            (k.c0 - 8.0 * k.c0_hat).abs() / k.c0 < 0.1,
            "c0_hat {} vs c0/8 {}",
            k.c0_hat,
            k.c0 / 8.0
        );
        assert!(k.pi_star_residual < 1e-9 && k.pi_dagger_residual < 1e-9);
    }

    #[test]
    fn subcritical_alpha_is_gated() {
        let p = WalkParams::new(2.5).unwrap();
        assert!(constants(p, 40, 1e-8, false).is_err());
        assert!(constants(p, 40, 1e-8, true).is_ok());
    }

    #[test]
    fn boundary_slot_roundtrip() {
        let sys = EmbeddedSystem::build(params(), 25).unwrap();
        for (idx, p) in sys.boundary_sites().iter().enumerate() {
            assert_eq!(boundary_slot(*p, 25), Some(idx));
        }
        assert_eq!(boundary_slot(LatticePoint::new(3, 0), 25), None);
        assert_eq!(boundary_slot(LatticePoint::new(5, 5), 25), None);
        assert_eq!(boundary_slot(LatticePoint::new(25, 1), 25), None);
    }
}
