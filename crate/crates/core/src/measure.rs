//! Sparse measures over lattice sites, with explicit truncation deficits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lattice::{DihedralElement, LatticePoint};

/// Sparse nonnegative mass function over sites. `deficit` carries mass lost
/// to spatial/temporal truncation; it is reported, never silently dropped.
///
/// Serializes the support as sorted `[x1, x2, mass]` triples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    #[serde(with = "support_triples")]
    support: BTreeMap<LatticePoint, f64>,
    pub deficit: f64,
}

mod support_triples {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<LatticePoint, f64>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let triples: Vec<(i64, i64, f64)> =
            map.iter().map(|(p, &m)| (p.x1, p.x2, m)).collect();
        triples.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<LatticePoint, f64>, D::Error> {
        let triples = Vec::<(i64, i64, f64)>::deserialize(de)?;
        Ok(triples
            .into_iter()
            .map(|(x1, x2, m)| (LatticePoint::new(x1, x2), m))
            .collect())
    }
}

impl EmpiricalMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, p: LatticePoint, mass: f64) {
        debug_assert!(mass >= 0.0);
        *self.support.entry(p).or_insert(0.0) += mass;
    }

    pub fn mass_at(&self, p: LatticePoint) -> f64 {
        self.support.get(&p).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.support.values().sum()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &f64)> {
        self.support.iter()
    }

    /// Scales masses so they sum to 1; the deficit is dropped to 0 by
    /// construction (use before interpreting as a conditional law).
    pub fn normalized(&self) -> EmpiricalMeasure {
        let z = self.total_mass();
        let mut out = EmpiricalMeasure::new();
        if z > 0.0 {
            for (&p, &m) in &self.support {
                out.add(p, m / z);
            }
        }
        out
    }

    pub fn merge(&mut self, other: &EmpiricalMeasure) {
        for (&p, &m) in &other.support {
            self.add(p, m);
        }
        self.deficit += other.deficit;
    }

    /// Expectation of max_norm^beta.
    pub fn max_norm_moment(&self, beta: f64) -> f64 {
        self.support
            .iter()
            .map(|(p, &m)| m * (p.max_norm() as f64).powf(beta))
            .sum()
    }

    /// Expectation of an arbitrary site function.
    pub fn expect(&self, f: impl Fn(LatticePoint) -> f64) -> f64 {
        self.support.iter().map(|(&p, &m)| m * f(p)).sum()
    }

    /// Total mass per max-norm shell.
    pub fn shell_masses(&self) -> BTreeMap<i64, f64> {
        let mut shells = BTreeMap::new();
        for (p, &m) in &self.support {
            *shells.entry(p.max_norm()).or_insert(0.0) += m;
        }
        shells
    }

    /// Half the L1 distance between the normalized supports.
    pub fn total_variation(&self, other: &EmpiricalMeasure) -> f64 {
        let mut l1 = 0.0;
        for (&p, &m) in &self.support {
            l1 += (m - other.mass_at(p)).abs();
        }
        for (&p, &m) in &other.support {
            if !self.support.contains_key(&p) {
                l1 += m;
            }
        }
        0.5 * l1
    }

    /// Largest |mu(sigma x) - mu(x)| over the 8 lattice symmetries.
    pub fn dihedral_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for sigma in DihedralElement::ALL {
            for (&p, &m) in &self.support {
                worst = worst.max((self.mass_at(sigma.apply(p)) - m).abs());
            }
        }
        worst
    }
}

/// Ordinary-least-squares fit of y against x; returns (slope, stderr).
pub fn ols_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    assert!(points.len() >= 3, "need at least 3 points for a slope fit");
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    (slope, stderr)
}

/// Log-log slope of per-site shell mass against shell norm over
/// `band = [lo, hi]`, keeping only shells whose raw count (mass divided by
/// `unit_mass`) is at least `min_count`. `sites_per_shell` gives the number
/// of support sites in a shell of a given norm.
pub fn shell_slope(
    measure: &EmpiricalMeasure,
    band: (i64, i64),
    unit_mass: f64,
    min_count: f64,
    sites_per_shell: impl Fn(i64) -> f64,
) -> Option<(f64, f64)> {
    let mut pts = Vec::new();
    for (norm, mass) in measure.shell_masses() {
        if norm < band.0 || norm > band.1 {
            continue;
        }
        if mass / unit_mass < min_count || mass <= 0.0 {
            continue;
        }
        let per_site = mass / sites_per_shell(norm);
        pts.push(((norm as f64).ln(), per_site.ln()));
    }
    if pts.len() < 3 {
        return None;
    }
    Some(ols_slope(&pts))
}
