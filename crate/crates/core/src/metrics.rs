//! Precision, recall and F-measure over tool combinations, and sample sizes
//! for partial validation.

use crate::compare::MergedGraph;
use crate::model::{format_edge_key, EdgeKey};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{} edges lack a validity flag, first: {}", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    UnvalidatedEdges(Vec<String>),
    #[error("sample of {requested} requested from a population of {population}")]
    SampleTooLarge { requested: usize, population: usize },
    #[error("invalid sample size query: {0}")]
    InvalidQuery(String),
    #[error("{0} tools exceed the combination limit of {MAX_COMBINATION_TOOLS}")]
    TooManyTools(usize),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::UnvalidatedEdges(_) => "UNVALIDATED_EDGES",
            MetricsError::SampleTooLarge { .. } => "SAMPLE_TOO_LARGE",
            MetricsError::InvalidQuery(_) => "INVALID_QUERY",
            MetricsError::TooManyTools(_) => "TOO_MANY_TOOLS",
        }
    }
}

pub const MAX_COMBINATION_TOOLS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    HalfAwayFromZero,
    Truncate,
}

/// `100 * num / den` rendered with `decimals` digits, computed exactly.
pub fn ratio_percent(num: u64, den: u64, decimals: u32, rounding: Rounding) -> String {
    let scale = 10u128.pow(decimals);
    let scaled = if den == 0 {
        0
    } else {
        let n = num as u128 * 100 * scale;
        let (q, r) = (n / den as u128, n % den as u128);
        match rounding {
            Rounding::HalfAwayFromZero if 2 * r >= den as u128 => q + 1,
            _ => q,
        }
    };
    if decimals == 0 {
        scaled.to_string()
    } else {
        format!("{}.{:0width$}", scaled / scale, scaled % scale, width = decimals as usize)
    }
}

fn percent_int(num: u64, den: u64) -> u32 {
    ratio_percent(num, den, 0, Rounding::HalfAwayFromZero)
        .parse()
        .expect("integer percentage")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinationStats {
    pub combination: Vec<String>,
    pub tp: u64,
    pub all: u64,
    pub tp_star: u64,
}

impl CombinationStats {
    pub fn from_counts(combination: Vec<String>, tp: u64, all: u64, tp_star: u64) -> Self {
        debug_assert!(tp <= all && tp <= tp_star);
        CombinationStats {
            combination,
            tp,
            all,
            tp_star,
        }
    }

    pub fn name(&self) -> String {
        self.combination.join("+")
    }

    pub fn precision(&self) -> f64 {
        if self.all == 0 {
            0.0
        } else {
            self.tp as f64 / self.all as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp_star == 0 {
            0.0
        } else {
            self.tp as f64 / self.tp_star as f64
        }
    }

    pub fn f_measure(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn precision_pct(&self) -> u32 {
        percent_int(self.tp, self.all)
    }

    pub fn recall_pct(&self) -> u32 {
        percent_int(self.tp, self.tp_star)
    }

    /// F = 2·TP / (All + TPstar), exact in integers.
    pub fn f_pct(&self) -> u32 {
        percent_int(2 * self.tp, self.all + self.tp_star)
    }
}

/// One row per non-empty subset of the tool universe, ordered by size and
/// then lexicographically.
pub fn combination_stats(m: &MergedGraph) -> Result<Vec<CombinationStats>, MetricsError> {
    let unvalidated: Vec<String> = m
        .edges()
        .filter(|e| e.valid.is_none())
        .map(|e| format_edge_key(&m.edge_key(e)))
        .collect();
    if !unvalidated.is_empty() {
        return Err(MetricsError::UnvalidatedEdges(unvalidated));
    }
    let tools: Vec<&String> = m.tools().iter().collect();
    let k = tools.len();
    if k > MAX_COMBINATION_TOOLS {
        return Err(MetricsError::TooManyTools(k));
    }
    // Exact-region counts, then superset sums over each combination.
    let mut region = vec![(0u64, 0u64); 1 << k];
    for e in m.edges() {
        let mask = tools
            .iter()
            .enumerate()
            .filter(|(_, t)| e.tools.contains(t.as_str()))
            .fold(0usize, |acc, (i, _)| acc | 1 << i);
        region[mask].1 += 1;
        if e.valid == Some(true) {
            region[mask].0 += 1;
        }
    }
    let tp_star = m.true_count() as u64;
    let mut masks: Vec<usize> = (1..1usize << k).collect();
    let members = |mask: usize| -> Vec<String> {
        (0..k).filter(|i| mask >> i & 1 == 1).map(|i| tools[i].clone()).collect()
    };
    masks.sort_by_key(|&mask| (mask.count_ones(), members(mask)));
    Ok(masks
        .into_iter()
        .map(|mask| {
            let (tp, all) = region
                .iter()
                .enumerate()
                .filter(|(r, _)| r & mask != 0)
                .fold((0, 0), |(tp, all), (_, c)| (tp + c.0, all + c.1));
            CombinationStats::from_counts(members(mask), tp, all, tp_star)
        })
        .collect())
}

pub fn stats_csv(rows: &[CombinationStats]) -> String {
    let mut out = String::from("combination,TP,All,TPstar,precision_pct,recall_pct,f_pct\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.name(),
            r.tp,
            r.all,
            r.tp_star,
            r.precision_pct(),
            r.recall_pct(),
            r.f_pct()
        );
    }
    out
}

pub fn stats_table(rows: &[CombinationStats]) -> String {
    let width = rows.iter().map(|r| r.name().len()).max().unwrap_or(0).max("combination".len());
    let mut out = format!(
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>9}  {:>6}  {:>4}\n",
        "combination", "TP", "All", "TPstar", "precision", "recall", "F"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>6}  {:>8}%  {:>5}%  {:>3}%",
            r.name(),
            r.tp,
            r.all,
            r.tp_star,
            r.precision_pct(),
            r.recall_pct(),
            r.f_pct()
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSizeQuery {
    pub population: u64,
    pub z: f64,
    pub margin: f64,
    pub proportion: f64,
}

impl SampleSizeQuery {
    /// 95% confidence, 5% margin, maximal variance.
    pub fn new(population: u64) -> Self {
        SampleSizeQuery {
            population,
            z: 1.96,
            margin: 0.05,
            proportion: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let err = |m: &str| Err(MetricsError::InvalidQuery(m.to_string()));
        if self.population == 0 {
            return err("population must be positive");
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return err("margin must lie in (0, 1)");
        }
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return err("proportion must lie in (0, 1)");
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return err("z must be positive");
        }
        Ok(())
    }

    /// Infinite-population size z²·p·(1−p)/e².
    pub fn n0(&self) -> f64 {
        self.z * self.z * self.proportion * (1.0 - self.proportion) / (self.margin * self.margin)
    }
}

/// Cochran's sample size with finite population correction, rounded to the
/// nearest integer and capped at the population.
pub fn sample_size(q: &SampleSizeQuery) -> u64 {
    let n0 = q.n0();
    let n = n0 / (1.0 + (n0 - 1.0) / q.population as f64);
    (n.round() as u64).min(q.population)
}

/// Edges of the region found by exactly `region` (tool ids, any case),
/// in canonical key order.
pub fn region_edges(m: &MergedGraph, region: &[&str]) -> Vec<EdgeKey> {
    let want: BTreeSet<String> = region.iter().map(|t| t.to_lowercase()).collect();
    let mut keys: Vec<EdgeKey> = m
        .edges()
        .filter(|e| e.tools == want)
        .map(|e| m.edge_key(e))
        .collect();
    keys.sort();
    keys
}

/// Uniform sample without replacement, returned in canonical order.
pub fn sample_edges(m: &MergedGraph, region: &[&str], n: usize, seed: u64) -> Result<Vec<EdgeKey>, MetricsError> {
    let population = region_edges(m, region);
    if n > population.len() {
        return Err(MetricsError::SampleTooLarge {
            requested: n,
            population: population.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, population.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| population[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProportionEstimate {
    pub true_count: u64,
    pub sample_size: u64,
    pub population: u64,
    pub estimate: f64,
    /// Two decimals, truncated.
    pub percent: String,
    /// Estimate scaled to the population.
    pub projected_true: f64,
}

pub fn proportion_summary(true_count: u64, sample_size: u64, population: u64) -> ProportionEstimate {
    let estimate = if sample_size == 0 {
        0.0
    } else {
        true_count as f64 / sample_size as f64
    };
    ProportionEstimate {
        true_count,
        sample_size,
        population,
        estimate,
        percent: ratio_percent(true_count, sample_size, 2, Rounding::Truncate),
        projected_true: estimate * population as f64,
    }
}
