//! Graph-based entropy over a sliding window of weeks.
//!
//! For each week `t` the baskets of the window ending at `t` are turned into a
//! co-occurrence graph, each basket is assigned to its nearest cluster by
//! binary cosine similarity, and `Hg(t)` is the Shannon entropy of the
//! resulting cluster frequencies. The change score `cps(t)` is the drop of
//! `Hg(t)` below the mean of the preceding `delta_t` values, clamped at zero,
//! and the `theta_r` weeks with the largest score raise alerts.

use std::cmp::Ordering;
use std::io::Write;

use crate::dataset::{window, Basket, WeeklyDataset};
use crate::error::{Error, Result};
use crate::graph::{check_rho, ClusterPartition, CooccurrenceGraph};

/// Tuning knobs for detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    /// Edge density in `(0, 1]`.
    pub rho: f64,
    /// Window length in weeks.
    pub delta_t: u32,
    /// Number of weeks to alert on. Required by [`detect`].
    pub theta_r: Option<usize>,
    pub log_base: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            rho: 0.06,
            delta_t: 4,
            theta_r: None,
            log_base: 2.0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        if self.delta_t == 0 {
            return Err(Error::parameter("delta_t must be at least 1"));
        }
        if self.theta_r == Some(0) {
            return Err(Error::parameter("theta_r must be at least 1"));
        }
        if !(self.log_base > 1.0 && self.log_base.is_finite()) {
            return Err(Error::parameter(format!(
                "log base must be a finite number greater than 1, got {}",
                self.log_base
            )));
        }
        Ok(())
    }
}

/// Compares `o1/sqrt(s1)` against `o2/sqrt(s2)` exactly via `o1²·s2` vs `o2²·s1`.
fn cmp_cosine(overlap1: u64, size1: u64, overlap2: u64, size2: u64) -> Ordering {
    (u128::from(overlap1 * overlap1) * u128::from(size2))
        .cmp(&(u128::from(overlap2 * overlap2) * u128::from(size1)))
}

/// Cluster with the highest cosine between the basket and cluster indicator
/// vectors, ties going to the smaller cluster id.
///
/// The basket is restricted to the partition's items before normalising.
/// Returns `None` when the basket shares no item with the partition.
pub fn nearest_cluster(basket: &Basket, partition: &ClusterPartition) -> Option<usize> {
    let mut overlaps: Vec<(usize, u64)> = Vec::new();
    for &item in basket.items() {
        if let Some(id) = partition.cluster_of(item) {
            match overlaps.iter_mut().find(|(c, _)| *c == id) {
                Some((_, n)) => *n += 1,
                None => overlaps.push((id, 1)),
            }
        }
    }
    // The basket norm is shared by every candidate, so only overlap/sqrt(|cluster|) matters.
    let size = |id: usize| partition.clusters()[id].len() as u64;
    overlaps
        .into_iter()
        .max_by(|&(c1, o1), &(c2, o2)| cmp_cosine(o1, size(c1), o2, size(c2)).then(c2.cmp(&c1)))
        .map(|(id, _)| id)
}

/// Cosine between a basket and one cluster, with the basket restricted to the
/// partition's items. Zero if they do not overlap.
pub fn cluster_cosine(basket: &Basket, partition: &ClusterPartition, cluster: usize) -> f64 {
    let restricted = basket
        .items()
        .iter()
        .filter(|&&i| partition.cluster_of(i).is_some())
        .count();
    let overlap = basket
        .items()
        .iter()
        .filter(|&&i| partition.cluster_of(i) == Some(cluster))
        .count();
    if overlap == 0 {
        return 0.0;
    }
    overlap as f64 / ((restricted * partition.clusters()[cluster].len()) as f64).sqrt()
}

/// Number of baskets assigned to each cluster id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterFrequencies {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ClusterFrequencies {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }
}

/// Assigns every basket to its nearest cluster. Baskets with no item in the
/// partition are left out of both the counts and the total.
pub fn cluster_frequencies(bs: &[&Basket], partition: &ClusterPartition) -> ClusterFrequencies {
    let mut counts = vec![0u64; partition.len()];
    for basket in bs {
        if let Some(id) = nearest_cluster(basket, partition) {
            counts[id] += 1;
        }
    }
    ClusterFrequencies::from_counts(counts)
}

/// Shannon entropy of the cluster distribution in units of `log_base`.
/// Empty clusters contribute nothing; `None` when no basket was assigned.
pub fn graph_entropy(freqs: &ClusterFrequencies, log_base: f64) -> Option<f64> {
    if freqs.total == 0 {
        return None;
    }
    let total = freqs.total as f64;
    let nats: f64 = freqs
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    // -0.0 for a single cluster
    Some((nats / log_base.ln()).max(0.0))
}

/// Everything computed for one week's window.
#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub week: u32,
    pub graph: CooccurrenceGraph,
    pub partition: ClusterPartition,
    pub frequencies: ClusterFrequencies,
    pub hg: Option<f64>,
}

/// Builds the window ending at `t` and evaluates `Hg(t)`.
pub fn analyze_window(
    ds: &WeeklyDataset,
    t: u32,
    params: &DetectionParams,
) -> Result<WindowAnalysis> {
    params.validate()?;
    let baskets = window(ds, t, params.delta_t)?;
    if baskets.is_empty() {
        let graph = CooccurrenceGraph {
            items: Vec::new(),
            edges: Vec::new(),
            bridges: Vec::new(),
            rho: params.rho,
        };
        return Ok(WindowAnalysis {
            week: t,
            partition: graph.partition(),
            graph,
            frequencies: ClusterFrequencies::from_counts(Vec::new()),
            hg: None,
        });
    }
    let graph = CooccurrenceGraph::build(&baskets, ds.catalog(), params.rho)?;
    let partition = graph.partition();
    let frequencies = cluster_frequencies(&baskets, &partition);
    let hg = graph_entropy(&frequencies, params.log_base);
    Ok(WindowAnalysis {
        week: t,
        graph,
        partition,
        frequencies,
        hg,
    })
}

/// `Hg(t)` for every week `1..=T`; index `t - 1` holds week `t`.
pub fn gbe_series(ds: &WeeklyDataset, params: &DetectionParams) -> Result<Vec<Option<f64>>> {
    (1..=ds.horizon())
        .map(|t| analyze_window(ds, t, params).map(|w| w.hg))
        .collect()
}

/// Drop of `Hg(t)` below the mean of the defined values among the `delta_t`
/// preceding weeks, clamped at zero.
///
/// `hg` is indexed by `week - 1`. Returns `None` if `Hg(t)` is undefined or no
/// preceding value exists.
pub fn change_score(hg: &[Option<f64>], t: u32, delta_t: u32) -> Option<f64> {
    if t == 0 {
        return None;
    }
    let current = (*hg.get(t as usize - 1)?)?;
    let prior: Vec<f64> = (1..=delta_t)
        .filter_map(|dt| t.checked_sub(dt).filter(|&w| w >= 1))
        .filter_map(|w| hg[w as usize - 1])
        .collect();
    if prior.is_empty() {
        return None;
    }
    let mean = prior.iter().sum::<f64>() / prior.len() as f64;
    Some((mean - current).max(0.0))
}

/// Marks the `theta_r` weeks with the highest defined score; ties go to the
/// earlier week. `cps` is indexed by `week - 1`.
pub fn top_alerts(cps: &[Option<f64>], theta_r: usize) -> Result<Vec<bool>> {
    if theta_r == 0 {
        return Err(Error::parameter("theta_r must be at least 1"));
    }
    let mut ranked: Vec<(usize, f64)> = cps
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut alerts = vec![false; cps.len()];
    for &(i, _) in ranked.iter().take(theta_r) {
        alerts[i] = true;
    }
    Ok(alerts)
}

/// Per-week entropy, change score and alert flag; index `t - 1` holds week `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeScoreSeries {
    pub hg: Vec<Option<f64>>,
    pub cps: Vec<Option<f64>>,
    pub alerts: Vec<bool>,
}

impl ChangeScoreSeries {
    /// Builds scores from an entropy series. With `theta_r == 0` no week is alerted.
    pub fn from_entropy(hg: Vec<Option<f64>>, delta_t: u32, theta_r: usize) -> Result<Self> {
        let cps: Vec<Option<f64>> = (1..=hg.len() as u32)
            .map(|t| change_score(&hg, t, delta_t))
            .collect();
        let alerts = if theta_r == 0 {
            vec![false; cps.len()]
        } else {
            top_alerts(&cps, theta_r)?
        };
        Ok(Self { hg, cps, alerts })
    }

    /// Weeks (1-based) with a raised alert.
    pub fn alert_weeks(&self) -> Vec<u32> {
        flagged_weeks(&self.alerts)
    }

    /// Writes `week,hg,cps_gbe,alert` rows, `NA` for undefined values.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "week,hg,cps_gbe,alert")?;
        for (i, ((hg, cps), alert)) in self.hg.iter().zip(&self.cps).zip(&self.alerts).enumerate() {
            writeln!(
                writer,
                "{},{},{},{}",
                i + 1,
                fmt_opt(*hg),
                fmt_opt(*cps),
                alert
            )?;
        }
        Ok(())
    }
}

pub(crate) fn flagged_weeks(flags: &[bool]) -> Vec<u32> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i as u32 + 1)
        .collect()
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

/// Runs the full detection pipeline. `params.theta_r` must be set.
pub fn detect(ds: &WeeklyDataset, params: &DetectionParams) -> Result<ChangeScoreSeries> {
    params.validate()?;
    let theta_r = params
        .theta_r
        .ok_or_else(|| Error::parameter("theta_r must be given"))?;
    let hg = gbe_series(ds, params)?;
    ChangeScoreSeries::from_entropy(hg, params.delta_t, theta_r)
}
