//! Ground-truth change labels from weekly shifts in the top-R item ranking.
//!
//! Each week's items are ranked by the number of baskets containing them. The
//! week's score sums, over the current top-R list, `(R − i)·|i − j|` for an
//! item at rank `i` that held rank `j` the previous week, and `R·(R − i)` for
//! an item that was not in the previous top-R. A week is alerted when any of
//! it and the next two weeks scores strictly above the mean of the three weeks
//! before it.

use std::collections::HashSet;
use std::io::Write;

use crate::dataset::{Basket, ItemCatalog, WeeklyDataset};
use crate::error::{Error, Result};
use crate::gbe::flagged_weeks;

/// Items ordered by descending basket count, ties by catalog order, truncated
/// to `r`. Items with zero count are never ranked.
pub fn top_ranked(bs: &[&Basket], r: usize, catalog: &ItemCatalog) -> Vec<usize> {
    let mut counts = vec![0u64; catalog.len()];
    for basket in bs {
        for &item in basket.items() {
            counts[item] += 1;
        }
    }
    let mut ranked: Vec<usize> = (0..catalog.len()).filter(|&i| counts[i] > 0).collect();
    ranked.sort_by(|&x, &y| counts[y].cmp(&counts[x]).then(x.cmp(&y)));
    ranked.truncate(r);
    ranked
}

/// Contribution of the item at rank `i` of the current list, given its rank
/// `j` in the previous list (if any).
pub fn rank_contribution(r: usize, i: usize, previous: Option<usize>) -> u64 {
    let weight = (r - i) as u64;
    match previous {
        Some(j) => weight * i.abs_diff(j) as u64,
        None => r as u64 * weight,
    }
}

fn check_unique(list: &[usize], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(list.len());
    if let Some(dup) = list.iter().find(|&&x| !seen.insert(x)) {
        return Err(Error::validation(format!(
            "{what} ranking lists item {dup} twice"
        )));
    }
    Ok(())
}

/// Total weighted rank change between two consecutive top-R lists.
pub fn rank_change_score(cur: &[usize], prev: &[usize], r: usize) -> Result<u64> {
    if r == 0 {
        return Err(Error::parameter("R must be at least 1"));
    }
    if cur.len() > r || prev.len() > r {
        return Err(Error::validation(format!(
            "ranking lists are longer than R = {r}"
        )));
    }
    check_unique(cur, "current")?;
    check_unique(prev, "previous")?;
    Ok(cur
        .iter()
        .enumerate()
        .map(|(i, item)| rank_contribution(r, i, prev.iter().position(|p| p == item)))
        .sum())
}

/// `alert_real(t)`: some week in `[t, min(t+2, T)]` scores strictly above the
/// mean over `[t−3, t−1]`. Weeks lacking three defined trailing scores are
/// never alerted. `cps` is indexed by `week - 1`.
pub fn rank_alerts(cps: &[Option<u64>]) -> Vec<bool> {
    let horizon = cps.len();
    (0..horizon)
        .map(|t| {
            if t < 3 {
                return false;
            }
            let trailing: Option<Vec<u64>> = cps[t - 3..t].iter().copied().collect();
            let Some(trailing) = trailing else {
                return false;
            };
            // mean > x  <=>  sum > 3x, kept in integers
            let sum: u64 = trailing.iter().sum();
            cps[t..(t + 3).min(horizon)]
                .iter()
                .flatten()
                .any(|&v| 3 * v > sum)
        })
        .collect()
}

/// Weekly top-R lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    pub r: usize,
    /// Index `t - 1` holds week `t`.
    pub weeks: Vec<Vec<usize>>,
}

impl RankTable {
    pub fn build(ds: &WeeklyDataset, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::parameter("R must be at least 1"));
        }
        let weeks = (1..=ds.horizon())
            .map(|t| {
                let baskets: Vec<&Basket> = ds.week(t).iter().collect();
                top_ranked(&baskets, r, ds.catalog())
            })
            .collect();
        Ok(Self { r, weeks })
    }
}

/// Rank-change scores (undefined for week 1) and alerts; index `t - 1` holds week `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankChangeSeries {
    pub cps_real: Vec<Option<u64>>,
    pub alert_real: Vec<bool>,
}

impl RankChangeSeries {
    pub fn from_table(table: &RankTable) -> Result<Self> {
        let mut cps_real = Vec::with_capacity(table.weeks.len());
        for (idx, cur) in table.weeks.iter().enumerate() {
            cps_real.push(match idx {
                0 => None,
                _ => Some(rank_change_score(cur, &table.weeks[idx - 1], table.r)?),
            });
        }
        let alert_real = rank_alerts(&cps_real);
        Ok(Self {
            cps_real,
            alert_real,
        })
    }

    pub fn alert_weeks(&self) -> Vec<u32> {
        flagged_weeks(&self.alert_real)
    }

    /// Writes `week,cps_real,alert_real` rows, `NA` where the score is undefined.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "week,cps_real,alert_real")?;
        for (i, (cps, alert)) in self.cps_real.iter().zip(&self.alert_real).enumerate() {
            let cps = cps.map_or_else(|| "NA".to_string(), |v| v.to_string());
            writeln!(writer, "{},{cps},{alert}", i + 1)?;
        }
        Ok(())
    }
}

/// Builds the ranking table and scores for a dataset.
pub fn rank_change_series(ds: &WeeklyDataset, r: usize) -> Result<RankChangeSeries> {
    RankChangeSeries::from_table(&RankTable::build(ds, r)?)
}
