//! Seeded synthetic basket data following a schedule of preference phases.
//!
//! Each phase lists item contexts and the probability of a basket coming
//! from each one. A basket first picks a context, then includes every context
//! item with probability `p_in` and every other item with probability
//! `p_noise`. Empty draws are retried.
//!
//! # Random stream
//!
//! The generator is PCG XSL-RR 128/64 (`Pcg64` in `rand_pcg`), created with
//! state `seed` and increment [`PCG_STREAM`]. Every sampling decision consumes
//! exactly one 64-bit output `u`:
//!
//! * context choice: with cumulative weights `c_k`, pick the first `k` such
//!   that `u < floor(c_k · 2^64)`, falling back to the last context;
//! * Bernoulli inclusion with probability `p`: include iff
//!   `u < floor(p · 2^64)` (saturating, so `p = 1` always includes).
//!
//! For every basket attempt the draws are one context choice followed by one
//! inclusion draw per item in ascending item order.

use std::fmt;

use rand_core::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::dataset::{Basket, ItemCatalog, WeeklyDataset};
use crate::error::{Error, Result};

/// Increment (stream selector) of the PCG generator.
pub const PCG_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

/// Attempts per basket before generation fails.
pub const MAX_BASKET_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Single,
    Split,
    Focus,
    Merged,
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PhaseKind::Single => "single",
            PhaseKind::Split => "split",
            PhaseKind::Focus => "focus",
            PhaseKind::Merged => "merged",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub kind: PhaseKind,
    /// Length in weeks.
    pub duration: u32,
    /// Item ordinals of each context.
    pub contexts: Vec<Vec<usize>>,
    /// Probability of each context; sums to 1.
    pub weights: Vec<f64>,
    pub p_in: f64,
    pub p_noise: f64,
}

impl PhaseConfig {
    /// A phase whose contexts are all equally likely.
    pub fn uniform(
        kind: PhaseKind,
        duration: u32,
        contexts: Vec<Vec<usize>>,
        p_in: f64,
        p_noise: f64,
    ) -> Self {
        let weights = vec![1.0 / contexts.len() as f64; contexts.len()];
        Self {
            kind,
            duration,
            contexts,
            weights,
            p_in,
            p_noise,
        }
    }

    pub fn validate(&self, n_items: usize) -> Result<()> {
        if self.duration == 0 {
            return Err(Error::validation(
                "phase duration must be at least one week",
            ));
        }
        if self.contexts.is_empty() {
            return Err(Error::validation("phase needs at least one context"));
        }
        if self.weights.len() != self.contexts.len() {
            return Err(Error::validation(format!(
                "{} weights given for {} contexts",
                self.weights.len(),
                self.contexts.len()
            )));
        }
        for context in &self.contexts {
            if context.is_empty() {
                return Err(Error::validation("context has no items"));
            }
            if let Some(&bad) = context.iter().find(|&&i| i >= n_items) {
                return Err(Error::validation(format!(
                    "context item {bad} is outside 0..{n_items}"
                )));
            }
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::validation("context weights must be non-negative"));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "context weights sum to {sum}, not 1"
            )));
        }
        if !(self.p_in > 0.0 && self.p_in <= 1.0) {
            return Err(Error::validation(format!(
                "p_in must lie in (0, 1], got {}",
                self.p_in
            )));
        }
        if !(self.p_noise >= 0.0 && self.p_noise < self.p_in) {
            return Err(Error::validation(format!(
                "p_noise must lie in [0, p_in), got {}",
                self.p_noise
            )));
        }
        Ok(())
    }
}

/// Splits `0..n_items` into `k` contiguous contexts of near-equal size.
pub fn equal_contexts(n_items: usize, k: usize) -> Vec<Vec<usize>> {
    (0..k)
        .map(|j| (j * n_items / k..(j + 1) * n_items / k).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    /// First week of the new phase.
    pub week: u32,
    pub from: PhaseKind,
    pub to: PhaseKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthGroundTruth {
    pub horizon: u32,
    pub transitions: Vec<Transition>,
}

/// Converts a probability to a 64-bit acceptance threshold.
fn threshold(p: f64) -> u64 {
    // `as` saturates, so p >= 1 maps to u64::MAX
    (p * 18_446_744_073_709_551_616.0) as u64
}

fn accept(rng: &mut Pcg64, limit: u64) -> bool {
    let u = rng.next_u64();
    limit == u64::MAX || u < limit
}

/// Item names `item000`, `item001`, ... zero-padded so lexicographic order
/// equals numeric order.
pub fn item_name(ordinal: usize, n_items: usize) -> String {
    let width = (n_items.saturating_sub(1)).to_string().len().max(3);
    format!("item{ordinal:0width$}")
}

pub fn generate(
    schedule: &[PhaseConfig],
    n_items: usize,
    baskets_per_week: usize,
    seed: u64,
) -> Result<(WeeklyDataset, SynthGroundTruth)> {
    if n_items < 2 {
        return Err(Error::validation("need at least 2 items"));
    }
    if baskets_per_week == 0 {
        return Err(Error::validation("need at least 1 basket per week"));
    }
    if schedule.is_empty() {
        return Err(Error::validation("schedule is empty"));
    }
    for phase in schedule {
        phase.validate(n_items)?;
    }

    let mut rng = Pcg64::new(u128::from(seed), PCG_STREAM);
    let catalog = ItemCatalog::new((0..n_items).map(|i| item_name(i, n_items)));
    let mut baskets = Vec::with_capacity(
        schedule.iter().map(|p| p.duration as usize).sum::<usize>() * baskets_per_week,
    );
    let mut transitions = Vec::new();
    let mut week = 0u32;

    for (idx, phase) in schedule.iter().enumerate() {
        if idx > 0 {
            transitions.push(Transition {
                week: week + 1,
                from: schedule[idx - 1].kind,
                to: phase.kind,
            });
        }
        let mut cumulative = 0.0;
        let context_limits: Vec<u64> = phase
            .weights
            .iter()
            .map(|w| {
                cumulative += w;
                threshold(cumulative)
            })
            .collect();
        let mut membership = vec![vec![false; n_items]; phase.contexts.len()];
        for (k, context) in phase.contexts.iter().enumerate() {
            for &item in context {
                membership[k][item] = true;
            }
        }
        let (in_limit, noise_limit) = (threshold(phase.p_in), threshold(phase.p_noise));

        for _ in 0..phase.duration {
            week += 1;
            for k in 0..baskets_per_week {
                let mut items = Vec::new();
                for attempt in 0.. {
                    if attempt == MAX_BASKET_ATTEMPTS {
                        return Err(Error::Generation(format!(
                            "week {week}: basket still empty after {MAX_BASKET_ATTEMPTS} attempts"
                        )));
                    }
                    let u = rng.next_u64();
                    let context = context_limits
                        .iter()
                        .position(|&limit| u < limit)
                        .unwrap_or(context_limits.len() - 1);
                    items.clear();
                    for (item, &member) in membership[context].iter().enumerate() {
                        let limit = if member { in_limit } else { noise_limit };
                        if accept(&mut rng, limit) {
                            items.push(item);
                        }
                    }
                    if !items.is_empty() {
                        break;
                    }
                }
                baskets.push(Basket::new(format!("w{week}-b{k}"), week, items.clone()));
            }
        }
    }

    let dataset = WeeklyDataset::from_baskets(catalog, baskets)?;
    Ok((
        dataset,
        SynthGroundTruth {
            horizon: week,
            transitions,
        },
    ))
}

/// The three-phase benchmark: one context, then four equally likely disjoint
/// contexts, then focus on a single one of them.
pub fn benchmark_schedule(
    n_items: usize,
    weeks_per_phase: u32,
    p_in: f64,
    p_noise: f64,
) -> Vec<PhaseConfig> {
    let split = equal_contexts(n_items, 4);
    vec![
        PhaseConfig::uniform(
            PhaseKind::Single,
            weeks_per_phase,
            vec![split[0].clone()],
            p_in,
            p_noise,
        ),
        PhaseConfig::uniform(
            PhaseKind::Split,
            weeks_per_phase,
            split.clone(),
            p_in,
            p_noise,
        ),
        PhaseConfig::uniform(
            PhaseKind::Focus,
            weeks_per_phase,
            vec![split[1].clone()],
            p_in,
            p_noise,
        ),
    ]
}
