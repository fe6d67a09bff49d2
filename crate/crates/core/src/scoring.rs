//! Boundary scores and the composite Eco-Score.
//!
//! Pressure on boundary `b` is the quantity-weighted sum of factor weights.
//! It is normalised against the worst case reachable with the same items,
//! i.e. every item replaced by its domain's maximum weight on `b`:
//!
//! ```text
//! score_b = 100 * (1 - pressure_b / worst_b)     (100 when worst_b == 0)
//! ```
//!
//! Scores and the composite are rounded to one decimal; everything before
//! that is full precision.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{Boundary, BoundaryScores, BoundaryWeights, PressureVector, BOUNDARY_COUNT};
use crate::factors::FactorTable;
use crate::item::CanonicalItem;

pub const DEFAULT_EXPLAIN_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("no items to score")]
    EmptyItems,
    #[error("unknown option `{option}` for domain `{domain}`")]
    UnknownOption { domain: String, option: String },
    #[error("quantity {quantity} for ({domain}, {option}) must be finite and non-negative")]
    InvalidQuantity {
        domain: String,
        option: String,
        quantity: f64,
    },
}

/// Rounds half away from zero to one decimal place.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn resolve<'t>(
    item: &CanonicalItem,
    table: &'t FactorTable,
) -> Result<&'t [f64; BOUNDARY_COUNT], ScoringError> {
    if !item.quantity.is_finite() || item.quantity < 0.0 {
        return Err(ScoringError::InvalidQuantity {
            domain: item.domain.clone(),
            option: item.option_key.clone(),
            quantity: item.quantity,
        });
    }
    table
        .weights(&item.domain, &item.option_key)
        .ok_or_else(|| ScoringError::UnknownOption {
            domain: item.domain.clone(),
            option: item.option_key.clone(),
        })
}

pub fn accumulate_pressures(
    items: &[CanonicalItem],
    table: &FactorTable,
) -> Result<PressureVector, ScoringError> {
    let mut total = PressureVector::zero();
    for item in items {
        total.add_scaled(resolve(item, table)?, item.quantity);
    }
    Ok(total)
}

/// Worst-case pressure for the item set: each item at its domain's max.
pub fn worst_case_pressures(
    items: &[CanonicalItem],
    table: &FactorTable,
) -> Result<PressureVector, ScoringError> {
    let mut total = PressureVector::zero();
    for item in items {
        resolve(item, table)?;
        // resolve succeeded, so the domain exists
        let max = table.domain_max(&item.domain).expect("domain of a resolved item");
        total.add_scaled(max, item.quantity);
    }
    Ok(total)
}

pub fn normalise_scores(
    pressures: &PressureVector,
    items: &[CanonicalItem],
    table: &FactorTable,
) -> Result<BoundaryScores, ScoringError> {
    let worst = worst_case_pressures(items, table)?;
    let mut scores = [0.0; BOUNDARY_COUNT];
    for b in Boundary::ALL {
        let p_max = worst[b];
        let raw = if p_max == 0.0 {
            100.0
        } else {
            100.0 * (1.0 - pressures[b] / p_max)
        };
        scores[b.index()] = round1(raw.clamp(0.0, 100.0));
    }
    Ok(BoundaryScores::new(scores).expect("clamped scores are in range"))
}

/// Weighted mean of the boundary scores, rounded to one decimal.
pub fn composite(scores: &BoundaryScores, weights: &BoundaryWeights) -> f64 {
    let (num, den) = Boundary::ALL.iter().fold((0.0, 0.0), |(num, den), b| {
        let w = weights.get(*b);
        (num + w * scores.get(*b), den + w)
    });
    round1((num / den).clamp(0.0, 100.0))
}

/// One item's pressure on one boundary and its share of that boundary's total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contribution {
    pub domain: String,
    pub option_key: String,
    pub boundary: Boundary,
    pub pressure: f64,
    pub share: f64,
}

/// Pressure descending, then `(domain, option_key, boundary code)`.
pub fn contribution_order(a: &Contribution, b: &Contribution) -> Ordering {
    b.pressure
        .total_cmp(&a.pressure)
        .then_with(|| a.domain.cmp(&b.domain))
        .then_with(|| a.option_key.cmp(&b.option_key))
        .then_with(|| a.boundary.code().cmp(b.boundary.code()))
}

pub fn explain(
    items: &[CanonicalItem],
    table: &FactorTable,
    top_k: usize,
) -> Result<Vec<Contribution>, ScoringError> {
    let mut contributions = Vec::new();
    let mut totals = [0.0; BOUNDARY_COUNT];
    for item in items {
        let weights = resolve(item, table)?;
        for b in Boundary::ALL {
            let pressure = item.quantity * weights[b.index()];
            if pressure > 0.0 {
                totals[b.index()] += pressure;
                contributions.push(Contribution {
                    domain: item.domain.clone(),
                    option_key: item.option_key.clone(),
                    boundary: b,
                    pressure,
                    share: 0.0,
                });
            }
        }
    }
    for c in &mut contributions {
        c.share = c.pressure / totals[c.boundary.index()];
    }
    contributions.sort_by(contribution_order);
    contributions.truncate(top_k);
    Ok(contributions)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreResult {
    pub boundary_scores: BoundaryScores,
    pub composite: f64,
    pub explanations: Vec<Contribution>,
    pub items_scored: usize,
}

/// Accumulate, normalise, combine and explain in one pass over `items`.
pub fn score(
    items: &[CanonicalItem],
    table: &FactorTable,
    weights: &BoundaryWeights,
    explain_top_k: usize,
) -> Result<ScoreResult, ScoringError> {
    if items.is_empty() {
        return Err(ScoringError::EmptyItems);
    }
    let pressures = accumulate_pressures(items, table)?;
    let boundary_scores = normalise_scores(&pressures, items, table)?;
    let composite = composite(&boundary_scores, weights);
    let explanations = explain(items, table, explain_top_k)?;
    Ok(ScoreResult {
        boundary_scores,
        composite,
        explanations,
        items_scored: items.len(),
    })
}
