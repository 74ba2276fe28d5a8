//! Ground truth for the accountants.
//!
//! Adaptive interactions over discrete mechanisms are enumerated exactly, so
//! the Rényi divergence between the two worlds' view distributions can be
//! compared with what a filter or truncated odometer promises. Gaussian
//! curves are checked against numerical integration.

mod quadrature;
mod script;
mod views;

use serde::{Deserialize, Serialize};

pub use quadrature::{integrate, numeric_renyi_gaussian};
pub use script::{
    random_mechanism, random_script, AdversaryScript, QueryNode, ScriptNode, ScriptParams,
    MAX_OUTCOMES, MAX_SCRIPT_DEPTH,
};
pub use views::{enumerate_views, renyi_divergence_views, View, ViewDistribution, ViewPolicy};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::odometer::FilterSchedule;

/// Slack allowed between an exact divergence and the bound it must respect.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Divergence against bound at one order. The divergence is the larger of
/// the two directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderMargin {
    pub alpha: f64,
    pub divergence: f64,
    pub forward: f64,
    pub backward: f64,
    pub bound: f64,
    pub margin: f64,
}

impl OrderMargin {
    fn new(alpha: f64, forward: f64, backward: f64, bound: f64) -> Self {
        let divergence = forward.max(backward);
        OrderMargin {
            alpha,
            divergence,
            forward,
            backward,
            bound,
            margin: bound - divergence,
        }
    }

    pub fn within(&self) -> bool {
        self.margin >= -ORACLE_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBoundReport {
    pub holds: bool,
    /// Smallest order where the divergence respects the cap.
    pub witness_order: Option<f64>,
    pub views: usize,
    pub orders: Vec<OrderMargin>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub holds: bool,
    pub f: u32,
    pub orders: Vec<OrderMargin>,
}

fn margins(
    script: &AdversaryScript,
    alpha: f64,
    policy: &ViewPolicy,
    bound: f64,
) -> Result<(OrderMargin, usize)> {
    let (v0, v1) = enumerate_views(script, policy)?;
    let forward = renyi_divergence_views(&v0, &v1, alpha)?;
    let backward = renyi_divergence_views(&v1, &v0, alpha)?;
    Ok((OrderMargin::new(alpha, forward, backward, bound), v0.len()))
}

/// Route `script` through a fresh filter with `cap` and check that some
/// order's exact divergence stays within the cap.
pub fn verify_filter_bound(script: &AdversaryScript, cap: &RdpCurve) -> Result<FilterBoundReport> {
    let script_orders = script.orders();
    cap.ensure_orders(script_orders)?;
    let (v0, v1) = enumerate_views(script, &ViewPolicy::Filter(FilterState::new(cap.clone())))?;
    let mut orders = Vec::with_capacity(cap.len());
    for (alpha, bound) in cap.iter() {
        let forward = renyi_divergence_views(&v0, &v1, alpha)?;
        let backward = renyi_divergence_views(&v1, &v0, alpha)?;
        orders.push(OrderMargin::new(alpha, forward, backward, bound));
    }
    let witness_order = orders.iter().find(|m| m.within()).map(|m| m.alpha);
    Ok(FilterBoundReport {
        holds: witness_order.is_some(),
        witness_order,
        views: v0.len(),
        orders,
    })
}

/// Check `D_α(T_f(V⁰)‖T_f(V¹)) ≤ level(f, α)` at every order of the
/// schedule.
pub fn verify_truncated_odometer(
    script: &AdversaryScript,
    schedule: &FilterSchedule,
    f: u32,
) -> Result<TruncationReport> {
    if !script.orders().same_as(schedule.orders()) {
        return Err(Error::OrderSetMismatch);
    }
    let mut orders = Vec::with_capacity(schedule.orders().len());
    for alpha in schedule.orders().iter() {
        let policy = ViewPolicy::Truncated {
            schedule: schedule.clone(),
            f,
            alpha,
        };
        let (margin, _) = margins(script, alpha, &policy, schedule.level(f, alpha))?;
        orders.push(margin);
    }
    Ok(TruncationReport {
        holds: orders.iter().all(OrderMargin::within),
        f,
        orders,
    })
}
