//! RDP → (ε, δ)-DP conversion and its inverse for DP-target filters.

use serde::{Deserialize, Serialize};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::orders::OrderSet;

/// An (ε, δ)-DP guarantee together with the order that certifies it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpGuarantee {
    pub epsilon: f64,
    pub delta: f64,
    pub witness_order: f64,
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

pub(crate) fn check_order(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(alpha))
    }
}

/// `ln(1/δ) / (α − 1)`, the price of turning an order-α bound into a tail
/// bound at level δ. Shared by both directions of the conversion so that a
/// DP-target budget converts back without rounding drift.
pub(crate) fn tail_penalty(alpha: f64, delta: f64) -> f64 {
    (1.0 / delta).ln() / (alpha - 1.0)
}

/// `ε_RDP + ln(1/δ)/(α − 1)`.
pub fn rdp_to_dp(eps_rdp: f64, alpha: f64, delta: f64) -> Result<f64> {
    check_order(alpha)?;
    check_delta(delta)?;
    if !eps_rdp.is_finite() || eps_rdp < 0.0 {
        return Err(Error::InvalidEpsilon(eps_rdp));
    }
    Ok(eps_rdp + tail_penalty(alpha, delta))
}

/// Best DP guarantee implied by a curve: the minimum of [`rdp_to_dp`] over
/// the tracked orders, ties going to the smallest order.
pub fn curve_to_dp(curve: &RdpCurve, delta: f64) -> Result<DpGuarantee> {
    check_delta(delta)?;
    let mut best: Option<DpGuarantee> = None;
    for (alpha, eps) in curve.iter() {
        let epsilon = eps + tail_penalty(alpha, delta);
        if best.is_none_or(|b| epsilon < b.epsilon) {
            best = Some(DpGuarantee {
                epsilon,
                delta,
                witness_order: alpha,
            });
        }
    }
    Ok(best.expect("curves are never empty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetStatus {
    Ok,
    /// Every order received a zero budget: a filter with this cap PASSes
    /// every nonzero request.
    AllZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetBudget {
    pub budget: RdpCurve,
    pub status: TargetStatus,
}

/// Per-order RDP caps implying an (ε_DP, δ)-DP target:
/// `max(0, ε_DP − ln(1/δ)/(α − 1))`.
///
/// Each positive entry is rounded down until converting it back with
/// [`rdp_to_dp`] lands at or below `eps_dp` in floating point, so any spend
/// that stays under the cap at some order converts to at most `eps_dp`.
pub fn dp_target_to_rdp_budget(eps_dp: f64, delta: f64, orders: &OrderSet) -> Result<TargetBudget> {
    check_delta(delta)?;
    if !eps_dp.is_finite() || eps_dp <= 0.0 {
        return Err(Error::InvalidTarget(eps_dp));
    }
    let budget = RdpCurve::from_fn(orders, |alpha| {
        let penalty = tail_penalty(alpha, delta);
        let mut cap = eps_dp - penalty;
        if cap <= 0.0 {
            return 0.0;
        }
        while cap > 0.0 && cap + penalty > eps_dp {
            cap = cap.next_down();
        }
        cap.max(0.0)
    })?;
    let status = if budget.is_zero() {
        TargetStatus::AllZero
    } else {
        TargetStatus::Ok
    };
    Ok(TargetBudget { budget, status })
}
