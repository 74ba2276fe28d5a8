//! Privacy odometers: running (ε, δ)-DP bounds under fully adaptive budgets.
//!
//! The odometer never refuses a request. It records the unconditional spend
//! and, per order, the smallest level of a doubling sequence of filters that
//! the spend still fits in. The reported bound pays a `ln(|Λ|·2f²/δ)` union
//! bound over orders and filter levels, so it holds at any stopping time.

use serde::{Deserialize, Serialize};

use crate::conversion::{check_delta, check_order, DpGuarantee};
use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::orders::OrderSet;

/// Largest filter index the schedule will hand out.
pub const MAX_FILTER_INDEX: u32 = 64;

/// Doubling filter levels `level(f, α) = 2^{f−1}·ln(2|Λ|/δ)/(α−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSchedule {
    delta: f64,
    orders: OrderSet,
}

impl FilterSchedule {
    pub fn new(delta: f64, orders: OrderSet) -> Result<Self> {
        check_delta(delta)?;
        Ok(FilterSchedule { delta, orders })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn orders(&self) -> &OrderSet {
        &self.orders
    }

    fn cardinality(&self) -> f64 {
        self.orders.len() as f64
    }

    /// First level: the best bound attainable at order α, `ln(2|Λ|/δ)/(α−1)`.
    pub fn base(&self, alpha: f64) -> f64 {
        (2.0 * self.cardinality() / self.delta).ln() / (alpha - 1.0)
    }

    /// `level(f, α)`; doubling is exact in binary floating point.
    pub fn level(&self, f: u32, alpha: f64) -> f64 {
        debug_assert!(f >= 1);
        self.base(alpha) * 2f64.powi(f as i32 - 1)
    }

    /// Smallest `f` with `spent ≤ level(f, α)`, or `None` past
    /// [`MAX_FILTER_INDEX`].
    pub fn index_for(&self, spent: f64, alpha: f64) -> Option<u32> {
        self.index_from(1, spent, alpha)
    }

    fn index_from(&self, start: u32, spent: f64, alpha: f64) -> Option<u32> {
        (start.max(1)..=MAX_FILTER_INDEX).find(|&f| spent <= self.level(f, alpha))
    }

    /// `level(f, α) + ln(|Λ|·2f²/δ)/(α−1)`: the DP bound certified at order α
    /// when the spend sits in filter `f`.
    pub fn candidate(&self, f: u32, alpha: f64) -> f64 {
        let fr = f as f64;
        let tail = (self.cardinality() * 2.0 * fr * fr / self.delta).ln() / (alpha - 1.0);
        self.level(f, alpha) + tail
    }
}

/// Running DP bound reported by the odometer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningBound {
    pub eps_dp: f64,
    pub witness_order: f64,
    pub witness_level: u32,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdometerEvent {
    #[serde(rename = "i")]
    pub index: u64,
    pub request: RdpCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdometerState {
    schedule: FilterSchedule,
    spent: RdpCurve,
    // None once the spend at that order outgrows every level
    filter_indices: Vec<Option<u32>>,
    history: Vec<OdometerEvent>,
}

impl OdometerState {
    pub fn new(schedule: FilterSchedule) -> Self {
        let spent = RdpCurve::zeros(schedule.orders());
        let filter_indices = vec![Some(1); schedule.orders().len()];
        OdometerState {
            schedule,
            spent,
            filter_indices,
            history: Vec::new(),
        }
    }

    pub fn schedule(&self) -> &FilterSchedule {
        &self.schedule
    }

    pub fn spent(&self) -> &RdpCurve {
        &self.spent
    }

    pub fn step(&self) -> u64 {
        self.history.len() as u64
    }

    pub fn history(&self) -> &[OdometerEvent] {
        &self.history
    }

    /// Record a request. The odometer never refuses.
    pub fn spend(&mut self, request: &RdpCurve) -> Result<()> {
        self.spent.add_assign(request)?;
        for (slot, (alpha, spent)) in self.filter_indices.iter_mut().zip(self.spent.iter()) {
            if let Some(f) = *slot {
                if spent > self.schedule.level(f, alpha) {
                    *slot = self.schedule.index_from(f + 1, spent, alpha);
                }
            }
        }
        self.history.push(OdometerEvent {
            index: self.history.len() as u64 + 1,
            request: request.clone(),
        });
        Ok(())
    }

    /// Filter index currently occupied at order `alpha`.
    pub fn filter_index(&self, alpha: f64) -> Result<u32> {
        let i = self
            .schedule
            .orders()
            .index_of(alpha)
            .ok_or(Error::UnknownOrder(alpha))?;
        self.filter_indices[i].ok_or(Error::FilterIndexOverflow(MAX_FILTER_INDEX))
    }

    /// Filter index at every order, in order-set order.
    pub fn filter_indices(&self) -> &[Option<u32>] {
        &self.filter_indices
    }

    /// Minimum over orders of the per-order candidate bound; ties go to the
    /// smallest order. An order whose spend outgrew every level contributes
    /// `+∞`.
    pub fn running_bound(&self) -> RunningBound {
        let mut best = RunningBound {
            eps_dp: f64::INFINITY,
            witness_order: self.schedule.orders().min(),
            witness_level: MAX_FILTER_INDEX + 1,
            delta: self.schedule.delta(),
        };
        for (alpha, f) in self.schedule.orders().iter().zip(&self.filter_indices) {
            if let Some(f) = *f {
                let eps = self.schedule.candidate(f, alpha);
                if eps < best.eps_dp {
                    best.eps_dp = eps;
                    best.witness_order = alpha;
                    best.witness_level = f;
                }
            }
        }
        best
    }

    /// Per-order candidate bound at `alpha`.
    pub fn candidate_at(&self, alpha: f64) -> Result<f64> {
        let f = self.filter_index(alpha)?;
        Ok(self.schedule.candidate(f, alpha))
    }

    /// Rebuild an odometer from its recorded requests.
    pub fn replay(schedule: FilterSchedule, events: &[OdometerEvent]) -> Result<Self> {
        let mut state = Self::new(schedule);
        for event in events {
            let expected = state.step() + 1;
            if event.index != expected {
                return Err(Error::ReplayMismatch {
                    index: event.index,
                    detail: format!("expected event index {expected}"),
                });
            }
            state.spend(&event.request)?;
        }
        Ok(state)
    }
}

/// DP bound for an interaction whose per-step budgets are fixed in advance
/// and only the stopping time `s` is adaptive: per order,
/// `Σ_{i≤s} ε_i(α) + ln(|Λ|·2s²/δ)/(α−1)`, minimized over orders.
pub fn early_stopping_bound(steps: &[RdpCurve], s: usize, delta: f64) -> Result<DpGuarantee> {
    check_delta(delta)?;
    if s == 0 || s > steps.len() {
        return Err(Error::StepOutOfRange { s, len: steps.len() });
    }
    let mut total = steps[0].clone();
    for step in &steps[1..s] {
        total.add_assign(step)?;
    }
    let k = total.orders().len() as f64;
    let s = s as f64;
    let log_term = (k * 2.0 * s * s / delta).ln();
    let mut best: Option<DpGuarantee> = None;
    for (alpha, eps) in total.iter() {
        let epsilon = eps + log_term / (alpha - 1.0);
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

/// The view of a request sequence through the truncated adversary `T_f` at
/// order `alpha`: requests are kept while the running spend at `alpha` stays
/// within `level(f, α)`; from the first request that would exceed it, every
/// entry becomes the zero curve.
pub fn truncate(
    events: &[RdpCurve],
    schedule: &FilterSchedule,
    f: u32,
    alpha: f64,
) -> Result<Vec<RdpCurve>> {
    check_order(alpha)?;
    if f == 0 || f > MAX_FILTER_INDEX {
        return Err(Error::Config(format!("filter index must be in 1..={MAX_FILTER_INDEX}")));
    }
    let i = schedule
        .orders()
        .index_of(alpha)
        .ok_or(Error::UnknownOrder(alpha))?;
    let limit = schedule.level(f, alpha);
    let mut running = 0.0;
    let mut stopped = false;
    events
        .iter()
        .map(|event| {
            event.ensure_orders(schedule.orders())?;
            if !stopped {
                let next = running + event.values()[i];
                if next <= limit {
                    running = next;
                    return Ok(event.clone());
                }
                stopped = true;
            }
            Ok(RdpCurve::zeros(schedule.orders()))
        })
        .collect()
}
