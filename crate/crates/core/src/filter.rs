//! Privacy filters over the Rényi curve.
//!
//! A filter holds a cap curve fixed before the interaction and answers each
//! adaptively chosen request with GRANT or PASS. A request is PASSed exactly
//! when granting it would overrun the cap at *every* tracked order; otherwise
//! it is added to the spend at every order. A PASSed query costs nothing and
//! later, smaller requests can still be granted.

use serde::{Deserialize, Serialize};

use crate::conversion::{dp_target_to_rdp_budget, TargetStatus};
use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::orders::OrderSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Grant,
    Pass,
}

/// One line of the filter event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterEvent {
    #[serde(rename = "i")]
    pub index: u64,
    pub request: RdpCurve,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    cap: RdpCurve,
    spent: RdpCurve,
    history: Vec<FilterEvent>,
    sealed: bool,
    tripped: bool,
}

impl FilterState {
    pub fn new(cap: RdpCurve) -> Self {
        let spent = RdpCurve::zeros(cap.orders());
        FilterState {
            cap,
            spent,
            history: Vec::new(),
            sealed: false,
            tripped: false,
        }
    }

    /// A filter that PASSes everything once it has PASSed anything.
    pub fn new_sealed(cap: RdpCurve) -> Self {
        FilterState {
            sealed: true,
            ..Self::new(cap)
        }
    }

    /// Filter whose cap implies an (ε_DP, δ)-DP guarantee for the whole
    /// interaction.
    pub fn from_dp_target(eps_dp: f64, delta: f64, orders: &OrderSet) -> Result<Self> {
        let target = dp_target_to_rdp_budget(eps_dp, delta, orders)?;
        Ok(Self::new(target.budget))
    }

    pub fn cap(&self) -> &RdpCurve {
        &self.cap
    }

    pub fn spent(&self) -> &RdpCurve {
        &self.spent
    }

    pub fn orders(&self) -> &OrderSet {
        self.cap.orders()
    }

    pub fn history(&self) -> &[FilterEvent] {
        &self.history
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// [`TargetStatus::AllZero`] when the cap is zero everywhere.
    pub fn cap_status(&self) -> TargetStatus {
        if self.cap.is_zero() {
            TargetStatus::AllZero
        } else {
            TargetStatus::Ok
        }
    }

    /// The decision `try_spend` would take, without recording it.
    pub fn decide(&self, request: &RdpCurve) -> Result<Decision> {
        request.ensure_same_orders(&self.cap)?;
        if self.sealed && self.tripped {
            return Ok(Decision::Pass);
        }
        let fits_somewhere = self
            .spent
            .values()
            .iter()
            .zip(request.values())
            .zip(self.cap.values())
            .any(|((spent, req), cap)| spent + req <= *cap);
        Ok(if fits_somewhere {
            Decision::Grant
        } else {
            Decision::Pass
        })
    }

    pub fn try_spend(&mut self, request: &RdpCurve) -> Result<Decision> {
        let decision = self.decide(request)?;
        match decision {
            Decision::Grant => self.spent.add_assign(request)?,
            Decision::Pass => self.tripped = true,
        }
        self.history.push(FilterEvent {
            index: self.history.len() as u64 + 1,
            request: request.clone(),
            decision,
        });
        Ok(decision)
    }

    /// `max(0, cap − spent)` at every order.
    pub fn remaining(&self) -> RdpCurve {
        self.cap
            .saturating_sub(&self.spent)
            .expect("cap and spent share orders")
    }

    /// Smallest order at which the spend is still within the cap. Always
    /// `Some` for a filter driven only through `try_spend`.
    pub fn witness_order(&self) -> Option<f64> {
        self.spent
            .iter()
            .zip(self.cap.values())
            .find(|((_, spent), cap)| spent <= *cap)
            .map(|((alpha, _), _)| alpha)
    }

    /// Rebuild a filter from its event log, checking that every recorded
    /// decision is the one the filter takes.
    pub fn replay(cap: RdpCurve, sealed: bool, events: &[FilterEvent]) -> Result<Self> {
        let mut state = if sealed {
            Self::new_sealed(cap)
        } else {
            Self::new(cap)
        };
        for event in events {
            let expected = state.history.len() as u64 + 1;
            if event.index != expected {
                return Err(Error::ReplayMismatch {
                    index: event.index,
                    detail: format!("expected event index {expected}"),
                });
            }
            let decision = state.try_spend(&event.request)?;
            if decision != event.decision {
                return Err(Error::ReplayMismatch {
                    index: event.index,
                    detail: format!("logged {:?}, filter decides {:?}", event.decision, decision),
                });
            }
        }
        Ok(state)
    }
}
