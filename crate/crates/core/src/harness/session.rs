//! Running filter and odometer sessions, and rebuilding their state from logs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::filter::{Decision, FilterState};
use crate::harness::log::{FilterRecord, LogHeader, LogRecord, OdometerRecord, SessionLog};
use crate::harness::replay::ScheduleReplay;
use crate::mechanisms::{MechanismSpec, Outcome, World, BOTTOM_LABEL};
use crate::odometer::{FilterSchedule, OdometerState};
use crate::oracle::{AdversaryScript, ScriptNode};
use crate::orders::OrderSet;

#[derive(Clone, Debug, PartialEq)]
pub enum FilterBudget {
    Cap(RdpCurve),
    /// Cap derived from an (ε, δ)-DP target.
    DpTarget(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SessionMode {
    Filter { budget: FilterBudget, sealed: bool },
    Odometer,
}

/// Who chooses the requests.
#[derive(Clone, Debug, PartialEq)]
pub enum SessionSource {
    /// An adaptive script; each outcome picks the next query.
    Script(AdversaryScript),
    /// A fixed per-step budget schedule.
    Schedule(ScheduleReplay),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub mode: SessionMode,
    pub orders: OrderSet,
    pub delta: f64,
    pub seed: u64,
    pub world: World,
    pub source: SessionSource,
}

impl SessionConfig {
    pub fn filter(cap: RdpCurve, delta: f64, source: SessionSource) -> Self {
        SessionConfig {
            orders: cap.orders().clone(),
            mode: SessionMode::Filter {
                budget: FilterBudget::Cap(cap),
                sealed: false,
            },
            delta,
            seed: 0,
            world: World::Zero,
            source,
        }
    }

    pub fn odometer(orders: OrderSet, delta: f64, source: SessionSource) -> Self {
        SessionConfig {
            mode: SessionMode::Odometer,
            orders,
            delta,
            seed: 0,
            world: World::Zero,
            source,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_world(mut self, world: World) -> Self {
        self.world = world;
        self
    }

    fn validate(&self) -> Result<()> {
        if let SessionSource::Script(script) = &self.source {
            if script.orders() != &self.orders {
                return Err(Error::Config("script orders differ from the session orders".into()));
            }
        }
        if let SessionMode::Filter {
            budget: FilterBudget::Cap(cap),
            ..
        } = &self.mode
        {
            cap.ensure_orders(&self.orders)
                .map_err(|_| Error::Config("cap orders differ from the session orders".into()))?;
        }
        Ok(())
    }
}

/// Live state at the end of a session, or rebuilt from its log.
#[derive(Clone, Debug, PartialEq)]
pub enum SessionState {
    Filter(FilterState),
    Odometer(OdometerState),
}

impl SessionState {
    pub fn spent(&self) -> &RdpCurve {
        match self {
            SessionState::Filter(f) => f.spent(),
            SessionState::Odometer(o) => o.spent(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionRun {
    pub log: SessionLog,
    pub state: SessionState,
}

enum Account {
    Filter(FilterState),
    Odometer(OdometerState),
}

impl Account {
    /// Charge `request`; `false` means the query was PASSed.
    fn charge(&mut self, request: &RdpCurve) -> Result<bool> {
        match self {
            Account::Filter(f) => Ok(f.try_spend(request)? == Decision::Grant),
            Account::Odometer(o) => {
                o.spend(request)?;
                Ok(true)
            }
        }
    }

    fn record(&self, request: RdpCurve, outcome: Option<Outcome>) -> LogRecord {
        match self {
            Account::Filter(f) => {
                let last = f.history().last().expect("charged before recording");
                LogRecord::Filter(FilterRecord {
                    i: last.index,
                    request,
                    decision: last.decision,
                    outcome,
                })
            }
            Account::Odometer(o) => LogRecord::Odometer(OdometerRecord::after(o, request, outcome)),
        }
    }
}

/// Run one session. The log and final state depend only on `config`.
pub fn run_session(config: &SessionConfig) -> Result<SessionRun> {
    config.validate()?;
    let (header, mut account) = match &config.mode {
        SessionMode::Filter { budget, sealed } => {
            let (filter, dp_target) = match budget {
                FilterBudget::Cap(cap) => (FilterState::new(cap.clone()), None),
                FilterBudget::DpTarget(eps) => (
                    FilterState::from_dp_target(*eps, config.delta, &config.orders)?,
                    Some(*eps),
                ),
            };
            crate::conversion::check_delta(config.delta)?;
            let filter = if *sealed {
                FilterState::new_sealed(filter.cap().clone())
            } else {
                filter
            };
            let header = LogHeader::Filter {
                delta: config.delta,
                orders: config.orders.clone(),
                seed: config.seed,
                world: config.world,
                cap: filter.cap().clone(),
                dp_target,
                sealed: *sealed,
            };
            (header, Account::Filter(filter))
        }
        SessionMode::Odometer => {
            let schedule = FilterSchedule::new(config.delta, config.orders.clone())?;
            let header = LogHeader::Odometer {
                delta: config.delta,
                orders: config.orders.clone(),
                seed: config.seed,
                world: config.world,
            };
            (header, Account::Odometer(OdometerState::new(schedule)))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut events = Vec::new();
    match &config.source {
        SessionSource::Script(script) => {
            let mut node = script.root();
            while let ScriptNode::Query(query) = node {
                let request = query.request.clone();
                let outcome = if account.charge(&request)? {
                    let i = query.mechanism.sample_index(config.world, &mut rng);
                    query.mechanism.outcomes()[i].clone()
                } else {
                    BOTTOM_LABEL.to_owned()
                };
                node = query.child(&outcome);
                let outcome = if outcome == BOTTOM_LABEL {
                    Outcome::Bottom
                } else {
                    Outcome::Label(outcome)
                };
                events.push(account.record(request, Some(outcome)));
            }
        }
        SessionSource::Schedule(schedule) => {
            for segment in schedule.segments() {
                let request = segment.mechanism.rdp_curve(&config.orders)?;
                for _ in 0..segment.steps {
                    let outcome = if !account.charge(&request)? {
                        Some(Outcome::Bottom)
                    } else if matches!(segment.mechanism, MechanismSpec::Raw { .. }) {
                        None
                    } else {
                        Some(segment.mechanism.sample(config.world, &mut rng)?)
                    };
                    events.push(account.record(request.clone(), outcome));
                }
            }
        }
    }

    let state = match account {
        Account::Filter(f) => SessionState::Filter(f),
        Account::Odometer(o) => SessionState::Odometer(o),
    };
    Ok(SessionRun {
        log: SessionLog::new(header, events)?,
        state,
    })
}

/// Rebuild the accountant from a log, checking every logged decision, filter
/// index and bound bit for bit.
pub fn reconstruct(log: &SessionLog) -> Result<SessionState> {
    match log.header() {
        LogHeader::Filter { cap, sealed, delta, .. } => {
            crate::conversion::check_delta(*delta)?;
            let events: Vec<_> = log.filter_records().map(FilterRecord::event).collect();
            Ok(SessionState::Filter(FilterState::replay(cap.clone(), *sealed, &events)?))
        }
        LogHeader::Odometer { delta, orders, .. } => {
            let schedule = FilterSchedule::new(*delta, orders.clone())?;
            let mut state = OdometerState::new(schedule);
            for record in log.odometer_records() {
                let expected = state.step() + 1;
                if record.i != expected {
                    return Err(Error::ReplayMismatch {
                        index: record.i,
                        detail: format!("expected event index {expected}"),
                    });
                }
                state.spend(&record.request)?;
                record.matches(&state).map_err(|detail| Error::ReplayMismatch {
                    index: record.i,
                    detail,
                })?;
            }
            Ok(SessionState::Odometer(state))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::replay::ScheduleSegment;
    use crate::mechanisms::{DiscreteMechanism, GaussianMechanism};
    use crate::oracle::ScriptNode;
    use std::collections::BTreeMap;

    fn chain(orders: &OrderSet, requests: &[f64]) -> AdversaryScript {
        let mech = DiscreteMechanism::new(vec!["y".into()], vec![1.0], vec![1.0]).unwrap();
        let mut node = ScriptNode::Stop;
        for &eps in requests.iter().rev() {
            let mut children = BTreeMap::new();
            children.insert("y".to_owned(), node.clone());
            children.insert(BOTTOM_LABEL.to_owned(), node);
            let request = RdpCurve::new(orders.clone(), vec![eps]).unwrap();
            node = ScriptNode::query(mech.clone(), request, children);
        }
        AdversaryScript::new(node).unwrap()
    }

    #[test]
    fn filter_session_decisions() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let cap = RdpCurve::new(orders.clone(), vec![1.0]).unwrap();
        let script = chain(&orders, &[0.4, 0.5, 0.2, 0.1]);
        let run = run_session(&SessionConfig::filter(cap, 1e-5, SessionSource::Script(script))).unwrap();
        let decisions: Vec<_> = run.log.filter_records().map(|r| r.decision).collect();
        use Decision::*;
        assert_eq!(decisions, [Grant, Grant, Pass, Grant]);
        assert_eq!(run.log.filter_records().nth(2).unwrap().outcome, Some(Outcome::Bottom));
        assert_eq!(reconstruct(&run.log).unwrap(), run.state);
    }

    #[test]
    fn fresh_odometer_bound() {
        let orders = OrderSet::default_set();
        let delta = 1e-5;
        let gaussian = MechanismSpec::Gaussian(GaussianMechanism::new(1e6, 1.0).unwrap());
        let schedule = ScheduleReplay::new(vec![ScheduleSegment { mechanism: gaussian, steps: 1 }]).unwrap();
        let run = run_session(&SessionConfig::odometer(orders.clone(), delta, SessionSource::Schedule(schedule))).unwrap();
        let first = run.log.odometer_records().next().unwrap();
        let expected = orders
            .iter()
            .map(|a| 2.0 * (2.0 * orders.len() as f64 / delta).ln() / (a - 1.0))
            .fold(f64::INFINITY, f64::min);
        assert!((first.bound.eps.unwrap() - expected).abs() < 1e-9);
        assert_eq!(reconstruct(&run.log).unwrap(), run.state);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let orders = OrderSet::new(vec![2.0, 8.0]).unwrap();
        let gaussian = MechanismSpec::Gaussian(GaussianMechanism::new(3.0, 1.0).unwrap());
        let schedule = ScheduleReplay::new(vec![ScheduleSegment { mechanism: gaussian, steps: 20 }]).unwrap();
        let config = SessionConfig::odometer(orders, 1e-6, SessionSource::Schedule(schedule)).with_seed(42);
        let a = serde_json::to_string(&run_session(&config).unwrap().log).unwrap();
        let b = serde_json::to_string(&run_session(&config).unwrap().log).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&run_session(&config.with_seed(43)).unwrap().log).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mismatched_orders_are_rejected() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let script = chain(&orders, &[0.1]);
        let config = SessionConfig::odometer(OrderSet::singleton(3.0).unwrap(), 1e-5, SessionSource::Script(script));
        assert!(matches!(run_session(&config), Err(Error::Config(_))));
    }

    #[test]
    fn tampered_log_is_detected() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let script = chain(&orders, &[0.4, 0.5]);
        let config = SessionConfig::odometer(orders, 1e-5, SessionSource::Script(script));
        let run = run_session(&config).unwrap();
        let mut json: serde_json::Value = serde_json::to_value(&run.log).unwrap();
        json["events"][1]["bound"]["eps"] = serde_json::json!(0.5);
        let tampered: SessionLog = serde_json::from_value(json).unwrap();
        assert!(matches!(reconstruct(&tampered), Err(Error::ReplayMismatch { index: 2, .. })));
    }
}
