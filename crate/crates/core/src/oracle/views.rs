//! Exact enumeration of view distributions in both worlds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Decision, FilterState};
use crate::mechanisms::BOTTOM_LABEL;
use crate::odometer::{FilterSchedule, OdometerState};
use crate::oracle::script::{AdversaryScript, QueryNode, ScriptNode};

/// A complete outcome sequence, `"⊥"` marking PASSed or truncated steps.
pub type View = Vec<String>;

/// Exact probabilities of every reachable view in one world.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViewDistribution {
    views: BTreeMap<View, f64>,
}

impl ViewDistribution {
    pub fn probability(&self, view: &[String]) -> f64 {
        self.views.get(view).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.views.values().sum()
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&View, f64)> {
        self.views.iter().map(|(v, p)| (v, *p))
    }

    fn add(&mut self, view: &[String], p: f64) {
        *self.views.entry(view.to_vec()).or_insert(0.0) += p;
    }
}

/// How the interaction treats each query while views are enumerated.
#[derive(Clone, Debug)]
pub enum ViewPolicy {
    /// Every query runs (plain adaptive composition).
    Unrestricted,
    /// Queries go through a privacy filter; PASSed ones yield ⊥ and the
    /// script continues under its ⊥ child.
    Filter(FilterState),
    /// The truncated adversary `T_f` at one order: once a request would move
    /// the odometer past filter `f` at `alpha`, the step yields ⊥ and the
    /// interaction stops.
    Truncated {
        schedule: FilterSchedule,
        f: u32,
        alpha: f64,
    },
}

enum Tracker {
    None,
    Filter(FilterState),
    Odometer {
        state: OdometerState,
        f: u32,
        alpha: f64,
    },
}

struct Walk {
    worlds: [ViewDistribution; 2],
    path: Vec<String>,
}

impl Walk {
    fn leaf(&mut self, p0: f64, p1: f64) {
        self.worlds[0].add(&self.path, p0);
        self.worlds[1].add(&self.path, p1);
    }

    fn node(&mut self, node: &ScriptNode, tracker: Tracker, p0: f64, p1: f64) -> Result<()> {
        let query = match node {
            ScriptNode::Stop => {
                self.leaf(p0, p1);
                return Ok(());
            }
            ScriptNode::Query(query) => query,
        };
        match tracker {
            Tracker::None => self.outcomes(query, || Tracker::None, p0, p1),
            Tracker::Filter(mut filter) => match filter.try_spend(&query.request)? {
                Decision::Grant => self.outcomes(query, || Tracker::Filter(filter.clone()), p0, p1),
                Decision::Pass => {
                    self.path.push(BOTTOM_LABEL.to_owned());
                    let result = self.node(query.child(BOTTOM_LABEL), Tracker::Filter(filter), p0, p1);
                    self.path.pop();
                    result
                }
            },
            Tracker::Odometer { mut state, f, alpha } => {
                state.spend(&query.request)?;
                let within = matches!(state.filter_index(alpha), Ok(index) if index <= f);
                if within {
                    self.outcomes(
                        query,
                        || Tracker::Odometer {
                            state: state.clone(),
                            f,
                            alpha,
                        },
                        p0,
                        p1,
                    )
                } else {
                    self.path.push(BOTTOM_LABEL.to_owned());
                    self.leaf(p0, p1);
                    self.path.pop();
                    Ok(())
                }
            }
        }
    }

    fn outcomes(
        &mut self,
        query: &QueryNode,
        tracker: impl Fn() -> Tracker,
        p0: f64,
        p1: f64,
    ) -> Result<()> {
        let m = &query.mechanism;
        for ((label, q0), q1) in m.outcomes().iter().zip(m.p0()).zip(m.p1()) {
            if *q0 == 0.0 && *q1 == 0.0 {
                continue;
            }
            self.path.push(label.clone());
            let result = self.node(query.child(label), tracker(), p0 * q0, p1 * q1);
            self.path.pop();
            result?;
        }
        Ok(())
    }
}

/// Exact view distributions `(V⁰, V¹)` of `script` under `policy`, each view
/// weighted by the product of conditional outcome probabilities along its
/// path. ⊥ steps have probability one in both worlds.
pub fn enumerate_views(
    script: &AdversaryScript,
    policy: &ViewPolicy,
) -> Result<(ViewDistribution, ViewDistribution)> {
    let tracker = match policy {
        ViewPolicy::Unrestricted => Tracker::None,
        ViewPolicy::Filter(filter) => {
            filter.cap().ensure_orders(script.orders())?;
            Tracker::Filter(filter.clone())
        }
        ViewPolicy::Truncated { schedule, f, alpha } => {
            if !schedule.orders().contains(*alpha) {
                return Err(Error::UnknownOrder(*alpha));
            }
            if *f == 0 {
                return Err(Error::Config("filter index must be at least 1".into()));
            }
            Tracker::Odometer {
                state: OdometerState::new(schedule.clone()),
                f: *f,
                alpha: *alpha,
            }
        }
    };
    let mut walk = Walk {
        worlds: [ViewDistribution::default(), ViewDistribution::default()],
        path: Vec::new(),
    };
    walk.node(script.root(), tracker, 1.0, 1.0)?;
    let [v0, v1] = walk.worlds;
    Ok((v0, v1))
}

/// `D_α(V⁰‖V¹) = (1/(α−1))·ln Σ V⁰(x)^α V¹(x)^{1−α}`, accumulated in log
/// space.
pub fn renyi_divergence_views(v0: &ViewDistribution, v1: &ViewDistribution, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::InvalidOrder(alpha));
    }
    let mut log_terms = Vec::with_capacity(v0.len());
    for (view, p) in v0.iter() {
        if p == 0.0 {
            continue;
        }
        let q = v1.probability(view);
        if q == 0.0 {
            return Err(Error::SupportMismatch(view.join(",")));
        }
        log_terms.push(alpha * p.ln() + (1.0 - alpha) * q.ln());
    }
    let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Err(Error::InvalidScript("empty view distribution".into()));
    }
    let sum: f64 = log_terms.iter().map(|t| (t - peak).exp()).sum();
    Ok((peak + sum.ln()) / (alpha - 1.0))
}
