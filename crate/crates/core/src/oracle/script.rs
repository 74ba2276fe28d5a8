//! Adversary scripts: finite adaptive strategies over discrete mechanisms.

use std::collections::BTreeMap;

use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::mechanisms::{DiscreteMechanism, MechanismSpec, BOTTOM_LABEL};
use crate::orders::OrderSet;

/// Deepest script the oracle will enumerate.
pub const MAX_SCRIPT_DEPTH: usize = 8;
/// Largest outcome alphabet per query.
pub const MAX_OUTCOMES: usize = 6;

/// A node of the adversary's decision tree.
#[derive(Clone, Debug, PartialEq)]
pub enum ScriptNode {
    Stop,
    Query(Box<QueryNode>),
}

/// A query: the mechanism to run, the budget the adversary declares for it,
/// and the continuation for each observed outcome. Outcomes without a child
/// stop the interaction; the child under `"⊥"` is followed when the query
/// is PASSed.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryNode {
    pub mechanism: DiscreteMechanism,
    pub request: RdpCurve,
    pub children: BTreeMap<String, ScriptNode>,
}

impl QueryNode {
    pub fn child(&self, label: &str) -> &ScriptNode {
        self.children.get(label).unwrap_or(&ScriptNode::Stop)
    }
}

impl ScriptNode {
    pub fn query(
        mechanism: DiscreteMechanism,
        request: RdpCurve,
        children: impl IntoIterator<Item = (String, ScriptNode)>,
    ) -> Self {
        ScriptNode::Query(Box::new(QueryNode {
            mechanism,
            request,
            children: children.into_iter().collect(),
        }))
    }

    /// Longest root-to-leaf count of queries.
    pub fn depth(&self) -> usize {
        match self {
            ScriptNode::Stop => 0,
            ScriptNode::Query(node) => {
                1 + node.children.values().map(ScriptNode::depth).max().unwrap_or(0)
            }
        }
    }

    fn visit<'a>(&'a self, out: &mut Vec<&'a QueryNode>) {
        if let ScriptNode::Query(node) = self {
            out.push(node);
            for child in node.children.values() {
                child.visit(out);
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QueryRepr {
    mech: MechanismSpec,
    request: RdpCurve,
    #[serde(default)]
    children: BTreeMap<String, ScriptNode>,
}

impl Serialize for ScriptNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ScriptNode::Stop => serializer.serialize_str("STOP"),
            ScriptNode::Query(node) => QueryRepr {
                mech: MechanismSpec::Discrete(node.mechanism.clone()),
                request: node.request.clone(),
                children: node.children.clone(),
            }
            .serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for ScriptNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Stop(String),
            Query(QueryRepr),
        }

        match Repr::deserialize(deserializer)? {
            Repr::Stop(tag) if tag == "STOP" => Ok(ScriptNode::Stop),
            Repr::Stop(tag) => Err(de::Error::custom(format!("expected \"STOP\", got {tag:?}"))),
            Repr::Query(repr) => match repr.mech {
                MechanismSpec::Discrete(mechanism) => Ok(ScriptNode::Query(Box::new(QueryNode {
                    mechanism,
                    request: repr.request,
                    children: repr.children,
                }))),
                _ => Err(de::Error::custom("script mechanisms must be discrete")),
            },
        }
    }
}

/// A validated adversary script.
///
/// Every declared request dominates the mechanism's true curve at every
/// order, all requests share one order set, the tree is at most
/// [`MAX_SCRIPT_DEPTH`] deep and alphabets have at most [`MAX_OUTCOMES`]
/// outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryScript {
    root: ScriptNode,
    orders: OrderSet,
}

impl AdversaryScript {
    pub fn new(root: ScriptNode) -> Result<Self> {
        let mut nodes = Vec::new();
        root.visit(&mut nodes);
        let orders = match nodes.first() {
            Some(node) => node.request.orders().clone(),
            None => {
                return Err(Error::InvalidScript(
                    "script issues no query; use AdversaryScript::empty".into(),
                ))
            }
        };
        Self::validate(&root, &nodes, &orders)?;
        Ok(AdversaryScript { root, orders })
    }

    /// The script that stops immediately.
    pub fn empty(orders: OrderSet) -> Self {
        AdversaryScript {
            root: ScriptNode::Stop,
            orders,
        }
    }

    fn validate(root: &ScriptNode, nodes: &[&QueryNode], orders: &OrderSet) -> Result<()> {
        let depth = root.depth();
        if depth > MAX_SCRIPT_DEPTH {
            return Err(Error::InvalidScript(format!(
                "depth {depth} exceeds {MAX_SCRIPT_DEPTH}"
            )));
        }
        for node in nodes {
            node.request.ensure_orders(orders)?;
            let alphabet = node.mechanism.len();
            if alphabet > MAX_OUTCOMES {
                return Err(Error::InvalidScript(format!(
                    "alphabet of {alphabet} outcomes exceeds {MAX_OUTCOMES}"
                )));
            }
            let truth = node.mechanism.rdp_curve(orders);
            for ((alpha, declared), actual) in node.request.iter().zip(truth.values()) {
                if declared < *actual {
                    return Err(Error::InvalidScript(format!(
                        "request {declared} at order {alpha} under-declares the mechanism's {actual}"
                    )));
                }
            }
            for label in node.children.keys() {
                if label != BOTTOM_LABEL && !node.mechanism.outcomes().contains(label) {
                    return Err(Error::InvalidScript(format!("child {label:?} is not an outcome")));
                }
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &ScriptNode {
        &self.root
    }

    pub fn orders(&self) -> &OrderSet {
        &self.orders
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn query_count(&self) -> usize {
        let mut nodes = Vec::new();
        self.root.visit(&mut nodes);
        nodes.len()
    }
}

impl Serialize for AdversaryScript {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.root.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AdversaryScript {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let root = ScriptNode::deserialize(deserializer)?;
        AdversaryScript::new(root).map_err(de::Error::custom)
    }
}

/// Shape of randomly generated scripts.
#[derive(Clone, Debug)]
pub struct ScriptParams {
    pub orders: OrderSet,
    pub max_depth: usize,
    pub max_outcomes: usize,
    /// Chance that a non-root node is STOP.
    pub stop_probability: f64,
    /// Chance that a request over-declares its mechanism's curve.
    pub slack_probability: f64,
    /// Chance that a query carries a continuation for ⊥.
    pub bottom_child_probability: f64,
    /// Smallest probability of any outcome, keeping divergences bounded.
    pub min_probability: f64,
}

impl ScriptParams {
    pub fn new(orders: OrderSet) -> Self {
        ScriptParams {
            orders,
            max_depth: 4,
            max_outcomes: 4,
            stop_probability: 0.2,
            slack_probability: 0.3,
            bottom_child_probability: 0.5,
            min_probability: 0.05,
        }
    }
}

fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(floor..=1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// A random discrete mechanism; occasionally both worlds coincide (a null
/// query).
pub fn random_mechanism<R: Rng + ?Sized>(rng: &mut R, params: &ScriptParams) -> DiscreteMechanism {
    let n = rng.random_range(2..=params.max_outcomes.clamp(2, MAX_OUTCOMES));
    let outcomes: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
    let p0 = random_distribution(rng, n, params.min_probability);
    let p1 = if rng.random_bool(0.1) {
        p0.clone()
    } else {
        random_distribution(rng, n, params.min_probability)
    };
    DiscreteMechanism::new(outcomes, p0, p1).expect("generated distributions are valid")
}

fn random_node<R: Rng + ?Sized>(rng: &mut R, params: &ScriptParams, depth_left: usize, is_root: bool) -> ScriptNode {
    if depth_left == 0 || (!is_root && rng.random_bool(params.stop_probability)) {
        return ScriptNode::Stop;
    }
    let mechanism = random_mechanism(rng, params);
    let truth = mechanism.rdp_curve(&params.orders);
    let request = if rng.random_bool(params.slack_probability) {
        let factor = rng.random_range(1.0..3.0);
        let extra = rng.random_range(0.0..0.2);
        RdpCurve::from_fn(&params.orders, |alpha| {
            truth.get(alpha).expect("same orders") * factor + extra
        })
        .expect("scaled curve is valid")
    } else {
        truth
    };
    let mut children: Vec<(String, ScriptNode)> = mechanism
        .outcomes()
        .iter()
        .map(|label| (label.clone(), random_node(rng, params, depth_left - 1, false)))
        .collect();
    if rng.random_bool(params.bottom_child_probability) {
        children.push((
            BOTTOM_LABEL.to_owned(),
            random_node(rng, params, depth_left - 1, false),
        ));
    }
    ScriptNode::query(mechanism, request, children)
}

/// A random adaptive script: every node draws a fresh mechanism, so the
/// query at step i depends on all earlier outcomes.
pub fn random_script<R: Rng + ?Sized>(rng: &mut R, params: &ScriptParams) -> AdversaryScript {
    let depth = params.max_depth.clamp(1, MAX_SCRIPT_DEPTH);
    let root = random_node(rng, params, depth, true);
    AdversaryScript::new(root).expect("generated scripts are valid")
}
