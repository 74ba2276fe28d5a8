//! Mechanism catalog: RDP curves and two-world sampling.
//!
//! A mechanism is described by its output distribution in each of the two
//! neighboring worlds (b = 0 and b = 1). Discrete mechanisms carry both
//! probability vectors explicitly so the oracle can enumerate them exactly.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::orders::OrderSet;

/// Tolerance on probability vectors summing to one.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Label reserved for the null outcome ⊥ of PASSed or truncated queries.
pub const BOTTOM_LABEL: &str = "⊥";

/// Which of the two neighboring datasets the interaction runs on.
/// Serialized as the bit `0` or `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum World {
    Zero,
    One,
}

impl World {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(World::Zero),
            1 => Ok(World::One),
            other => Err(Error::Config(format!("world bit must be 0 or 1, got {other}"))),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            World::Zero => 0,
            World::One => 1,
        }
    }
}

impl TryFrom<u8> for World {
    type Error = Error;

    fn try_from(bit: u8) -> Result<Self> {
        World::from_bit(bit)
    }
}

impl From<World> for u8 {
    fn from(world: World) -> u8 {
        world.bit()
    }
}

/// Gaussian noise of standard deviation `sigma` on a query whose value
/// moves by at most `sensitivity` between neighbors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianRepr")]
pub struct GaussianMechanism {
    sigma: f64,
    sensitivity: f64,
}

#[derive(Deserialize)]
struct GaussianRepr {
    sigma: f64,
    sensitivity: f64,
}

impl TryFrom<GaussianRepr> for GaussianMechanism {
    type Error = Error;

    fn try_from(repr: GaussianRepr) -> Result<Self> {
        GaussianMechanism::new(repr.sigma, repr.sensitivity)
    }
}

impl GaussianMechanism {
    pub fn new(sigma: f64, sensitivity: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidMechanism(format!("sigma must be > 0, got {sigma}")));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(Error::InvalidMechanism(format!(
                "sensitivity must be > 0, got {sensitivity}"
            )));
        }
        Ok(GaussianMechanism { sigma, sensitivity })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// `ε(α) = α·Δ²/(2σ²)`.
    pub fn rdp_curve(&self, orders: &OrderSet) -> RdpCurve {
        let rate = self.sensitivity * self.sensitivity / (2.0 * self.sigma * self.sigma);
        RdpCurve::from_fn(orders, |alpha| alpha * rate).expect("Gaussian curve is finite and nonnegative")
    }

    /// Draw from `N(b·Δ, σ²)`.
    pub fn sample<R: Rng + ?Sized>(&self, world: World, rng: &mut R) -> f64 {
        let mean = match world {
            World::Zero => 0.0,
            World::One => self.sensitivity,
        };
        Normal::new(mean, self.sigma)
            .expect("sigma validated at construction")
            .sample(rng)
    }
}

/// A mechanism with finitely many outcomes and explicit distributions in
/// both worlds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteRepr")]
pub struct DiscreteMechanism {
    outcomes: Vec<String>,
    p0: Vec<f64>,
    p1: Vec<f64>,
}

#[derive(Deserialize)]
struct DiscreteRepr {
    outcomes: Vec<String>,
    p0: Vec<f64>,
    p1: Vec<f64>,
}

impl TryFrom<DiscreteRepr> for DiscreteMechanism {
    type Error = Error;

    fn try_from(repr: DiscreteRepr) -> Result<Self> {
        DiscreteMechanism::new(repr.outcomes, repr.p0, repr.p1)
    }
}

fn normalized(name: &str, probs: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidMechanism(format!("{name} has invalid probability {bad}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::InvalidMechanism(format!("{name} sums to {total}, not 1")));
    }
    if total == 1.0 {
        Ok(probs)
    } else {
        Ok(probs.into_iter().map(|p| p / total).collect())
    }
}

impl DiscreteMechanism {
    pub fn new(outcomes: Vec<String>, p0: Vec<f64>, p1: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidMechanism("no outcomes".into()));
        }
        if p0.len() != outcomes.len() || p1.len() != outcomes.len() {
            return Err(Error::InvalidMechanism(format!(
                "{} outcomes but {} / {} probabilities",
                outcomes.len(),
                p0.len(),
                p1.len()
            )));
        }
        for (i, label) in outcomes.iter().enumerate() {
            if label == BOTTOM_LABEL {
                return Err(Error::InvalidMechanism(format!("{BOTTOM_LABEL} is reserved")));
            }
            if outcomes[..i].contains(label) {
                return Err(Error::InvalidMechanism(format!("duplicate outcome {label:?}")));
            }
        }
        let p0 = normalized("p0", p0)?;
        let p1 = normalized("p1", p1)?;
        for ((label, a), b) in outcomes.iter().zip(&p0).zip(&p1) {
            if (*a > 0.0) != (*b > 0.0) {
                return Err(Error::SupportMismatch(label.clone()));
            }
        }
        Ok(DiscreteMechanism { outcomes, p0, p1 })
    }

    /// Binary randomized response reporting the true bit with probability
    /// `1 − flip`: world 0 answers `"0"` w.p. `1 − flip`, world 1 answers
    /// `"1"` w.p. `1 − flip`.
    pub fn randomized_response(flip: f64) -> Result<Self> {
        Self::new(
            vec!["0".into(), "1".into()],
            vec![1.0 - flip, flip],
            vec![flip, 1.0 - flip],
        )
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn probabilities(&self, world: World) -> &[f64] {
        match world {
            World::Zero => &self.p0,
            World::One => &self.p1,
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `max(D_α(p0‖p1), D_α(p1‖p0))` at every order, by exact summation.
    pub fn rdp_curve(&self, orders: &OrderSet) -> RdpCurve {
        if self.p0 == self.p1 {
            return RdpCurve::zeros(orders);
        }
        RdpCurve::from_fn(orders, |alpha| {
            let forward = renyi_divergence(&self.p0, &self.p1, alpha);
            let backward = renyi_divergence(&self.p1, &self.p0, alpha);
            forward.max(backward).max(0.0)
        })
        .expect("supports match, so divergences are finite")
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, world: World, rng: &mut R) -> usize {
        let probs = self.probabilities(world);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        last_positive
    }
}

/// `(1/(α−1))·ln Σ P(x)^α Q(x)^{1−α}` over the common support. Terms are
/// summed relative to the largest so high orders do not overflow.
fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let terms: Vec<f64> = p
        .iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| alpha * a.ln() + (1.0 - alpha) * b.ln())
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    (peak + sum.ln()) / (alpha - 1.0)
}

/// Any mechanism the harness can route through a filter or odometer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismSpec {
    Gaussian(GaussianMechanism),
    Discrete(DiscreteMechanism),
    /// A curve asserted by the caller, with no output distribution.
    Raw { curve: RdpCurve },
}

impl MechanismSpec {
    pub fn rdp_curve(&self, orders: &OrderSet) -> Result<RdpCurve> {
        match self {
            MechanismSpec::Gaussian(g) => Ok(g.rdp_curve(orders)),
            MechanismSpec::Discrete(d) => Ok(d.rdp_curve(orders)),
            MechanismSpec::Raw { curve } => {
                curve.ensure_orders(orders)?;
                Ok(curve.clone())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, world: World, rng: &mut R) -> Result<Outcome> {
        match self {
            MechanismSpec::Gaussian(g) => Ok(Outcome::Real(g.sample(world, rng))),
            MechanismSpec::Discrete(d) => {
                let i = d.sample_index(world, rng);
                Ok(Outcome::Label(d.outcomes[i].clone()))
            }
            MechanismSpec::Raw { .. } => Err(Error::NotSampleable),
        }
    }
}

/// A realized mechanism output. Serialized as the label string, the real
/// number, or `"⊥"`.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Label(String),
    Real(f64),
    Bottom,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Label(label) => f.write_str(label),
            Outcome::Real(x) => write!(f, "{x}"),
            Outcome::Bottom => f.write_str(BOTTOM_LABEL),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Label(label) => serializer.serialize_str(label),
            Outcome::Real(x) => serializer.serialize_f64(*x),
            Outcome::Bottom => serializer.serialize_str(BOTTOM_LABEL),
        }
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct OutcomeVisitor;

        impl Visitor<'_> for OutcomeVisitor {
            type Value = Outcome;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an outcome label or a number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Outcome, E> {
                Ok(if v == BOTTOM_LABEL {
                    Outcome::Bottom
                } else {
                    Outcome::Label(v.to_owned())
                })
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Outcome, E> {
                Ok(Outcome::Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Outcome, E> {
                Ok(Outcome::Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Outcome, E> {
                Ok(Outcome::Real(v as f64))
            }
        }

        deserializer.deserialize_any(OutcomeVisitor)
    }
}
