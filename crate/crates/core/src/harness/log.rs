//! Session logs: a header record followed by one record per query.

use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::filter::{Decision, FilterEvent};
use crate::mechanisms::{Outcome, World};
use crate::odometer::{OdometerEvent, OdometerState, RunningBound};
use crate::orders::OrderSet;

/// First record of every log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LogHeader {
    Filter {
        delta: f64,
        orders: OrderSet,
        seed: u64,
        world: World,
        cap: RdpCurve,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dp_target: Option<f64>,
        sealed: bool,
    },
    Odometer {
        delta: f64,
        orders: OrderSet,
        seed: u64,
        world: World,
    },
}

impl LogHeader {
    pub fn delta(&self) -> f64 {
        match self {
            LogHeader::Filter { delta, .. } | LogHeader::Odometer { delta, .. } => *delta,
        }
    }

    pub fn orders(&self) -> &OrderSet {
        match self {
            LogHeader::Filter { orders, .. } | LogHeader::Odometer { orders, .. } => orders,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            LogHeader::Filter { seed, .. } | LogHeader::Odometer { seed, .. } => *seed,
        }
    }

    pub fn is_filter(&self) -> bool {
        matches!(self, LogHeader::Filter { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterRecord {
    pub i: u64,
    pub request: RdpCurve,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl FilterRecord {
    pub fn event(&self) -> FilterEvent {
        FilterEvent {
            index: self.i,
            request: self.request.clone(),
            decision: self.decision,
        }
    }
}

/// Filter index per order; `None` once an order outgrew every level.
/// Serialized as a JSON object keyed by order, in order-set order.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterIndices(pub Vec<(f64, Option<u32>)>);

impl FilterIndices {
    pub fn of(state: &OdometerState) -> Self {
        let orders = state.schedule().orders().iter();
        FilterIndices(orders.zip(state.filter_indices().iter().copied()).collect())
    }
}

impl Serialize for FilterIndices {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (alpha, f) in &self.0 {
            map.serialize_entry(&alpha.to_string(), f)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for FilterIndices {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct IndicesVisitor;

        impl<'de> Visitor<'de> for IndicesVisitor {
            type Value = FilterIndices;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from order to filter index")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<FilterIndices, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, f)) = map.next_entry::<String, Option<u32>>()? {
                    let alpha = key
                        .parse::<f64>()
                        .map_err(|_| de::Error::custom(format!("order key {key:?} is not a number")))?;
                    entries.push((alpha, f));
                }
                Ok(FilterIndices(entries))
            }
        }

        deserializer.deserialize_map(IndicesVisitor)
    }
}

/// Running bound as logged; an unbounded odometer logs `eps` and `f` as null.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub eps: Option<f64>,
    pub alpha: f64,
    pub f: Option<u32>,
}

impl From<RunningBound> for BoundRecord {
    fn from(bound: RunningBound) -> Self {
        let finite = bound.eps_dp.is_finite();
        BoundRecord {
            eps: finite.then_some(bound.eps_dp),
            alpha: bound.witness_order,
            f: finite.then_some(bound.witness_level),
        }
    }
}

impl BoundRecord {
    pub fn eps_or_inf(&self) -> f64 {
        self.eps.unwrap_or(f64::INFINITY)
    }

    fn same_bits(&self, other: &BoundRecord) -> bool {
        self.eps.map(f64::to_bits) == other.eps.map(f64::to_bits)
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.f == other.f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdometerRecord {
    pub i: u64,
    pub request: RdpCurve,
    pub f_per_alpha: FilterIndices,
    pub bound: BoundRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl OdometerRecord {
    pub fn event(&self) -> OdometerEvent {
        OdometerEvent {
            index: self.i,
            request: self.request.clone(),
        }
    }

    /// Record for the step that just moved `state`.
    pub fn after(state: &OdometerState, request: RdpCurve, outcome: Option<Outcome>) -> Self {
        OdometerRecord {
            i: state.step(),
            request,
            f_per_alpha: FilterIndices::of(state),
            bound: state.running_bound().into(),
            outcome,
        }
    }

    /// Whether the logged indices and bound are bit-identical to `state`.
    pub fn matches(&self, state: &OdometerState) -> std::result::Result<(), String> {
        let live = FilterIndices::of(state);
        let same_indices = live.0.len() == self.f_per_alpha.0.len()
            && live
                .0
                .iter()
                .zip(&self.f_per_alpha.0)
                .all(|(a, b)| a.0.to_bits() == b.0.to_bits() && a.1 == b.1);
        if !same_indices {
            return Err(format!("logged f_per_alpha {:?}, replay gives {:?}", self.f_per_alpha.0, live.0));
        }
        let bound = BoundRecord::from(state.running_bound());
        if !self.bound.same_bits(&bound) {
            return Err(format!("logged bound {:?}, replay gives {:?}", self.bound, bound));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogRecord {
    Filter(FilterRecord),
    Odometer(OdometerRecord),
}

/// A header plus its records. JSON form: `{"header": …, "events": […]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LogRepr")]
pub struct SessionLog {
    header: LogHeader,
    events: Vec<LogRecord>,
}

#[derive(Deserialize)]
struct LogRepr {
    header: LogHeader,
    events: Vec<LogRecord>,
}

impl TryFrom<LogRepr> for SessionLog {
    type Error = Error;

    fn try_from(repr: LogRepr) -> Result<Self> {
        SessionLog::new(repr.header, repr.events)
    }
}

impl SessionLog {
    /// Checks that every record matches the header's mode and order set.
    pub fn new(header: LogHeader, events: Vec<LogRecord>) -> Result<Self> {
        for event in &events {
            let (i, request) = match (event, header.is_filter()) {
                (LogRecord::Filter(r), true) => (r.i, &r.request),
                (LogRecord::Odometer(r), false) => (r.i, &r.request),
                (_, filter) => {
                    let mode = if filter { "filter" } else { "odometer" };
                    return Err(Error::Config(format!("record {event:?} in a {mode} log")));
                }
            };
            request.ensure_orders(header.orders()).map_err(|_| Error::ReplayMismatch {
                index: i,
                detail: "request orders differ from the header".into(),
            })?;
        }
        Ok(SessionLog { header, events })
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn events(&self) -> &[LogRecord] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn filter_records(&self) -> impl Iterator<Item = &FilterRecord> {
        self.events.iter().filter_map(|e| match e {
            LogRecord::Filter(r) => Some(r),
            LogRecord::Odometer(_) => None,
        })
    }

    pub fn odometer_records(&self) -> impl Iterator<Item = &OdometerRecord> {
        self.events.iter().filter_map(|e| match e {
            LogRecord::Odometer(r) => Some(r),
            LogRecord::Filter(_) => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odometer::FilterSchedule;

    #[test]
    fn filter_record_shape() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let record = FilterRecord {
            i: 3,
            request: RdpCurve::new(orders, vec![0.2]).unwrap(),
            decision: Decision::Pass,
            outcome: Some(Outcome::Bottom),
        };
        let line = serde_json::to_string(&record).unwrap();
        assert_eq!(line, r#"{"i":3,"request":{"orders":[2.0],"eps":[0.2]},"decision":"PASS","outcome":"⊥"}"#);
        let back: LogRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, LogRecord::Filter(record));
    }

    #[test]
    fn odometer_record_shape() {
        let orders = OrderSet::new(vec![1.5, 2.0]).unwrap();
        let mut state = OdometerState::new(FilterSchedule::new(1e-5, orders.clone()).unwrap());
        let request = RdpCurve::new(orders, vec![0.0, 100.0]).unwrap();
        state.spend(&request).unwrap();
        let record = OdometerRecord::after(&state, request, None);
        let line = serde_json::to_string(&record).unwrap();
        assert!(line.contains(r#""f_per_alpha":{"1.5":1,"2":4}"#), "{line}");
        let back: LogRecord = serde_json::from_str(&line).unwrap();
        let LogRecord::Odometer(back) = back else { panic!("parsed as filter record") };
        assert_eq!(back, record);
        back.matches(&state).unwrap();
    }

    #[test]
    fn overflowed_bound_is_null() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let mut state = OdometerState::new(FilterSchedule::new(1e-5, orders.clone()).unwrap());
        let request = RdpCurve::new(orders, vec![1e300]).unwrap();
        state.spend(&request).unwrap();
        let record = OdometerRecord::after(&state, request, None);
        let line = serde_json::to_string(&record).unwrap();
        assert!(line.contains(r#""f_per_alpha":{"2":null}"#), "{line}");
        assert!(line.contains(r#""eps":null"#), "{line}");
        assert_eq!(record.bound.eps_or_inf(), f64::INFINITY);
    }

    #[test]
    fn header_shapes() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let header = LogHeader::Odometer {
            delta: 1e-5,
            orders: orders.clone(),
            seed: 7,
            world: World::One,
        };
        assert_eq!(
            serde_json::to_string(&header).unwrap(),
            r#"{"mode":"odometer","delta":0.00001,"orders":[2.0],"seed":7,"world":1}"#
        );
        let log = SessionLog::new(header.clone(), vec![]).unwrap();
        let json = serde_json::to_string(&log).unwrap();
        assert_eq!(serde_json::from_str::<SessionLog>(&json).unwrap(), log);

        let record = LogRecord::Filter(FilterRecord {
            i: 1,
            request: RdpCurve::zeros(&orders),
            decision: Decision::Grant,
            outcome: None,
        });
        assert!(SessionLog::new(header, vec![record]).is_err());
    }
}
