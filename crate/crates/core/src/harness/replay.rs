//! Budget-schedule replays: accounting-only traces of a training run.

use serde::{Deserialize, Serialize};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::orders::OrderSet;

/// `steps` consecutive runs of the same mechanism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub mechanism: MechanismSpec,
    pub steps: u64,
}

/// A sequence of per-step mechanisms, run-length encoded.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReplayRepr")]
pub struct ScheduleReplay {
    segments: Vec<ScheduleSegment>,
}

#[derive(Deserialize)]
struct ReplayRepr {
    segments: Vec<ScheduleSegment>,
}

impl TryFrom<ReplayRepr> for ScheduleReplay {
    type Error = Error;

    fn try_from(repr: ReplayRepr) -> Result<Self> {
        ScheduleReplay::new(repr.segments)
    }
}

impl ScheduleReplay {
    pub fn new(segments: Vec<ScheduleSegment>) -> Result<Self> {
        if let Some(seg) = segments.iter().find(|s| s.steps == 0) {
            return Err(Error::Config(format!(
                "schedule segment {:?} has zero steps",
                seg.mechanism
            )));
        }
        Ok(ScheduleReplay { segments })
    }

    pub fn empty() -> Self {
        ScheduleReplay::default()
    }

    pub fn segments(&self) -> &[ScheduleSegment] {
        &self.segments
    }

    pub fn total_steps(&self) -> u64 {
        self.segments.iter().map(|s| s.steps).sum()
    }

    pub fn push(&mut self, mechanism: MechanismSpec, steps: u64) -> Result<()> {
        if steps == 0 {
            return Err(Error::Config("schedule segment has zero steps".into()));
        }
        self.segments.push(ScheduleSegment { mechanism, steps });
        Ok(())
    }

    pub fn extend(&mut self, other: &ScheduleReplay) {
        self.segments.extend(other.segments.iter().cloned());
    }

    /// Per-segment curves (one step each) over `orders`.
    pub fn segment_curves(&self, orders: &OrderSet) -> Result<Vec<(RdpCurve, u64)>> {
        self.segments
            .iter()
            .map(|s| Ok((s.mechanism.rdp_curve(orders)?, s.steps)))
            .collect()
    }

    /// Curve of the whole schedule, i.e. its final cumulative spend.
    pub fn total_curve(&self, orders: &OrderSet) -> Result<RdpCurve> {
        let mut total = RdpCurve::zeros(orders);
        for (curve, steps) in self.segment_curves(orders)? {
            total.add_assign(&curve.scale(steps as f64)?)?;
        }
        Ok(total)
    }
}

/// Cumulative spend after every step of `schedule`.
pub fn replay_schedule(schedule: &ScheduleReplay, orders: &OrderSet) -> Result<Vec<RdpCurve>> {
    let mut trace = Vec::with_capacity(schedule.total_steps() as usize);
    let mut spent = RdpCurve::zeros(orders);
    for (curve, steps) in schedule.segment_curves(orders)? {
        for _ in 0..steps {
            spent.add_assign(&curve)?;
            trace.push(spent.clone());
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::GaussianMechanism;

    fn gaussian(sigma: f64) -> MechanismSpec {
        MechanismSpec::Gaussian(GaussianMechanism::new(sigma, 1.0).unwrap())
    }

    #[test]
    fn constant_noise_trace() {
        let orders = OrderSet::new(vec![2.0, 4.0, 32.0]).unwrap();
        let schedule = ScheduleReplay::new(vec![ScheduleSegment {
            mechanism: gaussian(1.0),
            steps: 25,
        }])
        .unwrap();
        let trace = replay_schedule(&schedule, &orders).unwrap();
        assert_eq!(trace.len(), 25);
        for (n, spent) in trace.iter().enumerate() {
            for (alpha, eps) in spent.iter() {
                assert!((eps - (n + 1) as f64 * alpha / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slope_drops_fourfold_when_sigma_doubles() {
        let orders = OrderSet::singleton(8.0).unwrap();
        let schedule = ScheduleReplay::new(vec![
            ScheduleSegment { mechanism: gaussian(1.0), steps: 10 },
            ScheduleSegment { mechanism: gaussian(2.0), steps: 10 },
        ])
        .unwrap();
        let trace = replay_schedule(&schedule, &orders).unwrap();
        let eps: Vec<f64> = trace.iter().map(|c| c.values()[0]).collect();
        let before = eps[9] - eps[8];
        let after = eps[19] - eps[18];
        assert!((before / after - 4.0).abs() < 1e-9);
        assert_eq!(schedule.total_curve(&orders).unwrap().values()[0], eps[19]);
    }

    #[test]
    fn empty_schedule() {
        let orders = OrderSet::default_set();
        assert!(replay_schedule(&ScheduleReplay::empty(), &orders).unwrap().is_empty());
        assert!(ScheduleReplay::empty().total_curve(&orders).unwrap().is_zero());
    }

    #[test]
    fn rejects_zero_step_segments() {
        assert!(ScheduleReplay::new(vec![ScheduleSegment { mechanism: gaussian(1.0), steps: 0 }]).is_err());
        let json = r#"{"segments":[{"mechanism":{"kind":"gaussian","sigma":1.0,"sensitivity":1.0},"steps":0}]}"#;
        assert!(serde_json::from_str::<ScheduleReplay>(json).is_err());
        let json = r#"{"segments":[{"mechanism":{"kind":"gaussian","sigma":1.0,"sensitivity":1.0},"steps":3}]}"#;
        assert_eq!(serde_json::from_str::<ScheduleReplay>(json).unwrap().total_steps(), 3);
    }
}
