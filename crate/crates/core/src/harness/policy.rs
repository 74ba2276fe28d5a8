//! Accounting-only replay of the online budget-adaptation policy.
//!
//! Every period runs `period_epochs` epochs of training at the current
//! per-step budget, then one Gaussian evaluation query. A significant
//! improvement lowers the per-step budget for the next period (more noise or
//! smaller batches), provided the cap still admits `guard_epochs` more epochs
//! at the current rate; otherwise the budget moves back toward the baseline.

use serde::{Deserialize, Serialize};

use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::harness::replay::ScheduleReplay;
use crate::mechanisms::{GaussianMechanism, MechanismSpec};

/// The DP-SGD parameter the policy adjusts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "knob", rename_all = "snake_case")]
pub enum PolicyKnob {
    /// Shift the σ of every Gaussian training step by `increment` per level.
    Noise {
        #[serde(default = "default_sigma_increment")]
        increment: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ceiling: Option<f64>,
    },
    /// Shrink the batch by `increment` per level. `epochs` gives, for each
    /// batch size below the baseline, the one-epoch schedule it induces.
    Batch {
        #[serde(default = "default_batch_increment")]
        increment: u64,
        #[serde(default = "default_batch_minimum")]
        minimum: u64,
        baseline: u64,
        epochs: Vec<BatchEpoch>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchEpoch {
    pub batch: u64,
    pub schedule: ScheduleReplay,
}

fn default_sigma_increment() -> f64 {
    0.1
}

fn default_batch_increment() -> u64 {
    128
}

fn default_batch_minimum() -> u64 {
    256
}

fn default_period_epochs() -> u64 {
    10
}

fn default_threshold_sigmas() -> f64 {
    3.0
}

fn default_eval_sigma() -> f64 {
    100.0
}

fn default_guard_epochs() -> u64 {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    #[serde(default = "default_period_epochs")]
    pub period_epochs: u64,
    #[serde(default = "default_threshold_sigmas")]
    pub threshold_sigmas: f64,
    #[serde(default = "default_eval_sigma")]
    pub eval_sigma: f64,
    #[serde(default = "default_guard_epochs")]
    pub guard_epochs: u64,
    /// Filter cap the guard checks against.
    pub cap: RdpCurve,
    #[serde(flatten)]
    pub knob: PolicyKnob,
}

impl PolicySpec {
    pub fn noise(cap: RdpCurve) -> Self {
        PolicySpec {
            period_epochs: default_period_epochs(),
            threshold_sigmas: default_threshold_sigmas(),
            eval_sigma: default_eval_sigma(),
            guard_epochs: default_guard_epochs(),
            cap,
            knob: PolicyKnob::Noise {
                increment: default_sigma_increment(),
                ceiling: None,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.period_epochs == 0 {
            return Err(Error::Config("period_epochs must be at least 1".into()));
        }
        if !(self.threshold_sigmas.is_finite() && self.threshold_sigmas >= 0.0) {
            return Err(Error::Config("threshold_sigmas must be finite and >= 0".into()));
        }
        GaussianMechanism::new(self.eval_sigma, 1.0)?;
        match &self.knob {
            PolicyKnob::Noise { increment, ceiling } => {
                if !(increment.is_finite() && *increment > 0.0) {
                    return Err(Error::Config("sigma increment must be positive".into()));
                }
                if ceiling.is_some_and(|c| !(c.is_finite() && c > 0.0)) {
                    return Err(Error::Config("sigma ceiling must be positive".into()));
                }
            }
            PolicyKnob::Batch {
                increment,
                minimum,
                baseline,
                ..
            } => {
                if *increment == 0 {
                    return Err(Error::Config("batch increment must be positive".into()));
                }
                if minimum > baseline {
                    return Err(Error::Config("batch minimum exceeds the baseline".into()));
                }
            }
        }
        Ok(())
    }
}

/// One per-period indicator: a verdict, or the observed change in the
/// (noisy) count of correct predictions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Signal {
    Significant(bool),
    Improvement(f64),
}

impl Signal {
    pub fn is_significant(self, policy: &PolicySpec) -> bool {
        match self {
            Signal::Significant(b) => b,
            Signal::Improvement(x) => x >= policy.threshold_sigmas * policy.eval_sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    /// Per-step budget lowered.
    Decrease,
    /// Per-step budget raised toward the baseline.
    Increase,
    Hold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    /// σ of the first Gaussian training step, or the batch size.
    pub setting: f64,
    pub significant: bool,
    /// Whether the cap admits `guard_epochs` more epochs at this period's rate.
    pub guard_ok: bool,
    pub adjustment: Adjustment,
    /// Cumulative spend after the period, evaluation query included.
    pub spent: RdpCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub schedule: ScheduleReplay,
    pub periods: Vec<PeriodRecord>,
}

fn epoch_at(policy: &PolicySpec, base: &ScheduleReplay, level: u64) -> Result<(ScheduleReplay, f64)> {
    match &policy.knob {
        PolicyKnob::Noise { increment, .. } => {
            let mut epoch = ScheduleReplay::empty();
            let mut setting = None;
            for segment in base.segments() {
                let mechanism = match &segment.mechanism {
                    MechanismSpec::Gaussian(g) => {
                        let sigma = g.sigma() + level as f64 * increment;
                        setting.get_or_insert(sigma);
                        MechanismSpec::Gaussian(GaussianMechanism::new(sigma, g.sensitivity())?)
                    }
                    other => other.clone(),
                };
                epoch.push(mechanism, segment.steps)?;
            }
            let setting = setting.ok_or_else(|| Error::Config("noise policy needs a Gaussian training step".into()))?;
            Ok((epoch, setting))
        }
        PolicyKnob::Batch {
            increment,
            baseline,
            epochs,
            ..
        } => {
            let batch = baseline - level * increment;
            let epoch = if level == 0 {
                base.clone()
            } else {
                epochs
                    .iter()
                    .find(|e| e.batch == batch)
                    .map(|e| e.schedule.clone())
                    .ok_or_else(|| Error::Config(format!("no epoch schedule for batch size {batch}")))?
            };
            Ok((epoch, batch as f64))
        }
    }
}

fn can_lower(policy: &PolicySpec, base: &ScheduleReplay, level: u64) -> Result<bool> {
    match &policy.knob {
        PolicyKnob::Noise { increment, ceiling } => {
            let Some(ceiling) = ceiling else { return Ok(true) };
            let next = level + 1;
            Ok(base.segments().iter().all(|s| match &s.mechanism {
                MechanismSpec::Gaussian(g) => g.sigma() + next as f64 * increment <= *ceiling,
                _ => true,
            }))
        }
        PolicyKnob::Batch {
            increment,
            minimum,
            baseline,
            ..
        } => Ok(baseline.checked_sub((level + 1) * increment).is_some_and(|b| b >= *minimum)),
    }
}

/// `∃α: spent(α) + epochs·epoch(α) ≤ cap(α)`.
pub fn guard_holds(spent: &RdpCurve, epoch: &RdpCurve, epochs: u64, cap: &RdpCurve) -> Result<bool> {
    let projected = spent.add(&epoch.scale(epochs as f64)?)?;
    projected.ensure_same_orders(cap)?;
    Ok(projected.values().iter().zip(cap.values()).any(|(p, c)| p <= c))
}

/// Apply the adaptation rule to one indicator per period, starting from the
/// one-epoch baseline `base`. The returned schedule holds the training steps
/// and evaluation queries of every period.
pub fn simulate_policy(policy: &PolicySpec, signal: &[Signal], base: &ScheduleReplay) -> Result<PolicyTrace> {
    policy.validate()?;
    let orders = policy.cap.orders();
    let eval = MechanismSpec::Gaussian(GaussianMechanism::new(policy.eval_sigma, 1.0)?);
    let eval_curve = eval.rdp_curve(orders)?;

    let mut schedule = ScheduleReplay::empty();
    let mut spent = RdpCurve::zeros(orders);
    let mut periods = Vec::with_capacity(signal.len());
    let mut level = 0u64;
    for (period, indicator) in signal.iter().enumerate() {
        let (epoch, setting) = epoch_at(policy, base, level)?;
        for _ in 0..policy.period_epochs {
            schedule.extend(&epoch);
        }
        schedule.push(eval.clone(), 1)?;
        let epoch_curve = epoch.total_curve(orders)?;
        spent.add_assign(&epoch_curve.scale(policy.period_epochs as f64)?)?;
        spent.add_assign(&eval_curve)?;

        let significant = indicator.is_significant(policy);
        let guard_ok = guard_holds(&spent, &epoch_curve, policy.guard_epochs, &policy.cap)?;
        let adjustment = if significant {
            if guard_ok && can_lower(policy, base, level)? {
                level += 1;
                Adjustment::Decrease
            } else {
                Adjustment::Hold
            }
        } else if level > 0 {
            level -= 1;
            Adjustment::Increase
        } else {
            Adjustment::Hold
        };
        periods.push(PeriodRecord {
            period,
            setting,
            significant,
            guard_ok,
            adjustment,
            spent: spent.clone(),
        });
    }
    Ok(PolicyTrace { schedule, periods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::replay::replay_schedule;
    use crate::orders::OrderSet;

    fn base(sigma: f64, steps: u64) -> ScheduleReplay {
        let mut s = ScheduleReplay::empty();
        s.push(MechanismSpec::Gaussian(GaussianMechanism::new(sigma, 1.0).unwrap()), steps)
            .unwrap();
        s
    }

    fn sigmas(trace: &PolicyTrace) -> Vec<f64> {
        trace.periods.iter().map(|p| p.setting).collect()
    }

    #[test]
    fn never_improving_stays_at_baseline() {
        let orders = OrderSet::new(vec![2.0, 8.0]).unwrap();
        let cap = RdpCurve::constant(&orders, 1e6).unwrap();
        let policy = PolicySpec::noise(cap);
        let trace = simulate_policy(&policy, &[Signal::Significant(false); 5], &base(1.0, 4)).unwrap();
        assert!(sigmas(&trace).iter().all(|&s| s == 1.0));
        assert!(trace.periods.iter().all(|p| p.adjustment == Adjustment::Hold));
    }

    #[test]
    fn improving_ramps_sigma_until_guard_binds() {
        let orders = OrderSet::singleton(2.0).unwrap();
        // one step per epoch at σ = 1 costs 1.0 at α = 2; evaluation is 1e-4
        let cap = RdpCurve::constant(&orders, 65.0).unwrap();
        let mut policy = PolicySpec::noise(cap.clone());
        policy.period_epochs = 10;
        let trace = simulate_policy(&policy, &[Signal::Improvement(301.0); 12], &base(1.0, 1)).unwrap();
        let s = sigmas(&trace);
        for pair in s.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        assert!((s[1] - 1.1).abs() < 1e-12);
        let held = trace.periods.iter().position(|p| p.adjustment == Adjustment::Hold).unwrap();
        assert!(!trace.periods[held].guard_ok);
        for p in &trace.periods {
            if p.adjustment == Adjustment::Decrease {
                assert!(p.guard_ok);
            }
        }
    }

    #[test]
    fn improvement_below_threshold_is_not_significant() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let policy = PolicySpec::noise(RdpCurve::constant(&orders, 1e6).unwrap());
        assert!(!Signal::Improvement(299.9).is_significant(&policy));
        assert!(Signal::Improvement(300.0).is_significant(&policy));
        let signal = [Signal::Significant(true), Signal::Significant(true), Signal::Significant(false)];
        let trace = simulate_policy(&policy, &signal, &base(1.0, 1)).unwrap();
        let adj: Vec<_> = trace.periods.iter().map(|p| p.adjustment).collect();
        assert_eq!(adj, [Adjustment::Decrease, Adjustment::Decrease, Adjustment::Increase]);
    }

    #[test]
    fn evaluation_queries_are_accounted() {
        let orders = OrderSet::singleton(4.0).unwrap();
        let policy = PolicySpec::noise(RdpCurve::constant(&orders, 1e6).unwrap());
        let trace = simulate_policy(&policy, &[Signal::Significant(false); 3], &base(2.0, 5)).unwrap();
        assert_eq!(trace.schedule.total_steps(), 3 * (10 * 5 + 1));
        let replayed = replay_schedule(&trace.schedule, &orders).unwrap();
        let last = replayed.last().unwrap().values()[0];
        let expected = 3.0 * (50.0 * 4.0 / 8.0 + 4.0 / 20_000.0);
        assert!((last - expected).abs() < 1e-9);
        assert!((trace.periods[2].spent.values()[0] - last).abs() < 1e-9);
    }

    #[test]
    fn batch_policy_respects_minimum() {
        let orders = OrderSet::singleton(2.0).unwrap();
        let epochs = vec![
            BatchEpoch { batch: 384, schedule: base(1.2, 1) },
            BatchEpoch { batch: 256, schedule: base(1.4, 1) },
        ];
        let policy = PolicySpec {
            knob: PolicyKnob::Batch {
                increment: 128,
                minimum: 256,
                baseline: 512,
                epochs,
            },
            ..PolicySpec::noise(RdpCurve::constant(&orders, 1e6).unwrap())
        };
        let trace = simulate_policy(&policy, &[Signal::Significant(true); 4], &base(1.0, 2)).unwrap();
        assert_eq!(sigmas(&trace), [512.0, 384.0, 256.0, 256.0]);
        let json = serde_json::to_string(&policy).unwrap();
        assert_eq!(serde_json::from_str::<PolicySpec>(&json).unwrap(), policy);
    }
}
