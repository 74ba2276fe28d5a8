use renyi_accounting::conversion::curve_to_dp;
use renyi_accounting::curve::RdpCurve;
use renyi_accounting::harness::{replay_schedule, simulate_policy, PolicySpec, ScheduleReplay, Signal};
use renyi_accounting::mechanisms::{GaussianMechanism, MechanismSpec};
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let orders = OrderSet::default_set();
    let delta = 1e-5;

    // one epoch = 100 steps of sigma = 10
    let mut epoch = ScheduleReplay::empty();
    epoch.push(MechanismSpec::Gaussian(GaussianMechanism::new(10.0, 1.0)?), 100)?;

    let cap = RdpCurve::from_fn(&orders, |a| a * 45.0)?;
    let policy = PolicySpec::noise(cap);

    // accuracy improves strongly early on, then plateaus
    let signal: Vec<Signal> = (0..15)
        .map(|p| Signal::Improvement(if p < 8 { 900.0 - 80.0 * p as f64 } else { 50.0 }))
        .collect();
    let trace = simulate_policy(&policy, &signal, &epoch)?;
    for p in &trace.periods {
        let dp = curve_to_dp(&p.spent, delta)?;
        println!(
            "period {:>2}: sigma {:.1} significant {:<5} guard {:<5} -> {:?}, eps_dp so far {:.3}",
            p.period, p.setting, p.significant, p.guard_ok, p.adjustment, dp.epsilon
        );
    }

    let consumption = replay_schedule(&trace.schedule, &orders)?;
    println!("{} steps replayed, final spend at alpha = 8: {:.4}", consumption.len(), consumption.last().unwrap().get(8.0)?);
    Ok(())
}
