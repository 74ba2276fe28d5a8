use renyi_accounting::curve::RdpCurve;
use renyi_accounting::odometer::{FilterSchedule, OdometerState};
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let orders = OrderSet::default_set();
    let schedule = FilterSchedule::new(1e-5, orders.clone())?;
    let mut odometer = OdometerState::new(schedule);

    let fresh = odometer.running_bound();
    println!("fresh: eps <= {:.6} (alpha = {}, f = {})", fresh.eps_dp, fresh.witness_order, fresh.witness_level);
    println!("candidate at alpha = 32: {:.6}", odometer.candidate_at(32.0)?);

    let single = RdpCurve::from_fn(&orders, |a| if a == 32.0 { 0.6 } else { 0.0 })?;
    odometer.spend(&single)?;
    println!("after 0.6 at alpha = 32: candidate {:.6}", odometer.candidate_at(32.0)?);

    // the reported bound never decreases
    let step = RdpCurve::from_fn(&orders, |a| a / 2000.0)?;
    for _ in 0..5 {
        for _ in 0..200 {
            odometer.spend(&step)?;
        }
        let bound = odometer.running_bound();
        println!(
            "step {:>4}: eps <= {:.4} (alpha = {}, f = {})",
            odometer.step(),
            bound.eps_dp,
            bound.witness_order,
            bound.witness_level,
        );
    }
    Ok(())
}
