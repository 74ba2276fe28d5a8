use renyi_accounting::curve::RdpCurve;
use renyi_accounting::odometer::early_stopping_bound;
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let single = OrderSet::singleton(2.0)?;
    let steps = vec![RdpCurve::new(single, vec![0.1])?; 3];
    let bound = early_stopping_bound(&steps, 3, 1e-5)?;
    println!("three steps of 0.1 at alpha = 2, stopped at s = 3: eps = {:.6}", bound.epsilon);

    // a fixed schedule; the stopping time is chosen adaptively
    let orders = OrderSet::default_set();
    let steps: Vec<RdpCurve> = (0..50)
        .map(|i| RdpCurve::from_fn(&orders, |a| a / (2.0 * (8.0 + i as f64).powi(2))))
        .collect::<Result<_, _>>()?;
    for s in [1, 10, 25, 50] {
        let b = early_stopping_bound(&steps, s, 1e-5)?;
        println!("s = {s:>2}: eps = {:.4} at alpha = {}", b.epsilon, b.witness_order);
    }
    Ok(())
}
