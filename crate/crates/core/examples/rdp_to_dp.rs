use renyi_accounting::conversion::{curve_to_dp, dp_target_to_rdp_budget, rdp_to_dp};
use renyi_accounting::curve::RdpCurve;
use renyi_accounting::mechanisms::GaussianMechanism;
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let delta = 1e-5;
    println!("eps_rdp = 1 at alpha = 2   -> eps_dp = {:.6}", rdp_to_dp(1.0, 2.0, delta)?);
    println!("eps_rdp = 0.5 at alpha = 32 -> eps_dp = {:.6}", rdp_to_dp(0.5, 32.0, delta)?);

    // 1000 steps of a sigma = 20 Gaussian, converted at the best order
    let orders = OrderSet::default_set();
    let step = GaussianMechanism::new(20.0, 1.0)?.rdp_curve(&orders);
    let total = step.scale(1000.0)?;
    let dp = curve_to_dp(&total, delta)?;
    println!("1000 x N(0, 20^2): ({:.4}, {delta})-DP via alpha = {}", dp.epsilon, dp.witness_order);

    // the inverse: per-order caps implying a (1.0, 1e-5)-DP target
    let target = dp_target_to_rdp_budget(1.0, delta, &orders)?;
    for (alpha, cap) in target.budget.iter().filter(|(_, c)| *c > 0.0).take(4) {
        println!("  cap at alpha = {alpha:>5}: {cap:.6}");
    }
    let back = curve_to_dp(&target.budget, delta)?;
    println!("cap converts back to eps = {:.15} (<= 1.0)", back.epsilon);

    let curve = RdpCurve::new(OrderSet::new(vec![2.0, 32.0])?, vec![1.0, 1.0])?;
    println!("{}", serde_json::to_string(&curve).unwrap());
    Ok(())
}
