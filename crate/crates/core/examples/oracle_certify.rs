use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renyi_accounting::curve::RdpCurve;
use renyi_accounting::mechanisms::{DiscreteMechanism, BOTTOM_LABEL};
use renyi_accounting::odometer::FilterSchedule;
use renyi_accounting::oracle::{
    random_script, verify_filter_bound, verify_truncated_odometer, AdversaryScript, ScriptNode, ScriptParams,
};
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let orders = OrderSet::new(vec![2.0, 4.0, 8.0])?;

    // ask a randomized-response query, and a second one only after "1"
    let rr = DiscreteMechanism::randomized_response(0.25)?;
    let cost = rr.rdp_curve(&orders);
    let second = ScriptNode::query(rr.clone(), cost.clone(), BTreeMap::new());
    let mut children = BTreeMap::new();
    children.insert("1".to_owned(), second.clone());
    children.insert(BOTTOM_LABEL.to_owned(), second);
    let script = AdversaryScript::new(ScriptNode::query(rr, cost.clone(), children))?;
    println!("{}", serde_json::to_string(&script).unwrap());

    let cap = cost.scale(1.5)?;
    let report = verify_filter_bound(&script, &cap)?;
    println!("hand-written script: holds = {}, {} views", report.holds, report.views);
    for m in &report.orders {
        println!("  alpha = {}: divergence {:.6} <= cap {:.6}? margin {:+.3e}", m.alpha, m.divergence, m.bound, m.margin);
    }

    // a random corpus through filters and truncated odometers
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = ScriptParams::new(orders.clone());
    let schedule = FilterSchedule::new(1e-3, orders.clone())?;
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let script = random_script(&mut rng, &params);
        let cap = RdpCurve::from_fn(&orders, |a| 0.2 * a)?;
        let filter = verify_filter_bound(&script, &cap)?;
        assert!(filter.holds);
        for f in 1..=2 {
            let trunc = verify_truncated_odometer(&script, &schedule, f)?;
            assert!(trunc.holds);
            worst = trunc.orders.iter().map(|m| m.margin).fold(worst, f64::min);
        }
    }
    println!("50 random scripts certified; smallest truncation margin {worst:.3e}");
    Ok(())
}
