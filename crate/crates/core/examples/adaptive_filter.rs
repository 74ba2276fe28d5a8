use renyi_accounting::curve::RdpCurve;
use renyi_accounting::filter::FilterState;
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let orders = OrderSet::new(vec![2.0, 8.0])?;
    let cap = RdpCurve::new(orders.clone(), vec![1.0, 4.0])?;
    let mut filter = FilterState::new(cap);

    // requests cheap at one order and expensive at the other
    let requests = [[0.5, 3.5], [0.6, 0.4], [0.3, 0.2], [0.1, 0.1]];
    for eps in requests {
        let request = RdpCurve::new(orders.clone(), eps.to_vec())?;
        let decision = filter.try_spend(&request)?;
        println!("request {eps:?} -> {decision:?}, spent {:?}", filter.spent().values());
    }
    println!("witness order: {:?}", filter.witness_order());
    for event in filter.history() {
        println!("{}", serde_json::to_string(event).unwrap());
    }

    let replayed = FilterState::replay(filter.cap().clone(), false, filter.history())?;
    assert_eq!(replayed, filter);
    Ok(())
}
