use renyi_accounting::orders::OrderSet;

fn main() {
    let default = OrderSet::default_set();
    println!("default set: {} orders, {} ..= {}", default.len(), default.min(), default.max());

    for n in [10, 1_000, 1_000_000] {
        let set = OrderSet::granularity(n).unwrap();
        println!("n = {n:>9}: {:?}", set.as_slice());
    }

    // malformed sets are rejected up front
    println!("{}", OrderSet::new(vec![2.0, 1.5]).unwrap_err());
    println!("{}", OrderSet::new(vec![1.0]).unwrap_err());
}
