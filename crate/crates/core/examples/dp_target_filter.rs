use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renyi_accounting::conversion::curve_to_dp;
use renyi_accounting::filter::{Decision, FilterState};
use renyi_accounting::mechanisms::GaussianMechanism;
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let (eps_dp, delta) = (2.0, 1e-6);
    let orders = OrderSet::default_set();
    let mut filter = FilterState::from_dp_target(eps_dp, delta, &orders)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // an analyst picks the noise level of each query at random
    let mut granted = 0;
    for _ in 0..500 {
        let sigma = rng.random_range(5.0..40.0);
        let request = GaussianMechanism::new(sigma, 1.0)?.rdp_curve(&orders);
        if filter.try_spend(&request)? == Decision::Grant {
            granted += 1;
        }
    }
    let dp = curve_to_dp(filter.spent(), delta)?;
    println!("granted {granted}/500 queries; spent converts to ({:.6}, {delta})-DP", dp.epsilon);
    assert!(dp.epsilon <= eps_dp);
    Ok(())
}
