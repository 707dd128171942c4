//! James-Stein shrinkage of subgroup means and the population variance it
//! feeds into the marginal test.

use fwer_seh::procedures::{james_stein_shrink, shrunk_population_variance};

fn main() -> fwer_seh::Result<()> {
    let sizes = [40.0, 60.0, 100.0];
    let sigma2 = 0.25;
    for spread in [0.05, 0.5, 5.0] {
        let means = [0.0, spread, -spread];
        let shrunk = james_stein_shrink(&means, &sizes, sigma2)?;
        let raw = shrunk_population_variance(&means, &sizes, sigma2)?;
        let var = shrunk_population_variance(&shrunk, &sizes, sigma2)?;
        println!("spread {spread:<4}: shrunk {shrunk:.3?}  variance {raw:.4} -> {var:.4}");
    }
    Ok(())
}
