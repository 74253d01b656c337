//! Single-site equilibrium laws and product-measure sampling.

use discoflux::rng::{stream, Purpose};
use discoflux::zrp::sample_product_measure;
use discoflux::{EquilibriumTables, RateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ind = EquilibriumTables::new(RateFunction::Indicator)?;
    let id = EquilibriumTables::new(RateFunction::Identity)?;
    println!("indicator: Z(0.5) = {}, R(0.5) = {}", ind.partition_function(0.5)?, ind.mean_occupation(0.5)?);
    println!("identity:  Z(1) = {:.15}, R(1) = {}", id.partition_function(1.0)?, id.mean_occupation(1.0)?);
    println!("fugacity for density 2 (indicator): {}", ind.fugacity_for_density(2.0)?);

    let n = 100_000;
    let mut rng = stream(42, 0, Purpose::Initial);
    let c = sample_product_measure(&ind, &vec![1.0; n], &mut rng)?;
    let mean = c.total_particles() as f64 / n as f64;
    // variance of a geometric law with mean 1 is 2
    println!("empirical mean {mean:.4} (4-sigma band {:.4})", 4.0 * (2.0 / n as f64).sqrt());
    Ok(())
}
