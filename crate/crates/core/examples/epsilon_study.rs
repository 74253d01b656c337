//! Cauchy behaviour of the mollified solutions as ε halves.

use discoflux::harness::{run_epsilon_study, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for profile in ["piecewise:0:1/3,0.5:2", "steady:0.5", "constant:1"] {
        let cfg = ExperimentConfig::parse(&format!("profile = {profile}\nepsilon0 = 1/16\nlevels = 4\n"))?;
        let rep = run_epsilon_study(&cfg)?;
        println!("{profile}");
        for r in &rep.rows {
            println!("  eps = {:.5} ({:5} cells): L1 gap {:.4e}", r.epsilon, r.n_cells, r.l1_diff);
        }
        println!("  ratios {:.3?}", rep.ratios());
    }
    Ok(())
}
