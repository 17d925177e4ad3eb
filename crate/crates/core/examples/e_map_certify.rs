//! Certifies the constants of the three-branch curve E_{p,eps} for every
//! catalog variant and prints beta, delta, alpha and the stability envelope.

use nlframe::certify::{certify_map, SamplingPlan};
use nlframe::maps::catalog;

fn main() -> nlframe::Result<()> {
    let plan = SamplingPlan::new(4.0 * std::f64::consts::PI, 1, 4000, 8, 0)?;
    println!("{:<22} {:>9} {:>9} {:>9} {:>9} {:>9}", "map", "beta", "delta", "alpha", "A", "B");
    for entry in catalog().into_iter().filter(|e| e.name.starts_with("e_map")) {
        let (f, t) = entry.build()?;
        let s = certify_map(f.as_ref(), &t, &plan)?;
        println!(
            "{:<22} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
            entry.name, s.beta.estimate, s.delta.estimate, s.alpha.estimate, s.stability.lower, s.stability.upper
        );
    }
    Ok(())
}
