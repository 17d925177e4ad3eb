//! The companding map from the catalog: a sampled signal pushed through a
//! cubic nonlinearity, compared against its linear surrogate.

use nlframe::certify::{certify_map, SamplingPlan};
use nlframe::maps::catalog;

fn main() -> nlframe::Result<()> {
    let entry = catalog().into_iter().find(|e| e.name == "companding_3x4").expect("catalog entry");
    let (f, t) = entry.build()?;
    println!("{}: R^{} -> R^{}", f.name(), f.in_dim(), f.out_dim());
    let plan = SamplingPlan { box_radius: 2.0, n_pts: 256, ..Default::default() };
    let s = certify_map(f.as_ref(), &t, &plan)?;
    println!("beta {:.4}, delta {:.4}, stability [{:.4}, {:.4}]", s.beta.estimate, s.delta.estimate, s.stability.lower, s.stability.upper);
    for v in &s.verdicts {
        println!("  {:<40} {}", v.condition, if v.pass { "pass" } else { "fail" });
    }
    Ok(())
}
