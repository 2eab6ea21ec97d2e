//! Effective masses of the single doublet and of the bound doublet pair.

use breather::bands::effective_mass_report;

fn main() -> breather::Result<()> {
    let r = effective_mass_report(10.0, 0.0, 0.1, 19)?;
    println!("m2*  = {:.3}", r.m2_star);
    println!("m22* = {:.3}", r.m22_star);
    println!("m22* / (2 m2*) = {:.4}, impurity strength {}", r.ratio, r.gamma_prediction);
    Ok(())
}
