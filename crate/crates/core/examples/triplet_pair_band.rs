//! The {3,3} band: one impurity line below a continuum that is flat to
//! second order.

use breather::cli::{cmd_band, RunConfig};
use breather::hamiltonian::ModelParams;

fn main() -> breather::Result<()> {
    let params = ModelParams::h2(11, 6, 10.0, 20.0, 0.5);
    let out = cmd_band(&RunConfig::new(params).with_pattern("3,3"))?;
    for r in out.rows.iter().filter(|r| r.l == 0) {
        println!("{:>10} {:.8}  pt {:.8}", r.tag.to_string(), r.energy, r.pt.unwrap_or(f64::NAN));
    }
    Ok(())
}
