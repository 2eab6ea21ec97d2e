//! With gamma1 < 3 gamma2 the bottom of the {2,2} line band is the ground
//! state of the whole n = 4 sector.

use breather::cli::{cmd_band, RunConfig};
use breather::hamiltonian::ModelParams;

fn main() -> breather::Result<()> {
    let params = ModelParams::h2(19, 4, 10.0, 7.5, 0.5);
    let out = cmd_band(&RunConfig::new(params).with_pattern("2,2"))?;
    println!("global ground energy {:.10}", out.ground_energy);
    for r in out.rows.iter().filter(|r| r.global_ground_state) {
        println!("held by l = {}, index {}, tag {}, weight {:.4}", r.l, r.index, r.tag, r.weight);
    }
    Ok(())
}
