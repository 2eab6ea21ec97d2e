//! How the exact-vs-perturbative residual shrinks as the coupling halves.

use breather::cli::{cmd_compare, RunConfig};
use breather::hamiltonian::ModelParams;

fn main() -> breather::Result<()> {
    let mut cfg = RunConfig::new(ModelParams::h1(19, 4, 10.0, 0.5)).with_pattern("2,2");
    cfg.scaling = true;
    let out = cmd_compare(&cfg)?;
    for row in out.scaling.unwrap_or_default() {
        match row.decay_factor {
            Some(f) => println!("eps {:<6} max residual {:.4e}  factor {f:.2}", row.epsilon, row.max_residual),
            None => println!("eps {:<6} max residual {:.4e}", row.epsilon, row.max_residual),
        }
    }
    Ok(())
}
