//! Closed-form second-order band matrices next to the generic
//! Brillouin-Wigner construction.

use breather::fock::MomentumIndex;
use breather::hamiltonian::ModelParams;
use breather::perturbation::{bw_second_order_block, h22_matrix, pattern_classes};

fn main() -> breather::Result<()> {
    let params = ModelParams::h1(7, 4, 10.0, 0.5);
    let k = MomentumIndex::new(1, params.f);
    let closed = h22_matrix(&params, k)?;
    let classes: Vec<_> = pattern_classes(params.f, &[2, 2])?.into_iter().filter(|c| c.compatible(k)).collect();
    let generic = bw_second_order_block(&params, k, &classes)?;
    println!("{{2,2}} effective matrix at k = {:.4}:", k.k());
    for i in 0..closed.dim() {
        let row: Vec<String> = (0..closed.dim())
            .map(|j| format!("{:+.5}{:+.5}i", closed.get(i, j).re, closed.get(i, j).im))
            .collect();
        println!("  {}", row.join("  "));
    }
    let diff = (closed.as_matrix() - generic.as_matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("max |closed - generic| = {diff:.2e}");
    Ok(())
}
