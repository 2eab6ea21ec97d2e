//! Momentum-block spectra against the dense full-sector matrix.

use breather::eigen::eigh;
use breather::fock::MomentumIndex;
use breather::hamiltonian::{full_matrix, ModelParams, Sector};

fn main() -> breather::Result<()> {
    let params = ModelParams::h2(6, 4, 3.0, 0.4, 0.7);
    let mut blocks = Vec::new();
    for b in Sector::new(params)?.blocks(&MomentumIndex::all(params.f))? {
        blocks.extend(eigh(&b.matrix, false)?.eigenvalues);
    }
    blocks.sort_by(f64::total_cmp);
    let dense = eigh(&full_matrix(&params)?, false)?.eigenvalues;
    let worst = blocks.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("{} eigenvalues, max |block - dense| = {worst:.3e}", dense.len());
    Ok(())
}
