//! The {4,2} band: two line states bracket a continuum that barely moves
//! with k.

use breather::bands::BandTag;
use breather::cli::{cmd_band, RunConfig};
use breather::hamiltonian::ModelParams;
use breather::perturbation::continuum42_range;

fn main() -> breather::Result<()> {
    let params = ModelParams::h1(11, 6, 30.0, 0.5);
    let out = cmd_band(&RunConfig::new(params).with_pattern("4,2"))?;
    let (lo, hi) = continuum42_range(&params)?;
    println!("infinite-chain continuum ({lo:.4}, {hi:.4})");
    for l in out.report.momenta() {
        let mut lines: Vec<f64> = out.report.at(l).filter(|s| s.tag == BandTag::Line).map(|s| s.energy).collect();
        lines.sort_by(f64::total_cmp);
        let cont: Vec<f64> = out.report.at(l).filter(|s| s.tag == BandTag::Continuum).map(|s| s.energy).collect();
        let (a, b) = cont.iter().fold((f64::MAX, f64::MIN), |(a, b), &e| (a.min(e), b.max(e)));
        println!("l = {l:>2}  lines {lines:.5?}  continuum [{a:.5}, {b:.5}]");
    }
    Ok(())
}
