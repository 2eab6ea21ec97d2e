//! The {2,2} band on a 19-site ring: exact line and continuum against the
//! infinite-chain formulas. Writes the full band as CSV to stdout.

use breather::cli::{cmd_band, write_output, RunConfig};
use breather::fock::MomentumIndex;
use breather::hamiltonian::ModelParams;
use breather::perturbation::band22_asymptotic;
use breather::bands::BandTag;

fn main() -> breather::Result<()> {
    let params = ModelParams::h1(19, 4, 10.0, 0.5);
    let cfg = RunConfig::new(params).with_pattern("2,2");
    let out = cmd_band(&cfg)?;
    for l in out.report.momenta() {
        let asym = band22_asymptotic(&params, MomentumIndex::new(l, params.f))?;
        let line = out.report.at(l).find(|s| s.tag == BandTag::Line).map(|s| s.energy);
        eprintln!(
            "l = {l:>3}  line {:>14.8}  formula {:>14.8}  continuum [{:.6}, {:.6}]",
            line.unwrap_or(f64::NAN),
            asym.line.unwrap_or(f64::NAN),
            asym.continuum_min(),
            asym.continuum_max()
        );
    }
    write_output(&out, &cfg)
}
