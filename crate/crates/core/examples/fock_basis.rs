//! Occupation states of a small ring, grouped into translation orbits and
//! momentum blocks.

use breather::fock::{enumerate_sector, MomentumIndex, OrbitTable, SectorRanker};

fn main() -> breather::Result<()> {
    let (f, n) = (6, 3);
    let ranker = SectorRanker::new(f, n)?;
    println!("f = {f}, n = {n}: {} states", ranker.dim());
    for s in enumerate_sector(f, n)?.iter().take(5) {
        println!("  rank {:>2}  {s}", ranker.rank(s)?);
    }

    let table = OrbitTable::new(f, n)?;
    println!("{} translation orbits", table.orbits.len());
    for o in &table.orbits {
        println!("  {}  period {}", o.rep, o.period);
    }
    for k in MomentumIndex::all(f) {
        println!("l = {:>2}: block dimension {}", k.l, table.momentum_basis(k).dim());
    }
    Ok(())
}
