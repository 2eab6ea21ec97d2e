//! Number-conserving bosonic occupation states on a periodic chain.
//!
//! States of a sector `(f, n)` are enumerated in reverse-lexicographic
//! order, grouped into translation orbits, and orbits compatible with a
//! crystal momentum `k = 2 pi l / f` form the Bloch basis of that block.
//!
//! The Bloch ket of an orbit with representative `|r>` and period `d` is
//!
//! ```text
//! |r; k> = d^{-1/2} sum_{t=0}^{d-1} e^{-i k t} T^t |r>
//! ```
//!
//! where `T` shifts every boson one site to the right. It is non-zero iff
//! `l d = 0 (mod f)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of states `enumerate_sector` will produce.
pub const DEFAULT_SECTOR_CAP: usize = 10_000_000;

/// Occupation numbers of `f` sites.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<u8>);

impl FockState {
    pub fn new(occ: Vec<u8>) -> Result<Self> {
        if occ.len() < 2 {
            return Err(Error::Validation(format!(
                "a periodic chain needs at least 2 sites, got {}",
                occ.len()
            )));
        }
        Ok(FockState(occ))
    }

    /// Shorthand used throughout the tests: `FockState::from_slice(&[2, 0, 2, 0])`.
    ///
    /// Panics on fewer than two sites.
    pub fn from_slice(occ: &[u8]) -> Self {
        Self::new(occ.to_vec()).expect("invalid occupation vector")
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&x| x as usize).sum()
    }

    /// `T^t`: site `s` of the result holds what site `s - t (mod f)` held.
    pub fn translate(&self, t: i64) -> FockState {
        let f = self.0.len();
        let shift = t.rem_euclid(f as i64) as usize;
        let mut out = self.0.clone();
        out.rotate_right(shift);
        FockState(out)
    }

    /// Non-zero occupations sorted in decreasing order, e.g. `[2, 2]`.
    pub fn pattern(&self) -> Vec<u8> {
        let mut p: Vec<u8> = self.0.iter().copied().filter(|&x| x > 0).collect();
        p.sort_unstable_by(|a, b| b.cmp(a));
        p
    }

    /// Cyclic distances between the two occupied sites of a two-clump state.
    ///
    /// Returns `None` unless exactly two sites are occupied.
    pub fn clump_separation(&self) -> Option<usize> {
        let occupied: Vec<usize> = (0..self.sites()).filter(|&s| self.0[s] > 0).collect();
        match occupied.as_slice() {
            [a, b] => {
                let d = b - a;
                Some(d.min(self.sites() - d))
            }
            _ => None,
        }
    }

    /// Moves one boson from `site` to `site + dir` (periodic).
    ///
    /// Returns the image and the bosonic amplitude `sqrt(n_s (n_{s+dir} + 1))`,
    /// or `None` when the source site is empty.
    pub fn hop(&self, site: usize, dir: i64) -> Option<(FockState, f64)> {
        let f = self.sites();
        let from = site % f;
        if self.0[from] == 0 {
            return None;
        }
        let to = (from as i64 + dir).rem_euclid(f as i64) as usize;
        let mut out = self.0.clone();
        let n_from = out[from] as f64;
        out[from] -= 1;
        let n_to = out[to] as f64;
        out[to] += 1;
        Some((FockState(out), (n_from * (n_to + 1.0)).sqrt()))
    }

    /// Canonical representative together with the shift `t` such that
    /// `self == rep.translate(t)`.
    pub fn locate(&self) -> (TranslationOrbit, i64) {
        let f = self.sites();
        let mut best = self.clone();
        let mut best_shift = 0usize;
        let mut period = f;
        for u in 1..f {
            // candidate = T^{-u} self
            let mut cand = self.0.clone();
            cand.rotate_left(u);
            if cand == self.0 && period == f {
                period = u;
            }
            if cand > best.0 {
                best = FockState(cand);
                best_shift = u;
            }
        }
        // self = T^{u} best
        let shift = (best_shift % period) as i64;
        (TranslationOrbit { rep: best, period }, shift)
    }

    pub fn orbit(&self) -> TranslationOrbit {
        self.locate().0
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.0.iter().any(|&x| x > 9);
        write!(f, "|")?;
        for (i, x) in self.0.iter().enumerate() {
            if wide && i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ">")
    }
}

/// Equivalence class of states under cyclic translation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TranslationOrbit {
    /// Lexicographically maximal rotation.
    pub rep: FockState,
    /// Smallest positive shift leaving `rep` invariant; divides `f`.
    pub period: usize,
}

impl TranslationOrbit {
    /// Number of distinct states in the orbit (equals the period).
    pub fn size(&self) -> usize {
        self.period
    }

    /// Whether the orbit carries a Bloch state at crystal momentum `k`.
    pub fn compatible(&self, k: MomentumIndex) -> bool {
        (k.l * self.period as i64).rem_euclid(k.f as i64) == 0
    }

    pub fn members(&self) -> impl Iterator<Item = FockState> + '_ {
        (0..self.period as i64).map(move |t| self.rep.translate(t))
    }
}

/// `binomial(n + f - 1, n)` or `None` on overflow.
pub fn sector_dimension(f: usize, n: usize) -> Option<usize> {
    binomial(n + f - 1, n)
}

pub(crate) fn binomial(top: usize, bottom: usize) -> Option<usize> {
    if bottom > top {
        return Some(0);
    }
    let bottom = bottom.min(top - bottom);
    let mut acc: u128 = 1;
    for i in 0..bottom {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

fn check_sector(f: usize, n: usize) -> Result<()> {
    if f < 2 {
        return Err(Error::Validation(format!("site count f must be >= 2, got {f}")));
    }
    if n > u8::MAX as usize {
        return Err(Error::Validation(format!("boson count n must be <= 255, got {n}")));
    }
    Ok(())
}

/// All occupation vectors of length `f` summing to `n`, reverse-lexicographic.
pub fn enumerate_sector(f: usize, n: usize) -> Result<Vec<FockState>> {
    enumerate_sector_capped(f, n, DEFAULT_SECTOR_CAP)
}

pub fn enumerate_sector_capped(f: usize, n: usize, cap: usize) -> Result<Vec<FockState>> {
    check_sector(f, n)?;
    let dim = sector_dimension(f, n).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::Capacity {
            what: "sector enumeration",
            requested: dim,
            limit: cap,
        });
    }
    let mut out = Vec::with_capacity(dim);
    let mut occ = vec![0u8; f];
    fill(&mut occ, 0, n, &mut out);
    Ok(out)
}

fn fill(occ: &mut [u8], pos: usize, left: usize, out: &mut Vec<FockState>) {
    if pos == occ.len() - 1 {
        occ[pos] = left as u8;
        out.push(FockState(occ.to_vec()));
        return;
    }
    for v in (0..=left).rev() {
        occ[pos] = v as u8;
        fill(occ, pos + 1, left - v, out);
    }
    occ[pos] = 0;
}

/// Combinatorial rank/unrank for the reverse-lexicographic enumeration.
#[derive(Clone, Debug)]
pub struct SectorRanker {
    f: usize,
    n: usize,
    // ways[m][q]: distributions of q bosons over m sites.
    ways: Vec<Vec<usize>>,
}

impl SectorRanker {
    pub fn new(f: usize, n: usize) -> Result<Self> {
        check_sector(f, n)?;
        sector_dimension(f, n).ok_or(Error::Capacity {
            what: "sector rank table",
            requested: usize::MAX,
            limit: usize::MAX,
        })?;
        let ways = (0..=f)
            .map(|m| {
                (0..=n)
                    .map(|q| if m == 0 { (q == 0) as usize } else { binomial(q + m - 1, q).unwrap() })
                    .collect()
            })
            .collect();
        Ok(SectorRanker { f, n, ways })
    }

    pub fn dim(&self) -> usize {
        self.ways[self.f][self.n]
    }

    /// Index of `state` in `enumerate_sector(f, n)`.
    pub fn rank(&self, state: &FockState) -> Result<usize> {
        if state.sites() != self.f || state.total() != self.n {
            return Err(Error::NotInSector(state.to_string()));
        }
        let mut idx = 0;
        let mut left = self.n;
        for (pos, &v) in state.0.iter().enumerate().take(self.f - 1) {
            let rest = self.f - pos - 1;
            // every larger value at this position precedes `state`
            for larger in (v as usize + 1)..=left {
                idx += self.ways[rest][left - larger];
            }
            left -= v as usize;
        }
        Ok(idx)
    }

    pub fn unrank(&self, mut idx: usize) -> Result<FockState> {
        if idx >= self.dim() {
            return Err(Error::Validation(format!("rank {idx} out of range {}", self.dim())));
        }
        let mut occ = vec![0u8; self.f];
        let mut left = self.n;
        for pos in 0..self.f - 1 {
            let rest = self.f - pos - 1;
            let mut v = left;
            loop {
                let block = self.ways[rest][left - v];
                if idx < block {
                    break;
                }
                idx -= block;
                v -= 1;
            }
            occ[pos] = v as u8;
            left -= v;
        }
        occ[self.f - 1] = left as u8;
        Ok(FockState(occ))
    }
}

/// Crystal momentum `k = 2 pi l / f`, stored as the integer pair `(l, f)`.
///
/// For odd `f` the label runs over `-sigma..=sigma`; for even `f` over `0..f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentumIndex {
    pub l: i64,
    pub f: usize,
}

impl MomentumIndex {
    pub fn new(l: i64, f: usize) -> Self {
        let fi = f as i64;
        let mut l = l.rem_euclid(fi);
        if f % 2 == 1 && l > fi / 2 {
            l -= fi;
        }
        MomentumIndex { l, f }
    }

    pub fn k(&self) -> f64 {
        2.0 * PI * self.l as f64 / self.f as f64
    }

    /// `k` folded into `(-pi, pi]`.
    pub fn k_centered(&self) -> f64 {
        let fi = self.f as i64;
        let mut l = self.l.rem_euclid(fi);
        if 2 * l > fi {
            l -= fi;
        }
        2.0 * PI * l as f64 / self.f as f64
    }

    pub fn negate(&self) -> Self {
        MomentumIndex::new(-self.l, self.f)
    }

    /// All `f` momenta in ascending `l`.
    pub fn all(f: usize) -> Vec<MomentumIndex> {
        if f % 2 == 1 {
            let s = (f / 2) as i64;
            (-s..=s).map(|l| MomentumIndex { l, f }).collect()
        } else {
            (0..f as i64).map(|l| MomentumIndex { l, f }).collect()
        }
    }
}

/// Every translation orbit of a sector, in descending order of representative.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub f: usize,
    pub n: usize,
    pub orbits: Vec<TranslationOrbit>,
}

impl OrbitTable {
    pub fn new(f: usize, n: usize) -> Result<Self> {
        Self::with_cap(f, n, DEFAULT_SECTOR_CAP)
    }

    pub fn with_cap(f: usize, n: usize, cap: usize) -> Result<Self> {
        let orbits = enumerate_sector_capped(f, n, cap)?
            .into_iter()
            .filter_map(|s| {
                let (orbit, _) = s.locate();
                (orbit.rep == s).then_some(orbit)
            })
            .collect();
        Ok(OrbitTable { f, n, orbits })
    }

    pub fn momentum_basis(&self, k: MomentumIndex) -> MomentumBasis {
        let orbits: Vec<TranslationOrbit> =
            self.orbits.iter().filter(|o| o.compatible(k)).cloned().collect();
        let index = orbits.iter().enumerate().map(|(i, o)| (o.rep.clone(), i)).collect();
        MomentumBasis { k, orbits, index }
    }
}

/// Bloch basis of one crystal-momentum block.
#[derive(Clone, Debug)]
pub struct MomentumBasis {
    pub k: MomentumIndex,
    pub orbits: Vec<TranslationOrbit>,
    index: HashMap<FockState, usize>,
}

impl MomentumBasis {
    pub fn new(f: usize, n: usize, k: MomentumIndex) -> Result<Self> {
        Ok(OrbitTable::new(f, n)?.momentum_basis(k))
    }

    pub fn dim(&self) -> usize {
        self.orbits.len()
    }

    /// Position of the orbit whose representative is `rep`.
    pub fn index_of(&self, rep: &FockState) -> Option<usize> {
        self.index.get(rep).copied()
    }
}
