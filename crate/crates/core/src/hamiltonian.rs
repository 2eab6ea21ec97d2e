//! The generalized quantum DNLS Hamiltonian on a periodic chain,
//!
//! ```text
//! H = sum_s [ -g1 n_s(n_s - 1) + g2 n_s(n_s - 1)(n_s - 2) ]
//!     - eps sum_s ( a+_{s+1} a_s + a+_s a_{s+1} )
//! ```
//!
//! `Model::H1` is the special case `g2 = 0`. The Hermitian-conjugate
//! partner is taken for the hopping term only. The bond sum runs over all
//! `f` sites, so on a two-site ring the single bond is counted twice.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::HermitianMatrix;
use crate::error::{Error, Result};
use crate::fock::{
    enumerate_sector, sector_dimension, FockState, MomentumBasis, MomentumIndex, OrbitTable,
    SectorRanker,
};

/// Default size limit for dense matrices.
pub const DEFAULT_DENSE_CAP: usize = 4000;
/// Environment variable overriding [`DEFAULT_DENSE_CAP`].
pub const DENSE_CAP_ENV: &str = "BREATHER_DENSE_CAP";

pub fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    H1,
    #[default]
    H2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub f: usize,
    pub n: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub model: Model,
}

impl ModelParams {
    pub fn h1(f: usize, n: usize, gamma1: f64, epsilon: f64) -> Self {
        ModelParams { f, n, gamma1, gamma2: 0.0, epsilon, model: Model::H1 }
    }

    pub fn h2(f: usize, n: usize, gamma1: f64, gamma2: f64, epsilon: f64) -> Self {
        ModelParams { f, n, gamma1, gamma2, epsilon, model: Model::H2 }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.f < 2 {
            return Err(Error::Validation(format!("site count f must be >= 2, got {}", self.f)));
        }
        if self.n > u8::MAX as usize {
            return Err(Error::Validation(format!("boson count n must be <= 255, got {}", self.n)));
        }
        for (name, v) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("epsilon", self.epsilon)] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite, got {v}")));
            }
            if v < 0.0 {
                return Err(Error::Validation(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.model == Model::H1 && self.gamma2 != 0.0 {
            return Err(Error::Validation(format!(
                "model h1 has no three-body term, but gamma2 = {}",
                self.gamma2
            )));
        }
        Ok(())
    }

    /// Three-body coupling actually used by the model.
    pub fn g2(&self) -> f64 {
        match self.model {
            Model::H1 => 0.0,
            Model::H2 => self.gamma2,
        }
    }
}

/// On-site (epsilon = 0) energy of a state.
pub fn diagonal_energy(state: &FockState, params: &ModelParams) -> f64 {
    let g1 = params.gamma1;
    let g2 = params.g2();
    state
        .occupations()
        .iter()
        .map(|&m| {
            let m = m as f64;
            -g1 * m * (m - 1.0) + g2 * m * (m - 1.0) * (m - 2.0)
        })
        .sum()
}

/// Single hop of one boson from `site` to `site + dir`; see [`FockState::hop`].
pub fn hop_element(src: &FockState, site: usize, dir: i64) -> Option<(FockState, f64)> {
    src.hop(site, dir)
}

/// Images of `a+_{s+1} a_s + a+_s a_{s+1}` summed over all `s`, with their
/// bosonic amplitudes (the factor `-eps` is not included).
pub fn hopping_images(state: &FockState) -> Vec<(FockState, f64)> {
    let f = state.sites();
    let mut out = Vec::with_capacity(2 * f);
    for s in 0..f {
        for dir in [1, -1] {
            if let Some(img) = state.hop(s, dir) {
                out.push(img);
            }
        }
    }
    out
}

/// Matrix elements `<r'; k| V |r; k>` of the bare hopping operator
/// `V = sum_s (a+_{s+1} a_s + h.c.)` for every `r'` reached from `rep`.
///
/// An image `T^t |rep'>` contributes `amp * e^{i k t} * sqrt(d / d')`.
/// Images in orbits incompatible with `k` carry no weight and are skipped.
pub fn hopping_column(
    rep: &FockState,
    period: usize,
    k: MomentumIndex,
) -> Vec<(FockState, Complex64)> {
    let kval = k.k();
    let mut acc: HashMap<FockState, Complex64> = HashMap::new();
    let mut order: Vec<FockState> = Vec::new();
    for (img, amp) in hopping_images(rep) {
        let (orbit, t) = img.locate();
        if !orbit.compatible(k) {
            continue;
        }
        let norm = (period as f64 / orbit.period as f64).sqrt();
        let phase = Complex64::from_polar(amp * norm, kval * t as f64);
        let entry = acc.entry(orbit.rep.clone()).or_insert_with(|| {
            order.push(orbit.rep.clone());
            Complex64::new(0.0, 0.0)
        });
        *entry += phase;
    }
    order
        .into_iter()
        .map(|r| {
            let v = acc[&r];
            (r, v)
        })
        .collect()
}

/// Hamiltonian restricted to one crystal momentum.
#[derive(Clone, Debug)]
pub struct MomentumBlock {
    pub k: MomentumIndex,
    pub basis: MomentumBasis,
    pub matrix: HermitianMatrix,
}

/// Shared orbit table for every block of one parameter set.
#[derive(Clone, Debug)]
pub struct Sector {
    pub params: ModelParams,
    pub table: OrbitTable,
}

impl Sector {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let table = OrbitTable::new(params.f, params.n)?;
        Ok(Sector { params, table })
    }

    pub fn block(&self, k: MomentumIndex) -> Result<MomentumBlock> {
        if k.f != self.params.f {
            return Err(Error::Validation(format!(
                "momentum index belongs to f = {}, sector has f = {}",
                k.f, self.params.f
            )));
        }
        let basis = self.table.momentum_basis(k);
        let dim = basis.dim();
        let cap = dense_cap();
        if dim > cap {
            return Err(Error::Capacity { what: "momentum block", requested: dim, limit: cap });
        }
        let eps = self.params.epsilon;
        let mut a = DMatrix::<Complex64>::zeros(dim, dim);
        for (col, orbit) in basis.orbits.iter().enumerate() {
            a[(col, col)] += Complex64::new(diagonal_energy(&orbit.rep, &self.params), 0.0);
            if eps == 0.0 {
                continue;
            }
            for (rep, v) in hopping_column(&orbit.rep, orbit.period, k) {
                let row = basis
                    .index_of(&rep)
                    .expect("compatible orbit missing from momentum basis");
                a[(row, col)] += -eps * v;
            }
        }
        Ok(MomentumBlock { k, basis, matrix: HermitianMatrix::hermitize(a) })
    }

    /// Blocks for the requested momenta, built in parallel, returned in input order.
    pub fn blocks(&self, ks: &[MomentumIndex]) -> Result<Vec<MomentumBlock>> {
        ks.par_iter().map(|&k| self.block(k)).collect()
    }
}

/// Convenience wrapper building a single block from scratch.
pub fn assemble_block(params: &ModelParams, k: MomentumIndex) -> Result<MomentumBlock> {
    Sector::new(*params)?.block(k)
}

/// Hamiltonian over the full (unsymmetrized) occupation basis.
pub fn full_matrix(params: &ModelParams) -> Result<HermitianMatrix> {
    full_matrix_capped(params, dense_cap())
}

pub fn full_matrix_capped(params: &ModelParams, cap: usize) -> Result<HermitianMatrix> {
    params.validate()?;
    let dim = sector_dimension(params.f, params.n).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::Capacity { what: "dense full-sector matrix", requested: dim, limit: cap });
    }
    let states = enumerate_sector(params.f, params.n)?;
    let ranker = SectorRanker::new(params.f, params.n)?;
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, s) in states.iter().enumerate() {
        a[(col, col)] += Complex64::new(diagonal_energy(s, params), 0.0);
        for (img, amp) in hopping_images(s) {
            let row = ranker.rank(&img)?;
            a[(row, col)] += Complex64::new(-params.epsilon * amp, 0.0);
        }
    }
    Ok(HermitianMatrix::hermitize(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigh;

    fn st(occ: &[u8]) -> FockState {
        FockState::from_slice(occ)
    }

    #[test]
    fn diagonal_energy_examples() {
        let p = ModelParams::h1(5, 2, 10.0, 0.5);
        assert_eq!(diagonal_energy(&st(&[2, 0, 0, 0, 0]), &p), -20.0);
        let p = ModelParams::h2(5, 4, 10.0, 7.5, 0.5);
        assert_eq!(diagonal_energy(&st(&[4, 0, 0, 0, 0]), &p), 60.0);
        let p = ModelParams::h2(5, 4, 10.0, 0.0, 0.5);
        assert_eq!(diagonal_energy(&st(&[2, 2, 0, 0, 0]), &p), -40.0);
    }

    #[test]
    fn validation() {
        assert!(ModelParams::h1(1, 2, 1.0, 1.0).validate().is_err());
        assert!(ModelParams::h2(4, 2, 1.0, -1.0, 1.0).validate().is_err());
        assert!(ModelParams::h2(4, 2, f64::NAN, 1.0, 1.0).validate().is_err());
        let mut p = ModelParams::h1(4, 2, 1.0, 1.0);
        p.gamma2 = 2.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn two_site_ring_doubles_the_bond() {
        // Basis |20>, |11>, |02>; each bond enters twice, so <11|H|20> = -2 sqrt 2.
        let p = ModelParams::h2(2, 2, 0.0, 0.0, 1.0);
        let h = full_matrix(&p).unwrap();
        assert!((h.get(1, 0).re + 2.0 * 2f64.sqrt()).abs() < 1e-14);
        let s = eigh(&h, false).unwrap();
        for (a, b) in s.eigenvalues.iter().zip([-4.0, 0.0, 4.0]) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let p = ModelParams::h2(5, 3, 3.0, 1.0, 0.0);
        let h = full_matrix(&p).unwrap();
        let states = enumerate_sector(5, 3).unwrap();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                let expect = if i == j { diagonal_energy(&states[i], &p) } else { 0.0 };
                assert_eq!(h.get(i, j).re, expect);
            }
        }
        let sector = Sector::new(p).unwrap();
        let block = sector.block(MomentumIndex::new(1, 5)).unwrap();
        for (i, o) in block.basis.orbits.iter().enumerate() {
            assert_eq!(block.matrix.get(i, i).re, diagonal_energy(&o.rep, &p));
        }
    }

    #[test]
    fn full_trace_is_sum_of_diagonal_energies() {
        let p = ModelParams::h2(4, 3, 1.3, 0.4, 0.9);
        let h = full_matrix(&p).unwrap();
        let expected: f64 = enumerate_sector(4, 3).unwrap().iter().map(|s| diagonal_energy(s, &p)).sum();
        assert!((h.trace() - expected).abs() < 1e-12);
    }

    #[test]
    fn full_matrix_capacity() {
        let p = ModelParams::h1(19, 4, 10.0, 0.5);
        assert!(matches!(full_matrix_capped(&p, 4000), Err(Error::Capacity { requested: 7315, .. })));
    }

    #[test]
    fn hops_conserve_number() {
        for s in enumerate_sector(5, 4).unwrap() {
            for (img, _) in hopping_images(&s) {
                assert_eq!(img.total(), 4);
            }
        }
    }

    #[test]
    fn gamma2_only_shifts_triple_occupancy() {
        let lo = ModelParams::h2(4, 4, 2.0, 0.5, 0.0);
        let hi = ModelParams::h2(4, 4, 2.0, 1.5, 0.0);
        for s in enumerate_sector(4, 4).unwrap() {
            let (a, b) = (diagonal_energy(&s, &lo), diagonal_energy(&s, &hi));
            if s.occupations().iter().any(|&m| m >= 3) {
                assert!(b > a);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn fig1_block_dimension() {
        let p = ModelParams::h1(19, 4, 10.0, 0.5);
        let b = assemble_block(&p, MomentumIndex::new(3, 19)).unwrap();
        assert_eq!(b.matrix.dim(), 385);
    }

    #[test]
    fn listed_two_doublet_elements() {
        // <22|V|112> = e^{ik} <22|V|211> = e^{ik} sqrt 2 in the bare hopping operator.
        let f = 9;
        let k = MomentumIndex::new(2, f);
        let mut occ = vec![0u8; f];
        occ[0] = 1;
        occ[1] = 1;
        occ[2] = 2;
        let one_one_two = st(&occ);
        let (orbit, t) = one_one_two.locate();
        // column of |112> computed relative to its canonical representative
        let col = hopping_column(&orbit.rep, orbit.period, k);
        let mut two_two = vec![0u8; f];
        two_two[0] = 2;
        two_two[1] = 2;
        let v = col.iter().find(|(r, _)| r == &st(&two_two)).unwrap().1;
        // |112> = T^t |rep>, so its Bloch state is e^{ikt} |rep; k>
        let v = v * Complex64::from_polar(1.0, k.k() * t as f64);
        let expect = Complex64::from_polar(2f64.sqrt(), k.k());
        assert!((v - expect).norm() < 1e-14, "{v} vs {expect}");
    }
}
