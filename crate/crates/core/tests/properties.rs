use std::collections::HashSet;

use num_complex::Complex64;
use proptest::prelude::*;

use breather::eigen::{eigh, HermitianMatrix};
use breather::fock::{enumerate_sector, sector_dimension, MomentumIndex, OrbitTable, SectorRanker};
use breather::hamiltonian::{full_matrix, ModelParams, Sector};
use breather::perturbation::{h22_matrix, h42_matrix};

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Orbit count by Burnside: average number of states fixed by each shift.
fn burnside(f: usize, n: usize) -> usize {
    let fixed: usize = (0..f)
        .map(|t| {
            let cycles = gcd(t, f);
            let len = f / cycles;
            if n % len == 0 {
                sector_dimension(cycles, n / len).unwrap()
            } else {
                0
            }
        })
        .sum();
    fixed / f
}

fn sector() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=7, 1usize..=5)
}

fn params() -> impl Strategy<Value = ModelParams> {
    (3usize..=6, 2usize..=4, 0.5f64..12.0, 0.0f64..5.0, 0.05f64..2.0)
        .prop_map(|(f, n, g1, g2, eps)| ModelParams::h2(f, n, g1, g2, eps))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orbit_count_matches_burnside((f, n) in sector()) {
        let table = OrbitTable::new(f, n).unwrap();
        prop_assert_eq!(table.orbits.len(), burnside(f, n));
        let sizes: usize = table.orbits.iter().map(|o| o.size()).sum();
        prop_assert_eq!(sizes, sector_dimension(f, n).unwrap());
    }

    #[test]
    fn momentum_blocks_partition_sector((f, n) in sector()) {
        let table = OrbitTable::new(f, n).unwrap();
        let total: usize = MomentumIndex::all(f).into_iter().map(|k| table.momentum_basis(k).dim()).sum();
        prop_assert_eq!(total, sector_dimension(f, n).unwrap());
    }

    #[test]
    fn rank_is_a_bijection((f, n) in sector()) {
        let ranker = SectorRanker::new(f, n).unwrap();
        let states = enumerate_sector(f, n).unwrap();
        let mut seen = HashSet::new();
        for (i, s) in states.iter().enumerate() {
            prop_assert_eq!(ranker.rank(s).unwrap(), i);
            prop_assert_eq!(&ranker.unrank(i).unwrap(), s);
            seen.insert(s.clone());
        }
        prop_assert_eq!(seen.len(), ranker.dim());
    }

    #[test]
    fn opposite_momenta_have_equal_spectra(p in params()) {
        let sector = Sector::new(p).unwrap();
        for k in MomentumIndex::all(p.f) {
            let a = eigh(&sector.block(k).unwrap().matrix, false).unwrap().eigenvalues;
            let b = eigh(&sector.block(k.negate()).unwrap().matrix, false).unwrap().eigenvalues;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn block_traces_sum_to_full_trace(p in params()) {
        let blocks = Sector::new(p).unwrap().blocks(&MomentumIndex::all(p.f)).unwrap();
        let sum: f64 = blocks.iter().map(|b| b.matrix.trace()).sum();
        let full = full_matrix(&p).unwrap().trace();
        prop_assert!((sum - full).abs() <= 1e-10 * full.abs().max(1.0));
    }

    #[test]
    fn spectrum_invariant_under_unitary_phase(dim in 2usize..40, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = nalgebra::DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = HermitianMatrix::hermitize(a);
        let phases: Vec<Complex64> = (0..dim).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect();
        let rotated = nalgebra::DMatrix::from_fn(dim, dim, |i, j| phases[i] * h.get(i, j) * phases[j].conj());
        let e1 = eigh(&h, false).unwrap().eigenvalues;
        let e2 = eigh(&HermitianMatrix::hermitize(rotated), false).unwrap().eigenvalues;
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() <= 1e-10 * h.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn band_matrices_conjugate_under_k_reversal(g1 in 4.0f64..20.0, g2 in 0.0f64..0.5, l in -4i64..=4) {
        let f = 9;
        let k = MomentumIndex::new(l, f);
        let p22 = ModelParams::h2(f, 4, g1, g2, 0.3);
        prop_assert_eq!(h22_matrix(&p22, k.negate()).unwrap(), h22_matrix(&p22, k).unwrap().conj());
        let p42 = ModelParams::h2(f, 6, g1, g2, 0.3);
        prop_assert_eq!(h42_matrix(&p42, k.negate()).unwrap(), h42_matrix(&p42, k).unwrap().conj());
    }
}
