//! Second-order degenerate perturbation theory for clump bands.
//!
//! At `eps = 0` every state of a pattern such as `{2,2}` is degenerate at
//! the sum of its on-site energies. Two independent routes give the
//! `O(eps^2)` effective Hamiltonian on the Bloch-symmetrized class space:
//!
//! * closed forms for `{2,2}`, `{4,2}` and `{3,3}` ([`h22_matrix`],
//!   [`h42_matrix`], [`h33_matrix`]), plus the infinite-chain `{2,2}`
//!   branches ([`band22_asymptotic`]) and the `{4,2}` continuum
//!   ([`continuum42`]);
//! * a generic Brillouin-Wigner builder ([`bw_second_order_block`]) that
//!   sums over intermediate states using only the hopping operator.
//!
//! All effective matrices carry the correction only; the zeroth-order
//! energy is added by [`predict_band`]. Matrices use the Bloch convention
//! of [`crate::fock`]: class `j` is `|2 0^{j-1} 2 ...>` for `{2,2}`, and for
//! `{4,2}` the class index is the clockwise distance from the 4-site to the
//! 2-site. In this convention the sub-diagonal of `H22` carries `conj(kappa)`
//! and the lower-left corner of `H42` carries `p`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eigen::{eigh, tridiag_plus_corners, HermitianMatrix};
use crate::error::{Error, Result};
use crate::fock::{FockState, MomentumIndex, OrbitTable, TranslationOrbit};
use crate::hamiltonian::{diagonal_energy, hopping_column, ModelParams};

/// Relative floor below which a vanishing denominator factor is a resonance.
pub const RESONANCE_REL_FLOOR: f64 = 1e-6;

/// `E_s = -g1 s(s-1) + g2 s(s-1)(s-2)`: energy of `s` bosons on one site.
pub fn onsite_energy(s: usize, gamma1: f64, gamma2: f64) -> f64 {
    let s = s as f64;
    -gamma1 * s * (s - 1.0) + gamma2 * s * (s - 1.0) * (s - 2.0)
}

/// The ladder `E_1, E_2, ...` for one parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnsiteLadder {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl OnsiteLadder {
    pub fn new(params: &ModelParams) -> Self {
        OnsiteLadder { gamma1: params.gamma1, gamma2: params.g2() }
    }

    pub fn energy(&self, s: usize) -> f64 {
        onsite_energy(s, self.gamma1, self.gamma2)
    }

    /// Zeroth-order energy of a clump pattern.
    pub fn pattern_energy(&self, pattern: &[u8]) -> f64 {
        pattern.iter().map(|&m| self.energy(m as usize)).sum()
    }
}

fn resonance_floor(params: &ModelParams) -> f64 {
    RESONANCE_REL_FLOOR * params.gamma1.max(params.g2()).max(1.0)
}

fn check_factor(params: &ModelParams, name: &str, value: f64) -> Result<()> {
    let floor = resonance_floor(params);
    if !(value.abs() >= floor) {
        return Err(Error::Resonance { denominator: name.to_string(), value, floor });
    }
    Ok(())
}

/// A vanishing factor and the physical energy denominator it controls.
struct Denominator {
    name: &'static str,
    factor: f64,
    energy: f64,
}

fn denominators(params: &ModelParams, pattern: &[u8]) -> Vec<Denominator> {
    let (g1, g2) = (params.gamma1, params.g2());
    let d = |name, factor: f64, scale: f64| Denominator { name, factor, energy: scale * factor };
    match pattern {
        [2, 2] => vec![d("γ1", g1, -2.0), d("γ1 − 3γ2", g1 - 3.0 * g2, 2.0)],
        [4, 2] => vec![
            d("γ1", g1, -2.0),
            d("γ1 − 3γ2", g1 - 3.0 * g2, -6.0),
            d("γ1 − 6γ2", g1 - 6.0 * g2, -2.0),
        ],
        [3, 3] => vec![
            d("3γ2 − 2γ1", 3.0 * g2 - 2.0 * g1, 2.0),
            d("γ1 − 6γ2", g1 - 6.0 * g2, 2.0),
        ],
        _ => Vec::new(),
    }
}

fn check_pattern(params: &ModelParams, pattern: &[u8]) -> Result<()> {
    for den in denominators(params, pattern) {
        check_factor(params, den.name, den.factor)?;
    }
    Ok(())
}

/// Human-readable warnings when a closed-form band is near its validity edge.
///
/// Flags energy denominators smaller than `10 eps` and the three-site ring,
/// whose `{2,2}` matrix collapses to a single entry.
pub fn validity_warnings(params: &ModelParams, pattern: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    for den in denominators(params, pattern) {
        if den.energy.abs() < 10.0 * params.epsilon {
            out.push(format!(
                "energy denominator controlled by {} is {:.6e}, below 10·ε = {:.6e}; second-order results are unreliable",
                den.name,
                den.energy,
                10.0 * params.epsilon
            ));
        }
    }
    if params.f == 3 {
        out.push("f = 3 is outside the validity of the closed-form band matrices".to_string());
    }
    out
}

fn half_sites(params: &ModelParams) -> Result<usize> {
    if params.f % 2 == 0 || params.f < 3 {
        return Err(Error::Validation(format!(
            "perturbative band matrices need an odd site count f >= 3, got {}",
            params.f
        )));
    }
    Ok((params.f - 1) / 2)
}

/// Coefficients of the `{2,2}` effective matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtCoefficients22 {
    /// Impurity strength of the adjacent `|22>` class.
    pub gamma: f64,
    /// `4 eps^2 / (E_2 - 2 E_1)`.
    pub prefactor: f64,
    /// `8 eps^2 / (E_2 - 2 E_1)`.
    pub shift: f64,
    pub sigma: usize,
}

impl PtCoefficients22 {
    pub fn new(params: &ModelParams) -> Result<Self> {
        check_pattern(params, &[2, 2])?;
        let ladder = OnsiteLadder::new(params);
        let (g1, g2) = (params.gamma1, params.g2());
        let e21 = ladder.energy(2) - 2.0 * ladder.energy(1);
        let eps2 = params.epsilon * params.epsilon;
        Ok(PtCoefficients22 {
            gamma: (3.0 * g2 - 4.0 * g1) / (g1 - 3.0 * g2),
            prefactor: 4.0 * eps2 / e21,
            shift: 8.0 * eps2 / e21,
            sigma: params.f / 2,
        })
    }

    /// `e^{ik/2} cos(k/2)`.
    pub fn kappa(&self, k: f64) -> Complex64 {
        Complex64::from_polar((k / 2.0).cos(), k / 2.0)
    }

    /// `cos(sigma k)`.
    pub fn p(&self, k: f64) -> f64 {
        (self.sigma as f64 * k).cos()
    }
}

/// Coefficients of the `{4,2}` effective matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtCoefficients42 {
    pub d: f64,
    pub gamma: f64,
    /// `-eps^2 / g1`.
    pub prefactor: f64,
    p_modulus: f64,
}

impl PtCoefficients42 {
    pub fn new(params: &ModelParams) -> Result<Self> {
        check_pattern(params, &[4, 2])?;
        let (g1, g2) = (params.gamma1, params.g2());
        let eps2 = params.epsilon * params.epsilon;
        Ok(PtCoefficients42 {
            d: -(2.0 / 3.0) * (5.0 * g1 - 9.0 * g2) / (g1 * (g1 - 3.0 * g2)),
            gamma: (2.0 / 3.0) * (4.0 * g1 * g1 - 27.0 * g2 * g2)
                / ((g1 - 3.0 * g2) * (g1 - 6.0 * g2)),
            prefactor: -eps2 / g1,
            p_modulus: 6.0 * g1 / (g1 - 6.0 * g2),
        })
    }

    /// `6 g1 e^{ik} / (g1 - 6 g2)`.
    pub fn p(&self, k: f64) -> Complex64 {
        Complex64::from_polar(1.0, k) * self.p_modulus
    }
}

/// Coefficients of the `{3,3}` effective matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtCoefficients33 {
    /// `6 eps^2 / (3 g2 - 2 g1)`.
    pub prefactor: f64,
    pub gamma: f64,
}

impl PtCoefficients33 {
    pub fn new(params: &ModelParams) -> Result<Self> {
        check_pattern(params, &[3, 3])?;
        let (g1, g2) = (params.gamma1, params.g2());
        let eps2 = params.epsilon * params.epsilon;
        Ok(PtCoefficients33 {
            prefactor: 6.0 * eps2 / (3.0 * g2 - 2.0 * g1),
            gamma: 4.5 * (2.0 * g2 - g1) / (g1 - 6.0 * g2),
        })
    }
}

/// `O(eps^2)` correction matrix of the `{2,2}` band, dimension `sigma`.
pub fn h22_matrix(params: &ModelParams, k: MomentumIndex) -> Result<HermitianMatrix> {
    let sigma = half_sites(params)?;
    let c = PtCoefficients22::new(params)?;
    let kv = k.k();
    let mut diag = vec![c.shift; sigma];
    diag[0] += c.prefactor * c.gamma;
    if sigma > 1 {
        diag[sigma - 1] += c.prefactor * c.p(kv);
    }
    let off = vec![c.prefactor * c.kappa(kv).conj(); sigma - 1];
    Ok(tridiag_plus_corners(&diag, &off, Complex64::new(0.0, 0.0)))
}

/// `O(eps^2)` correction matrix of the `{4,2}` band, dimension `2 sigma`.
pub fn h42_matrix(params: &ModelParams, k: MomentumIndex) -> Result<HermitianMatrix> {
    let sigma = half_sites(params)?;
    let c = PtCoefficients42::new(params)?;
    let m = 2 * sigma;
    let eps2 = params.epsilon * params.epsilon;
    let mut diag = vec![c.d * eps2; m];
    diag[0] += c.prefactor * c.gamma;
    diag[m - 1] += c.prefactor * c.gamma;
    let off = vec![Complex64::new(c.prefactor, 0.0); m - 1];
    Ok(tridiag_plus_corners(&diag, &off, c.p(k.k()) * c.prefactor))
}

/// `O(eps^2)` correction matrix of the `{3,3}` band, dimension `sigma`.
///
/// Diagonal and independent of `k`.
pub fn h33_matrix(params: &ModelParams, _k: MomentumIndex) -> Result<HermitianMatrix> {
    let sigma = half_sites(params)?;
    let c = PtCoefficients33::new(params)?;
    let mut diag = vec![c.prefactor; sigma];
    diag[0] *= 1.0 + c.gamma;
    Ok(HermitianMatrix::from_real_diagonal(&diag))
}

/// Infinite-chain branches of the `{2,2}` band at one momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticBand22 {
    pub k: f64,
    /// Bound-state energy, present iff `|Gamma| > cos(k/2)`.
    pub line: Option<f64>,
    /// Continuum edges (open interval), `theta -> 0` and `theta -> pi`.
    pub continuum_bounds: (f64, f64),
    /// Whether the bound state exists at every `k`.
    pub exists_all_k: bool,
    zeroth: f64,
    shift: f64,
    cos_half: f64,
}

impl AsymptoticBand22 {
    /// `2 E_2 + 8 eps^2 / (E_2 - 2 E_1) (1 + cos(k/2) cos theta)`.
    pub fn continuum(&self, theta: f64) -> f64 {
        self.zeroth + self.shift * (1.0 + self.cos_half * theta.cos())
    }

    pub fn continuum_min(&self) -> f64 {
        self.continuum_bounds.0.min(self.continuum_bounds.1)
    }

    pub fn continuum_max(&self) -> f64 {
        self.continuum_bounds.0.max(self.continuum_bounds.1)
    }
}

/// Evaluates both `{2,2}` branches of the infinite chain at momentum `k`.
pub fn band22_asymptotic(params: &ModelParams, k: MomentumIndex) -> Result<AsymptoticBand22> {
    if !(params.epsilon > 0.0) {
        return Err(Error::Validation("the asymptotic band needs epsilon > 0".into()));
    }
    let c = PtCoefficients22::new(params)?;
    if c.gamma.abs() < resonance_floor(params) {
        return Err(Error::SingularImpurity);
    }
    let ladder = OnsiteLadder::new(params);
    let zeroth = 2.0 * ladder.energy(2);
    let kv = k.k_centered();
    let cos_half = (kv / 2.0).cos();
    let line = (c.gamma.abs() > cos_half)
        .then(|| zeroth + c.prefactor * (2.0 + c.gamma + cos_half * cos_half / c.gamma));
    let mut band = AsymptoticBand22 {
        k: kv,
        line,
        continuum_bounds: (0.0, 0.0),
        exists_all_k: c.gamma.abs() > 1.0,
        zeroth,
        shift: c.shift,
        cos_half,
    };
    band.continuum_bounds = (band.continuum(0.0), band.continuum(PI));
    Ok(band)
}

/// `{4,2}` continuum energy at angle `theta`; independent of `k`.
pub fn continuum42(params: &ModelParams, theta: f64) -> Result<f64> {
    let (g1, g2) = (params.gamma1, params.g2());
    check_factor(params, "γ1", g1)?;
    check_factor(params, "γ1 − 3γ2", g1 - 3.0 * g2)?;
    let eps2 = params.epsilon * params.epsilon;
    Ok(24.0 * g2 - 14.0 * g1
        + (2.0 * eps2 / g1) * ((5.0 * g1 - 9.0 * g2) / (9.0 * g2 - 3.0 * g1) - theta.cos()))
}

/// Lower and upper edges of the `{4,2}` continuum.
pub fn continuum42_range(params: &ModelParams) -> Result<(f64, f64)> {
    Ok((continuum42(params, 0.0)?, continuum42(params, PI)?))
}

/// Translation classes of a clump pattern, in the order used by the
/// closed-form matrices.
///
/// Two-clump patterns `{m, l}` are ordered by the clockwise distance from
/// the `m`-site to the `l`-site (`1..f` for `m > l`, `1..=f/2` for
/// `m == l`). Other patterns follow the descending order of their
/// representatives.
pub fn pattern_classes(f: usize, pattern: &[u8]) -> Result<Vec<TranslationOrbit>> {
    let n: usize = pattern.iter().map(|&m| m as usize).sum();
    if pattern.is_empty() || pattern.contains(&0) || pattern.len() > f {
        return Err(Error::Validation(format!("pattern {pattern:?} does not fit on {f} sites")));
    }
    let mut sorted = pattern.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    match sorted.as_slice() {
        &[m, l] => {
            let last = if m == l { f / 2 } else { f - 1 };
            (1..=last)
                .map(|d| {
                    let mut occ = vec![0u8; f];
                    occ[0] = m;
                    occ[d] = l;
                    FockState::new(occ).map(|s| s.orbit())
                })
                .collect()
        }
        _ => Ok(OrbitTable::new(f, n)?
            .orbits
            .into_iter()
            .filter(|o| o.rep.pattern() == sorted)
            .collect()),
    }
}

/// Generic second-order Brillouin-Wigner effective matrix on a set of
/// degenerate classes.
///
/// Element `(j, j')` is `<j|V|j'> + sum_q <j|V|q><q|V|j'> / (E_0 - E_q)`,
/// with `V = -eps sum_s (a+_{s+1} a_s + h.c.)`, `q` running over Bloch
/// states outside the class space and `E_q` their `eps = 0` energies.
/// Built only from hop amplitudes; the zeroth-order energy `E_0` is not
/// included.
pub fn bw_second_order_block(
    params: &ModelParams,
    k: MomentumIndex,
    classes: &[TranslationOrbit],
) -> Result<HermitianMatrix> {
    params.validate()?;
    if classes.is_empty() {
        return Err(Error::Validation("no classes given".into()));
    }
    for c in classes {
        if c.rep.sites() != params.f || c.rep.total() != params.n {
            return Err(Error::Validation(format!(
                "class {} is not in the sector f = {}, n = {}",
                c.rep, params.f, params.n
            )));
        }
        if !c.compatible(k) {
            return Err(Error::Validation(format!("class {} has no Bloch state at l = {}", c.rep, k.l)));
        }
    }
    let energies: Vec<f64> = classes.iter().map(|c| diagonal_energy(&c.rep, params)).collect();
    let e0 = energies[0];
    let scale = params.gamma1.max(params.g2()).max(1.0);
    if let Some(bad) = energies.iter().position(|&e| (e - e0).abs() > 1e-12 * scale.max(e0.abs())) {
        return Err(Error::Validation(format!(
            "classes are not degenerate: {} has energy {} but {} has {}",
            classes[0].rep, e0, classes[bad].rep, energies[bad]
        )));
    }

    let eps = params.epsilon;
    let m = classes.len();
    let own: HashMap<&FockState, usize> = classes.iter().enumerate().map(|(i, c)| (&c.rep, i)).collect();
    let columns: Vec<Vec<(FockState, Complex64)>> =
        classes.iter().map(|c| hopping_column(&c.rep, c.period, k)).collect();

    let floor = resonance_floor(params);
    let mut intermediates: Vec<&FockState> = Vec::new();
    let mut seen = HashSet::new();
    for col in &columns {
        for (q, _) in col {
            if !own.contains_key(q) && seen.insert(q) {
                intermediates.push(q);
            }
        }
    }
    let mut denom: HashMap<&FockState, f64> = HashMap::new();
    for q in &intermediates {
        let gap = e0 - diagonal_energy(q, params);
        if gap.abs() < floor {
            return Err(Error::Resonance { denominator: format!("E0 − E{q}"), value: gap, floor });
        }
        denom.insert(q, gap);
    }

    let lookup: Vec<HashMap<&FockState, Complex64>> =
        columns.iter().map(|col| col.iter().map(|(q, v)| (q, *v)).collect()).collect();
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for jp in 0..m {
        for (q, v) in &columns[jp] {
            if let Some(&j) = own.get(q) {
                a[(j, jp)] += -eps * v;
            }
        }
        for j in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in &intermediates {
                if let (Some(vj), Some(vjp)) = (lookup[j].get(*q), lookup[jp].get(*q)) {
                    acc += vj.conj() * vjp / denom[*q];
                }
            }
            a[(j, jp)] += acc * (eps * eps);
        }
    }
    Ok(HermitianMatrix::hermitize(a))
}

/// Which route produced a band prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PtMethod {
    ClosedForm,
    BrillouinWigner,
}

/// Second-order prediction of a band at one momentum.
#[derive(Clone, Debug)]
pub struct BandPrediction {
    pub k: MomentumIndex,
    pub method: PtMethod,
    pub zeroth: f64,
    pub correction: HermitianMatrix,
    /// `zeroth + eig(correction)`, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Predicts a pattern band at momentum `k` on an odd ring, using the closed
/// form when one exists and the Brillouin-Wigner builder otherwise.
pub fn predict_band(params: &ModelParams, pattern: &[u8], k: MomentumIndex) -> Result<BandPrediction> {
    half_sites(params)?;
    let mut sorted = pattern.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let (method, correction) = match sorted.as_slice() {
        [2, 2] => (PtMethod::ClosedForm, h22_matrix(params, k)?),
        [4, 2] => (PtMethod::ClosedForm, h42_matrix(params, k)?),
        [3, 3] => (PtMethod::ClosedForm, h33_matrix(params, k)?),
        _ => {
            let classes: Vec<TranslationOrbit> =
                pattern_classes(params.f, &sorted)?.into_iter().filter(|c| c.compatible(k)).collect();
            (PtMethod::BrillouinWigner, bw_second_order_block(params, k, &classes)?)
        }
    };
    let zeroth = OnsiteLadder::new(params).pattern_energy(&sorted);
    let eigenvalues = eigh(&correction, false)?.eigenvalues.into_iter().map(|e| zeroth + e).collect();
    Ok(BandPrediction { k, method, zeroth, correction, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn classes_at(f: usize, pattern: &[u8], k: MomentumIndex) -> Vec<TranslationOrbit> {
        pattern_classes(f, pattern).unwrap().into_iter().filter(|c| c.compatible(k)).collect()
    }

    fn max_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
        assert_eq!(a.dim(), b.dim());
        (a.as_matrix() - b.as_matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn onsite_examples() {
        assert_eq!(onsite_energy(3, 10.0, 20.0), 60.0);
        assert_eq!(onsite_energy(1, 3.3, 7.1), 0.0);
        assert_eq!(onsite_energy(4, 10.0, 0.0), -120.0);
        assert_eq!(onsite_energy(2, 10.0, 99.0), -20.0);
    }

    #[test]
    fn onsite_matches_diagonal_energy() {
        let p = ModelParams::h2(6, 5, 2.5, 0.7, 0.1);
        for s in 0..=5u8 {
            let mut occ = vec![0u8; 6];
            occ[0] = s;
            occ[1] = 5 - s;
            let state = FockState::from_slice(&occ);
            let e = onsite_energy(s as usize, 2.5, 0.7) + onsite_energy(5 - s as usize, 2.5, 0.7);
            assert!(close(diagonal_energy(&state, &p), e, 1e-12));
        }
    }

    #[test]
    fn gamma22_examples() {
        let c = PtCoefficients22::new(&ModelParams::h1(19, 4, 10.0, 0.5)).unwrap();
        assert!(close(c.gamma, -4.0, 1e-15));
        let c = PtCoefficients22::new(&ModelParams::h2(19, 4, 10.0, 7.5, 0.5)).unwrap();
        assert!(close(c.gamma, 1.4, 1e-14));
        let kappa = c.kappa(1.1);
        assert!(close(kappa.norm(), (0.55f64).cos().abs(), 1e-15));
    }

    #[test]
    fn h22_three_sites_is_scalar() {
        let p = ModelParams::h1(3, 4, 10.0, 0.5);
        let m = h22_matrix(&p, MomentumIndex::new(0, 3)).unwrap();
        assert_eq!(m.dim(), 1);
        let c = PtCoefficients22::new(&p).unwrap();
        assert!(close(m.get(0, 0).re, c.shift + c.prefactor * c.gamma, 1e-15));
        assert!(!validity_warnings(&p, &[2, 2]).is_empty());
    }

    #[test]
    fn resonances_are_named() {
        let p = ModelParams::h2(11, 6, 3.0, 1.0, 0.5);
        match h42_matrix(&p, MomentumIndex::new(0, 11)) {
            Err(Error::Resonance { denominator, .. }) => assert_eq!(denominator, "γ1 − 3γ2"),
            other => panic!("expected resonance, got {other:?}"),
        }
        let p = ModelParams::h2(11, 4, 3.0, 1.0, 0.5);
        assert!(matches!(h22_matrix(&p, MomentumIndex::new(0, 11)), Err(Error::Resonance { .. })));
        let p = ModelParams::h2(11, 6, 6.0, 1.0, 0.5);
        match h42_matrix(&p, MomentumIndex::new(0, 11)) {
            Err(Error::Resonance { denominator, .. }) => assert_eq!(denominator, "γ1 − 6γ2"),
            other => panic!("expected resonance, got {other:?}"),
        }
        let p = ModelParams::h2(11, 6, 3.0, 2.0, 0.5);
        assert!(matches!(h33_matrix(&p, MomentumIndex::new(0, 11)), Err(Error::Resonance { .. })));
    }

    #[test]
    fn p42_pole_is_caught_before_overflow() {
        let g2 = 1.0;
        for gap in [1e-3, 1e-5, 1e-7, 0.0] {
            let p = ModelParams::h2(11, 6, 6.0 * g2 + gap, g2, 0.5);
            let r = h42_matrix(&p, MomentumIndex::new(1, 11));
            if gap >= 1e-5 {
                let m = r.unwrap();
                assert!(m.max_abs().is_finite());
            } else {
                assert!(matches!(r, Err(Error::Resonance { .. })));
            }
        }
    }

    #[test]
    fn coefficients42_example() {
        let c = PtCoefficients42::new(&ModelParams::h1(11, 6, 30.0, 0.5)).unwrap();
        assert!(close(c.d, -1.0 / 9.0, 1e-15));
        assert!(close(c.gamma, 8.0 / 3.0, 1e-14));
        let p = c.p(0.3);
        assert!(close(p.re, 6.0 * 0.3f64.cos(), 1e-14));
        assert!(close(p.im, 6.0 * 0.3f64.sin(), 1e-14));
    }

    #[test]
    fn coefficients33_example() {
        let p = ModelParams::h2(11, 6, 10.0, 20.0, 0.5);
        let c = PtCoefficients33::new(&p).unwrap();
        assert!(close(c.prefactor, 0.0375, 1e-15));
        assert!(close(c.gamma, -27.0 / 22.0, 1e-14));
        let m = h33_matrix(&p, MomentumIndex::new(2, 11)).unwrap();
        assert!(close(m.get(0, 0).re, 0.0375 * (1.0 - 27.0 / 22.0), 1e-15));
        assert!(close(m.get(0, 0).re, -0.008523, 1e-6));
        assert!(close(m.get(3, 3).re, 0.0375, 1e-15));
        assert_eq!(m, h33_matrix(&p, MomentumIndex::new(-4, 11)).unwrap());
        // the impurity changes sign where g1 = 2 g2
        let at = PtCoefficients33::new(&ModelParams::h2(11, 6, 10.0, 5.0, 0.5)).unwrap();
        assert_eq!(at.gamma, 0.0);
    }

    #[test]
    fn asymptotic_fig1() {
        let p = ModelParams::h1(19, 4, 10.0, 0.5);
        let b = band22_asymptotic(&p, MomentumIndex::new(0, 19)).unwrap();
        assert!(close(b.line.unwrap(), -39.8875, 1e-12));
        assert!(close(b.continuum_min(), -40.2, 1e-12));
        assert!(close(b.continuum_max(), -40.0, 1e-12));
        assert!(b.exists_all_k);
    }

    #[test]
    fn asymptotic_fig2() {
        let p = ModelParams::h2(19, 4, 10.0, 7.5, 0.5);
        let b = band22_asymptotic(&p, MomentumIndex::new(0, 19)).unwrap();
        let expected = -40.0 - 0.05 * (2.0 + 1.4 + 1.0 / 1.4);
        assert!(close(b.line.unwrap(), expected, 1e-12));
        assert!(b.line.unwrap() < b.continuum_min());
    }

    #[test]
    fn asymptotic_line_absent_for_weak_impurity() {
        // Gamma = 1/2 at g2 = g1
        let p = ModelParams::h2(19, 4, 6.0, 6.0, 0.5);
        let c = PtCoefficients22::new(&p).unwrap();
        assert!(close(c.gamma, 0.5, 1e-14), "{}", c.gamma);
        let b = band22_asymptotic(&p, MomentumIndex::new(0, 19)).unwrap();
        assert!(b.line.is_none());
        assert!(!b.exists_all_k);
        // near the zone edge cos(k/2) < 1/2 and the bound state returns
        let b = band22_asymptotic(&p, MomentumIndex::new(9, 19)).unwrap();
        assert!(b.line.is_some());
    }

    #[test]
    fn asymptotic_singular_and_zero_eps() {
        // Gamma = 0 at g2 = 4 g1 / 3
        let p = ModelParams::h2(19, 4, 3.0, 4.0, 0.5);
        assert!(matches!(band22_asymptotic(&p, MomentumIndex::new(0, 19)), Err(Error::SingularImpurity)));
        let p = ModelParams::h1(19, 4, 10.0, 0.0);
        assert!(band22_asymptotic(&p, MomentumIndex::new(0, 19)).is_err());
    }

    #[test]
    fn line_is_outside_continuum() {
        for (g1, g2) in [(10.0, 0.0), (10.0, 7.5), (4.0, 2.5), (5.0, 0.5)] {
            let p = ModelParams::h2(19, 4, g1, g2, 0.3);
            for k in MomentumIndex::all(19) {
                let b = band22_asymptotic(&p, k).unwrap();
                if let Some(line) = b.line {
                    assert!(line < b.continuum_min() || line > b.continuum_max());
                }
            }
        }
    }

    #[test]
    fn continuum42_example_and_identities() {
        let p = ModelParams::h1(11, 6, 30.0, 0.5);
        let (lo, hi) = continuum42_range(&p).unwrap();
        assert!(close(lo, -420.0 - 0.05 * (8.0 / 3.0) / 3.0, 1e-12));
        assert!(close(lo, -420.044_444_444_4, 1e-10));
        assert!(close(hi, -420.011_111_111_1, 1e-10));

        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..5 {
            let g1 = 1.0 + 20.0 * next();
            let g2 = 0.05 * g1 + 0.2 * g1 * next();
            let p = ModelParams::h2(11, 6, g1, g2, 0.3);
            let ladder = OnsiteLadder::new(&p);
            let zeroth = ladder.energy(4) + ladder.energy(2);
            assert!(close(continuum42(&p.with_epsilon(0.0), 1.0).unwrap(), zeroth, 1e-10 * g1));
            let c = PtCoefficients42::new(&p).unwrap();
            let mid = continuum42(&p, PI / 2.0).unwrap();
            assert!(close(mid, zeroth + c.d * 0.09, 1e-10 * g1));
        }
    }

    #[test]
    fn pattern_classes_shapes() {
        assert_eq!(pattern_classes(19, &[2, 2]).unwrap().len(), 9);
        assert_eq!(pattern_classes(11, &[4, 2]).unwrap().len(), 10);
        assert_eq!(pattern_classes(11, &[3, 3]).unwrap().len(), 5);
        let c = pattern_classes(8, &[3, 3]).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[3].period, 4);
        assert_eq!(pattern_classes(7, &[2, 1, 1]).unwrap().len(), 15);
        assert_eq!(pattern_classes(7, &[4]).unwrap().len(), 1);
        let c = pattern_classes(11, &[4, 2]).unwrap();
        assert_eq!(c[0].rep, FockState::from_slice(&[4, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!(c[9].rep, FockState::from_slice(&[4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2]));
    }

    #[test]
    fn bw_first_order_vanishes_for_two_doublets() {
        let p = ModelParams::h1(19, 4, 10.0, 0.5);
        let k = MomentumIndex::new(2, 19);
        let classes = classes_at(19, &[2, 2], k);
        let full = bw_second_order_block(&p, k, &classes).unwrap();
        // second order scales as eps^2 exactly, so any first-order part would break the ratio
        let half = bw_second_order_block(&p.with_epsilon(0.25), k, &classes).unwrap();
        let d = (full.as_matrix() - half.as_matrix() * Complex64::new(4.0, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn bw_matches_h22() {
        for (g1, g2) in [(10.0, 0.0), (10.0, 7.5), (6.0, 1.1)] {
            for f in [19usize, 11, 7] {
                let p = ModelParams::h2(f, 4, g1, g2, 0.5);
                for k in MomentumIndex::all(f) {
                    let bw = bw_second_order_block(&p, k, &classes_at(f, &[2, 2], k)).unwrap();
                    let cf = h22_matrix(&p, k).unwrap();
                    let d = max_diff(&bw, &cf);
                    assert!(d < 1e-10, "f={f} l={} g=({g1},{g2}) diff {d}", k.l);
                }
            }
        }
    }

    #[test]
    fn bw_matches_h42() {
        for (g1, g2) in [(30.0, 0.0), (10.0, 1.0), (12.0, 5.0)] {
            let p = ModelParams::h2(11, 6, g1, g2, 0.5);
            for k in MomentumIndex::all(11) {
                let bw = bw_second_order_block(&p, k, &classes_at(11, &[4, 2], k)).unwrap();
                let cf = h42_matrix(&p, k).unwrap();
                let d = max_diff(&bw, &cf);
                assert!(d < 1e-10, "l={} g=({g1},{g2}) diff {d}", k.l);
            }
        }
    }

    #[test]
    fn bw_matches_h33() {
        for (g1, g2) in [(10.0, 20.0), (10.0, 1.0), (7.0, 3.0)] {
            let p = ModelParams::h2(11, 6, g1, g2, 0.5);
            for k in MomentumIndex::all(11) {
                let bw = bw_second_order_block(&p, k, &classes_at(11, &[3, 3], k)).unwrap();
                let cf = h33_matrix(&p, k).unwrap();
                let d = max_diff(&bw, &cf);
                assert!(d < 1e-10, "l={} g=({g1},{g2}) diff {d}", k.l);
            }
        }
    }

    #[test]
    fn bw_single_clump_band() {
        // One 2-clump: E(k) = E_2 + (4 eps^2 / E_2)(1 + cos k).
        let p = ModelParams::h1(9, 2, 10.0, 0.3);
        for k in MomentumIndex::all(9) {
            let m = bw_second_order_block(&p, k, &classes_at(9, &[2], k)).unwrap();
            let expected = 4.0 * 0.09 / -20.0 * (1.0 + k.k().cos());
            assert!(close(m.get(0, 0).re, expected, 1e-14));
        }
    }

    #[test]
    fn bw_rejects_mixed_energies_and_resonance() {
        let p = ModelParams::h1(7, 4, 10.0, 0.5);
        let k = MomentumIndex::new(0, 7);
        let mut classes = classes_at(7, &[2, 2], k);
        classes.extend(classes_at(7, &[3, 1], k));
        assert!(matches!(bw_second_order_block(&p, k, &classes), Err(Error::Validation(_))));
        // {2,2} is degenerate with {3,1} at g1 = 3 g2
        let p = ModelParams::h2(7, 4, 3.0, 1.0, 0.5);
        let classes = classes_at(7, &[2, 2], k);
        assert!(matches!(bw_second_order_block(&p, k, &classes), Err(Error::Resonance { .. })));
    }

    #[test]
    fn pt_outputs_conjugate_under_k_reversal() {
        let p = ModelParams::h2(11, 6, 12.0, 1.0, 0.5);
        for k in MomentumIndex::all(11) {
            let a = h42_matrix(&p, k).unwrap();
            let b = h42_matrix(&p, k.negate()).unwrap();
            assert!(max_diff(&a.conj(), &b) < 1e-14);
            let p4 = ModelParams::h2(11, 4, 12.0, 1.0, 0.5);
            let a = h22_matrix(&p4, k).unwrap();
            let b = h22_matrix(&p4, k.negate()).unwrap();
            assert!(max_diff(&a.conj(), &b) < 1e-14);
        }
    }

    #[test]
    fn finite_h22_converges_to_infinite_chain() {
        let k = |f: usize| MomentumIndex::new((f as i64) / 5, f);
        let mut prev_line = f64::INFINITY;
        let mut prev_fill = f64::INFINITY;
        for sigma in [9usize, 19, 39] {
            let f = 2 * sigma + 1;
            let p = ModelParams::h2(f, 4, 10.0, 7.5, 0.5);
            let kk = k(f);
            let pred = predict_band(&p, &[2, 2], kk).unwrap();
            let asym = band22_asymptotic(&p, kk).unwrap();
            let line = asym.line.unwrap();
            let line_err = (pred.eigenvalues[0] - line).abs();
            // continuum: largest gap between a point of the theta-interval and the nearest eigenvalue
            let cont = &pred.eigenvalues[1..];
            let fill = (0..=200)
                .map(|i| asym.continuum(PI * i as f64 / 200.0))
                .map(|e| cont.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            assert!(cont.iter().all(|&e| e >= asym.continuum_min() - 1e-12 && e <= asym.continuum_max() + 1e-12));
            assert!(line_err <= prev_line, "sigma {sigma}: {line_err} vs {prev_line}");
            assert!(fill < prev_fill, "sigma {sigma}: {fill} vs {prev_fill}");
            prev_line = line_err;
            prev_fill = fill;
        }
        assert!(prev_line < 1e-12);
    }

    #[test]
    fn predict_requires_odd_ring() {
        let p = ModelParams::h1(10, 4, 10.0, 0.5);
        assert!(matches!(predict_band(&p, &[2, 2], MomentumIndex::new(0, 10)), Err(Error::Validation(_))));
    }

    #[test]
    fn predict_falls_back_to_bw() {
        let p = ModelParams::h1(7, 4, 10.0, 0.2);
        let pred = predict_band(&p, &[3, 1], MomentumIndex::new(1, 7)).unwrap();
        assert_eq!(pred.method, PtMethod::BrillouinWigner);
        assert_eq!(pred.eigenvalues.len(), 6);
        assert_eq!(pred.zeroth, -60.0);
    }
}
