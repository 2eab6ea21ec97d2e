//! Band extraction from exact momentum-resolved spectra.
//!
//! Each eigenvector is assigned the clump pattern (multiset of non-zero
//! occupations) carrying most of its weight. Within a two-clump band, a
//! state whose dominant class has the clumps on neighbouring sites is
//! tagged `line`; the rest form the `continuum`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigh, Spectrum};
use crate::error::{Error, Result};
use crate::fock::{FockState, MomentumBasis, MomentumIndex};
use crate::hamiltonian::{ModelParams, MomentumBlock, Sector};
use crate::perturbation::predict_band;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Relative spread below which all states of a band count as degenerate.
const DEGENERATE_SPREAD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Adjacent,
    Separated,
}

/// A clump pattern such as `{2,2}`, stored in decreasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternClass(Vec<u8>);

impl PatternClass {
    pub fn new(mut counts: Vec<u8>) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(Error::Validation(format!("pattern {counts:?} needs positive counts")));
        }
        counts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(PatternClass(counts))
    }

    pub fn of(state: &FockState) -> Self {
        PatternClass(state.pattern())
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn is_two_clump(&self) -> bool {
        self.0.len() == 2
    }

    /// Label without commas, e.g. `2-2`, safe inside CSV cells.
    pub fn label(&self) -> String {
        self.0.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-")
    }

    pub fn check_sector(&self, n: usize) -> Result<()> {
        if self.total() != n {
            return Err(Error::Validation(format!(
                "pattern {self} holds {} bosons but the sector has n = {n}",
                self.total()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", inner.join(","))
    }
}

impl FromStr for PatternClass {
    type Err = Error;

    /// Accepts `2,2`, `{2,2}`, `2-2` or `2 2`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('{').trim_end_matches('}');
        let counts = trimmed
            .split(|c: char| c == ',' || c == '-' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u8>()
                    .map_err(|_| Error::Validation(format!("bad pattern entry {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        PatternClass::new(counts)
    }
}

fn adjacency_of(state: &FockState) -> Option<Adjacency> {
    state
        .clump_separation()
        .map(|d| if d == 1 { Adjacency::Adjacent } else { Adjacency::Separated })
}

/// Outcome of assigning a pattern to one eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    /// Pattern with the largest weight.
    pub best: PatternClass,
    /// Squared-amplitude weight on `best`.
    pub weight: f64,
    /// `false` when `weight` is below threshold or tied with another pattern.
    pub classified: bool,
    /// Clump adjacency of the single largest basis component within `best`.
    pub adjacency: Option<Adjacency>,
}

/// Classifies a vector given `(basis state, |amplitude|^2)` pairs.
///
/// The winning pattern must reach `threshold` and beat every other pattern
/// strictly; otherwise the vector is reported as unclassified.
pub fn classify_weights<'a, I>(components: I, threshold: f64) -> Result<Classification>
where
    I: IntoIterator<Item = (&'a FockState, f64)>,
{
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Validation(format!("threshold must lie in (0, 1], got {threshold}")));
    }
    let mut totals: BTreeMap<PatternClass, f64> = BTreeMap::new();
    let mut dominant: BTreeMap<PatternClass, (f64, &FockState)> = BTreeMap::new();
    for (state, w) in components {
        let pat = PatternClass::of(state);
        *totals.entry(pat.clone()).or_insert(0.0) += w;
        let slot = dominant.entry(pat).or_insert((f64::NEG_INFINITY, state));
        if w > slot.0 {
            *slot = (w, state);
        }
    }
    let mut ranked: Vec<(&PatternClass, f64)> = totals.iter().map(|(p, &w)| (p, w)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let (best, weight) = ranked
        .first()
        .map(|(p, w)| ((*p).clone(), *w))
        .ok_or_else(|| Error::Validation("empty vector".into()))?;
    let runner_up = ranked.get(1).map_or(0.0, |r| r.1);
    let adjacency = dominant.get(&best).and_then(|(_, s)| adjacency_of(s));
    Ok(Classification {
        classified: weight >= threshold && weight > runner_up,
        best,
        weight,
        adjacency,
    })
}

/// Classifies an eigenvector expressed in the Bloch basis of a momentum block.
pub fn classify_momentum(vector: &[Complex64], basis: &MomentumBasis, threshold: f64) -> Result<Classification> {
    if vector.len() != basis.dim() {
        return Err(Error::Validation(format!(
            "vector has {} entries, basis has {}",
            vector.len(),
            basis.dim()
        )));
    }
    classify_weights(basis.orbits.iter().map(|o| &o.rep).zip(vector.iter().map(|z| z.norm_sqr())), threshold)
}

/// Classifies a vector over the plain occupation basis.
pub fn classify_fock(vector: &[Complex64], states: &[FockState], threshold: f64) -> Result<Classification> {
    if vector.len() != states.len() {
        return Err(Error::Validation(format!(
            "vector has {} entries, basis has {}",
            vector.len(),
            states.len()
        )));
    }
    classify_weights(states.iter().zip(vector.iter().map(|z| z.norm_sqr())), threshold)
}

/// Weight of a normalized Bloch-basis vector on one pattern.
pub fn pattern_weight(vector: &[Complex64], basis: &MomentumBasis, pattern: &PatternClass) -> f64 {
    basis
        .orbits
        .iter()
        .zip(vector)
        .filter(|(o, _)| o.rep.pattern() == pattern.counts())
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Exact eigendecomposition of every requested momentum block.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub params: ModelParams,
    pub blocks: Vec<(MomentumBlock, Spectrum)>,
}

impl SectorSpectrum {
    /// Diagonalizes the blocks for `ks` in parallel; order follows `ks`.
    pub fn compute(params: &ModelParams, ks: &[MomentumIndex], want_vectors: bool) -> Result<Self> {
        let sector = Sector::new(*params)?;
        let blocks = ks
            .par_iter()
            .map(|&k| {
                let block = sector.block(k)?;
                let spectrum = eigh(&block.matrix, want_vectors)?;
                Ok((block, spectrum))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SectorSpectrum { params: *params, blocks })
    }

    pub fn all_k(params: &ModelParams, want_vectors: bool) -> Result<Self> {
        Self::compute(params, &MomentumIndex::all(params.f), want_vectors)
    }

    pub fn ground_energy(&self) -> f64 {
        self.blocks
            .iter()
            .filter_map(|(_, s)| s.eigenvalues.first().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigenvector `i` of block `b`, if vectors were computed.
    pub fn vector(&self, b: usize, i: usize) -> Option<Vec<Complex64>> {
        self.blocks[b].1.vector(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandTag {
    Line,
    Continuum,
    Merged,
}

impl fmt::Display for BandTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandTag::Line => "line",
            BandTag::Continuum => "continuum",
            BandTag::Merged => "merged",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandState {
    pub l: i64,
    pub k: f64,
    /// Position of the eigenvalue within its block (ascending).
    pub index: usize,
    pub energy: f64,
    pub weight: f64,
    pub tag: BandTag,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PtResidual {
    pub l: i64,
    pub max: f64,
    pub mean: f64,
    /// Prediction for each band state, aligned with the ascending exact energies.
    pub predicted: Vec<f64>,
}

/// One pattern band across all computed momenta.
#[derive(Clone, Debug, Serialize)]
pub struct BandReport {
    pub pattern: String,
    pub states: Vec<BandState>,
    /// `(l, found, expected)` per momentum.
    pub counts: Vec<(i64, usize, usize)>,
    pub pt_residuals: Vec<PtResidual>,
    pub warnings: Vec<String>,
}

impl BandReport {
    pub fn at(&self, l: i64) -> impl Iterator<Item = &BandState> {
        self.states.iter().filter(move |s| s.l == l)
    }

    pub fn momenta(&self) -> Vec<i64> {
        self.counts.iter().map(|c| c.0).collect()
    }

    pub fn with_tag(&self, tag: BandTag) -> impl Iterator<Item = &BandState> {
        self.states.iter().filter(move |s| s.tag == tag)
    }

    /// `(k, E)` of the single line state at each momentum.
    pub fn line_dispersion(&self) -> Result<Vec<(f64, f64)>> {
        self.momenta()
            .into_iter()
            .map(|l| {
                let lines: Vec<&BandState> = self.at(l).filter(|s| s.tag == BandTag::Line).collect();
                match lines.as_slice() {
                    [one] => Ok((one.k, one.energy)),
                    _ => Err(Error::Validation(format!(
                        "expected one line state at l = {l}, found {}",
                        lines.len()
                    ))),
                }
            })
            .collect()
    }

    pub fn max_pt_residual(&self) -> Option<f64> {
        self.pt_residuals.iter().map(|r| r.max).reduce(f64::max)
    }
}

/// Number of Bloch classes of `pattern` at momentum `k`.
fn expected_count(basis: &MomentumBasis, pattern: &PatternClass) -> usize {
    basis.orbits.iter().filter(|o| o.rep.pattern() == pattern.counts()).count()
}

/// Selects the states of `pattern` at every momentum of `spectrum`.
///
/// Fails with [`Error::BandOverlap`] when a momentum has fewer pattern
/// states than the band must hold; use [`extract_band_lenient`] to record
/// the shortfall as a warning instead.
pub fn extract_band(spectrum: &SectorSpectrum, pattern: &PatternClass, threshold: f64) -> Result<BandReport> {
    extract(spectrum, pattern, threshold, true)
}

pub fn extract_band_lenient(spectrum: &SectorSpectrum, pattern: &PatternClass, threshold: f64) -> Result<BandReport> {
    extract(spectrum, pattern, threshold, false)
}

fn extract(spectrum: &SectorSpectrum, pattern: &PatternClass, threshold: f64, strict: bool) -> Result<BandReport> {
    pattern.check_sector(spectrum.params.n)?;
    let mut states = Vec::new();
    let mut counts = Vec::new();
    let mut warnings = Vec::new();
    for (block, spec) in &spectrum.blocks {
        let vectors: &DMatrix<Complex64> = spec
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::Validation("band extraction needs eigenvectors".into()))?;
        let k = block.k;
        let expected = expected_count(&block.basis, pattern);
        let mut picked = Vec::new();
        for (i, &energy) in spec.eigenvalues.iter().enumerate() {
            let v: Vec<Complex64> = vectors.column(i).iter().copied().collect();
            let c = classify_momentum(&v, &block.basis, threshold)?;
            if c.best != *pattern {
                continue;
            }
            let tag = if !c.classified {
                BandTag::Merged
            } else if !pattern.is_two_clump() {
                if pattern.counts().len() == 1 { BandTag::Line } else { BandTag::Continuum }
            } else if c.adjacency == Some(Adjacency::Adjacent) {
                BandTag::Line
            } else {
                BandTag::Continuum
            };
            picked.push(BandState { l: k.l, k: k.k(), index: i, energy, weight: c.weight, tag });
        }
        if picked.len() > 1 {
            let lo = picked.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
            let hi = picked.iter().map(|s| s.energy).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= DEGENERATE_SPREAD * lo.abs().max(1.0) {
                picked.iter_mut().for_each(|s| s.tag = BandTag::Merged);
            }
        }
        let found = picked.len();
        if found < expected {
            let err = Error::BandOverlap { pattern: pattern.to_string(), l: k.l, found, expected };
            if strict {
                return Err(err);
            }
            warnings.push(err.to_string());
        }
        counts.push((k.l, found, expected));
        states.extend(picked);
    }
    Ok(BandReport { pattern: pattern.to_string(), states, counts, pt_residuals: Vec::new(), warnings })
}

/// Compares each momentum of `report` with the second-order prediction.
///
/// Exact and predicted energies are matched in ascending order; a momentum
/// whose state count differs from the prediction is skipped with a warning.
pub fn attach_pt_residuals(report: &mut BandReport, params: &ModelParams, pattern: &PatternClass) -> Result<()> {
    let mut residuals = Vec::new();
    for l in report.momenta() {
        let k = MomentumIndex::new(l, params.f);
        let pred = predict_band(params, pattern.counts(), k)?;
        let mut exact: Vec<f64> = report.at(l).map(|s| s.energy).collect();
        exact.sort_by(f64::total_cmp);
        if exact.len() != pred.eigenvalues.len() {
            report.warnings.push(format!(
                "l = {l}: {} exact states vs {} predicted; residual skipped",
                exact.len(),
                pred.eigenvalues.len()
            ));
            continue;
        }
        let diffs: Vec<f64> = exact.iter().zip(&pred.eigenvalues).map(|(a, b)| (a - b).abs()).collect();
        let max = diffs.iter().copied().fold(0.0, f64::max);
        let mean = diffs.iter().sum::<f64>() / diffs.len().max(1) as f64;
        residuals.push(PtResidual { l, max, mean, predicted: pred.eigenvalues });
    }
    report.pt_residuals = residuals;
    Ok(())
}

/// Curvature fit of a dispersion at `k = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassFit {
    /// From the three-point second difference.
    pub finite_difference: f64,
    /// From the quartic through the five central points.
    pub quartic: f64,
}

impl MassFit {
    pub fn mass(&self) -> f64 {
        self.quartic
    }
}

/// Relative agreement required between the two curvature estimates.
pub const MASS_FIT_AGREEMENT: f64 = 0.02;

/// Effective mass `1 / E''(0)` from dispersion samples `(k, E)`.
///
/// Needs the five grid points `0, ±h, ±2h` with `2h <= 0.3 pi`. Fails when
/// the odd part of the dispersion dominates, or when the two curvature
/// estimates differ by more than [`MASS_FIT_AGREEMENT`].
pub fn effective_mass(samples: &[(f64, f64)]) -> Result<MassFit> {
    use std::f64::consts::PI;
    let fold = |k: f64| {
        let mut k = k.rem_euclid(2.0 * PI);
        if k > PI {
            k -= 2.0 * PI;
        }
        k
    };
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|&(k, e)| (fold(k), e)).collect();
    pts.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
    if pts.len() < 5 {
        return Err(Error::Validation(format!("need 5 samples around k = 0, got {}", pts.len())));
    }
    let center = &pts[..5];
    if center[0].0.abs() > 1e-12 {
        return Err(Error::Validation("dispersion samples do not include k = 0".into()));
    }
    let h = center[2].0.abs();
    let find = |target: f64| {
        center
            .iter()
            .find(|(k, _)| (k - target).abs() < 1e-9 * h.max(1.0))
            .map(|&(_, e)| e)
            .ok_or_else(|| Error::Validation(format!("no sample at k = {target}")))
    };
    let (em2, em1, e0, ep1, ep2) = (find(-2.0 * h)?, find(-h)?, find(0.0)?, find(h)?, find(2.0 * h)?);
    if 2.0 * h > 0.3 * PI + 1e-12 {
        return Err(Error::Validation(format!(
            "grid spacing {h} too coarse: 5 central points must lie within |k| <= 0.3 pi"
        )));
    }
    let second_fd = (ep1 - 2.0 * e0 + em1) / (h * h);
    let second_q = (-ep2 + 16.0 * ep1 - 30.0 * e0 + 16.0 * em1 - em2) / (12.0 * h * h);
    let first = (em2 - 8.0 * em1 + 8.0 * ep1 - ep2) / (12.0 * h);
    if first.abs() * h > 0.5 * second_q.abs() * h * h {
        return Err(Error::Numerical(format!(
            "dispersion is not extremal at k = 0 (E' = {first:e}, E'' = {second_q:e})"
        )));
    }
    let fit = MassFit { finite_difference: 1.0 / second_fd, quartic: 1.0 / second_q };
    if ((fit.finite_difference - fit.quartic) / fit.quartic).abs() > MASS_FIT_AGREEMENT {
        return Err(Error::Numerical(format!(
            "curvature estimates disagree: {} (3-point) vs {} (5-point)",
            fit.finite_difference, fit.quartic
        )));
    }
    Ok(fit)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveMassReport {
    /// Single 2-clump band (`n = 2`).
    pub m2_star: f64,
    /// Line band of `{2,2}` (`n = 4`).
    pub m22_star: f64,
    /// `m22_star / (2 m2_star)`.
    pub ratio: f64,
    /// Impurity strength of the `{2,2}` effective matrix.
    pub gamma_prediction: f64,
}

/// Fits `m2*` and `m22*` from exact spectra on an `f`-site ring.
pub fn effective_mass_report(gamma1: f64, gamma2: f64, epsilon: f64, f: usize) -> Result<EffectiveMassReport> {
    if f < 17 {
        return Err(Error::Validation(format!("mass fits need f >= 17, got {f}")));
    }
    let ks: Vec<MomentumIndex> = (-2..=2).map(|l| MomentumIndex::new(l, f)).collect();

    let single = ModelParams::h2(f, 2, gamma1, gamma2, epsilon);
    let spec = SectorSpectrum::compute(&single, &ks, true)?;
    let band = extract_band(&spec, &PatternClass::new(vec![2])?, DEFAULT_THRESHOLD)?;
    let m2 = effective_mass(&band.line_dispersion()?)?.mass();

    let pair = ModelParams::h2(f, 4, gamma1, gamma2, epsilon);
    let spec = SectorSpectrum::compute(&pair, &ks, true)?;
    let band = extract_band(&spec, &PatternClass::new(vec![2, 2])?, DEFAULT_THRESHOLD)?;
    let m22 = effective_mass(&band.line_dispersion()?)?.mass();

    let gamma = crate::perturbation::PtCoefficients22::new(&pair)?.gamma;
    Ok(EffectiveMassReport { m2_star: m2, m22_star: m22, ratio: m22 / (2.0 * m2), gamma_prediction: gamma })
}
