//! Run configuration, the five driver commands, and their CSV/JSON output.
//!
//! Every command takes a validated [`RunConfig`] and returns a serializable
//! output struct; nothing is computed for an invalid configuration. Output
//! row order is fixed (ascending `l`, then ascending energy) regardless of
//! how many threads computed the blocks.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bands::{
    attach_pt_residuals, classify_momentum, extract_band_lenient, BandReport, BandTag, PatternClass,
    SectorSpectrum, DEFAULT_THRESHOLD,
};
use crate::eigen::eigh;
use crate::error::{Error, Result};
use crate::fock::MomentumIndex;
use crate::hamiltonian::{full_matrix, Model, ModelParams};
use crate::perturbation::{
    band22_asymptotic, continuum42_range, predict_band, validity_warnings, PtMethod,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Everything one command needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Clump pattern such as `"2,2"`; required by `band`, `pt` and `compare`.
    #[serde(default)]
    pub pattern: Option<String>,
    /// Single momentum label `l`, or every momentum when absent.
    #[serde(default)]
    pub k: Option<i64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Adds the eps, eps/2, eps/4 residual table to `compare`.
    #[serde(default)]
    pub scaling: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl RunConfig {
    pub fn new(params: ModelParams) -> Self {
        RunConfig {
            params,
            pattern: None,
            k: None,
            threshold: DEFAULT_THRESHOLD,
            format: OutputFormat::Csv,
            out: None,
            threads: None,
            scaling: false,
        }
    }

    pub fn with_pattern(mut self, pattern: &str) -> Self {
        self.pattern = Some(pattern.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Validation(format!("threshold must lie in (0, 1], got {}", self.threshold)));
        }
        if self.threads == Some(0) {
            return Err(Error::Validation("threads must be positive".into()));
        }
        if let Some(p) = self.pattern()? {
            p.check_sector(self.params.n)?;
            if p.counts().len() > self.params.f {
                return Err(Error::Validation(format!("pattern {p} needs more than f = {} sites", self.params.f)));
            }
        }
        Ok(())
    }

    pub fn pattern(&self) -> Result<Option<PatternClass>> {
        self.pattern.as_deref().map(str::parse).transpose()
    }

    fn require_pattern(&self) -> Result<PatternClass> {
        self.pattern()?
            .ok_or_else(|| Error::Validation("this command needs --pattern".into()))
    }

    /// Selected momenta in ascending `l`.
    pub fn momenta(&self) -> Vec<MomentumIndex> {
        match self.k {
            Some(l) => vec![MomentumIndex::new(l, self.params.f)],
            None => MomentumIndex::all(self.params.f),
        }
    }
}

/// Flat JSON parameter file; every key is optional so flags can fill gaps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub f: Option<usize>,
    pub n: Option<usize>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub epsilon: Option<f64>,
    pub model: Option<Model>,
    pub pattern: Option<String>,
    pub k: Option<i64>,
    pub threshold: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Values from `overrides` win over `self`.
    pub fn merge(self, overrides: ConfigFile) -> ConfigFile {
        ConfigFile {
            f: overrides.f.or(self.f),
            n: overrides.n.or(self.n),
            gamma1: overrides.gamma1.or(self.gamma1),
            gamma2: overrides.gamma2.or(self.gamma2),
            epsilon: overrides.epsilon.or(self.epsilon),
            model: overrides.model.or(self.model),
            pattern: overrides.pattern.or(self.pattern),
            k: overrides.k.or(self.k),
            threshold: overrides.threshold.or(self.threshold),
        }
    }

    pub fn into_run_config(self) -> Result<RunConfig> {
        let missing = |name: &str| Error::Validation(format!("missing parameter {name}"));
        let model = self.model.unwrap_or_default();
        let params = ModelParams {
            f: self.f.ok_or_else(|| missing("f"))?,
            n: self.n.ok_or_else(|| missing("n"))?,
            gamma1: self.gamma1.ok_or_else(|| missing("gamma1"))?,
            gamma2: self.gamma2.unwrap_or(0.0),
            epsilon: self.epsilon.ok_or_else(|| missing("epsilon"))?,
            model,
        };
        let mut cfg = RunConfig::new(params);
        cfg.pattern = self.pattern;
        cfg.k = self.k;
        cfg.threshold = self.threshold.unwrap_or(DEFAULT_THRESHOLD);
        Ok(cfg)
    }
}

/// One `(k, eigenvalue)` row of a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub l: i64,
    pub k: f64,
    pub index: usize,
    pub energy: f64,
    /// Pattern label of the dominant clump configuration, or `unclassified`.
    pub band: String,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumOutput {
    pub config: RunConfig,
    pub rows: Vec<SpectrumRow>,
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<SpectrumOutput> {
    config.validate()?;
    let spec = SectorSpectrum::compute(&config.params, &config.momenta(), true)?;
    let mut rows = Vec::new();
    for (b, (block, s)) in spec.blocks.iter().enumerate() {
        for (i, &energy) in s.eigenvalues.iter().enumerate() {
            let v = spec.vector(b, i).expect("vectors requested");
            let c = classify_momentum(&v, &block.basis, config.threshold)?;
            let band = if c.classified { c.best.label() } else { "unclassified".to_string() };
            rows.push(SpectrumRow { l: block.k.l, k: block.k.k(), index: i, energy, band, weight: c.weight });
        }
    }
    Ok(SpectrumOutput { config: config.clone(), rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct BandRow {
    pub l: i64,
    pub k: f64,
    pub index: usize,
    pub energy: f64,
    pub tag: BandTag,
    pub weight: f64,
    pub pt: Option<f64>,
    pub diff: Option<f64>,
    pub global_ground_state: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandOutput {
    pub config: RunConfig,
    pub ground_energy: f64,
    pub report: BandReport,
    pub rows: Vec<BandRow>,
    pub warnings: Vec<String>,
}

/// Absolute tolerance for flagging the global ground state.
const GROUND_TOL: f64 = 1e-10;

pub fn cmd_band(config: &RunConfig) -> Result<BandOutput> {
    config.validate()?;
    let pattern = config.require_pattern()?;
    let params = config.params;
    // the ground-state flag needs every momentum, not only the selected one
    let spec = SectorSpectrum::all_k(&params, true)?;
    let ground = spec.ground_energy();
    let mut report = extract_band_lenient(&spec, &pattern, config.threshold)?;
    if let Some(l) = config.k {
        let l = MomentumIndex::new(l, params.f).l;
        report.states.retain(|s| s.l == l);
        report.counts.retain(|c| c.0 == l);
    }
    let mut warnings = report.warnings.clone();
    if params.f % 2 == 1 && params.epsilon > 0.0 {
        match attach_pt_residuals(&mut report, &params, &pattern) {
            Ok(()) => warnings.extend(validity_warnings(&params, pattern.counts())),
            Err(e) => warnings.push(format!("perturbative prediction unavailable: {e}")),
        }
    } else {
        warnings.push("perturbative prediction needs odd f and epsilon > 0".into());
    }

    let mut rows = Vec::new();
    for l in report.momenta() {
        let mut states: Vec<_> = report.at(l).collect();
        states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let predicted = report.pt_residuals.iter().find(|r| r.l == l).map(|r| &r.predicted);
        for (j, s) in states.into_iter().enumerate() {
            let pt = predicted.map(|p| p[j]);
            rows.push(BandRow {
                l,
                k: s.k,
                index: s.index,
                energy: s.energy,
                tag: s.tag,
                weight: s.weight,
                pt,
                diff: pt.map(|p| (s.energy - p).abs()),
                global_ground_state: (s.energy - ground).abs() <= GROUND_TOL * ground.abs().max(1.0),
            });
        }
    }
    Ok(BandOutput { config: config.clone(), ground_energy: ground, report, rows, warnings })
}

#[derive(Clone, Debug, Serialize)]
pub struct PtBlock {
    pub l: i64,
    pub k: f64,
    pub method: PtMethod,
    pub zeroth: f64,
    /// Row-major `[re, im]` entries of the correction matrix.
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub eigenvalues: Vec<f64>,
    /// `{2,2}` only: infinite-chain bound state (if present).
    pub asymptotic_line: Option<f64>,
    /// Infinite-chain continuum edges (`{2,2}` per k, `{4,2}` k-independent).
    pub asymptotic_continuum: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PtOutput {
    pub config: RunConfig,
    pub blocks: Vec<PtBlock>,
    pub warnings: Vec<String>,
}

pub fn cmd_pt(config: &RunConfig) -> Result<PtOutput> {
    config.validate()?;
    let pattern = config.require_pattern()?;
    let params = config.params;
    let counts = pattern.counts();
    let blocks = config
        .momenta()
        .into_iter()
        .map(|k| {
            let pred = predict_band(&params, counts, k)?;
            let (line, cont) = match counts {
                [2, 2] if params.epsilon > 0.0 => {
                    let a = band22_asymptotic(&params, k)?;
                    (a.line, Some((a.continuum_min(), a.continuum_max())))
                }
                [4, 2] => (None, Some(continuum42_range(&params)?)),
                _ => (None, None),
            };
            let m = pred.correction.as_matrix();
            let matrix = (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect();
            Ok(PtBlock {
                l: k.l,
                k: k.k(),
                method: pred.method,
                zeroth: pred.zeroth,
                matrix,
                eigenvalues: pred.eigenvalues,
                asymptotic_line: line,
                asymptotic_continuum: cont,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PtOutput { config: config.clone(), blocks, warnings: validity_warnings(&params, counts) })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub l: i64,
    pub k: f64,
    pub states: usize,
    pub max: f64,
    pub mean: f64,
    /// `{2,2}`: |exact line - infinite-chain line formula|.
    pub line_vs_asymptotic: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub max_residual: f64,
    /// Ratio to the previous (larger-epsilon) row.
    pub decay_factor: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareOutput {
    pub config: RunConfig,
    pub rows: Vec<CompareRow>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub scaling: Option<Vec<ScalingRow>>,
    pub warnings: Vec<String>,
}

struct Comparison {
    rows: Vec<CompareRow>,
    warnings: Vec<String>,
}

fn compare_once(params: &ModelParams, pattern: &PatternClass, ks: &[MomentumIndex], threshold: f64) -> Result<Comparison> {
    let spec = SectorSpectrum::compute(params, ks, true)?;
    let mut report = extract_band_lenient(&spec, pattern, threshold)?;
    attach_pt_residuals(&mut report, params, pattern)?;
    let mut warnings = report.warnings.clone();
    warnings.extend(validity_warnings(params, pattern.counts()));
    let mut rows = Vec::new();
    for r in &report.pt_residuals {
        let k = MomentumIndex::new(r.l, params.f);
        let line_vs_asymptotic = if pattern.counts() == [2, 2] {
            let asym = band22_asymptotic(params, k)?;
            let lines: Vec<f64> = report.at(r.l).filter(|s| s.tag == BandTag::Line).map(|s| s.energy).collect();
            match (asym.line, lines.as_slice()) {
                (Some(a), [e]) => Some((e - a).abs()),
                _ => None,
            }
        } else {
            None
        };
        rows.push(CompareRow {
            l: r.l,
            k: k.k(),
            states: r.predicted.len(),
            max: r.max,
            mean: r.mean,
            line_vs_asymptotic,
        });
    }
    if rows.is_empty() {
        return Err(Error::BandOverlap {
            pattern: pattern.to_string(),
            l: ks.first().map_or(0, |k| k.l),
            found: 0,
            expected: 1,
        });
    }
    Ok(Comparison { rows, warnings })
}

pub fn cmd_compare(config: &RunConfig) -> Result<CompareOutput> {
    config.validate()?;
    let pattern = config.require_pattern()?;
    let params = config.params;
    if params.f % 2 == 0 {
        return Err(Error::Validation(format!(
            "perturbative comparison needs an odd site count; f = {} is even",
            params.f
        )));
    }
    if !(params.epsilon > 0.0) {
        return Err(Error::Validation("comparison needs epsilon > 0".into()));
    }
    let ks = config.momenta();
    let base = compare_once(&params, &pattern, &ks, config.threshold)?;
    let max_residual = base.rows.iter().map(|r| r.max).fold(0.0, f64::max);
    let mean_residual = base.rows.iter().map(|r| r.mean).sum::<f64>() / base.rows.len() as f64;
    let scaling = if config.scaling {
        let mut table: Vec<ScalingRow> = Vec::new();
        for (i, scale) in [1.0, 0.5, 0.25].into_iter().enumerate() {
            let eps = params.epsilon * scale;
            let max = if i == 0 {
                max_residual
            } else {
                let c = compare_once(&params.with_epsilon(eps), &pattern, &ks, config.threshold)?;
                c.rows.iter().map(|r| r.max).fold(0.0, f64::max)
            };
            let decay_factor = table.last().map(|prev| prev.max_residual / max);
            table.push(ScalingRow { epsilon: eps, max_residual: max, decay_factor });
        }
        Some(table)
    } else {
        None
    };
    Ok(CompareOutput {
        config: config.clone(),
        rows: base.rows,
        max_residual,
        mean_residual,
        scaling,
        warnings: base.warnings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleOutput {
    pub config: RunConfig,
    pub eigenvalues: Vec<f64>,
}

pub fn cmd_oracle(config: &RunConfig) -> Result<OracleOutput> {
    config.validate()?;
    let h = full_matrix(&config.params)?;
    let eigenvalues = eigh(&h, false)?.eigenvalues;
    Ok(OracleOutput { config: config.clone(), eigenvalues })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn header_comment<W: Write>(w: &mut W, command: &str, config: &RunConfig, warnings: &[String]) -> Result<()> {
    writeln!(w, "# breather {command} params={}", serde_json::to_string(&config.params)?)?;
    if let Some(p) = &config.pattern {
        writeln!(w, "# pattern={p}")?;
    }
    for warning in warnings {
        writeln!(w, "# warning: {warning}")?;
    }
    Ok(())
}

/// Output of any command, ready to be written as CSV or JSON.
pub trait Emit: Serialize {
    fn write_csv<W: Write>(&self, w: W) -> Result<()>;

    fn emit<W: Write>(&self, format: OutputFormat, mut w: W) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut w, self)?;
                writeln!(w)?;
                Ok(())
            }
        }
    }
}

impl Emit for SpectrumOutput {
    fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        header_comment(&mut w, "spectrum", &self.config, &[])?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["l", "k", "index", "energy", "band", "weight"])?;
        for r in &self.rows {
            csv.write_record([r.l.to_string(), num(r.k), r.index.to_string(), num(r.energy), r.band.clone(), num(r.weight)])?;
        }
        csv.flush()?;
        Ok(())
    }
}

impl Emit for BandOutput {
    fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        header_comment(&mut w, "band", &self.config, &self.warnings)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["l", "k", "index", "energy", "band", "weight", "pt", "diff", "global_ground_state"])?;
        for r in &self.rows {
            csv.write_record([
                r.l.to_string(),
                num(r.k),
                r.index.to_string(),
                num(r.energy),
                r.tag.to_string(),
                num(r.weight),
                opt(r.pt),
                opt(r.diff),
                r.global_ground_state.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

impl Emit for PtOutput {
    fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        header_comment(&mut w, "pt", &self.config, &self.warnings)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["l", "k", "index", "energy", "method", "asymptotic_line", "continuum_lo", "continuum_hi"])?;
        for b in &self.blocks {
            let method = match b.method {
                PtMethod::ClosedForm => "closed_form",
                PtMethod::BrillouinWigner => "brillouin_wigner",
            };
            for (i, &e) in b.eigenvalues.iter().enumerate() {
                csv.write_record([
                    b.l.to_string(),
                    num(b.k),
                    i.to_string(),
                    num(e),
                    method.to_string(),
                    opt(b.asymptotic_line),
                    opt(b.asymptotic_continuum.map(|c| c.0)),
                    opt(b.asymptotic_continuum.map(|c| c.1)),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    }
}

impl Emit for CompareOutput {
    fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        header_comment(&mut w, "compare", &self.config, &self.warnings)?;
        writeln!(w, "# max_residual={} mean_residual={}", num(self.max_residual), num(self.mean_residual))?;
        if let Some(table) = &self.scaling {
            for s in table {
                writeln!(
                    w,
                    "# scaling epsilon={} max_residual={} decay_factor={}",
                    num(s.epsilon),
                    num(s.max_residual),
                    opt(s.decay_factor)
                )?;
            }
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["l", "k", "states", "max", "mean", "line_vs_asymptotic"])?;
        for r in &self.rows {
            csv.write_record([
                r.l.to_string(),
                num(r.k),
                r.states.to_string(),
                num(r.max),
                num(r.mean),
                opt(r.line_vs_asymptotic),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

impl Emit for OracleOutput {
    fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        header_comment(&mut w, "oracle", &self.config, &[])?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["index", "energy"])?;
        for (i, &e) in self.eigenvalues.iter().enumerate() {
            csv.write_record([i.to_string(), num(e)])?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Writes `output` to `config.out`, or to stdout when no path is set.
///
/// The file is only created once the whole output is rendered.
pub fn write_output<T: Emit>(output: &T, config: &RunConfig) -> Result<()> {
    let mut buf = Vec::new();
    output.emit(config.format, &mut buf)?;
    match &config.out {
        Some(path) => std::fs::write(path, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

/// Runs `f` on a dedicated pool when a thread count is configured.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}
