use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use breather::cli::{
    cmd_band, cmd_compare, cmd_oracle, cmd_pt, cmd_spectrum, with_threads, write_output, ConfigFile,
    OutputFormat, RunConfig,
};
use breather::hamiltonian::Model;
use breather::{Error, Result};

#[derive(Parser)]
#[command(name = "breather", version, about = "Exact and perturbative quantum breather spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full spectrum of the selected momentum blocks.
    Spectrum(Opts),
    /// One pattern band, with perturbative residuals where available.
    Band(Opts),
    /// Second-order effective matrices and asymptotic band formulas.
    Pt(Opts),
    /// Exact band versus perturbation theory, optionally across eps, eps/2, eps/4.
    Compare(Opts),
    /// Spectrum of the dense full-sector matrix.
    Oracle(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    H1,
    H2,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Opts {
    /// Flat JSON file with keys f, n, gamma1, gamma2, epsilon, model.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    gamma1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Clump pattern, e.g. "2,2".
    #[arg(long)]
    pattern: Option<String>,
    /// "all" or an integer momentum label.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    scaling: bool,
}

impl Opts {
    fn resolve(self) -> Result<RunConfig> {
        let k = match self.k.as_deref() {
            None | Some("all") => None,
            Some(s) => Some(
                s.parse::<i64>()
                    .map_err(|_| Error::Validation(format!("--k expects 'all' or an integer, got {s:?}")))?,
            ),
        };
        let flags = ConfigFile {
            f: self.f,
            n: self.n,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            epsilon: self.eps,
            model: self.model.map(|m| match m {
                ModelArg::H1 => Model::H1,
                ModelArg::H2 => Model::H2,
            }),
            pattern: self.pattern,
            k,
            threshold: self.threshold,
        };
        let base = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let mut cfg = base.merge(flags).into_run_config()?;
        cfg.format = match self.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
        cfg.out = self.out;
        cfg.threads = self.threads;
        cfg.scaling = self.scaling;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (opts, cmd): (Opts, fn(&RunConfig) -> Result<()>) = match cli.command {
        Command::Spectrum(o) => (o, |c| write_output(&cmd_spectrum(c)?, c)),
        Command::Band(o) => (o, |c| {
            let out = cmd_band(c)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            write_output(&out, c)
        }),
        Command::Pt(o) => (o, |c| {
            let out = cmd_pt(c)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            write_output(&out, c)
        }),
        Command::Compare(o) => (o, |c| write_output(&cmd_compare(c)?, c)),
        Command::Oracle(o) => (o, |c| write_output(&cmd_oracle(c)?, c)),
    };
    let cfg = opts.resolve()?;
    with_threads(cfg.threads, || cmd(&cfg))?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
