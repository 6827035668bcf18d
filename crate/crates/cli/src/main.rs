use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homlab::experiments::{exit_code, run, CorrectorCase, Experiment, PartialConfig};

/// Numerical experiments for relaxed Dirichlet problems with varying operators.
#[derive(Parser, Debug)]
#[command(name = "homlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Manufactured-solution refinement study.
    Mms(Overrides),
    /// Limit-measure extraction on the perforated lattice.
    StrangeTerm(Overrides),
    /// Corrector error against the naive approximation.
    Corrector(Overrides),
    /// Paired extractions and the comparison band.
    CompareMeasures(Overrides),
    /// Closed-form cell quantities and the surface-measure limit.
    Example6Analytic(Overrides),
}

#[derive(Args, Debug)]
struct Overrides {
    /// TOML file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `runs/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated eps values, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Window edge in units of eps.
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Corrector case: laminate or perforated.
    #[arg(long, value_parser = parse_case)]
    case: Option<CorrectorCase>,
}

fn parse_case(s: &str) -> Result<CorrectorCase, String> {
    match s {
        "laminate" => Ok(CorrectorCase::Laminate),
        "perforated" => Ok(CorrectorCase::Perforated),
        other => Err(format!("unknown case {other:?}")),
    }
}

impl Overrides {
    fn apply(self, experiment: Experiment) -> homlab::Result<(homlab::experiments::RunConfig, Option<PathBuf>)> {
        let mut partial = match &self.config {
            Some(path) => PartialConfig::from_file(path)?,
            None => PartialConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => { $( if let Some(v) = self.$flag { partial.$field = Some(v); } )* };
        }
        set!(eps => eps_list, grid => grid, a => a, b => b, alpha => alpha, beta => beta, gamma => gamma,
             window => window, tol => tol, case => case);
        Ok((partial.resolve(Some(experiment))?, self.out))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, overrides) = match cli.command {
        Command::Mms(o) => (Experiment::Mms, o),
        Command::StrangeTerm(o) => (Experiment::StrangeTerm, o),
        Command::Corrector(o) => (Experiment::Corrector, o),
        Command::CompareMeasures(o) => (Experiment::CompareMeasures, o),
        Command::Example6Analytic(o) => (Experiment::Example6Analytic, o),
    };
    let (config, out) = match overrides.apply(experiment) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run(&config);
    let code = exit_code(&outcome);
    match &outcome {
        Ok(report) => {
            print!("{}", report.summary());
            let dir = out.unwrap_or_else(|| PathBuf::from(&config.output_dir));
            match report.write(&dir) {
                Ok(files) => log::info!("wrote {} files to {}", files.len(), dir.display()),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(code as u8)
}
