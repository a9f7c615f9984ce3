//! `menger`: command-line front end of the energy and seminorm estimators.

mod commands;
mod fail;
mod opts;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fail::Fail;
use opts::{Format, Opts};
use output::{text_table, Output};

#[derive(Parser)]
#[command(
    name = "menger",
    version,
    about = "Menger-type curvature energies and Besov-type seminorms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the graph energy of a function, or probe its scaling with --lambdas.
    Energy(Opts),
    /// Second-difference or Gagliardo seminorm.
    Seminorm(Opts),
    /// Seminorm built from local affine approximation numbers.
    Dorronsoro(Opts),
    /// Curvature energies of a closed polygon.
    Knot(Opts),
    /// Numerical experiments.
    Verify {
        experiment: Experiment,
        #[command(flatten)]
        opts: Opts,
    },
    /// Summarize JSON results written with --out.
    Report {
        files: Vec<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Equivalence,
    LemmaBeta,
    WMeasure,
    Laplace,
    Codivergence,
}

fn thread_pool(o: &Opts) -> Result<(), Fail> {
    let threads = match o.threads {
        Some(t) => Some(t),
        None => match std::env::var("MENGER_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Fail::Validation(format!("MENGER_THREADS=`{v}` is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return fail::invalid("the thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Fail::Validation(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Fail> {
    let (stem, opts) = match &cli.command {
        Command::Energy(o) => ("energy", o),
        Command::Seminorm(o) => ("seminorm", o),
        Command::Dorronsoro(o) => ("dorronsoro", o),
        Command::Knot(o) => ("knot", o),
        Command::Verify { experiment, opts } => (
            match experiment {
                Experiment::Equivalence => "verify-equivalence",
                Experiment::LemmaBeta => "verify-lemma-beta",
                Experiment::WMeasure => "verify-w-measure",
                Experiment::Laplace => "verify-laplace",
                Experiment::Codivergence => "verify-codivergence",
            },
            opts,
        ),
        Command::Report { opts, .. } => ("report", opts),
    };
    let o = opts.clone().resolve()?;
    thread_pool(&o)?;
    let out: Output = match &cli.command {
        Command::Energy(_) => commands::energy(&o)?,
        Command::Seminorm(_) => commands::seminorm(&o)?,
        Command::Dorronsoro(_) => commands::dorronsoro(&o)?,
        Command::Knot(_) => commands::knot(&o)?,
        Command::Verify { experiment, .. } => match experiment {
            Experiment::Equivalence => commands::verify_equivalence(&o)?,
            Experiment::LemmaBeta => commands::verify_lemma_beta(&o)?,
            Experiment::WMeasure => commands::verify_w_measure(&o)?,
            Experiment::Laplace => commands::verify_laplace(&o)?,
            Experiment::Codivergence => commands::verify_codivergence(&o)?,
        },
        Command::Report { files, .. } => {
            o.only("report", &[])?;
            return report(files, &o).map(|_| false);
        }
    };
    out.emit(o.format.unwrap_or(Format::Json), o.out.as_deref(), stem)?;
    Ok(out.flagged)
}

fn report(files: &[PathBuf], o: &Opts) -> Result<(), Fail> {
    let table = commands::report(files)?;
    let (text, ext) = match o.format {
        Some(Format::Csv) => (output::csv_string(&table)?, "csv"),
        Some(Format::Json) | Some(Format::Both) => {
            return fail::invalid("report prints a text or CSV table; use --format csv or omit --format");
        }
        None => (text_table(&table), "txt"),
    };
    match &o.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Fail::Io(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("report.{ext}"));
            std::fs::write(&path, text).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
