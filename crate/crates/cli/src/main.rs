use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ibt_cli::commands::{self, Options};
use ibt_core::metrics::TokenizationMode;

/// Iterative back-translation for languages without parallel data.
#[derive(Parser)]
#[command(name = "ibt", version)]
struct Cli {
    /// Configuration file (TOML). Defaults to the run directory's
    /// config.toml, or the bundled benchmark.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory.
    #[arg(long, global = true, default_value = "run")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and write the input corpora and build the vocabulary.
    PrepareData,
    /// Train the zero-shot model on auxiliary data.
    TrainRound0,
    /// Back-translate monolingual text with the previous round's model.
    Backtranslate {
        #[arg(long)]
        round: u32,
    },
    /// Train one back-translation round.
    TrainRound {
        #[arg(long)]
        round: u32,
    },
    /// All of the above, then evaluate and report.
    RunPipeline,
    /// Score every trained round on the held-out test sets.
    Evaluate {
        #[arg(long, value_enum, default_values_t = [Mode::Intl13a])]
        mode: Vec<Mode>,
    },
    /// Render the per-round BLEU table.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "13a")]
    Intl13a,
    Whitespace,
    Subword,
}

impl From<Mode> for TokenizationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Intl13a => TokenizationMode::Intl13a,
            Mode::Whitespace => TokenizationMode::Whitespace,
            Mode::Subword => TokenizationMode::SubwordPieces,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options { config: cli.config, seed: cli.seed, out_dir: cli.out_dir };
    let result = match cli.command {
        Command::PrepareData => commands::prepare_data(&opts),
        Command::TrainRound0 => commands::train_round0(&opts),
        Command::Backtranslate { round } => commands::backtranslate(&opts, round),
        Command::TrainRound { round } => commands::train_round(&opts, round),
        Command::RunPipeline => commands::run_pipeline(&opts).and_then(|_| {
            print!("{}", std::fs::read_to_string(opts.out_dir.join("report.txt"))?);
            Ok(())
        }),
        Command::Evaluate { mode } => {
            let modes: Vec<TokenizationMode> = mode.into_iter().map(Into::into).collect();
            commands::evaluate(&opts, &modes)
        }
        Command::Report => commands::report(&opts).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
