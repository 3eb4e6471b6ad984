//! `lexpost`: build lexica, train and run the pronunciation models, and
//! evaluate them from the command line.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::TrainFlags;

#[derive(Parser, Debug)]
#[command(name = "lexpost", version, about = "Lexical and postlexical pronunciation models")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random stream of the run
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Phone inventory file (default: bundled)
    #[arg(long, global = true)]
    pub inventory: Option<PathBuf>,

    /// Letter model file (default: bundled)
    #[arg(long, global = true)]
    pub letters: Option<PathBuf>,

    /// Allophone cost table (default: bundled)
    #[arg(long, global = true)]
    pub allophones: Option<PathBuf>,

    /// Also write the run manifest to this file
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Merge and query pronunciation lexica
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Align two symbol strings and print the edit steps
    Align(AlignArgs),
    /// Train or run the letter-to-sound model
    #[command(subcommand)]
    G2p(G2pCmd),
    /// Train or run the postlexical model
    #[command(subcommand)]
    Postlex(PostlexCmd),
    /// Build corpora
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Score a corpus or model
    Eval(EvalArgs),
}

#[derive(Subcommand, Debug)]
pub enum LexiconCmd {
    /// Merge source lexica (in priority order A, B, C) into one lexicon
    Build {
        /// Source lexicon files, highest priority first (default: bundled)
        #[arg(long, num_args = 1..=3)]
        sources: Vec<PathBuf>,
        /// Merge policy rules (default: bundled)
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the pronunciations of a word
    Lookup {
        /// Lexicon file (default: bundled merge)
        #[arg(long)]
        lex: Option<PathBuf>,
        #[arg(long)]
        word: String,
        /// Part-of-speech tag of a homograph
        #[arg(long)]
        tag: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlignMode {
    /// Letters of a word against lexical phones
    Letters,
    /// Lexical phones against postlexical phones
    Postlex,
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    #[arg(long, value_enum)]
    pub mode: AlignMode,
    /// Source: a word (letters mode) or space-separated lexical phones
    #[arg(long)]
    pub src: String,
    /// Destination: space-separated phones
    #[arg(long)]
    pub dst: String,
}

#[derive(Subcommand, Debug)]
pub enum G2pCmd {
    /// Train on the primary pronunciation of every lexicon word
    Train {
        /// Training lexicon (default: bundled merge)
        #[arg(long)]
        lex: Option<PathBuf>,
        /// Output model directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Pronounce words
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "word", required = true)]
        words: Vec<String>,
        /// Keep vowel stress digits in the output
        #[arg(long)]
        stress: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum PostlexCmd {
    /// Train on the training split of a corpus
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Lexicon for words the corpus leaves unpronounced (default: bundled)
        #[arg(long)]
        lex: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        train_words: Option<usize>,
        #[arg(long)]
        test_words: Option<usize>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Postlexical pronunciation of a sentence
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        sentence: String,
        #[arg(long)]
        lex: Option<PathBuf>,
        /// Letter-to-sound model for words missing from the lexicon
        #[arg(long)]
        g2p_model: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CorpusCmd {
    /// Label prompt sentences with a postlexical rule set
    Synth {
        /// Prompt sentences, one per line (default: bundled)
        #[arg(long)]
        prompts: Option<PathBuf>,
        /// Rule file (default: bundled)
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        lex: Option<PathBuf>,
        /// Letter-to-sound model for words missing from the lexicon
        #[arg(long)]
        g2p_model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// identity, accuracy, table:/PHONE/ or probes
    #[arg(long)]
    pub metric: String,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub lex: Option<PathBuf>,
    /// Probe table (default: bundled)
    #[arg(long)]
    pub probes: Option<PathBuf>,
    /// Corpus part scored by `accuracy`
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    #[arg(long)]
    pub train_words: Option<usize>,
    #[arg(long)]
    pub test_words: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("ERR usage {first}");
            return ExitCode::from(2);
        }
    };
    let mut out = std::io::stdout().lock();
    match commands::run(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            let message = e.to_string().replace('\n', " ");
            eprintln!("ERR {} {message}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}
