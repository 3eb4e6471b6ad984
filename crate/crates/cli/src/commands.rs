//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use lexpost::alignment::{align, chunk_alignment, AllophoneTable, Alignment, LetterPhoneCost, LexPostlexCost};
use lexpost::corpus::{
    annotate_prompts, bundled_function_words, bundled_prompts, load_corpus, save_corpus, split_corpus, synthesize_corpus,
    Corpus, Pronouncer, Split,
};
use lexpost::evalkit::{
    aligned_phones, bundled_probes, exact_match_rate, identity_rate, load_probes, phenomena_probe, prepare_probes,
    realization_table,
};
use lexpost::labels;
use lexpost::lexicon::{bundled_sources, merge_lexica, parse_entries, Lexicon, MergePolicy, Source};
use lexpost::neuralnet::Hyperparams;
use lexpost::phonematizer::{self, bundled_heldout, letters_of, lexicon_dataset, train_phonematizer, G2PModel, LetterEncoder};
use lexpost::phonology::{LetterModels, PhoneInventory};
use lexpost::postlex::{build_postlex_dataset, train_postlex, ContextSpec, PostlexModel, RuleOracle};

use crate::config::{FileConfig, Resolver, DEFAULT_TEST_WORDS, DEFAULT_TRAIN_WORDS};
use crate::error::{CliError, Result};
use crate::{AlignArgs, AlignMode, Cli, Command, CorpusCmd, EvalArgs, G2pCmd, LexiconCmd, PostlexCmd, SplitArg};

const MANIFEST_FILE: &str = "run.manifest";

/// Shared resources resolved for every command.
struct Env {
    r: Resolver,
    inv: PhoneInventory,
    letters_path: Option<PathBuf>,
    allophones_path: Option<PathBuf>,
    manifest_out: Option<PathBuf>,
}

impl Env {
    fn new(cli: &Cli, command: &str) -> Result<Self> {
        let file = match &cli.global.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut r = Resolver::new(file, command);
        if let Some(p) = &cli.global.config {
            r.manifest.record("config", p.display());
        }
        let inv_path = r.path("inventory", cli.global.inventory.clone(), r.file.inventory.clone())?;
        let letters_path = r.path("letters", cli.global.letters.clone(), r.file.letters.clone())?;
        let allophones_path = r.path("allophones", cli.global.allophones.clone(), r.file.allophones.clone())?;
        let inv = match &inv_path {
            Some(p) => PhoneInventory::load(p)?,
            None => PhoneInventory::bundled(),
        };
        Ok(Env { r, inv, letters_path, allophones_path, manifest_out: cli.global.manifest.clone() })
    }

    fn letters(&self) -> Result<LetterModels> {
        Ok(match &self.letters_path {
            Some(p) => LetterModels::load(p, &self.inv)?,
            None => LetterModels::bundled(&self.inv),
        })
    }

    fn allophones(&self) -> Result<AllophoneTable> {
        Ok(match &self.allophones_path {
            Some(p) => AllophoneTable::load(p, &self.inv)?,
            None => AllophoneTable::bundled(&self.inv),
        })
    }

    fn lexicon(&mut self, flag: Option<PathBuf>) -> Result<Lexicon> {
        let file = self.r.file.lexicon.clone();
        Ok(match self.r.path("lexicon", flag, file)? {
            Some(p) => Lexicon::load(&p, &self.inv)?,
            None => Lexicon::bundled(&self.inv),
        })
    }

    fn postlex_model(&mut self, flag: Option<PathBuf>) -> Result<PostlexModel> {
        let file = self.r.file.model.clone();
        let dir = self.r.required_path("model", flag, file)?;
        Ok(PostlexModel::load(&dir, &self.inv)?)
    }

    fn g2p_model(&mut self, key: &str, flag: Option<PathBuf>, required: bool) -> Result<Option<G2PModel>> {
        let file = self.r.file.g2p_model.clone();
        let dir = if required { Some(self.r.required_path(key, flag, file)?) } else { self.r.optional_path(key, flag, file)? };
        dir.map(|d| G2PModel::load(&d, &self.inv)).transpose().map_err(CliError::from)
    }

    fn corpus_dir(&mut self, flag: Option<PathBuf>) -> Result<PathBuf> {
        let file = self.r.file.corpus.clone();
        self.r.required_path("corpus", flag, file)
    }

    fn split_sizes(&mut self, train: Option<usize>, test: Option<usize>) -> (usize, usize) {
        let (ft, fs) = (self.r.file.train_words, self.r.file.test_words);
        (self.r.value("train_words", train, ft, DEFAULT_TRAIN_WORDS), self.r.value("test_words", test, fs, DEFAULT_TEST_WORDS))
    }

    /// Write the manifest where `--manifest` asks, plus any artifact location.
    fn finish(&self, artifact: Option<&Path>) -> Result<()> {
        if let Some(p) = &self.manifest_out {
            self.r.manifest.write(p)?;
        }
        if let Some(p) = artifact {
            self.r.manifest.write(p)?;
        }
        Ok(())
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Lexicon(LexiconCmd::Build { sources, policy, out: path }) => lexicon_build(cli, sources, policy, path, out),
        Command::Lexicon(LexiconCmd::Lookup { lex, word, tag }) => lexicon_lookup(cli, lex, word, tag.as_deref(), out),
        Command::Align(args) => align_cmd(cli, args, out),
        Command::G2p(G2pCmd::Train { lex, out: dir, train }) => g2p_train(cli, lex, dir, train, out),
        Command::G2p(G2pCmd::Predict { model, words, stress }) => g2p_predict(cli, model, words, *stress, out),
        Command::Postlex(PostlexCmd::Train { corpus, lex, out: dir, train_words, test_words, train }) => {
            postlex_train(cli, corpus, lex, dir, (*train_words, *test_words), train, out)
        }
        Command::Postlex(PostlexCmd::Predict { model, sentence, lex, g2p_model }) => {
            postlex_predict(cli, model, sentence, lex, g2p_model, out)
        }
        Command::Corpus(CorpusCmd::Synth { prompts, rules, lex, g2p_model, out: dir }) => {
            corpus_synth(cli, prompts, rules, lex, g2p_model, dir, out)
        }
        Command::Eval(args) => eval(cli, args, out),
    }
}

fn lexicon_build(cli: &Cli, sources: &[PathBuf], policy: &Option<PathBuf>, path: &Path, out: &mut dyn Write) -> Result<()> {
    let mut env = Env::new(cli, "lexicon build")?;
    env.r.seed(cli.global.seed);
    let lists = if sources.is_empty() {
        env.r.manifest.record("sources", "bundled");
        bundled_sources(&env.inv)
    } else {
        let mut lists = Vec::new();
        for (p, src) in sources.iter().zip([Source::A, Source::B, Source::C]) {
            env.r.path(&format!("source.{src}"), Some(p.clone()), None)?;
            lists.push(parse_entries(&std::fs::read_to_string(p)?, p, src, &env.inv)?);
        }
        lists
    };
    let file_policy = env.r.file.policy.clone();
    let policy = match env.r.path("policy", policy.clone(), file_policy)? {
        Some(p) => MergePolicy::load(&p, &env.inv)?,
        None => MergePolicy::bundled(&env.inv),
    };
    env.r.output("out", path);
    let lex = merge_lexica(&lists, &policy, &env.inv)?;
    let header: String = env.r.manifest.render().lines().map(|l| format!("# {l}\n")).collect();
    std::fs::write(path, header + &lex.to_tsv(&env.inv))?;
    writeln!(out, "orthographies={}", lex.len())?;
    writeln!(out, "entries={}", lex.entry_count())?;
    env.finish(None)
}

fn lexicon_lookup(cli: &Cli, lex: &Option<PathBuf>, word: &str, tag: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let mut env = Env::new(cli, "lexicon lookup")?;
    let lexicon = env.lexicon(lex.clone())?;
    for e in lexicon.lookup(word, tag)? {
        writeln!(out, "{}\t{}\t{}", e.orthography, e.tag.as_deref().unwrap_or(""), env.inv.format_lexical(&e.pronunciation))?;
    }
    env.finish(None)
}

fn print_steps(out: &mut dyn Write, a: &Alignment, src: &[String], dst: &[String]) -> Result<()> {
    writeln!(out, "op\tsrc\tdst\tcost")?;
    for s in &a.steps {
        let (op, x, y) = match (s.src, s.dst) {
            (Some(i), Some(j)) if src[i] == dst[j] => ("match", src[i].as_str(), dst[j].as_str()),
            (Some(i), Some(j)) => ("sub", src[i].as_str(), dst[j].as_str()),
            (Some(i), None) => ("del", src[i].as_str(), "-"),
            (None, Some(j)) => ("ins", "-", dst[j].as_str()),
            (None, None) => unreachable!("a step has at least one side"),
        };
        writeln!(out, "{op}\t{x}\t{y}\t{}", s.cost)?;
    }
    writeln!(out, "cost={}", a.total_cost)?;
    Ok(())
}

fn align_cmd(cli: &Cli, args: &AlignArgs, out: &mut dyn Write) -> Result<()> {
    let mut env = Env::new(cli, "align")?;
    match args.mode {
        AlignMode::Letters => {
            env.r.manifest.record("mode", "letters");
            let letters = env.letters()?;
            let src: Vec<String> = letters_of(&args.src).into_iter().map(String::from).collect();
            let dst: Vec<String> =
                env.inv.parse_lexical(&args.dst)?.iter().map(|p| env.inv.symbol(p.id).to_string()).collect();
            let a = align(&src, &dst, &LetterPhoneCost::new(&env.inv, &letters))?;
            print_steps(out, &a, &src, &dst)?;
            for c in chunk_alignment(&a)? {
                let chunk: Vec<&str> = c.dst.iter().map(|&j| dst[j].as_str()).collect();
                writeln!(out, "chunk\t{}\t{}", src[c.src], labels::join(&chunk))?;
            }
        }
        AlignMode::Postlex => {
            env.r.manifest.record("mode", "postlex");
            let allo = env.allophones()?;
            let lex: Vec<_> = env.inv.parse_lexical(&args.src)?.iter().map(|p| p.id).collect();
            let post = env.inv.parse_postlexical(&args.dst)?;
            let (a, chunks) = LexPostlexCost::new(&env.inv, &allo).align_and_chunk(&lex, &post)?;
            let src: Vec<String> = lex.iter().map(|&id| env.inv.symbol(id).to_string()).collect();
            let dst: Vec<String> = post.iter().map(|&id| env.inv.symbol(id).to_string()).collect();
            print_steps(out, &a, &src, &dst)?;
            for c in chunks {
                let chunk: Vec<&str> = c.dst.iter().map(|&j| dst[j].as_str()).collect();
                writeln!(out, "chunk\t{}\t{}", src[c.src], labels::join(&chunk))?;
            }
        }
    }
    env.finish(None)
}

fn g2p_train(cli: &Cli, lex: &Option<PathBuf>, dir: &Path, flags: &crate::config::TrainFlags, out: &mut dyn Write) -> Result<()> {
    let mut env = Env::new(cli, "g2p train")?;
    let seed = env.r.seed(cli.global.seed);
    let lexicon = env.lexicon(lex.clone())?;
    let letters = env.letters()?;
    let window = env.r.window("g2p", flags.window, LetterEncoder::DEFAULT_WINDOW);
    let hyper = env.r.hyperparams("g2p", flags, phonematizer::default_hyperparams(), seed);
    env.r.output("out", dir);
    let encoder = LetterEncoder::new(&env.inv, &letters, window)?;
    let data = lexicon_dataset(&env.inv, &letters, &lexicon, &encoder)?;
    let (model, curve) = train_phonematizer(&env.inv, &data, &encoder, &hyper)?;
    let predicted: Vec<_> = data.examples.iter().map(|e| model.predict_input(&env.inv, &e.input)).collect::<lexpost::Result<_>>()?;
    let gold: Vec<_> = data.examples.iter().map(|e| e.chunk.clone()).collect();
    let accuracy = exact_match_rate(&predicted, &gold)?;
    model.save(dir)?;
    env.r.manifest.record("examples", data.len());
    env.r.manifest.record("skipped_entries", data.skipped_entries);
    env.r.manifest.record("final_loss", curve.last().copied().unwrap_or(f64::NAN));
    env.r.manifest.record("letter_accuracy", accuracy);
    writeln!(out, "examples={}", data.len())?;
    writeln!(out, "skipped_entries={}", data.skipped_entries)?;
    writeln!(out, "final_loss={}", curve.last().copied().unwrap_or(f64::NAN))?;
    writeln!(out, "letter_accuracy={accuracy}")?;
    env.finish(Some(&dir.join(MANIFEST_FILE)))
}

fn g2p_predict(cli: &Cli, model: &Option<PathBuf>, words: &[String], stress: bool, out: &mut dyn Write) -> Result<()> {
    let mut env = Env::new(cli, "g2p predict")?;
    let model = env.g2p_model("g2p_model", model.clone(), true)?.expect("required model");
    for w in words {
        let pron = model.phonematize(&env.inv, w)?;
        let text = if stress {
            env.inv.format_lexical(&pron)
        } else {
            env.inv.format(&pron.iter().map(|p| p.id).collect::<Vec<_>>())
        };
        writeln!(out, "{text}")?;
    }
    env.finish(None)
}

fn split(env: &mut Env, corpus: Corpus, sizes: (Option<usize>, Option<usize>), seed: u64) -> Result<Corpus> {
    let (train, test) = env.split_sizes(sizes.0, sizes.1);
    Ok(split_corpus(corpus, train, test, seed)?)
}

fn postlex_train(
    cli: &Cli,
    corpus: &Option<PathBuf>,
    lex: &Option<PathBuf>,
    dir: &Path,
    sizes: (Option<usize>, Option<usize>),
    flags: &crate::config::TrainFlags,
    out: &mut dyn Write,
) -> Result<()> {
    let mut env = Env::new(cli, "postlex train")?;
    let seed = env.r.seed(cli.global.seed);
    let corpus_dir = env.corpus_dir(corpus.clone())?;
    let lexicon = env.lexicon(lex.clone())?;
    let allo = env.allophones()?;
    let window = env.r.window("postlex", flags.window, ContextSpec::DEFAULT_WINDOW);
    let hyper = env.r.hyperparams("postlex", flags, Hyperparams::default(), seed);
    env.r.output("out", dir);
    let corpus = load_corpus(&corpus_dir, &env.inv, Some(&lexicon))?;
    let corpus = split(&mut env, corpus, sizes, seed)?;
    let spec = ContextSpec::with_window(&env.inv, window);
    let train = build_postlex_dataset(&env.inv, &allo, corpus.utterances_in(Split::Train), &spec)?;
    let test = build_postlex_dataset(&env.inv, &allo, corpus.utterances_in(Split::Test), &spec)?;
    let (model, curve) = train_postlex(&env.inv, &train, &spec, &hyper)?;
    let accuracy = chunk_accuracy(&env.inv, &model, &test)?;
    model.save(dir)?;
    let metrics = [
        ("train_words", corpus.words_in(Split::Train).to_string()),
        ("test_words_actual", corpus.words_in(Split::Test).to_string()),
        ("train_examples", train.len().to_string()),
        ("test_examples", test.len().to_string()),
        ("skipped_tokens", (train.skipped_tokens + test.skipped_tokens).to_string()),
        ("final_loss", curve.last().copied().unwrap_or(f64::NAN).to_string()),
        ("heldout_accuracy", accuracy.to_string()),
    ];
    for (k, v) in metrics {
        env.r.manifest.record(k, &v);
        writeln!(out, "{k}={v}")?;
    }
    env.finish(Some(&dir.join(MANIFEST_FILE)))
}

fn chunk_accuracy(inv: &PhoneInventory, model: &PostlexModel, data: &lexpost::postlex::PostlexDataset) -> Result<f64> {
    let predicted: Vec<_> = data.examples.iter().map(|e| model.predict_input(inv, &e.input)).collect::<lexpost::Result<_>>()?;
    let gold: Vec<_> = data.examples.iter().map(|e| e.chunk.clone()).collect();
    Ok(exact_match_rate(&predicted, &gold)?)
}

fn postlex_predict(
    cli: &Cli,
    model: &Option<PathBuf>,
    sentence: &str,
    lex: &Option<PathBuf>,
    g2p_model: &Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut env = Env::new(cli, "postlex predict")?;
    let model = env.postlex_model(model.clone())?;
    let lexicon = env.lexicon(lex.clone())?;
    let g2p = env.g2p_model("g2p_model", g2p_model.clone(), false)?;
    let fallback = g2p.as_ref().map(|m| m.pronouncer(&env.inv));
    let utts = annotate_prompts(
        &[sentence.to_string()],
        &lexicon,
        &bundled_function_words(),
        fallback.as_ref().map(|f| f as &dyn Pronouncer),
    )?;
    let utt = model.apply(&env.inv, &utts[0])?;
    for w in &utt.words {
        writeln!(out, "{}\t{}\t{}", w.orthography, env.inv.format_lexical(&w.lexical), env.inv.format(&w.postlex))?;
    }
    env.finish(None)
}

fn read_prompts(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn corpus_synth(
    cli: &Cli,
    prompts: &Option<PathBuf>,
    rules: &Option<PathBuf>,
    lex: &Option<PathBuf>,
    g2p_model: &Option<PathBuf>,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let mut env = Env::new(cli, "corpus synth")?;
    let seed = env.r.seed(cli.global.seed);
    let file_prompts = env.r.file.prompts.clone();
    let sentences = match env.r.path("prompts", prompts.clone(), file_prompts)? {
        Some(p) => read_prompts(&p)?,
        None => bundled_prompts(),
    };
    let file_rules = env.r.file.rules.clone();
    let oracle = match env.r.path("rules", rules.clone(), file_rules)? {
        Some(p) => RuleOracle::load(&p, &env.inv)?,
        None => RuleOracle::bundled(&env.inv),
    };
    let lexicon = env.lexicon(lex.clone())?;
    let allo = env.allophones()?;
    let g2p = env.g2p_model("g2p_model", g2p_model.clone(), false)?;
    env.r.output("out", dir);
    let fallback = g2p.as_ref().map(|m| m.pronouncer(&env.inv));
    let corpus = synthesize_corpus(
        &env.inv,
        &sentences,
        &lexicon,
        &bundled_function_words(),
        fallback.as_ref().map(|f| f as &dyn Pronouncer),
        &oracle,
        seed,
    )?;
    save_corpus(&corpus, dir, &env.inv)?;
    let identity = identity_rate(&env.inv, &allo, &corpus.utterances)?;
    let metrics =
        [("utterances", corpus.utterances.len().to_string()), ("words", corpus.word_count().to_string()), ("identity_rate", identity.to_string())];
    for (k, v) in metrics {
        env.r.manifest.record(k, &v);
        writeln!(out, "{k}={v}")?;
    }
    env.finish(Some(&dir.join(MANIFEST_FILE)))
}

fn eval(cli: &Cli, args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let mut env = Env::new(cli, "eval")?;
    env.r.manifest.record("metric", &args.metric);
    match args.metric.as_str() {
        "identity" => {
            let dir = env.corpus_dir(args.corpus.clone())?;
            let lexicon = env.lexicon(args.lex.clone())?;
            let corpus = load_corpus(&dir, &env.inv, Some(&lexicon))?;
            let rate = identity_rate(&env.inv, &env.allophones()?, &corpus.utterances)?;
            writeln!(out, "identity_rate={rate}")?;
        }
        "accuracy" => eval_accuracy(&mut env, cli, args, out)?,
        "probes" => {
            let model = env.postlex_model(args.model.clone())?;
            let lexicon = env.lexicon(args.lex.clone())?;
            let file_probes = env.r.file.probes.clone();
            let probes = match env.r.path("probes", args.probes.clone(), file_probes)? {
                Some(p) => load_probes(&p)?,
                None => bundled_probes(),
            };
            let prepared = prepare_probes(&probes, &lexicon, &bundled_function_words())?;
            let report = phenomena_probe(&env.inv, &prepared, |u| model.predict_chunks(&env.inv, u));
            writeln!(out, "{report}")?;
        }
        m => {
            let Some(phone) = m.strip_prefix("table:/").and_then(|r| r.strip_suffix('/')) else {
                return Err(CliError::Usage(format!("unknown metric `{m}` (identity, accuracy, table:/PHONE/, probes)")));
            };
            let dir = env.corpus_dir(args.corpus.clone())?;
            let lexicon = env.lexicon(args.lex.clone())?;
            let corpus = load_corpus(&dir, &env.inv, Some(&lexicon))?;
            let aligned = aligned_phones(&env.inv, &env.allophones()?, &corpus.utterances)?;
            writeln!(out, "{}", realization_table(&env.inv, &aligned, phone)?)?;
        }
    }
    env.finish(None)
}

/// Chunk accuracy of a postlexical model on a corpus split, or whole-word
/// accuracy of a letter-to-sound model on a lexicon.
fn eval_accuracy(env: &mut Env, cli: &Cli, args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let file_model = env.r.file.model.clone();
    let dir = env.r.required_path("model", args.model.clone(), file_model)?;
    if let Ok(model) = PostlexModel::load(&dir, &env.inv) {
        let seed = env.r.seed(cli.global.seed);
        let corpus_dir = env.corpus_dir(args.corpus.clone())?;
        let lexicon = env.lexicon(args.lex.clone())?;
        let allo = env.allophones()?;
        let corpus = load_corpus(&corpus_dir, &env.inv, Some(&lexicon))?;
        let utts: Vec<_> = match args.split {
            SplitArg::All => corpus.utterances.clone(),
            which => {
                let corpus = split(env, corpus, (args.train_words, args.test_words), seed)?;
                let part = if which == SplitArg::Train { Split::Train } else { Split::Test };
                corpus.utterances_in(part).cloned().collect()
            }
        };
        let data = build_postlex_dataset(&env.inv, &allo, &utts, &model.spec)?;
        writeln!(out, "examples={}", data.len())?;
        writeln!(out, "chunk_accuracy={}", chunk_accuracy(&env.inv, &model, &data)?)?;
        return Ok(());
    }
    let model = G2PModel::load(&dir, &env.inv)?;
    let entries = match &args.lex {
        Some(p) => {
            env.r.path("lexicon", Some(p.clone()), None)?;
            Lexicon::load(p, &env.inv)?.primary_entries().cloned().collect()
        }
        None => {
            env.r.manifest.record("lexicon", "bundled-heldout");
            bundled_heldout(&env.inv)
        }
    };
    let predicted: Vec<_> =
        entries.iter().map(|e| model.phonematize(&env.inv, &e.orthography)).collect::<lexpost::Result<_>>()?;
    let gold: Vec<_> = entries.iter().map(|e| e.pronunciation.clone()).collect();
    writeln!(out, "words={}", entries.len())?;
    writeln!(out, "word_accuracy={}", exact_match_rate(&predicted, &gold)?)?;
    Ok(())
}
