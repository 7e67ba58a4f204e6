use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pronoun_pivot::config::Config;
use pronoun_pivot::fixtures;
use pronoun_pivot::inject::{inject_lines, InjectMode};
use pronoun_pivot::manifest::Manifest;
use pronoun_pivot::metrics::{self, agreement_stats, EvalReport};
use pronoun_pivot::pipeline::{config_fingerprint, Run};
use pronoun_pivot::{logging, Error};

#[derive(Parser)]
#[command(name = "pronoun-pivot", version, about = "Mine and evaluate gender-labeled Spanish pronoun examples")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override one config key, e.g. `--set inject.flip_rate=0.1`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Skip stages whose manifest is unchanged.
    #[arg(long, global = true)]
    resume: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureTable {
    /// Prodrop rates of English he/she.
    Table4,
    /// Prodrop human agreement.
    Table5,
    /// Possessive human agreement.
    Table6,
    /// System scores with F1 recomputed from P and R.
    Table7,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Train,
    Infer,
}

#[derive(Subcommand)]
enum Command {
    /// Pair Spanish and English documents by title.
    AlignPages,
    /// Match sentences inside each page pair.
    AlignSentences,
    /// Train both IBM Model 1 directions on the sentence pairs.
    TrainAligner,
    /// Detect pronoun slots and project English genders onto them.
    Extract,
    /// Balance and split the examples per pronoun kind.
    BuildDataset,
    /// Predict genders for the test splits.
    Classify,
    /// Score predictions, or print a bundled reference table.
    Evaluate {
        #[arg(long, value_enum)]
        fixtures: Option<FixtureTable>,
    },
    /// Local linear explanations for a few test predictions.
    Explain,
    /// Append `<c> <TAG>` to sentences from a labels file.
    Inject {
        /// One sentence per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// One line per sentence: empty (no slot), `-` (abstain), MASC or FEM.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run every stage in order.
    Pipeline,
    /// Write the synthetic oracle corpus.
    #[command(hide = true)]
    GenSynthetic {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn set_key(table: &mut toml::Table, spec: &str) -> Result<(), Error> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("--set {spec:?}: expected KEY=VALUE")))?;
    let value: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last =
        parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("--set {spec:?}: empty key")))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("--set {spec:?}: {p} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if !cli.overrides.is_empty() {
        // Overrides apply after rebasing, so their paths stay relative to the cwd.
        let mut table: toml::Table =
            cfg.to_toml().parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for s in &cli.overrides {
            set_key(&mut table, s)?;
        }
        cfg = Config::from_toml(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(d) = &cli.out_dir {
        cfg.paths.out_dir = d.clone();
    }
    Ok(cfg)
}

fn print_fixture(t: FixtureTable) {
    let mut out = std::io::stdout().lock();
    match t {
        FixtureTable::Table4 => {
            let r = EvalReport { prodrop_rates: Some(fixtures::prodrop_rate_counts()), ..Default::default() };
            let _ = write!(out, "{}", r.to_text("table4"));
        }
        FixtureTable::Table5 | FixtureTable::Table6 => {
            let m = if matches!(t, FixtureTable::Table5) {
                fixtures::prodrop_agreement()
            } else {
                fixtures::possessive_agreement()
            };
            let a = agreement_stats(&m).expect("fixture has resolved rows");
            let r = EvalReport { confusion: Some(m), agreement: Some(a), ..Default::default() };
            let _ = write!(out, "{}", r.to_text("fixture"));
        }
        FixtureTable::Table7 => {
            let _ = writeln!(
                out,
                "{:<11} {:<24} {:>6} {:>6} {:>6} {:>9}  {:>6} {:>6} {:>6} {:>9}",
                "task", "system", "P", "R", "F1", "F1(P,R)", "P", "R", "F1", "F1(P,R)"
            );
            for row in fixtures::system_scores() {
                let v = row.values;
                let _ = writeln!(
                    out,
                    "{:<11} {:<24} {:>6.1} {:>6.1} {:>6.1} {:>9.2}  {:>6.1} {:>6.1} {:>6.1} {:>9.2}",
                    row.task,
                    row.system,
                    v[0],
                    v[1],
                    v[2],
                    metrics::f1(v[0], v[1]),
                    v[3],
                    v[4],
                    v[5],
                    metrics::f1(v[3], v[4])
                );
            }
        }
    }
}

fn standalone_inject(
    cfg: &Config,
    input: &Path,
    labels: &Path,
    output: Option<&Path>,
    mode: InjectMode,
) -> Result<(), Error> {
    let open =
        |p: &Path| File::open(p).map(BufReader::new).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())));
    let opts = cfg.inject.options(cfg.seed);
    let mut m = Manifest::new("inject", cfg.seed, &config_fingerprint(cfg));
    m.input("input", input)?.input("labels", labels)?;
    let mut buf = Vec::new();
    writeln!(buf, "# {}", m.header())?;
    let outcomes = inject_lines(open(input)?, open(labels)?, mode, &opts, &mut buf)?;
    let tagged = outcomes.iter().filter(|o| o.tag.is_some()).count();
    log::info!("tagged {tagged} of {} sentences", outcomes.len());
    match output {
        Some(p) => std::fs::write(p, buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Command::GenSynthetic { dir } = &cli.command {
        let dir = dir.clone().unwrap_or_else(fixtures::bundled_synthetic_dir);
        fixtures::synthetic_corpus().write_to(&dir)?;
        log::info!("wrote synthetic corpus to {}", dir.display());
        return Ok(());
    }
    if let Command::Evaluate { fixtures: Some(t) } = &cli.command {
        print_fixture(*t);
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("jobs: {e}")))?;
    }
    let mut r = Run::new(&cfg, cfg.paths.out_dir.clone());
    r.resume = cli.resume;
    match &cli.command {
        Command::AlignPages => r.align_pages().map(drop),
        Command::AlignSentences => r.align_sentences().map(drop),
        Command::TrainAligner => r.train_aligner().map(drop),
        Command::Extract => r.extract().map(drop),
        Command::BuildDataset => r.build_dataset().map(drop),
        Command::Classify => r.classify().map(drop),
        Command::Evaluate { .. } => r.evaluate().map(drop),
        Command::Explain => r.explain().map(drop),
        Command::Inject { input, labels, output, mode } => {
            let mode = match mode {
                Some(ModeArg::Train) => InjectMode::Train,
                Some(ModeArg::Infer) => InjectMode::Infer,
                None => cfg.inject.mode,
            };
            match (input, labels) {
                (Some(i), Some(l)) => standalone_inject(&cfg, i, l, output.as_deref(), mode),
                (None, None) => r.inject().map(drop),
                _ => Err(Error::Config("inject needs both --input and --labels".into())),
            }
        }
        Command::Pipeline => r.pipeline().map(drop),
        Command::GenSynthetic { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    logging::init(log::Level::Info);
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            log::error!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            log::error!("stage failed: {e}");
            ExitCode::from(1)
        }
    }
}
