use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use adapt_core::concepts::Task;
use adapt_core::harness::config::GridSpec;
use adapt_core::harness::grid::{curve_rows, run_grid, student_label, MetricRow};
use adapt_core::harness::metrics::{
    all_critical_by, mean, mean_ci95, mean_indicator, profile_shape, type_accuracy_over_time,
};
use adapt_core::harness::{
    critical_examples, critical_timing, magnitude_profile, run_episode, Assets, Condition,
    ExperimentConfig, Transcript,
};
use adapt_core::llm::{
    run_simulated, ChatRequest, ChatTransport, LlmConfig, RecordingTransport, ReplayTransport, TeacherMode,
};
use adapt_core::session::{Session, SessionContext, SessionStore};
use adapt_core::teachers::PolicyKind;

#[derive(Parser)]
#[command(name = "adapt", version, about = "Simulated adaptive-teaching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One teaching episode.
    Run(RunArgs),
    /// A sweep of episodes from a `key = value` file.
    Grid(GridArgs),
    /// Tables from stored transcripts.
    Analyze(AnalyzeArgs),
    /// A chat-model teacher against a simulated student.
    Llm(LlmArgs),
    /// Stored human-study sessions.
    #[command(subcommand)]
    Session(SessionCommand),
}

#[derive(Args, Clone)]
struct ConditionArgs {
    #[arg(long, default_value = "functions")]
    task: Task,
    /// Function concept id such as `greater_2,1,7`. Ignored for other tasks.
    #[arg(long)]
    concept: Option<String>,
    /// Student type, e.g. `f-learner`, `add-learner` or `+ied`.
    #[arg(long)]
    student: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cond: ConditionArgs,
    #[arg(long, default_value = "atom")]
    policy: PolicyKind,
    /// Write the transcript as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Grid file; task defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// transcripts.jsonl written by `grid`.
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Steps at which type accuracy is reported.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10,20,40")]
    checkpoints: Vec<usize>,
    /// Selections kept per magnitude profile.
    #[arg(long, default_value_t = 10)]
    profile_len: usize,
}

#[derive(Args)]
struct LlmArgs {
    #[command(flatten)]
    cond: ConditionArgs,
    #[arg(long, default_value = "combined")]
    mode: TeacherMode,
    #[arg(long, default_value = "gpt-4")]
    model: String,
    /// Replay model replies from a `role: content` dialogue file instead of
    /// calling a model.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// OpenAI-compatible endpoint; needs the `http` feature.
    #[arg(long, default_value = "https://api.openai.com/v1")]
    base_url: String,
    #[arg(long, default_value = "OPENAI_API_KEY")]
    key_var: String,
    /// Directory for the transcript, dialogue and raw exchanges.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Index of a session store.
    List {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Replays a session log and prints its state and report.
    Replay {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        id: String,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Grid(a) => grid(a),
        Command::Analyze(a) => analyze(a),
        Command::Llm(a) => llm(a),
        Command::Session(c) => session(c),
    }
}

fn find_condition(args: &ConditionArgs) -> Result<Condition> {
    let want = args.student.trim();
    let matches = |c: &Condition| {
        let label = student_label(c);
        label == want || label == format!("{want}-learner") || label == format!("+{want}-learner")
    };
    let found: Vec<Condition> = Condition::all_for(args.task)
        .into_iter()
        .filter(|c| match (&args.concept, c) {
            (Some(id), Condition::Functions { row, .. }) => &row.id() == id,
            (None, Condition::Functions { .. }) => false,
            _ => true,
        })
        .filter(|c| matches(c))
        .collect();
    match found.as_slice() {
        [c] => Ok(c.clone()),
        [] if args.task == Task::Functions && args.concept.is_none() => {
            bail!("--concept is required for the function task")
        }
        [] => bail!("no {} condition for student `{want}`", args.task),
        _ => bail!("ambiguous condition"),
    }
}

fn experiment(args: &ConditionArgs, policy: PolicyKind) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(find_condition(args)?, policy, args.seed);
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(n) = args.noise {
        cfg.noise = n;
    }
    Ok(cfg)
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = experiment(&a.cond, a.policy)?;
    let t = run_episode(&cfg, &Assets::default())?;
    let curve = t.curve();
    for s in &t.steps {
        println!(
            "{:>3}  {:<16} guess {:<12} label {:<12} {:.4}",
            s.step, s.input, s.guess, s.label, s.metric
        );
    }
    println!("auc {:.4}  final {:.4}", curve.auc(), curve.last());
    if let Some(path) = a.out {
        fs::write(&path, serde_json::to_string_pretty(&t)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn grid(a: GridArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => GridSpec::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => GridSpec::default(),
    };
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("override `{kv}` is not key=value"))?;
        spec.set(k.trim(), v.trim()).map_err(anyhow::Error::msg)?;
    }
    let configs = spec.configs();
    let assets = Assets::new(spec.fraction_range);
    let results = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run_grid(&configs, &assets)),
        None => run_grid(&configs, &assets),
    };
    let runs: Vec<Transcript> = results.into_iter().collect::<Result<_, _>>()?;

    fs::create_dir_all(&a.out)?;
    let mut w = BufWriter::new(File::create(a.out.join("transcripts.jsonl"))?);
    for t in &runs {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let rows = write_metrics(&a.out, &runs)?;
    let mut curves = csv::Writer::from_path(a.out.join("curves.csv"))?;
    for t in &runs {
        for r in curve_rows(t) {
            curves.serialize(r)?;
        }
    }
    curves.flush()?;
    print_auc_table(&rows);
    Ok(())
}

fn write_metrics(dir: &Path, runs: &[Transcript]) -> Result<Vec<MetricRow>> {
    let rows: Vec<MetricRow> = runs.iter().map(MetricRow::from_transcript).collect();
    let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

fn print_auc_table(rows: &[MetricRow]) {
    let mut by: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        by.entry((&r.task, &r.policy)).or_default().push(r.auc);
    }
    println!("{:<10} {:<20} {:>5} {:>8} {:>8}", "task", "policy", "n", "auc", "ci95");
    for ((task, policy), v) in by {
        let (m, h) = mean_ci95(&v);
        println!("{task:<10} {policy:<20} {:>5} {m:>8.4} {h:>8.4}", v.len());
    }
}

fn read_transcripts(path: &Path) -> Result<Vec<Transcript>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("line {}", i + 1))?);
    }
    Ok(out)
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let runs = read_transcripts(&a.transcripts)?;
    fs::create_dir_all(&a.out)?;
    let rows = write_metrics(&a.out, &runs)?;
    print_auc_table(&rows);

    let mut by_policy: BTreeMap<String, Vec<&Transcript>> = BTreeMap::new();
    for t in &runs {
        by_policy.entry(t.config.policy.to_string()).or_default().push(t);
    }

    let mut w = csv::Writer::from_path(a.out.join("type_accuracy.csv"))?;
    w.write_record(["task", "policy", "step", "accuracy"])?;
    for (policy, ts) in &by_policy {
        let mut by_task: BTreeMap<String, Vec<Transcript>> = BTreeMap::new();
        for t in ts {
            by_task.entry(t.config.task().to_string()).or_default().push((*t).clone());
        }
        for (task, ts) in by_task {
            let acc = type_accuracy_over_time(&ts, &a.checkpoints);
            for (step, v) in a.checkpoints.iter().zip(acc) {
                if !v.is_nan() {
                    w.write_record([task.clone(), policy.clone(), step.to_string(), v.to_string()])?;
                }
            }
        }
    }
    w.flush()?;

    // Function task only: critical-example timing and magnitude profiles.
    let mut timing = csv::Writer::from_path(a.out.join("critical_timing.csv"))?;
    timing.write_record(["policy", "step", "mean_critical", "all_shown_by_mean"])?;
    let mut profiles = csv::Writer::from_path(a.out.join("profiles.csv"))?;
    profiles.write_record(["policy", "concept", "student", "seed", "profile", "shape"])?;
    for (policy, ts) in &by_policy {
        let mut indicators = Vec::new();
        let mut by = Vec::new();
        for t in ts {
            let Condition::Functions { row, .. } = &t.config.condition else {
                continue;
            };
            let xs = t.function_inputs()?;
            let crit = critical_examples(row.target.f, row.spurious_f);
            indicators.push(critical_timing(&xs, &crit));
            if let Some(n) = all_critical_by(&xs, &crit) {
                by.push(n as f64);
            }
            let prof = magnitude_profile(&xs[..xs.len().min(a.profile_len)], row.target.f);
            let text: Vec<String> = prof.iter().map(u32::to_string).collect();
            profiles.write_record([
                policy.clone(),
                row.id(),
                student_label(&t.config.condition),
                t.config.seed.to_string(),
                text.join(" "),
                serde_json::to_value(profile_shape(&prof))?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
            ])?;
        }
        let by_mean = if by.is_empty() { String::new() } else { format!("{:.3}", mean(&by)) };
        for (i, v) in mean_indicator(&indicators).into_iter().enumerate() {
            timing.write_record([policy.clone(), (i + 1).to_string(), v.to_string(), by_mean.clone()])?;
        }
    }
    timing.flush()?;
    profiles.flush()?;
    Ok(())
}

#[cfg(feature = "http")]
fn live_transport(a: &LlmArgs) -> Result<Box<dyn ChatTransport>> {
    Ok(Box::new(adapt_core::llm::transport::HttpTransport::from_env(
        &a.base_url,
        &a.key_var,
    )?))
}

#[cfg(not(feature = "http"))]
fn live_transport(_: &LlmArgs) -> Result<Box<dyn ChatTransport>> {
    bail!("built without the `http` feature; pass --replay or rebuild with --features http")
}

fn llm(a: LlmArgs) -> Result<()> {
    let exp = experiment(&a.cond, PolicyKind::Atom)?;
    let inner: Box<dyn ChatTransport> = match &a.replay {
        Some(p) => Box::new(ReplayTransport::from_dialogue(&fs::read_to_string(p)?)),
        None => live_transport(&a)?,
    };
    let rec = RecordingTransport::new(move |r: &ChatRequest| inner.complete(r));
    let cfg = LlmConfig::new(a.model.clone(), exp.horizon);
    let t = run_simulated(&exp, a.mode, &rec, &cfg, &Assets::default())?;
    for s in &t.steps {
        println!(
            "{:<16} guess {:<12} label {}",
            s.input,
            s.guess.as_deref().unwrap_or("-"),
            s.label
        );
    }
    if let Some(curve) = t.metric_curve() {
        println!("auc {:.4}", adapt_core::harness::auc(&curve));
    }
    println!(
        "completed {}  type answer {}  true type {}",
        t.completed,
        t.type_answer.map_or("-".into(), |i| i.to_string()),
        exp.condition.true_index()
    );
    if let Some(dir) = a.out {
        fs::create_dir_all(&dir)?;
        t.write_jsonl(File::create(dir.join("turns.jsonl"))?)?;
        fs::write(dir.join("dialogue.txt"), t.dialogue())?;
        rec.write_jsonl(File::create(dir.join("exchanges.jsonl"))?)?;
        // Raw model replies, replayable with --replay.
        let mut replies = String::new();
        for e in rec.exchanges() {
            if let Ok(r) = e.response {
                replies.push_str("assistant: ");
                replies.push_str(&r);
                replies.push('\n');
            }
        }
        fs::write(dir.join("replies.txt"), replies)?;
        fs::write(dir.join("transcript.json"), serde_json::to_string_pretty(&t)?)?;
    }
    Ok(())
}

fn session(c: SessionCommand) -> Result<()> {
    match c {
        SessionCommand::List { dir } => {
            for e in SessionStore::open(dir)?.index()? {
                println!("{}  {}  {}  {:?}  {}", e.id, e.created_at, e.spec.row.id(), e.spec.student, e.spec.policy);
            }
        }
        SessionCommand::Replay { dir, id } => {
            let events = SessionStore::open(dir)?.load(&id)?;
            let s = Session::replay(&SessionContext::default(), &events)?;
            let last = events.last().map_or(0, |e| e.at_ms());
            println!("{}", serde_json::to_string_pretty(&s.view(last))?);
            match s.report() {
                Ok(r) => println!("{}", serde_json::to_string_pretty(&r)?),
                Err(e) => println!("no report: {e}"),
            }
        }
    }
    Ok(())
}
