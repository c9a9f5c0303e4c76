use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use plancheck_core::campaign::{
    emit_report, run_budgeted, run_capability_sweep, CampaignConfig, CampaignReport, ReportFormat,
};
use plancheck_core::dissect::{dissect, DissectConfig};
use plancheck_core::harness::{agent_factory, run_case, ChatConfig, HttpChatClient, RunLimits};
use plancheck_core::lexicon::{builtin_lexicon, regenerate_lexicon, Lexicon};
use plancheck_core::model::derive_seed;
use plancheck_core::synthesis::{synthesize_case, QueryCase, SynthesisConfig};
use plancheck_core::Mode;

#[derive(Parser)]
#[command(name = "plancheck", version, about = "Test the planning of tool-using agents with synthesized queries")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Basic,
    Extended,
}

/// Flags shared by every subcommand. Values in `--config` take precedence.
#[derive(Args)]
struct Common {
    /// TOML file whose keys override the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, global = true)]
    actions_min: Option<usize>,
    #[arg(long, global = true)]
    actions_max: Option<usize>,
    #[arg(long, global = true)]
    budget_secs: Option<f64>,
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    cap: Option<usize>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// http:<model>, react:<model> or sim:<profile>.
    #[arg(long, global = true)]
    agent: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Lexicon JSON; the built-in one is used otherwise.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Chat-completions base URL for http: and react: agents.
    #[arg(long, global = true)]
    base_url: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize cases and write them as JSON.
    Gen {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Random testing within the time budget.
    Run {
        #[arg(long)]
        max_cases: Option<usize>,
        /// Dissect every erroneous case.
        #[arg(long)]
        dissect: bool,
    },
    /// Capability sweep over growing action counts.
    Sweep {
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Find the root cause of one failing case.
    Dissect {
        /// Case JSON written by `gen` or by a campaign.
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        dissect_k: Option<usize>,
    },
    /// Re-emit a saved report.json in every format.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
    /// Regenerate the topic lexicon through the configured endpoint.
    Lexicon {
        #[arg(long)]
        model: Option<String>,
    },
}

/// Resolved settings: defaults, then flags, then the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Settings {
    mode: Mode,
    actions_min: usize,
    actions_max: usize,
    budget_secs: f64,
    timeout_secs: u64,
    max_iters: usize,
    k: usize,
    cap: usize,
    x: usize,
    threshold: f64,
    n_max: usize,
    agent: String,
    seed: u64,
    out_dir: PathBuf,
    parallelism: usize,
    max_cases: Option<usize>,
    dissect: bool,
    dissect_k: usize,
    lexicon: Option<PathBuf>,
    chat: ChatConfig,
    synthesis: SynthesisConfig,
}

impl Default for Settings {
    fn default() -> Self {
        let c = CampaignConfig::default();
        Settings {
            mode: c.mode,
            actions_min: c.actions_min,
            actions_max: c.actions_max,
            budget_secs: c.budget_secs,
            timeout_secs: c.limits.timeout_secs,
            max_iters: c.limits.max_iterations,
            k: c.k,
            cap: c.cap,
            x: c.x,
            threshold: c.threshold,
            n_max: c.n_max,
            agent: "sim:perfect".to_string(),
            seed: c.seed,
            out_dir: PathBuf::from("plancheck-out"),
            parallelism: c.parallelism,
            max_cases: None,
            dissect: false,
            dissect_k: DissectConfig::default().k,
            lexicon: None,
            chat: ChatConfig::default(),
            synthesis: c.synthesis,
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl Settings {
    fn resolve(common: &Common, command: &Command) -> Result<Self> {
        let mut s = Settings::default();
        macro_rules! take {
            ($($f:ident => $t:ident),*) => { $(if let Some(v) = common.$f.clone() { s.$t = v; })* };
        }
        take!(actions_min => actions_min, actions_max => actions_max, budget_secs => budget_secs,
              timeout_secs => timeout_secs, max_iters => max_iters, k => k, cap => cap,
              threshold => threshold, agent => agent, seed => seed, out_dir => out_dir,
              parallelism => parallelism);
        if let Some(m) = common.mode {
            s.mode = match m {
                ModeArg::Basic => Mode::Basic,
                ModeArg::Extended => Mode::Extended,
            };
        }
        if common.lexicon.is_some() {
            s.lexicon = common.lexicon.clone();
        }
        if let Some(u) = &common.base_url {
            s.chat.base_url = u.clone();
        }
        match command {
            Command::Run { max_cases, dissect } => {
                s.max_cases = max_cases.or(s.max_cases);
                s.dissect |= dissect;
            }
            Command::Sweep { n_max: Some(n) } => s.n_max = *n,
            Command::Dissect { dissect_k: Some(k), .. } => s.dissect_k = *k,
            _ => {}
        }
        if let Some(path) = &common.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let over: toml::Table = text
                .parse()
                .with_context(|| format!("parsing config {}", path.display()))?;
            let mut base = toml::Table::try_from(&s).context("serializing settings")?;
            merge(&mut base, over);
            s = base
                .try_into()
                .with_context(|| format!("applying config {}", path.display()))?;
        }
        Ok(s)
    }

    fn limits(&self) -> RunLimits {
        RunLimits {
            timeout_secs: self.timeout_secs,
            max_iterations: self.max_iters,
        }
    }

    fn campaign(&self) -> CampaignConfig {
        CampaignConfig {
            mode: self.mode,
            actions_min: self.actions_min,
            actions_max: self.actions_max,
            budget_secs: self.budget_secs,
            max_cases: self.max_cases,
            limits: self.limits(),
            k: self.k,
            cap: self.cap,
            x: self.x,
            threshold: self.threshold,
            n_max: self.n_max,
            seed: self.seed,
            parallelism: self.parallelism,
            dissect: self.dissect,
            dissect_k: self.dissect_k,
            artifacts_dir: Some(self.out_dir.join("cases")),
            synthesis: self.synthesis.clone(),
            ..CampaignConfig::default()
        }
    }

    fn lexicon(&self) -> Result<Lexicon> {
        match &self.lexicon {
            Some(p) => Lexicon::load(p).with_context(|| format!("loading lexicon {}", p.display())),
            None => Ok(builtin_lexicon()),
        }
    }
}

fn write_report(report: &CampaignReport, dir: &Path) -> Result<()> {
    report
        .check_invariants()
        .map_err(|e| anyhow::anyhow!("report accounting is inconsistent: {e}"))?;
    let files = emit_report(report, dir, &ReportFormat::ALL)?;
    let a = &report.aggregates;
    println!(
        "{}: {} cases, {} erroneous ({:.1}%), {} generation failures",
        report.agent,
        a.generated,
        a.erroneous,
        a.error_rate * 100.0,
        a.generation_failures
    );
    if let Some(s) = &report.sweep {
        match s.limit {
            Some(n) => println!("capability limit: {n} actions"),
            None => println!("capability limit: none up to {} actions", report.config.n_max),
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let s = Settings::resolve(&cli.common, &cli.command)?;
    match &cli.command {
        Command::Gen { count } => {
            if s.actions_min < 2 || s.actions_min > s.actions_max {
                bail!("action range must satisfy 2 <= --actions-min <= --actions-max");
            }
            let lexicon = s.lexicon()?;
            let dir = s.out_dir.join("cases");
            fs::create_dir_all(&dir)?;
            let span = s.actions_max.saturating_sub(s.actions_min) + 1;
            for i in 0..*count {
                let seed = derive_seed(s.seed, &[i as u64]);
                let n = s.actions_min + (derive_seed(seed, &[2]) % span as u64) as usize;
                let mut case = synthesize_case(&lexicon, n, s.mode, seed, &s.synthesis)
                    .with_context(|| format!("synthesizing case {i}"))?;
                case.id = format!("c{i:05}");
                let path = dir.join(format!("{}.case.json", case.id));
                fs::write(&path, case.to_json())?;
                println!("{} ({} actions, {}) -> {}", case.id, n, case.topic, path.display());
            }
        }
        Command::Run { .. } => {
            let lexicon = s.lexicon()?;
            let factory = agent_factory(&s.agent, &s.chat)?;
            let report = run_budgeted(&s.campaign(), &lexicon, factory.as_ref())?;
            write_report(&report, &s.out_dir)?;
        }
        Command::Sweep { .. } => {
            let lexicon = s.lexicon()?;
            let factory = agent_factory(&s.agent, &s.chat)?;
            let report = run_capability_sweep(&s.campaign(), &lexicon, factory.as_ref())?;
            write_report(&report, &s.out_dir)?;
        }
        Command::Dissect { case, .. } => {
            let lexicon = s.lexicon()?;
            let factory = agent_factory(&s.agent, &s.chat)?;
            let text = fs::read_to_string(case).with_context(|| format!("reading {}", case.display()))?;
            let case = QueryCase::from_json(&text).context("parsing case")?;
            case.check()
                .map_err(|e| anyhow::anyhow!("case {} is inconsistent: {e}", case.id))?;
            let mut agent = factory.create(&case, derive_seed(s.seed, &[case.seed]));
            let (_, verdict) = run_case(agent.as_mut(), &case, &s.limits(), factory.clock());
            if verdict.is_correct() {
                println!("{}: the agent plans this case correctly; nothing to dissect", case.id);
                return Ok(());
            }
            let cfg = DissectConfig {
                k: s.dissect_k,
                limits: s.limits(),
                seed: s.seed,
                ..DissectConfig::default()
            };
            let report = dissect(&case, factory.as_ref(), &lexicon, &cfg)?;
            fs::create_dir_all(&s.out_dir)?;
            let path = s.out_dir.join(format!("{}.dissect.json", case.id));
            fs::write(&path, report.to_json())?;
            println!("{}: {:?} ({} runs) -> {}", case.id, report.label, report.runs.len(), path.display());
        }
        Command::Report { input } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let report = CampaignReport::from_json(&text)?;
            write_report(&report, &s.out_dir)?;
        }
        Command::Lexicon { model } => {
            let mut chat = s.chat.clone();
            if let Some(m) = model {
                chat.model = m.clone();
            }
            let client = Arc::new(HttpChatClient::new(chat)?);
            let lexicon = regenerate_lexicon(client.as_ref())?;
            fs::create_dir_all(&s.out_dir)?;
            let path = s.out_dir.join("lexicon.json");
            fs::write(&path, lexicon.to_json())?;
            println!("{} topics -> {}", lexicon.topics.len(), path.display());
        }
    }
    Ok(())
}
