//! Testing campaigns: fixed-budget random testing, capability sweeps over the
//! action count, aggregation and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissect::{dissect, CauseLabel, DissectConfig};
use crate::harness::{run_case, AgentFactory, ErrorType, RunLimits};
use crate::lexicon::Lexicon;
use crate::model::{derive_seed, Mode};
use crate::solver::{reset_solver_stats, solver_stats};
use crate::synthesis::{synthesize_case, SynthesisConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub mode: Mode,
    /// Inclusive action-count range for budgeted runs.
    pub actions_min: usize,
    pub actions_max: usize,
    pub budget_secs: f64,
    /// Optional hard cap on cases for budgeted runs.
    pub max_cases: Option<usize>,
    pub limits: RunLimits,
    /// Sweep sampling factor.
    pub k: usize,
    /// Sweep per-level sample cap.
    pub cap: usize,
    /// Sweep binomial exponent: a level samples `min(cap, k * C(n, x))` cases.
    pub x: usize,
    pub threshold: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
    pub dissect: bool,
    pub dissect_k: usize,
    pub top_topics: usize,
    /// When set, each case, its log and its dissection are written here.
    pub artifacts_dir: Option<PathBuf>,
    pub synthesis: SynthesisConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            mode: Mode::Basic,
            actions_min: 3,
            actions_max: 5,
            budget_secs: 3600.0,
            max_cases: None,
            limits: RunLimits::default(),
            k: 20,
            cap: 300,
            x: 2,
            threshold: 0.2,
            n_min: 2,
            n_max: 9,
            seed: 0,
            parallelism: 0,
            dissect: false,
            dissect_k: 5,
            top_topics: 5,
            artifacts_dir: None,
            synthesis: SynthesisConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: &str| Err(CampaignError::Config(m.to_string()));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie strictly between 0 and 1");
        }
        if self.budget_secs.is_nan() || self.budget_secs <= 0.0 {
            return bad("budget must be positive");
        }
        if self.actions_min < 2 || self.actions_min > self.actions_max {
            return bad("action range must satisfy 2 <= min <= max");
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return bad("sweep range must satisfy 2 <= n_min <= n_max");
        }
        if self.limits.timeout_secs == 0 || self.limits.max_iterations == 0 {
            return bad("per-case limits must be positive");
        }
        if self.k == 0 || self.cap == 0 || self.x == 0 {
            return bad("k, cap and x must be positive");
        }
        if self.max_cases == Some(0) {
            return bad("max_cases must be positive when set");
        }
        self.synthesis
            .validate()
            .map_err(|e| CampaignError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseStatus {
    Correct,
    Erroneous,
    GenerationFailure,
}

/// One row of a campaign: flat so it maps onto a CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub index: usize,
    pub case_id: String,
    pub seed: u64,
    pub mode: Mode,
    pub actions: usize,
    pub topic: String,
    pub status: CaseStatus,
    pub error_type: Option<ErrorType>,
    pub violated: usize,
    pub lost: usize,
    pub cause: Option<CauseLabel>,
    pub dissected: bool,
    pub iterations: usize,
    pub synthesis_ms: f64,
    pub solver_ms: f64,
    pub solver_calls: u64,
    pub agent_ms: f64,
    pub dissect_ms: f64,
    /// Generation or dissection failure message.
    pub detail: String,
}

const CSV_COLUMNS: [&str; 19] = [
    "index",
    "case_id",
    "seed",
    "mode",
    "actions",
    "topic",
    "status",
    "error_type",
    "violated",
    "lost",
    "cause",
    "dissected",
    "iterations",
    "synthesis_ms",
    "solver_ms",
    "solver_calls",
    "agent_ms",
    "dissect_ms",
    "detail",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub cases: usize,
    pub correct: usize,
    pub erroneous: usize,
    pub generation_failures: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicStats {
    pub topic: String,
    pub errors: usize,
    pub cases: usize,
}

/// Summed over cases. Under parallelism the sums may exceed wall time by up to
/// the worker count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub synthesis_ms: f64,
    pub solver_ms: f64,
    pub solver_calls: u64,
    pub agent_ms: f64,
    pub dissect_ms: f64,
    pub mean_synthesis_ms: f64,
    /// Solver time as a fraction of synthesis time.
    pub solver_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub generated: usize,
    pub correct: usize,
    pub erroneous: usize,
    pub generation_failures: usize,
    /// Erroneous over evaluated (correct plus erroneous) cases.
    pub error_rate: f64,
    pub per_level: BTreeMap<usize, LevelStats>,
    pub error_types: BTreeMap<ErrorType, usize>,
    /// Present when dissection ran.
    pub root_causes: Option<BTreeMap<CauseLabel, usize>>,
    /// Erroneous cases whose dissection could not finish.
    pub unattributed: usize,
    pub top_topics: Vec<TopicStats>,
    pub timing: Timing,
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Aggregates {
    pub fn from_cases(cases: &[CaseRecord], dissection: bool, top_k: usize) -> Self {
        let count = |s: CaseStatus| cases.iter().filter(|c| c.status == s).count();
        let correct = count(CaseStatus::Correct);
        let erroneous = count(CaseStatus::Erroneous);
        let generation_failures = count(CaseStatus::GenerationFailure);

        let mut per_level: BTreeMap<usize, LevelStats> = BTreeMap::new();
        for c in cases {
            let l = per_level.entry(c.actions).or_default();
            l.cases += 1;
            match c.status {
                CaseStatus::Correct => l.correct += 1,
                CaseStatus::Erroneous => l.erroneous += 1,
                CaseStatus::GenerationFailure => l.generation_failures += 1,
            }
        }
        for l in per_level.values_mut() {
            l.success_rate = rate(l.correct, l.correct + l.erroneous);
        }

        let mut error_types: BTreeMap<ErrorType, usize> =
            ErrorType::ALL.iter().map(|&e| (e, 0)).collect();
        for e in cases.iter().filter_map(|c| c.error_type) {
            *error_types.entry(e).or_default() += 1;
        }

        let mut unattributed = 0;
        let root_causes = dissection.then(|| {
            let mut m: BTreeMap<CauseLabel, usize> =
                CauseLabel::ALL.iter().map(|&l| (l, 0)).collect();
            for c in cases.iter().filter(|c| c.status == CaseStatus::Erroneous) {
                match c.cause {
                    Some(l) => *m.entry(l).or_default() += 1,
                    None => unattributed += 1,
                }
            }
            m
        });

        let mut topics: BTreeMap<&str, TopicStats> = BTreeMap::new();
        for c in cases.iter().filter(|c| c.status != CaseStatus::GenerationFailure) {
            let t = topics.entry(&c.topic).or_insert_with(|| TopicStats {
                topic: c.topic.clone(),
                errors: 0,
                cases: 0,
            });
            t.cases += 1;
            if c.status == CaseStatus::Erroneous {
                t.errors += 1;
            }
        }
        let mut top_topics: Vec<TopicStats> =
            topics.into_values().filter(|t| t.errors > 0).collect();
        top_topics.sort_by(|a, b| {
            b.errors
                .cmp(&a.errors)
                .then(rate(b.errors, b.cases).total_cmp(&rate(a.errors, a.cases)))
                .then(a.topic.cmp(&b.topic))
        });
        top_topics.truncate(top_k);

        let mut timing = Timing::default();
        for c in cases {
            timing.synthesis_ms += c.synthesis_ms;
            timing.solver_ms += c.solver_ms;
            timing.solver_calls += c.solver_calls;
            timing.agent_ms += c.agent_ms;
            timing.dissect_ms += c.dissect_ms;
        }
        if !cases.is_empty() {
            timing.mean_synthesis_ms = timing.synthesis_ms / cases.len() as f64;
        }
        if timing.synthesis_ms > 0.0 {
            timing.solver_share = timing.solver_ms / timing.synthesis_ms;
        }

        Aggregates {
            generated: cases.len(),
            correct,
            erroneous,
            generation_failures,
            error_rate: rate(erroneous, correct + erroneous),
            per_level,
            error_types,
            root_causes,
            unattributed,
            top_topics,
            timing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignKind {
    Budgeted,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLevel {
    pub n: usize,
    pub samples: usize,
    pub stats: LevelStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub levels: Vec<SweepLevel>,
    /// First level whose success rate fell below the threshold.
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub kind: CampaignKind,
    pub agent: String,
    pub config: CampaignConfig,
    pub workers: usize,
    pub wall_ms: f64,
    pub stopped_by: String,
    pub aggregates: Aggregates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
    pub cases: Vec<CaseRecord>,
}

impl CampaignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Accounting identities every report must satisfy.
    pub fn check_invariants(&self) -> Result<(), String> {
        let a = &self.aggregates;
        if a.generated != a.correct + a.erroneous + a.generation_failures {
            return Err("generated != correct + erroneous + generation failures".into());
        }
        if a.generated != self.cases.len() {
            return Err("aggregate count differs from the case list".into());
        }
        if a.error_types.values().sum::<usize>() != a.erroneous {
            return Err("error types do not sum to the erroneous count".into());
        }
        if let Some(rc) = &a.root_causes {
            if rc.values().sum::<usize>() + a.unattributed != a.erroneous {
                return Err("root causes do not sum to the erroneous count".into());
            }
        }
        let t = &a.timing;
        let spent = t.synthesis_ms + t.agent_ms + t.dissect_ms;
        if spent > self.wall_ms * self.workers.max(1) as f64 + 1.0 {
            return Err(format!(
                "timing components {spent:.1} ms exceed wall time {:.1} ms x {} workers",
                self.wall_ms, self.workers
            ));
        }
        if t.solver_ms > t.synthesis_ms + 1e-6 {
            return Err("solver time exceeds synthesis time".into());
        }
        if a.per_level.values().map(|l| l.cases).sum::<usize>() != a.generated {
            return Err("per-level counts do not sum to the case count".into());
        }
        Ok(())
    }

    /// The report with every wall-clock measurement zeroed. Simulated
    /// campaigns with the same configuration produce equal fingerprints.
    pub fn fingerprint(&self) -> CampaignReport {
        let mut r = self.clone();
        r.wall_ms = 0.0;
        r.workers = 0;
        r.config.parallelism = 0;
        r.aggregates.timing = Timing {
            solver_calls: r.aggregates.timing.solver_calls,
            ..Timing::default()
        };
        for c in &mut r.cases {
            c.synthesis_ms = 0.0;
            c.solver_ms = 0.0;
            c.agent_ms = 0.0;
            c.dissect_ms = 0.0;
        }
        r
    }
}

struct Runner<'a> {
    config: &'a CampaignConfig,
    lexicon: &'a Lexicon,
    factory: &'a dyn AgentFactory,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

impl Runner<'_> {
    fn run_one(&self, index: usize, n: usize) -> CaseRecord {
        let cfg = self.config;
        let seed = derive_seed(cfg.seed, &[index as u64]);
        let mut rec = CaseRecord {
            index,
            case_id: format!("c{index:05}"),
            seed,
            mode: cfg.mode,
            actions: n,
            topic: String::new(),
            status: CaseStatus::GenerationFailure,
            error_type: None,
            violated: 0,
            lost: 0,
            cause: None,
            dissected: false,
            iterations: 0,
            synthesis_ms: 0.0,
            solver_ms: 0.0,
            solver_calls: 0,
            agent_ms: 0.0,
            dissect_ms: 0.0,
            detail: String::new(),
        };
        reset_solver_stats();
        let t = Instant::now();
        let synthesized = synthesize_case(self.lexicon, n, cfg.mode, seed, &cfg.synthesis);
        rec.synthesis_ms = ms(t);
        let stats = solver_stats();
        rec.solver_ms = stats.time.as_secs_f64() * 1000.0;
        rec.solver_calls = stats.calls;
        let mut case = match synthesized {
            Ok(c) => c,
            Err(e) => {
                rec.detail = e.to_string();
                return rec;
            }
        };
        case.id = rec.case_id.clone();
        rec.topic = case.topic.clone();

        let mut agent = self.factory.create(&case, derive_seed(seed, &[1]));
        let t = Instant::now();
        let (log, verdict) = run_case(agent.as_mut(), &case, &cfg.limits, self.factory.clock());
        rec.agent_ms = ms(t);
        rec.iterations = log.iterations;
        rec.status = if verdict.is_correct() {
            CaseStatus::Correct
        } else {
            CaseStatus::Erroneous
        };
        rec.error_type = verdict.error_type;
        rec.violated = verdict.violated.len();
        rec.lost = verdict.lost.len();

        let mut report = None;
        if cfg.dissect && !verdict.is_correct() {
            let dcfg = DissectConfig {
                k: cfg.dissect_k,
                limits: cfg.limits,
                seed,
                ..DissectConfig::default()
            };
            let t = Instant::now();
            match dissect(&case, self.factory, self.lexicon, &dcfg) {
                Ok(r) => {
                    rec.cause = Some(r.label);
                    report = Some(r);
                }
                Err(e) => rec.detail = e.to_string(),
            }
            rec.dissect_ms = ms(t);
            rec.dissected = true;
        }

        if let Some(dir) = &cfg.artifacts_dir {
            let write = || -> std::io::Result<()> {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("{}.case.json", case.id)), case.to_json())?;
                fs::write(dir.join(format!("{}.log.jsonl", case.id)), log.to_jsonl())?;
                fs::write(
                    dir.join(format!("{}.verdict.json", case.id)),
                    serde_json::to_string_pretty(&verdict).expect("verdicts serialize"),
                )?;
                if let Some(r) = &report {
                    fs::write(dir.join(format!("{}.dissect.json", case.id)), r.to_json())?;
                }
                Ok(())
            };
            if let Err(e) = write() {
                if !rec.detail.is_empty() {
                    rec.detail.push_str("; ");
                }
                rec.detail.push_str(&format!("artifact write failed: {e}"));
            }
        }
        rec
    }

    fn batch(&self, pool: &rayon::ThreadPool, jobs: &[(usize, usize)]) -> Vec<CaseRecord> {
        pool.install(|| jobs.par_iter().map(|&(i, n)| self.run_one(i, n)).collect())
    }
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool, CampaignError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| CampaignError::Config(e.to_string()))
}

/// Random testing until the time budget (or `max_cases`) runs out. Each case
/// draws its action count uniformly from the configured range and gets a fresh
/// agent.
pub fn run_budgeted(
    config: &CampaignConfig,
    lexicon: &Lexicon,
    factory: &dyn AgentFactory,
) -> Result<CampaignReport, CampaignError> {
    config.validate()?;
    let pool = pool(config.parallelism)?;
    let workers = pool.current_num_threads();
    let runner = Runner {
        config,
        lexicon,
        factory,
    };
    let started = Instant::now();
    let mut cases: Vec<CaseRecord> = Vec::new();
    let stopped_by = loop {
        if started.elapsed().as_secs_f64() >= config.budget_secs {
            break "budget";
        }
        let remaining = config.max_cases.map_or(usize::MAX, |m| m - cases.len());
        if remaining == 0 {
            break "max_cases";
        }
        let jobs: Vec<(usize, usize)> = (cases.len()..cases.len() + workers.min(remaining))
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[i as u64, 0]));
                (i, rng.gen_range(config.actions_min..=config.actions_max))
            })
            .collect();
        cases.extend(runner.batch(&pool, &jobs));
    };
    Ok(CampaignReport {
        kind: CampaignKind::Budgeted,
        agent: factory.label(),
        config: config.clone(),
        workers,
        wall_ms: ms(started),
        stopped_by: stopped_by.to_string(),
        aggregates: Aggregates::from_cases(&cases, config.dissect, config.top_topics),
        sweep: None,
        cases,
    })
}

/// `C(n, x)`, saturating.
pub fn binomial(n: usize, x: usize) -> usize {
    if x > n {
        return 0;
    }
    let x = x.min(n - x);
    let mut acc: u128 = 1;
    for i in 0..x {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

/// Cases sampled at action count `n`: `min(cap, k * C(n, x))`.
pub fn sweep_samples(n: usize, k: usize, x: usize, cap: usize) -> usize {
    cap.min(k.saturating_mul(binomial(n, x)))
}

/// Raises the action count from `n_min` until the success rate drops below the
/// threshold or `n_max` is done.
pub fn run_capability_sweep(
    config: &CampaignConfig,
    lexicon: &Lexicon,
    factory: &dyn AgentFactory,
) -> Result<CampaignReport, CampaignError> {
    config.validate()?;
    let pool = pool(config.parallelism)?;
    let workers = pool.current_num_threads();
    let runner = Runner {
        config,
        lexicon,
        factory,
    };
    let started = Instant::now();
    let mut cases: Vec<CaseRecord> = Vec::new();
    let mut levels = Vec::new();
    let mut limit = None;
    for n in config.n_min..=config.n_max {
        let samples = sweep_samples(n, config.k, config.x, config.cap);
        let jobs: Vec<(usize, usize)> = (cases.len()..cases.len() + samples).map(|i| (i, n)).collect();
        let batch = runner.batch(&pool, &jobs);
        let stats = Aggregates::from_cases(&batch, false, 0)
            .per_level
            .remove(&n)
            .unwrap_or_default();
        cases.extend(batch);
        levels.push(SweepLevel { n, samples, stats });
        if stats.correct + stats.erroneous > 0 && stats.success_rate < config.threshold {
            limit = Some(n);
            break;
        }
    }
    Ok(CampaignReport {
        kind: CampaignKind::Sweep,
        agent: factory.label(),
        config: config.clone(),
        workers,
        wall_ms: ms(started),
        stopped_by: if limit.is_some() { "threshold" } else { "n_max" }.to_string(),
        aggregates: Aggregates::from_cases(&cases, config.dissect, config.top_topics),
        sweep: Some(SweepSummary { levels, limit }),
        cases,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "cases.csv",
            ReportFormat::Markdown => "report.md",
        }
    }
}

/// Writes the report into `dir` in each requested format.
pub fn emit_report(
    report: &CampaignReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, CampaignError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &f in formats {
        let path = dir.join(f.file_name());
        match f {
            ReportFormat::Json => fs::write(&path, report.to_json())?,
            ReportFormat::Csv => write_csv(&report.cases, &path)?,
            ReportFormat::Markdown => fs::write(&path, render_markdown(report))?,
        }
        written.push(path);
    }
    Ok(written)
}

fn write_csv(cases: &[CaseRecord], path: &Path) -> Result<(), CampaignError> {
    // Headers are written by hand so an empty campaign still gets a header row.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for c in cases {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CaseRecord>, CampaignError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(CampaignError::Config(format!(
            "unexpected CSV header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(r.deserialize().collect::<Result<Vec<CaseRecord>, _>>()?)
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

pub fn render_markdown(report: &CampaignReport) -> String {
    let a = &report.aggregates;
    let evaluated = a.correct + a.erroneous;
    let mut md = String::new();
    let kind = match report.kind {
        CampaignKind::Budgeted => "budgeted run",
        CampaignKind::Sweep => "capability sweep",
    };
    let _ = writeln!(md, "# Campaign report: {kind}\n");
    let _ = writeln!(
        md,
        "Agent `{}`, mode {}, seed {}, stopped by {}, wall time {:.1} s on {} workers.\n",
        report.agent,
        report.config.mode,
        report.config.seed,
        report.stopped_by,
        report.wall_ms / 1000.0,
        report.workers
    );

    let _ = writeln!(md, "## Summary\n");
    let _ = writeln!(
        md,
        "| Agent | Cases | Generation failures | Erroneous | Error rate | Synthesis time (ms/case) | Solver calls | Solver share |"
    );
    let _ = writeln!(md, "|---|---:|---:|---:|---:|---:|---:|---:|");
    let _ = writeln!(
        md,
        "| {} | {} | {} | {} | {} | {:.2} | {} | {} |\n",
        report.agent,
        a.generated,
        a.generation_failures,
        a.erroneous,
        pct(a.error_rate),
        a.timing.mean_synthesis_ms,
        a.timing.solver_calls,
        pct(a.timing.solver_share)
    );

    let _ = writeln!(md, "## Success rate by action count\n");
    let _ = writeln!(md, "| Actions | Cases | Correct | Erroneous | Success rate |");
    let _ = writeln!(md, "|---:|---:|---:|---:|---:|");
    for (n, l) in &a.per_level {
        let _ = writeln!(
            md,
            "| {n} | {} | {} | {} | {} |",
            l.cases,
            l.correct,
            l.erroneous,
            pct(l.success_rate)
        );
    }
    if let Some(s) = &report.sweep {
        let limit = s.limit.map_or("none".to_string(), |n| n.to_string());
        let _ = writeln!(
            md,
            "\nCapability limit (first level below {}): {limit}.",
            pct(report.config.threshold)
        );
    }

    let _ = writeln!(md, "\n## Error types\n");
    let _ = writeln!(md, "| Error type | Cases | Share of erroneous | Share of all |");
    let _ = writeln!(md, "|---|---:|---:|---:|");
    for (e, n) in &a.error_types {
        let _ = writeln!(
            md,
            "| {} | {n} | {} | {} |",
            e.label(),
            pct(rate(*n, a.erroneous)),
            pct(rate(*n, evaluated))
        );
    }

    if let Some(rc) = &a.root_causes {
        let _ = writeln!(md, "\n## Root causes\n");
        let _ = writeln!(md, "| Cause | Cases | Share of erroneous |");
        let _ = writeln!(md, "|---|---:|---:|");
        for (c, n) in rc {
            let _ = writeln!(md, "| {c:?} | {n} | {} |", pct(rate(*n, a.erroneous)));
        }
        if a.unattributed > 0 {
            let _ = writeln!(
                md,
                "| (unattributed) | {} | {} |",
                a.unattributed,
                pct(rate(a.unattributed, a.erroneous))
            );
        }
    }

    let _ = writeln!(md, "\n## Most error-prone topics\n");
    let _ = writeln!(md, "| Rank | Topic | Errors | Cases |");
    let _ = writeln!(md, "|---:|---|---:|---:|");
    for (i, t) in a.top_topics.iter().enumerate() {
        let _ = writeln!(md, "| {} | {} | {} | {} |", i + 1, t.topic, t.errors, t.cases);
    }

    let t = &a.timing;
    let _ = writeln!(md, "\n## Timing\n");
    let _ = writeln!(md, "| Component | Total (ms) |");
    let _ = writeln!(md, "|---|---:|");
    let _ = writeln!(md, "| Synthesis | {:.1} |", t.synthesis_ms);
    let _ = writeln!(md, "| of which solver | {:.1} |", t.solver_ms);
    let _ = writeln!(md, "| Agent runs | {:.1} |", t.agent_ms);
    let _ = writeln!(md, "| Dissection | {:.1} |", t.dissect_ms);
    md
}
