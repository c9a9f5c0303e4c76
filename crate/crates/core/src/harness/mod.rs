//! Mock tools, the agent loop, execution logs and verdicts.

mod http;
mod react;
mod sim;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::endpoint::EndpointError;
use crate::model::{format_hour, ActionId, Hour, Mode};
use crate::solver::{completable, evaluate, Constraint, PlanAssignment, ScheduledCall};
use crate::synthesis::{QueryCase, DEFAULT_HORIZON};

pub use http::{ChatConfig, HttpAgentFactory, HttpChatAdapter, HttpChatClient, RateLimiter, API_KEY_ENV};
pub use react::{parse_reply, ReactAdapter, ReactAgentFactory, REACT_TEMPLATE};
pub use sim::{ConditionalSimFactory, SimAgentFactory, SimProfile, SimulatedAgent, FABRICATED_TOOL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentSpecError {
    #[error("agent spec `{0}` must look like http:<model>, react:<model> or sim:<profile>")]
    Syntax(String),
    #[error(transparent)]
    Profile(#[from] sim::ParseProfileError),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
}

/// Builds a factory from `http:<model>`, `react:<model>` or `sim:<profile>`.
/// HTTP-backed agents take everything but the model from `chat`.
pub fn agent_factory(spec: &str, chat: &ChatConfig) -> Result<Box<dyn AgentFactory>, AgentSpecError> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| AgentSpecError::Syntax(spec.to_string()))?;
    let with_model = || ChatConfig {
        model: if rest.is_empty() { chat.model.clone() } else { rest.to_string() },
        ..chat.clone()
    };
    match kind {
        "sim" => Ok(Box::new(SimAgentFactory::new(rest.parse()?))),
        "http" => {
            let client = std::sync::Arc::new(HttpChatClient::new(with_model())?);
            Ok(Box::new(HttpAgentFactory::new(client)))
        }
        "react" => {
            let cfg = with_model();
            let label = format!("react:{}", cfg.model);
            let client = std::sync::Arc::new(HttpChatClient::new(cfg)?);
            Ok(Box::new(ReactAgentFactory::new(label, client)))
        }
        _ => Err(AgentSpecError::Syntax(spec.to_string())),
    }
}

/// Agent-facing description of one mock tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolManifest {
    pub name: String,
    pub description: String,
    /// JSON schema of the arguments.
    pub parameters: Value,
}

/// A mock tool: the manifest plus the hidden data the harness keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockTool {
    pub manifest: ToolManifest,
    pub action: ActionId,
    pub phrase: String,
    pub duration: Option<Hour>,
}

pub const START_TIME_PARAM: &str = "start_time";

/// One mock tool per action. Extended tools take a start time and report the duration.
pub fn build_tools(case: &QueryCase) -> Vec<MockTool> {
    case.actions
        .iter()
        .map(|a| {
            let parameters = match case.mode {
                Mode::Basic => json!({"type": "object", "properties": {}}),
                Mode::Extended => json!({
                    "type": "object",
                    "properties": {
                        START_TIME_PARAM: {
                            "type": "string",
                            "description": "Start time of the task on a 24-hour clock, whole hours only, e.g. \"09:00\"."
                        }
                    },
                    "required": [START_TIME_PARAM]
                }),
            };
            MockTool {
                manifest: ToolManifest {
                    name: a.tool_name.clone(),
                    description: a.description.clone(),
                    parameters,
                },
                action: a.id,
                phrase: a.phrase.clone(),
                duration: case.hidden_durations.get(&a.id).copied(),
            }
        })
        .collect()
}

/// Parses `"09:00"`, `"9"`, `9` or `"9:00"` into a whole hour.
pub fn parse_start_time(v: &Value) -> Option<Hour> {
    let h = match v {
        Value::Number(n) => n.as_i64()?,
        Value::String(s) => {
            let s = s.trim();
            match s.split_once(':') {
                Some((h, m)) => {
                    if m.trim().parse::<u32>().ok()? != 0 {
                        return None;
                    }
                    h.trim().parse::<i64>().ok()?
                }
                None => s.parse::<i64>().ok()?,
            }
        }
        _ => return None,
    };
    (0..=24).contains(&h).then_some(h as Hour)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLimits {
    pub timeout_secs: u64,
    pub max_iterations: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            timeout_secs: 180,
            max_iterations: 50,
        }
    }
}

/// Time source for log timestamps. Simulated runs use [`Clock::Frozen`] so
/// logs are byte-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    Wall,
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    /// Call id assigned by the agent's wire protocol, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    pub args: Value,
}

/// What an agent does next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum AgentStep {
    ToolCall(ToolCall),
    FinalAnswer { text: String },
    Halt { reason: String },
    /// A turn without any action, such as a thought-only completion.
    Continue,
    /// An action the agent attempted but could not express.
    Malformed { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum TranscriptEntry {
    Agent(AgentStep),
    ToolResult {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        call_id: Option<String>,
        name: String,
        content: String,
    },
}

/// Everything an adapter may look at. Carries no action ids or durations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub query: String,
    pub tools: Vec<ToolManifest>,
    pub entries: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdapterError {
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error("adapter protocol violation: {0}")]
    Protocol(String),
}

pub trait AgentAdapter: Send {
    fn next_step(&mut self, transcript: &Transcript) -> Result<AgentStep, AdapterError>;
}

/// Builds one fresh adapter per run.
pub trait AgentFactory: Send + Sync {
    fn label(&self) -> String;
    fn create(&self, case: &QueryCase, run_seed: u64) -> Box<dyn AgentAdapter>;
    /// Simulated agents use a frozen clock so their logs are reproducible.
    fn clock(&self) -> Clock {
        Clock::Wall
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallFlag {
    UnknownTool,
    MalformedArgs,
    MalformedStep,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: usize,
    pub tool: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionId>,
    pub args: Value,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Hour>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Hour>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<CallFlag>,
    pub elapsed_ms: u64,
}

impl LogRecord {
    /// The mock tool actually ran for this record.
    pub fn executed(&self) -> bool {
        self.action.is_some()
            && !matches!(
                self.flag,
                Some(CallFlag::UnknownTool | CallFlag::MalformedArgs | CallFlag::MalformedStep)
            )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Finished { answer: String },
    Halted { reason: String },
    TimedOut,
    IterationCapHit,
    ProtocolError {
        detail: String,
        /// The endpoint itself failed (network, credentials, status), not the agent.
        #[serde(default)]
        transport: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub case_id: String,
    pub records: Vec<LogRecord>,
    pub outcome: Outcome,
    pub iterations: usize,
    pub elapsed_ms: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine {
    Call(LogRecord),
    End {
        case_id: String,
        #[serde(flatten)]
        outcome: Outcome,
        iterations: usize,
        elapsed_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogError {
    #[error("log line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("log has no terminal outcome line")]
    MissingOutcome,
}

impl ExecutionLog {
    /// JSON lines: one call per line, the last line is the outcome.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&LogLine::Call(r.clone())).expect("serializes"));
            out.push('\n');
        }
        let end = LogLine::End {
            case_id: self.case_id.clone(),
            outcome: self.outcome.clone(),
            iterations: self.iterations,
            elapsed_ms: self.elapsed_ms,
        };
        out.push_str(&serde_json::to_string(&end).expect("serializes"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LogError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: LogLine = serde_json::from_str(line).map_err(|e| LogError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            match parsed {
                LogLine::Call(r) => records.push(r),
                LogLine::End {
                    case_id,
                    outcome,
                    iterations,
                    elapsed_ms,
                } => {
                    return Ok(ExecutionLog {
                        case_id,
                        records,
                        outcome,
                        iterations,
                        elapsed_ms,
                    })
                }
            }
        }
        Err(LogError::MissingOutcome)
    }

    /// Tool names in invocation order, unknown and malformed calls included.
    pub fn tool_sequence(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.tool.as_str()).collect()
    }
}

/// Runs `agent` on `case` until it finishes, halts or hits a limit.
pub fn run_case(
    agent: &mut dyn AgentAdapter,
    case: &QueryCase,
    limits: &RunLimits,
    clock: Clock,
) -> (ExecutionLog, Verdict) {
    let tools = build_tools(case);
    let by_name: BTreeMap<&str, &MockTool> =
        tools.iter().map(|t| (t.manifest.name.as_str(), t)).collect();
    let mut transcript = Transcript {
        query: case.text.clone(),
        tools: tools.iter().map(|t| t.manifest.clone()).collect(),
        entries: Vec::new(),
    };
    let started = Instant::now();
    let timeout = Duration::from_secs(limits.timeout_secs);
    let stamp = |t: Instant| match clock {
        Clock::Wall => t.elapsed().as_millis() as u64,
        Clock::Frozen => 0,
    };
    let mut records: Vec<LogRecord> = Vec::new();
    let mut invoked: BTreeSet<ActionId> = BTreeSet::new();
    let mut iterations = 0;
    let outcome = loop {
        if started.elapsed() >= timeout {
            break Outcome::TimedOut;
        }
        if iterations >= limits.max_iterations {
            break Outcome::IterationCapHit;
        }
        iterations += 1;
        let step = match agent.next_step(&transcript) {
            Ok(s) => s,
            Err(e) => {
                let transport = matches!(&e, AdapterError::Endpoint(ep) if ep.is_transport());
                break Outcome::ProtocolError {
                    detail: e.to_string(),
                    transport,
                };
            }
        };
        if started.elapsed() >= timeout {
            break Outcome::TimedOut;
        }
        transcript.entries.push(TranscriptEntry::Agent(step.clone()));
        match step {
            AgentStep::ToolCall(call) => {
                let mut rec = LogRecord {
                    seq: records.len() + 1,
                    tool: call.name.clone(),
                    action: None,
                    args: call.args.clone(),
                    message: String::new(),
                    start: None,
                    end: None,
                    flag: None,
                    elapsed_ms: 0,
                };
                match by_name.get(call.name.as_str()) {
                    None => {
                        rec.flag = Some(CallFlag::UnknownTool);
                        rec.message = format!("Error: there is no tool named \"{}\".", call.name);
                    }
                    Some(tool) => {
                        rec.action = Some(tool.action);
                        execute(tool, &call.args, case.mode, &mut rec);
                        if rec.flag.is_none() && !invoked.insert(tool.action) {
                            rec.flag = Some(CallFlag::Duplicate);
                        }
                    }
                }
                rec.elapsed_ms = stamp(started);
                transcript.entries.push(TranscriptEntry::ToolResult {
                    call_id: call.id.clone(),
                    name: call.name,
                    content: rec.message.clone(),
                });
                records.push(rec);
            }
            AgentStep::Malformed { detail } => {
                records.push(LogRecord {
                    seq: records.len() + 1,
                    tool: String::new(),
                    action: None,
                    args: Value::Null,
                    message: format!("Error: could not understand the action ({detail})."),
                    start: None,
                    end: None,
                    flag: Some(CallFlag::MalformedStep),
                    elapsed_ms: stamp(started),
                });
                transcript.entries.push(TranscriptEntry::ToolResult {
                    call_id: None,
                    name: String::new(),
                    content: format!("Error: could not understand the action ({detail})."),
                });
            }
            AgentStep::Continue => {}
            AgentStep::FinalAnswer { text } => break Outcome::Finished { answer: text },
            AgentStep::Halt { reason } => break Outcome::Halted { reason },
        }
    };
    let log = ExecutionLog {
        case_id: case.id.clone(),
        records,
        outcome,
        iterations,
        elapsed_ms: stamp(started),
    };
    let verdict = classify(case, &log);
    (log, verdict)
}

fn execute(tool: &MockTool, args: &Value, mode: Mode, rec: &mut LogRecord) {
    match mode {
        Mode::Basic => {
            rec.message = format!("Done: {} has been completed successfully.", tool.phrase);
        }
        Mode::Extended => {
            let start = args.get(START_TIME_PARAM).and_then(parse_start_time);
            let Some(start) = start else {
                rec.flag = Some(CallFlag::MalformedArgs);
                rec.message = format!(
                    "Error: {START_TIME_PARAM} must be a whole hour on a 24-hour clock, such as \"09:00\"."
                );
                return;
            };
            let d = tool.duration.unwrap_or(1);
            let end = start + d;
            rec.start = Some(start);
            rec.end = Some(end);
            let unit = if d == 1 { "hour" } else { "hours" };
            rec.message = format!(
                "Done: {} started at {} and took {d} {unit}, finishing at {}.",
                tool.phrase,
                format_hour(start),
                format_hour(end)
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Correct,
    Erroneous,
}

/// Failure classes, most severe first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    Timeout,
    ActError,
    ActionLost,
    ParameterError,
    OrderError,
}

impl ErrorType {
    pub const ALL: [ErrorType; 5] = [
        ErrorType::Timeout,
        ErrorType::ActError,
        ErrorType::ActionLost,
        ErrorType::ParameterError,
        ErrorType::OrderError,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ErrorType::Timeout => "Timeout",
            ErrorType::ActError => "Act Error",
            ErrorType::ActionLost => "Action Lost",
            ErrorType::ParameterError => "Parameter Error",
            ErrorType::OrderError => "Order Error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<ErrorType>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violated: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<PlanAssignment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lost: Vec<ActionId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub duplicates: Vec<ActionId>,
    /// Set when the agent halted early: whether the halt was justified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justified_halt: Option<bool>,
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        self.status == Status::Correct
    }

    fn correct(assignment: Option<PlanAssignment>) -> Self {
        Verdict {
            status: Status::Correct,
            error_type: None,
            violated: Vec::new(),
            assignment,
            lost: Vec::new(),
            duplicates: Vec::new(),
            justified_halt: None,
        }
    }

    fn erroneous(error_type: ErrorType) -> Self {
        Verdict {
            status: Status::Erroneous,
            error_type: Some(error_type),
            ..Verdict::correct(None)
        }
    }
}

fn is_parameter_violation(c: &Constraint) -> bool {
    matches!(c, Constraint::MonotoneSequence | Constraint::HorizonBound { .. })
}

/// Pure verdict computation from a finished log.
///
/// Precedence: Timeout, ActError, ActionLost, ParameterError, OrderError.
/// A halt is correct when the executed prefix breaks nothing and cannot be
/// completed under the hidden durations; an unjustified halt loses actions.
pub fn classify(case: &QueryCase, log: &ExecutionLog) -> Verdict {
    let executed: Vec<&LogRecord> = log.records.iter().filter(|r| r.executed()).collect();
    let sequence: Vec<ActionId> = executed.iter().filter_map(|r| r.action).collect();
    let assignment = match case.mode {
        Mode::Basic => PlanAssignment::from_sequence(&sequence),
        Mode::Extended => PlanAssignment::from_schedule(
            executed
                .iter()
                .map(|r| ScheduledCall {
                    action: r.action.expect("executed records carry an action"),
                    start: r.start.expect("executed extended calls carry a start"),
                    end: r.end.expect("executed extended calls carry an end"),
                })
                .collect(),
        ),
    };
    let duplicates: Vec<ActionId> = log
        .records
        .iter()
        .filter(|r| r.flag == Some(CallFlag::Duplicate))
        .filter_map(|r| r.action)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let lost: Vec<ActionId> = case
        .ids()
        .into_iter()
        .filter(|a| !assignment.order.contains_key(a))
        .collect();
    let with = |mut v: Verdict| {
        v.assignment = Some(assignment.clone());
        v.duplicates = duplicates.clone();
        v.lost = lost.clone();
        v
    };

    if matches!(log.outcome, Outcome::TimedOut | Outcome::IterationCapHit) {
        return with(Verdict::erroneous(ErrorType::Timeout));
    }
    let act_error = matches!(log.outcome, Outcome::ProtocolError { .. })
        || log.records.iter().any(|r| {
            matches!(
                r.flag,
                Some(CallFlag::UnknownTool | CallFlag::MalformedArgs | CallFlag::MalformedStep)
            )
        });
    if act_error {
        return with(Verdict::erroneous(ErrorType::ActError));
    }

    if let Outcome::Halted { .. } = log.outcome {
        let prefix_violations = prefix_violations(case, &assignment);
        if !prefix_violations.is_empty() {
            let mut v = violation_verdict(prefix_violations);
            v.justified_halt = Some(false);
            return with(v);
        }
        let calls = assignment.schedule.clone().unwrap_or_default();
        let horizon = case.horizon.unwrap_or(DEFAULT_HORIZON);
        let first_calls: Vec<ScheduledCall> = {
            let mut seen = BTreeSet::new();
            calls.into_iter().filter(|c| seen.insert(c.action)).collect()
        };
        let justified = case.mode == Mode::Extended
            && !completable(&case.constraints, &first_calls, &case.hidden_durations, horizon);
        let mut v = if justified {
            Verdict::correct(None)
        } else if lost.is_empty() {
            // Every action ran and nothing broke; the halt came after a complete pass.
            Verdict::correct(None)
        } else {
            Verdict::erroneous(ErrorType::ActionLost)
        };
        v.justified_halt = Some(justified);
        return with(v);
    }

    if !lost.is_empty() {
        return with(Verdict::erroneous(ErrorType::ActionLost));
    }
    let violated = evaluate(&case.constraints, &assignment).expect("assignment is complete");
    if violated.is_empty() {
        with(Verdict::correct(None))
    } else {
        with(violation_verdict(violated))
    }
}

fn violation_verdict(violated: Vec<Constraint>) -> Verdict {
    let kind = if violated.iter().any(is_parameter_violation) {
        ErrorType::ParameterError
    } else {
        ErrorType::OrderError
    };
    Verdict {
        violated,
        ..Verdict::erroneous(kind)
    }
}

/// Violations that involve only executed actions.
fn prefix_violations(case: &QueryCase, plan: &PlanAssignment) -> Vec<Constraint> {
    let done: BTreeSet<ActionId> = plan.order.keys().copied().collect();
    let mut sub = crate::solver::ConstraintSet::new(case.mode, done.iter().copied());
    sub.extend(case.constraints.constraints.iter().filter(|c| {
        c.actions().iter().all(|a| done.contains(a))
    }).cloned());
    if case.mode == Mode::Extended && plan.schedule.is_none() {
        return Vec::new();
    }
    evaluate(&sub, plan).unwrap_or_default()
}
