//! Acceptance criteria 1 to 9. Prints one line per criterion and exits non-zero
//! if any of them fails. Run with `cargo test -p plancheck-core --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use common::{
    brute_basic_sat, brute_extended_sat, brute_same_extensions, brute_timed_plan, plan_ok,
    plan_violations, Slot,
};
use plancheck_core::campaign::{emit_report, run_budgeted, CampaignConfig, ReportFormat};
use plancheck_core::dissect::{dissect, terminal_substitute, topic_change, CauseLabel, DissectConfig};
use plancheck_core::grammar::{enumerate_expansion_options, REFERENCE_TOTAL};
use plancheck_core::grammar::{
    IndependentClause, NounPhrase, Object, Paragraph, ParagraphSkeleton, Sentence, SubSentence,
};
use plancheck_core::harness::{
    run_case, AdapterError, AgentAdapter, AgentStep, ChatConfig, Clock, ConditionalSimFactory,
    ErrorType, HttpAgentFactory, HttpChatClient, Outcome, RunLimits, SimAgentFactory, SimProfile,
    SimulatedAgent, ToolCall, Transcript, API_KEY_ENV,
};
use plancheck_core::lexicon::{builtin_lexicon, Lexicon};
use plancheck_core::model::action_ids;
use plancheck_core::solver::{
    canonicalize, check_sat, completable, equivalent, feasible_schedule, reset_solver_stats,
    solver_stats, Constraint, ConstraintSet, ScheduledCall,
};
use plancheck_core::synthesis::{
    case_constraints_for, frame, phrase_map, render_sentences, synthesize_case,
    synthesize_equivalent, QueryCase, SynthesisConfig, SynthesisError,
};
use plancheck_core::{ActionId, ActionSpec, Direction, Hour, Mode};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Option<Check>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("satisfiability guarantee", c1),
        ("solver agrees with enumeration", c2),
        ("oracle on simulated agents", c3),
        ("dissection labels", c4),
        ("semantic-preserving mutations", c5),
        ("generator performance", c6),
        ("worked examples", c7),
        ("grammar census", c8),
        ("live smoke", c9),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let secs = || t.elapsed().as_secs_f64();
        match f() {
            Some(Ok(detail)) => println!("criterion {n}: PASS {name} ({detail}; {:.1}s)", secs()),
            Some(Err(detail)) => {
                failed += 1;
                println!("criterion {n}: FAIL {name} ({detail}; {:.1}s)", secs());
            }
            None => println!("criterion {n}: SKIP {name} (set {API_KEY_ENV} to run)"),
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn synth(n: usize, mode: Mode, seed: u64) -> QueryCase {
    synthesize_case(&builtin_lexicon(), n, mode, seed, &SynthesisConfig::default())
        .unwrap_or_else(|e| panic!("synthesis failed for seed {seed}: {e}"))
}

// 1. Every synthesized case is satisfiable by enumeration.

fn c1() -> Option<Check> {
    let lex = builtin_lexicon();
    let cfg = SynthesisConfig::default();
    let t = Instant::now();
    let mut bad = Vec::new();
    for mode in [Mode::Basic, Mode::Extended] {
        for i in 0..1000u64 {
            let n = 3 + (i % 3) as usize;
            let case = match synthesize_case(&lex, n, mode, 10_000 + i, &cfg) {
                Ok(c) => c,
                Err(e) => {
                    bad.push(format!("{mode} seed {}: {e}", 10_000 + i));
                    continue;
                }
            };
            let sat = match mode {
                Mode::Basic => brute_basic_sat(&case.constraints),
                Mode::Extended => brute_extended_sat(&case.constraints),
            };
            if !sat {
                bad.push(case.id.clone());
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Some(
        ensure(bad.is_empty(), || format!("{} failures, first {:?}", bad.len(), bad.first()))
            .and_then(|_| ensure(secs < 60.0, || format!("took {secs:.1}s")))
            .map(|_| format!("2000 cases SAT by enumeration in {secs:.1}s")),
    )
}

// 2. Random constraint sets, solver against enumeration.

fn random_basic_set(rng: &mut ChaCha8Rng) -> (ConstraintSet, bool) {
    let n = rng.gen_range(2..=6);
    let ids = action_ids(n);
    let mut cs = ConstraintSet::new(Mode::Basic, ids.clone());
    let mut perm = ids.clone();
    perm.shuffle(rng);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.3) {
                cs.insert(Constraint::order(perm[i], perm[j]));
            }
        }
    }
    let cyclic = rng.gen_bool(0.4);
    if cyclic {
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        for k in i..j {
            cs.insert(Constraint::order(perm[k], perm[k + 1]));
        }
        cs.insert(Constraint::order(perm[j], perm[i]));
    }
    (cs, cyclic)
}

fn random_extended_set(rng: &mut ChaCha8Rng) -> (ConstraintSet, BTreeMap<ActionId, Hour>, (Hour, Hour)) {
    let n = rng.gen_range(1..=5);
    let ids = action_ids(n);
    let start = rng.gen_range(6..=10);
    let horizon = (start, start + rng.gen_range(4..=10));
    let mut cs = ConstraintSet::new(Mode::Extended, ids.clone());
    let mut perm = ids.clone();
    perm.shuffle(rng);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.3) {
                cs.insert(Constraint::order(perm[i], perm[j]));
            }
        }
    }
    if n >= 2 && rng.gen_bool(0.1) {
        cs.insert(Constraint::order(perm[n - 1], perm[0]));
        for k in 0..n - 1 {
            cs.insert(Constraint::order(perm[k], perm[k + 1]));
        }
    }
    for _ in 0..rng.gen_range(0..=3) {
        let action = ids[rng.gen_range(0..n)];
        let direction = if rng.gen_bool(0.5) { Direction::Before } else { Direction::After };
        let at = rng.gen_range(horizon.0..=horizon.1);
        cs.insert(Constraint::StartBound { action, direction, at });
    }
    let durations: BTreeMap<ActionId, Hour> = ids.iter().map(|&a| (a, rng.gen_range(1..=3))).collect();
    (cs, durations, horizon)
}

fn with_environment(cs: &ConstraintSet, durations: &BTreeMap<ActionId, Hour>, horizon: (Hour, Hour)) -> ConstraintSet {
    let mut full = cs.clone();
    full.extend(durations.iter().map(|(&action, &hours)| Constraint::DurationEq { action, hours }));
    full.insert(Constraint::HorizonBound {
        day_start: horizon.0,
        day_end: horizon.1,
    });
    full.insert(Constraint::MonotoneSequence);
    full
}

fn slots(calls: &[ScheduledCall]) -> Vec<Slot> {
    calls.iter().map(|c| (c.action, c.start, c.end)).collect()
}

fn c2() -> Option<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut unsat = 0;
    for i in 0..5000 {
        let (cs, cyclic) = random_basic_set(&mut rng);
        let expected = brute_basic_sat(&cs);
        if cyclic && expected {
            return Some(Err(format!("basic set {i}: generator cycle not detected by enumeration")));
        }
        let got = check_sat(&cs);
        if got.is_sat() != expected {
            return Some(Err(format!("basic set {i}: solver {} vs enumeration {expected}", got.is_sat())));
        }
        match got.witness() {
            Some(w) => {
                let plan: Vec<Slot> = w.sequence().iter().map(|&a| (a, 0, 0)).collect();
                if !plan_ok(&cs, &plan, &BTreeMap::new(), (0, 0)) {
                    return Some(Err(format!("basic set {i}: witness breaks a constraint")));
                }
            }
            None => unsat += 1,
        }
    }
    let mut ext_unsat = 0;
    for i in 0..1000 {
        let (cs, durations, horizon) = random_extended_set(&mut rng);
        let expected = brute_timed_plan(&cs, &durations, horizon).is_some();
        let sched = feasible_schedule(&cs, &durations, horizon);
        if sched.is_some() != expected {
            return Some(Err(format!("extended set {i}: feasible_schedule disagrees ({expected} expected)")));
        }
        if let Some(s) = &sched {
            if !plan_ok(&cs, &slots(s), &durations, horizon) || s.len() != cs.actions.len() {
                return Some(Err(format!("extended set {i}: schedule is not a valid plan")));
            }
        }
        let full = with_environment(&cs, &durations, horizon);
        if brute_extended_sat(&full) != expected {
            return Some(Err(format!("extended set {i}: oracle inconsistent")));
        }
        let got = check_sat(&full);
        if got.is_sat() != expected {
            return Some(Err(format!("extended set {i}: check_sat disagrees ({expected} expected)")));
        }
        match got.witness().and_then(|w| w.schedule) {
            Some(s) if !plan_ok(&cs, &slots(&s), &durations, horizon) => {
                return Some(Err(format!("extended set {i}: witness is not a valid plan")));
            }
            Some(_) => {}
            None => ext_unsat += 1,
        }
    }
    Some(Ok(format!(
        "5000 basic ({:.0}% UNSAT) and 1000 extended ({:.0}% UNSAT) sets agree",
        unsat as f64 / 50.0,
        ext_unsat as f64 / 10.0
    )))
}

// 3. Verdicts of simulated agents against an offline reading of their logs.

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Defect {
    Unfinished,
    Unknown,
    Missing,
    Violation(&'static str),
}

fn hour_arg(v: &Value) -> Option<Hour> {
    match v {
        Value::Number(n) => n.as_i64().map(|h| h as Hour),
        Value::String(s) => s.split(':').next()?.trim().parse().ok(),
        _ => None,
    }
}

/// Defects visible in a log, read without the harness's own flags or verdict.
fn offline_defects(case: &QueryCase, log: &plancheck_core::harness::ExecutionLog) -> BTreeSet<Defect> {
    let mut out = BTreeSet::new();
    if !matches!(log.outcome, Outcome::Finished { .. }) {
        out.insert(Defect::Unfinished);
    }
    let mut plan: Vec<Slot> = Vec::new();
    for r in &log.records {
        let Some(spec) = case.actions.iter().find(|a| a.tool_name == r.tool) else {
            out.insert(Defect::Unknown);
            continue;
        };
        let (start, end) = match case.mode {
            Mode::Basic => (0, 0),
            Mode::Extended => {
                let s = hour_arg(&r.args["start_time"]).expect("simulated calls carry a start time");
                (s, s + case.hidden_durations[&spec.id])
            }
        };
        plan.push((spec.id, start, end));
    }
    if case.ids().iter().any(|a| !plan.iter().any(|s| s.0 == *a)) {
        out.insert(Defect::Missing);
        return out;
    }
    let (durations, horizon) = match case.mode {
        Mode::Basic => (BTreeMap::new(), (0, 0)),
        Mode::Extended => (case.hidden_durations.clone(), case.horizon.expect("extended cases carry a horizon")),
    };
    for v in plan_violations(&case.constraints, &plan, &durations, horizon) {
        out.insert(Defect::Violation(v));
    }
    out
}

fn c3() -> Option<Check> {
    let limits = RunLimits::default();
    let mut applicable: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut problems = Vec::new();
    let cases = (0..500u64)
        .map(|i| synth(3 + (i % 3) as usize, Mode::Basic, 30_000 + i))
        .chain((0..200u64).map(|i| synth(3 + (i % 3) as usize, Mode::Extended, 40_000 + i)));
    for case in cases {
        let profiles = [
            (SimProfile::Perfect, None),
            (SimProfile::SwapAdjacent(case.seed as usize % 4), Some(ErrorType::OrderError)),
            (SimProfile::DropAction(None), Some(ErrorType::ActionLost)),
            (SimProfile::BadParam(-4), Some(ErrorType::ParameterError)),
            (SimProfile::UnknownTool, Some(ErrorType::ActError)),
            (SimProfile::NeverFinish, Some(ErrorType::Timeout)),
        ];
        for (profile, designed) in profiles {
            let mut agent = SimulatedAgent::new(profile, &case, case.seed);
            let (log, verdict) = run_case(&mut agent, &case, &limits, Clock::Frozen);
            let defects = offline_defects(&case, &log);
            let applies = !defects.is_empty();
            let expected = if applies { designed } else { None };
            let key = format!("{profile}/{}", case.mode);
            let entry = applicable.entry(key).or_default();
            entry.1 += 1;
            if applies {
                entry.0 += 1;
            }
            if profile == SimProfile::Perfect && applies {
                problems.push(format!("{}: perfect play has defects {defects:?}", case.id));
            }
            if verdict.error_type != expected {
                problems.push(format!(
                    "{} {profile}: expected {expected:?}, got {:?} (offline {defects:?})",
                    case.id, verdict.error_type
                ));
            }
        }
    }
    let summary: Vec<String> = applicable
        .iter()
        .map(|(k, (a, n))| format!("{k} {a}/{n}"))
        .collect();
    if problems.is_empty() {
        Some(Ok(format!("defect applied: {}", summary.join(", "))))
    } else {
        let mut by_kind: BTreeMap<String, usize> = BTreeMap::new();
        for p in &problems {
            let kind = p.split(": expected").next().unwrap_or(p);
            let kind = kind.split_whitespace().skip(1).collect::<Vec<_>>().join(" ");
            *by_kind.entry(kind).or_default() += 1;
        }
        Some(Err(format!(
            "{} mismatches {by_kind:?}; first: {}",
            problems.len(),
            problems[0]
        )))
    }
}

// 4. Dissection of agents whose failures have a designed cause.

fn has_word(text: &str, word: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric()).any(|w| w.eq_ignore_ascii_case(word))
}

fn dissect_rate(
    label: &str,
    cases: &[QueryCase],
    make: impl Fn(&QueryCase) -> Box<dyn plancheck_core::harness::AgentFactory>,
    want: CauseLabel,
    lex: &Lexicon,
) -> Result<(usize, usize), String> {
    let mut hits = 0;
    for (i, case) in cases.iter().enumerate() {
        let factory = make(case);
        let config = DissectConfig {
            seed: i as u64,
            ..DissectConfig::default()
        };
        let report = dissect(case, factory.as_ref(), lex, &config).map_err(|e| format!("{label}: {e}"))?;
        if report.label == want {
            hits += 1;
        } else if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            eprintln!("{label}: {} labelled {:?}\n{}", case.id, report.label, report.to_json());
        }
    }
    Ok((hits, cases.len()))
}

fn c4() -> Option<Check> {
    let lex = builtin_lexicon();
    let fail = SimProfile::DropAction(None);
    let pass = SimProfile::Perfect;
    let pool = |mode: Mode, from: u64| (from..).map(move |s| synth(4, mode, s));
    let mixed: Vec<QueryCase> = pool(Mode::Basic, 50_000)
        .take(50)
        .chain(pool(Mode::Extended, 51_000).take(50))
        .collect();
    let worded: Vec<QueryCase> = pool(Mode::Basic, 52_000)
        .filter(|c| has_word(&c.text, "behind"))
        .take(50)
        .chain(pool(Mode::Extended, 53_000).filter(|c| has_word(&c.text, "behind")).take(50))
        .collect();

    let mut lines = Vec::new();
    let mut ok = true;
    let mut record = |name: &str, r: Result<(usize, usize), String>, need: f64| match r {
        Ok((h, n)) => {
            let rate = h as f64 / n as f64;
            ok &= rate >= need;
            lines.push(format!("{name} {h}/{n}"));
        }
        Err(e) => {
            ok = false;
            lines.push(e);
        }
    };

    record(
        "word",
        dissect_rate(
            "word",
            &worded,
            |_| Box::new(ConditionalSimFactory::new("word", |c| has_word(&c.text, "behind"), fail, pass)),
            CauseLabel::Terminal,
            &lex,
        ),
        1.0,
    );
    record(
        "topic",
        dissect_rate(
            "topic",
            &mixed,
            |case| {
                let topic = case.topic.clone();
                Box::new(ConditionalSimFactory::new("topic", move |c| c.topic == topic, fail, pass))
            },
            CauseLabel::Topic,
            &lex,
        ),
        1.0,
    );
    record(
        "structure",
        dissect_rate(
            "structure",
            &mixed,
            |case| {
                let skeleton = case.skeleton.clone();
                Box::new(ConditionalSimFactory::new("structure", move |c| c.skeleton == skeleton, fail, pass))
            },
            CauseLabel::Structure,
            &lex,
        ),
        1.0,
    );
    record(
        "constraint",
        dissect_rate(
            "constraint",
            &mixed,
            |case| {
                let canon = canonicalize(&case.constraints).unwrap();
                Box::new(ConditionalSimFactory::new(
                    "constraint",
                    move |c| canonicalize(&c.constraints).as_ref() == Ok(&canon),
                    fail,
                    pass,
                ))
            },
            CauseLabel::Constraint,
            &lex,
        ),
        1.0,
    );

    // Coin: only cases whose first run went wrong are dissected.
    let coin = SimAgentFactory::new(SimProfile::Coin(0.5));
    let limits = RunLimits::default();
    let failing: Vec<QueryCase> = (0..)
        .flat_map(|s| [synth(4, Mode::Basic, 54_000 + s), synth(4, Mode::Extended, 55_000 + s)])
        .filter(|c| {
            let mut agent = plancheck_core::harness::AgentFactory::create(&coin, c, c.seed);
            !run_case(agent.as_mut(), c, &limits, Clock::Frozen).1.is_correct()
        })
        .take(100)
        .collect();
    record(
        "coin(0.5)",
        dissect_rate("coin", &failing, |_| Box::new(coin), CauseLabel::Probability, &lex),
        0.95,
    );
    let detail = lines.join(", ");
    Some(if ok { Ok(detail) } else { Err(detail) })
}

// 5. Mutations keep the constraint set.

fn c5() -> Option<Check> {
    let lex = builtin_lexicon();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let modes = [Mode::Basic, Mode::Extended];
    let same_canon = |a: &ConstraintSet, b: &ConstraintSet| canonicalize(a).ok() == canonicalize(b).ok();
    for i in 0..1000u64 {
        let case = synth(3 + (i % 3) as usize, modes[(i % 2) as usize], 60_000 + i);
        let (m, _) = match terminal_substitute(&case, &lex, &mut rng) {
            Ok(m) => m,
            Err(e) => return Some(Err(format!("terminal_substitute on {}: {e}", case.id))),
        };
        if !same_canon(&case_constraints_for(&m), &case.constraints) || m.check().is_err() {
            return Some(Err(format!("terminal_substitute changed {}", case.id)));
        }
        let mut used = BTreeSet::new();
        let t = match topic_change(&case, &lex, &mut used, &mut rng) {
            Ok(t) => t,
            Err(e) => return Some(Err(format!("topic_change on {}: {e}", case.id))),
        };
        if t.topic == case.topic || !same_canon(&case_constraints_for(&t), &case.constraints) || t.check().is_err() {
            return Some(Err(format!("topic_change changed {}", case.id)));
        }
    }
    let mut outputs = 0;
    let mut no_equivalent = 0;
    let mut i = 0u64;
    while outputs < 200 {
        let case = synth(3 + (i % 3) as usize, modes[(i % 2) as usize], 70_000 + i);
        i += 1;
        let eq = synthesize_equivalent(
            &case.constraints,
            &case.actions,
            &case.topic,
            &lex,
            Some(&case.skeleton),
            25,
            i,
            "eq",
        );
        let eq = match eq {
            Ok(q) => q,
            Err(SynthesisError::NoEquivalent { .. }) => {
                no_equivalent += 1;
                continue;
            }
            Err(e) => return Some(Err(format!("synthesize_equivalent on {}: {e}", case.id))),
        };
        outputs += 1;
        let same = match case.mode {
            Mode::Basic => brute_same_extensions(&case.constraints, &eq.constraints),
            Mode::Extended => brute_extended_sat(&eq.constraints),
        };
        if equivalent(&case.constraints, &eq.constraints) != Ok(true)
            || eq.skeleton == case.skeleton
            || !same
            || eq.check().is_err()
        {
            return Some(Err(format!("equivalent rewrite of {} is not equivalent", case.id)));
        }
    }
    Some(Ok(format!(
        "1000 substitutions, 1000 topic changes, 200 equivalent rewrites ({no_equivalent} inputs without one)"
    )))
}

// 6. Synthesis cost.

fn c6() -> Option<Check> {
    let lex = builtin_lexicon();
    let cfg = SynthesisConfig::default();
    reset_solver_stats();
    let t = Instant::now();
    for i in 0..1000u64 {
        let mode = if i % 2 == 0 { Mode::Basic } else { Mode::Extended };
        let case = synthesize_case(&lex, 3 + (i % 3) as usize, mode, 80_000 + i, &cfg).ok()?;
        assert!(check_sat(&case.constraints).is_sat());
    }
    let total = t.elapsed();
    let stats = solver_stats();
    let mean_ms = total.as_secs_f64() * 1000.0 / 1000.0;
    let share = stats.time.as_secs_f64() / total.as_secs_f64();
    let detail = format!(
        "mean {mean_ms:.2} ms per case, solver {:.1}% over {} calls",
        share * 100.0,
        stats.calls
    );
    Some(if mean_ms <= 100.0 && share < 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    })
}

// 7. Worked examples.

struct Scripted(VecDeque<AgentStep>);

impl AgentAdapter for Scripted {
    fn next_step(&mut self, _: &Transcript) -> Result<AgentStep, AdapterError> {
        Ok(self.0.pop_front().unwrap_or(AgentStep::FinalAnswer {
            text: "done".into(),
        }))
    }
}

fn call(case: &QueryCase, a: ActionId, start: Option<&str>) -> AgentStep {
    AgentStep::ToolCall(ToolCall {
        id: None,
        name: case.action(a).unwrap().tool_name.clone(),
        args: start.map_or_else(|| json!({}), |s| json!({ "start_time": s })),
    })
}

fn verb(subject: ActionId, direction: Direction, object: Object) -> Sentence {
    Sentence::single(SubSentence::Independent(IndependentClause::Verb {
        subject: NounPhrase::single(subject),
        direction,
        object,
    }))
}

fn hand_built(
    mode: Mode,
    phrases: &[&str],
    sentences: Vec<Sentence>,
    durations: &[Hour],
    horizon: (Hour, Hour),
) -> QueryCase {
    let lex = builtin_lexicon();
    let ids = action_ids(phrases.len());
    let actions: Vec<ActionSpec> = ids.iter().zip(phrases).map(|(&a, p)| ActionSpec::new(a, p)).collect();
    let skeleton = ParagraphSkeleton {
        mode,
        root: Paragraph { sentences },
    };
    let keyword_forms: Vec<String> = skeleton
        .keyword_slots()
        .iter()
        .map(|c| lex.forms(*c)[0].clone())
        .collect();
    let body = render_sentences(&skeleton, &phrase_map(&actions), &keyword_forms);
    let text = frame(mode, &actions, &body, horizon);
    let mut case = QueryCase {
        id: "golden".into(),
        mode,
        topic: "Network Administrator".into(),
        actions,
        skeleton,
        keyword_forms,
        text,
        constraints: ConstraintSet::new(mode, ids.clone()),
        hidden_durations: ids.iter().copied().zip(durations.iter().copied()).collect(),
        horizon: (mode == Mode::Extended).then_some(horizon),
        seed: 0,
    };
    case.constraints = case_constraints_for(&case);
    case.check().expect("golden case is consistent");
    case
}

fn c7() -> Option<Check> {
    let [a1, a2, a3] = [ActionId(1), ActionId(2), ActionId(3)];
    let limits = RunLimits::default();
    let run = |case: &QueryCase, steps: Vec<AgentStep>| {
        run_case(&mut Scripted(steps.into()), case, &limits, Clock::Frozen)
    };

    // a1 before a2, a2 after a3; the sequence a1, a3, a2 is fine.
    let fig2 = hand_built(
        Mode::Basic,
        &["network status check", "network diagnosis", "network speed test"],
        vec![
            verb(a1, Direction::Before, Object::Actions(NounPhrase::single(a2))),
            verb(a2, Direction::After, Object::Actions(NounPhrase::single(a3))),
        ],
        &[],
        (8, 18),
    );
    let expected: BTreeSet<Constraint> = [Constraint::order(a1, a2), Constraint::order(a3, a2)].into();
    if fig2.constraints.constraints.iter().cloned().collect::<BTreeSet<_>>() != expected {
        return Some(Err(format!("first example derives {:?}", fig2.constraints.constraints)));
    }
    let (_, v) = run(&fig2, vec![call(&fig2, a1, None), call(&fig2, a3, None), call(&fig2, a2, None)]);
    if !v.is_correct() || v.assignment.as_ref().map(|p| p.sequence()) != Some(vec![a1, a3, a2]) {
        return Some(Err(format!("first example judged {v:?}")));
    }

    // Diagnosis takes two hours; the speed test must start before 15:00.
    let fig8 = hand_built(
        Mode::Extended,
        &["network status check", "network diagnosis", "network speed test"],
        vec![
            verb(a1, Direction::Before, Object::Actions(NounPhrase::single(a2))),
            verb(a2, Direction::Before, Object::Actions(NounPhrase::single(a3))),
            verb(a3, Direction::Before, Object::Time(15)),
        ],
        &[1, 2, 1],
        (8, 18),
    );
    if !check_sat(&fig8.constraints).is_sat() {
        return Some(Err("second example is not satisfiable".into()));
    }
    let prefix = [
        ScheduledCall { action: a1, start: 8, end: 9 },
        ScheduledCall { action: a2, start: 14, end: 16 },
    ];
    if completable(&fig8.constraints, &prefix, &fig8.hidden_durations, (8, 18)) {
        return Some(Err("14:00 diagnosis start judged completable".into()));
    }
    let (log, v) = run(
        &fig8,
        vec![
            call(&fig8, a1, Some("08:00")),
            call(&fig8, a2, Some("14:00")),
            AgentStep::Halt {
                reason: "early halt: the speed test can no longer start before 15:00".into(),
            },
        ],
    );
    if log.records[1].end != Some(16) || !v.is_correct() || v.justified_halt != Some(true) {
        return Some(Err(format!("justified halt judged {v:?}")));
    }
    let (_, v) = run(
        &fig8,
        vec![
            call(&fig8, a1, Some("08:00")),
            call(&fig8, a2, Some("14:00")),
            call(&fig8, a3, Some("16:00")),
        ],
    );
    if v.is_correct() {
        return Some(Err("14:00 diagnosis schedule judged correct".into()));
    }

    // Previous call ends at 12:00, the next one is started at 8.
    let fig10 = hand_built(
        Mode::Extended,
        &["data backup", "data restore"],
        vec![
            verb(a1, Direction::Before, Object::Actions(NounPhrase::single(a2))),
            verb(a2, Direction::Before, Object::Time(17)),
        ],
        &[2, 1],
        (8, 18),
    );
    let (log, v) = run(&fig10, vec![call(&fig10, a1, Some("10:00")), call(&fig10, a2, Some("8"))]);
    if !log.records[0].message.contains("12:00")
        || v.error_type != Some(ErrorType::ParameterError)
        || !v.violated.contains(&Constraint::MonotoneSequence)
    {
        return Some(Err(format!("start 8 after end 12 judged {v:?}")));
    }
    Some(Ok("three examples reproduced".into()))
}

// 8. Census.

fn c8() -> Option<Check> {
    let a = enumerate_expansion_options(Mode::Basic);
    let b = enumerate_expansion_options(Mode::Basic);
    let ext = enumerate_expansion_options(Mode::Extended);
    let doc = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/census.md");
    let text = std::fs::read_to_string(&doc).unwrap_or_default();
    let summed: u64 = a
        .units
        .iter()
        .map(|u| a.count_for(u).and_then(|p| p.derivations).unwrap_or(0))
        .sum();
    let checks = [
        (a == b, "census is not deterministic"),
        (!a.productions.is_empty(), "empty breakdown"),
        (summed == a.total, "units do not sum to the total"),
        (ext.total > a.total, "extended grammar is not larger"),
        (text.contains(&a.total.to_string()), "docs/census.md lacks the total"),
        (text.contains(&REFERENCE_TOTAL.to_string()), "docs/census.md lacks the reference figure"),
    ];
    for (ok, msg) in checks {
        if !ok {
            return Some(Err(msg.into()));
        }
    }
    Some(Ok(format!(
        "basic {} over {} productions, extended {}, reference {REFERENCE_TOTAL}",
        a.total,
        a.productions.len(),
        ext.total
    )))
}

// 9. Live endpoint.

fn c9() -> Option<Check> {
    let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty())?;
    let mut chat = ChatConfig {
        api_key: Some(key),
        ..ChatConfig::default()
    };
    if let Ok(url) = std::env::var("PLANCHECK_BASE_URL") {
        chat.base_url = url;
    }
    if let Ok(model) = std::env::var("PLANCHECK_MODEL") {
        chat.model = model;
    }
    let client = match HttpChatClient::new(chat) {
        Ok(c) => Arc::new(c),
        Err(e) => return Some(Err(format!("client: {e}"))),
    };
    let factory = HttpAgentFactory::new(client);
    let config = CampaignConfig {
        max_cases: Some(20),
        parallelism: 1,
        seed: 9,
        ..CampaignConfig::default()
    };
    let report = match run_budgeted(&config, &builtin_lexicon(), &factory) {
        Ok(r) => r,
        Err(e) => return Some(Err(format!("campaign: {e}"))),
    };
    let dir = std::env::temp_dir().join(format!("plancheck-live-{}", std::process::id()));
    let formats = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown];
    if let Err(e) = emit_report(&report, &dir, &formats) {
        return Some(Err(format!("report: {e}")));
    }
    let errs = report.cases.iter().filter(|c| c.error_type.is_some()).count();
    Some(
        ensure(report.cases.len() == 20, || format!("{} cases ran", report.cases.len()))
            .map(|_| format!("20 cases, {errs} erroneous, report in {}", dir.display())),
    )
}
