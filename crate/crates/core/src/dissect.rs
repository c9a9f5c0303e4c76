//! Root-cause dissection of a failing case: reruns, then a ladder of
//! meaning-preserving mutations, stopping at the first one that flips the verdict.

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grammar::KeywordClass;
use crate::harness::{run_case, AgentFactory, ErrorType, ExecutionLog, Outcome, RunLimits, Verdict};
use crate::lexicon::{Lexicon, LexiconError};
use crate::model::{derive_seed, ActionSpec};
use crate::solver::canonicalize;
use crate::synthesis::{
    case_constraints_for, frame, phrase_map, render_sentences, synthesize_equivalent, QueryCase,
    SynthesisError, DEFAULT_HORIZON,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CauseLabel {
    Probability,
    Terminal,
    Topic,
    Structure,
    Constraint,
}

impl CauseLabel {
    pub const ALL: [CauseLabel; 5] = [
        CauseLabel::Probability,
        CauseLabel::Terminal,
        CauseLabel::Topic,
        CauseLabel::Structure,
        CauseLabel::Constraint,
    ];
}

/// One replaced keyword form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub slot: usize,
    pub class: String,
    pub from: String,
    pub to: String,
}

/// The run that flipped the verdict to correct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Rerun { attempt: usize },
    Terminal { attempt: usize, substitutions: Vec<Substitution> },
    Topic { attempt: usize, from: String, to: String },
    Structure { attempt: usize, case_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCause {
    pub label: CauseLabel,
    /// Absent for [`CauseLabel::Constraint`]: nothing fixed the failure.
    pub evidence: Option<Evidence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Rerun,
    Terminal,
    Topic,
    Structure,
}

/// One agent run made during a dissection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDigest {
    pub stage: Stage,
    pub attempt: usize,
    pub case_id: String,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<ErrorType>,
    /// SHA-256 of the JSON-lines execution log.
    pub log_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissectionReport {
    pub case_id: String,
    pub agent: String,
    pub label: CauseLabel,
    pub evidence: Option<Evidence>,
    pub runs: Vec<RunDigest>,
    /// Rungs that could not run, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl DissectionReport {
    pub fn cause(&self) -> ErrorCause {
        ErrorCause {
            label: self.label,
            evidence: self.evidence.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DissectConfig {
    /// Attempts per mutation strategy.
    pub k: usize,
    pub reruns: usize,
    pub limits: RunLimits,
    /// Attempts handed to each equivalent-query synthesis.
    pub synthesis_attempts: usize,
    pub seed: u64,
}

impl Default for DissectConfig {
    fn default() -> Self {
        DissectConfig {
            k: 5,
            reruns: 3,
            limits: RunLimits::default(),
            synthesis_attempts: 25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DissectError {
    #[error("no keyword slot has an alternative surface form")]
    NoAlternativeForms,
    #[error("no unused topic has at least {needed} activities")]
    TopicsExhausted { needed: usize },
    #[error("mutation changed the constraint set: {0}")]
    NotPreserving(String),
    #[error("agent endpoint failed during {stage:?} attempt {attempt}: {detail}")]
    Transport {
        stage: Stage,
        attempt: usize,
        detail: String,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

fn rerender(case: &QueryCase) -> String {
    let body = render_sentences(&case.skeleton, &phrase_map(&case.actions), &case.keyword_forms);
    frame(
        case.mode,
        &case.actions,
        &body,
        case.horizon.unwrap_or(DEFAULT_HORIZON),
    )
}

fn assert_preserved(original: &QueryCase, mutated: &QueryCase) -> Result<(), DissectError> {
    let rederived = case_constraints_for(mutated);
    let same_set = |a: &crate::solver::ConstraintSet, b: &crate::solver::ConstraintSet| {
        a.actions == b.actions
            && a.constraints.iter().collect::<BTreeSet<_>>() == b.constraints.iter().collect()
    };
    if !same_set(&rederived, &original.constraints) {
        return Err(DissectError::NotPreserving(format!(
            "{} re-derives to a different set",
            mutated.id
        )));
    }
    let canon = |c| canonicalize(c).map_err(|e| DissectError::NotPreserving(format!("{e:?}")));
    if canon(&rederived)? != canon(&original.constraints)? {
        return Err(DissectError::NotPreserving(mutated.id.clone()));
    }
    Ok(())
}

/// Replaces keyword forms with other forms of the same class and direction.
/// Every slot that has an alternative is resampled. Forms the original wording
/// never uses are preferred, so the original keywords disappear whenever the
/// lexicon has enough forms for that class.
pub fn terminal_substitute<R: Rng + ?Sized>(
    case: &QueryCase,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Result<(QueryCase, Vec<Substitution>), DissectError> {
    let slots: Vec<KeywordClass> = case.skeleton.keyword_slots();
    let mut forms = case.keyword_forms.clone();
    let mut subs = Vec::new();
    for (i, class) in slots.iter().enumerate() {
        let current = &case.keyword_forms[i];
        let fresh: Vec<&String> = lexicon
            .forms(*class)
            .iter()
            .filter(|f| !case.keyword_forms.contains(f))
            .collect();
        let alternatives: Vec<&String> = if fresh.is_empty() {
            lexicon.forms(*class).iter().filter(|f| *f != current).collect()
        } else {
            fresh
        };
        if let Some(to) = alternatives.choose(rng) {
            subs.push(Substitution {
                slot: i,
                class: class.symbol().to_string(),
                from: current.clone(),
                to: (*to).clone(),
            });
            forms[i] = (*to).clone();
        }
    }
    if subs.is_empty() {
        return Err(DissectError::NoAlternativeForms);
    }
    let mut mutated = case.clone();
    mutated.keyword_forms = forms;
    mutated.text = rerender(&mutated);
    assert_preserved(case, &mutated)?;
    Ok((mutated, subs))
}

/// Moves the case to a topic not in `used`, refilling every action phrase and
/// tool. Ids, skeleton, wording and constraints stay the same. The new topic is
/// added to `used`.
pub fn topic_change<R: Rng + ?Sized>(
    case: &QueryCase,
    lexicon: &Lexicon,
    used: &mut BTreeSet<String>,
    rng: &mut R,
) -> Result<QueryCase, DissectError> {
    let n = case.actions.len();
    used.insert(case.topic.clone());
    let topic = lexicon
        .topics
        .iter()
        .filter(|(t, acts)| !used.contains(*t) && acts.len() >= n)
        .map(|(t, _)| t.clone())
        .choose(rng)
        .ok_or(DissectError::TopicsExhausted { needed: n })?;
    let phrases = lexicon.sample_activities(&topic, n, rng)?;
    used.insert(topic.clone());
    let mut mutated = case.clone();
    mutated.topic = topic;
    mutated.actions = case
        .actions
        .iter()
        .zip(phrases)
        .map(|(a, p)| ActionSpec::new(a.id, p))
        .collect();
    mutated.text = rerender(&mutated);
    assert_preserved(case, &mutated)?;
    Ok(mutated)
}

fn digest(log: &ExecutionLog) -> String {
    hex::encode(Sha256::digest(log.to_jsonl().as_bytes()))
}

struct Session<'a> {
    factory: &'a dyn AgentFactory,
    config: &'a DissectConfig,
    base_seed: u64,
    runs: Vec<RunDigest>,
}

impl Session<'_> {
    fn run(&mut self, stage: Stage, attempt: usize, case: &QueryCase) -> Result<Verdict, DissectError> {
        let run_seed = derive_seed(self.base_seed, &[stage as u64 + 1, attempt as u64]);
        let mut agent = self.factory.create(case, run_seed);
        let (log, verdict) = run_case(agent.as_mut(), case, &self.config.limits, self.factory.clock());
        if let Outcome::ProtocolError {
            detail,
            transport: true,
        } = &log.outcome
        {
            return Err(DissectError::Transport {
                stage,
                attempt,
                detail: detail.clone(),
            });
        }
        self.runs.push(RunDigest {
            stage,
            attempt,
            case_id: case.id.clone(),
            correct: verdict.is_correct(),
            error_type: verdict.error_type,
            log_sha256: digest(&log),
        });
        Ok(verdict)
    }
}

/// Attributes the failure of `case` under agents from `factory` to one cause.
///
/// The ladder is ordered and the first flip wins: reruns (Probability), keyword
/// substitutions (Terminal), topic changes (Topic), then equivalent queries with a
/// different structure (Structure, otherwise Constraint). The last rung returns
/// after its first successfully synthesized query, flipped or not.
pub fn dissect(
    case: &QueryCase,
    factory: &dyn AgentFactory,
    lexicon: &Lexicon,
    config: &DissectConfig,
) -> Result<DissectionReport, DissectError> {
    let base_seed = derive_seed(config.seed, &[case.seed]);
    let mut session = Session {
        factory,
        config,
        base_seed,
        runs: Vec::new(),
    };
    let mut skipped = Vec::new();
    let finish = |session: Session, label, evidence, skipped| DissectionReport {
        case_id: case.id.clone(),
        agent: factory.label(),
        label,
        evidence,
        runs: session.runs,
        skipped,
    };

    for attempt in 1..=config.reruns {
        if session.run(Stage::Rerun, attempt, case)?.is_correct() {
            return Ok(finish(session, CauseLabel::Probability, Some(Evidence::Rerun { attempt }), skipped));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, &[u64::MAX]));
    for attempt in 1..=config.k {
        let (mut mutated, substitutions) = match terminal_substitute(case, lexicon, &mut rng) {
            Ok(m) => m,
            Err(DissectError::NoAlternativeForms) => {
                skipped.push("terminal: no alternative keyword forms".to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        mutated.id = format!("{}-terminal-{attempt}", case.id);
        if session.run(Stage::Terminal, attempt, &mutated)?.is_correct() {
            let ev = Evidence::Terminal {
                attempt,
                substitutions,
            };
            return Ok(finish(session, CauseLabel::Terminal, Some(ev), skipped));
        }
    }

    let mut used = BTreeSet::new();
    for attempt in 1..=config.k {
        let mut mutated = match topic_change(case, lexicon, &mut used, &mut rng) {
            Ok(m) => m,
            Err(DissectError::TopicsExhausted { .. }) => {
                skipped.push(format!("topic: lexicon exhausted after {} changes", attempt - 1));
                break;
            }
            Err(e) => return Err(e),
        };
        mutated.id = format!("{}-topic-{attempt}", case.id);
        if session.run(Stage::Topic, attempt, &mutated)?.is_correct() {
            let ev = Evidence::Topic {
                attempt,
                from: case.topic.clone(),
                to: mutated.topic.clone(),
            };
            return Ok(finish(session, CauseLabel::Topic, Some(ev), skipped));
        }
    }

    for attempt in 1..=config.k {
        let id = format!("{}-structure-{attempt}", case.id);
        let equivalent = synthesize_equivalent(
            &case.constraints,
            &case.actions,
            &case.topic,
            lexicon,
            Some(&case.skeleton),
            config.synthesis_attempts,
            derive_seed(base_seed, &[Stage::Structure as u64 + 1, attempt as u64, 7]),
            &id,
        );
        let equivalent = match equivalent {
            Ok(q) => q,
            Err(SynthesisError::NoEquivalent { .. }) => {
                skipped.push(format!("structure: no equivalent query on attempt {attempt}"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if session.run(Stage::Structure, attempt, &equivalent)?.is_correct() {
            let ev = Evidence::Structure {
                attempt,
                case_id: id,
            };
            return Ok(finish(session, CauseLabel::Structure, Some(ev), skipped));
        }
        break;
    }
    Ok(finish(session, CauseLabel::Constraint, None, skipped))
}
