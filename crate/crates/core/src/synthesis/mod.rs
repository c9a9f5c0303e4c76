//! Query synthesis: skeleton generation with per-sentence satisfiability
//! checks, text filling, time augmentation and equivalent rewrites.

mod derive;
mod equivalent;
mod text;
mod time;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grammar::{
    expand_sentence, DependentClause, ExpansionPolicy, GrammarError, IndependentClause,
    MultiClause, NounPhrase, Object, Paragraph, ParagraphSkeleton, Sentence, SubSentence,
};
use crate::lexicon::{Lexicon, LexiconError};
use crate::model::{action_ids, ActionId, ActionSpec, Direction, Hour, Mode};
use crate::solver::{check_sat, Conflict, Constraint, ConstraintSet, SatResult};

pub use derive::{derive_constraints, init_constraints, sentence_constraints, sub_sentence_constraints};
pub use equivalent::synthesize_equivalent;
pub use text::{choose_forms, fill_text, frame, phrase_map, render_sentences};
pub use time::extend_with_time;

pub const DEFAULT_HORIZON: (Hour, Hour) = (8, 18);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("could not mention {missing:?} within {attempts} attempts")]
    Coverage {
        missing: Vec<ActionId>,
        attempts: usize,
    },
    #[error("no feasible time extension after {attempts} attempts")]
    Infeasible { attempts: usize },
    #[error("no structurally distinct equivalent query after {attempts} attempts")]
    NoEquivalent { attempts: usize },
    #[error("only basic cases can be extended with time constraints")]
    NotBasic,
    #[error("constraints are unsatisfiable: {0}")]
    Unsat(Conflict),
    #[error("invalid synthesis configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Sentences per paragraph; `None` means `max(2, n - 1)`.
    pub max_sentences: Option<usize>,
    /// Candidate sentences tried per slot before generation stops.
    pub max_iterations: usize,
    /// Cap on sub-sentences in the basic paragraph, coverage sentences included.
    pub max_sub_sentences: usize,
    pub policy: ExpansionPolicy,
    /// Inclusive range of hidden durations in hours.
    pub duration_range: (Hour, Hour),
    pub horizon: (Hour, Hour),
    /// Inclusive range of time-point sub-sentences added in extended mode.
    pub time_sentences: (usize, usize),
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            max_sentences: None,
            max_iterations: 25,
            max_sub_sentences: 7,
            policy: ExpansionPolicy::default(),
            duration_range: (1, 3),
            horizon: DEFAULT_HORIZON,
            time_sentences: (1, 2),
        }
    }
}

impl SynthesisConfig {
    pub fn sentences_for(&self, n: usize) -> usize {
        self.max_sentences.unwrap_or(2.max(n.saturating_sub(1)))
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let bad = |m: &str| Err(SynthesisError::Config(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.max_sentences == Some(0) {
            return bad("max_sentences must be at least 1");
        }
        if self.max_sub_sentences == 0 {
            return bad("max_sub_sentences must be at least 1");
        }
        let (dmin, dmax) = self.duration_range;
        if dmin < 1 || dmax < dmin {
            return bad("duration range must satisfy 1 <= min <= max");
        }
        let (lo, hi) = self.horizon;
        if hi - lo < 2 || lo < 0 || hi > 24 {
            return bad("horizon must lie within 0..24 and span at least two hours");
        }
        let (tmin, tmax) = self.time_sentences;
        if tmin < 1 || tmax < tmin {
            return bad("time sentence range must satisfy 1 <= min <= max");
        }
        Ok(())
    }
}

/// One synthesized planning query together with its oracle data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub id: String,
    pub mode: Mode,
    pub topic: String,
    pub actions: Vec<ActionSpec>,
    pub skeleton: ParagraphSkeleton,
    /// Base-form surface form chosen for each keyword slot, in surface order.
    pub keyword_forms: Vec<String>,
    pub text: String,
    pub constraints: ConstraintSet,
    /// Extended mode only. Never shown to the agent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hidden_durations: BTreeMap<ActionId, Hour>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<(Hour, Hour)>,
    pub seed: u64,
}

impl QueryCase {
    pub fn ids(&self) -> Vec<ActionId> {
        self.actions.iter().map(|a| a.id).collect()
    }

    pub fn action(&self, id: ActionId) -> Option<&ActionSpec> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cases serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Constraints not stated by the text: durations, horizon and sequencing.
    pub fn environment_constraints(&self) -> Vec<Constraint> {
        environment_constraints(self.mode, &self.hidden_durations, self.horizon)
    }

    /// Checks the case invariants: the stored constraints are exactly those
    /// derived from the skeleton plus the environment, they are satisfiable,
    /// every action is mentioned, and the text matches the stored forms.
    pub fn check(&self) -> Result<(), String> {
        let ids = self.ids();
        let expected = case_constraints(&self.skeleton, &ids, &self.environment_constraints());
        let as_set = |cs: &ConstraintSet| cs.constraints.iter().cloned().collect::<BTreeSet<_>>();
        if as_set(&expected) != as_set(&self.constraints) || expected.actions != self.constraints.actions {
            return Err("stored constraints differ from those derived from the skeleton".into());
        }
        if let SatResult::Unsat(c) = check_sat(&self.constraints) {
            return Err(format!("constraints are unsatisfiable: {c}"));
        }
        let mentioned: BTreeSet<ActionId> = self.skeleton.mentions().into_iter().collect();
        if let Some(a) = ids.iter().find(|a| !mentioned.contains(a)) {
            return Err(format!("action {a} is never mentioned"));
        }
        if mentioned.iter().any(|a| !ids.contains(a)) {
            return Err("skeleton mentions an undeclared action".into());
        }
        if self.keyword_forms.len() != self.skeleton.keyword_slots().len() {
            return Err("one keyword form is needed per slot".into());
        }
        let body = render_sentences(&self.skeleton, &phrase_map(&self.actions), &self.keyword_forms);
        let framed = frame(
            self.mode,
            &self.actions,
            &body,
            self.horizon.unwrap_or(DEFAULT_HORIZON),
        );
        if framed != self.text {
            return Err("text does not match the skeleton and keyword forms".into());
        }
        Ok(())
    }
}

pub(crate) fn environment_constraints(
    mode: Mode,
    durations: &BTreeMap<ActionId, Hour>,
    horizon: Option<(Hour, Hour)>,
) -> Vec<Constraint> {
    if mode == Mode::Basic {
        return Vec::new();
    }
    let mut out: Vec<Constraint> = durations
        .iter()
        .map(|(&action, &hours)| Constraint::DurationEq { action, hours })
        .collect();
    let (day_start, day_end) = horizon.unwrap_or(DEFAULT_HORIZON);
    out.push(Constraint::HorizonBound { day_start, day_end });
    out.push(Constraint::MonotoneSequence);
    out
}

/// Skeleton-derived constraints over `ids`, plus `extra`.
pub(crate) fn case_constraints(
    skeleton: &ParagraphSkeleton,
    ids: &[ActionId],
    extra: &[Constraint],
) -> ConstraintSet {
    let mut cs = ConstraintSet::new(skeleton.mode, ids.iter().copied());
    cs.extend(derive_constraints(skeleton).constraints);
    cs.extend(extra.iter().cloned());
    cs
}

/// The constraints `case` should carry, re-derived from its skeleton and environment.
pub fn case_constraints_for(case: &QueryCase) -> ConstraintSet {
    case_constraints(&case.skeleton, &case.ids(), &case.environment_constraints())
}

/// One random sentence over `constraints.actions` and the constraints it states.
pub fn gen_sentence<R: Rng + ?Sized>(
    constraints: &ConstraintSet,
    rng: &mut R,
    policy: &ExpansionPolicy,
) -> Result<(Sentence, Vec<Constraint>), GrammarError> {
    let s = expand_sentence(&constraints.actions, constraints.mode, rng, policy)?;
    let derived = sentence_constraints(&s);
    Ok((s, derived))
}

/// Iterative paragraph generation. Each candidate sentence is kept only if the
/// merged constraints stay satisfiable; after `k` rejected candidates for one
/// sentence the loop stops. A final pass adds sentences for actions that were
/// never mentioned. The sub-sentence total stays within
/// `config.max_sub_sentences`, with room kept for the final pass.
pub fn synthesize_paragraph<R: Rng + ?Sized>(
    base: &ConstraintSet,
    max_sentences: usize,
    k: usize,
    rng: &mut R,
    config: &SynthesisConfig,
) -> Result<(ParagraphSkeleton, ConstraintSet), SynthesisError> {
    if base.actions.len() < 2 {
        return Err(GrammarError::TooFewActions(base.actions.len()).into());
    }
    if max_sentences == 0 || k == 0 {
        return Err(SynthesisError::Config("N and K must be at least 1".into()));
    }
    let mut c = base.clone();
    let mut para = Paragraph::default();
    let mut used = 0usize;
    for _ in 0..max_sentences {
        let unmentioned = unmentioned(&para, &c.actions).len();
        let budget = config
            .max_sub_sentences
            .saturating_sub(used + unmentioned.div_ceil(2));
        if budget == 0 {
            break;
        }
        let policy = ExpansionPolicy {
            max_sub_sentences: config.policy.max_sub_sentences.min(budget),
            horizon: config.horizon,
            ..config.policy.clone()
        };
        let mut accepted = false;
        for _ in 0..k {
            let (s, derived) = gen_sentence(&c, rng, &policy)?;
            let merged = c.union(&derived);
            if check_sat(&merged).is_sat() {
                used += s.sub_sentences().count();
                para.sentences.push(s);
                c = merged;
                accepted = true;
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    cover(&mut para, &mut c, k, rng)?;
    Ok((
        ParagraphSkeleton {
            mode: base.mode,
            root: para,
        },
        c,
    ))
}

fn unmentioned(para: &Paragraph, actions: &[ActionId]) -> Vec<ActionId> {
    let skel = ParagraphSkeleton {
        mode: Mode::Basic,
        root: para.clone(),
    };
    let seen: BTreeSet<ActionId> = skel.mentions().into_iter().collect();
    actions.iter().copied().filter(|a| !seen.contains(a)).collect()
}

/// Appends one-relation sentences until every action is mentioned.
fn cover<R: Rng + ?Sized>(
    para: &mut Paragraph,
    c: &mut ConstraintSet,
    k: usize,
    rng: &mut R,
) -> Result<(), SynthesisError> {
    loop {
        let mut missing = unmentioned(para, &c.actions);
        if missing.is_empty() {
            return Ok(());
        }
        missing.shuffle(rng);
        let mut accepted = false;
        for _ in 0..k {
            let (x, y) = if missing.len() >= 2 {
                (missing[0], missing[1])
            } else {
                let x = missing[0];
                let y = c
                    .actions
                    .iter()
                    .copied()
                    .filter(|&a| a != x)
                    .choose(rng)
                    .expect("at least two actions");
                (x, y)
            };
            let (x, y) = if rng.gen_bool(0.5) { (x, y) } else { (y, x) };
            let direction = *Direction::BOTH.choose(rng).expect("non-empty");
            let sub = pair_sub_sentence(
                NounPhrase::single(x),
                direction,
                NounPhrase::single(y),
                rng.gen_range(0..5),
            );
            let merged = c.union(&sub_sentence_constraints(&sub));
            if check_sat(&merged).is_sat() {
                para.sentences.push(Sentence::single(sub));
                *c = merged;
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(SynthesisError::Coverage { missing, attempts: k });
        }
    }
}

/// `subject <direction> object` in one of five shapes: verb, preposition,
/// fronted preposition, infix or fronted sequential conjunction.
pub(crate) fn pair_sub_sentence(
    subject: NounPhrase,
    direction: Direction,
    object: NounPhrase,
    shape: usize,
) -> SubSentence {
    match shape % 5 {
        0 => SubSentence::Independent(IndependentClause::Verb {
            subject,
            direction,
            object: Object::Actions(object),
        }),
        1 => SubSentence::Independent(IndependentClause::Prep {
            subject,
            direction,
            object: Object::Actions(object),
        }),
        2 => SubSentence::Independent(IndependentClause::FrontedPrep {
            direction,
            object: Object::Actions(object),
            subject,
        }),
        3 => SubSentence::Multi(MultiClause::Infix {
            main: DependentClause { subject },
            direction,
            other: DependentClause { subject: object },
        }),
        _ => SubSentence::Multi(MultiClause::Fronted {
            direction,
            other: DependentClause { subject: object },
            main: DependentClause { subject },
        }),
    }
}

/// Synthesizes a complete case with `n` actions from one randomly chosen topic.
pub fn synthesize_case(
    lexicon: &Lexicon,
    n: usize,
    mode: Mode,
    seed: u64,
    config: &SynthesisConfig,
) -> Result<QueryCase, SynthesisError> {
    synthesize_case_in(lexicon, None, n, mode, seed, config)
}

/// As [`synthesize_case`], optionally pinned to `topic`.
pub fn synthesize_case_in(
    lexicon: &Lexicon,
    topic: Option<&str>,
    n: usize,
    mode: Mode,
    seed: u64,
    config: &SynthesisConfig,
) -> Result<QueryCase, SynthesisError> {
    config.validate()?;
    if n < 2 {
        return Err(GrammarError::TooFewActions(n).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic = match topic {
        Some(t) => t.to_string(),
        None => lexicon.sample_topic(&mut rng)?.to_string(),
    };
    let phrases = lexicon.sample_activities(&topic, n, &mut rng)?;
    let ids = action_ids(n);
    let actions: Vec<ActionSpec> = ids
        .iter()
        .zip(&phrases)
        .map(|(&id, p)| ActionSpec::new(id, p))
        .collect();
    let base = init_constraints(&ids, Mode::Basic);
    let (skeleton, constraints) = synthesize_paragraph(
        &base,
        config.sentences_for(n),
        config.max_iterations,
        &mut rng,
        config,
    )?;
    let (text, keyword_forms) = fill_text(&skeleton, &actions, lexicon, config.horizon, &mut rng)?;
    let case = QueryCase {
        id: format!("case-{seed}"),
        mode: Mode::Basic,
        topic,
        actions,
        skeleton,
        keyword_forms,
        text,
        constraints,
        hidden_durations: BTreeMap::new(),
        horizon: None,
        seed,
    };
    match mode {
        Mode::Basic => Ok(case),
        Mode::Extended => extend_with_time(&case, lexicon, &mut rng, config),
    }
}
