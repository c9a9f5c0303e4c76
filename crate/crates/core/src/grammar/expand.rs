//! Random top-down expansion of a sentence.

use rand::seq::SliceRandom;
use rand::Rng;

use super::*;

/// Caps and branching probabilities for random expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPolicy {
    /// Upper bound on sub-sentences joined into one sentence.
    pub max_sub_sentences: usize,
    /// Upper bound on actions in one `a+` group.
    pub max_group: usize,
    /// How deep relative clauses may nest.
    pub max_relative_depth: usize,
    /// Chance that `S ::= S j s` is taken again while below the cap.
    pub continue_probability: f64,
    pub group_probability: f64,
    pub relative_probability: f64,
    /// Chance an object is a time point (extended mode only).
    pub time_probability: f64,
    /// Time points are whole hours strictly inside this window.
    pub horizon: (Hour, Hour),
}

impl Default for ExpansionPolicy {
    fn default() -> Self {
        ExpansionPolicy {
            max_sub_sentences: 3,
            max_group: 2,
            max_relative_depth: 1,
            continue_probability: 0.3,
            group_probability: 0.25,
            relative_probability: 0.2,
            time_probability: 0.25,
            horizon: (8, 18),
        }
    }
}

impl ExpansionPolicy {
    fn validate(&self) -> Result<(), GrammarError> {
        let probs = [
            self.continue_probability,
            self.group_probability,
            self.relative_probability,
            self.time_probability,
        ];
        if self.max_sub_sentences == 0
            || self.max_group == 0
            || self.horizon.1 - self.horizon.0 < 2
            || probs.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(GrammarError::InvalidPolicy);
        }
        Ok(())
    }
}

/// Expands one sentence. Every sub-sentence relates at least two distinct
/// actions or an action and a time point, and never mentions an action twice.
pub fn expand_sentence<R: Rng + ?Sized>(
    actions: &[ActionId],
    mode: Mode,
    rng: &mut R,
    policy: &ExpansionPolicy,
) -> Result<Sentence, GrammarError> {
    if actions.len() < 2 {
        return Err(GrammarError::TooFewActions(actions.len()));
    }
    policy.validate()?;
    let first = sub_sentence(actions, mode, rng, policy);
    let mut rest = Vec::new();
    while rest.len() + 1 < policy.max_sub_sentences && rng.gen_bool(policy.continue_probability) {
        let j = *Conjunction::ALL.choose(rng).expect("non-empty");
        rest.push((j, sub_sentence(actions, mode, rng, policy)));
    }
    Ok(Sentence { first, rest })
}

/// Random sub-sentence using only `actions`.
pub(crate) fn sub_sentence<R: Rng + ?Sized>(
    actions: &[ActionId],
    mode: Mode,
    rng: &mut R,
    policy: &ExpansionPolicy,
) -> SubSentence {
    for _ in 0..32 {
        let mut pool = actions.to_vec();
        pool.shuffle(rng);
        let mut gen = Expander {
            pool,
            mode,
            policy,
        };
        if let Some(s) = gen.sub_sentence(rng) {
            return s;
        }
    }
    // Small action sets can exhaust the pool on large shapes; fall back to `a VP b`.
    let mut pair: Vec<ActionId> = actions.choose_multiple(rng, 2).copied().collect();
    pair.shuffle(rng);
    SubSentence::Independent(IndependentClause::Verb {
        subject: NounPhrase::single(pair[0]),
        direction: *Direction::BOTH.choose(rng).expect("non-empty"),
        object: Object::Actions(NounPhrase::single(pair[1])),
    })
}

struct Expander<'p> {
    pool: Vec<ActionId>,
    mode: Mode,
    policy: &'p ExpansionPolicy,
}

impl Expander<'_> {
    fn take<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Vec<ActionId>> {
        let size = if self.policy.max_group > 1 && rng.gen_bool(self.policy.group_probability) {
            rng.gen_range(2..=self.policy.max_group)
        } else {
            1
        };
        if self.pool.len() < size {
            return None;
        }
        Some(self.pool.split_off(self.pool.len() - size))
    }

    fn direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
        *Direction::BOTH.choose(rng).expect("non-empty")
    }

    fn sub_sentence<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SubSentence> {
        if rng.gen_bool(0.5) {
            let direction = Self::direction(rng);
            let clause = match rng.gen_range(0..3) {
                0 => {
                    let subject = self.noun_phrase(rng, 0)?;
                    let object = self.object(rng, 0)?;
                    IndependentClause::Verb {
                        subject,
                        direction,
                        object,
                    }
                }
                1 => {
                    let subject = self.noun_phrase(rng, 0)?;
                    let object = self.object(rng, 0)?;
                    IndependentClause::Prep {
                        subject,
                        direction,
                        object,
                    }
                }
                _ => {
                    let object = self.object(rng, 0)?;
                    let subject = self.noun_phrase(rng, 0)?;
                    IndependentClause::FrontedPrep {
                        direction,
                        object,
                        subject,
                    }
                }
            };
            Some(SubSentence::Independent(clause))
        } else {
            let direction = Self::direction(rng);
            let main = DependentClause {
                subject: self.noun_phrase(rng, 0)?,
            };
            let other = DependentClause {
                subject: self.noun_phrase(rng, 0)?,
            };
            let m = if rng.gen_bool(0.5) {
                MultiClause::Infix {
                    main,
                    direction,
                    other,
                }
            } else {
                MultiClause::Fronted {
                    direction,
                    other,
                    main,
                }
            };
            Some(SubSentence::Multi(m))
        }
    }

    fn noun_phrase<R: Rng + ?Sized>(&mut self, rng: &mut R, depth: usize) -> Option<NounPhrase> {
        let actions = self.take(rng)?;
        let relative = if depth < self.policy.max_relative_depth
            && rng.gen_bool(self.policy.relative_probability)
        {
            let direction = Self::direction(rng);
            let object = self.object(rng, depth + 1)?;
            Some(Box::new(if rng.gen_bool(0.5) {
                RelativeClause::Verb { direction, object }
            } else {
                RelativeClause::Prep { direction, object }
            }))
        } else {
            None
        };
        Some(NounPhrase { actions, relative })
    }

    fn object<R: Rng + ?Sized>(&mut self, rng: &mut R, depth: usize) -> Option<Object> {
        if self.mode == Mode::Extended && rng.gen_bool(self.policy.time_probability) {
            let (lo, hi) = self.policy.horizon;
            return Some(Object::Time(rng.gen_range(lo + 1..hi)));
        }
        self.noun_phrase(rng, depth).map(Object::Actions)
    }
}
