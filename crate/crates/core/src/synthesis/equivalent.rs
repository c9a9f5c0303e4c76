//! Rewriting a constraint set as a fresh query with the same canonical form.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::grammar::Conjunction;
use crate::solver::{canonicalize, CanonError};

enum Unit {
    Order(Vec<ActionId>, Vec<ActionId>),
    Bound(ActionId, Direction, Hour),
}

/// Synthesizes a query stating exactly the relations of `constraints`' canonical
/// form over `actions`, in a skeleton different from `avoid`. Durations and the
/// horizon carry over unchanged.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_equivalent(
    constraints: &ConstraintSet,
    actions: &[ActionSpec],
    topic: &str,
    lexicon: &Lexicon,
    avoid: Option<&ParagraphSkeleton>,
    attempts: usize,
    seed: u64,
    id: &str,
) -> Result<QueryCase, SynthesisError> {
    let canon = canonicalize(constraints).map_err(|e| match e {
        CanonError::Unsat(c) => SynthesisError::Unsat(c),
        CanonError::Invalid(e) => SynthesisError::Config(e.to_string()),
    })?;
    let ids: Vec<ActionId> = actions.iter().map(|a| a.id).collect();
    if ids.iter().copied().collect::<BTreeSet<_>>() != canon.actions.iter().copied().collect() {
        return Err(SynthesisError::Config(
            "action specs do not match the constraint set".into(),
        ));
    }
    let mut expressed: BTreeSet<ActionId> = BTreeSet::new();
    for &(b, a) in &canon.edges {
        expressed.extend([b, a]);
    }
    expressed.extend(canon.bounds.iter().map(|b| b.0));
    if expressed.len() != ids.len() {
        // An unconstrained action cannot be mentioned without adding a relation.
        return Err(SynthesisError::NoEquivalent { attempts: 0 });
    }
    let mode = constraints.mode;
    let durations = constraints.durations();
    let horizon = constraints.horizon();
    let env = environment_constraints(mode, &durations, horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..attempts {
        let mut units = group_edges(&canon.edges, &mut rng);
        units.extend(
            canon
                .bounds
                .iter()
                .map(|&(a, d, t)| Unit::Bound(a, d, t)),
        );
        units.shuffle(&mut rng);
        let subs: Vec<SubSentence> = units.into_iter().map(|u| express(u, &mut rng)).collect();
        let skeleton = ParagraphSkeleton {
            mode,
            root: split_sentences(subs, &mut rng),
        };
        if avoid == Some(&skeleton) {
            continue;
        }
        let derived = case_constraints(&skeleton, &ids, &env);
        if canonicalize(&derived).ok().as_ref() != Some(&canon) {
            continue;
        }
        let horizon_or_default = horizon.unwrap_or(DEFAULT_HORIZON);
        let (text, keyword_forms) =
            fill_text(&skeleton, actions, lexicon, horizon_or_default, &mut rng)?;
        return Ok(QueryCase {
            id: id.to_string(),
            mode,
            topic: topic.to_string(),
            actions: actions.to_vec(),
            skeleton,
            keyword_forms,
            text,
            constraints: derived,
            hidden_durations: if mode == Mode::Extended { durations.clone() } else { Default::default() },
            horizon: (mode == Mode::Extended).then_some(horizon_or_default),
            seed,
        });
    }
    Err(SynthesisError::NoEquivalent { attempts })
}

/// Merges edges into `L < R` groups when the full cross product is present.
fn group_edges<R: Rng + ?Sized>(edges: &[(ActionId, ActionId)], rng: &mut R) -> Vec<Unit> {
    let mut pending: Vec<(ActionId, ActionId)> = edges.to_vec();
    pending.shuffle(rng);
    let mut units = Vec::new();
    while let Some((b, a)) = pending.pop() {
        if rng.gen_bool(0.5) {
            if let Some(i) = pending.iter().position(|&(b2, a2)| a2 == a && b2 != b) {
                let (b2, _) = pending.remove(i);
                units.push(Unit::Order(vec![b, b2], vec![a]));
                continue;
            }
            if let Some(i) = pending.iter().position(|&(b2, a2)| b2 == b && a2 != a) {
                let (_, a2) = pending.remove(i);
                units.push(Unit::Order(vec![b], vec![a, a2]));
                continue;
            }
        }
        units.push(Unit::Order(vec![b], vec![a]));
    }
    units
}

fn express<R: Rng + ?Sized>(unit: Unit, rng: &mut R) -> SubSentence {
    match unit {
        Unit::Order(before, after) => {
            let shape = rng.gen_range(0..5);
            if rng.gen_bool(0.5) {
                pair_sub_sentence(
                    NounPhrase::plain(before),
                    Direction::Before,
                    NounPhrase::plain(after),
                    shape,
                )
            } else {
                pair_sub_sentence(
                    NounPhrase::plain(after),
                    Direction::After,
                    NounPhrase::plain(before),
                    shape,
                )
            }
        }
        Unit::Bound(action, direction, at) => {
            let subject = NounPhrase::single(action);
            let object = Object::Time(at);
            SubSentence::Independent(match rng.gen_range(0..3) {
                0 => IndependentClause::Verb {
                    subject,
                    direction,
                    object,
                },
                1 => IndependentClause::Prep {
                    subject,
                    direction,
                    object,
                },
                _ => IndependentClause::FrontedPrep {
                    direction,
                    object,
                    subject,
                },
            })
        }
    }
}

/// Groups sub-sentences into sentences of one to three, joined by random conjunctions.
fn split_sentences<R: Rng + ?Sized>(subs: Vec<SubSentence>, rng: &mut R) -> Paragraph {
    let mut sentences = Vec::new();
    let mut it = subs.into_iter().peekable();
    while let Some(first) = it.next() {
        let extra = rng.gen_range(0..3);
        let mut rest = Vec::new();
        for _ in 0..extra {
            match it.next() {
                Some(s) => rest.push((*Conjunction::ALL.choose(rng).expect("non-empty"), s)),
                None => break,
            }
        }
        sentences.push(Sentence { first, rest });
    }
    Paragraph { sentences }
}
