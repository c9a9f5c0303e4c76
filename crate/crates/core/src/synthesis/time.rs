//! Extended mode: hidden durations, a working-day horizon and time-point sentences.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::*;
use crate::solver::feasible_schedule;

/// Turns a basic case into an extended one. Durations are resampled until the
/// basic ordering fits the horizon, then at least one time-point sentence is
/// added whose bound keeps the case feasible.
pub fn extend_with_time<R: Rng + ?Sized>(
    case: &QueryCase,
    lexicon: &Lexicon,
    rng: &mut R,
    config: &SynthesisConfig,
) -> Result<QueryCase, SynthesisError> {
    if case.mode != Mode::Basic {
        return Err(SynthesisError::NotBasic);
    }
    config.validate()?;
    let ids = case.ids();
    let (lo, hi) = config.horizon;
    let (dmin, dmax) = config.duration_range;
    let k = config.max_iterations;
    let mut basics = case.constraints.ordering_only();
    basics.mode = Mode::Extended;

    for _ in 0..k {
        let durations: BTreeMap<ActionId, Hour> =
            ids.iter().map(|&a| (a, rng.gen_range(dmin..=dmax))).collect();
        if durations.values().sum::<Hour>() > hi - lo {
            continue;
        }
        if feasible_schedule(&basics, &durations, config.horizon).is_none() {
            continue;
        }
        let env = environment_constraints(Mode::Extended, &durations, Some(config.horizon));
        let mut current = basics.union(&env);
        let wanted = rng.gen_range(config.time_sentences.0..=config.time_sentences.1);
        let mut added = Vec::new();
        for _ in 0..wanted {
            for _ in 0..k {
                let sub = time_sub_sentence(&ids, config.horizon, rng);
                let merged = current.union(&sub_sentence_constraints(&sub));
                if check_sat(&merged).is_sat() {
                    current = merged;
                    added.push(sub);
                    break;
                }
            }
        }
        if added.is_empty() {
            continue;
        }

        let mut skeleton = case.skeleton.clone();
        skeleton.mode = Mode::Extended;
        skeleton
            .root
            .sentences
            .extend(added.into_iter().map(Sentence::single));
        let constraints = case_constraints(&skeleton, &ids, &env);
        if !check_sat(&constraints).is_sat() {
            continue;
        }
        let old_slots = case.keyword_forms.len();
        let mut keyword_forms = case.keyword_forms.clone();
        for class in &skeleton.keyword_slots()[old_slots..] {
            keyword_forms.push(lexicon.sample_form(*class, rng)?.to_string());
        }
        let body = render_sentences(&skeleton, &phrase_map(&case.actions), &keyword_forms);
        let text = frame(Mode::Extended, &case.actions, &body, config.horizon);
        return Ok(QueryCase {
            id: case.id.clone(),
            mode: Mode::Extended,
            topic: case.topic.clone(),
            actions: case.actions.clone(),
            skeleton,
            keyword_forms,
            text,
            constraints,
            hidden_durations: durations,
            horizon: Some(config.horizon),
            seed: case.seed,
        });
    }
    Err(SynthesisError::Infeasible { attempts: k })
}

/// `action VP/P <direction> t` with `t` a whole hour strictly inside the horizon.
fn time_sub_sentence<R: Rng + ?Sized>(
    ids: &[ActionId],
    horizon: (Hour, Hour),
    rng: &mut R,
) -> SubSentence {
    let subject = NounPhrase::single(*ids.choose(rng).expect("non-empty"));
    let direction = *Direction::BOTH.choose(rng).expect("non-empty");
    let object = Object::Time(rng.gen_range(horizon.0 + 1..horizon.1));
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
