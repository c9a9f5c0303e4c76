//! Constraint derivation from skeletons.
//!
//! A keyword with direction `<` relates the subject side before the object
//! side. Groups expand pairwise. A relative clause relates every action of its
//! host group to its own object. In a multi-clause the main clause (the one
//! not attached to the sequential conjunction) is the subject side, in both
//! word orders.

use crate::grammar::{NounPhrase, Object, ParagraphSkeleton, RelativeClause, Sentence, SubSentence};
use crate::model::{ActionId, Direction, Mode};
use crate::solver::{Constraint, ConstraintSet};

/// Every constraint stated by the skeleton, over the actions it mentions.
pub fn derive_constraints(skeleton: &ParagraphSkeleton) -> ConstraintSet {
    let mut cs = ConstraintSet::new(skeleton.mode, skeleton.mentions());
    for s in &skeleton.root.sentences {
        cs.extend(sentence_constraints(s));
    }
    cs
}

pub fn sentence_constraints(s: &Sentence) -> Vec<Constraint> {
    let mut out = Vec::new();
    for sub in s.sub_sentences() {
        sub_sentence_into(sub, &mut out);
    }
    out
}

pub fn sub_sentence_constraints(s: &SubSentence) -> Vec<Constraint> {
    let mut out = Vec::new();
    sub_sentence_into(s, &mut out);
    out
}

fn sub_sentence_into(s: &SubSentence, out: &mut Vec<Constraint>) {
    match s {
        SubSentence::Independent(c) => {
            let (subject, direction, object) = c.parts();
            noun_phrase_into(subject, out);
            relate(&subject.actions, direction, object, out);
            object_into(object, out);
        }
        SubSentence::Multi(m) => {
            let (main, direction, other) = m.parts();
            noun_phrase_into(&main.subject, out);
            noun_phrase_into(&other.subject, out);
            relate_groups(&main.subject.actions, direction, &other.subject.actions, out);
        }
    }
}

fn noun_phrase_into(np: &NounPhrase, out: &mut Vec<Constraint>) {
    if let Some(rel) = &np.relative {
        let (direction, object) = match rel.as_ref() {
            RelativeClause::Verb { direction, object } | RelativeClause::Prep { direction, object } => {
                (*direction, object)
            }
        };
        relate(&np.actions, direction, object, out);
        object_into(object, out);
    }
}

fn object_into(o: &Object, out: &mut Vec<Constraint>) {
    if let Object::Actions(np) = o {
        noun_phrase_into(np, out);
    }
}

fn relate(subject: &[ActionId], direction: Direction, object: &Object, out: &mut Vec<Constraint>) {
    match object {
        Object::Actions(np) => relate_groups(subject, direction, &np.actions, out),
        Object::Time(at) => {
            for &action in subject {
                push(
                    out,
                    Constraint::StartBound {
                        action,
                        direction,
                        at: *at,
                    },
                );
            }
        }
    }
}

fn relate_groups(lhs: &[ActionId], direction: Direction, rhs: &[ActionId], out: &mut Vec<Constraint>) {
    for &l in lhs {
        for &r in rhs {
            let c = match direction {
                Direction::Before => Constraint::order(l, r),
                Direction::After => Constraint::order(r, l),
            };
            push(out, c);
        }
    }
}

fn push(out: &mut Vec<Constraint>, c: Constraint) {
    if !out.contains(&c) {
        out.push(c);
    }
}

/// The empty constraint set over `actions`. In basic mode the permutation
/// domain is implicit, so every ordering of the actions is a witness.
pub fn init_constraints(actions: &[ActionId], mode: Mode) -> ConstraintSet {
    ConstraintSet::new(mode, actions.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{DependentClause, IndependentClause, MultiClause, Paragraph};

    fn a(i: u16) -> ActionId {
        ActionId(i)
    }

    fn skel(mode: Mode, subs: Vec<SubSentence>) -> ParagraphSkeleton {
        ParagraphSkeleton {
            mode,
            root: Paragraph {
                sentences: subs.into_iter().map(Sentence::single).collect(),
            },
        }
    }

    fn np(ids: &[u16]) -> NounPhrase {
        NounPhrase::plain(ids.iter().map(|&i| a(i)).collect())
    }

    #[test]
    fn verb_after() {
        let s = skel(
            Mode::Basic,
            vec![SubSentence::Independent(IndependentClause::Verb {
                subject: np(&[1]),
                direction: Direction::After,
                object: Object::Actions(np(&[2])),
            })],
        );
        assert_eq!(derive_constraints(&s).constraints, vec![Constraint::order(a(2), a(1))]);
    }

    #[test]
    fn group_cross_product() {
        let s = skel(
            Mode::Basic,
            vec![SubSentence::Independent(IndependentClause::Verb {
                subject: np(&[1, 2]),
                direction: Direction::Before,
                object: Object::Actions(np(&[3])),
            })],
        );
        assert_eq!(
            derive_constraints(&s).constraints,
            vec![Constraint::order(a(1), a(3)), Constraint::order(a(2), a(3))]
        );
    }

    #[test]
    fn relative_clause_constrains_host() {
        let subject = NounPhrase {
            actions: vec![a(1)],
            relative: Some(Box::new(RelativeClause::Verb {
                direction: Direction::Before,
                object: Object::Actions(np(&[3])),
            })),
        };
        let s = skel(
            Mode::Basic,
            vec![SubSentence::Independent(IndependentClause::Verb {
                subject,
                direction: Direction::After,
                object: Object::Actions(np(&[2])),
            })],
        );
        let got = derive_constraints(&s).constraints;
        assert_eq!(got.len(), 2);
        assert!(got.contains(&Constraint::order(a(1), a(3))));
        assert!(got.contains(&Constraint::order(a(2), a(1))));
    }

    #[test]
    fn fronted_sequential_conjunction_keeps_main_first() {
        let s = skel(
            Mode::Basic,
            vec![SubSentence::Multi(MultiClause::Fronted {
                direction: Direction::Before,
                other: DependentClause { subject: np(&[3]) },
                main: DependentClause { subject: np(&[1]) },
            })],
        );
        assert_eq!(derive_constraints(&s).constraints, vec![Constraint::order(a(1), a(3))]);
    }

    #[test]
    fn time_point_bounds_start() {
        let s = skel(
            Mode::Extended,
            vec![SubSentence::Independent(IndependentClause::Prep {
                subject: np(&[2]),
                direction: Direction::Before,
                object: Object::Time(15),
            })],
        );
        assert_eq!(
            derive_constraints(&s).constraints,
            vec![Constraint::StartBound {
                action: a(2),
                direction: Direction::Before,
                at: 15
            }]
        );
    }
}
