//! Text filling: keyword slots get lexicon forms, action slots get activity phrases.

use std::collections::BTreeMap;

use rand::Rng;

use crate::grammar::{Conjunction, ParagraphSkeleton, Token};
use crate::lexicon::{conjugate, Lexicon, LexiconError};
use crate::model::{format_hour, ActionId, ActionSpec, Hour, Mode};

/// One base-form surface form per keyword slot, in surface order.
pub fn choose_forms<R: Rng + ?Sized>(
    skeleton: &ParagraphSkeleton,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Result<Vec<String>, LexiconError> {
    skeleton
        .keyword_slots()
        .into_iter()
        .map(|c| lexicon.sample_form(c, rng).map(str::to_string))
        .collect()
}

enum Piece {
    Word(String),
    Comma,
    Semicolon,
    Period,
}

/// Renders the synthesized sentences. `forms` must hold one form per keyword slot.
pub fn render_sentences(
    skeleton: &ParagraphSkeleton,
    phrases: &BTreeMap<ActionId, String>,
    forms: &[String],
) -> String {
    let mut pieces = Vec::new();
    let mut forms = forms.iter();
    for t in skeleton.tokens() {
        match t {
            Token::Action(a) => pieces.push(Piece::Word(
                phrases.get(&a).cloned().unwrap_or_else(|| a.to_string()),
            )),
            Token::And => pieces.push(Piece::Word("and".into())),
            Token::Time(h) => pieces.push(Piece::Word(format_hour(h))),
            Token::Keyword { plural, .. } => {
                let form = forms.next().expect("one form per keyword slot");
                pieces.push(Piece::Word(if t_is_verb(&t) {
                    conjugate(form, plural)
                } else {
                    form.clone()
                }));
            }
            Token::Comma => pieces.push(Piece::Comma),
            Token::Which => pieces.push(Piece::Word("which".into())),
            Token::Conjunction(Conjunction::Semicolon) => pieces.push(Piece::Semicolon),
            Token::Conjunction(j) => {
                pieces.push(Piece::Comma);
                pieces.push(Piece::Word(j.token().trim_start_matches(", ").into()));
            }
            Token::EndOfSentence => pieces.push(Piece::Period),
        }
    }
    assemble(pieces)
}

fn t_is_verb(t: &Token) -> bool {
    matches!(t, Token::Keyword { class, .. } if class.part_of_speech == crate::grammar::PartOfSpeech::VerbPhrase)
}

fn assemble(pieces: Vec<Piece>) -> String {
    // Drop commas that run into another comma, a semicolon or a period.
    let mut kept: Vec<&Piece> = Vec::with_capacity(pieces.len());
    for (i, p) in pieces.iter().enumerate() {
        if matches!(p, Piece::Comma)
            && matches!(
                pieces.get(i + 1),
                Some(Piece::Comma | Piece::Semicolon | Piece::Period)
            )
        {
            continue;
        }
        kept.push(p);
    }
    let mut out = String::new();
    let mut capitalize = true;
    for p in kept {
        match p {
            Piece::Word(w) => {
                if !out.is_empty() {
                    out.push(' ');
                }
                if capitalize {
                    let mut chars = w.chars();
                    if let Some(c) = chars.next() {
                        out.extend(c.to_uppercase());
                        out.push_str(chars.as_str());
                    }
                    capitalize = false;
                } else {
                    out.push_str(w);
                }
            }
            Piece::Comma => out.push(','),
            Piece::Semicolon => out.push(';'),
            Piece::Period => {
                out.push('.');
                capitalize = true;
            }
        }
    }
    out
}

/// Wraps the synthesized sentences in the task-list preamble and instructions.
/// Tasks are listed alphabetically so the list carries no ordering hint.
pub fn frame(mode: Mode, actions: &[ActionSpec], body: &str, horizon: (Hour, Hour)) -> String {
    let mut tasks: Vec<&str> = actions.iter().map(|a| a.phrase.as_str()).collect();
    tasks.sort_unstable();
    let mut text = format!(
        "Today I have the following tasks to get through: {}.\n\n{body}\n\n",
        tasks.join("; ")
    );
    text.push_str(
        "Use the tools provided to carry out every task. Call each tool exactly once, \
         in an order that meets all of the requirements above.",
    );
    if mode == Mode::Extended {
        text.push_str(&format!(
            "\n\nMy day runs from {} to {}. Every tool takes the start time of its task as an \
             argument and reports how long the task took. Only one task can run at a time, so a \
             task may start only once the previous one has finished, and every task has to start \
             and finish inside the day. If a reported duration means the remaining requirements \
             can no longer be met, stop with an early halt and plan again.",
            format_hour(horizon.0),
            format_hour(horizon.1)
        ));
    }
    text
}

pub fn phrase_map(actions: &[ActionSpec]) -> BTreeMap<ActionId, String> {
    actions.iter().map(|a| (a.id, a.phrase.clone())).collect()
}

/// Chooses forms for every slot and renders the framed query.
pub fn fill_text<R: Rng + ?Sized>(
    skeleton: &ParagraphSkeleton,
    actions: &[ActionSpec],
    lexicon: &Lexicon,
    horizon: (Hour, Hour),
    rng: &mut R,
) -> Result<(String, Vec<String>), LexiconError> {
    let forms = choose_forms(skeleton, lexicon, rng)?;
    let body = render_sentences(skeleton, &phrase_map(actions), &forms);
    Ok((frame(skeleton.mode, actions, &body, horizon), forms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{
        IndependentClause, NounPhrase, Object, Paragraph, RelativeClause, Sentence, SubSentence,
    };
    use crate::model::Direction;

    fn a(i: u16) -> ActionId {
        ActionId(i)
    }

    fn one(sub: SubSentence, mode: Mode) -> ParagraphSkeleton {
        ParagraphSkeleton {
            mode,
            root: Paragraph {
                sentences: vec![Sentence::single(sub)],
            },
        }
    }

    fn phrases() -> BTreeMap<ActionId, String> {
        [
            (a(1), "network diagnosis"),
            (a(2), "network status check"),
            (a(3), "network speed test"),
        ]
        .into_iter()
        .map(|(k, v)| (k, v.to_string()))
        .collect()
    }

    #[test]
    fn verb_phrase_is_conjugated() {
        let s = one(
            SubSentence::Independent(IndependentClause::Verb {
                subject: NounPhrase::single(a(1)),
                direction: Direction::After,
                object: Object::Actions(NounPhrase::single(a(2))),
            }),
            Mode::Basic,
        );
        let text = render_sentences(&s, &phrases(), &["come after".into()]);
        assert_eq!(text, "Network diagnosis comes after network status check.");
    }

    #[test]
    fn time_point_and_trailing_relative_comma() {
        let s = one(
            SubSentence::Independent(IndependentClause::Prep {
                subject: NounPhrase::single(a(3)),
                direction: Direction::Before,
                object: Object::Time(15),
            }),
            Mode::Extended,
        );
        let text = render_sentences(&s, &phrases(), &["be executed".into(), "before".into()]);
        assert_eq!(text, "Network speed test is executed before 15:00.");

        let object = NounPhrase {
            actions: vec![a(2), a(3)],
            relative: Some(Box::new(RelativeClause::Verb {
                direction: Direction::Before,
                object: Object::Actions(NounPhrase::single(a(1))),
            })),
        };
        let s = one(
            SubSentence::Independent(IndependentClause::Verb {
                subject: NounPhrase::single(a(1)),
                direction: Direction::After,
                object: Object::Actions(object),
            }),
            Mode::Basic,
        );
        let text = render_sentences(&s, &phrases(), &["follow".into(), "precede".into()]);
        assert_eq!(
            text,
            "Network diagnosis follows network status check and network speed test, which precede network diagnosis."
        );
    }
}
