//! The query DSL as a typed abstract-syntax tree.
//!
//! ```text
//! P   ::= S+
//! S   ::= s | S j s
//! s   ::= c_i | m
//! c_i ::= s (VP< | VP>) o | s VP0 (P< | P>) o | (P< | P>) o "," s VP0
//! m   ::= c_d (SC< | SC>) c_d' | (SC< | SC>) c_d' "," c_d
//! c_d ::= s VP0
//! c_r ::= "which" (VP< | VP>) o | "which" VP0 (P< | P>) o
//! s   ::= a+ | a+ "," c_r ","          o ::= a+ | a+ "," c_r "," | t (extended)
//! j   ::= ";" | "," (and | but | yet) | "," (while | whereas)
//! ```
//!
//! `<` marks keywords whose subject side happens first, `>` the opposite, and
//! `0` verb phrases with no temporal meaning.

mod census;
mod expand;
mod node;

pub use census::{enumerate_expansion_options, ExpansionCensus, GrammarTable, ProductionCount, Symbol, REFERENCE_TOTAL};
pub use expand::{expand_sentence, ExpansionPolicy};
pub use node::{parse_skeleton, serialize_skeleton, NodeKind, ParseError, Payload, SkeletonNode};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ActionId, Direction, Hour, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartOfSpeech {
    VerbPhrase,
    Preposition,
    SequentialConjunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeywordDirection {
    Before,
    After,
    Neutral,
}

impl From<Direction> for KeywordDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Before => KeywordDirection::Before,
            Direction::After => KeywordDirection::After,
        }
    }
}

/// Part of speech plus temporal direction of a keyword slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeywordClass {
    pub part_of_speech: PartOfSpeech,
    pub direction: KeywordDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("only verb phrases may be direction-neutral")]
pub struct NeutralKeywordError;

impl KeywordClass {
    pub const VP_BEFORE: Self = Self::raw(PartOfSpeech::VerbPhrase, KeywordDirection::Before);
    pub const VP_AFTER: Self = Self::raw(PartOfSpeech::VerbPhrase, KeywordDirection::After);
    pub const VP_NEUTRAL: Self = Self::raw(PartOfSpeech::VerbPhrase, KeywordDirection::Neutral);
    pub const P_BEFORE: Self = Self::raw(PartOfSpeech::Preposition, KeywordDirection::Before);
    pub const P_AFTER: Self = Self::raw(PartOfSpeech::Preposition, KeywordDirection::After);
    pub const SC_BEFORE: Self =
        Self::raw(PartOfSpeech::SequentialConjunction, KeywordDirection::Before);
    pub const SC_AFTER: Self =
        Self::raw(PartOfSpeech::SequentialConjunction, KeywordDirection::After);

    pub const ALL: [KeywordClass; 7] = [
        Self::VP_BEFORE,
        Self::VP_AFTER,
        Self::VP_NEUTRAL,
        Self::P_BEFORE,
        Self::P_AFTER,
        Self::SC_BEFORE,
        Self::SC_AFTER,
    ];

    const fn raw(part_of_speech: PartOfSpeech, direction: KeywordDirection) -> Self {
        KeywordClass {
            part_of_speech,
            direction,
        }
    }

    pub fn new(
        part_of_speech: PartOfSpeech,
        direction: KeywordDirection,
    ) -> Result<Self, NeutralKeywordError> {
        if direction == KeywordDirection::Neutral && part_of_speech != PartOfSpeech::VerbPhrase {
            return Err(NeutralKeywordError);
        }
        Ok(Self::raw(part_of_speech, direction))
    }

    pub fn verb(d: Direction) -> Self {
        Self::raw(PartOfSpeech::VerbPhrase, d.into())
    }

    pub fn preposition(d: Direction) -> Self {
        Self::raw(PartOfSpeech::Preposition, d.into())
    }

    pub fn sequential(d: Direction) -> Self {
        Self::raw(PartOfSpeech::SequentialConjunction, d.into())
    }

    /// Short symbol such as `VP<`, `P>`, `VP0`.
    pub fn symbol(&self) -> &'static str {
        use KeywordDirection::*;
        use PartOfSpeech::*;
        match (self.part_of_speech, self.direction) {
            (VerbPhrase, Before) => "VP<",
            (VerbPhrase, After) => "VP>",
            (VerbPhrase, Neutral) => "VP0",
            (Preposition, Before) => "P<",
            (Preposition, After) => "P>",
            (SequentialConjunction, Before) => "SC<",
            (SequentialConjunction, After) => "SC>",
            (_, Neutral) => "?0",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.symbol() == s)
    }
}

impl fmt::Display for KeywordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Clause conjunction `j`. Conjunctions carry no ordering semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Conjunction {
    Semicolon,
    And,
    But,
    Yet,
    While,
    Whereas,
}

impl Conjunction {
    pub const ALL: [Conjunction; 6] = [
        Conjunction::Semicolon,
        Conjunction::And,
        Conjunction::But,
        Conjunction::Yet,
        Conjunction::While,
        Conjunction::Whereas,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Conjunction::Semicolon => ";",
            Conjunction::And => ", and",
            Conjunction::But => ", but",
            Conjunction::Yet => ", yet",
            Conjunction::While => ", while",
            Conjunction::Whereas => ", whereas",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.token() == s)
    }
}

/// `a+` optionally followed by a relative clause.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NounPhrase {
    pub actions: Vec<ActionId>,
    pub relative: Option<Box<RelativeClause>>,
}

impl NounPhrase {
    pub fn plain(actions: Vec<ActionId>) -> Self {
        NounPhrase {
            actions,
            relative: None,
        }
    }

    pub fn single(a: ActionId) -> Self {
        Self::plain(vec![a])
    }

    pub fn is_plural(&self) -> bool {
        self.actions.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Object {
    Actions(NounPhrase),
    Time(Hour),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RelativeClause {
    /// `which VP<|VP> o`
    Verb { direction: Direction, object: Object },
    /// `which VP0 P<|P> o`
    Prep { direction: Direction, object: Object },
}

impl RelativeClause {
    pub fn direction(&self) -> Direction {
        match self {
            RelativeClause::Verb { direction, .. } | RelativeClause::Prep { direction, .. } => {
                *direction
            }
        }
    }

    pub fn object(&self) -> &Object {
        match self {
            RelativeClause::Verb { object, .. } | RelativeClause::Prep { object, .. } => object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndependentClause {
    /// `s VP<|VP> o`
    Verb {
        subject: NounPhrase,
        direction: Direction,
        object: Object,
    },
    /// `s VP0 P<|P> o`
    Prep {
        subject: NounPhrase,
        direction: Direction,
        object: Object,
    },
    /// `P<|P> o "," s VP0`
    FrontedPrep {
        direction: Direction,
        object: Object,
        subject: NounPhrase,
    },
}

impl IndependentClause {
    pub fn parts(&self) -> (&NounPhrase, Direction, &Object) {
        match self {
            IndependentClause::Verb {
                subject,
                direction,
                object,
            }
            | IndependentClause::Prep {
                subject,
                direction,
                object,
            }
            | IndependentClause::FrontedPrep {
                direction,
                object,
                subject,
            } => (subject, *direction, object),
        }
    }
}

/// `s VP0`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependentClause {
    pub subject: NounPhrase,
}

/// Two dependent clauses joined by a sequential conjunction. `main` is the
/// subject clause whose events the direction describes relative to `other`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MultiClause {
    /// `c_d SC c_d'`
    Infix {
        main: DependentClause,
        direction: Direction,
        other: DependentClause,
    },
    /// `SC c_d' "," c_d`
    Fronted {
        direction: Direction,
        other: DependentClause,
        main: DependentClause,
    },
}

impl MultiClause {
    pub fn parts(&self) -> (&DependentClause, Direction, &DependentClause) {
        match self {
            MultiClause::Infix {
                main,
                direction,
                other,
            }
            | MultiClause::Fronted {
                direction,
                other,
                main,
            } => (main, *direction, other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SubSentence {
    Independent(IndependentClause),
    Multi(MultiClause),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub first: SubSentence,
    pub rest: Vec<(Conjunction, SubSentence)>,
}

impl Sentence {
    pub fn single(s: SubSentence) -> Self {
        Sentence {
            first: s,
            rest: Vec::new(),
        }
    }

    pub fn sub_sentences(&self) -> impl Iterator<Item = &SubSentence> {
        std::iter::once(&self.first).chain(self.rest.iter().map(|(_, s)| s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Paragraph {
    pub sentences: Vec<Sentence>,
}

/// A query skeleton before any surface words are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParagraphSkeleton {
    pub mode: Mode,
    pub root: Paragraph,
}

impl ParagraphSkeleton {
    pub fn new(mode: Mode) -> Self {
        ParagraphSkeleton {
            mode,
            root: Paragraph::default(),
        }
    }

    pub fn sub_sentences(&self) -> impl Iterator<Item = &SubSentence> {
        self.root.sentences.iter().flat_map(Sentence::sub_sentences)
    }

    pub fn sub_sentence_count(&self) -> usize {
        self.sub_sentences().count()
    }

    /// Surface-order token stream of the whole paragraph.
    pub fn tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        for s in &self.root.sentences {
            sentence_tokens(s, &mut out);
        }
        out
    }

    /// Keyword slots in surface order.
    pub fn keyword_slots(&self) -> Vec<KeywordClass> {
        self.tokens()
            .into_iter()
            .filter_map(|t| match t {
                Token::Keyword { class, .. } => Some(class),
                _ => None,
            })
            .collect()
    }

    /// Every action reference in surface order, duplicates included.
    pub fn mentions(&self) -> Vec<ActionId> {
        self.tokens()
            .into_iter()
            .filter_map(|t| match t {
                Token::Action(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn has_time_refs(&self) -> bool {
        self.tokens().iter().any(|t| matches!(t, Token::Time(_)))
    }
}

/// Surface tokens of a skeleton; text filling renders these left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Action(ActionId),
    /// Joins the members of an `a+` group.
    And,
    Time(Hour),
    Keyword { class: KeywordClass, plural: bool },
    Comma,
    Which,
    Conjunction(Conjunction),
    EndOfSentence,
}

pub fn sentence_tokens(s: &Sentence, out: &mut Vec<Token>) {
    sub_sentence_tokens(&s.first, out);
    for (j, sub) in &s.rest {
        out.push(Token::Conjunction(*j));
        sub_sentence_tokens(sub, out);
    }
    out.push(Token::EndOfSentence);
}

pub fn sub_sentence_tokens(s: &SubSentence, out: &mut Vec<Token>) {
    match s {
        SubSentence::Independent(c) => independent_tokens(c, out),
        SubSentence::Multi(m) => multi_tokens(m, out),
    }
}

fn independent_tokens(c: &IndependentClause, out: &mut Vec<Token>) {
    match c {
        IndependentClause::Verb {
            subject,
            direction,
            object,
        } => {
            np_tokens(subject, out);
            out.push(keyword(KeywordClass::verb(*direction), subject.is_plural()));
            object_tokens(object, out);
        }
        IndependentClause::Prep {
            subject,
            direction,
            object,
        } => {
            np_tokens(subject, out);
            out.push(keyword(KeywordClass::VP_NEUTRAL, subject.is_plural()));
            out.push(keyword(KeywordClass::preposition(*direction), false));
            object_tokens(object, out);
        }
        IndependentClause::FrontedPrep {
            direction,
            object,
            subject,
        } => {
            out.push(keyword(KeywordClass::preposition(*direction), false));
            object_tokens(object, out);
            out.push(Token::Comma);
            np_tokens(subject, out);
            out.push(keyword(KeywordClass::VP_NEUTRAL, subject.is_plural()));
        }
    }
}

fn multi_tokens(m: &MultiClause, out: &mut Vec<Token>) {
    match m {
        MultiClause::Infix {
            main,
            direction,
            other,
        } => {
            dependent_tokens(main, out);
            out.push(keyword(KeywordClass::sequential(*direction), false));
            dependent_tokens(other, out);
        }
        MultiClause::Fronted {
            direction,
            other,
            main,
        } => {
            out.push(keyword(KeywordClass::sequential(*direction), false));
            dependent_tokens(other, out);
            out.push(Token::Comma);
            dependent_tokens(main, out);
        }
    }
}

fn dependent_tokens(d: &DependentClause, out: &mut Vec<Token>) {
    np_tokens(&d.subject, out);
    out.push(keyword(KeywordClass::VP_NEUTRAL, d.subject.is_plural()));
}

fn np_tokens(np: &NounPhrase, out: &mut Vec<Token>) {
    for (i, &a) in np.actions.iter().enumerate() {
        if i > 0 {
            out.push(Token::And);
        }
        out.push(Token::Action(a));
    }
    if let Some(rel) = &np.relative {
        out.push(Token::Comma);
        out.push(Token::Which);
        match rel.as_ref() {
            RelativeClause::Verb { direction, object } => {
                out.push(keyword(KeywordClass::verb(*direction), np.is_plural()));
                object_tokens(object, out);
            }
            RelativeClause::Prep { direction, object } => {
                out.push(keyword(KeywordClass::VP_NEUTRAL, np.is_plural()));
                out.push(keyword(KeywordClass::preposition(*direction), false));
                object_tokens(object, out);
            }
        }
        out.push(Token::Comma);
    }
}

fn object_tokens(o: &Object, out: &mut Vec<Token>) {
    match o {
        Object::Actions(np) => np_tokens(np, out),
        Object::Time(t) => out.push(Token::Time(*t)),
    }
}

fn keyword(class: KeywordClass, plural: bool) -> Token {
    Token::Keyword { class, plural }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("at least two actions are needed to express an ordering, got {0}")]
    TooFewActions(usize),
    #[error("expansion policy limits must be positive")]
    InvalidPolicy,
}
