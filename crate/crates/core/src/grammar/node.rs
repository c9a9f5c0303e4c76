//! Generic `{kind, payload, children}` tree used for skeleton files, and the
//! validating parser that rebuilds the typed tree from it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Paragraph,
    Sentence,
    SubSentence,
    IndependentClause,
    MultiClause,
    DependentClause,
    RelativeClause,
    Subject,
    Object,
    Conjunction,
    ActionRef,
    TimeRef,
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Action(ActionId),
    Time(Hour),
    Keyword(KeywordClass),
    Conjunction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub kind: NodeKind,
    #[serde(default)]
    pub payload: Option<Payload>,
    #[serde(default)]
    pub children: Vec<SkeletonNode>,
}

impl SkeletonNode {
    fn inner(kind: NodeKind, children: Vec<SkeletonNode>) -> Self {
        SkeletonNode {
            kind,
            payload: None,
            children,
        }
    }

    fn leaf(kind: NodeKind, payload: Payload) -> Self {
        SkeletonNode {
            kind,
            payload: Some(payload),
            children: Vec::new(),
        }
    }

    fn keyword(class: KeywordClass) -> Self {
        Self::leaf(NodeKind::Keyword, Payload::Keyword(class))
    }
}

#[derive(Serialize, Deserialize)]
struct SkeletonFile {
    mode: Mode,
    root: SkeletonNode,
}

impl From<&ParagraphSkeleton> for SkeletonNode {
    fn from(p: &ParagraphSkeleton) -> Self {
        SkeletonNode::inner(
            NodeKind::Paragraph,
            p.root.sentences.iter().map(sentence_node).collect(),
        )
    }
}

fn sentence_node(s: &Sentence) -> SkeletonNode {
    let mut children = vec![sub_sentence_node(&s.first)];
    for (j, sub) in &s.rest {
        children.push(SkeletonNode::leaf(
            NodeKind::Conjunction,
            Payload::Conjunction(j.token().to_string()),
        ));
        children.push(sub_sentence_node(sub));
    }
    SkeletonNode::inner(NodeKind::Sentence, children)
}

fn sub_sentence_node(s: &SubSentence) -> SkeletonNode {
    let child = match s {
        SubSentence::Independent(c) => {
            let children = match c {
                IndependentClause::Verb {
                    subject,
                    direction,
                    object,
                } => vec![
                    np_node(NodeKind::Subject, subject),
                    SkeletonNode::keyword(KeywordClass::verb(*direction)),
                    object_node(object),
                ],
                IndependentClause::Prep {
                    subject,
                    direction,
                    object,
                } => vec![
                    np_node(NodeKind::Subject, subject),
                    SkeletonNode::keyword(KeywordClass::VP_NEUTRAL),
                    SkeletonNode::keyword(KeywordClass::preposition(*direction)),
                    object_node(object),
                ],
                IndependentClause::FrontedPrep {
                    direction,
                    object,
                    subject,
                } => vec![
                    SkeletonNode::keyword(KeywordClass::preposition(*direction)),
                    object_node(object),
                    np_node(NodeKind::Subject, subject),
                    SkeletonNode::keyword(KeywordClass::VP_NEUTRAL),
                ],
            };
            SkeletonNode::inner(NodeKind::IndependentClause, children)
        }
        SubSentence::Multi(m) => {
            let children = match m {
                MultiClause::Infix {
                    main,
                    direction,
                    other,
                } => vec![
                    dependent_node(main),
                    SkeletonNode::keyword(KeywordClass::sequential(*direction)),
                    dependent_node(other),
                ],
                MultiClause::Fronted {
                    direction,
                    other,
                    main,
                } => vec![
                    SkeletonNode::keyword(KeywordClass::sequential(*direction)),
                    dependent_node(other),
                    dependent_node(main),
                ],
            };
            SkeletonNode::inner(NodeKind::MultiClause, children)
        }
    };
    SkeletonNode::inner(NodeKind::SubSentence, vec![child])
}

fn dependent_node(d: &DependentClause) -> SkeletonNode {
    SkeletonNode::inner(
        NodeKind::DependentClause,
        vec![
            np_node(NodeKind::Subject, &d.subject),
            SkeletonNode::keyword(KeywordClass::VP_NEUTRAL),
        ],
    )
}

fn np_node(kind: NodeKind, np: &NounPhrase) -> SkeletonNode {
    let mut children: Vec<SkeletonNode> = np
        .actions
        .iter()
        .map(|&a| SkeletonNode::leaf(NodeKind::ActionRef, Payload::Action(a)))
        .collect();
    if let Some(rel) = &np.relative {
        let rc = match rel.as_ref() {
            RelativeClause::Verb { direction, object } => vec![
                SkeletonNode::keyword(KeywordClass::verb(*direction)),
                object_node(object),
            ],
            RelativeClause::Prep { direction, object } => vec![
                SkeletonNode::keyword(KeywordClass::VP_NEUTRAL),
                SkeletonNode::keyword(KeywordClass::preposition(*direction)),
                object_node(object),
            ],
        };
        children.push(SkeletonNode::inner(NodeKind::RelativeClause, rc));
    }
    SkeletonNode::inner(kind, children)
}

fn object_node(o: &Object) -> SkeletonNode {
    match o {
        Object::Actions(np) => np_node(NodeKind::Object, np),
        Object::Time(t) => SkeletonNode::inner(
            NodeKind::Object,
            vec![SkeletonNode::leaf(NodeKind::TimeRef, Payload::Time(*t))],
        ),
    }
}

/// Pretty JSON with a fixed field order (`mode`, `root`; then `kind`,
/// `payload`, `children` on every node), stable enough for golden files.
pub fn serialize_skeleton(skeleton: &ParagraphSkeleton) -> String {
    let file = SkeletonFile {
        mode: skeleton.mode,
        root: skeleton.into(),
    };
    serde_json::to_string_pretty(&file).expect("skeleton trees always serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed skeleton JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("at {path}: {production:?}: {message}")]
    Production {
        path: NodePath,
        production: NodeKind,
        message: String,
    },
    #[error("at {path}: action {action} is not declared for this case")]
    UnknownAction { path: NodePath, action: ActionId },
    #[error("at {path}: time references are only allowed in extended-mode objects")]
    TimeNotAllowed { path: NodePath },
}

/// Child-index path from the root, printed as `/0/2/1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    fn child(&self, i: usize) -> NodePath {
        let mut v = self.0.clone();
        v.push(i);
        NodePath(v)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

/// Parses a skeleton file, checking every node against the grammar
/// productions and every action reference against `declared`.
pub fn parse_skeleton(text: &str, declared: &[ActionId]) -> Result<ParagraphSkeleton, ParseError> {
    let file: SkeletonFile = serde_json::from_str(text).map_err(|e| ParseError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_file(file, Some(declared.iter().copied().collect()))
}

fn from_file(file: SkeletonFile, declared: Option<BTreeSet<ActionId>>) -> Parsed<ParagraphSkeleton> {
    let parser = Parser {
        declared,
        mode: file.mode,
    };
    let root = parser.paragraph(&file.root, &NodePath::default())?;
    Ok(ParagraphSkeleton {
        mode: file.mode,
        root,
    })
}

/// Embeds as the same `{mode, root}` tree; deserializing checks productions
/// but not the declared action set.
impl Serialize for ParagraphSkeleton {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SkeletonFile {
            mode: self.mode,
            root: self.into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParagraphSkeleton {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = SkeletonFile::deserialize(d)?;
        from_file(file, None).map_err(serde::de::Error::custom)
    }
}

struct Parser {
    declared: Option<BTreeSet<ActionId>>,
    mode: Mode,
}

type Parsed<T> = Result<T, ParseError>;

fn fail<T>(path: &NodePath, production: NodeKind, message: impl Into<String>) -> Parsed<T> {
    Err(ParseError::Production {
        path: path.clone(),
        production,
        message: message.into(),
    })
}

fn expect_kind(node: &SkeletonNode, kind: NodeKind, path: &NodePath) -> Parsed<()> {
    if node.kind != kind {
        return fail(path, kind, format!("expected {kind:?}, found {:?}", node.kind));
    }
    if node.payload.is_some() && !matches!(
        kind,
        NodeKind::ActionRef | NodeKind::TimeRef | NodeKind::Keyword | NodeKind::Conjunction
    ) {
        return fail(path, kind, "non-leaf nodes carry no payload");
    }
    Ok(())
}

impl Parser {
    fn paragraph(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<Paragraph> {
        expect_kind(node, NodeKind::Paragraph, path)?;
        if node.children.is_empty() {
            return fail(path, NodeKind::Paragraph, "a paragraph needs at least one sentence");
        }
        let sentences = node
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| self.sentence(c, &path.child(i)))
            .collect::<Parsed<Vec<_>>>()?;
        Ok(Paragraph { sentences })
    }

    fn sentence(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<Sentence> {
        expect_kind(node, NodeKind::Sentence, path)?;
        let ch = &node.children;
        if ch.is_empty() || ch.len().is_multiple_of(2) {
            return fail(
                path,
                NodeKind::Sentence,
                "expected SubSentence (Conjunction SubSentence)*",
            );
        }
        let first = self.sub_sentence(&ch[0], &path.child(0))?;
        let mut rest = Vec::new();
        for i in (1..ch.len()).step_by(2) {
            let j = self.conjunction(&ch[i], &path.child(i))?;
            let s = self.sub_sentence(&ch[i + 1], &path.child(i + 1))?;
            rest.push((j, s));
        }
        Ok(Sentence { first, rest })
    }

    fn conjunction(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<Conjunction> {
        expect_kind(node, NodeKind::Conjunction, path)?;
        match &node.payload {
            Some(Payload::Conjunction(tok)) if node.children.is_empty() => {
                Conjunction::from_token(tok).map_or_else(
                    || fail(path, NodeKind::Conjunction, format!("unknown conjunction `{tok}`")),
                    Ok,
                )
            }
            _ => fail(path, NodeKind::Conjunction, "expected a conjunction token leaf"),
        }
    }

    fn sub_sentence(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<SubSentence> {
        expect_kind(node, NodeKind::SubSentence, path)?;
        let [child] = node.children.as_slice() else {
            return fail(
                path,
                NodeKind::SubSentence,
                "expected exactly one IndependentClause or MultiClause",
            );
        };
        let p = path.child(0);
        match child.kind {
            NodeKind::IndependentClause => Ok(SubSentence::Independent(self.independent(child, &p)?)),
            NodeKind::MultiClause => Ok(SubSentence::Multi(self.multi(child, &p)?)),
            other => fail(
                &p,
                NodeKind::SubSentence,
                format!("expected IndependentClause or MultiClause, found {other:?}"),
            ),
        }
    }

    fn independent(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<IndependentClause> {
        const PROD: NodeKind = NodeKind::IndependentClause;
        expect_kind(node, PROD, path)?;
        let ch = &node.children;
        let shape: Vec<NodeKind> = ch.iter().map(|c| c.kind).collect();
        use NodeKind::{Keyword as K, Object as O, Subject as S};
        match shape.as_slice() {
            [S, K, O] => {
                let subject = self.noun_phrase(&ch[0], NodeKind::Subject, &path.child(0))?;
                let direction = self.directional(&ch[1], PartOfSpeech::VerbPhrase, &path.child(1))?;
                let object = self.object(&ch[2], &path.child(2))?;
                Ok(IndependentClause::Verb {
                    subject,
                    direction,
                    object,
                })
            }
            [S, K, K, O] => {
                let subject = self.noun_phrase(&ch[0], NodeKind::Subject, &path.child(0))?;
                self.neutral(&ch[1], &path.child(1))?;
                let direction = self.directional(&ch[2], PartOfSpeech::Preposition, &path.child(2))?;
                let object = self.object(&ch[3], &path.child(3))?;
                Ok(IndependentClause::Prep {
                    subject,
                    direction,
                    object,
                })
            }
            [K, O, S, K] => {
                let direction = self.directional(&ch[0], PartOfSpeech::Preposition, &path.child(0))?;
                let object = self.object(&ch[1], &path.child(1))?;
                let subject = self.noun_phrase(&ch[2], NodeKind::Subject, &path.child(2))?;
                self.neutral(&ch[3], &path.child(3))?;
                Ok(IndependentClause::FrontedPrep {
                    direction,
                    object,
                    subject,
                })
            }
            _ => {
                let missing = if !shape.contains(&O) {
                    "missing Object; "
                } else if !shape.contains(&S) {
                    "missing Subject; "
                } else {
                    ""
                };
                fail(
                    path,
                    PROD,
                    format!(
                        "{missing}expected [Subject Keyword Object], [Subject Keyword Keyword Object] \
                         or [Keyword Object Subject Keyword], found {shape:?}"
                    ),
                )
            }
        }
    }

    fn multi(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<MultiClause> {
        const PROD: NodeKind = NodeKind::MultiClause;
        expect_kind(node, PROD, path)?;
        let ch = &node.children;
        let shape: Vec<NodeKind> = ch.iter().map(|c| c.kind).collect();
        use NodeKind::{DependentClause as D, Keyword as K};
        match shape.as_slice() {
            [D, K, D] => {
                let main = self.dependent(&ch[0], &path.child(0))?;
                let direction = self.directional(
                    &ch[1],
                    PartOfSpeech::SequentialConjunction,
                    &path.child(1),
                )?;
                let other = self.dependent(&ch[2], &path.child(2))?;
                Ok(MultiClause::Infix {
                    main,
                    direction,
                    other,
                })
            }
            [K, D, D] => {
                let direction = self.directional(
                    &ch[0],
                    PartOfSpeech::SequentialConjunction,
                    &path.child(0),
                )?;
                let other = self.dependent(&ch[1], &path.child(1))?;
                let main = self.dependent(&ch[2], &path.child(2))?;
                Ok(MultiClause::Fronted {
                    direction,
                    other,
                    main,
                })
            }
            _ => fail(
                path,
                PROD,
                format!(
                    "expected [DependentClause Keyword DependentClause] or \
                     [Keyword DependentClause DependentClause], found {shape:?}"
                ),
            ),
        }
    }

    fn dependent(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<DependentClause> {
        expect_kind(node, NodeKind::DependentClause, path)?;
        match node.children.as_slice() {
            [s, k] if s.kind == NodeKind::Subject => {
                let subject = self.noun_phrase(s, NodeKind::Subject, &path.child(0))?;
                self.neutral(k, &path.child(1))?;
                Ok(DependentClause { subject })
            }
            _ => fail(path, NodeKind::DependentClause, "expected [Subject Keyword(VP0)]"),
        }
    }

    fn relative(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<RelativeClause> {
        const PROD: NodeKind = NodeKind::RelativeClause;
        expect_kind(node, PROD, path)?;
        let ch = &node.children;
        let shape: Vec<NodeKind> = ch.iter().map(|c| c.kind).collect();
        use NodeKind::{Keyword as K, Object as O};
        match shape.as_slice() {
            [K, O] => {
                let direction = self.directional(&ch[0], PartOfSpeech::VerbPhrase, &path.child(0))?;
                let object = self.object(&ch[1], &path.child(1))?;
                Ok(RelativeClause::Verb { direction, object })
            }
            [K, K, O] => {
                self.neutral(&ch[0], &path.child(0))?;
                let direction = self.directional(&ch[1], PartOfSpeech::Preposition, &path.child(1))?;
                let object = self.object(&ch[2], &path.child(2))?;
                Ok(RelativeClause::Prep { direction, object })
            }
            _ => fail(
                path,
                PROD,
                format!("expected [Keyword Object] or [Keyword Keyword Object], found {shape:?}"),
            ),
        }
    }

    fn object(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<Object> {
        expect_kind(node, NodeKind::Object, path)?;
        if let [t] = node.children.as_slice() {
            if t.kind == NodeKind::TimeRef {
                let p = path.child(0);
                if self.mode != Mode::Extended {
                    return Err(ParseError::TimeNotAllowed { path: p });
                }
                return match (&t.payload, t.children.is_empty()) {
                    (Some(Payload::Time(h)), true) if (0..=24).contains(h) => Ok(Object::Time(*h)),
                    _ => fail(&p, NodeKind::TimeRef, "expected a clock-hour leaf in 0..=24"),
                };
            }
        }
        Ok(Object::Actions(self.noun_phrase(node, NodeKind::Object, path)?))
    }

    fn noun_phrase(&self, node: &SkeletonNode, kind: NodeKind, path: &NodePath) -> Parsed<NounPhrase> {
        expect_kind(node, kind, path)?;
        let mut actions = Vec::new();
        let mut relative = None;
        for (i, c) in node.children.iter().enumerate() {
            let p = path.child(i);
            match c.kind {
                NodeKind::ActionRef if relative.is_none() => {
                    let Some(Payload::Action(a)) = c.payload else {
                        return fail(&p, NodeKind::ActionRef, "expected an action id payload");
                    };
                    if !c.children.is_empty() {
                        return fail(&p, NodeKind::ActionRef, "action references are leaves");
                    }
                    if self.declared.as_ref().is_some_and(|d| !d.contains(&a)) {
                        return Err(ParseError::UnknownAction { path: p, action: a });
                    }
                    actions.push(a);
                }
                NodeKind::RelativeClause if relative.is_none() && !actions.is_empty() => {
                    relative = Some(Box::new(self.relative(c, &p)?));
                }
                NodeKind::TimeRef => return Err(ParseError::TimeNotAllowed { path: p }),
                other => {
                    return fail(
                        &p,
                        kind,
                        format!("expected ActionRef+ optionally followed by one RelativeClause, found {other:?}"),
                    )
                }
            }
        }
        if actions.is_empty() {
            return fail(path, kind, "expected at least one ActionRef");
        }
        Ok(NounPhrase { actions, relative })
    }

    fn keyword_class(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<KeywordClass> {
        expect_kind(node, NodeKind::Keyword, path)?;
        match (&node.payload, node.children.is_empty()) {
            (Some(Payload::Keyword(k)), true) => {
                KeywordClass::new(k.part_of_speech, k.direction)
                    .or_else(|e| fail(path, NodeKind::Keyword, e.to_string()))
            }
            _ => fail(path, NodeKind::Keyword, "expected a keyword-class leaf"),
        }
    }

    fn neutral(&self, node: &SkeletonNode, path: &NodePath) -> Parsed<()> {
        let k = self.keyword_class(node, path)?;
        if k != KeywordClass::VP_NEUTRAL {
            return fail(path, NodeKind::Keyword, format!("expected VP0, found {k}"));
        }
        Ok(())
    }

    fn directional(&self, node: &SkeletonNode, pos: PartOfSpeech, path: &NodePath) -> Parsed<Direction> {
        let k = self.keyword_class(node, path)?;
        match (k.part_of_speech == pos, k.direction) {
            (true, KeywordDirection::Before) => Ok(Direction::Before),
            (true, KeywordDirection::After) => Ok(Direction::After),
            _ => fail(
                path,
                NodeKind::Keyword,
                format!("expected a directional {pos:?}, found {k}"),
            ),
        }
    }
}
