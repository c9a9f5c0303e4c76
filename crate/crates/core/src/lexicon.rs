//! Surface forms for keyword slots and topic-scoped activity phrases.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::endpoint::{CompletionEndpoint, EndpointError};
use crate::grammar::{KeywordClass, KeywordDirection};
use crate::model::tool_name_for;

const BUILTIN: &str = include_str!("../data/lexicon.json");

/// Topic count of a released lexicon.
pub const RELEASE_TOPICS: usize = 50;
/// Minimum activities per topic in a released lexicon.
pub const RELEASE_ACTIVITIES: usize = 20;
/// Minimum average number of forms per keyword class in a released lexicon.
pub const RELEASE_AVG_FORMS: f64 = 7.0;

pub const JOBS_PROMPT: &str =
    "Please provide a list of 50 typical jobs. Ensure that these 50 positions span a variety of industries.";

pub fn activities_prompt(role: &str) -> String {
    format!("Please list 20 activities in noun phrase format that a {role} may need to do in a day.")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("topic {topic:?} has {available} activities, {requested} requested")]
    PoolExhausted {
        topic: String,
        requested: usize,
        available: usize,
    },
    #[error("lexicon has no topics")]
    NoTopics,
    #[error("no surface form for keyword class {0}")]
    NoForms(&'static str),
    #[error("invalid lexicon: {}", .problems.join("; "))]
    Validation { problems: Vec<String> },
    #[error("cannot read lexicon file: {0}")]
    Io(String),
    #[error("malformed lexicon JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
}

/// On-disk shape: keyword classes keyed by their short symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    version: String,
    keyword_forms: BTreeMap<String, Vec<String>>,
    topics: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub version: String,
    pub keyword_forms: BTreeMap<KeywordClass, Vec<String>>,
    pub topics: BTreeMap<String, Vec<String>>,
}

impl Serialize for Lexicon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lexicon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = LexiconFile::deserialize(d)?;
        Lexicon::from_file(file).map_err(serde::de::Error::custom)
    }
}

/// The lexicon shipped with the crate.
pub fn builtin_lexicon() -> Lexicon {
    Lexicon::from_json(BUILTIN).expect("built-in lexicon is valid")
}

impl Lexicon {
    fn from_file(file: LexiconFile) -> Result<Self, LexiconError> {
        let mut problems = Vec::new();
        let mut keyword_forms = BTreeMap::new();
        for (sym, forms) in file.keyword_forms {
            match KeywordClass::from_symbol(&sym) {
                Some(c) => {
                    keyword_forms.insert(c, forms);
                }
                None => problems.push(format!("unknown keyword class {sym:?}")),
            }
        }
        if !problems.is_empty() {
            return Err(LexiconError::Validation { problems });
        }
        let lex = Lexicon {
            version: file.version,
            keyword_forms,
            topics: file.topics,
        };
        lex.check_structure()?;
        Ok(lex)
    }

    fn to_file(&self) -> LexiconFile {
        LexiconFile {
            version: self.version.clone(),
            keyword_forms: self
                .keyword_forms
                .iter()
                .map(|(c, f)| (c.symbol().to_string(), f.clone()))
                .collect(),
            topics: self.topics.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile =
            serde_json::from_str(text).map_err(|e| LexiconError::Json(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Io(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("lexicon serializes")
    }

    /// Checks every lexicon must pass: forms for each class, no form shared
    /// across directions, non-empty topics with distinct activities and tool names.
    pub fn check_structure(&self) -> Result<(), LexiconError> {
        let mut problems = Vec::new();
        for c in KeywordClass::ALL {
            let forms = self.keyword_forms.get(&c).map(Vec::as_slice).unwrap_or(&[]);
            if forms.is_empty() {
                problems.push(format!("keyword class {} has no forms", c.symbol()));
            }
            if forms.iter().any(|f| f.trim().is_empty()) {
                problems.push(format!("keyword class {} has an empty form", c.symbol()));
            }
        }
        let mut by_direction: BTreeMap<String, BTreeSet<KeywordDirection>> = BTreeMap::new();
        for (c, forms) in &self.keyword_forms {
            if c.direction == KeywordDirection::Neutral {
                continue;
            }
            for f in forms {
                by_direction
                    .entry(normalize(f))
                    .or_default()
                    .insert(c.direction);
            }
        }
        for (form, dirs) in &by_direction {
            if dirs.len() > 1 {
                problems.push(format!("form {form:?} is used for both directions"));
            }
        }
        if self.topics.is_empty() {
            problems.push("no topics".to_string());
        }
        for (topic, acts) in &self.topics {
            if topic.trim().is_empty() {
                problems.push("empty topic name".to_string());
            }
            if acts.is_empty() {
                problems.push(format!("topic {topic:?} has no activities"));
            }
            let mut seen = BTreeSet::new();
            let mut tools = BTreeSet::new();
            for a in acts {
                let tool = tool_name_for(a);
                if tool.is_empty() {
                    problems.push(format!("topic {topic:?}: activity {a:?} has no usable tool name"));
                }
                if !seen.insert(normalize(a)) {
                    problems.push(format!("topic {topic:?}: duplicate activity {a:?}"));
                } else if !tools.insert(tool.clone()) {
                    problems.push(format!("topic {topic:?}: tool name {tool} is not unique"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LexiconError::Validation { problems })
        }
    }

    /// Structural checks plus the size requirements of a released lexicon.
    pub fn check_release(&self) -> Result<(), LexiconError> {
        let mut problems = match self.check_structure() {
            Ok(()) => Vec::new(),
            Err(LexiconError::Validation { problems }) => problems,
            Err(e) => return Err(e),
        };
        if self.topics.len() != RELEASE_TOPICS {
            problems.push(format!(
                "{} topics, expected {RELEASE_TOPICS}",
                self.topics.len()
            ));
        }
        for (topic, acts) in &self.topics {
            if acts.len() < RELEASE_ACTIVITIES {
                problems.push(format!(
                    "topic {topic:?} has {} activities, need at least {RELEASE_ACTIVITIES}",
                    acts.len()
                ));
            }
        }
        let avg = self.average_forms();
        if avg < RELEASE_AVG_FORMS {
            problems.push(format!(
                "average of {avg:.2} forms per keyword class, need at least {RELEASE_AVG_FORMS}"
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LexiconError::Validation { problems })
        }
    }

    pub fn average_forms(&self) -> f64 {
        let total: usize = KeywordClass::ALL
            .iter()
            .map(|c| self.forms(*c).len())
            .sum();
        total as f64 / KeywordClass::ALL.len() as f64
    }

    pub fn forms(&self, class: KeywordClass) -> &[String] {
        self.keyword_forms.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn activities(&self, topic: &str) -> Result<&[String], LexiconError> {
        self.topics
            .get(topic)
            .map(Vec::as_slice)
            .ok_or_else(|| LexiconError::UnknownTopic(topic.to_string()))
    }

    pub fn sample_form<R: Rng + ?Sized>(
        &self,
        class: KeywordClass,
        rng: &mut R,
    ) -> Result<&str, LexiconError> {
        self.forms(class)
            .choose(rng)
            .map(String::as_str)
            .ok_or(LexiconError::NoForms(class.symbol()))
    }

    pub fn sample_topic<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&str, LexiconError> {
        self.topics
            .keys()
            .choose(rng)
            .map(String::as_str)
            .ok_or(LexiconError::NoTopics)
    }

    /// `n` distinct activities of one topic, in random order.
    pub fn sample_activities<R: Rng + ?Sized>(
        &self,
        topic: &str,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<&str>, LexiconError> {
        let pool = self.activities(topic)?;
        if n > pool.len() {
            return Err(LexiconError::PoolExhausted {
                topic: topic.to_string(),
                requested: n,
                available: pool.len(),
            });
        }
        let mut picked: Vec<&str> = pool.choose_multiple(rng, n).map(String::as_str).collect();
        picked.shuffle(rng);
        Ok(picked)
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Inflects the leading verb of a base-form phrase for a singular or plural subject.
pub fn conjugate(form: &str, plural: bool) -> String {
    if plural {
        return form.to_string();
    }
    let (head, tail) = match form.split_once(' ') {
        Some((h, t)) => (h, Some(t)),
        None => (form, None),
    };
    let head = match head {
        "be" => "is".to_string(),
        "have" => "has".to_string(),
        h if h.ends_with('s')
            || h.ends_with("sh")
            || h.ends_with("ch")
            || h.ends_with('x')
            || h.ends_with('z')
            || h.ends_with('o') =>
        {
            format!("{h}es")
        }
        h if h.ends_with('y')
            && h.len() > 1
            && !matches!(h.as_bytes()[h.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u') =>
        {
            format!("{}ies", &h[..h.len() - 1])
        }
        h => format!("{h}s"),
    };
    match tail {
        Some(t) => format!("{head} {t}"),
        None => head,
    }
}

/// Parses a numbered or bulleted list reply into its items.
pub fn parse_list(reply: &str) -> Vec<String> {
    reply
        .lines()
        .filter_map(|line| {
            let mut s = line.trim();
            s = s.trim_start_matches(|c: char| c.is_ascii_digit());
            s = s.trim_start_matches(['.', ')', '-', '*', '•']);
            let s = s.trim().trim_matches('*').trim().trim_end_matches(['.', ',', ';']);
            (!s.is_empty()).then(|| s.to_string())
        })
        .collect()
}

/// Rebuilds the topic lists by querying `endpoint`. Keyword forms are kept
/// from the built-in lexicon. The result must pass the release checks.
pub fn regenerate_lexicon(endpoint: &dyn CompletionEndpoint) -> Result<Lexicon, LexiconError> {
    let jobs = parse_list(&endpoint.complete(JOBS_PROMPT)?);
    let mut problems = Vec::new();
    let mut topics = BTreeMap::new();
    for job in &jobs {
        let acts = parse_list(&endpoint.complete(&activities_prompt(job))?);
        if topics.insert(job.clone(), acts).is_some() {
            problems.push(format!("job {job:?} listed twice"));
        }
    }
    let lex = Lexicon {
        version: "regenerated".to_string(),
        keyword_forms: builtin_lexicon().keyword_forms,
        topics,
    };
    match lex.check_release() {
        Ok(()) if problems.is_empty() => Ok(lex),
        Ok(()) => Err(LexiconError::Validation { problems }),
        Err(LexiconError::Validation { problems: more }) => {
            problems.extend(more);
            Err(LexiconError::Validation { problems })
        }
        Err(e) => Err(e),
    }
}
