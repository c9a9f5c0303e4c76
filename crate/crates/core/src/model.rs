//! Identifiers and small value types shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Stable symbol for an action inside one case, rendered as `a1`, `a2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u16);

impl ActionId {
    pub fn index(self) -> usize {
        usize::from(self.0).saturating_sub(1)
    }

    pub fn from_index(i: usize) -> Self {
        ActionId((i + 1) as u16)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid action id `{0}` (expected a1, a2, ...)")]
pub struct ParseActionIdError(String);

impl FromStr for ActionId {
    type Err = ParseActionIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('a')
            .and_then(|n| n.parse::<u16>().ok())
            .filter(|&n| n > 0)
            .map(ActionId)
            .ok_or_else(|| ParseActionIdError(s.to_string()))
    }
}

impl Serialize for ActionId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActionId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `a1..=an`.
pub fn action_ids(n: usize) -> Vec<ActionId> {
    (0..n).map(ActionId::from_index).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Basic,
    Extended,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Basic => "basic",
            Mode::Extended => "extended",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Mode::Basic),
            "extended" => Ok(Mode::Extended),
            other => Err(format!("unknown mode `{other}` (expected basic|extended)")),
        }
    }
}

/// Temporal direction carried by a keyword: the subject side happens before
/// (or after) the object side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Before,
    After,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Before, Direction::After];

    pub fn flip(self) -> Self {
        match self {
            Direction::Before => Direction::After,
            Direction::After => Direction::Before,
        }
    }
}

/// Clock hour measured from midnight. Every time value in the crate uses whole hours.
pub type Hour = i32;

pub fn format_hour(h: Hour) -> String {
    format!("{h:02}:00")
}

/// One task of a case. Each action is served by exactly one mock tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub id: ActionId,
    pub phrase: String,
    pub tool_name: String,
    pub description: String,
}

impl ActionSpec {
    pub fn new(id: ActionId, phrase: &str) -> Self {
        ActionSpec {
            id,
            phrase: phrase.to_string(),
            tool_name: tool_name_for(phrase),
            description: describe_activity(phrase),
        }
    }
}

/// `"network diagnosis"` becomes `network_diagnosis`.
pub fn tool_name_for(phrase: &str) -> String {
    let mut out = String::with_capacity(phrase.len());
    for ch in phrase.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

pub fn describe_activity(phrase: &str) -> String {
    format!("Carry out the task \"{phrase}\". Call this tool once the task should be performed.")
}

/// Mixes `parts` into `base` (splitmix64 finalizer) so per-item seeds are
/// independent of scheduling order.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base.wrapping_add(0x9e37_79b9_7f4a_7c15)), |acc, &p| {
        mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}
