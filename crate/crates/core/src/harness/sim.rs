//! Oracle-backed simulated agents with injectable defects.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::*;
use crate::solver::{check_sat, pack_in_order};

/// Name used by [`SimProfile::UnknownTool`]; never produced by the lexicon.
pub const FABRICATED_TOOL: &str = "unlisted_helper_tool";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimProfile {
    /// Plays a solver witness.
    Perfect,
    /// Transposes witness positions `i % (n - 1)` and the next one.
    SwapAdjacent(usize),
    /// Omits the given action, or the last witness action when `None`.
    DropAction(Option<ActionId>),
    /// Shifts one start time by the offset in hours (extended mode only).
    BadParam(Hour),
    /// Calls a tool that does not exist, then plays the witness.
    UnknownTool,
    /// Thinks forever without acting.
    NeverFinish,
    /// Swaps a random adjacent pair with probability `p`, otherwise perfect.
    Coin(f64),
}

impl fmt::Display for SimProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimProfile::Perfect => f.write_str("perfect"),
            SimProfile::SwapAdjacent(i) => write!(f, "swap:{i}"),
            SimProfile::DropAction(None) => f.write_str("drop"),
            SimProfile::DropAction(Some(a)) => write!(f, "drop:{a}"),
            SimProfile::BadParam(o) => write!(f, "badparam:{o}"),
            SimProfile::UnknownTool => f.write_str("unknown"),
            SimProfile::NeverFinish => f.write_str("never"),
            SimProfile::Coin(p) => write!(f, "coin:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown simulated profile `{0}` (expected perfect, swap[:i], drop[:aN], badparam:H, unknown, never or coin:p)")]
pub struct ParseProfileError(String);

impl FromStr for SimProfile {
    type Err = ParseProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseProfileError(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        Ok(match (head, arg) {
            ("perfect", None) => SimProfile::Perfect,
            ("swap", None) => SimProfile::SwapAdjacent(0),
            ("swap", Some(i)) => SimProfile::SwapAdjacent(i.parse().map_err(|_| err())?),
            ("drop", None) => SimProfile::DropAction(None),
            ("drop", Some(a)) => SimProfile::DropAction(Some(a.parse().map_err(|_| err())?)),
            ("badparam", Some(o)) => SimProfile::BadParam(o.parse().map_err(|_| err())?),
            ("unknown", None) => SimProfile::UnknownTool,
            ("never", None) => SimProfile::NeverFinish,
            ("coin", Some(p)) => {
                let p: f64 = p.parse().map_err(|_| err())?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(err());
                }
                SimProfile::Coin(p)
            }
            _ => return Err(err()),
        })
    }
}

/// Replays a precomputed script, then gives a final answer.
pub struct SimulatedAgent {
    script: VecDeque<AgentStep>,
    never_finish: bool,
}

impl SimulatedAgent {
    pub fn new(profile: SimProfile, case: &QueryCase, run_seed: u64) -> Self {
        if profile == SimProfile::NeverFinish {
            return SimulatedAgent {
                script: VecDeque::new(),
                never_finish: true,
            };
        }
        let profile = match profile {
            SimProfile::Coin(p) => {
                let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
                if rng.gen_bool(p) {
                    SimProfile::SwapAdjacent(rng.gen_range(0..case.actions.len().max(2) - 1))
                } else {
                    SimProfile::Perfect
                }
            }
            p => p,
        };
        let mut calls = plan(profile, case);
        if profile == SimProfile::UnknownTool {
            calls.insert(
                0,
                ToolCall {
                    id: None,
                    name: FABRICATED_TOOL.to_string(),
                    args: json!({}),
                },
            );
        }
        let mut script: VecDeque<AgentStep> = calls.into_iter().map(AgentStep::ToolCall).collect();
        script.push_back(AgentStep::FinalAnswer {
            text: "All tasks have been completed.".to_string(),
        });
        SimulatedAgent {
            script,
            never_finish: false,
        }
    }
}

impl AgentAdapter for SimulatedAgent {
    fn next_step(&mut self, _transcript: &Transcript) -> Result<AgentStep, AdapterError> {
        if self.never_finish {
            return Ok(AgentStep::Continue);
        }
        Ok(self.script.pop_front().unwrap_or(AgentStep::FinalAnswer {
            text: "All tasks have been completed.".to_string(),
        }))
    }
}

fn plan(profile: SimProfile, case: &QueryCase) -> Vec<ToolCall> {
    let witness = check_sat(&case.constraints)
        .witness()
        .expect("simulated agents need a satisfiable case");
    let name = |a: ActionId| {
        case.action(a)
            .map(|s| s.tool_name.clone())
            .unwrap_or_else(|| a.to_string())
    };
    let n = case.actions.len();
    match case.mode {
        Mode::Basic => {
            let mut seq = witness.sequence();
            match profile {
                SimProfile::SwapAdjacent(i) if n >= 2 => seq.swap(i % (n - 1), i % (n - 1) + 1),
                SimProfile::DropAction(a) => drop_action(&mut seq, a, |x| *x),
                _ => {}
            }
            seq.into_iter()
                .map(|a| ToolCall {
                    id: None,
                    name: name(a),
                    args: json!({}),
                })
                .collect()
        }
        Mode::Extended => {
            let mut calls = witness.schedule.unwrap_or_default();
            match profile {
                SimProfile::SwapAdjacent(i) if n >= 2 => {
                    let mut order: Vec<ActionId> = calls.iter().map(|c| c.action).collect();
                    order.swap(i % (n - 1), i % (n - 1) + 1);
                    let (day_start, day_end) = case.horizon.unwrap_or(DEFAULT_HORIZON);
                    calls = pack_in_order(&order, &case.hidden_durations, &case.constraints, day_start);
                    // Waiting for start bounds can push the day past its end. The
                    // defect is meant to be about order only, so pack back to back.
                    if calls.iter().any(|c| c.end > day_end) {
                        let mut cur = day_start;
                        for c in &mut calls {
                            c.end = cur + (c.end - c.start);
                            c.start = cur;
                            cur = c.end;
                        }
                    }
                }
                SimProfile::DropAction(a) => drop_action(&mut calls, a, |c| c.action),
                SimProfile::BadParam(offset) if !calls.is_empty() => {
                    let idx = if offset < 0 && calls.len() > 1 {
                        (1..calls.len())
                            .min_by_key(|&i| calls[i].start - calls[i - 1].end)
                            .expect("non-empty range")
                    } else {
                        calls.len() - 1
                    };
                    calls[idx].start += offset;
                }
                _ => {}
            }
            calls
                .into_iter()
                .map(|c| ToolCall {
                    id: None,
                    name: name(c.action),
                    args: json!({ START_TIME_PARAM: format_hour(c.start) }),
                })
                .collect()
        }
    }
}

fn drop_action<T>(items: &mut Vec<T>, target: Option<ActionId>, id: impl Fn(&T) -> ActionId) {
    match target {
        Some(a) => items.retain(|x| id(x) != a),
        None => {
            items.pop();
        }
    }
}

/// Builds a [`SimulatedAgent`] with a fixed profile for every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimAgentFactory {
    pub profile: SimProfile,
}

impl SimAgentFactory {
    pub fn new(profile: SimProfile) -> Self {
        SimAgentFactory { profile }
    }
}

impl AgentFactory for SimAgentFactory {
    fn label(&self) -> String {
        format!("sim:{}", self.profile)
    }

    fn create(&self, case: &QueryCase, run_seed: u64) -> Box<dyn AgentAdapter> {
        Box::new(SimulatedAgent::new(self.profile, case, run_seed))
    }

    fn clock(&self) -> Clock {
        Clock::Frozen
    }
}

type CasePredicate = dyn Fn(&QueryCase) -> bool + Send + Sync;

/// Plays `failing` on cases matching the predicate and `passing` elsewhere.
/// Used to build agents whose failures have a known cause.
pub struct ConditionalSimFactory {
    label: String,
    predicate: Box<CasePredicate>,
    failing: SimProfile,
    passing: SimProfile,
}

impl ConditionalSimFactory {
    pub fn new(
        label: impl Into<String>,
        predicate: impl Fn(&QueryCase) -> bool + Send + Sync + 'static,
        failing: SimProfile,
        passing: SimProfile,
    ) -> Self {
        ConditionalSimFactory {
            label: label.into(),
            predicate: Box::new(predicate),
            failing,
            passing,
        }
    }
}

impl AgentFactory for ConditionalSimFactory {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn create(&self, case: &QueryCase, run_seed: u64) -> Box<dyn AgentAdapter> {
        let profile = if (self.predicate)(case) {
            self.failing
        } else {
            self.passing
        };
        Box::new(SimulatedAgent::new(profile, case, run_seed))
    }

    fn clock(&self) -> Clock {
        Clock::Frozen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::builtin_lexicon;
    use crate::synthesis::{synthesize_case, SynthesisConfig};

    fn run(profile: SimProfile, mode: Mode, seed: u64) -> Verdict {
        let case = synthesize_case(&builtin_lexicon(), 4, mode, seed, &SynthesisConfig::default()).unwrap();
        let mut agent = SimulatedAgent::new(profile, &case, seed);
        run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen).1
    }

    #[test]
    fn profile_strings_round_trip() {
        for s in ["perfect", "swap:2", "drop", "drop:a3", "badparam:-4", "unknown", "never", "coin:0.5"] {
            let p: SimProfile = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("coin:2".parse::<SimProfile>().is_err());
        assert!("fly".parse::<SimProfile>().is_err());
    }

    #[test]
    fn perfect_is_correct() {
        for seed in 0..20 {
            assert!(run(SimProfile::Perfect, Mode::Basic, seed).is_correct());
            assert!(run(SimProfile::Perfect, Mode::Extended, seed).is_correct());
        }
    }

    #[test]
    fn defects_map_to_error_types() {
        let v = run(SimProfile::DropAction(None), Mode::Basic, 1);
        assert_eq!(v.error_type, Some(ErrorType::ActionLost));
        let v = run(SimProfile::UnknownTool, Mode::Extended, 1);
        assert_eq!(v.error_type, Some(ErrorType::ActError));
        let v = run(SimProfile::NeverFinish, Mode::Basic, 1);
        assert_eq!(v.error_type, Some(ErrorType::Timeout));
    }
}
