//! Test-only oracles and fixtures shared by the integration suites. Nothing here
//! calls the solver: satisfiability and plan checks are done by enumeration.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use plancheck_core::solver::{Constraint, ConstraintSet};
use plancheck_core::{ActionId, Direction, Hour};

/// Every permutation of `items`.
pub fn permutations<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn orders_hold(cs: &ConstraintSet, seq: &[ActionId]) -> bool {
    let pos = |a: ActionId| seq.iter().position(|&x| x == a);
    cs.constraints.iter().all(|c| match *c {
        Constraint::OrderBefore { before, after } => match (pos(before), pos(after)) {
            (Some(b), Some(a)) => b < a,
            _ => false,
        },
        _ => true,
    })
}

/// Basic satisfiability: some permutation meets every ordering constraint.
pub fn brute_basic_sat(cs: &ConstraintSet) -> bool {
    permutations(&cs.actions).iter().any(|p| orders_hold(cs, p))
}

/// One timed invocation.
pub type Slot = (ActionId, Hour, Hour);

/// Whether a full timed plan (invocation order = slice order) meets every
/// constraint of `cs`, with `durations` and `horizon` in force.
pub fn plan_ok(
    cs: &ConstraintSet,
    plan: &[Slot],
    durations: &BTreeMap<ActionId, Hour>,
    horizon: (Hour, Hour),
) -> bool {
    plan_violations(cs, plan, durations, horizon).is_empty()
}

/// Constraints a full timed plan breaks. Environment rules (durations, horizon,
/// no overlap) are checked from the arguments, not from `cs`.
pub fn plan_violations(
    cs: &ConstraintSet,
    plan: &[Slot],
    durations: &BTreeMap<ActionId, Hour>,
    horizon: (Hour, Hour),
) -> Vec<&'static str> {
    let mut out = Vec::new();
    let seq: Vec<ActionId> = plan.iter().map(|s| s.0).collect();
    if !orders_hold(cs, &seq) {
        out.push("order");
    }
    let first = |a: ActionId| plan.iter().find(|s| s.0 == a).copied();
    for c in &cs.constraints {
        if let Constraint::StartBound {
            action,
            direction,
            at,
        } = *c
        {
            let ok = match first(action) {
                Some((_, s, _)) => match direction {
                    Direction::Before => s < at,
                    Direction::After => s > at,
                },
                None => false,
            };
            if !ok {
                out.push("start_bound");
            }
        }
    }
    if plan.iter().any(|&(a, s, e)| durations.get(&a).is_some_and(|d| e - s != *d)) {
        out.push("duration");
    }
    if plan.iter().any(|&(_, s, e)| s < horizon.0 || e > horizon.1) {
        out.push("horizon");
    }
    if plan.windows(2).any(|w| w[1].1 < w[0].2) {
        out.push("overlap");
    }
    out
}

/// Exhaustive search over every order and every whole-hour start in the
/// horizon. Returns a feasible plan if one exists.
pub fn brute_timed_plan(
    cs: &ConstraintSet,
    durations: &BTreeMap<ActionId, Hour>,
    horizon: (Hour, Hour),
) -> Option<Vec<Slot>> {
    fn go(
        cs: &ConstraintSet,
        durations: &BTreeMap<ActionId, Hour>,
        horizon: (Hour, Hour),
        plan: &mut Vec<Slot>,
    ) -> bool {
        if plan.len() == cs.actions.len() {
            return plan_ok(cs, plan, durations, horizon);
        }
        let from = plan.last().map_or(horizon.0, |s| s.2);
        for &a in &cs.actions {
            if plan.iter().any(|s| s.0 == a) {
                continue;
            }
            // Prune branches that already break an ordering or a start bound.
            let blocked = cs.constraints.iter().any(|c| {
                matches!(*c, Constraint::OrderBefore { before, after }
                    if after == a && !plan.iter().any(|s| s.0 == before))
            });
            if blocked {
                continue;
            }
            let d = durations[&a];
            for start in from..=horizon.1 - d {
                let bound_ok = cs.constraints.iter().all(|c| match *c {
                    Constraint::StartBound { action, direction, at } if action == a => match direction {
                        Direction::Before => start < at,
                        Direction::After => start > at,
                    },
                    _ => true,
                });
                if !bound_ok {
                    continue;
                }
                plan.push((a, start, start + d));
                if go(cs, durations, horizon, plan) {
                    return true;
                }
                plan.pop();
            }
        }
        false
    }
    let mut plan = Vec::new();
    go(cs, durations, horizon, &mut plan).then_some(plan)
}

/// Extended satisfiability of a set that carries its own durations and horizon.
pub fn brute_extended_sat(cs: &ConstraintSet) -> bool {
    let durations = cs.durations();
    if cs.actions.iter().any(|a| !durations.contains_key(a)) {
        return false;
    }
    brute_timed_plan(cs, &durations, cs.horizon().unwrap_or((0, 24))).is_some()
}

/// Basic sets are equivalent iff they admit exactly the same permutations.
pub fn brute_same_extensions(a: &ConstraintSet, b: &ConstraintSet) -> bool {
    a.actions == b.actions
        && permutations(&a.actions)
            .iter()
            .all(|p| orders_hold(a, p) == orders_hold(b, p))
}

/// A canned HTTP reply.
#[derive(Clone)]
pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn ok(body: impl Into<String>) -> Self {
        Reply {
            status: 200,
            body: body.into(),
        }
    }
}

/// A one-thread HTTP/1.1 server replaying canned replies in order and
/// recording every request body.
pub struct StubServer {
    pub base_url: String,
    requests: Arc<Mutex<Vec<(String, String)>>>,
}

impl StubServer {
    pub fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = requests.clone();
        thread::spawn(move || {
            let mut replies = replies.into_iter();
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                let mut len = 0usize;
                let mut auth = String::new();
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    let h = h.trim_end();
                    if h.is_empty() {
                        break;
                    }
                    let lower = h.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = h["authorization:".len()..].trim().to_string();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
                seen.lock()
                    .unwrap()
                    .push((format!("{path} {auth}"), String::from_utf8(body).unwrap()));
                let reply = replies.next().unwrap_or(Reply {
                    status: 500,
                    body: "{\"error\":\"stub script exhausted\"}".into(),
                });
                let resp = format!(
                    "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    reply.status,
                    reply.body.len(),
                    reply.body
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        StubServer { base_url, requests }
    }

    /// `(path and auth header, body)` of every request so far.
    pub fn requests(&self) -> Vec<(String, String)> {
        self.requests.lock().unwrap().clone()
    }
}

/// A chat-completions response carrying tool calls `(id, name, raw arguments)`.
pub fn tool_call_reply(calls: &[(&str, &str, &str)]) -> Reply {
    let calls: Vec<serde_json::Value> = calls
        .iter()
        .map(|(id, name, args)| {
            serde_json::json!({
                "id": id,
                "type": "function",
                "function": {"name": name, "arguments": args}
            })
        })
        .collect();
    Reply::ok(
        serde_json::json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": null, "tool_calls": calls}}]
        })
        .to_string(),
    )
}

pub fn text_reply(text: &str) -> Reply {
    Reply::ok(
        serde_json::json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]
        })
        .to_string(),
    )
}
