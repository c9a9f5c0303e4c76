//! Constraint core: satisfiability, plan evaluation, canonical forms and
//! schedule feasibility.
//!
//! The constraint language is small enough that no general solver is needed.
//! Ordering constraints form a precedence digraph, so basic satisfiability is
//! cycle detection. Extended cases add whole-hour start bounds, durations and a
//! working-day horizon; those are decided by enumerating linear extensions of
//! the precedence order with earliest-start packing. Earliest start is optimal
//! for a fixed order because every time constraint is either a lower bound on
//! a start or an upper bound on a start or end.

use std::cell::Cell;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::model::{format_hour, ActionId, Direction, Hour, Mode};

/// Maximum number of actions a constraint set may declare. Closures are kept as
/// one `u64` bitset per action.
pub const MAX_ACTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `order(before) < order(after)`.
    OrderBefore { before: ActionId, after: ActionId },
    /// `start(action) < at` for [`Direction::Before`], `start(action) > at` otherwise.
    StartBound {
        action: ActionId,
        direction: Direction,
        at: Hour,
    },
    /// `end(action) = start(action) + hours`.
    DurationEq { action: ActionId, hours: Hour },
    /// Every invocation starts at or after `day_start` and ends by `day_end`.
    HorizonBound { day_start: Hour, day_end: Hour },
    /// Consecutive invocations never overlap: `start(next) >= end(prev)`.
    MonotoneSequence,
}

impl Constraint {
    pub fn order(before: ActionId, after: ActionId) -> Self {
        Constraint::OrderBefore { before, after }
    }

    /// Actions the constraint mentions.
    pub fn actions(&self) -> Vec<ActionId> {
        match *self {
            Constraint::OrderBefore { before, after } => vec![before, after],
            Constraint::StartBound { action, .. } | Constraint::DurationEq { action, .. } => {
                vec![action]
            }
            Constraint::HorizonBound { .. } | Constraint::MonotoneSequence => Vec::new(),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Constraint::OrderBefore { before, after } => {
                write!(f, "order({before}) < order({after})")
            }
            Constraint::StartBound {
                action,
                direction,
                at,
            } => {
                let op = if direction == Direction::Before { "<" } else { ">" };
                write!(f, "start({action}) {op} {}", format_hour(at))
            }
            Constraint::DurationEq { action, hours } => {
                write!(f, "end({action}) = start({action}) + {hours}")
            }
            Constraint::HorizonBound { day_start, day_end } => write!(
                f,
                "{} <= start, end <= {}",
                format_hour(day_start),
                format_hour(day_end)
            ),
            Constraint::MonotoneSequence => f.write_str("start(next) >= end(prev)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("constraint mentions undeclared action {0}")]
    UndeclaredAction(ActionId),
    #[error("action {0} is ordered against itself")]
    SelfOrder(ActionId),
    #[error("duration of {action} must be at least one hour, got {hours}")]
    NonPositiveDuration { action: ActionId, hours: Hour },
    #[error("time point {at} for {action} lies outside the horizon {day_start}..{day_end}")]
    BoundOutsideHorizon {
        action: ActionId,
        at: Hour,
        day_start: Hour,
        day_end: Hour,
    },
    #[error("empty or inverted horizon {day_start}..{day_end}")]
    BadHorizon { day_start: Hour, day_end: Hour },
    #[error("at most {MAX_ACTIONS} actions are supported, got {0}")]
    TooManyActions(usize),
}

/// A conjunction of constraints over a declared action set.
///
/// In basic mode the permutation domain (every order variable ranges over
/// `1..=n` and all are distinct) is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub mode: Mode,
    pub actions: Vec<ActionId>,
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(mode: Mode, actions: impl IntoIterator<Item = ActionId>) -> Self {
        let actions: BTreeSet<ActionId> = actions.into_iter().collect();
        ConstraintSet {
            mode,
            actions: actions.into_iter().collect(),
            constraints: Vec::new(),
        }
    }

    /// Adds `c` unless an identical constraint is already present.
    pub fn insert(&mut self, c: Constraint) -> bool {
        if self.constraints.contains(&c) {
            false
        } else {
            self.constraints.push(c);
            true
        }
    }

    pub fn extend<I: IntoIterator<Item = Constraint>>(&mut self, it: I) {
        for c in it {
            self.insert(c);
        }
    }

    /// `self ∪ other` with `self`'s mode and action set.
    pub fn union(&self, other: &[Constraint]) -> ConstraintSet {
        let mut out = self.clone();
        out.extend(other.iter().cloned());
        out
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn ordering_pairs(&self) -> impl Iterator<Item = (ActionId, ActionId)> + '_ {
        self.constraints.iter().filter_map(|c| match *c {
            Constraint::OrderBefore { before, after } => Some((before, after)),
            _ => None,
        })
    }

    pub fn start_bounds(&self) -> impl Iterator<Item = (ActionId, Direction, Hour)> + '_ {
        self.constraints.iter().filter_map(|c| match *c {
            Constraint::StartBound {
                action,
                direction,
                at,
            } => Some((action, direction, at)),
            _ => None,
        })
    }

    pub fn durations(&self) -> BTreeMap<ActionId, Hour> {
        self.constraints
            .iter()
            .filter_map(|c| match *c {
                Constraint::DurationEq { action, hours } => Some((action, hours)),
                _ => None,
            })
            .collect()
    }

    pub fn horizon(&self) -> Option<(Hour, Hour)> {
        self.constraints.iter().find_map(|c| match *c {
            Constraint::HorizonBound { day_start, day_end } => Some((day_start, day_end)),
            _ => None,
        })
    }

    /// Number of `OrderBefore` relations.
    pub fn ordering_count(&self) -> usize {
        self.ordering_pairs().count()
    }

    /// The ordering relations alone, as a basic-mode set.
    pub fn ordering_only(&self) -> ConstraintSet {
        let mut out = ConstraintSet::new(Mode::Basic, self.actions.iter().copied());
        out.extend(
            self.ordering_pairs()
                .map(|(before, after)| Constraint::order(before, after)),
        );
        out
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        if self.actions.len() > MAX_ACTIONS {
            return Err(ConstraintError::TooManyActions(self.actions.len()));
        }
        let declared: BTreeSet<ActionId> = self.actions.iter().copied().collect();
        let horizon = self.horizon();
        for c in &self.constraints {
            for a in c.actions() {
                if !declared.contains(&a) {
                    return Err(ConstraintError::UndeclaredAction(a));
                }
            }
            match *c {
                Constraint::OrderBefore { before, after } if before == after => {
                    return Err(ConstraintError::SelfOrder(before));
                }
                Constraint::DurationEq { action, hours } if hours < 1 => {
                    return Err(ConstraintError::NonPositiveDuration { action, hours });
                }
                Constraint::HorizonBound { day_start, day_end } if day_start >= day_end => {
                    return Err(ConstraintError::BadHorizon { day_start, day_end });
                }
                Constraint::StartBound { action, at, .. } => {
                    if let Some((day_start, day_end)) = horizon {
                        if at < day_start || at > day_end {
                            return Err(ConstraintError::BoundOutsideHorizon {
                                action,
                                at,
                                day_start,
                                day_end,
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn position(&self, a: ActionId) -> usize {
        self.actions
            .binary_search(&a)
            .expect("constraint set references an undeclared action")
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.actions.len()];
        for (before, after) in self.ordering_pairs() {
            let (b, a) = (self.position(before), self.position(after));
            if !succ[b].contains(&a) {
                succ[b].push(a);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        succ
    }
}

/// One executed invocation in an extended-mode plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledCall {
    pub action: ActionId,
    pub start: Hour,
    pub end: Hour,
}

/// Values assigned to the order (and, in extended mode, time) variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PlanAssignment {
    /// Execution position of each action's first invocation, starting at 1.
    pub order: BTreeMap<ActionId, usize>,
    /// Full invocation sequence with times (extended mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<ScheduledCall>>,
}

impl PlanAssignment {
    /// Orders actions by first appearance; repeated ids keep their first position.
    pub fn from_sequence(seq: &[ActionId]) -> Self {
        let mut order = BTreeMap::new();
        for &a in seq {
            let next = order.len() + 1;
            order.entry(a).or_insert(next);
        }
        PlanAssignment {
            order,
            schedule: None,
        }
    }

    pub fn from_schedule(calls: Vec<ScheduledCall>) -> Self {
        let seq: Vec<ActionId> = calls.iter().map(|c| c.action).collect();
        let mut plan = Self::from_sequence(&seq);
        plan.schedule = Some(calls);
        plan
    }

    /// Actions sorted by their assigned order.
    pub fn sequence(&self) -> Vec<ActionId> {
        let mut v: Vec<(usize, ActionId)> = self.order.iter().map(|(&a, &i)| (i, a)).collect();
        v.sort_unstable();
        v.into_iter().map(|(_, a)| a).collect()
    }

    /// `(start, end)` of the first invocation of `a`.
    pub fn slot(&self, a: ActionId) -> Option<(Hour, Hour)> {
        self.schedule
            .as_ref()?
            .iter()
            .find(|c| c.action == a)
            .map(|c| (c.start, c.end))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conflict {
    /// A shortest precedence cycle, listed in edge order.
    Cycle { actions: Vec<ActionId> },
    /// Earliest-start packing along the first admissible order breaks
    /// `violated` right after scheduling `prefix`.
    Schedule {
        prefix: Vec<ActionId>,
        violated: Constraint,
    },
    MissingDuration { action: ActionId },
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conflict::Cycle { actions } => {
                let names: Vec<String> = actions.iter().map(ToString::to_string).collect();
                write!(f, "cycle {} -> {}", names.join(" -> "), names[0])
            }
            Conflict::Schedule { prefix, violated } => {
                let names: Vec<String> = prefix.iter().map(ToString::to_string).collect();
                write!(f, "after [{}]: {violated} cannot hold", names.join(", "))
            }
            Conflict::MissingDuration { action } => write!(f, "no duration declared for {action}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SatResult {
    Sat(PlanAssignment),
    Unsat(Conflict),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn witness(self) -> Option<PlanAssignment> {
        match self {
            SatResult::Sat(p) => Some(p),
            SatResult::Unsat(_) => None,
        }
    }
}

/// Satisfiability calls made on the current thread since the last reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub calls: u64,
    pub time: Duration,
}

thread_local! {
    static STATS: Cell<SolverStats> = const { Cell::new(SolverStats { calls: 0, time: Duration::ZERO }) };
}

/// Counters for [`check_sat`] and [`feasible_schedule`] on this thread.
pub fn solver_stats() -> SolverStats {
    STATS.with(Cell::get)
}

pub fn reset_solver_stats() {
    STATS.with(|s| s.set(SolverStats::default()));
}

fn timed<T>(f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    let spent = t.elapsed();
    STATS.with(|s| {
        let mut v = s.get();
        v.calls += 1;
        v.time += spent;
        s.set(v);
    });
    out
}

/// Decides satisfiability. Basic sets are SAT iff the precedence digraph is
/// acyclic; extended sets additionally need a linear extension whose
/// earliest-start schedule meets every time constraint.
pub fn check_sat(cs: &ConstraintSet) -> SatResult {
    timed(|| check_sat_untimed(cs))
}

fn check_sat_untimed(cs: &ConstraintSet) -> SatResult {
    let succ = cs.successors();
    let order = match topological_order(&succ) {
        Ok(order) => order,
        Err(cyclic) => {
            let cycle = shortest_cycle(&succ, &cyclic);
            return SatResult::Unsat(Conflict::Cycle {
                actions: cycle.into_iter().map(|i| cs.actions[i]).collect(),
            });
        }
    };
    if cs.mode == Mode::Basic {
        let seq: Vec<ActionId> = order.into_iter().map(|i| cs.actions[i]).collect();
        return SatResult::Sat(PlanAssignment::from_sequence(&seq));
    }

    let durations = cs.durations();
    if let Some(&missing) = cs.actions.iter().find(|a| !durations.contains_key(a)) {
        return SatResult::Unsat(Conflict::MissingDuration { action: missing });
    }
    let horizon = cs.horizon().unwrap_or((0, 24));
    let table = TimeTable::new(cs, &durations, horizon);
    match table.search(&succ) {
        Some(calls) => SatResult::Sat(PlanAssignment::from_schedule(calls)),
        None => SatResult::Unsat(table.explain(&order)),
    }
}

/// Earliest-start schedule respecting the ordering and start bounds of `cs`,
/// using the given durations and horizon in place of any declared in `cs`.
/// Returns `None` only when no admissible total order works.
pub fn feasible_schedule(
    cs: &ConstraintSet,
    durations: &BTreeMap<ActionId, Hour>,
    horizon: (Hour, Hour),
) -> Option<Vec<ScheduledCall>> {
    timed(|| {
        if cs.actions.iter().any(|a| !durations.contains_key(a)) {
            return None;
        }
        let succ = cs.successors();
        topological_order(&succ).ok()?;
        TimeTable::new(cs, durations, horizon).search(&succ)
    })
}

/// Whether the already executed `prefix` (distinct actions, in call order)
/// can be extended to a full schedule meeting every constraint of `cs`.
/// The prefix itself is not checked against the constraints.
pub fn completable(
    cs: &ConstraintSet,
    prefix: &[ScheduledCall],
    durations: &BTreeMap<ActionId, Hour>,
    horizon: (Hour, Hour),
) -> bool {
    if cs.actions.iter().any(|a| !durations.contains_key(a)) {
        return false;
    }
    let succ = cs.successors();
    if topological_order(&succ).is_err() {
        return false;
    }
    let table = TimeTable::new(cs, durations, horizon);
    let mut preds = vec![0u64; succ.len()];
    for (u, s) in succ.iter().enumerate() {
        for &v in s {
            preds[v] |= 1 << u;
        }
    }
    let mut done = 0u64;
    for c in prefix {
        let Some(i) = cs.actions.iter().position(|&a| a == c.action) else {
            return false;
        };
        if preds[i] & !done != 0 {
            return false;
        }
        done |= 1 << i;
    }
    let cur = prefix.last().map_or(horizon.0, |c| c.end.max(horizon.0));
    let mut calls = prefix.to_vec();
    table.extend(&preds, done, cur, &mut calls, &mut HashSet::new())
}

/// Earliest-start packing of a fixed invocation order.
pub fn pack_in_order(
    order: &[ActionId],
    durations: &BTreeMap<ActionId, Hour>,
    cs: &ConstraintSet,
    day_start: Hour,
) -> Vec<ScheduledCall> {
    let mut cur = day_start;
    order
        .iter()
        .map(|&a| {
            let lower = cs
                .start_bounds()
                .filter(|&(b, d, _)| b == a && d == Direction::After)
                .map(|(_, _, t)| t + 1)
                .max()
                .unwrap_or(day_start);
            let start = cur.max(lower);
            let end = start + durations.get(&a).copied().unwrap_or(1);
            cur = end;
            ScheduledCall {
                action: a,
                start,
                end,
            }
        })
        .collect()
}

/// Kahn's algorithm, smallest index first. On a cycle returns the nodes that
/// could not be ordered.
fn topological_order(succ: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        out.push(i);
        for &t in &succ[i] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.push(Reverse(t));
            }
        }
    }
    if out.len() == n {
        Ok(out)
    } else {
        Err((0..n).filter(|&i| indeg[i] > 0).collect())
    }
}

/// Shortest cycle among `candidates`, found by a BFS from each node back to itself.
fn shortest_cycle(succ: &[Vec<usize>], candidates: &[usize]) -> Vec<usize> {
    let mut best: Option<Vec<usize>> = None;
    for &start in candidates {
        let mut parent = vec![usize::MAX; succ.len()];
        let mut seen = vec![false; succ.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut closing = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for &v in &succ[u] {
                if v == start {
                    closing = Some(u);
                    break 'bfs;
                }
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let Some(mut u) = closing else { continue };
        let mut cycle = vec![u];
        while u != start {
            u = parent[u];
            cycle.push(u);
        }
        cycle.reverse();
        if best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
            best = Some(cycle);
        }
    }
    best.expect("a cyclic remainder always contains a cycle")
}

struct TimeTable {
    actions: Vec<ActionId>,
    duration: Vec<Hour>,
    earliest: Vec<Hour>,
    /// Latest admissible start, inclusive.
    latest: Vec<Hour>,
    day_start: Hour,
    day_end: Hour,
}

impl TimeTable {
    fn new(cs: &ConstraintSet, durations: &BTreeMap<ActionId, Hour>, horizon: (Hour, Hour)) -> Self {
        let (day_start, day_end) = horizon;
        let n = cs.actions.len();
        let mut earliest = vec![day_start; n];
        let mut latest = vec![day_end; n];
        for (a, dir, t) in cs.start_bounds() {
            let i = cs.position(a);
            match dir {
                Direction::Before => latest[i] = latest[i].min(t - 1),
                Direction::After => earliest[i] = earliest[i].max(t + 1),
            }
        }
        TimeTable {
            actions: cs.actions.clone(),
            duration: cs.actions.iter().map(|a| durations[a]).collect(),
            earliest,
            latest,
            day_start,
            day_end,
        }
    }

    fn start_at(&self, i: usize, cur: Hour) -> Option<Hour> {
        let s = cur.max(self.earliest[i]);
        (s <= self.latest[i] && s + self.duration[i] <= self.day_end).then_some(s)
    }

    fn search(&self, succ: &[Vec<usize>]) -> Option<Vec<ScheduledCall>> {
        let n = self.actions.len();
        let mut preds = vec![0u64; n];
        for (u, s) in succ.iter().enumerate() {
            for &v in s {
                preds[v] |= 1 << u;
            }
        }
        let mut failed = HashSet::new();
        let mut calls = Vec::with_capacity(n);
        self.extend(&preds, 0, self.day_start, &mut calls, &mut failed)
            .then_some(calls)
    }

    fn extend(
        &self,
        preds: &[u64],
        done: u64,
        cur: Hour,
        calls: &mut Vec<ScheduledCall>,
        failed: &mut HashSet<(u64, Hour)>,
    ) -> bool {
        let n = self.actions.len();
        if calls.len() == n {
            return true;
        }
        if failed.contains(&(done, cur)) {
            return false;
        }
        let mut remaining = 0;
        for i in 0..n {
            if done & (1 << i) == 0 {
                remaining += self.duration[i];
                if cur.max(self.earliest[i]) > self.latest[i] {
                    failed.insert((done, cur));
                    return false;
                }
            }
        }
        if cur + remaining > self.day_end {
            failed.insert((done, cur));
            return false;
        }
        for i in 0..n {
            if done & (1 << i) != 0 || preds[i] & !done != 0 {
                continue;
            }
            let Some(start) = self.start_at(i, cur) else {
                continue;
            };
            let end = start + self.duration[i];
            calls.push(ScheduledCall {
                action: self.actions[i],
                start,
                end,
            });
            if self.extend(preds, done | (1 << i), end, calls, failed) {
                return true;
            }
            calls.pop();
        }
        failed.insert((done, cur));
        false
    }

    fn explain(&self, order: &[usize]) -> Conflict {
        let mut cur = self.day_start;
        let mut prefix = Vec::new();
        for &i in order {
            let a = self.actions[i];
            let s = cur.max(self.earliest[i]);
            if s > self.latest[i] {
                return Conflict::Schedule {
                    prefix,
                    violated: Constraint::StartBound {
                        action: a,
                        direction: Direction::Before,
                        at: self.latest[i] + 1,
                    },
                };
            }
            if s + self.duration[i] > self.day_end {
                return Conflict::Schedule {
                    prefix,
                    violated: Constraint::HorizonBound {
                        day_start: self.day_start,
                        day_end: self.day_end,
                    },
                };
            }
            cur = s + self.duration[i];
            prefix.push(a);
        }
        // The first order packs cleanly but a later bound was still reported
        // infeasible by the search; only a capacity bound can explain that.
        Conflict::Schedule {
            prefix,
            violated: Constraint::HorizonBound {
                day_start: self.day_start,
                day_end: self.day_end,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("plan does not assign {missing:?}")]
    Incomplete { missing: Vec<ActionId> },
    #[error("extended constraints need a timed schedule")]
    MissingSchedule,
}

/// Every constraint of `cs` that `plan` violates; empty means the plan is correct.
pub fn evaluate(cs: &ConstraintSet, plan: &PlanAssignment) -> Result<Vec<Constraint>, EvalError> {
    let missing: Vec<ActionId> = cs
        .actions
        .iter()
        .filter(|a| !plan.order.contains_key(a))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::Incomplete { missing });
    }
    let timed = cs.constraints.iter().any(|c| {
        !matches!(c, Constraint::OrderBefore { .. })
    });
    if timed && plan.schedule.is_none() {
        return Err(EvalError::MissingSchedule);
    }
    let calls = plan.schedule.as_deref().unwrap_or(&[]);
    let slot = |a: ActionId| plan.slot(a).expect("schedule covers every ordered action");

    let violated = cs
        .constraints
        .iter()
        .filter(|c| match **c {
            Constraint::OrderBefore { before, after } => plan.order[&before] >= plan.order[&after],
            Constraint::StartBound {
                action,
                direction,
                at,
            } => {
                let (start, _) = slot(action);
                match direction {
                    Direction::Before => start >= at,
                    Direction::After => start <= at,
                }
            }
            Constraint::DurationEq { action, hours } => {
                let (start, end) = slot(action);
                end - start != hours
            }
            Constraint::HorizonBound { day_start, day_end } => calls
                .iter()
                .any(|c| c.start < day_start || c.end > day_end),
            Constraint::MonotoneSequence => calls.windows(2).any(|w| w[1].start < w[0].end),
        })
        .cloned()
        .collect();
    Ok(violated)
}

/// Canonical constraint form: the transitive reduction of the precedence DAG
/// plus the sorted, deduplicated start bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub actions: Vec<ActionId>,
    pub edges: Vec<(ActionId, ActionId)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<(ActionId, Direction, Hour)>,
}

impl CanonicalForm {
    pub fn to_constraint_set(&self) -> ConstraintSet {
        let mode = if self.bounds.is_empty() {
            Mode::Basic
        } else {
            Mode::Extended
        };
        let mut cs = ConstraintSet::new(mode, self.actions.iter().copied());
        cs.extend(self.edges.iter().map(|&(b, a)| Constraint::order(b, a)));
        cs.extend(self.bounds.iter().map(|&(action, direction, at)| {
            Constraint::StartBound {
                action,
                direction,
                at,
            }
        }));
        cs
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.edges.iter().map(|(b, a)| format!("{b}<{a}")).collect();
        parts.extend(self.bounds.iter().map(|(a, d, t)| {
            let op = if *d == Direction::Before { "<" } else { ">" };
            format!("start({a}){op}{}", format_hour(*t))
        }));
        f.write_str(&parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonError {
    #[error("cannot canonicalize an unsatisfiable ordering: {0}")]
    Unsat(Conflict),
    #[error(transparent)]
    Invalid(#[from] ConstraintError),
}

/// Reachability bitsets of the precedence relation (`closure[i] >> j & 1` means `i` before `j`).
pub fn transitive_closure(cs: &ConstraintSet) -> Result<Vec<u64>, CanonError> {
    if cs.actions.len() > MAX_ACTIONS {
        return Err(ConstraintError::TooManyActions(cs.actions.len()).into());
    }
    let succ = cs.successors();
    let order = topological_order(&succ).map_err(|cyclic| {
        let cycle = shortest_cycle(&succ, &cyclic);
        CanonError::Unsat(Conflict::Cycle {
            actions: cycle.into_iter().map(|i| cs.actions[i]).collect(),
        })
    })?;
    let mut reach = vec![0u64; succ.len()];
    for &u in order.iter().rev() {
        for &v in &succ[u] {
            reach[u] |= (1 << v) | reach[v];
        }
    }
    Ok(reach)
}

pub fn canonicalize(cs: &ConstraintSet) -> Result<CanonicalForm, CanonError> {
    let reach = transitive_closure(cs)?;
    let n = cs.actions.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if reach[u] & (1 << v) == 0 {
                continue;
            }
            let implied = (0..n).any(|w| reach[u] & (1 << w) != 0 && reach[w] & (1 << v) != 0);
            if !implied {
                edges.push((cs.actions[u], cs.actions[v]));
            }
        }
    }
    let bounds: BTreeSet<(ActionId, Direction, Hour)> = cs.start_bounds().collect();
    Ok(CanonicalForm {
        actions: cs.actions.clone(),
        edges,
        bounds: bounds.into_iter().collect(),
    })
}

/// Two satisfiable sets are equivalent when they declare the same actions,
/// their precedence closures coincide, and they carry the same start bounds.
pub fn equivalent(a: &ConstraintSet, b: &ConstraintSet) -> Result<bool, CanonError> {
    let (ca, cb) = (canonicalize(a)?, canonicalize(b)?);
    Ok(ca == cb)
}
