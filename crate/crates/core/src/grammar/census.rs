//! Counting expansion options.
//!
//! The grammar is restated here as a data table so the count is derived from
//! the productions rather than from a closed formula. Keyword classes count as
//! their alternative sets (`VP< | VP>` is two alternatives), `a+` is one
//! terminal, and relative clauses nest at most `max_relative_depth` times.
//!
//! The headline total counts the independent options a top-down sentence
//! derivation picks from: one complete sub-sentence derivation per `s`, and one
//! conjunction per `j`. For the basic grammar that is 250 + 6 = 256.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Mode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symbol {
    Nonterminal(String),
    Terminal(String),
}

fn nt(s: &str) -> Symbol {
    Symbol::Nonterminal(s.to_string())
}

fn t(s: &str) -> Symbol {
    Symbol::Terminal(s.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub lhs: String,
    pub alternatives: Vec<Vec<Symbol>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarTable {
    pub productions: Vec<Production>,
    /// Maximum number of times a symbol may appear on one root-to-leaf path.
    pub nesting_caps: BTreeMap<String, usize>,
}

impl GrammarTable {
    pub fn new(productions: Vec<Production>) -> Self {
        GrammarTable {
            productions,
            nesting_caps: BTreeMap::new(),
        }
    }

    pub fn for_mode(mode: Mode, max_relative_depth: usize) -> Self {
        let prod = |lhs: &str, alts: Vec<Vec<Symbol>>| Production {
            lhs: lhs.to_string(),
            alternatives: alts,
        };
        let np = |with_time: bool| {
            let mut alts = vec![
                vec![t("a+")],
                vec![t("a+"), t(","), nt("RelativeClause"), t(",")],
            ];
            if with_time {
                alts.push(vec![t("t")]);
            }
            alts
        };
        let extended = mode == Mode::Extended;
        let productions = vec![
            prod("Paragraph", vec![vec![nt("Sentence")], vec![nt("Sentence"), nt("Paragraph")]]),
            prod(
                "Sentence",
                vec![
                    vec![nt("SubSentence")],
                    vec![nt("Sentence"), nt("Conjunction"), nt("SubSentence")],
                ],
            ),
            prod(
                "SubSentence",
                vec![vec![nt("IndependentClause")], vec![nt("MultiClause")]],
            ),
            prod(
                "IndependentClause",
                vec![
                    vec![nt("Subject"), t("VP<"), nt("Object")],
                    vec![nt("Subject"), t("VP>"), nt("Object")],
                    vec![nt("Subject"), t("VP0"), t("P<"), nt("Object")],
                    vec![nt("Subject"), t("VP0"), t("P>"), nt("Object")],
                    vec![t("P<"), nt("Object"), t(","), nt("Subject"), t("VP0")],
                    vec![t("P>"), nt("Object"), t(","), nt("Subject"), t("VP0")],
                ],
            ),
            prod(
                "MultiClause",
                vec![
                    vec![nt("DependentClause"), t("SC<"), nt("DependentClause")],
                    vec![nt("DependentClause"), t("SC>"), nt("DependentClause")],
                    vec![t("SC<"), nt("DependentClause"), t(","), nt("DependentClause")],
                    vec![t("SC>"), nt("DependentClause"), t(","), nt("DependentClause")],
                ],
            ),
            prod("DependentClause", vec![vec![nt("Subject"), t("VP0")]]),
            prod(
                "RelativeClause",
                vec![
                    vec![t("which"), t("VP<"), nt("Object")],
                    vec![t("which"), t("VP>"), nt("Object")],
                    vec![t("which"), t("VP0"), t("P<"), nt("Object")],
                    vec![t("which"), t("VP0"), t("P>"), nt("Object")],
                ],
            ),
            prod("Subject", np(false)),
            prod("Object", np(extended)),
            prod(
                "Conjunction",
                vec![
                    vec![t(";")],
                    vec![t(", and")],
                    vec![t(", but")],
                    vec![t(", yet")],
                    vec![t(", while")],
                    vec![t(", whereas")],
                ],
            ),
        ];
        let mut table = GrammarTable::new(productions);
        table
            .nesting_caps
            .insert("RelativeClause".to_string(), max_relative_depth);
        table
    }

    fn production(&self, lhs: &str) -> Option<&Production> {
        self.productions.iter().find(|p| p.lhs == lhs)
    }

    /// Number of complete derivations of `symbol` under the nesting caps.
    /// Unbounded recursion through an uncapped symbol yields `None`.
    pub fn derivations(&self, symbol: &str) -> Option<u64> {
        let mut budget = self.nesting_caps.clone();
        let mut stack = Vec::new();
        self.count(symbol, &mut budget, &mut stack)
    }

    fn count(
        &self,
        symbol: &str,
        budget: &mut BTreeMap<String, usize>,
        stack: &mut Vec<String>,
    ) -> Option<u64> {
        let Some(p) = self.production(symbol) else {
            // Undefined nonterminals behave as opaque terminals.
            return Some(1);
        };
        let capped = budget.get(symbol).copied();
        match capped {
            Some(0) => return Some(0),
            Some(n) => {
                budget.insert(symbol.to_string(), n - 1);
            }
            // Recursion is bounded only if the cycle passes through a capped symbol.
            None if stack.iter().rposition(|s| s == symbol).is_some_and(|i| {
                !stack[i + 1..].iter().any(|s| self.nesting_caps.contains_key(s))
            }) =>
            {
                return None
            }
            None => {}
        }
        stack.push(symbol.to_string());
        let mut total: Option<u64> = Some(0);
        for alt in &p.alternatives {
            let mut product = Some(1u64);
            for sym in alt {
                let c = match sym {
                    Symbol::Terminal(_) => Some(1),
                    Symbol::Nonterminal(n) => self.count(n, budget, stack),
                };
                product = match (product, c) {
                    (Some(0), _) | (_, Some(0)) => Some(0),
                    (Some(a), Some(b)) => a.checked_mul(b),
                    _ => None,
                };
            }
            total = match (total, product) {
                (Some(a), Some(b)) => a.checked_add(b),
                _ => None,
            };
        }
        stack.pop();
        if let Some(n) = capped {
            budget.insert(symbol.to_string(), n);
        }
        total
    }

    /// Census whose headline total sums the derivation counts of `units`.
    pub fn census(&self, mode: Mode, units: &[&str]) -> ExpansionCensus {
        let productions = self
            .productions
            .iter()
            .map(|p| ProductionCount {
                production: p.lhs.clone(),
                alternatives: p.alternatives.len() as u64,
                derivations: self.derivations(&p.lhs),
            })
            .collect();
        let total = units
            .iter()
            .map(|u| self.derivations(u).unwrap_or(0))
            .sum();
        ExpansionCensus {
            mode,
            units: units.iter().map(|s| s.to_string()).collect(),
            productions,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionCount {
    pub production: String,
    /// Right-hand-side alternatives with keyword sets expanded.
    pub alternatives: u64,
    /// Complete derivations under the nesting caps; `None` when unbounded.
    pub derivations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionCensus {
    pub mode: Mode,
    pub units: Vec<String>,
    pub productions: Vec<ProductionCount>,
    pub total: u64,
}

/// Published reference figure for the basic grammar.
pub const REFERENCE_TOTAL: u64 = 340;

impl ExpansionCensus {
    pub fn count_for(&self, production: &str) -> Option<&ProductionCount> {
        self.productions.iter().find(|p| p.production == production)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Expansion census ({} grammar)\n", self.mode);
        let _ = writeln!(out, "| Production | RHS alternatives | Derivations |");
        let _ = writeln!(out, "|---|---:|---:|");
        for p in &self.productions {
            let d = p
                .derivations
                .map_or_else(|| "unbounded".to_string(), |d| d.to_string());
            let _ = writeln!(out, "| {} | {} | {} |", p.production, p.alternatives, d);
        }
        let parts: Vec<String> = self
            .units
            .iter()
            .map(|u| {
                let d = self
                    .count_for(u)
                    .and_then(|p| p.derivations)
                    .unwrap_or(0);
                format!("{u} ({d})")
            })
            .collect();
        let _ = writeln!(out, "\nTotal = {} = {}", parts.join(" + "), self.total);
        if self.mode == Mode::Basic {
            let delta = self.total as i64 - REFERENCE_TOTAL as i64;
            let _ = writeln!(
                out,
                "\nReference figure: {REFERENCE_TOTAL} (delta {delta:+}). The reference gives no counting \
                 convention. This census counts one option per complete sub-sentence derivation \
                 (subjects and objects are `a+` or `a+` with one relative clause, relative clauses \
                 do not nest) plus one per conjunction alternative. The sentence and paragraph \
                 productions are left-recursive and are not counted as options themselves."
            );
        }
        out
    }
}

/// Census of the built-in grammar for `mode` with relative clauses nesting at most once.
pub fn enumerate_expansion_options(mode: Mode) -> ExpansionCensus {
    GrammarTable::for_mode(mode, 1).census(mode, &["SubSentence", "Conjunction"])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_breakdown() {
        let c = enumerate_expansion_options(Mode::Basic);
        let d = |p: &str| c.count_for(p).unwrap().derivations;
        assert_eq!(d("RelativeClause"), Some(4));
        assert_eq!(d("Subject"), Some(5));
        assert_eq!(d("Object"), Some(5));
        assert_eq!(d("IndependentClause"), Some(150));
        assert_eq!(d("MultiClause"), Some(100));
        assert_eq!(d("SubSentence"), Some(250));
        assert_eq!(d("Conjunction"), Some(6));
        assert_eq!(d("Sentence"), None);
        assert_eq!(c.total, 256);
        assert_eq!(c.count_for("IndependentClause").unwrap().alternatives, 6);
    }

    #[test]
    fn extended_adds_options() {
        let basic = enumerate_expansion_options(Mode::Basic);
        let ext = enumerate_expansion_options(Mode::Extended);
        assert!(ext.total >= basic.total);
        assert_eq!(ext.count_for("SubSentence").unwrap().derivations, Some(864));
    }

    #[test]
    fn single_production_counts_its_alternatives() {
        let table = GrammarTable::new(vec![Production {
            lhs: "X".into(),
            alternatives: vec![vec![t("p")], vec![t("q")], vec![t("r")]],
        }]);
        assert_eq!(table.census(Mode::Basic, &["X"]).total, 3);
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            enumerate_expansion_options(Mode::Basic),
            enumerate_expansion_options(Mode::Basic)
        );
        assert!(enumerate_expansion_options(Mode::Basic)
            .to_markdown()
            .contains("delta -84"));
    }
}
