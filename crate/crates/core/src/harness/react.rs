//! Text-only ReAct agent over a plain completion endpoint.

use std::sync::Arc;

use serde_json::{json, Value};

use super::http::final_or_halt;
use super::*;
use crate::endpoint::CompletionEndpoint;

/// Prompt scaffold. `{tools}`, `{query}` and `{scratchpad}` are substituted.
pub const REACT_TEMPLATE: &str = "You can use the following tools:

{tools}

Work in steps. In each step write one line starting with \"Thought:\", then one line
\"Action: tool_name[arguments]\" where arguments is a JSON object (use {} when the tool
takes none). Wait for the Observation before the next step. When every task is finished,
write \"Final Answer:\" followed by a short summary. If you decide to stop early without
finishing, write \"Halt:\" followed by the reason.

Request:
{query}

{scratchpad}Thought:";

pub struct ReactAdapter {
    endpoint: Arc<dyn CompletionEndpoint>,
    scratchpad: String,
    seen_entries: usize,
}

impl ReactAdapter {
    pub fn new(endpoint: Arc<dyn CompletionEndpoint>) -> Self {
        ReactAdapter {
            endpoint,
            scratchpad: String::new(),
            seen_entries: 0,
        }
    }

    pub fn scratchpad(&self) -> &str {
        &self.scratchpad
    }

    fn prompt(&self, transcript: &Transcript) -> String {
        let tools: Vec<String> = transcript
            .tools
            .iter()
            .map(|t| format!("{}: {} Arguments schema: {}", t.name, t.description, t.parameters))
            .collect();
        REACT_TEMPLATE
            .replace("{tools}", &tools.join("\n"))
            .replace("{query}", &transcript.query)
            .replace("{scratchpad}", &self.scratchpad)
    }
}

impl AgentAdapter for ReactAdapter {
    fn next_step(&mut self, transcript: &Transcript) -> Result<AgentStep, AdapterError> {
        for entry in &transcript.entries[self.seen_entries.min(transcript.entries.len())..] {
            if let TranscriptEntry::ToolResult { content, .. } = entry {
                self.scratchpad.push_str(&format!("Observation: {content}\n"));
            }
        }
        self.seen_entries = transcript.entries.len();

        let reply = self.endpoint.complete(&self.prompt(transcript))?;
        // The model may hallucinate observations; everything from there on is dropped.
        let reply = match reply.find("Observation:") {
            Some(i) => &reply[..i],
            None => reply.as_str(),
        };
        let reply = reply.trim_end();
        if self.scratchpad.is_empty() || self.scratchpad.ends_with('\n') {
            self.scratchpad.push_str("Thought: ");
        }
        self.scratchpad.push_str(reply.trim_start_matches("Thought:").trim_start());
        self.scratchpad.push('\n');
        Ok(parse_reply(reply))
    }
}

/// One ReAct adapter per run over a shared endpoint.
pub struct ReactAgentFactory {
    label: String,
    endpoint: Arc<dyn CompletionEndpoint>,
}

impl ReactAgentFactory {
    pub fn new(label: impl Into<String>, endpoint: Arc<dyn CompletionEndpoint>) -> Self {
        ReactAgentFactory {
            label: label.into(),
            endpoint,
        }
    }
}

impl AgentFactory for ReactAgentFactory {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn create(&self, _case: &QueryCase, _run_seed: u64) -> Box<dyn AgentAdapter> {
        Box::new(ReactAdapter::new(self.endpoint.clone()))
    }
}

/// Reads the first action, final answer or halt line of a completion.
pub fn parse_reply(reply: &str) -> AgentStep {
    let lines: Vec<&str> = reply.lines().map(str::trim).collect();
    for (i, line) in lines.iter().enumerate() {
        if let Some(rest) = line.strip_prefix("Action:") {
            let input = lines
                .get(i + 1)
                .and_then(|l| l.strip_prefix("Action Input:"))
                .map(str::trim);
            return match parse_action(rest.trim(), input) {
                Ok(call) => AgentStep::ToolCall(call),
                Err(detail) => AgentStep::Malformed { detail },
            };
        }
        if let Some(rest) = line.strip_prefix("Final Answer:") {
            let text = std::iter::once(rest.trim())
                .chain(lines[i + 1..].iter().copied())
                .collect::<Vec<_>>()
                .join("\n");
            return final_or_halt(text.trim().to_string());
        }
        if let Some(rest) = line.strip_prefix("Halt:") {
            return AgentStep::Halt {
                reason: rest.trim().to_string(),
            };
        }
    }
    AgentStep::Continue
}

fn parse_action(text: &str, input: Option<&str>) -> Result<ToolCall, String> {
    let (name, raw) = match text.find(['[', '(']) {
        Some(i) => {
            let close = if text[i..].starts_with('[') { ']' } else { ')' };
            let end = text
                .rfind(close)
                .filter(|&e| e > i)
                .ok_or_else(|| format!("unbalanced brackets in `{text}`"))?;
            (&text[..i], Some(&text[i + 1..end]))
        }
        None => (text, input),
    };
    let name = name.trim().trim_matches('`');
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid tool name in `{text}`"));
    }
    let args = match raw.map(str::trim) {
        None | Some("") => json!({}),
        Some(s) => serde_json::from_str::<Value>(s)
            .map_err(|e| format!("arguments of `{name}` are not JSON: {e}"))?,
    };
    if !args.is_object() {
        return Err(format!("arguments of `{name}` must be a JSON object"));
    }
    Ok(ToolCall {
        id: None,
        name: name.to_string(),
        args,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoint::ScriptedEndpoint;

    #[test]
    fn parses_actions() {
        let s = parse_reply("I start.\nAction: check_status[{\"start_time\": \"09:00\"}]");
        assert_eq!(
            s,
            AgentStep::ToolCall(ToolCall {
                id: None,
                name: "check_status".into(),
                args: json!({"start_time": "09:00"}),
            })
        );
        let s = parse_reply("Action: run_it\nAction Input: {}");
        assert!(matches!(s, AgentStep::ToolCall(c) if c.name == "run_it"));
        assert!(matches!(parse_reply("Action: run_it[]"), AgentStep::ToolCall(_)));
        assert!(matches!(parse_reply("Action: run it[{}]"), AgentStep::Malformed { .. }));
        assert!(matches!(parse_reply("Action: run_it[{bad]"), AgentStep::Malformed { .. }));
        assert!(matches!(parse_reply("just thinking"), AgentStep::Continue));
        assert!(matches!(parse_reply("Final Answer: done"), AgentStep::FinalAnswer { .. }));
        assert!(matches!(parse_reply("Halt: no room left"), AgentStep::Halt { .. }));
    }

    #[test]
    fn scratchpad_accumulates_observations() {
        let ep = Arc::new(ScriptedEndpoint::new(vec![
            "I will begin.\nAction: a_tool[{}]\nObservation: made up".to_string(),
            "Final Answer: finished".to_string(),
        ]));
        let mut agent = ReactAdapter::new(ep.clone());
        let mut t = Transcript {
            query: "do it".into(),
            tools: vec![],
            entries: vec![],
        };
        let s = agent.next_step(&t).unwrap();
        assert!(matches!(s, AgentStep::ToolCall(_)));
        assert!(!agent.scratchpad().contains("made up"));
        t.entries.push(TranscriptEntry::Agent(s));
        t.entries.push(TranscriptEntry::ToolResult {
            call_id: None,
            name: "a_tool".into(),
            content: "Done: ok.".into(),
        });
        assert!(matches!(agent.next_step(&t).unwrap(), AgentStep::FinalAnswer { .. }));
        let prompts = ep.prompts();
        assert!(prompts[1].contains("Observation: Done: ok."));
    }
}
