//! The HTTP and ReAct adapters against a local stub chat-completions server.

mod common;

use std::sync::Arc;

use common::{text_reply, tool_call_reply, Reply, StubServer};
use plancheck_core::harness::{
    run_case, ChatConfig, Clock, ErrorType, HttpChatAdapter, HttpChatClient, Outcome, ReactAdapter,
    RunLimits,
};
use plancheck_core::lexicon::builtin_lexicon;
use plancheck_core::solver::check_sat;
use plancheck_core::synthesis::{synthesize_case, QueryCase, SynthesisConfig};
use plancheck_core::Mode;

fn client(server: &StubServer) -> Arc<HttpChatClient> {
    Arc::new(
        HttpChatClient::new(ChatConfig {
            base_url: server.base_url.clone(),
            model: "stub-model".into(),
            api_key: Some("test-key".into()),
            request_timeout_secs: 10,
            ..ChatConfig::default()
        })
        .unwrap(),
    )
}

fn basic_case(seed: u64) -> QueryCase {
    synthesize_case(&builtin_lexicon(), 3, Mode::Basic, seed, &SynthesisConfig::default()).unwrap()
}

fn witness_tools(case: &QueryCase) -> Vec<String> {
    check_sat(&case.constraints)
        .witness()
        .unwrap()
        .sequence()
        .into_iter()
        .map(|a| case.action(a).unwrap().tool_name.clone())
        .collect()
}

#[test]
fn replayed_tool_calls_become_the_log() {
    let case = basic_case(11);
    let tools = witness_tools(&case);
    let server = StubServer::start(vec![
        tool_call_reply(&[("call_1", &tools[0], "{}"), ("call_2", &tools[1], "")]),
        tool_call_reply(&[("call_3", &tools[2], "{}")]),
        text_reply("All three tasks are done."),
    ]);
    let mut agent = HttpChatAdapter::new(client(&server));
    let (log, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);

    assert_eq!(log.tool_sequence(), tools.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(matches!(log.outcome, Outcome::Finished { .. }));
    assert!(verdict.is_correct(), "{verdict:?}");

    let reqs = server.requests();
    assert_eq!(reqs.len(), 3);
    assert!(reqs.iter().all(|(head, _)| head == "/v1/chat/completions Bearer test-key"));
    let first: serde_json::Value = serde_json::from_str(&reqs[0].1).unwrap();
    assert_eq!(first["model"], "stub-model");
    assert_eq!(first["temperature"], 0.0);
    assert_eq!(first["tools"].as_array().unwrap().len(), 3);
    assert_eq!(first["messages"][0]["content"], case.text.as_str());
    // Both results of the first batch are fed back before the second request.
    let second: serde_json::Value = serde_json::from_str(&reqs[1].1).unwrap();
    let tool_msgs: Vec<&serde_json::Value> = second["messages"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["role"] == "tool")
        .collect();
    assert_eq!(tool_msgs.len(), 2);
    assert_eq!(tool_msgs[0]["tool_call_id"], "call_1");
    assert!(tool_msgs[1]["content"].as_str().unwrap().starts_with("Done:"));
    // Durations and action ids never reach the wire.
    for (_, body) in &reqs {
        assert!(!body.contains("\"a1\""));
    }
}

#[test]
fn undeclared_tool_is_an_act_error() {
    let case = basic_case(12);
    let tools = witness_tools(&case);
    let server = StubServer::start(vec![
        tool_call_reply(&[("c1", "reboot_everything", "{}")]),
        tool_call_reply(&[("c2", &tools[0], "{}"), ("c3", &tools[1], "{}"), ("c4", &tools[2], "{}")]),
        text_reply("Done."),
    ]);
    let mut agent = HttpChatAdapter::new(client(&server));
    let (log, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert_eq!(log.records.len(), 4);
    assert_eq!(verdict.error_type, Some(ErrorType::ActError));
}

#[test]
fn early_final_answer_loses_actions() {
    let case = basic_case(13);
    let tools = witness_tools(&case);
    let server = StubServer::start(vec![
        tool_call_reply(&[("c1", &tools[0], "{}")]),
        text_reply("I am finished."),
    ]);
    let mut agent = HttpChatAdapter::new(client(&server));
    let (_, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert_eq!(verdict.error_type, Some(ErrorType::ActionLost));
    assert_eq!(verdict.lost.len(), 2);
}

#[test]
fn unparseable_arguments_are_an_act_error() {
    let case = basic_case(14);
    let tools = witness_tools(&case);
    let server = StubServer::start(vec![
        tool_call_reply(&[("c1", &tools[0], "{not json")]),
        tool_call_reply(&[("c2", &tools[0], "{}"), ("c3", &tools[1], "{}"), ("c4", &tools[2], "{}")]),
        text_reply("Done."),
    ]);
    let mut agent = HttpChatAdapter::new(client(&server));
    let (_, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert_eq!(verdict.error_type, Some(ErrorType::ActError));
    // The failed call still gets a tool message so the conversation stays valid.
    let second: serde_json::Value = serde_json::from_str(&server.requests()[1].1).unwrap();
    assert!(second["messages"].as_array().unwrap().iter().any(|m| m["tool_call_id"] == "c1"));
}

#[test]
fn rejected_credentials_surface_as_transport_failure() {
    let case = basic_case(15);
    let server = StubServer::start(vec![Reply {
        status: 401,
        body: "{\"error\":\"bad key\"}".into(),
    }]);
    let mut agent = HttpChatAdapter::new(client(&server));
    let (log, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert!(matches!(log.outcome, Outcome::ProtocolError { transport: true, .. }));
    assert_eq!(verdict.error_type, Some(ErrorType::ActError));
}

#[test]
fn extended_start_times_pass_through() {
    let case =
        synthesize_case(&builtin_lexicon(), 3, Mode::Extended, 16, &SynthesisConfig::default()).unwrap();
    let plan = check_sat(&case.constraints).witness().unwrap();
    let calls = plan.schedule.unwrap();
    let replies: Vec<Reply> = calls
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let name = case.action(c.action).unwrap().tool_name.clone();
            let args = format!("{{\"start_time\": \"{:02}:00\"}}", c.start);
            tool_call_reply(&[(&format!("t{i}"), &name, &args)])
        })
        .chain([text_reply("Schedule complete.")])
        .collect();
    let server = StubServer::start(replies);
    let mut agent = HttpChatAdapter::new(client(&server));
    let (log, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert!(verdict.is_correct(), "{verdict:?}");
    assert_eq!(log.records[0].start, Some(calls[0].start));
    let first: serde_json::Value = serde_json::from_str(&server.requests()[0].1).unwrap();
    assert_eq!(first["tools"][0]["function"]["parameters"]["required"][0], "start_time");
}

#[test]
fn react_agent_over_http_completion() {
    let case = basic_case(17);
    let tools = witness_tools(&case);
    let mut replies = vec![text_reply("Let me think about the order first.")];
    for t in &tools {
        replies.push(text_reply(&format!("I will do this next.\nAction: {t}[{{}}]")));
    }
    replies.push(text_reply("Final Answer: everything is done."));
    let server = StubServer::start(replies);
    let mut agent = ReactAdapter::new(client(&server));
    let (log, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert!(verdict.is_correct(), "{verdict:?}");
    // The thought-only turn counts as an iteration.
    assert_eq!(log.iterations, tools.len() + 2);
    let last: serde_json::Value = serde_json::from_str(&server.requests().last().unwrap().1).unwrap();
    let prompt = last["messages"][0]["content"].as_str().unwrap();
    assert_eq!(prompt.matches("Observation: Done:").count(), 3);
}

#[test]
fn react_unknown_tool_and_bad_action_line() {
    let case = basic_case(18);
    let server = StubServer::start(vec![
        text_reply("Action: do_magic[{}]"),
        text_reply("Final Answer: done"),
    ]);
    let mut agent = ReactAdapter::new(client(&server));
    let (log, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert_eq!(log.records.len(), 1);
    assert_eq!(verdict.error_type, Some(ErrorType::ActError));

    let server = StubServer::start(vec![
        text_reply("Action: run the first task please"),
        text_reply("Final Answer: done"),
    ]);
    let mut agent = ReactAdapter::new(client(&server));
    let (_, verdict) = run_case(&mut agent, &case, &RunLimits::default(), Clock::Frozen);
    assert_eq!(verdict.error_type, Some(ErrorType::ActError));
}

#[test]
fn react_without_actions_hits_the_iteration_cap() {
    let case = basic_case(19);
    let server = StubServer::start((0..5).map(|_| text_reply("Still thinking.")).collect());
    let mut agent = ReactAdapter::new(client(&server));
    let limits = RunLimits {
        timeout_secs: 30,
        max_iterations: 5,
    };
    let (log, verdict) = run_case(&mut agent, &case, &limits, Clock::Frozen);
    assert_eq!(log.outcome, Outcome::IterationCapHit);
    assert_eq!(verdict.error_type, Some(ErrorType::Timeout));
}
