//! Text-completion endpoints shared by lexicon regeneration and the agent adapters.

use std::collections::VecDeque;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EndpointError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint rejected credentials: {0}")]
    Auth(String),
    #[error("endpoint returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
}

impl EndpointError {
    /// The endpoint could not be reached or refused service, as opposed to
    /// answering with something unusable.
    pub fn is_transport(&self) -> bool {
        !matches!(self, EndpointError::Malformed(_))
    }
}

/// A single-turn text completion.
pub trait CompletionEndpoint: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError>;
}

/// Replays canned completions in order and records the prompts it saw.
#[derive(Debug, Default)]
pub struct ScriptedEndpoint {
    replies: Mutex<VecDeque<Result<String, EndpointError>>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedEndpoint {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedEndpoint {
            replies: Mutex::new(replies.into_iter().map(|s| Ok(s.into())).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn push_error(&self, e: EndpointError) {
        self.replies.lock().expect("poisoned").push_back(Err(e));
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("poisoned").clone()
    }
}

impl CompletionEndpoint for ScriptedEndpoint {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        self.prompts.lock().expect("poisoned").push(prompt.to_string());
        self.replies
            .lock()
            .expect("poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(EndpointError::Transport("script exhausted".into())))
    }
}

/// Always fails with a transport error, like a closed port.
#[derive(Debug, Default, Clone, Copy)]
pub struct UnreachableEndpoint;

impl CompletionEndpoint for UnreachableEndpoint {
    fn complete(&self, _prompt: &str) -> Result<String, EndpointError> {
        Err(EndpointError::Transport("connection refused".into()))
    }
}
