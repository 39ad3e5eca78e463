use std::collections::HashMap;
use std::sync::Mutex;

use super::{GenerationConfig, LlmError, TextGenerator};
use crate::prompt::Prompt;

enum Script {
    /// Prompt hash to response.
    Map(HashMap<String, String>),
    /// Responses in call order.
    List(Vec<String>),
}

/// Deterministic scripted provider that records every prompt it sees.
pub struct MockProvider {
    script: Script,
    transcript: Mutex<Vec<String>>,
}

impl MockProvider {
    pub fn from_map(responses: HashMap<String, String>) -> Result<Self, LlmError> {
        if responses.is_empty() {
            return Err(LlmError::EmptyScript);
        }
        Ok(Self::with(Script::Map(responses)))
    }

    pub fn from_list<I, S>(responses: I) -> Result<Self, LlmError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let list: Vec<String> = responses.into_iter().map(Into::into).collect();
        if list.is_empty() {
            return Err(LlmError::EmptyScript);
        }
        Ok(Self::with(Script::List(list)))
    }

    fn with(script: Script) -> Self {
        Self {
            script,
            transcript: Mutex::new(Vec::new()),
        }
    }

    /// Rendered prompts, in call order.
    pub fn transcript(&self) -> Vec<String> {
        self.transcript.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.transcript.lock().unwrap().len()
    }
}

impl TextGenerator for MockProvider {
    fn generate(&self, prompt: &Prompt, _config: &GenerationConfig) -> Result<String, LlmError> {
        let mut transcript = self.transcript.lock().unwrap();
        transcript.push(prompt.render());
        match &self.script {
            Script::Map(map) => {
                let hash = prompt.hash();
                map.get(&hash)
                    .cloned()
                    .ok_or(LlmError::UnknownPrompt { hash })
            }
            Script::List(list) => {
                list.get(transcript.len() - 1)
                    .cloned()
                    .ok_or(LlmError::ScriptExhausted {
                        calls: transcript.len(),
                    })
            }
        }
    }
}

/// Provider backed by a closure over the prompt.
pub struct FnProvider<F>(pub F);

impl<F> TextGenerator for FnProvider<F>
where
    F: Fn(&Prompt) -> Result<String, LlmError> + Send + Sync,
{
    fn generate(&self, prompt: &Prompt, _config: &GenerationConfig) -> Result<String, LlmError> {
        (self.0)(prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Segment;

    fn prompt(text: &str) -> Prompt {
        Prompt::new(vec![Segment::user(text)]).unwrap()
    }

    #[test]
    fn list_mode_in_order_then_exhausted() {
        let m = MockProvider::from_list(["A", "B"]).unwrap();
        let c = GenerationConfig::default();
        assert_eq!(m.generate(&prompt("1"), &c).unwrap(), "A");
        assert_eq!(m.generate(&prompt("2"), &c).unwrap(), "B");
        assert!(matches!(
            m.generate(&prompt("3"), &c),
            Err(LlmError::ScriptExhausted { calls: 3 })
        ));
        assert_eq!(m.transcript(), vec!["1", "2", "3"]);
    }

    #[test]
    fn map_mode_by_hash() {
        let p = prompt("q");
        let m =
            MockProvider::from_map(HashMap::from([(p.hash(), "SELECT 1".to_string())])).unwrap();
        let c = GenerationConfig::default();
        assert_eq!(m.generate(&p, &c).unwrap(), "SELECT 1");
        assert!(matches!(
            m.generate(&prompt("other"), &c),
            Err(LlmError::UnknownPrompt { .. })
        ));
        assert_eq!(m.calls(), 2);
    }

    #[test]
    fn empty_script_rejected() {
        assert!(matches!(
            MockProvider::from_list(Vec::<String>::new()),
            Err(LlmError::EmptyScript)
        ));
        assert!(matches!(
            MockProvider::from_map(HashMap::new()),
            Err(LlmError::EmptyScript)
        ));
    }
}
