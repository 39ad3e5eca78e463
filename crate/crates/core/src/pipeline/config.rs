use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::eval::EvalOptions;
use crate::llm::GenerationConfig;
use crate::retrieval::DEFAULT_DEMOS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyInstSource {
    /// Generated by in-context learning from a KeyInst set.
    Icl,
    /// Looked up by task id in a KeyInst file.
    File,
    None,
}

impl FromStr for KeyInstSource {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "icl" => Ok(Self::Icl),
            "file" => Ok(Self::File),
            "none" => Ok(Self::None),
            other => Err(ConfigError::new(format!(
                "unknown keyinst_source `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config{}: {message}", .line.map(|l| format!(" line {l}")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub keyinst_source: KeyInstSource,
    pub m: usize,
    pub pool_path: Option<PathBuf>,
    pub keyinst_path: Option<PathBuf>,
    pub generator_config: GenerationConfig,
    pub sql_config: GenerationConfig,
    pub output_path: PathBuf,
    pub workers: usize,
    pub eval: EvalOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            keyinst_source: KeyInstSource::None,
            m: DEFAULT_DEMOS,
            pool_path: None,
            keyinst_path: None,
            generator_config: GenerationConfig::default(),
            sql_config: GenerationConfig::default(),
            output_path: PathBuf::from("out"),
            workers: 4,
            eval: EvalOptions::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::new(format!("`{key}`: {e}")))
}

fn seconds(key: &str, value: &str) -> Result<Duration, ConfigError> {
    let s: f64 = parse(key, value)?;
    Duration::try_from_secs_f64(s).map_err(|e| ConfigError::new(format!("`{key}`: {e}")))
}

fn set_generation(c: &mut GenerationConfig, key: &str, value: &str) -> Result<bool, ConfigError> {
    match key {
        "model" => c.model = value.to_string(),
        "temperature" => c.temperature = parse(key, value)?,
        "max_tokens" => c.max_tokens = parse(key, value)?,
        "timeout" => c.timeout = seconds(key, value)?,
        "retries" => c.retries = parse(key, value)?,
        "base_url" => c.base_url = value.to_string(),
        "api_key_env" => c.api_key_env = value.to_string(),
        "backoff_base" => c.backoff_base = seconds(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl PipelineConfig {
    /// Applies one `key = value` setting. Generation keys take an optional
    /// `generator.` or `sql.` prefix; unprefixed they set both.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let known = match key {
            "keyinst_source" => {
                self.keyinst_source = value.parse()?;
                true
            }
            "m" => {
                self.m = parse(key, value)?;
                true
            }
            "pool_path" => {
                self.pool_path = Some(value.into());
                true
            }
            "keyinst_path" => {
                self.keyinst_path = Some(value.into());
                true
            }
            "output_path" => {
                self.output_path = value.into();
                true
            }
            "workers" => {
                self.workers = parse(key, value)?;
                true
            }
            "strict" => {
                self.eval.strict = parse(key, value)?;
                true
            }
            "exec_timeout" => {
                self.eval.timeout = seconds(key, value)?;
                true
            }
            _ => match key.split_once('.') {
                Some(("generator", k)) => set_generation(&mut self.generator_config, k, value)?,
                Some(("sql", k)) => set_generation(&mut self.sql_config, k, value)?,
                Some(_) => false,
                None => {
                    set_generation(&mut self.generator_config, key, value)?
                        && set_generation(&mut self.sql_config, key, value)?
                }
            },
        };
        if known {
            Ok(())
        } else {
            Err(ConfigError::new(format!("unknown key `{key}`")))
        }
    }

    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at_line = |mut e: ConfigError| {
                e.line = Some(i + 1);
                e
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at_line(ConfigError::new("expected `key = value`")))?;
            self.set(key.trim(), value.trim()).map_err(at_line)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.keyinst_source {
            KeyInstSource::Icl if self.pool_path.is_none() => {
                return Err(ConfigError::new("keyinst_source = icl needs pool_path"))
            }
            KeyInstSource::Icl if self.m == 0 => {
                return Err(ConfigError::new("keyinst_source = icl needs m >= 1"))
            }
            KeyInstSource::File if self.keyinst_path.is_none() => {
                return Err(ConfigError::new("keyinst_source = file needs keyinst_path"))
            }
            _ => {}
        }
        if self.workers == 0 {
            return Err(ConfigError::new("workers must be >= 1"));
        }
        for (name, c) in [
            ("generator", &self.generator_config),
            ("sql", &self.sql_config),
        ] {
            c.validate()
                .map_err(|e| ConfigError::new(format!("{name}: {e}")))?;
        }
        Ok(())
    }
}
