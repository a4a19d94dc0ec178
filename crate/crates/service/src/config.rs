//! Runtime configuration from `PLANGLOW_*` environment variables.
//!
//! Test mode swaps in the scripted provider and the mock catalog, pins the
//! clock, and turns on the egress guard so nothing can reach the network.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use planglow_core::clock::{Clock, FixedClock, SystemClock};
use planglow_core::llm::live::ChatCompletionsProvider;
use planglow_core::llm::{load_transcript, ProviderError, TextProvider, TranscriptError};
use planglow_core::resources::youtube::YoutubeCatalog;
use planglow_core::resources::{Catalog, CatalogError, MockCatalog};
use planglow_core::template::{TemplateError, TemplateSet};
use planglow_core::{egress, Pipeline};
use thiserror::Error;

pub const MODE_ENV: &str = "PLANGLOW_MODE";
pub const DATA_DIR_ENV: &str = "PLANGLOW_DATA_DIR";
pub const TEMPLATE_DIR_ENV: &str = "PLANGLOW_TEMPLATE_DIR";
pub const TRANSCRIPT_ENV: &str = "PLANGLOW_TRANSCRIPT";
pub const CATALOG_ENV: &str = "PLANGLOW_CATALOG";
pub const ADDR_ENV: &str = "PLANGLOW_ADDR";

pub const DEFAULT_DATA_DIR: &str = "planglow-data";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Live,
    Test,
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "test" => Ok(Mode::Test),
            other => Err(ConfigError::BadValue {
                name: MODE_ENV,
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{name} has an invalid value `{value}`")]
    BadValue { name: &'static str, value: String },
    #[error("test mode requires a {0} fixture path")]
    MissingFixture(&'static str),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("transcript {path}: {source}")]
    Transcript {
        path: PathBuf,
        source: TranscriptError,
    },
    #[error("catalog {path}: {source}")]
    MockCatalog { path: PathBuf, source: CatalogError },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("live provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("live catalog: {0}")]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub mode: Mode,
    pub data_dir: PathBuf,
    pub template_dir: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub addr: SocketAddr,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mode: Mode::Live,
            data_dir: PathBuf::from(DEFAULT_DATA_DIR),
            template_dir: None,
            transcript: None,
            catalog: None,
            addr: DEFAULT_ADDR.parse().expect("default address"),
        }
    }
}

impl Config {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        if let Some(m) = get(MODE_ENV) {
            c.mode = m.parse()?;
        }
        if let Some(d) = get(DATA_DIR_ENV) {
            c.data_dir = d.into();
        }
        c.template_dir = get(TEMPLATE_DIR_ENV).map(PathBuf::from);
        c.transcript = get(TRANSCRIPT_ENV).map(PathBuf::from);
        c.catalog = get(CATALOG_ENV).map(PathBuf::from);
        if let Some(a) = get(ADDR_ENV) {
            c.addr = a.parse().map_err(|_| ConfigError::BadValue {
                name: ADDR_ENV,
                value: a,
            })?;
        }
        Ok(c)
    }

    /// Test mode needs both fixture files.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.mode == Mode::Test {
            if self.transcript.is_none() {
                return Err(ConfigError::MissingFixture("transcript"));
            }
            if self.catalog.is_none() {
                return Err(ConfigError::MissingFixture("catalog"));
            }
        }
        Ok(())
    }

    /// Builds the engine for this mode. Live adapters own blocking HTTP
    /// clients, so call this outside an async context.
    pub fn engine(&self) -> Result<Engine, ConfigError> {
        self.check()?;
        let templates = match &self.template_dir {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::builtin(),
        };
        match self.mode {
            Mode::Test => {
                egress::deny_all();
                let transcript = self.transcript.as_ref().expect("checked");
                let catalog = self.catalog.as_ref().expect("checked");
                let provider = load_transcript(&read(transcript)?).map_err(|source| {
                    ConfigError::Transcript {
                        path: transcript.clone(),
                        source,
                    }
                })?;
                let catalog_impl = MockCatalog::from_json(&read(catalog)?).map_err(|source| {
                    ConfigError::MockCatalog {
                        path: catalog.clone(),
                        source,
                    }
                })?;
                Ok(Engine::new(
                    Pipeline::new(templates, Arc::new(FixedClock::epoch())),
                    Arc::new(provider),
                    Arc::new(catalog_impl),
                ))
            }
            Mode::Live => {
                let clock: Arc<dyn Clock> = Arc::new(SystemClock);
                Ok(Engine::new(
                    Pipeline::new(templates, clock),
                    Arc::new(ChatCompletionsProvider::from_env()?),
                    Arc::new(YoutubeCatalog::from_env()?),
                ))
            }
        }
    }
}

fn read(path: &PathBuf) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.clone(),
        message: e.to_string(),
    })
}

/// The pipeline together with the provider and catalog it runs against.
#[derive(Clone)]
pub struct Engine {
    pub pipeline: Arc<Pipeline>,
    pub provider: Arc<dyn TextProvider>,
    pub catalog: Arc<dyn Catalog>,
}

impl Engine {
    pub fn new(
        pipeline: Pipeline,
        provider: Arc<dyn TextProvider>,
        catalog: Arc<dyn Catalog>,
    ) -> Self {
        Self {
            pipeline: Arc::new(pipeline),
            provider,
            catalog,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn config(vars: &[(&str, &str)]) -> Result<Config, ConfigError> {
        let map: HashMap<String, String> = vars
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Config::from_lookup(|k| map.get(k).cloned())
    }

    #[test]
    fn defaults_to_live() {
        let c = config(&[]).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn reads_every_variable() {
        let c = config(&[
            (MODE_ENV, "TEST"),
            (DATA_DIR_ENV, "/tmp/d"),
            (TEMPLATE_DIR_ENV, "/tmp/t"),
            (TRANSCRIPT_ENV, "/tmp/x.json"),
            (CATALOG_ENV, "/tmp/c.json"),
            (ADDR_ENV, "0.0.0.0:9000"),
        ])
        .unwrap();
        assert_eq!(c.mode, Mode::Test);
        assert_eq!(c.data_dir, PathBuf::from("/tmp/d"));
        assert_eq!(c.template_dir, Some(PathBuf::from("/tmp/t")));
        assert_eq!(c.addr.port(), 9000);
        c.check().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(
            config(&[(MODE_ENV, "staging")]),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            config(&[(ADDR_ENV, "nowhere")]),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn test_mode_requires_fixtures() {
        let c = config(&[(MODE_ENV, "test"), (CATALOG_ENV, "c.json")]).unwrap();
        assert!(matches!(
            c.check(),
            Err(ConfigError::MissingFixture("transcript"))
        ));
        let c = config(&[(MODE_ENV, "test"), (TRANSCRIPT_ENV, "t.json")]).unwrap();
        assert!(matches!(
            c.check(),
            Err(ConfigError::MissingFixture("catalog"))
        ));
    }
}
