//! Prompt templates with `{{name}}` placeholders.
//!
//! A template set is a directory with a `VERSION` file and one file per
//! stage (`background.txt`, `initial.txt`, ...). Each stage file holds a
//! `[system]` section followed by a `[user]` section. The compiled-in set
//! mirrors `crates/core/templates/`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::llm::StageTag;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
    #[error("invalid placeholder name `{0}`")]
    BadName(String),
    #[error("placeholder `{0}` is not bound")]
    Unbound(String),
    #[error("template `{0}` is missing its [system] or [user] section")]
    MissingSection(String),
    #[error("no template for stage `{0}`")]
    MissingStage(StageTag),
    #[error("reading templates: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut rest = src;
        let mut offset = 0;
        while let Some(start) = rest.find("{{") {
            if start > 0 {
                pieces.push(Piece::Text(rest[..start].to_string()));
            }
            let after = &rest[start + 2..];
            let end = after
                .find("}}")
                .ok_or(TemplateError::Unterminated(offset + start))?;
            let name = after[..end].trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(TemplateError::BadName(name.to_string()));
            }
            pieces.push(Piece::Var(name.to_string()));
            let consumed = start + 2 + end + 2;
            offset += consumed;
            rest = &rest[consumed..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        Ok(Self { pieces })
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Var(n) => Some(n.as_str()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Substitutes in one pass; inserted values are never re-scanned.
    pub fn render(&self, vars: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Var(n) => out.push_str(
                    vars.get(n.as_str())
                        .ok_or_else(|| TemplateError::Unbound(n.clone()))?,
                ),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTemplate {
    pub system: Template,
    pub user: Template,
}

impl StageTemplate {
    pub fn parse(name: &str, src: &str) -> Result<Self, TemplateError> {
        let missing = || TemplateError::MissingSection(name.to_string());
        let body = src
            .trim_start()
            .strip_prefix("[system]")
            .ok_or_else(missing)?;
        let (system, user) = body.split_once("\n[user]").ok_or_else(missing)?;
        Ok(Self {
            system: Template::parse(system.trim())?,
            user: Template::parse(user.trim())?,
        })
    }

    pub fn render(&self, vars: &BTreeMap<&str, String>) -> Result<(String, String), TemplateError> {
        Ok((self.system.render(vars)?, self.user.render(vars)?))
    }
}

pub const STAGES: [StageTag; 6] = [
    StageTag::Background,
    StageTag::Initial,
    StageTag::Critique,
    StageTag::Improve,
    StageTag::Intent,
    StageTag::ChatAnswer,
];

const BUILTIN: [(StageTag, &str); 6] = [
    (
        StageTag::Background,
        include_str!("../templates/background.txt"),
    ),
    (StageTag::Initial, include_str!("../templates/initial.txt")),
    (
        StageTag::Critique,
        include_str!("../templates/critique.txt"),
    ),
    (StageTag::Improve, include_str!("../templates/improve.txt")),
    (StageTag::Intent, include_str!("../templates/intent.txt")),
    (
        StageTag::ChatAnswer,
        include_str!("../templates/chat_answer.txt"),
    ),
];

const BUILTIN_VERSION: &str = include_str!("../templates/VERSION");

/// The prompt bundle: one template per stage plus the set's version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    version: String,
    stages: HashMap<StageTag, StageTemplate>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let sources = BUILTIN
            .iter()
            .map(|(s, src)| (*s, src.to_string()))
            .collect();
        Self::from_sources(BUILTIN_VERSION, sources).expect("built-in templates parse")
    }

    pub fn from_sources(
        version: &str,
        sources: Vec<(StageTag, String)>,
    ) -> Result<Self, TemplateError> {
        let mut stages = HashMap::new();
        for (stage, src) in sources {
            stages.insert(stage, StageTemplate::parse(stage.as_str(), &src)?);
        }
        for stage in STAGES {
            if !stages.contains_key(&stage) {
                return Err(TemplateError::MissingStage(stage));
            }
        }
        Ok(Self {
            version: version.trim().to_string(),
            stages,
        })
    }

    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| TemplateError::Io(format!("{}: {e}", dir.join(name).display())))
        };
        let version = read("VERSION")?;
        let mut sources = Vec::new();
        for stage in STAGES {
            sources.push((stage, read(&format!("{}.txt", stage.as_str()))?));
        }
        Self::from_sources(&version, sources)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn stage(&self, stage: StageTag) -> Result<&StageTemplate, TemplateError> {
        self.stages
            .get(&stage)
            .ok_or(TemplateError::MissingStage(stage))
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn renders_named_placeholders() {
        let t = Template::parse("Study {{subject}} in {{ weeks }} weeks").unwrap();
        assert_eq!(
            t.placeholders().into_iter().collect::<Vec<_>>(),
            ["subject", "weeks"]
        );
        let out = t
            .render(&vars(&[("subject", "GraphQL"), ("weeks", "2")]))
            .unwrap();
        assert_eq!(out, "Study GraphQL in 2 weeks");
    }

    #[test]
    fn unbound_placeholder_is_error() {
        let t = Template::parse("{{a}} {{b}}").unwrap();
        assert_eq!(
            t.render(&vars(&[("a", "x")])).unwrap_err(),
            TemplateError::Unbound("b".into())
        );
    }

    #[test]
    fn values_are_not_rescanned() {
        let t = Template::parse("draft: {{draft}}").unwrap();
        let out = t.render(&vars(&[("draft", "{{critique}}")])).unwrap();
        assert_eq!(out, "draft: {{critique}}");
    }

    #[test]
    fn single_braces_are_literal() {
        let t = Template::parse("{\"weeks\": [{\"index\": 1}]}").unwrap();
        assert!(t.placeholders().is_empty());
    }

    #[test]
    fn malformed_placeholders() {
        assert!(matches!(
            Template::parse("{{open"),
            Err(TemplateError::Unterminated(0))
        ));
        assert!(matches!(
            Template::parse("{{bad name}}"),
            Err(TemplateError::BadName(_))
        ));
    }

    #[test]
    fn builtin_set_is_complete() {
        let set = TemplateSet::builtin();
        assert!(!set.version().is_empty());
        for stage in STAGES {
            let t = set.stage(stage).unwrap();
            assert!(
                !t.user.placeholders().is_empty(),
                "{stage} has no placeholders"
            );
        }
        let critique = set.stage(StageTag::Critique).unwrap();
        assert!(critique.user.placeholders().contains("draft"));
        let improve = set.stage(StageTag::Improve).unwrap();
        assert!(improve.user.placeholders().contains("critique"));
    }

    #[test]
    fn load_dir_matches_builtin() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("templates");
        assert_eq!(TemplateSet::load_dir(&dir).unwrap(), TemplateSet::builtin());
    }
}
