use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{call, Pipeline, PipelineError};
use crate::llm::{profile, ProfileName, ProviderRequest, StageTag, TextProvider};
use crate::plan::BackgroundLevel;

/// One description per background level, in novice..mastery order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelDescriptionSet(pub BTreeMap<BackgroundLevel, String>);

impl LevelDescriptionSet {
    pub fn get(&self, level: BackgroundLevel) -> Option<&str> {
        self.0.get(&level).map(String::as_str)
    }

    pub fn levels(&self) -> Vec<BackgroundLevel> {
        self.0.keys().copied().collect()
    }
}

/// Parses a level-description answer. Returns the levels that are missing
/// or empty on failure.
pub fn parse_level_descriptions(text: &str) -> Result<LevelDescriptionSet, Vec<BackgroundLevel>> {
    let mut found = BTreeMap::new();
    let doc = text.match_indices('{').find_map(|(i, _)| {
        let probe = &text[i..];
        serde_json::Deserializer::from_str(probe)
            .into_iter::<Value>()
            .next()
            .and_then(Result::ok)
            .and_then(|v| match v {
                Value::Object(m) if m.keys().any(|k| k.parse::<BackgroundLevel>().is_ok()) => {
                    Some(m)
                }
                _ => None,
            })
    });
    if let Some(map) = doc {
        for (k, v) in map {
            if let (Ok(level), Some(desc)) = (k.parse::<BackgroundLevel>(), v.as_str()) {
                let desc = desc.trim();
                if !desc.is_empty() {
                    found.insert(level, desc.to_string());
                }
            }
        }
    }
    let missing: Vec<_> = BackgroundLevel::ALL
        .into_iter()
        .filter(|l| !found.contains_key(l))
        .collect();
    if missing.is_empty() {
        Ok(LevelDescriptionSet(found))
    } else {
        Err(missing)
    }
}

impl Pipeline {
    /// Describes all six background levels for `subject`: one call with the
    /// BACKGROUND profile, plus at most one repair call.
    pub fn describe_background_levels(
        &self,
        subject: &str,
        provider: &dyn TextProvider,
    ) -> Result<LevelDescriptionSet, PipelineError> {
        let subject = subject.trim();
        if subject.is_empty() {
            return Err(PipelineError::EmptySubject);
        }
        let mut vars = BTreeMap::new();
        vars.insert("subject", subject.to_string());
        vars.insert(
            "levels",
            BackgroundLevel::ALL
                .iter()
                .map(|l| format!("- {}", l.label()))
                .collect::<Vec<_>>()
                .join("\n"),
        );
        let (system, user) = self.templates.stage(StageTag::Background)?.render(&vars)?;
        let base_id = format!("levels-{}", crate::fingerprint::prompt_fingerprint(&user));
        let mut request = ProviderRequest {
            request_id: base_id.clone(),
            system_prompt: system,
            user_prompt: user,
            params: profile(ProfileName::Background),
            stage_tag: StageTag::Background,
        };
        let response = call(provider, &request)?;
        let missing = match parse_level_descriptions(&response.text) {
            Ok(set) => return Ok(set),
            Err(missing) => missing,
        };

        let names: Vec<_> = missing.iter().map(|l| l.as_str()).collect();
        request.request_id = format!("{base_id}-repair");
        request.user_prompt.push_str(&format!(
            "\n\nYour previous answer was missing descriptions for: {}. Return all six levels in one JSON object.",
            names.join(", ")
        ));
        let response = call(provider, &request)?;
        parse_level_descriptions(&response.text)
            .map_err(|missing| PipelineError::IncompleteLevels { missing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_snake_case_and_label_keys() {
        let text = r#"Sure! {"novice": "a", "advanced beginner": "b", "competence": "c",
            "proficiency": "d", "expertise": "e", "mastery": "f"}"#;
        let set = parse_level_descriptions(text).unwrap();
        assert_eq!(set.levels(), BackgroundLevel::ALL);
        assert_eq!(set.get(BackgroundLevel::AdvancedBeginner), Some("b"));
    }

    #[test]
    fn reports_missing_levels() {
        let text = r#"{"novice": "a", "advanced_beginner": "b", "competence": "c", "proficiency": "d", "expertise": ""}"#;
        assert_eq!(
            parse_level_descriptions(text).unwrap_err(),
            [BackgroundLevel::Expertise, BackgroundLevel::Mastery]
        );
        assert_eq!(parse_level_descriptions("no json").unwrap_err().len(), 6);
    }
}
