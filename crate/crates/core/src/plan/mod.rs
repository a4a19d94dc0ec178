//! Plan document schema: learner profile, weeks, days, objectives and resources.
//!
//! Everything here is an immutable value type. Structural rules live in
//! [`validate`], the canonical interchange format in [`codec`], structural
//! comparison in [`diff`] and the quality matrix in [`lint`].

pub mod codec;
pub mod diff;
pub mod lint;
pub mod markdown;
pub mod validate;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use codec::{deserialize_plan, serialize_plan, CodecError, SCHEMA_VERSION};
pub use diff::{diff_plans, ChangeRecord};
pub use lint::{lint_plan, Criterion, CriterionResult, LintConfig, Outcome, PlanQualityReport};
pub use validate::{validate_plan, Violation};

/// Days per week used by every plan generated in v1.
pub const DEFAULT_DAYS_PER_WEEK: u32 = 5;

pub const MIN_DURATION_WEEKS: u32 = 1;
pub const MAX_DURATION_WEEKS: u32 = 52;
pub const MIN_DAILY_MINUTES: u32 = 10;
pub const MAX_DAILY_MINUTES: u32 = 960;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownVariant {
    pub kind: &'static str,
    pub value: String,
}

impl fmt::Display for UnknownVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown {} `{}`", self.kind, self.value)
    }
}

impl std::error::Error for UnknownVariant {}

/// Benner's skill-acquisition scale, ordered from novice to mastery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundLevel {
    Novice,
    AdvancedBeginner,
    Competence,
    Proficiency,
    Expertise,
    Mastery,
}

impl BackgroundLevel {
    pub const ALL: [BackgroundLevel; 6] = [
        BackgroundLevel::Novice,
        BackgroundLevel::AdvancedBeginner,
        BackgroundLevel::Competence,
        BackgroundLevel::Proficiency,
        BackgroundLevel::Expertise,
        BackgroundLevel::Mastery,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BackgroundLevel::Novice => "novice",
            BackgroundLevel::AdvancedBeginner => "advanced_beginner",
            BackgroundLevel::Competence => "competence",
            BackgroundLevel::Proficiency => "proficiency",
            BackgroundLevel::Expertise => "expertise",
            BackgroundLevel::Mastery => "mastery",
        }
    }

    /// Human-readable label, e.g. "advanced beginner".
    pub fn label(self) -> &'static str {
        match self {
            BackgroundLevel::Novice => "novice",
            BackgroundLevel::AdvancedBeginner => "advanced beginner",
            BackgroundLevel::Competence => "competence",
            BackgroundLevel::Proficiency => "proficiency",
            BackgroundLevel::Expertise => "expertise",
            BackgroundLevel::Mastery => "mastery",
        }
    }

    /// Zero-based position on the scale.
    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BackgroundLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackgroundLevel {
    type Err = UnknownVariant;

    /// Accepts the snake_case tag as well as the spaced or hyphenated label.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        BackgroundLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == norm)
            .ok_or_else(|| UnknownVariant {
                kind: "background level",
                value: s.to_string(),
            })
    }
}

/// Bloom's taxonomy of cognitive objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BloomLevel {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
}

impl BloomLevel {
    pub const ALL: [BloomLevel; 6] = [
        BloomLevel::Remember,
        BloomLevel::Understand,
        BloomLevel::Apply,
        BloomLevel::Analyze,
        BloomLevel::Evaluate,
        BloomLevel::Create,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BloomLevel::Remember => "remember",
            BloomLevel::Understand => "understand",
            BloomLevel::Apply => "apply",
            BloomLevel::Analyze => "analyze",
            BloomLevel::Evaluate => "evaluate",
            BloomLevel::Create => "create",
        }
    }

    /// remember / understand
    pub fn is_foundational(self) -> bool {
        self <= BloomLevel::Understand
    }
}

impl fmt::Display for BloomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    #[default]
    Video,
}

impl MediaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Video => "video",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceStatus {
    Valid,
    /// Also the state of a resource the catalog has not confirmed yet.
    #[default]
    Invalid,
    Replaced,
}

impl ResourceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceStatus::Valid => "valid",
            ResourceStatus::Invalid => "invalid",
            ResourceStatus::Replaced => "replaced",
        }
    }

    pub fn is_usable(self) -> bool {
        matches!(self, ResourceStatus::Valid | ResourceStatus::Replaced)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlanId(pub String);

impl PlanId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlanId {
    fn from(s: &str) -> Self {
        PlanId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerProfile {
    #[serde(default)]
    pub subject: String,
    #[serde(default)]
    pub goal: String,
    pub background_level: BackgroundLevel,
    #[serde(default)]
    pub duration_weeks: u32,
    #[serde(default)]
    pub daily_minutes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_media: Option<Vec<MediaKind>>,
}

impl LearnerProfile {
    /// Field-level violations with paths relative to the profile.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.subject.trim().is_empty() {
            out.push(Violation::new("subject", "must be non-empty"));
        }
        if self.goal.trim().is_empty() {
            out.push(Violation::new("goal", "must be non-empty"));
        }
        if !(MIN_DURATION_WEEKS..=MAX_DURATION_WEEKS).contains(&self.duration_weeks) {
            out.push(Violation::new(
                "duration_weeks",
                format!(
                    "must be within {MIN_DURATION_WEEKS}..={MAX_DURATION_WEEKS}, got {}",
                    self.duration_weeks
                ),
            ));
        }
        if !(MIN_DAILY_MINUTES..=MAX_DAILY_MINUTES).contains(&self.daily_minutes) {
            out.push(Violation::new(
                "daily_minutes",
                format!(
                    "must be within {MIN_DAILY_MINUTES}..={MAX_DAILY_MINUTES}, got {}",
                    self.daily_minutes
                ),
            ));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn daily_budget_seconds(&self) -> u64 {
        u64::from(self.daily_minutes) * 60
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningObjective {
    #[serde(default)]
    pub text: String,
    pub bloom_level: BloomLevel,
}

impl LearningObjective {
    pub fn new(bloom_level: BloomLevel, text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            bloom_level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resource {
    #[serde(default)]
    pub kind: MediaKind,
    #[serde(default)]
    pub external_id: String,
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub duration_seconds: u64,
    #[serde(default)]
    pub views: u64,
    #[serde(default)]
    pub likes: u64,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub status: ResourceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DayPlan {
    #[serde(default)]
    pub index: u32,
    #[serde(default)]
    pub topic: String,
    #[serde(default)]
    pub topic_rationale: String,
    #[serde(default)]
    pub objectives: Vec<LearningObjective>,
    #[serde(default)]
    pub resources: Vec<Resource>,
    #[serde(default)]
    pub estimated_minutes: u32,
}

impl DayPlan {
    /// Sum of resource durations, rounded up to whole minutes.
    pub fn computed_minutes(&self) -> u32 {
        let secs: u64 = self.resources.iter().map(|r| r.duration_seconds).sum();
        u32::try_from(secs.div_ceil(60)).unwrap_or(u32::MAX)
    }

    pub fn recompute_minutes(&mut self) {
        self.estimated_minutes = self.computed_minutes();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeekPlan {
    #[serde(default)]
    pub index: u32,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub objectives: Vec<LearningObjective>,
    #[serde(default)]
    pub content_rationale: String,
    #[serde(default)]
    pub connections: String,
    #[serde(default)]
    pub days: Vec<DayPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyPlan {
    pub plan_id: PlanId,
    pub version: u64,
    pub profile: LearnerProfile,
    #[serde(default)]
    pub weeks: Vec<WeekPlan>,
    #[serde(default = "default_days_per_week")]
    pub days_per_week: u32,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

fn default_days_per_week() -> u32 {
    DEFAULT_DAYS_PER_WEEK
}

impl StudyPlan {
    pub fn day(&self, week_index: u32, day_index: u32) -> Option<&DayPlan> {
        self.weeks
            .iter()
            .find(|w| w.index == week_index)?
            .days
            .iter()
            .find(|d| d.index == day_index)
    }

    /// Iterates every resource with its `(week_pos, day_pos, resource_pos)`.
    pub fn resources(&self) -> impl Iterator<Item = ((usize, usize, usize), &Resource)> {
        self.weeks.iter().enumerate().flat_map(|(w, week)| {
            week.days.iter().enumerate().flat_map(move |(d, day)| {
                day.resources
                    .iter()
                    .enumerate()
                    .map(move |(r, res)| ((w, d, r), res))
            })
        })
    }

    /// Structural equality ignoring `version`, `created_at` and `updated_at`.
    pub fn same_content(&self, other: &StudyPlan) -> bool {
        self.plan_id == other.plan_id
            && self.profile == other.profile
            && self.weeks == other.weeks
            && self.days_per_week == other.days_per_week
    }
}

pub fn resource_path(week_pos: usize, day_pos: usize, res_pos: usize) -> String {
    format!("weeks[{week_pos}].days[{day_pos}].resources[{res_pos}]")
}
