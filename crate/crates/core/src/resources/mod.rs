//! Video resource validation, automatic replacement and alternatives.
//!
//! Two rankings live here and are kept apart: automatic replacement orders
//! candidates by [`replacement_key`] (rating first), while the alternatives
//! panel orders by relevance ([`search_alternatives`]).

pub mod lexical;
pub mod mock;
pub mod youtube;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{resource_path, BackgroundLevel, MediaKind, Resource, ResourceStatus, StudyPlan};

pub use lexical::lexical_relevance;
pub use mock::MockCatalog;

/// Maximum number of alternatives offered for one resource.
pub const MAX_ALTERNATIVES: usize = 10;

/// Prefix marking a proficiency tag in [`CatalogRecord::topics`].
pub const LEVEL_TAG_PREFIX: &str = "level:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub external_id: String,
    pub title: String,
    pub url: String,
    pub duration_seconds: u64,
    pub views: u64,
    pub likes: u64,
    pub description: String,
    #[serde(default)]
    pub topics: Vec<String>,
    /// 0..=5
    pub rating: f64,
    pub available: bool,
}

impl CatalogRecord {
    /// Levels this record is tagged for; empty when untagged.
    pub fn level_tags(&self) -> Vec<BackgroundLevel> {
        self.topics
            .iter()
            .filter_map(|t| t.strip_prefix(LEVEL_TAG_PREFIX))
            .filter_map(|l| l.parse().ok())
            .collect()
    }

    /// Untagged records suit everyone; tagged ones suit learners within one
    /// level of any tag.
    pub fn suits_level(&self, level: BackgroundLevel) -> bool {
        let tags = self.level_tags();
        tags.is_empty() || tags.iter().any(|t| t.rank().abs_diff(level.rank()) <= 1)
    }

    pub fn to_resource(&self, status: ResourceStatus, provenance: Option<String>) -> Resource {
        Resource {
            kind: MediaKind::Video,
            external_id: self.external_id.clone(),
            url: self.url.clone(),
            title: self.title.clone(),
            duration_seconds: self.duration_seconds,
            views: self.views,
            likes: self.likes,
            description: self.description.clone(),
            status,
            provenance,
        }
    }
}

/// A search result; `score` is the provider's own relevance in 0..=1 when it
/// has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub record: CatalogRecord,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("catalog transport failure: {0}")]
    Transport(String),
    #[error("catalog returned an unusable reply: {0}")]
    Malformed(String),
}

/// A video catalog. `lookup` returns unavailable records too; `search` never
/// does.
pub trait Catalog: Send + Sync {
    /// One slot per requested id, `None` when the id is unknown.
    fn lookup(&self, ids: &[String]) -> Result<Vec<Option<CatalogRecord>>, CatalogError>;
    fn search(&self, topic: &str) -> Result<Vec<SearchHit>, CatalogError>;
}

impl<T: Catalog + ?Sized> Catalog for std::sync::Arc<T> {
    fn lookup(&self, ids: &[String]) -> Result<Vec<Option<CatalogRecord>>, CatalogError> {
        (**self).lookup(ids)
    }
    fn search(&self, topic: &str) -> Result<Vec<SearchHit>, CatalogError> {
        (**self).search(topic)
    }
}

impl<T: Catalog + ?Sized> Catalog for &T {
    fn lookup(&self, ids: &[String]) -> Result<Vec<Option<CatalogRecord>>, CatalogError> {
        (**self).lookup(ids)
    }
    fn search(&self, topic: &str) -> Result<Vec<SearchHit>, CatalogError> {
        (**self).search(topic)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResourceError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("only video resources can be validated, found {0}")]
    NotVideo(String),
    #[error("no resource `{external_id}` in week {week} day {day}")]
    NotFound {
        week: u32,
        day: u32,
        external_id: String,
    },
    #[error("catalog record `{0}` is not available")]
    Unavailable(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("plan is not valid: {0}")]
    InvalidPlan(String),
}

/// Applies a lookup result: refresh and mark valid when available,
/// otherwise mark invalid and keep the original fields.
fn apply_lookup(resource: &Resource, found: Option<&CatalogRecord>) -> Resource {
    match found {
        Some(rec) if rec.available => {
            rec.to_resource(ResourceStatus::Valid, resource.provenance.clone())
        }
        _ => Resource {
            status: ResourceStatus::Invalid,
            ..resource.clone()
        },
    }
}

pub fn validate_resource(
    resource: &Resource,
    catalog: &dyn Catalog,
) -> Result<Resource, ResourceError> {
    if resource.kind != MediaKind::Video {
        return Err(ResourceError::NotVideo(resource.kind.as_str().to_string()));
    }
    let found = catalog.lookup(std::slice::from_ref(&resource.external_id))?;
    let rec = found
        .into_iter()
        .next()
        .flatten()
        .filter(|r| r.external_id == resource.external_id);
    Ok(apply_lookup(resource, rec.as_ref()))
}

/// Sort key for automatic replacement. Ascending order is preference
/// order: rating descending, then views descending, then id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementKey {
    pub rating: f64,
    pub views: u64,
    pub external_id: String,
}

impl Eq for ReplacementKey {}

impl Ord for ReplacementKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .rating
            .total_cmp(&self.rating)
            .then_with(|| other.views.cmp(&self.views))
            .then_with(|| self.external_id.cmp(&other.external_id))
    }
}

impl PartialOrd for ReplacementKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn replacement_key(record: &CatalogRecord) -> ReplacementKey {
    ReplacementKey {
        rating: record.rating,
        views: record.views,
        external_id: record.external_id.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementRecord {
    pub path: String,
    pub week: u32,
    pub day: u32,
    pub old_external_id: String,
    pub new_external_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceFinding {
    pub path: String,
    pub external_id: String,
    pub message: String,
}

pub const NO_CANDIDATE: &str = "no qualifying candidate";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub replacements: Vec<ReplacementRecord>,
    pub findings: Vec<ResourceFinding>,
}

/// Validates every resource and replaces invalid ones, without touching
/// `version`. Returns whether the plan changed.
///
/// Invalid resources are handled in plan order. Candidates come from a
/// catalog search on the day's topic and qualify when available, within the
/// day's remaining time budget, suited to the learner's level, and not
/// already used anywhere in the plan. The best candidate by
/// [`replacement_key`] is installed with `status = replaced` and the old id
/// as provenance.
pub fn resolve_resources(
    plan: &StudyPlan,
    catalog: &dyn Catalog,
) -> Result<(StudyPlan, ResolutionReport, bool), ResourceError> {
    let mut out = plan.clone();
    let ids: Vec<String> = plan
        .resources()
        .map(|(_, r)| r.external_id.clone())
        .collect();
    let found = if ids.is_empty() {
        Vec::new()
    } else {
        catalog.lookup(&ids)?
    };
    let by_id: HashMap<&str, &CatalogRecord> = found
        .iter()
        .flatten()
        .map(|r| (r.external_id.as_str(), r))
        .collect();

    for week in &mut out.weeks {
        for day in &mut week.days {
            for res in &mut day.resources {
                if res.kind == MediaKind::Video {
                    *res = apply_lookup(res, by_id.get(res.external_id.as_str()).copied());
                }
            }
        }
    }

    let mut used: HashSet<String> = out
        .resources()
        .map(|(_, r)| r.external_id.clone())
        .collect();
    let mut searches: HashMap<String, Vec<SearchHit>> = HashMap::new();
    let mut report = ResolutionReport::default();
    let budget_total = out.profile.daily_budget_seconds();
    let level = out.profile.background_level;

    for (w, week) in out.weeks.iter_mut().enumerate() {
        for (d, day) in week.days.iter_mut().enumerate() {
            for r in 0..day.resources.len() {
                if day.resources[r].status != ResourceStatus::Invalid {
                    continue;
                }
                let others: u64 = day
                    .resources
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != r)
                    .map(|(_, x)| x.duration_seconds)
                    .sum();
                let budget = budget_total.saturating_sub(others);
                if !searches.contains_key(&day.topic) {
                    searches.insert(day.topic.clone(), catalog.search(&day.topic)?);
                }
                let best = searches[&day.topic]
                    .iter()
                    .map(|h| &h.record)
                    .filter(|rec| {
                        rec.available
                            && rec.duration_seconds <= budget
                            && rec.suits_level(level)
                            && !used.contains(&rec.external_id)
                    })
                    .min_by_key(|rec| replacement_key(rec));
                let old_id = day.resources[r].external_id.clone();
                let path = resource_path(w, d, r);
                match best {
                    Some(rec) => {
                        used.insert(rec.external_id.clone());
                        report.replacements.push(ReplacementRecord {
                            path,
                            week: week.index,
                            day: day.index,
                            old_external_id: old_id.clone(),
                            new_external_id: rec.external_id.clone(),
                        });
                        day.resources[r] = rec.to_resource(ResourceStatus::Replaced, Some(old_id));
                    }
                    None => report.findings.push(ResourceFinding {
                        path,
                        external_id: old_id,
                        message: NO_CANDIDATE.into(),
                    }),
                }
            }
            // Refreshed metadata and replacements both change durations.
            day.recompute_minutes();
        }
    }
    let changed = !plan.same_content(&out);
    Ok((out, report, changed))
}

/// [`resolve_resources`] plus a version bump when anything changed. On a
/// catalog failure nothing is returned and the caller keeps its plan.
pub fn auto_replace(
    plan: &StudyPlan,
    catalog: &dyn Catalog,
) -> Result<(StudyPlan, ResolutionReport), ResourceError> {
    let violations = crate::plan::validate_plan(plan);
    if let Some(v) = violations.first() {
        return Err(ResourceError::InvalidPlan(v.to_string()));
    }
    let (mut out, report, changed) = resolve_resources(plan, catalog)?;
    if changed {
        out.version = plan.version + 1;
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternativeQuery {
    pub topic: String,
    pub background_level: BackgroundLevel,
    pub max_duration_seconds: u64,
    pub limit: usize,
}

impl AlternativeQuery {
    pub fn check(&self) -> Result<(), ResourceError> {
        if self.topic.trim().is_empty() {
            return Err(ResourceError::InvalidQuery(
                "topic must be non-empty".into(),
            ));
        }
        if self.max_duration_seconds == 0 {
            return Err(ResourceError::InvalidQuery(
                "max_duration_seconds must be positive".into(),
            ));
        }
        if !(1..=MAX_ALTERNATIVES).contains(&self.limit) {
            return Err(ResourceError::InvalidQuery(format!(
                "limit must be within 1..={MAX_ALTERNATIVES}, got {}",
                self.limit
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub record: CatalogRecord,
    pub relevance: f64,
    pub rank: u32,
}

/// Up to `query.limit` available records, most relevant first. Relevance is
/// the catalog's score when it gives one, else [`lexical_relevance`]; ties
/// go to more views, then to the smaller id.
pub fn search_alternatives(
    query: &AlternativeQuery,
    catalog: &dyn Catalog,
) -> Result<Vec<RankedCandidate>, ResourceError> {
    query.check()?;
    let mut scored: Vec<(f64, CatalogRecord)> = catalog
        .search(&query.topic)?
        .into_iter()
        .filter(|h| {
            h.record.available
                && h.record.duration_seconds <= query.max_duration_seconds
                && h.record.suits_level(query.background_level)
        })
        .map(|h| {
            let rel = h
                .score
                .unwrap_or_else(|| lexical_relevance(&query.topic, &h.record))
                .clamp(0.0, 1.0);
            (rel, h.record)
        })
        .collect();
    scored.sort_by(|(ra, a), (rb, b)| {
        rb.total_cmp(ra)
            .then_with(|| b.views.cmp(&a.views))
            .then_with(|| a.external_id.cmp(&b.external_id))
    });
    Ok(scored
        .into_iter()
        .take(query.limit)
        .enumerate()
        .map(|(i, (relevance, record))| RankedCandidate {
            record,
            relevance,
            rank: i as u32 + 1,
        })
        .collect())
}

/// Swaps one resource of a day for `new_record` (the "Select" action).
///
/// Indices are 1-based week/day indices. The new resource is `valid` with
/// the old id as provenance; the day's minutes are recomputed and the
/// version bumped.
pub fn replace_resource(
    plan: &StudyPlan,
    week_index: u32,
    day_index: u32,
    old_external_id: &str,
    new_record: &CatalogRecord,
) -> Result<StudyPlan, ResourceError> {
    let not_found = || ResourceError::NotFound {
        week: week_index,
        day: day_index,
        external_id: old_external_id.to_string(),
    };
    if !new_record.available {
        return Err(ResourceError::Unavailable(new_record.external_id.clone()));
    }
    let mut out = plan.clone();
    let day = out
        .weeks
        .iter_mut()
        .find(|w| w.index == week_index)
        .and_then(|w| w.days.iter_mut().find(|d| d.index == day_index))
        .ok_or_else(not_found)?;
    let slot = day
        .resources
        .iter_mut()
        .find(|r| r.external_id == old_external_id)
        .ok_or_else(not_found)?;
    *slot = new_record.to_resource(ResourceStatus::Valid, Some(old_external_id.to_string()));
    day.recompute_minutes();
    out.version = plan.version + 1;
    Ok(out)
}
