//! Deterministic stand-ins for tests: sample plans, a rule-based fake model,
//! a call-counting provider wrapper and proptest strategies.

use std::sync::Mutex;

use proptest::prelude::*;

use crate::clock::FixedClock;
use crate::fingerprint::fingerprint;
use crate::llm::{
    FinishReason, ProviderError, ProviderRequest, ProviderResponse, StageTag, TextProvider,
};
use crate::pipeline::{plan_id_for, weeks_document};
use crate::plan::{
    BackgroundLevel, BloomLevel, DayPlan, LearnerProfile, LearningObjective, MediaKind, Resource,
    ResourceStatus, StudyPlan, WeekPlan, DEFAULT_DAYS_PER_WEEK,
};

pub fn graphql_profile() -> LearnerProfile {
    LearnerProfile {
        subject: "GraphQL".into(),
        goal: "deploy a website".into(),
        background_level: BackgroundLevel::Novice,
        duration_weeks: 2,
        daily_minutes: 60,
        preferred_media: None,
    }
}

const THEMES: [&str; 10] = [
    "fundamentals",
    "core concepts",
    "hands-on practice",
    "common patterns",
    "tooling",
    "testing",
    "debugging",
    "performance",
    "security",
    "deployment",
];

/// How far along the fake pipeline a plan body is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Draft {
    /// Initial-stage output: no evaluation objectives or progress checks.
    Initial,
    /// Improve-stage output with the critique addressed.
    Improved,
}

/// Resource id the fake model recommends for a given day.
pub fn fake_video_id(subject: &str, week: u32, day: u32) -> String {
    fingerprint(&format!("{}#{week}#{day}", subject.trim().to_lowercase()))[..11].to_string()
}

pub fn day_topic(subject: &str, week: u32, day: u32) -> String {
    let n = (week - 1) * DEFAULT_DAYS_PER_WEEK + (day - 1);
    format!("{} {}", subject.trim(), THEMES[n as usize % THEMES.len()])
}

/// Seconds of video the fake model assigns per day: three quarters of the
/// budget, capped at 25 minutes.
pub fn fake_video_seconds(profile: &LearnerProfile) -> u64 {
    (profile.daily_budget_seconds() * 3 / 4).min(25 * 60)
}

/// Week bodies for `profile`, as the fake model writes them.
pub fn plan_weeks(profile: &LearnerProfile, draft: Draft) -> Vec<WeekPlan> {
    let subject = profile.subject.trim();
    let goal = profile.goal.trim();
    let level = profile.background_level.label();
    (1..=profile.duration_weeks)
        .map(|w| {
            let mut objectives = vec![
                LearningObjective::new(
                    BloomLevel::Understand,
                    format!("Explain the week {w} ideas of {subject}"),
                ),
                LearningObjective::new(
                    BloomLevel::Apply,
                    format!("Use {subject} toward the goal: {goal}"),
                ),
            ];
            let mut rationale =
                format!("Week {w} moves a {level} learner one step closer to: {goal}.");
            if draft == Draft::Improved {
                objectives.push(LearningObjective::new(
                    BloomLevel::Evaluate,
                    format!("Judge your week {w} progress against the goal"),
                ));
                rationale.push_str(" Finish with a self-check quiz to track your progress.");
            }
            let connections = if w == 1 {
                format!("Links {subject} to what you already know as a {level} learner.")
            } else {
                format!("Builds on the schema formed in week {}.", w - 1)
            };
            WeekPlan {
                index: w,
                title: format!("Week {w}: {}", THEMES[(w as usize - 1) % THEMES.len()]),
                objectives,
                content_rationale: rationale,
                connections,
                days: (1..=DEFAULT_DAYS_PER_WEEK)
                    .map(|d| {
                        let topic = day_topic(subject, w, d);
                        let bloom = if d <= 2 {
                            BloomLevel::Remember
                        } else {
                            BloomLevel::Apply
                        };
                        let id = fake_video_id(subject, w, d);
                        let mut day = DayPlan {
                            index: d,
                            topic: topic.clone(),
                            topic_rationale: format!(
                                "{topic} is needed before the next step toward {goal}."
                            ),
                            objectives: vec![LearningObjective::new(
                                bloom,
                                format!("Work through {topic}"),
                            )],
                            resources: vec![Resource {
                                kind: MediaKind::Video,
                                url: format!("https://www.youtube.com/watch?v={id}"),
                                external_id: id,
                                title: format!("{topic} explained"),
                                duration_seconds: fake_video_seconds(profile),
                                views: 0,
                                likes: 0,
                                description: format!("A walkthrough of {topic}."),
                                status: ResourceStatus::Invalid,
                                provenance: None,
                            }],
                            estimated_minutes: 0,
                        };
                        day.recompute_minutes();
                        day
                    })
                    .collect(),
            }
        })
        .collect()
}

/// A fully valid plan for `profile` with every resource confirmed.
pub fn plan_for(profile: &LearnerProfile) -> StudyPlan {
    let mut weeks = plan_weeks(profile, Draft::Improved);
    for r in weeks
        .iter_mut()
        .flat_map(|w| w.days.iter_mut())
        .flat_map(|d| d.resources.iter_mut())
    {
        r.status = ResourceStatus::Valid;
        r.views = 1000;
        r.likes = 40;
    }
    let at = FixedClock::epoch().0;
    StudyPlan {
        plan_id: plan_id_for(profile, 0),
        version: 1,
        profile: profile.clone(),
        weeks,
        days_per_week: DEFAULT_DAYS_PER_WEEK,
        created_at: at,
        updated_at: at,
    }
}

/// The GraphQL plan stretched to `weeks` weeks. Valid, lint score 5.
pub fn sample_plan(weeks: u32) -> StudyPlan {
    plan_for(&LearnerProfile {
        duration_weeks: weeks,
        ..graphql_profile()
    })
}

const PROFILE_MARKER: &str = "Learner profile (JSON):";
const GARBLED: &str = "Sorry, I could not put the plan together this time.";

/// Rule-based stand-in for a hosted model. It reads the learner profile back
/// out of the prompt and answers every stage deterministically.
#[derive(Debug, Clone, Default)]
pub struct FakeModel {
    /// Stages whose first attempt is garbled; the repair attempt succeeds.
    pub garble_first: Vec<StageTag>,
    /// Stages that never produce a usable answer.
    pub garble_always: Vec<StageTag>,
    /// Level left out of the level-description answer.
    pub drop_level: Option<BackgroundLevel>,
    /// Makes intent answers unusable so the lexicon fallback decides.
    pub garble_intent: bool,
}

fn section<'a>(prompt: &'a str, header: &str) -> &'a str {
    prompt
        .split_once(header)
        .map(|(_, rest)| rest.trim())
        .unwrap_or("")
}

fn is_repair(prompt: &str) -> bool {
    prompt.contains("Your previous answer")
}

impl FakeModel {
    fn answer(&self, req: &ProviderRequest) -> Result<String, ProviderError> {
        let prompt = &req.user_prompt;
        let stage = req.stage_tag;
        if self.garble_always.contains(&stage)
            || (self.garble_first.contains(&stage) && !is_repair(prompt))
        {
            return Ok(GARBLED.into());
        }
        let text = match stage {
            StageTag::Background => {
                let subject = section(prompt, "Subject:")
                    .lines()
                    .next()
                    .unwrap_or("")
                    .trim();
                let map: serde_json::Map<_, _> = BackgroundLevel::ALL
                    .into_iter()
                    .filter(|l| Some(*l) != self.drop_level)
                    .map(|l| {
                        (
                            l.as_str().to_string(),
                            serde_json::Value::from(format!(
                                "At the {} level of {subject} you can ...",
                                l.label()
                            )),
                        )
                    })
                    .collect();
                serde_json::Value::Object(map).to_string()
            }
            StageTag::Initial | StageTag::Improve => {
                let profile = read_profile(prompt)?;
                let draft = if stage == StageTag::Initial {
                    Draft::Initial
                } else {
                    Draft::Improved
                };
                format!(
                    "Here is the plan.\n\n```json\n{}\n```\n",
                    weeks_document(&plan_weeks(&profile, draft))
                )
            }
            StageTag::Critique => {
                let profile = read_profile(prompt)?;
                format!(
                    "1. Objectives stop at apply; add an evaluate objective each week so the {} learner can judge progress.\n\
                     2. Add a self-check quiz to each week's rationale.",
                    profile.background_level.label()
                )
            }
            StageTag::Intent => {
                if self.garble_intent {
                    "Hmm, that depends.".into()
                } else {
                    let message = section(prompt, "Message:");
                    if crate::revision::looks_like_edit(message) {
                        "edit"
                    } else {
                        "question"
                    }
                    .into()
                }
            }
            StageTag::ChatAnswer => {
                let question = section(prompt, "Question:");
                format!("Good question. The plan covers this: {question}")
            }
        };
        Ok(text)
    }
}

fn read_profile(prompt: &str) -> Result<LearnerProfile, ProviderError> {
    let line = section(prompt, PROFILE_MARKER).lines().next().unwrap_or("");
    serde_json::from_str(line)
        .map_err(|e| ProviderError::Malformed(format!("fake model found no profile: {e}")))
}

impl TextProvider for FakeModel {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        request.check()?;
        Ok(ProviderResponse {
            text: self.answer(request)?,
            finish_reason: FinishReason::Complete,
            latency_ms: 0,
        })
    }
}

/// Records every request passed to the wrapped provider.
pub struct CountingProvider<P> {
    inner: P,
    seen: Mutex<Vec<ProviderRequest>>,
}

impl<P: TextProvider> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<ProviderRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl<P: TextProvider> TextProvider for CountingProvider<P> {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        self.seen.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}

pub fn background_level_strategy() -> impl Strategy<Value = BackgroundLevel> {
    proptest::sample::select(BackgroundLevel::ALL.to_vec())
}

pub fn bloom_strategy() -> impl Strategy<Value = BloomLevel> {
    proptest::sample::select(BloomLevel::ALL.to_vec())
}

/// Any profile that passes field validation.
pub fn profile_strategy() -> impl Strategy<Value = LearnerProfile> {
    profile_with_weeks(1..=52u32)
}

pub fn profile_with_weeks(
    weeks: std::ops::RangeInclusive<u32>,
) -> impl Strategy<Value = LearnerProfile> {
    (
        "[A-Z][a-z]{2,9}( [A-Za-z][a-z]{1,8}){0,2}",
        "[a-z]{3,9}( [a-z]{2,9}){1,4}",
        background_level_strategy(),
        weeks,
        10..=960u32,
    )
        .prop_map(|(subject, goal, level, weeks, minutes)| LearnerProfile {
            subject,
            goal,
            background_level: level,
            duration_weeks: weeks,
            daily_minutes: minutes,
            preferred_media: None,
        })
}

#[derive(Debug, Clone)]
struct DayVariant {
    bloom: BloomLevel,
    durations: Vec<u64>,
    status: ResourceStatus,
    title: String,
}

fn day_variant() -> impl Strategy<Value = DayVariant> {
    (
        bloom_strategy(),
        proptest::collection::vec(1..=5400u64, 0..=3),
        proptest::sample::select(vec![
            ResourceStatus::Valid,
            ResourceStatus::Invalid,
            ResourceStatus::Replaced,
        ]),
        "[A-Za-z][A-Za-z0-9 ,'\"\\\\é-]{0,30}",
    )
        .prop_map(|(bloom, durations, status, title)| DayVariant {
            bloom,
            durations,
            status,
            title,
        })
}

/// Structurally valid plans with varied text, objectives and resources.
pub fn plan_strategy() -> impl Strategy<Value = StudyPlan> {
    (
        profile_with_weeks(1..=3),
        proptest::collection::vec(day_variant(), 1..=15),
        1..=20u64,
    )
        .prop_map(|(profile, variants, version)| {
            let mut plan = plan_for(&profile);
            plan.version = version;
            let mut n = 0usize;
            for week in &mut plan.weeks {
                for day in &mut week.days {
                    let v = &variants[n % variants.len()];
                    n += 1;
                    day.topic = format!("{} {}", day.topic, v.title);
                    day.objectives[0].bloom_level = v.bloom;
                    day.resources = v
                        .durations
                        .iter()
                        .enumerate()
                        .map(|(i, secs)| {
                            let id =
                                format!("{}-{i}", fake_video_id(&day.topic, week.index, day.index));
                            Resource {
                                kind: MediaKind::Video,
                                url: format!("https://www.youtube.com/watch?v={id}"),
                                external_id: id,
                                title: v.title.clone(),
                                duration_seconds: *secs,
                                views: secs * 7,
                                likes: *secs,
                                description: String::new(),
                                status: v.status,
                                provenance: (v.status == ResourceStatus::Replaced)
                                    .then(|| "old-id".to_string()),
                            }
                        })
                        .collect();
                    day.recompute_minutes();
                }
            }
            plan
        })
}

/// Directory holding the shipped fixture files.
pub const FIXTURES_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(FIXTURES_DIR).join(name)
}

pub const CATALOG_FIXTURE: &str = "mock_catalog.json";
pub const TRANSCRIPT_FIXTURE: &str = "graphql_transcript.json";
pub const GOLDEN_PLAN_FIXTURE: &str = "golden_plan.json";

pub const SAMPLE_QUESTION: &str = "Why is schema design taught before resolvers?";
pub const SAMPLE_EDIT_REQUEST: &str = "Change week 2 to focus on mutations";

/// Deterministic spread in `0..n` derived from a label.
fn spread(label: &str, n: u64) -> u64 {
    u64::from_str_radix(&fingerprint(label)[..8], 16).unwrap() % n
}

fn catalog_record(
    id: String,
    title: String,
    secs: u64,
    views: u64,
    topics: Vec<String>,
    available: bool,
) -> crate::resources::CatalogRecord {
    let likes = views * (20 + spread(&id, 30)) / 1000;
    crate::resources::CatalogRecord {
        url: format!("https://www.youtube.com/watch?v={id}"),
        description: format!("{title}. Worked examples and a short recap."),
        rating: crate::resources::youtube::derive_rating(likes, views),
        external_id: id,
        title,
        duration_seconds: secs,
        views,
        likes,
        topics,
        available,
    }
}

/// The 50-record mock catalog: the ten videos the golden plan recommends,
/// three unavailable GraphQL videos, and 37 candidates across themes,
/// levels and unrelated subjects.
pub fn mock_catalog_records() -> Vec<crate::resources::CatalogRecord> {
    let profile = graphql_profile();
    let mut out = Vec::with_capacity(50);
    for w in 1..=2 {
        for d in 1..=DEFAULT_DAYS_PER_WEEK {
            let id = fake_video_id(&profile.subject, w, d);
            let secs = 900 + spread(&id, 600);
            let views = 5_000 + spread(&format!("{id}views"), 200_000);
            out.push(catalog_record(
                id,
                format!("{} explained", day_topic(&profile.subject, w, d)),
                secs,
                views,
                vec!["graphql".into()],
                true,
            ));
        }
    }
    for (i, theme) in THEMES.iter().take(3).enumerate() {
        let id = format!("gone{i:07}");
        out.push(catalog_record(
            id,
            format!("GraphQL {theme} (removed)"),
            600,
            1000,
            vec![],
            false,
        ));
    }
    let levels = [
        "level:novice",
        "level:advanced_beginner",
        "level:competence",
        "level:expertise",
        "level:mastery",
    ];
    for i in 0..27u64 {
        let theme = THEMES[i as usize % THEMES.len()];
        let id = format!("gql{i:08}");
        let secs = 240 + spread(&id, 3000);
        let views = 200 + spread(&format!("{id}views"), 500_000);
        let mut topics = vec!["graphql".to_string()];
        if i % 3 == 0 {
            topics.push(levels[(i / 3) as usize % levels.len()].to_string());
        }
        out.push(catalog_record(
            id,
            format!("GraphQL {theme}: part {}", i / 10 + 1),
            secs,
            views,
            topics,
            true,
        ));
    }
    let others = [
        "Rust ownership",
        "Python decorators",
        "SQL joins",
        "Docker volumes",
        "CSS grid",
    ];
    for i in 0..10u64 {
        let subject = others[i as usize % others.len()];
        let id = format!("oth{i:08}");
        let secs = 300 + spread(&id, 1500);
        out.push(catalog_record(
            id,
            format!("{subject} {}", THEMES[i as usize]),
            secs,
            1000 + i * 1234,
            vec![],
            true,
        ));
    }
    out
}

pub fn mock_catalog() -> crate::resources::MockCatalog {
    crate::resources::MockCatalog::new(mock_catalog_records())
}

/// The test-mode pipeline: builtin templates and the fixed clock.
pub fn fixed_pipeline() -> crate::pipeline::Pipeline {
    crate::pipeline::Pipeline::new(
        crate::template::TemplateSet::builtin(),
        std::sync::Arc::new(FixedClock::epoch()),
    )
}

/// Golden GraphQL plan: generated, then resolved against the mock catalog.
pub fn golden_plan(provider: &dyn TextProvider) -> StudyPlan {
    let pipeline = fixed_pipeline();
    let (plan, _) = pipeline
        .generate_plan(&graphql_profile(), provider)
        .expect("golden generation");
    let (plan, _, _) =
        crate::resources::resolve_resources(&plan, &mock_catalog()).expect("golden resolution");
    plan
}

/// Every exchange the shipped GraphQL transcript covers: level
/// descriptions, plan creation, a question turn, a chat edit and an inline
/// duration edit.
pub fn graphql_transcript_entries() -> Vec<crate::llm::FixtureEntry> {
    let recorder = crate::llm::RecordingProvider::new(FakeModel::default());
    let pipeline = fixed_pipeline();
    let catalog = mock_catalog();
    pipeline
        .describe_background_levels("GraphQL", &recorder)
        .expect("levels");
    let plan = golden_plan(&recorder);
    pipeline
        .handle_chat(&plan, SAMPLE_QUESTION, &recorder, &catalog)
        .expect("question");
    pipeline
        .handle_chat(&plan, SAMPLE_EDIT_REQUEST, &recorder, &catalog)
        .expect("chat edit");
    pipeline
        .apply_inline_edit(
            &plan,
            &crate::revision::InlineEdit::DurationWeeks(3),
            &recorder,
            &catalog,
        )
        .expect("inline edit");
    recorder.transcript().expect("consistent transcript")
}

/// Contents of every shipped fixture file, keyed by file name.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    let entries = graphql_transcript_entries();
    let scripted =
        crate::llm::ScriptedProvider::from_entries(entries.clone()).expect("unique fixtures");
    let golden =
        crate::plan::serialize_plan(&golden_plan(&scripted)).expect("golden plan is valid");
    let mut catalog =
        serde_json::to_string_pretty(&mock_catalog_records()).expect("catalog serializes");
    catalog.push('\n');
    vec![
        (CATALOG_FIXTURE, catalog),
        (TRANSCRIPT_FIXTURE, crate::llm::record_transcript(&entries)),
        (GOLDEN_PLAN_FIXTURE, golden + "\n"),
    ]
}

/// Single-field mutations of a valid plan, each paired with the one path
/// that should be reported. Resource mutations need a resource in the plan.
pub fn single_field_mutations(plan: &StudyPlan) -> Vec<(String, StudyPlan)> {
    let mut out = Vec::new();
    let mut push = |path: String, f: &dyn Fn(&mut StudyPlan)| {
        let mut p = plan.clone();
        f(&mut p);
        out.push((path, p));
    };
    push("plan_id".into(), &|p| p.plan_id.0.clear());
    push("version".into(), &|p| p.version = 0);
    push("profile.subject".into(), &|p| {
        p.profile.subject = "   ".into()
    });
    push("profile.goal".into(), &|p| p.profile.goal.clear());
    push("profile.daily_minutes".into(), &|p| {
        p.profile.daily_minutes = 5
    });
    push("profile.daily_minutes".into(), &|p| {
        p.profile.daily_minutes = 2000
    });
    push("weeks".into(), &|p| {
        let mut extra = p.weeks.last().unwrap().clone();
        extra.index += 1;
        p.weeks.push(extra);
    });
    let w = plan.weeks.len() - 1;
    let wp = format!("weeks[{w}]");
    push(format!("{wp}.index"), &|p| p.weeks[w].index = 99);
    push(format!("{wp}.objectives"), &|p| {
        p.weeks[w].objectives.clear()
    });
    push(format!("{wp}.objectives[0].text"), &|p| {
        p.weeks[w].objectives[0].text = " ".into()
    });
    push(format!("{wp}.content_rationale"), &|p| {
        p.weeks[w].content_rationale.clear()
    });
    push(format!("{wp}.connections"), &|p| {
        p.weeks[w].connections = "\n".into()
    });
    push(format!("{wp}.days"), &|p| {
        p.weeks[w].days.pop();
    });
    let d = plan.weeks[w].days.len() - 1;
    let dp = format!("{wp}.days[{d}]");
    push(format!("{dp}.index"), &|p| p.weeks[w].days[d].index = 0);
    push(format!("{dp}.objectives"), &|p| {
        p.weeks[w].days[d].objectives.clear()
    });
    push(format!("{dp}.objectives[0].text"), &|p| {
        p.weeks[w].days[d].objectives[0].text.clear()
    });
    push(format!("{dp}.estimated_minutes"), &|p| {
        p.weeks[w].days[d].estimated_minutes += 1
    });
    if let Some(((rw, rd, rr), _)) = plan.resources().next() {
        let rp = crate::plan::resource_path(rw, rd, rr);
        push(format!("{rp}.external_id"), &|p| {
            p.weeks[rw].days[rd].resources[rr].external_id.clear()
        });
        push(format!("{rp}.url"), &|p| {
            p.weeks[rw].days[rd].resources[rr].url = "watch?v=abc".into()
        });
        push(format!("{rp}.provenance"), &|p| {
            let r = &mut p.weeks[rw].days[rd].resources[rr];
            r.status = ResourceStatus::Replaced;
            r.provenance = None;
        });
    }
    out
}

/// Brute-force reference implementations for the resource rankings.
pub mod oracle {
    use std::collections::HashSet;

    use crate::plan::{BackgroundLevel, ResourceStatus, StudyPlan};
    use crate::resources::{lexical_relevance, CatalogRecord};

    pub fn level_ok(r: &CatalogRecord, level: BackgroundLevel) -> bool {
        let tags: Vec<BackgroundLevel> = r
            .topics
            .iter()
            .filter_map(|t| t.strip_prefix("level:"))
            .filter_map(|t| t.parse().ok())
            .collect();
        tags.is_empty() || tags.iter().any(|t| (*t as i64 - level as i64).abs() <= 1)
    }

    fn beats(a: &CatalogRecord, b: &CatalogRecord) -> bool {
        if a.rating != b.rating {
            return a.rating > b.rating;
        }
        if a.views != b.views {
            return a.views > b.views;
        }
        a.external_id < b.external_id
    }

    /// Exhaustive argmax over every qualifying record.
    pub fn best_candidate<'a>(
        records: &'a [CatalogRecord],
        topic: &str,
        budget: u64,
        level: BackgroundLevel,
        used: &HashSet<String>,
    ) -> Option<&'a CatalogRecord> {
        let mut best: Option<&CatalogRecord> = None;
        for r in records {
            if !r.available
                || lexical_relevance(topic, r) <= 0.0
                || r.duration_seconds > budget
                || !level_ok(r, level)
                || used.contains(&r.external_id)
            {
                continue;
            }
            if best.is_none_or(|b| beats(r, b)) {
                best = Some(r);
            }
        }
        best
    }

    /// Expected outcome of automatic replacement: for each resource that is
    /// invalid after lookup, in plan order, its path and the id installed
    /// (`None` when nothing qualifies).
    pub fn expected_replacements(
        plan: &StudyPlan,
        records: &[CatalogRecord],
    ) -> Vec<(String, Option<String>)> {
        let mut p = plan.clone();
        for day in p.weeks.iter_mut().flat_map(|w| w.days.iter_mut()) {
            for res in &mut day.resources {
                match records.iter().find(|r| r.external_id == res.external_id) {
                    Some(r) if r.available => {
                        res.duration_seconds = r.duration_seconds;
                        res.status = ResourceStatus::Valid;
                    }
                    _ => res.status = ResourceStatus::Invalid,
                }
            }
        }
        let mut used: HashSet<String> = p.resources().map(|(_, r)| r.external_id.clone()).collect();
        let budget_total = u64::from(p.profile.daily_minutes) * 60;
        let level = p.profile.background_level;
        let mut out = Vec::new();
        for (w, week) in p.weeks.iter_mut().enumerate() {
            for (d, day) in week.days.iter_mut().enumerate() {
                for r in 0..day.resources.len() {
                    if day.resources[r].status != ResourceStatus::Invalid {
                        continue;
                    }
                    let mut others = 0;
                    for (i, x) in day.resources.iter().enumerate() {
                        if i != r {
                            others += x.duration_seconds;
                        }
                    }
                    let budget = budget_total.saturating_sub(others);
                    let pick = best_candidate(records, &day.topic, budget, level, &used);
                    let path = format!("weeks[{w}].days[{d}].resources[{r}]");
                    match pick {
                        Some(rec) => {
                            used.insert(rec.external_id.clone());
                            day.resources[r].duration_seconds = rec.duration_seconds;
                            day.resources[r].status = ResourceStatus::Replaced;
                            out.push((path, Some(rec.external_id.clone())));
                        }
                        None => out.push((path, None)),
                    }
                }
            }
        }
        out
    }

    /// Ids the alternatives panel should show, in order.
    pub fn expected_alternatives(
        records: &[CatalogRecord],
        topic: &str,
        level: BackgroundLevel,
        max_duration_seconds: u64,
        limit: usize,
    ) -> Vec<String> {
        let mut rows: Vec<(f64, u64, String)> = records
            .iter()
            .filter(|r| {
                r.available && r.duration_seconds <= max_duration_seconds && level_ok(r, level)
            })
            .map(|r| (lexical_relevance(topic, r), r.views, r.external_id.clone()))
            .filter(|(rel, _, _)| *rel > 0.0)
            .collect();
        // Insertion sort keeps this independent of the library's comparator.
        for i in 1..rows.len() {
            let mut j = i;
            while j > 0 && {
                let (a, b) = (&rows[j - 1], &rows[j]);
                b.0 > a.0 || (b.0 == a.0 && (b.1 > a.1 || (b.1 == a.1 && b.2 < a.2)))
            } {
                rows.swap(j - 1, j);
                j -= 1;
            }
        }
        rows.into_iter().take(limit).map(|r| r.2).collect()
    }
}
