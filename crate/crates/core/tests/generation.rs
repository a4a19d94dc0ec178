use planglow_core::llm::{
    load_transcript, profile, record_transcript, ProfileName, RecordingProvider, StageTag,
};
use planglow_core::pipeline::PipelineError;
use planglow_core::plan::{lint_plan, serialize_plan, validate_plan, BackgroundLevel, LintConfig};
use planglow_core::testkit::{
    self, fixed_pipeline, graphql_profile, profile_strategy, CountingProvider, FakeModel,
    GOLDEN_PLAN_FIXTURE, TRANSCRIPT_FIXTURE,
};
use proptest::prelude::*;

fn shipped(name: &str) -> String {
    std::fs::read_to_string(testkit::fixture_path(name)).unwrap()
}

#[test]
fn shipped_fixtures_are_current() {
    for (name, contents) in testkit::fixture_files() {
        assert_eq!(
            shipped(name),
            contents,
            "{name} is stale; run the make_fixtures example"
        );
    }
}

#[test]
fn golden_path_from_shipped_transcript() {
    let scripted = load_transcript(&shipped(TRANSCRIPT_FIXTURE)).unwrap();
    let a = testkit::golden_plan(&scripted);
    let b = testkit::golden_plan(&scripted);
    assert_eq!(a.weeks.len(), 2);
    assert!(a.weeks.iter().all(|w| w.days.len() == 5));
    assert!(validate_plan(&a).is_empty());
    assert_eq!(lint_plan(&a, &LintConfig::default()).unwrap().score, 5);
    let doc = serialize_plan(&a).unwrap();
    assert_eq!(doc, serialize_plan(&b).unwrap());
    assert_eq!(doc + "\n", shipped(GOLDEN_PLAN_FIXTURE));
}

#[test]
fn shipped_transcript_covers_levels() {
    let scripted = load_transcript(&shipped(TRANSCRIPT_FIXTURE)).unwrap();
    let set = fixed_pipeline()
        .describe_background_levels("GraphQL", &scripted)
        .unwrap();
    assert_eq!(set.levels(), BackgroundLevel::ALL);
}

#[test]
fn background_calls_are_bounded() {
    let model = FakeModel {
        garble_always: vec![StageTag::Background],
        ..FakeModel::default()
    };
    let counter = CountingProvider::new(model);
    let err = fixed_pipeline()
        .describe_background_levels("GraphQL", &counter)
        .unwrap_err();
    assert_eq!(
        err,
        PipelineError::IncompleteLevels {
            missing: BackgroundLevel::ALL.to_vec()
        }
    );
    assert_eq!(counter.calls(), 2);
    assert!(counter
        .requests()
        .iter()
        .all(|r| r.params == profile(ProfileName::Background)));
}

#[test]
fn plan_calls_are_bounded() {
    let model = FakeModel {
        garble_first: vec![StageTag::Initial, StageTag::Improve],
        ..FakeModel::default()
    };
    let counter = CountingProvider::new(model);
    let (_, trace) = fixed_pipeline()
        .generate_plan(&graphql_profile(), &counter)
        .unwrap();
    assert_eq!(counter.calls(), 5);
    assert_eq!(trace.call_count(), 5);
    assert_eq!(
        trace.stage_tags(),
        [StageTag::Initial, StageTag::Critique, StageTag::Improve]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_profiles_follow_stage_discipline(learner in profile_strategy()) {
        let recorder = RecordingProvider::new(FakeModel::default());
        let pipeline = fixed_pipeline();
        pipeline.generate_plan(&learner, &recorder).unwrap();
        let scripted = load_transcript(&record_transcript(&recorder.transcript().unwrap())).unwrap();
        let (plan, trace) = pipeline.generate_plan(&learner, &scripted).unwrap();
        prop_assert_eq!(trace.stage_tags(), vec![StageTag::Initial, StageTag::Critique, StageTag::Improve]);
        for s in &trace.stages {
            prop_assert_eq!(s.request.params, profile(ProfileName::Plan));
        }
        prop_assert!(validate_plan(&plan).is_empty());
        let (again, trace2) = pipeline.generate_plan(&learner, &scripted).unwrap();
        prop_assert_eq!(serialize_plan(&plan).unwrap(), serialize_plan(&again).unwrap());
        prop_assert_eq!(trace.without_timing(), trace2.without_timing());
    }
}
