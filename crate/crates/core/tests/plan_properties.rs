use planglow_core::plan::codec::plan_document;
use planglow_core::plan::{
    deserialize_plan, diff_plans, lint_plan, serialize_plan, validate_plan, BackgroundLevel,
    CodecError, LintConfig,
};
use planglow_core::testkit::{plan_strategy, sample_plan, single_field_mutations};
use proptest::prelude::*;

proptest! {
    #[test]
    fn round_trip_is_byte_identical(plan in plan_strategy()) {
        prop_assert!(validate_plan(&plan).is_empty());
        let doc = serialize_plan(&plan).unwrap();
        let back = deserialize_plan(&doc).unwrap();
        prop_assert_eq!(&back, &plan);
        prop_assert_eq!(serialize_plan(&back).unwrap(), doc);
    }

    #[test]
    fn each_mutation_yields_one_violation_at_its_path(plan in plan_strategy()) {
        for (path, mutated) in single_field_mutations(&plan) {
            let v = validate_plan(&mutated);
            prop_assert_eq!(v.len(), 1, "{}: {:?}", path, v);
            prop_assert_eq!(&v[0].path, &path);
            match deserialize_plan(&plan_document(&mutated)) {
                Err(CodecError::Schema { path: p, .. }) => prop_assert_eq!(p, path),
                other => prop_assert!(false, "{}: {:?}", path, other),
            }
        }
    }

    #[test]
    fn lint_is_pure(plan in plan_strategy()) {
        let config = LintConfig::default();
        prop_assert_eq!(lint_plan(&plan, &config).unwrap(), lint_plan(&plan, &config).unwrap());
    }

    #[test]
    fn diff_counts_changed_leaves(plan in plan_strategy(), edits in proptest::sample::subsequence(vec![0usize, 1, 2, 3, 4, 5], 0..=6)) {
        prop_assert!(diff_plans(&plan, &plan).is_empty());
        let mut other = plan.clone();
        other.version += 3;
        other.updated_at += chrono::Duration::days(1);
        prop_assert!(diff_plans(&plan, &other).is_empty());
        for e in &edits {
            match e {
                0 => other.profile.goal.push_str(" faster"),
                1 => other.weeks[0].title.push('!'),
                2 => other.weeks[0].days[0].topic.push('?'),
                3 => other.weeks[0].connections.push_str(" More."),
                4 => other.weeks[0].objectives[0].text.push('.'),
                _ => other.profile.background_level = if plan.profile.background_level == BackgroundLevel::Mastery {
                    BackgroundLevel::Novice
                } else {
                    BackgroundLevel::Mastery
                },
            }
        }
        prop_assert_eq!(diff_plans(&plan, &other).len(), edits.len());
    }
}

#[test]
fn deserialize_reports_first_offending_path() {
    let plan = sample_plan(2);
    for (path, mutated) in single_field_mutations(&plan) {
        let err = deserialize_plan(&plan_document(&mutated)).unwrap_err();
        assert_eq!(err.path(), Some(path.as_str()));
    }
}

#[test]
fn background_levels_are_totally_ordered() {
    let all = BackgroundLevel::ALL;
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate() {
            assert_eq!(a.cmp(b), i.cmp(&j));
        }
    }
}
