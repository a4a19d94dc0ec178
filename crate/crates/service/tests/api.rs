mod common;

use std::sync::Arc;

use axum::http::{Method, StatusCode};
use common::*;
use planglow_core::egress;
use planglow_core::llm::StageTag;
use planglow_core::plan::{deserialize_plan, diff_plans, resource_path, validate_plan};
use planglow_core::testkit::{
    graphql_profile, GOLDEN_PLAN_FIXTURE, SAMPLE_EDIT_REQUEST, SAMPLE_QUESTION,
};
use planglow_service::events::SessionSummary;
use serde_json::{json, Value};

fn golden() -> String {
    shipped(GOLDEN_PLAN_FIXTURE).trim_end().to_string()
}

fn profile_json() -> Value {
    serde_json::to_value(graphql_profile()).unwrap()
}

async fn create(app: &axum::Router) -> (String, String) {
    let r = post(app, "/v1/plans", profile_json()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    let id = r.json()["plan_id"].as_str().unwrap().to_string();
    (id, r.body)
}

async fn summary(app: &axum::Router, session: &str) -> SessionSummary {
    let r = get(app, &format!("/v1/sessions/{session}/summary")).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    serde_json::from_str(&r.body).unwrap()
}

#[tokio::test]
async fn create_returns_golden_plan() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let r = post(&app, "/v1/plans", profile_json()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    assert_eq!(r.body, golden());
    let id = r.json()["plan_id"].as_str().unwrap().to_string();
    assert_eq!(r.headers["location"], format!("/v1/plans/{id}").as_str());
    let trace_id = r.headers["x-planglow-trace-id"]
        .to_str()
        .unwrap()
        .to_string();

    assert_eq!(get(&app, &format!("/v1/plans/{id}")).await.body, golden());
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/versions/1")).await.body,
        golden()
    );
    let trace = get(&app, &format!("/v1/plans/{id}/versions/1/trace"))
        .await
        .json();
    assert_eq!(trace["trace_id"], trace_id.as_str());
    let stages: Vec<_> = trace["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["request"]["stage_tag"].clone())
        .collect();
    assert_eq!(
        stages,
        [json!("initial"), json!("critique"), json!("improve")]
    );

    let versions = get(&app, &format!("/v1/plans/{id}/versions")).await.json();
    assert_eq!(versions["head"], 1);
    assert_eq!(
        versions["versions"],
        json!([{"version": 1, "has_trace": true}])
    );

    let lint = get(&app, &format!("/v1/plans/{id}/lint")).await.json();
    assert_eq!(lint["report"]["score"], 5);
    assert_eq!(egress::blocked_attempts(), 0);
}

#[tokio::test]
async fn same_profile_twice_gets_a_new_id() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let (a, _) = create(&app).await;
    let (b, body) = create(&app).await;
    assert_ne!(a, b);
    assert_eq!(deserialize_plan(&body).unwrap().version, 1);
}

#[tokio::test]
async fn validation_and_lookup_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));

    let mut bad = profile_json();
    bad["duration_weeks"] = json!(0);
    bad["subject"] = json!(" ");
    let r = post(&app, "/v1/plans", bad).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let paths: Vec<_> = r.json()["error"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["path"].clone())
        .collect();
    assert_eq!(paths, [json!("subject"), json!("duration_weeks")]);

    let r = post(
        &app,
        "/v1/plans",
        json!({"subject": "x", "background_level": "guru"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"]["code"], "invalid_request");

    for uri in [
        "/v1/plans/plan-nope",
        "/v1/plans/plan-nope/versions",
        "/v1/plans/plan-nope/lint",
        "/v1/nowhere",
    ] {
        let r = get(&app, uri).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert!(r.json()["error"]["message"].is_string());
    }
    let (id, _) = create(&app).await;
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/versions/7"))
            .await
            .status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/versions/x"))
            .await
            .status,
        StatusCode::BAD_REQUEST
    );

    let r = post(
        &app,
        &format!("/v1/plans/{id}/edits"),
        json!({"expected_version": 1, "field": "daily_minutes", "new_value": 5}),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"]["violations"][0]["path"], "daily_minutes");

    let r = call(
        &app,
        Method::GET,
        "/v1/levels?subject=x",
        None,
        Some("bad session!"),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn inline_edit_bumps_version_and_keeps_history() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let (id, v1) = create(&app).await;
    let r = post(
        &app,
        &format!("/v1/plans/{id}/edits"),
        json!({"expected_version": 1, "field": "duration_weeks", "new_value": 3}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let plan = deserialize_plan(&r.body).unwrap();
    assert_eq!(plan.version, 2);
    assert_eq!(plan.weeks.len(), 3);
    assert_eq!(plan.plan_id.as_str(), id);
    assert!(validate_plan(&plan).is_empty());
    assert!(r.headers.contains_key("x-planglow-trace-id"));

    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/versions/1")).await.body,
        v1
    );
    assert_eq!(get(&app, &format!("/v1/plans/{id}")).await.body, r.body);

    let stale = post(
        &app,
        &format!("/v1/plans/{id}/edits"),
        json!({"expected_version": 1, "field": "duration_weeks", "new_value": 3}),
    )
    .await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    assert_eq!(stale.json()["error"]["current_version"], 2);
}

#[tokio::test]
async fn concurrent_edits_one_wins() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let (id, _) = create(&app).await;
    let uri = format!("/v1/plans/{id}/edits");
    let body = json!({"expected_version": 1, "field": "duration_weeks", "new_value": 3});
    let (a, b) = tokio::join!(post(&app, &uri, body.clone()), post(&app, &uri, body));
    let mut statuses = [a.status, b.status];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    let versions = get(&app, &format!("/v1/plans/{id}/versions")).await.json();
    assert_eq!(versions["head"], 2);
    assert_eq!(summary(&app, "anonymous").await.inline_edit, 1);
}

#[tokio::test]
async fn chat_routes_questions_and_edits() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let (id, v1) = create(&app).await;
    let uri = format!("/v1/plans/{id}/chat");

    let q = post(&app, &uri, json!({"message": SAMPLE_QUESTION}))
        .await
        .json();
    assert_eq!(q["intent"], "question");
    assert_eq!(q["version"], 1);
    assert!(q["plan"].is_null());
    assert!(q["reply"].as_str().unwrap().contains(SAMPLE_QUESTION));

    let e = post(
        &app,
        &uri,
        json!({"message": SAMPLE_EDIT_REQUEST, "expected_version": 1}),
    )
    .await;
    assert_eq!(e.status, StatusCode::OK, "{}", e.body);
    let e = e.json();
    assert_eq!(e["intent"], "edit");
    assert_eq!(e["version"], 2);
    assert_eq!(e["plan"]["version"], 2);
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/versions/1")).await.body,
        v1
    );

    let stale = post(
        &app,
        &uri,
        json!({"message": SAMPLE_EDIT_REQUEST, "expected_version": 1}),
    )
    .await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    let empty = post(&app, &uri, json!({"message": "   "})).await;
    assert_eq!(empty.status, StatusCode::BAD_REQUEST);

    let s = summary(&app, "anonymous").await;
    assert_eq!(
        (s.chat_message, s.edits_applied, s.plans_created),
        (2, 1, 1)
    );
}

#[tokio::test]
async fn fixture_gap_leaves_plan_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let provider = Arc::new(GappableProvider::new(shipped_transcript()));
    let app = app(&state_with(dir.path(), provider.clone()));
    let (id, v1) = create(&app).await;
    for stage in [StageTag::Initial, StageTag::Critique, StageTag::Improve] {
        provider.open_gap(stage);
        let r = post(
            &app,
            &format!("/v1/plans/{id}/edits"),
            json!({"expected_version": 1, "field": "duration_weeks", "new_value": 3}),
        )
        .await;
        assert_eq!(r.status, StatusCode::BAD_GATEWAY, "{}", r.body);
        assert_eq!(r.json()["error"]["stage"], stage.as_str());
        assert_eq!(get(&app, &format!("/v1/plans/{id}")).await.body, v1);
    }
    provider.close_gap();
    let r = post(
        &app,
        &format!("/v1/plans/{id}/edits"),
        json!({"expected_version": 1, "field": "duration_weeks", "new_value": 3}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    let s = summary(&app, "anonymous").await;
    assert_eq!(s.inline_edit, 1);
}

#[tokio::test]
async fn alternatives_and_replacement() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let (id, v1) = create(&app).await;
    let before = deserialize_plan(&v1).unwrap();
    let old = before.weeks[0].days[0].resources[0].external_id.clone();

    let r = get(
        &app,
        &format!("/v1/plans/{id}/alternatives?week=1&day=1&limit=10&resource={old}"),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let alts = r.json();
    let cands = alts["candidates"].as_array().unwrap();
    assert!(!cands.is_empty() && cands.len() <= 10);
    for (i, c) in cands.iter().enumerate() {
        assert_eq!(c["rank"], i as u64 + 1);
        assert_eq!(c["record"]["available"], true);
        assert!(
            c["record"]["duration_seconds"].as_u64().unwrap()
                <= alts["max_duration_seconds"].as_u64().unwrap()
        );
    }
    let pick = cands
        .iter()
        .map(|c| c["record"]["external_id"].as_str().unwrap())
        .find(|x| *x != old)
        .unwrap()
        .to_string();

    assert_eq!(
        get(
            &app,
            &format!("/v1/plans/{id}/alternatives?week=1&day=1&limit=11")
        )
        .await
        .status,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/alternatives?week=9&day=1"))
            .await
            .status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/alternatives?week=1"))
            .await
            .status,
        StatusCode::BAD_REQUEST
    );

    let uri = format!("/v1/plans/{id}/resources/replace");
    let body = json!({"expected_version": 1, "week": 1, "day": 1, "old_external_id": old, "new_external_id": pick});
    let r = post(&app, &uri, body.clone()).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let after = deserialize_plan(&r.body).unwrap();
    assert_eq!(after.version, 2);
    let changes = diff_plans(&before, &after);
    let paths: Vec<_> = changes.iter().map(|c| c.path.as_str()).collect();
    assert!(paths.contains(&resource_path(0, 0, 0).as_str()));
    assert!(paths.iter().all(|p| p.starts_with("weeks[0].days[0]")));
    assert_eq!(
        after.weeks[0].days[0].resources[0].provenance.as_deref(),
        Some(old.as_str())
    );

    assert_eq!(post(&app, &uri, body).await.status, StatusCode::CONFLICT);
    let unknown = json!({"expected_version": 2, "week": 1, "day": 1, "old_external_id": pick, "new_external_id": "nope"});
    assert_eq!(
        post(&app, &uri, unknown).await.status,
        StatusCode::BAD_REQUEST
    );
    let gone = json!({"expected_version": 2, "week": 1, "day": 1, "old_external_id": pick, "new_external_id": "gone0000000"});
    assert_eq!(post(&app, &uri, gone).await.status, StatusCode::BAD_REQUEST);
    let missing = json!({"expected_version": 2, "week": 1, "day": 1, "old_external_id": "zzz", "new_external_id": old});
    assert_eq!(
        post(&app, &uri, missing).await.status,
        StatusCode::NOT_FOUND
    );

    let versions = get(&app, &format!("/v1/plans/{id}/versions")).await.json();
    assert_eq!(
        versions["versions"][1],
        json!({"version": 2, "has_trace": false})
    );
    assert_eq!(
        get(&app, &format!("/v1/plans/{id}/versions/2/trace"))
            .await
            .status,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn levels_in_benner_order() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let r = call(
        &app,
        Method::GET,
        "/v1/levels?subject=GraphQL",
        None,
        Some("s1"),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let levels: Vec<_> = r.json()["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["level"].clone())
        .collect();
    assert_eq!(
        levels,
        [
            json!("novice"),
            json!("advanced_beginner"),
            json!("competence"),
            json!("proficiency"),
            json!("expertise"),
            json!("mastery")
        ]
    );
    assert_eq!(
        get(&app, "/v1/levels").await.status,
        StatusCode::BAD_REQUEST
    );
    let missing = get(&app, "/v1/levels?subject=Haskell").await;
    assert_eq!(missing.status, StatusCode::BAD_GATEWAY);
    assert_eq!(missing.json()["error"]["stage"], "background");
    assert_eq!(summary(&app, "s1").await.viewed_level_descriptions, 1);
}

#[tokio::test]
async fn client_events_and_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&shipped_state(dir.path()));
    let r = call(&app, Method::POST, "/v1/sessions", None, None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let session = r.json()["session_id"].as_str().unwrap().to_string();
    let other = call(&app, Method::POST, "/v1/sessions", None, None)
        .await
        .json();
    assert_ne!(other["session_id"], session.as_str());
    assert_eq!(summary(&app, &session).await, SessionSummary::default());
    assert_eq!(
        get(&app, "/v1/sessions/nobody/summary").await.status,
        StatusCode::NOT_FOUND
    );

    let (id, _) = create(&app).await;
    let ev = |t: &str, extra: Value| {
        let mut b = json!({"event_type": t, "plan_id": id});
        if let Value::Object(m) = extra {
            b.as_object_mut().unwrap().extend(m);
        }
        b
    };
    for week in [1, 2, 1] {
        let r = call(
            &app,
            Method::POST,
            "/v1/events",
            Some(ev(
                "viewed_week_explanation",
                json!({"payload": {"week": week}}),
            )),
            Some(&session),
        )
        .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
        assert_eq!(r.json()["session_id"], session.as_str());
    }
    let r = call(
        &app,
        Method::POST,
        "/v1/events",
        Some(ev("viewed_day_explanation", json!({}))),
        Some(&session),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);

    let rejected = [
        ev("submitted_form", json!({})),
        ev("clicked_logo", json!({})),
        ev(
            "viewed_day_explanation",
            json!({"payload": {"deep": {"a": 1}}}),
        ),
        json!({"event_type": "viewed_day_explanation", "plan_id": "plan-nope"}),
    ];
    for body in rejected {
        let r = call(
            &app,
            Method::POST,
            "/v1/events",
            Some(body.clone()),
            Some(&session),
        )
        .await;
        assert_ne!(r.status, StatusCode::CREATED, "{body}");
    }
    let s = summary(&app, &session).await;
    assert_eq!(
        (
            s.viewed_week_explanation,
            s.viewed_day_explanation,
            s.submitted_form
        ),
        (3, 1, 0)
    );
}

#[tokio::test]
async fn every_mutation_appends_one_event_and_one_version() {
    let dir = tempfile::tempdir().unwrap();
    let state = shipped_state(dir.path());
    let app = app(&state);
    let session = Some("walk");
    let events = || state.events().session("walk").unwrap().len();

    let r = call(
        &app,
        Method::POST,
        "/v1/plans",
        Some(profile_json()),
        session,
    )
    .await;
    let id = r.json()["plan_id"].as_str().unwrap().to_string();
    assert_eq!((events(), state.store().head(&id).unwrap()), (1, Some(1)));

    let r = call(
        &app,
        Method::POST,
        &format!("/v1/plans/{id}/chat"),
        Some(json!({"message": SAMPLE_EDIT_REQUEST})),
        session,
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!((events(), state.store().head(&id).unwrap()), (2, Some(2)));

    let plan = deserialize_plan(&get(&app, &format!("/v1/plans/{id}")).await.body).unwrap();
    let old = plan.weeks[1].days[4].resources[0].external_id.clone();
    let r = call(
        &app,
        Method::GET,
        &format!("/v1/plans/{id}/alternatives?week=2&day=5&resource={old}"),
        None,
        session,
    )
    .await;
    let pick = r.json()["candidates"][0]["record"]["external_id"]
        .as_str()
        .unwrap()
        .to_string();
    assert_eq!((events(), state.store().head(&id).unwrap()), (3, Some(2)));

    let body = json!({"expected_version": 2, "week": 2, "day": 5, "old_external_id": old, "new_external_id": pick});
    let r = call(
        &app,
        Method::POST,
        &format!("/v1/plans/{id}/resources/replace"),
        Some(body),
        session,
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!((events(), state.store().head(&id).unwrap()), (4, Some(3)));

    let s = summary(&app, "walk").await;
    assert_eq!(
        (
            s.plans_created,
            s.edits_applied,
            s.opened_alternatives,
            s.selected_alternative
        ),
        (1, 2, 1, 1)
    );
}
