//! YouTube Data API v3 catalog.
//!
//! `lookup` batches ids into `videos.list` calls of at most 50 ids each.
//! A video is available when it is public and embeddable. `search` runs
//! `search.list` and then fetches metadata for the hits; its score follows
//! the platform's result order.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;

use super::{Catalog, CatalogError, CatalogRecord, SearchHit};
use crate::http::{HttpRequest, HttpTransport, Method, ReqwestTransport};

pub const API_KEY_ENV: &str = "PLANGLOW_CATALOG_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://www.googleapis.com/youtube/v3";
/// `videos.list` accepts at most this many ids per call.
pub const MAX_IDS_PER_CALL: usize = 50;

pub struct YoutubeCatalog {
    base_url: String,
    api_key: String,
    transport: Arc<dyn HttpTransport>,
    search_results: usize,
}

impl YoutubeCatalog {
    pub fn new(api_key: impl Into<String>) -> Result<Self, CatalogError> {
        let transport = ReqwestTransport::new(Duration::from_secs(30))
            .map_err(|e| CatalogError::Transport(e.to_string()))?;
        Ok(Self::with_transport(
            DEFAULT_BASE_URL,
            api_key,
            Arc::new(transport),
        ))
    }

    pub fn from_env() -> Result<Self, CatalogError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| CatalogError::Transport(format!("{API_KEY_ENV} is not set")))?;
        Self::new(key)
    }

    pub fn with_transport(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        transport: Arc<dyn HttpTransport>,
    ) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            transport,
            search_results: 25,
        }
    }

    fn get(&self, endpoint: &str, params: &[(&str, &str)]) -> Result<String, CatalogError> {
        let mut url = url::Url::parse(&format!("{}/{endpoint}", self.base_url))
            .map_err(|e| CatalogError::Transport(e.to_string()))?;
        {
            let mut q = url.query_pairs_mut();
            for (k, v) in params {
                q.append_pair(k, v);
            }
            q.append_pair("key", &self.api_key);
        }
        let reply = self
            .transport
            .send(&HttpRequest {
                method: Method::Get,
                url: url.to_string(),
                headers: vec![("accept".into(), "application/json".into())],
                body: None,
            })
            .map_err(|e| CatalogError::Transport(e.to_string()))?;
        if !(200..300).contains(&reply.status) {
            return Err(CatalogError::Transport(format!(
                "HTTP {} from {endpoint}",
                reply.status
            )));
        }
        Ok(reply.body)
    }
}

impl Catalog for YoutubeCatalog {
    fn lookup(&self, ids: &[String]) -> Result<Vec<Option<CatalogRecord>>, CatalogError> {
        let mut found: HashMap<String, CatalogRecord> = HashMap::new();
        for chunk in ids.chunks(MAX_IDS_PER_CALL) {
            let joined = chunk.join(",");
            let body = self.get(
                "videos",
                &[
                    ("part", "snippet,contentDetails,statistics,status"),
                    ("id", &joined),
                ],
            )?;
            for rec in parse_videos_list(&body)? {
                found.insert(rec.external_id.clone(), rec);
            }
        }
        Ok(ids.iter().map(|id| found.get(id).cloned()).collect())
    }

    fn search(&self, topic: &str) -> Result<Vec<SearchHit>, CatalogError> {
        let max = self.search_results.to_string();
        let body = self.get(
            "search",
            &[
                ("part", "id"),
                ("type", "video"),
                ("maxResults", &max),
                ("q", topic),
            ],
        )?;
        let ids = parse_search_ids(&body)?;
        let n = ids.len();
        let records = self.lookup(&ids)?;
        Ok(records
            .into_iter()
            .enumerate()
            .filter_map(|(i, rec)| {
                let rec = rec.filter(|r| r.available)?;
                Some(SearchHit {
                    record: rec,
                    score: Some((n - i) as f64 / n as f64),
                })
            })
            .collect())
    }
}

/// Like percentage capped at 5, so a 5% like ratio or better rates 5.
pub fn derive_rating(likes: u64, views: u64) -> f64 {
    if views == 0 {
        return 0.0;
    }
    (100.0 * likes as f64 / views as f64).clamp(0.0, 5.0)
}

/// Parses ISO-8601 durations such as `PT1H2M3S` or `P1DT5M`.
pub fn parse_iso8601_duration(s: &str) -> Option<u64> {
    let rest = s.strip_prefix('P')?;
    let (date, time) = match rest.split_once('T') {
        Some((d, t)) => (d, t),
        None => (rest, ""),
    };
    let mut total = 0u64;
    let mut take = |part: &str, units: &[(char, u64)]| -> Option<()> {
        let mut num = String::new();
        for c in part.chars() {
            if c.is_ascii_digit() {
                num.push(c);
            } else {
                let mult = units.iter().find(|(u, _)| *u == c)?.1;
                total += num.parse::<u64>().ok()? * mult;
                num.clear();
            }
        }
        num.is_empty().then_some(())
    };
    take(date, &[('W', 604_800), ('D', 86_400)])?;
    take(time, &[('H', 3600), ('M', 60), ('S', 1)])?;
    Some(total)
}

fn num(v: &Value) -> u64 {
    match v {
        Value::String(s) => s.parse().unwrap_or(0),
        Value::Number(n) => n.as_u64().unwrap_or(0),
        _ => 0,
    }
}

pub fn parse_videos_list(body: &str) -> Result<Vec<CatalogRecord>, CatalogError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| CatalogError::Malformed(e.to_string()))?;
    let items = v
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| CatalogError::Malformed("videos.list reply has no items".into()))?;
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let Some(id) = item.get("id").and_then(Value::as_str) else {
            continue;
        };
        let snippet = &item["snippet"];
        let stats = &item["statistics"];
        let status = &item["status"];
        let views = num(&stats["viewCount"]);
        let likes = num(&stats["likeCount"]);
        let mut topics: Vec<String> = snippet["tags"]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(Value::as_str)
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default();
        topics.sort();
        out.push(CatalogRecord {
            external_id: id.to_string(),
            title: snippet["title"].as_str().unwrap_or_default().to_string(),
            url: format!("https://www.youtube.com/watch?v={id}"),
            duration_seconds: item["contentDetails"]["duration"]
                .as_str()
                .and_then(parse_iso8601_duration)
                .unwrap_or(0),
            views,
            likes,
            description: snippet["description"]
                .as_str()
                .unwrap_or_default()
                .to_string(),
            topics,
            rating: derive_rating(likes, views),
            available: status["privacyStatus"].as_str() == Some("public")
                && status["embeddable"].as_bool().unwrap_or(false),
        });
    }
    Ok(out)
}

pub fn parse_search_ids(body: &str) -> Result<Vec<String>, CatalogError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| CatalogError::Malformed(e.to_string()))?;
    let items = v
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| CatalogError::Malformed("search.list reply has no items".into()))?;
    Ok(items
        .iter()
        .filter_map(|i| i.pointer("/id/videoId").and_then(Value::as_str))
        .map(str::to_string)
        .collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use serde_json::json;

    use super::*;
    use crate::http::{HttpReply, TransportError};

    #[test]
    fn durations() {
        assert_eq!(parse_iso8601_duration("PT1H2M3S"), Some(3723));
        assert_eq!(parse_iso8601_duration("PT15M"), Some(900));
        assert_eq!(parse_iso8601_duration("PT45S"), Some(45));
        assert_eq!(parse_iso8601_duration("P1DT1S"), Some(86_401));
        assert_eq!(parse_iso8601_duration("P0D"), Some(0));
        assert_eq!(parse_iso8601_duration("1H"), None);
        assert_eq!(parse_iso8601_duration("PT5X"), None);
        assert_eq!(parse_iso8601_duration("PT5"), None);
    }

    #[test]
    fn ratings() {
        assert_eq!(derive_rating(0, 0), 0.0);
        assert_eq!(derive_rating(40, 1000), 4.0);
        assert_eq!(derive_rating(900, 1000), 5.0);
    }

    fn video(id: &str, public: bool) -> Value {
        json!({
            "id": id,
            "snippet": {"title": format!("Video {id}"), "description": "desc", "tags": ["graphql"]},
            "contentDetails": {"duration": "PT10M5S"},
            "statistics": {"viewCount": "2000", "likeCount": "50"},
            "status": {"privacyStatus": if public { "public" } else { "private" }, "embeddable": true}
        })
    }

    #[test]
    fn parses_videos_list() {
        let body = json!({"items": [video("abc", true), video("def", false)]}).to_string();
        let recs = parse_videos_list(&body).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].duration_seconds, 605);
        assert_eq!(recs[0].views, 2000);
        assert_eq!(recs[0].rating, 2.5);
        assert!(recs[0].available);
        assert!(!recs[1].available);
        assert_eq!(recs[0].url, "https://www.youtube.com/watch?v=abc");
    }

    struct Fake {
        calls: Mutex<Vec<String>>,
    }

    impl HttpTransport for Fake {
        fn send(&self, req: &HttpRequest) -> Result<HttpReply, TransportError> {
            self.calls.lock().unwrap().push(req.url.clone());
            let url = url::Url::parse(&req.url).unwrap();
            let q: HashMap<_, _> = url.query_pairs().into_owned().collect();
            let body = if url.path().ends_with("/videos") {
                let items: Vec<_> = q["id"]
                    .split(',')
                    .filter(|id| !id.starts_with("gone"))
                    .map(|id| video(id, true))
                    .collect();
                json!({ "items": items })
            } else {
                json!({"items": [{"id": {"videoId": "s1"}}, {"id": {"videoId": "gone1"}}, {"id": {"videoId": "s2"}}]})
            };
            Ok(HttpReply {
                status: 200,
                body: body.to_string(),
            })
        }
    }

    fn catalog() -> (YoutubeCatalog, Arc<Fake>) {
        let fake = Arc::new(Fake {
            calls: Mutex::new(vec![]),
        });
        (
            YoutubeCatalog::with_transport("https://yt.example/v3", "key", fake.clone()),
            fake,
        )
    }

    #[test]
    fn lookup_batches_fifty_ids_per_call() {
        let (cat, fake) = catalog();
        let ids: Vec<String> = (0..120).map(|i| format!("v{i:03}")).collect();
        let out = cat.lookup(&ids).unwrap();
        assert_eq!(out.len(), 120);
        assert!(out.iter().all(Option::is_some));
        let calls = fake.calls.lock().unwrap();
        assert_eq!(calls.len(), 3);
        assert!(calls.iter().all(|u| u.contains("key=key")));
    }

    #[test]
    fn lookup_keeps_request_order_and_misses() {
        let (cat, _) = catalog();
        let out = cat
            .lookup(&["b".into(), "gone9".into(), "a".into()])
            .unwrap();
        assert_eq!(out[0].as_ref().unwrap().external_id, "b");
        assert!(out[1].is_none());
        assert_eq!(out[2].as_ref().unwrap().external_id, "a");
    }

    #[test]
    fn search_scores_follow_platform_order() {
        let (cat, _) = catalog();
        let hits = cat.search("graphql").unwrap();
        let ids: Vec<_> = hits.iter().map(|h| h.record.external_id.as_str()).collect();
        assert_eq!(ids, ["s1", "s2"]);
        assert_eq!(hits[0].score, Some(1.0));
        assert_eq!(hits[1].score, Some(1.0 / 3.0));
    }
}
