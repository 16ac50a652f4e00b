//! Local stand-ins for Mastodon servers, a chat-completions backend and an
//! embeddings backend, plus a deterministic fixture world. Used by the
//! tests and handy for dry runs of the whole pipeline.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use rulecheck_core::ingest::mastodon::TIMELINE_PAGE_LIMIT;
use rulecheck_core::ingest::OFFICIAL_SOURCE_URL;
use rulecheck_core::moderator::{ChatRequest, LIKERT_LABELS};

use crate::api::spawn;

pub const HCI_SOCIAL_RULES: [&str; 14] = [
    "Treat everyone with respect and consideration; under the umbrella of respect, we expect all participants to be mindful of their speech and behaviors.",
    "Communicate openly and thoughtfully with others and be considerate of the multitude of views and opinions that may be different than your own.",
    "Be respectful and mindful in your critique of ideas.",
    "Respect others' identities in full, e.g., using their specified pronouns.",
    "Respect others' right to engage or disengage in conversation.",
    "Accept responsibility to take action, as bystanders and advocates, to call out and report misbehavior and to hold each other accountable to these rules.",
    "Do not engage in harassment in any form, including comments that target other participants based on characteristics such as gender, gender identity and expression, sexual orientation, race, ethnicity, age, ability, status, physical appearance, body size, or religion.",
    "Do not engage in unwelcome personal attention, particularly when one individual has authority over the other.",
    "Do not engage in persistent, unwanted attempts to contact another group member, particularly when one individual has authority over the other.",
    "Do not deliberately intimidate, stalk, or threaten violence.",
    "Do not engage in sustained disruption of online discussions.",
    "Do not advocate for, or encourage, any of the sanctioned behavior described above.",
    "Do not use this server if you are younger than 18 years old.",
    "Do not post content unlawful in the United States or the State of New Jersey.",
];

/// One fake server. `info: None` makes the v2 instance endpoint 404.
#[derive(Debug, Clone)]
pub struct MockInstance {
    pub info: Option<Value>,
    pub extended_description: Option<String>,
    pub rules: Vec<String>,
    /// Status JSON objects, newest first.
    pub statuses: Vec<Value>,
    /// Timeline requests after this many answer 503.
    pub fail_timeline_after: Option<usize>,
}

impl MockInstance {
    pub fn new(source_url: &str, active_users: u64, description: &str) -> Self {
        Self {
            info: Some(json!({
                "domain": "",
                "source_url": source_url,
                "description": description,
                "usage": { "users": { "active_month": active_users } },
            })),
            extended_description: None,
            rules: Vec::new(),
            statuses: Vec::new(),
            fail_timeline_after: None,
        }
    }

    pub fn legacy() -> Self {
        Self { info: None, extended_description: None, rules: Vec::new(), statuses: Vec::new(), fail_timeline_after: None }
    }
}

#[derive(Default)]
struct MastodonState {
    instances: BTreeMap<String, MockInstance>,
    timeline_calls: Mutex<HashMap<String, usize>>,
    requests: Arc<AtomicUsize>,
}

pub struct MockServer {
    pub addr: SocketAddr,
    calls: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn local() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 0))
}

fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(json!({ "error": "Record not found" }))).into_response()
}

async fn instance_v2(State(s): State<Arc<MastodonState>>, Path(domain): Path<String>) -> Response {
    s.requests.fetch_add(1, Ordering::SeqCst);
    match s.instances.get(&domain).and_then(|i| i.info.clone()) {
        Some(mut info) => {
            info["domain"] = json!(domain);
            Json(info).into_response()
        }
        None => not_found(),
    }
}

async fn extended(State(s): State<Arc<MastodonState>>, Path(domain): Path<String>) -> Response {
    s.requests.fetch_add(1, Ordering::SeqCst);
    match s.instances.get(&domain).and_then(|i| i.extended_description.clone()) {
        Some(html) => Json(json!({ "updated_at": "2024-01-01T00:00:00Z", "content": html })).into_response(),
        None => not_found(),
    }
}

async fn rules(State(s): State<Arc<MastodonState>>, Path(domain): Path<String>) -> Response {
    s.requests.fetch_add(1, Ordering::SeqCst);
    match s.instances.get(&domain) {
        Some(i) if i.info.is_some() => {
            let rules: Vec<Value> = i
                .rules
                .iter()
                .enumerate()
                .map(|(n, text)| json!({ "id": (n + 1).to_string(), "text": text, "hint": "" }))
                .collect();
            Json(rules).into_response()
        }
        _ => not_found(),
    }
}

fn id_less(a: &str, b: &str) -> bool {
    (a.len(), a) < (b.len(), b)
}

async fn timeline(
    State(s): State<Arc<MastodonState>>,
    Path(domain): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    s.requests.fetch_add(1, Ordering::SeqCst);
    let Some(instance) = s.instances.get(&domain).filter(|i| i.info.is_some()) else {
        return not_found();
    };
    if q.get("local").map(String::as_str) != Some("true") {
        return (StatusCode::BAD_REQUEST, "only local timelines are served").into_response();
    }
    let served = {
        let mut calls = s.timeline_calls.lock().unwrap();
        let n = calls.entry(domain.clone()).or_default();
        *n += 1;
        *n - 1
    };
    if instance.fail_timeline_after.is_some_and(|limit| served >= limit) {
        return (StatusCode::SERVICE_UNAVAILABLE, "try later").into_response();
    }
    let limit = q.get("limit").and_then(|l| l.parse().ok()).unwrap_or(20usize).min(TIMELINE_PAGE_LIMIT);
    let page: Vec<&Value> = instance
        .statuses
        .iter()
        .filter(|st| match q.get("max_id") {
            Some(max) => id_less(st["id"].as_str().unwrap_or(""), max),
            None => true,
        })
        .take(limit)
        .collect();
    Json(page).into_response()
}

/// Serves `/{domain}/api/...` for every instance in `instances`.
pub fn spawn_mastodon(instances: BTreeMap<String, MockInstance>) -> std::io::Result<MockServer> {
    let state = Arc::new(MastodonState { instances, ..Default::default() });
    let router = Router::new()
        .route("/{domain}/api/v2/instance", get(instance_v2))
        .route("/{domain}/api/v1/instance/extended_description", get(extended))
        .route("/{domain}/api/v1/instance/rules", get(rules))
        .route("/{domain}/api/v1/timelines/public", get(timeline))
        .with_state(state.clone());
    Ok(MockServer { addr: spawn(router, local())?, calls: state.requests.clone() })
}

fn digest_u64(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Text between the first pair of `"""` fences, or the whole message.
fn post_text(prompt: &str) -> &str {
    let mut parts = prompt.splitn(3, "\"\"\"");
    match (parts.next(), parts.next(), parts.next()) {
        (Some(_), Some(inner), Some(_)) => inner.trim(),
        _ => prompt,
    }
}

/// The score every simulated model centres on for a post.
pub fn mock_base_score(post: &str) -> u8 {
    (digest_u64(&[post]) % 6) as u8
}

/// Deterministic reply of model `model_id` for `post`. Models disagree with
/// the base score by at most one point.
pub fn mock_reply(model_id: &str, post: &str) -> String {
    let base = i64::from(mock_base_score(post));
    let noise = (digest_u64(&[model_id, post]) % 3) as i64 - 1;
    let score = (base + noise).clamp(0, 5) as usize;
    let justification = match score {
        0 | 1 => "The post attacks other members and breaks the rule on respectful conversation.",
        2 => "The tone of the post is dismissive and borders on a violation of the respect rule.",
        3 => "The post is mostly civil although a few remarks could be read as disrespectful.",
        4 => "The post respects the server rules and keeps a friendly tone.",
        _ => "The post is friendly, on topic and fully respects every rule of the server.",
    };
    let suggestion = if score >= 4 {
        if digest_u64(&[post, model_id, "na"]).is_multiple_of(2) { "N/A" } else { "No need for improvement." }
    } else {
        "Rephrase the critical remarks in a respectful way and remove the personal attack."
    };
    format!("Score: {score}: {}\nJustification: {justification}\nSuggestions: {suggestion}", LIKERT_LABELS[score])
}

#[derive(Default)]
struct ChatState {
    calls: Arc<AtomicUsize>,
}

async fn chat(State(s): State<Arc<ChatState>>, Json(req): Json<ChatRequest>) -> Response {
    s.calls.fetch_add(1, Ordering::SeqCst);
    if req.model.contains("min-temp") && req.temperature <= 0.0 {
        return (StatusCode::BAD_REQUEST, Json(json!({ "error": "temperature must be strictly positive" }))).into_response();
    }
    let prompt = req.messages.iter().find(|m| m.role == rulecheck_core::moderator::Role::User).map(|m| m.content.as_str()).unwrap_or("");
    let post = post_text(prompt);
    let content = if req.model.contains("sloppy") && req.messages.len() == 2 {
        "I think this post is fine overall.".to_string()
    } else {
        mock_reply(&req.model, post)
    };
    Json(json!({
        "id": "cmpl-mock",
        "object": "chat.completion",
        "model": req.model,
        "choices": [{ "index": 0, "message": { "role": "assistant", "content": content }, "finish_reason": "stop" }],
    }))
    .into_response()
}

/// Chat-completions backend answering with [`mock_reply`]. Models whose id
/// contains `sloppy` break the format on the first attempt; ids containing
/// `min-temp` reject temperature 0.
pub fn spawn_chat() -> std::io::Result<MockServer> {
    let state = Arc::new(ChatState::default());
    let calls = state.calls.clone();
    let router = Router::new().route("/v1/chat/completions", post(chat)).with_state(state);
    Ok(MockServer { addr: spawn(router, local())?, calls })
}

pub const MOCK_EMBEDDING_DIM: usize = 64;

/// Hashed bag of words, so texts sharing words point in similar directions.
pub fn mock_embedding(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; MOCK_EMBEDDING_DIM];
    for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let h = digest_u64(&[&word.to_lowercase()]);
        v[(h % MOCK_EMBEDDING_DIM as u64) as usize] += 1.0;
    }
    v[MOCK_EMBEDDING_DIM - 1] += 0.5;
    v
}

async fn embeddings(State(s): State<Arc<ChatState>>, Json(body): Json<Value>) -> Response {
    s.calls.fetch_add(1, Ordering::SeqCst);
    let Some(input) = body.get("input").and_then(Value::as_array) else {
        return (StatusCode::BAD_REQUEST, "input must be an array").into_response();
    };
    let data: Vec<Value> = input
        .iter()
        .enumerate()
        .map(|(i, t)| json!({ "index": i, "object": "embedding", "embedding": mock_embedding(t.as_str().unwrap_or("")) }))
        .collect();
    Json(json!({ "object": "list", "data": data })).into_response()
}

pub fn spawn_embedder() -> std::io::Result<MockServer> {
    let state = Arc::new(ChatState::default());
    let calls = state.calls.clone();
    let router = Router::new().route("/v1/embeddings", post(embeddings)).with_state(state);
    Ok(MockServer { addr: spawn(router, local())?, calls })
}

const SUBJECTS: [&str; 8] = [
    "I spent the morning",
    "We finally finished",
    "My neighbour and I started",
    "Our reading group loved",
    "The whole family enjoyed",
    "After a long week I tried",
    "This weekend we are planning",
    "Yesterday my friends recommended",
];
const ACTIVITIES: [&str; 10] = [
    "baking sourdough bread",
    "repairing an old bicycle",
    "planting tomatoes in the garden",
    "reading a novel about the sea",
    "walking along the river",
    "painting the kitchen walls",
    "learning a new song on the guitar",
    "cleaning up the community park",
    "writing letters to old friends",
    "building a small wooden shelf",
];
const CLOSERS: [&str; 8] = [
    "and it was more fun than we expected.",
    "but it took much longer than it should have.",
    "and I would recommend it to anyone who has a free afternoon.",
    "which made everyone in the house very happy.",
    "although the weather was not on our side.",
    "so now I need a very long nap.",
    "and honestly it was the best part of the week.",
    "but we are already thinking about what to do next time.",
];
const EXTRAS: [&str; 6] = [
    "Does anyone have tips for a beginner like me?",
    "Thanks to everyone who shared advice last time, it really helped.",
    "I will post some pictures later if the light is good.",
    "It is amazing how much you can learn from people here.",
    "Let me know what you think about it in the replies.",
    "There is always something new to discover when you slow down a little.",
];
const GERMAN: [&str; 6] = [
    "Heute haben wir den ganzen Tag im Garten gearbeitet und es war wirklich sehr schön.",
    "Wir freuen uns schon auf das Wochenende, weil dann endlich die Sonne scheinen soll.",
    "Ich habe gestern ein neues Buch gelesen und kann es euch allen nur empfehlen.",
    "Die Stadt ist im Herbst besonders ruhig, und wir gehen oft am Fluss spazieren.",
    "Mein Bruder hat mir gezeigt, wie man Brot backt, und es hat sofort geklappt.",
    "Was macht ihr eigentlich am liebsten, wenn es draußen regnet und kalt ist?",
];

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap()
}

/// `count` statuses, newest first, with ids counting down from
/// `first_id`. Roughly one in ten has no engagement at all; a few carry
/// mentions, links, e-mail addresses or a content warning.
pub fn english_statuses(domain: &str, count: usize, first_id: u64, seed: u64) -> Vec<Value> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut text = format!(
                "{} {} {}",
                SUBJECTS.choose(&mut rng).unwrap(),
                ACTIVITIES.choose(&mut rng).unwrap(),
                CLOSERS.choose(&mut rng).unwrap()
            );
            for _ in 0..rng.random_range(0..4) {
                text.push(' ');
                text.push_str(EXTRAS.choose(&mut rng).unwrap());
            }
            let html = match i % 17 {
                3 => format!("<p>{text}</p><p>cc <span class=\"h-card\"><a href=\"https://{domain}/@sam\">@sam</a></span></p>"),
                7 => format!("<p>{text}<br>Details at <a href=\"https://blog.example/post/{i}\">https://blog.example/post/{i}</a></p>"),
                11 => format!("<p>{text} Write to organiser{i}@mail.example for a spot.</p>"),
                _ => format!("<p>{text}</p>"),
            };
            let engaged = i % 10 != 9;
            let sensitive = i % 13 == 5;
            json!({
                "id": (first_id - i as u64).to_string(),
                "created_at": (epoch() - Duration::hours(3 * i as i64)).to_rfc3339(),
                "content": html,
                "language": "en",
                "sensitive": sensitive,
                "spoiler_text": if sensitive { "food pics" } else { "" },
                "visibility": "public",
                "replies_count": if engaged { rng.random_range(0..6) } else { 0 },
                "reblogs_count": if engaged { rng.random_range(0..4) } else { 0 },
                "favourites_count": if engaged { rng.random_range(1..30) } else { 0 },
                "account": { "id": "1", "username": "sam", "acct": "sam", "display_name": "Sam", "avatar": "https://files.example/a.png" },
                "media_attachments": [{ "id": "9", "type": "image", "url": "https://files.example/m.png" }],
                "mentions": [],
                "reblog": null,
            })
        })
        .collect()
}

pub fn german_statuses(count: usize, first_id: u64) -> Vec<Value> {
    (0..count)
        .map(|i| {
            json!({
                "id": (first_id - i as u64).to_string(),
                "created_at": (epoch() - Duration::hours(i as i64)).to_rfc3339(),
                "content": format!("<p>{} {}</p>", GERMAN[i % GERMAN.len()], GERMAN[(i + 2) % GERMAN.len()]),
                "language": "de",
                "sensitive": false,
                "spoiler_text": "",
                "replies_count": 1,
                "reblogs_count": 1,
                "favourites_count": 3,
                "account": { "id": "2", "username": "kim" },
                "media_attachments": [],
            })
        })
        .collect()
}

const ENGLISH_DESCRIPTION: &str =
    "A friendly community server for people who enjoy talking about their hobbies, their work and their daily lives.";

/// The fixture world: two large English servers (one of them `hci.social`
/// with its real rule list), a fork, a German server, a server without the
/// v2 API, a 26-rule server and a server without rules.
pub fn fixture_world(posts_per_large_instance: usize) -> BTreeMap<String, MockInstance> {
    let mut world = BTreeMap::new();

    let mut hci = MockInstance::new(OFFICIAL_SOURCE_URL, 120, ENGLISH_DESCRIPTION);
    hci.extended_description =
        Some("<p>Welcome to our server. We are a small group of people who care about research and design.</p>".into());
    hci.rules = HCI_SOCIAL_RULES.iter().map(|r| r.to_string()).collect();
    hci.statuses = english_statuses("hci.social", posts_per_large_instance, 112_000_000_000, 1);
    world.insert("hci.social".to_string(), hci);

    let mut garden = MockInstance::new(OFFICIAL_SOURCE_URL, 640, ENGLISH_DESCRIPTION);
    garden.rules = vec![
        "Be kind to other members.".into(),
        "No spam or advertising.".into(),
        "Mark sensitive images with a content warning.".into(),
        "No hate speech of any kind.".into(),
    ];
    garden.statuses = english_statuses("garden.example", posts_per_large_instance, 111_500_000_000, 2);
    world.insert("garden.example".to_string(), garden);

    let mut fork = MockInstance::new("https://github.com/glitch-soc/mastodon", 300, ENGLISH_DESCRIPTION);
    fork.rules = vec!["Be nice.".into()];
    fork.statuses = english_statuses("fork.example", 20, 110_000_000_000, 3);
    world.insert("fork.example".to_string(), fork);

    let mut de = MockInstance::new(
        OFFICIAL_SOURCE_URL,
        90,
        "Ein freundlicher Server für alle, die gerne über ihre Hobbys und ihren Alltag sprechen möchten.",
    );
    de.rules = vec!["Sei freundlich zu allen anderen.".into()];
    de.statuses = german_statuses(150, 109_000_000_000);
    world.insert("deutsch.example".to_string(), de);

    world.insert("legacy.example".to_string(), MockInstance::legacy());

    let mut many = MockInstance::new(OFFICIAL_SOURCE_URL, 45, ENGLISH_DESCRIPTION);
    many.rules = (1..=26).map(|i| format!("Rule number {i} asks members to keep the timeline pleasant.")).collect();
    many.statuses = english_statuses("rules26.example", 10, 108_000_000_000, 4);
    world.insert("rules26.example".to_string(), many);

    let mut bare = MockInstance::new(OFFICIAL_SOURCE_URL, 12, ENGLISH_DESCRIPTION);
    bare.statuses = english_statuses("norules.example", 10, 107_000_000_000, 5);
    world.insert("norules.example".to_string(), bare);

    world
}
