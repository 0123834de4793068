//! Link liveness checks: HEAD with GET fallback, bounded retries, per-host
//! politeness, and a landing-page content-kind heuristic.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Liveness {
    Live,
    Dead,
    Unknown,
    Unchecked,
}

impl Liveness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Liveness::Live => "live",
            Liveness::Dead => "dead",
            Liveness::Unknown => "unknown",
            Liveness::Unchecked => "unchecked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKindHint {
    Code,
    Data,
    Mixed,
    Unknown,
}

impl ContentKindHint {
    pub fn as_str(&self) -> &'static str {
        match self {
            ContentKindHint::Code => "code",
            ContentKindHint::Data => "data",
            ContentKindHint::Mixed => "mixed",
            ContentKindHint::Unknown => "unknown",
        }
    }
}

/// Retry/timeout policy and politeness limits.
#[derive(Debug, Clone)]
pub struct ValidationPolicy {
    pub timeout: Duration,
    pub retries: u32,
    pub per_host_concurrency: usize,
    pub global_concurrency: usize,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(10),
            retries: 2,
            per_host_concurrency: 2,
            global_concurrency: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationOutcome {
    pub liveness: Liveness,
    pub content_kind: ContentKindHint,
    pub attempts: u32,
}

fn agent(policy: &ValidationPolicy) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(policy.timeout))
        .build()
        .into()
}

/// Validate one URL.
///
/// HEAD first, GET fallback on 405/403 (within the same attempt). Status
/// 200-399 is live; 404/410 (and remaining client errors) dead; timeouts,
/// connection failures and 5xx retry up to the budget and end unknown; DNS
/// failure is dead immediately; TLS failure unknown immediately. Total
/// attempts never exceed 1 + retries.
pub fn validate_link(url: &str, policy: &ValidationPolicy) -> ValidationOutcome {
    let client = agent(policy);
    validate_with_agent(&client, url, policy)
}

fn validate_with_agent(
    client: &ureq::Agent,
    url: &str,
    policy: &ValidationPolicy,
) -> ValidationOutcome {
    let max_attempts = 1 + policy.retries;
    let mut attempts = 0;
    while attempts < max_attempts {
        attempts += 1;
        match try_once(client, url) {
            TryOutcome::Final(liveness, kind) => {
                return ValidationOutcome {
                    liveness,
                    content_kind: kind,
                    attempts,
                }
            }
            TryOutcome::Retry => {}
        }
    }
    ValidationOutcome {
        liveness: Liveness::Unknown,
        content_kind: ContentKindHint::Unknown,
        attempts,
    }
}

enum TryOutcome {
    Final(Liveness, ContentKindHint),
    Retry,
}

fn try_once(client: &ureq::Agent, url: &str) -> TryOutcome {
    match client.head(url).call() {
        Ok(resp) => {
            let status = resp.status().as_u16();
            if status == 405 || status == 403 {
                // server refuses HEAD: one GET within the same attempt
                return get_fallback(client, url);
            }
            classify_status(status, None)
        }
        Err(e) => classify_error(e),
    }
}

fn get_fallback(client: &ureq::Agent, url: &str) -> TryOutcome {
    match client.get(url).call() {
        Ok(mut resp) => {
            let status = resp.status().as_u16();
            let body = resp
                .body_mut()
                .with_config()
                .limit(256 * 1024)
                .read_to_string()
                .ok();
            classify_status(status, body.as_deref())
        }
        Err(e) => classify_error(e),
    }
}

fn classify_status(status: u16, body: Option<&str>) -> TryOutcome {
    match status {
        200..=399 => TryOutcome::Final(
            Liveness::Live,
            body.map(content_kind_hint).unwrap_or(ContentKindHint::Unknown),
        ),
        404 | 410 => TryOutcome::Final(Liveness::Dead, ContentKindHint::Unknown),
        401 | 403 => TryOutcome::Final(Liveness::Unknown, ContentKindHint::Unknown),
        400..=499 => TryOutcome::Final(Liveness::Dead, ContentKindHint::Unknown),
        _ => TryOutcome::Retry, // 5xx and anything else
    }
}

fn classify_error(e: ureq::Error) -> TryOutcome {
    match e {
        ureq::Error::HostNotFound => TryOutcome::Final(Liveness::Dead, ContentKindHint::Unknown),
        ureq::Error::Tls(_) => TryOutcome::Final(Liveness::Unknown, ContentKindHint::Unknown),
        // name resolution failures surface as io errors on some platforms
        ureq::Error::Io(io) if is_dns_failure(&io) => {
            TryOutcome::Final(Liveness::Dead, ContentKindHint::Unknown)
        }
        ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed => {
            TryOutcome::Retry
        }
        _ => TryOutcome::Final(Liveness::Unknown, ContentKindHint::Unknown),
    }
}

fn is_dns_failure(io: &std::io::Error) -> bool {
    let msg = io.to_string();
    msg.contains("lookup address")
        || msg.contains("Name or service not known")
        || msg.contains("failed to resolve")
        || msg.contains("nodename nor servname")
}

/// Landing-page heuristic, advisory only: repository file-listing markers
/// suggest code, dataset landing markers suggest data.
pub fn content_kind_hint(body: &str) -> ContentKindHint {
    let lower = body.to_lowercase();
    const CODE_MARKERS: &[&str] = &[
        "git clone",
        "source code",
        "readme.md",
        "commits",
        "branches",
        "repository file",
    ];
    const DATA_MARKERS: &[&str] = &[
        "dataset",
        "data files",
        "download data",
        "data record",
        "data repository",
    ];
    let code = CODE_MARKERS.iter().any(|m| lower.contains(m));
    let data = DATA_MARKERS.iter().any(|m| lower.contains(m));
    match (code, data) {
        (true, true) => ContentKindHint::Mixed,
        (true, false) => ContentKindHint::Code,
        (false, true) => ContentKindHint::Data,
        (false, false) => ContentKindHint::Unknown,
    }
}

/// Validate many URLs on a bounded worker pool with a per-host concurrency
/// cap. Results are keyed by URL; order-independent.
pub fn validate_links(
    urls: &[String],
    policy: &ValidationPolicy,
) -> BTreeMap<String, ValidationOutcome> {
    if urls.is_empty() {
        return BTreeMap::new();
    }
    let queue: Arc<Mutex<VecDeque<String>>> = Arc::new(Mutex::new(
        urls.iter()
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect(),
    ));
    let host_counts: Arc<(Mutex<HashMap<String, usize>>, Condvar)> =
        Arc::new((Mutex::new(HashMap::new()), Condvar::new()));
    let results: Arc<Mutex<BTreeMap<String, ValidationOutcome>>> =
        Arc::new(Mutex::new(BTreeMap::new()));

    let workers = policy.global_concurrency.min(urls.len()).max(1);
    let mut handles = Vec::with_capacity(workers);
    for _ in 0..workers {
        let queue = Arc::clone(&queue);
        let host_counts = Arc::clone(&host_counts);
        let results = Arc::clone(&results);
        let policy = policy.clone();
        handles.push(std::thread::spawn(move || {
            let client = agent(&policy);
            loop {
                let url = match queue.lock().unwrap().pop_front() {
                    Some(u) => u,
                    None => break,
                };
                let host = Url::parse(&url)
                    .ok()
                    .and_then(|u| u.host_str().map(str::to_lowercase))
                    .unwrap_or_default();
                acquire_host(&host_counts, &host, policy.per_host_concurrency);
                let outcome = validate_with_agent(&client, &url, &policy);
                release_host(&host_counts, &host);
                results.lock().unwrap().insert(url, outcome);
            }
        }));
    }
    for h in handles {
        let _ = h.join();
    }
    Arc::try_unwrap(results).unwrap().into_inner().unwrap()
}

fn acquire_host(
    pair: &Arc<(Mutex<HashMap<String, usize>>, Condvar)>,
    host: &str,
    limit: usize,
) {
    let (lock, cvar) = &**pair;
    let mut counts = lock.lock().unwrap();
    while counts.get(host).copied().unwrap_or(0) >= limit.max(1) {
        counts = cvar.wait(counts).unwrap();
    }
    *counts.entry(host.to_string()).or_insert(0) += 1;
}

fn release_host(pair: &Arc<(Mutex<HashMap<String, usize>>, Condvar)>, host: &str) {
    let (lock, cvar) = &**pair;
    let mut counts = lock.lock().unwrap();
    if let Some(c) = counts.get_mut(host) {
        *c = c.saturating_sub(1);
    }
    cvar.notify_all();
}
