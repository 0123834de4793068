//! URL canonization: scheme and host normalization, fragment and tracking
//! parameter removal. Idempotent by construction.

use url::Url;

use crate::links::classify::host_known;

/// Canonical form plus a flag for URLs that could not be parsed (returned
/// verbatim).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalUrl {
    pub url: String,
    pub flagged: bool,
}

const TRACKING_EXACT: &[&str] = &["fbclid", "gclid", "mc_cid", "mc_eid", "ref_src", "igshid"];

fn is_tracking_param(name: &str) -> bool {
    name.starts_with("utm_") || TRACKING_EXACT.contains(&name)
}

/// Canonize one URL:
/// scheme forced to https for hosts in the rule table, host lowercased,
/// path case preserved, fragment dropped, tracking query parameters dropped,
/// trailing slash removed except at the root.
pub fn canonize_url(raw: &str) -> CanonicalUrl {
    let trimmed = raw.trim();
    let parsed = match Url::parse(trimmed) {
        Ok(u) => u,
        Err(_) => {
            return CanonicalUrl {
                url: trimmed.to_string(),
                flagged: true,
            }
        }
    };
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
        return CanonicalUrl {
            url: trimmed.to_string(),
            flagged: true,
        };
    }
    let host = parsed.host_str().unwrap().to_ascii_lowercase();
    let scheme = if parsed.scheme() == "http" && host_known(&host) {
        "https"
    } else {
        parsed.scheme()
    };

    let mut out = format!("{scheme}://{host}");
    if let Some(port) = parsed.port() {
        // default ports are already dropped by the parser
        out.push_str(&format!(":{port}"));
    }

    let path = parsed.path();
    let path = if path.len() > 1 {
        let t = path.trim_end_matches('/');
        if t.is_empty() {
            "/"
        } else {
            t
        }
    } else {
        path
    };
    out.push_str(path);

    let kept: Vec<(String, String)> = parsed
        .query_pairs()
        .filter(|(k, _)| !is_tracking_param(k))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    if !kept.is_empty() {
        out.push('?');
        let parts: Vec<String> = kept
            .iter()
            .map(|(k, v)| {
                if v.is_empty() {
                    urlencode(k)
                } else {
                    format!("{}={}", urlencode(k), urlencode(v))
                }
            })
            .collect();
        out.push_str(&parts.join("&"));
    }
    CanonicalUrl {
        url: out,
        flagged: false,
    }
}

fn urlencode(s: &str) -> String {
    // conservative re-encoding of query components
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' | b'/' | b':' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}
