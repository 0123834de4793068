//! Outbound URL extraction from article text.

use std::sync::OnceLock;

use regex::Regex;

/// Trailing punctuation stripped from matched URLs.
const TRAILING: &[char] = &['.', ',', ';', ')', ']'];

/// Find http/https URLs in text. Soft-hyphen line wraps are joined before
/// matching; trailing punctuation is stripped; duplicates are preserved.
pub fn extract_urls(text: &str) -> Vec<String> {
    static URL: OnceLock<Regex> = OnceLock::new();
    static SHY: OnceLock<Regex> = OnceLock::new();
    let dehyphenated = SHY
        .get_or_init(|| Regex::new("\u{00AD}(\r?\n[ \t]*)?").unwrap())
        .replace_all(text, "");
    URL.get_or_init(|| Regex::new(r#"https?://[^\s<>"'`]+"#).unwrap())
        .find_iter(&dehyphenated)
        .map(|m| m.as_str().trim_end_matches(TRAILING).to_string())
        .filter(|u| !u.is_empty())
        .collect()
}
