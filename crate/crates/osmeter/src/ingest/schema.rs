//! The canonical article schema and its JSON parser.
//!
//! One article is one UTF-8 JSON object with the field names of
//! [`ArticleRecord`]; missing values are encoded as nulls. A corpus file
//! holds one object per line. Dates are ISO-8601 (`YYYY-MM-DD`) strings.

use std::sync::OnceLock;

use chrono::{Datelike, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Journals covered by the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Journal {
    #[serde(rename = "TR-A")]
    TrA,
    #[serde(rename = "TR-B")]
    TrB,
    #[serde(rename = "TR-C")]
    TrC,
    #[serde(rename = "TR-D")]
    TrD,
    #[serde(rename = "TR-E")]
    TrE,
    #[serde(rename = "TR-F")]
    TrF,
    #[serde(rename = "TR-IP")]
    TrIp,
}

impl Journal {
    pub fn as_str(&self) -> &'static str {
        match self {
            Journal::TrA => "TR-A",
            Journal::TrB => "TR-B",
            Journal::TrC => "TR-C",
            Journal::TrD => "TR-D",
            Journal::TrE => "TR-E",
            Journal::TrF => "TR-F",
            Journal::TrIp => "TR-IP",
        }
    }

    pub fn parse(s: &str) -> Option<Journal> {
        match s.to_ascii_uppercase().as_str() {
            "TR-A" => Some(Journal::TrA),
            "TR-B" => Some(Journal::TrB),
            "TR-C" => Some(Journal::TrC),
            "TR-D" => Some(Journal::TrD),
            "TR-E" => Some(Journal::TrE),
            "TR-F" => Some(Journal::TrF),
            "TR-IP" => Some(Journal::TrIp),
            _ => None,
        }
    }
}

impl std::fmt::Display for Journal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArticleType {
    #[serde(rename = "full-length")]
    FullLength,
    #[serde(rename = "editorial")]
    Editorial,
    #[serde(rename = "review")]
    Review,
    #[serde(rename = "other")]
    Other,
}

impl ArticleType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArticleType::FullLength => "full-length",
            ArticleType::Editorial => "editorial",
            ArticleType::Review => "review",
            ArticleType::Other => "other",
        }
    }

    /// Unrecognized labels fall into the `other` bucket.
    pub fn parse(s: &str) -> ArticleType {
        match s.to_ascii_lowercase().as_str() {
            "full-length" | "full length" | "fla" | "research-article" => ArticleType::FullLength,
            "editorial" => ArticleType::Editorial,
            "review" => ArticleType::Review,
            _ => ArticleType::Other,
        }
    }
}

impl std::fmt::Display for ArticleType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub name: String,
    #[serde(default)]
    pub country: Option<String>,
}

/// One paper's normalized full text plus bibliographic metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub doi: String,
    pub title: String,
    pub journal: Journal,
    pub article_type: ArticleType,
    pub year: i32,
    pub received_date: Option<NaiveDate>,
    pub accepted_date: Option<NaiveDate>,
    pub authors: Vec<Author>,
    pub corresponding_country: Option<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub keywords: String,
    pub body_text: String,
    pub references_text: String,
    pub n_figures: u32,
    pub n_tables: u32,
    pub n_references: u32,
    pub n_pages: u32,
    pub n_authors: u32,
    pub open_access: bool,
}

impl ArticleRecord {
    /// Country used for region assignment: corresponding author first,
    /// falling back to the first author's affiliation.
    pub fn effective_country(&self) -> Option<&str> {
        self.corresponding_country
            .as_deref()
            .or_else(|| self.authors.first().and_then(|a| a.country.as_deref()))
    }

    /// Full text searched for URLs and baseline keywords.
    pub fn full_text(&self) -> String {
        format!(
            "{}\n{}\n{}\n{}\n{}",
            self.title, self.abstract_text, self.keywords, self.body_text, self.references_text
        )
    }
}

/// Lowercase and strip `doi:` / resolver-URL prefixes, repeatedly, so the
/// result is a fixed point.
pub fn normalize_doi(raw: &str) -> String {
    let mut s = raw.trim().to_lowercase();
    const PREFIXES: [&str; 6] = [
        "https://doi.org/",
        "http://doi.org/",
        "https://dx.doi.org/",
        "http://dx.doi.org/",
        "doi.org/",
        "doi:",
    ];
    loop {
        let mut stripped = false;
        for p in PREFIXES {
            if let Some(rest) = s.strip_prefix(p) {
                s = rest.trim_start().to_string();
                stripped = true;
            }
        }
        if !stripped {
            break;
        }
    }
    s
}

pub fn is_valid_doi(doi: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^10\.\d{4,9}/\S+$").unwrap())
        .is_match(doi)
}

/// Parse one canonical JSON article document into a validated record.
///
/// Malformed JSON yields a parse error carrying the byte offset; a missing
/// or invalid DOI (or out-of-range year, unknown journal) yields a rejection
/// error so the caller can exclude the record and report it.
pub fn parse_article(raw: &str) -> Result<ArticleRecord> {
    let value: Value = serde_json::from_str(raw).map_err(|e| Error::Parse {
        offset: byte_offset(raw, e.line(), e.column()),
        message: e.to_string(),
    })?;
    record_from_value(&value)
}

/// Validate and normalize a canonical-schema JSON value.
pub fn record_from_value(value: &Value) -> Result<ArticleRecord> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Rejected("document is not a JSON object".into()))?;

    let doi_raw = obj
        .get("doi")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Rejected("missing doi".into()))?;
    let doi = normalize_doi(doi_raw);
    if !is_valid_doi(&doi) {
        return Err(Error::Rejected(format!("invalid doi: {doi_raw}")));
    }

    let journal_raw = obj
        .get("journal")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Rejected(format!("{doi}: missing journal")))?;
    let journal = Journal::parse(journal_raw)
        .ok_or_else(|| Error::Rejected(format!("{doi}: unknown journal {journal_raw}")))?;

    let year = obj
        .get("year")
        .and_then(Value::as_i64)
        .ok_or_else(|| Error::Rejected(format!("{doi}: missing year")))? as i32;
    let current_year = chrono::Utc::now().year();
    if !(1900..=current_year).contains(&year) {
        return Err(Error::Rejected(format!("{doi}: year {year} out of range")));
    }

    let article_type = obj
        .get("article_type")
        .and_then(Value::as_str)
        .map(ArticleType::parse)
        .unwrap_or(ArticleType::Other);

    let authors: Vec<Author> = match obj.get("authors") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|a| {
                Ok(Author {
                    name: a
                        .get("name")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Rejected(format!("{doi}: author without name")))?
                        .to_string(),
                    country: a.get("country").and_then(Value::as_str).map(str::to_string),
                })
            })
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };

    let record = ArticleRecord {
        n_authors: authors.len() as u32,
        doi,
        title: text_field(obj, "title"),
        journal,
        article_type,
        year,
        received_date: date_field(obj, "received_date")?,
        accepted_date: date_field(obj, "accepted_date")?,
        authors,
        corresponding_country: obj
            .get("corresponding_country")
            .and_then(Value::as_str)
            .map(str::to_string),
        abstract_text: text_field(obj, "abstract"),
        keywords: text_field(obj, "keywords"),
        body_text: text_field(obj, "body_text"),
        references_text: text_field(obj, "references_text"),
        n_figures: count_field(obj, "n_figures")?,
        n_tables: count_field(obj, "n_tables")?,
        n_references: count_field(obj, "n_references")?,
        n_pages: count_field(obj, "n_pages")?,
        open_access: bool_field(obj, "open_access")?,
    };
    Ok(record)
}

fn text_field(obj: &serde_json::Map<String, Value>, key: &str) -> String {
    obj.get(key)
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string()
}

fn date_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<Option<NaiveDate>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Some)
            .map_err(|e| Error::Rejected(format!("bad date in {key}: {s} ({e})"))),
        Some(other) => Err(Error::Rejected(format!("bad date in {key}: {other}"))),
    }
}

fn count_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<u32> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(0),
        Some(Value::Number(n)) => {
            let v = n
                .as_i64()
                .ok_or_else(|| Error::Rejected(format!("{key} is not an integer")))?;
            u32::try_from(v).map_err(|_| Error::Rejected(format!("{key} is negative: {v}")))
        }
        Some(other) => Err(Error::Rejected(format!("{key} is not a number: {other}"))),
    }
}

/// Booleans arrive as JSON booleans or as "true"/"false" strings; both are
/// coerced to logical values. Absent means false.
fn bool_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<bool> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::String(s)) => match s.as_str() {
            "true" | "True" => Ok(true),
            "false" | "False" => Ok(false),
            other => Err(Error::Rejected(format!("{key} is not a boolean: {other}"))),
        },
        Some(other) => Err(Error::Rejected(format!("{key} is not a boolean: {other}"))),
    }
}

fn byte_offset(raw: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in raw.lines().enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    offset
}
