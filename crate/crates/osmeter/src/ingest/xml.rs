//! Adapter from a minimal publisher-XML tag subset onto the canonical
//! article schema.
//!
//! Accepted document shape (all children optional unless the canonical
//! schema requires them):
//!
//! ```xml
//! <article>
//!   <meta>
//!     <doi>10.1016/j.trc.2024.1</doi>
//!     <title>...</title>
//!     <journal>TR-C</journal>
//!     <article-type>full-length</article-type>
//!     <year>2024</year>
//!     <received>2023-01-15</received>
//!     <accepted>2023-11-02</accepted>
//!     <open-access>true</open-access>
//!     <pages first="1" last="18"/>
//!     <page-count>18</page-count>
//!     <figures>10</figures>
//!     <tables>4</tables>
//!     <references-count>52</references-count>
//!   </meta>
//!   <authors>
//!     <author country="FR" corresponding="true">A. Name</author>
//!   </authors>
//!   <abstract>...</abstract>
//!   <keywords>...</keywords>
//!   <body>...</body>
//!   <references>...</references>
//! </article>
//! ```
//!
//! Page count comes from the declared first/last pages when both are
//! present, else from `<page-count>`; it is never estimated from text.

use quick_xml::events::Event;
use quick_xml::Reader;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::ingest::schema::{record_from_value, ArticleRecord};

/// Parse a publisher XML document into a validated article record.
pub fn parse_publisher_xml(raw: &str) -> Result<ArticleRecord> {
    let value = xml_to_canonical(raw)?;
    record_from_value(&value)
}

fn xml_to_canonical(raw: &str) -> Result<Value> {
    let mut reader = Reader::from_str(raw);
    let mut path: Vec<String> = Vec::new();
    let mut obj = Map::new();
    let mut authors: Vec<Value> = Vec::new();
    let mut corresponding_country: Option<String> = None;
    let mut text = String::new();
    let mut author_attrs: (Option<String>, bool) = (None, false);
    let mut pages: (Option<i64>, Option<i64>) = (None, None);
    let mut page_count: Option<i64> = None;

    loop {
        let event = reader.read_event().map_err(|e| Error::Parse {
            offset: reader.error_position() as usize,
            message: format!("xml: {e}"),
        })?;
        match event {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).to_string();
                if name == "author" {
                    author_attrs = (None, false);
                    for attr in e.attributes().flatten() {
                        let key = String::from_utf8_lossy(attr.key.as_ref()).to_string();
                        let val = attr.normalized_value(quick_xml::XmlVersion::Implicit1_0).unwrap_or_default().to_string();
                        match key.as_str() {
                            "country" => author_attrs.0 = Some(val),
                            "corresponding" => author_attrs.1 = val == "true",
                            _ => {}
                        }
                    }
                }
                path.push(name);
                text.clear();
            }
            Event::Empty(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).to_string();
                if name == "pages" {
                    for attr in e.attributes().flatten() {
                        let key = String::from_utf8_lossy(attr.key.as_ref()).to_string();
                        let val = attr.normalized_value(quick_xml::XmlVersion::Implicit1_0).unwrap_or_default().to_string();
                        match key.as_str() {
                            "first" => pages.0 = val.parse().ok(),
                            "last" => pages.1 = val.parse().ok(),
                            _ => {}
                        }
                    }
                }
            }
            Event::Text(t) => {
                let piece = t.decode().map_err(|e| Error::Parse {
                    offset: reader.error_position() as usize,
                    message: format!("xml text: {e}"),
                })?;
                let unescaped = quick_xml::escape::unescape(&piece)
                    .map(|c| c.to_string())
                    .unwrap_or_else(|_| piece.to_string());
                text.push_str(&unescaped);
            }
            Event::GeneralRef(r) => {
                // standard entities arrive as separate events
                let name = String::from_utf8_lossy(r.as_ref()).to_string();
                let resolved = match name.as_str() {
                    "amp" => "&".to_string(),
                    "lt" => "<".to_string(),
                    "gt" => ">".to_string(),
                    "quot" => "\"".to_string(),
                    "apos" => "'".to_string(),
                    n => quick_xml::escape::unescape(&format!("&{n};"))
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                };
                text.push_str(&resolved);
            }
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).to_string();
                let value = text.trim().to_string();
                match name.as_str() {
                    "doi" => set_str(&mut obj, "doi", &value),
                    "title" => set_str(&mut obj, "title", &value),
                    "journal" => set_str(&mut obj, "journal", &value),
                    "article-type" => set_str(&mut obj, "article_type", &value),
                    "year" => {
                        if let Ok(y) = value.parse::<i64>() {
                            obj.insert("year".into(), json!(y));
                        }
                    }
                    "received" => set_str(&mut obj, "received_date", &value),
                    "accepted" => set_str(&mut obj, "accepted_date", &value),
                    "open-access" => set_str(&mut obj, "open_access", &value),
                    "figures" => set_count(&mut obj, "n_figures", &value),
                    "tables" => set_count(&mut obj, "n_tables", &value),
                    "references-count" => set_count(&mut obj, "n_references", &value),
                    "page-count" => page_count = value.parse().ok(),
                    "author" => {
                        let mut a = Map::new();
                        a.insert("name".into(), json!(value));
                        if let Some(c) = &author_attrs.0 {
                            a.insert("country".into(), json!(c));
                            if author_attrs.1 {
                                corresponding_country = Some(c.clone());
                            }
                        }
                        authors.push(Value::Object(a));
                    }
                    "abstract" => set_str(&mut obj, "abstract", &value),
                    "keywords" => set_str(&mut obj, "keywords", &value),
                    "body" => set_str(&mut obj, "body_text", &value),
                    "references" => set_str(&mut obj, "references_text", &value),
                    _ => {}
                }
                path.pop();
                text.clear();
            }
            Event::Eof => break,
            _ => {}
        }
    }

    obj.insert("authors".into(), Value::Array(authors));
    if let Some(c) = corresponding_country {
        obj.insert("corresponding_country".into(), json!(c));
    }
    let n_pages = match pages {
        (Some(first), Some(last)) if last >= first => Some(last - first + 1),
        _ => page_count,
    };
    if let Some(p) = n_pages {
        obj.insert("n_pages".into(), json!(p));
    }
    Ok(Value::Object(obj))
}

fn set_str(obj: &mut Map<String, Value>, key: &str, value: &str) {
    if !value.is_empty() {
        obj.insert(key.to_string(), json!(value));
    }
}

fn set_count(obj: &mut Map<String, Value>, key: &str, value: &str) {
    if let Ok(n) = value.parse::<i64>() {
        obj.insert(key.to_string(), json!(n));
    }
}
