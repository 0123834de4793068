//! Versioned prompt templates, one small feature group per prompt. The
//! template version and content hash participate in the cache key so prompt
//! edits invalidate stale responses.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::ArticleRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateId {
    Code,
    Data,
    Quant,
    Links,
}

impl TemplateId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateId::Code => "code",
            TemplateId::Data => "data",
            TemplateId::Quant => "quant",
            TemplateId::Links => "links",
        }
    }

    pub fn parse(s: &str) -> Result<TemplateId> {
        match s {
            "code" => Ok(TemplateId::Code),
            "data" => Ok(TemplateId::Data),
            "quant" => Ok(TemplateId::Quant),
            "links" => Ok(TemplateId::Links),
            other => Err(Error::InvalidInput(format!("unknown template id: {other}"))),
        }
    }

    pub fn all() -> [TemplateId; 4] {
        [
            TemplateId::Code,
            TemplateId::Data,
            TemplateId::Quant,
            TemplateId::Links,
        ]
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Expected JSON value shape of one response field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Bool,
    Quote,
    LinkList,
}

#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: &'static str,
    pub kind: FieldKind,
    pub required: bool,
}

#[derive(Debug, Clone)]
pub struct Template {
    pub id: TemplateId,
    pub version: u32,
    text: &'static str,
    pub fields: Vec<FieldSpec>,
}

pub const TEMPLATE_VERSION: u32 = 1;

fn field(name: &'static str, kind: FieldKind, required: bool) -> FieldSpec {
    FieldSpec {
        name,
        kind,
        required,
    }
}

/// The template registry. Field key-spaces are disjoint across templates
/// (the `title` echo is shared and never merged), so merging fragments
/// cannot conflict.
pub fn template(id: TemplateId) -> Template {
    match id {
        TemplateId::Code => Template {
            id,
            version: TEMPLATE_VERSION,
            text: include_str!("../../resources/templates/code.v1.txt"),
            fields: vec![
                field("is_code_used", FieldKind::Bool, true),
                field("reason_code_is_used", FieldKind::Quote, false),
                field("reason_code_is_not_used", FieldKind::Quote, false),
                field("is_code_publicly_available", FieldKind::Bool, true),
                field("reason_code_available", FieldKind::Quote, false),
                field("reason_code_unavailable", FieldKind::Quote, false),
            ],
        },
        TemplateId::Data => Template {
            id,
            version: TEMPLATE_VERSION,
            text: include_str!("../../resources/templates/data.v1.txt"),
            fields: vec![
                field("is_data_used", FieldKind::Bool, true),
                field("is_simulation_study", FieldKind::Bool, true),
                field("reason_simulation_study", FieldKind::Quote, false),
                field("reason_data_is_used", FieldKind::Quote, false),
                field("is_data_repository_available", FieldKind::Bool, true),
                field("reason_data_repository_available", FieldKind::Quote, false),
            ],
        },
        TemplateId::Quant => Template {
            id,
            version: TEMPLATE_VERSION,
            text: include_str!("../../resources/templates/quant.v1.txt"),
            fields: vec![
                field("is_quantitative_study", FieldKind::Bool, true),
                field("reason_quantitative_study", FieldKind::Quote, false),
                field("availability_statement_present", FieldKind::Bool, true),
                field("availability_statement_quote", FieldKind::Quote, false),
            ],
        },
        TemplateId::Links => Template {
            id,
            version: TEMPLATE_VERSION,
            text: include_str!("../../resources/templates/links.v1.txt"),
            fields: vec![
                field("is_data_cited", FieldKind::Bool, true),
                field("reason_data_cited", FieldKind::Quote, false),
                field("code_links", FieldKind::LinkList, true),
                field("data_links", FieldKind::LinkList, true),
            ],
        },
    }
}

impl Template {
    /// Hash of the template text; part of the cache key.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.text.as_bytes());
        hex_string(&hasher.finalize())
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Instantiate the template with the article's markdown-rendered full text.
pub fn build_prompt(record: &ArticleRecord, id: TemplateId) -> Result<String> {
    if record.body_text.trim().is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: body text is empty",
            record.doi
        )));
    }
    let tpl = template(id);
    Ok(tpl.text.replace("{{FULL_TEXT}}", &markdown_text(record)))
}

fn markdown_text(record: &ArticleRecord) -> String {
    format!(
        "# {}\n\n## Abstract\n\n{}\n\nKeywords: {}\n\n## Body\n\n{}\n\n## References\n\n{}\n",
        record.title,
        record.abstract_text,
        record.keywords,
        record.body_text,
        record.references_text
    )
}
