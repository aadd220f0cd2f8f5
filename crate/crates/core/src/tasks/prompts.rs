//! Prompt construction from the versioned template file.
//!
//! Every prompt starts with a `#task:<tag>` line. Mock backends dispatch on
//! it; the HTTP backend strips it before sending.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Deserialize;

use crate::backend::{tags, TASK_TAG_PREFIX};
use crate::tasks::sorting::format_list;

const TEMPLATE_SOURCE: &str = include_str!("../../templates/prompts.toml");

#[derive(Debug, Deserialize)]
struct TemplateFile {
    version: u32,
    #[serde(flatten)]
    tasks: BTreeMap<String, Template>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Template {
    system: String,
    user: String,
}

static TEMPLATES: LazyLock<TemplateFile> =
    LazyLock::new(|| toml::from_str(TEMPLATE_SOURCE).expect("bundled prompt templates parse"));

/// Version of the bundled template file.
pub fn template_version() -> u32 {
    TEMPLATES.version
}

fn render(tag: &str, fields: &[(&str, &str)]) -> String {
    let t = TEMPLATES
        .tasks
        .get(tag)
        .unwrap_or_else(|| panic!("no prompt template for `{tag}`"));
    let mut out = format!("{TASK_TAG_PREFIX}{tag}\n{}\n\n", t.system);
    let mut rest = t.user.as_str();
    // single pass, so payloads containing braces are never re-substituted
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').map(|close| (&after[..close], close)) {
            Some((name, close)) if fields.iter().any(|(k, _)| *k == name) => {
                let value = fields.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).unwrap_or_default();
                out.push_str(value);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn count(text: &str) -> String {
    render(tags::COUNT, &[("text", text)])
}

pub fn sort(list: &[f64]) -> String {
    render(tags::SORT, &[("list", &format_list(list))])
}

pub fn retrieve(chunk: &str, question: &str) -> String {
    render(tags::RETRIEVE, &[("text", chunk), ("question", question)])
}

pub fn rag_retrieve(chunk: &str, question: &str) -> String {
    render(tags::RAG_RETRIEVE, &[("text", chunk), ("question", question)])
}

pub fn rag_aggregate(sentences: &[String], question: &str) -> String {
    render(tags::RAG_AGGREGATE, &[("sentences", &sentences.join("\n")), ("question", question)])
}

/// Contents of the first `<name>...</name>` block.
pub fn extract_block<'a>(prompt: &'a str, name: &str) -> Option<&'a str> {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let start = prompt.find(&open)? + open.len();
    let end = start + prompt[start..].find(&close)?;
    Some(&prompt[start..end])
}
