//! Prompt stencils with named `{slot}` placeholders.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template slot `{{{0}}}` has no value")]
    MissingSlot(String),
    #[error("template references unknown slot `{{{0}}}`")]
    UnknownSlot(String),
    #[error("unbalanced brace at byte {0}")]
    Unbalanced(usize),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
}

pub const SLOT_CONTEXT: &str = "context";
pub const SLOT_QUESTION: &str = "question";
pub const SLOT_CITATIONS: &str = "citation-list";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    /// Prompt A: context and question, asks for source names.
    #[default]
    QaContext,
    /// Prompt B: short template, instructions moved into a question supplement.
    QaContextSplit,
    /// Adds a `{citation-list}` slot the model must cite from.
    CustomCitation,
    /// Asks for the rationale and the gaps in the answer.
    Introspective,
    /// Splits the question into a bounded number of sub-queries.
    SensibleValidation,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        TemplateName::QaContext,
        TemplateName::QaContextSplit,
        TemplateName::CustomCitation,
        TemplateName::Introspective,
        TemplateName::SensibleValidation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateName::QaContext => "qa_context",
            TemplateName::QaContextSplit => "qa_context_split",
            TemplateName::CustomCitation => "custom_citation",
            TemplateName::Introspective => "introspective",
            TemplateName::SensibleValidation => "sensible_validation",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_owned()))
    }
}

const QA_CONTEXT: &str = "Use the following pieces of context to answer the question at the end. Provide the source document name of the context you use to formulate your answer. You are a subject matter expert in Oblique Detonation Waves and their numerical analysis.

If you do not know the answer, just say that you do not know, do not try to make up an answer. Reply with minimum 500 words and provide give a detailed list of research papers. Do not try to make up research article names.
Always say \"thanks for asking!\" at the end of the answer.

Context: {context}

Question: {question}

Answer: ";

const QA_CONTEXT_SPLIT: &str = "Use the following pieces of context to answer the question at the end. You are a subject matter expert in Oblique Detonation waves and their numerical analysis. Always say \"thanks for asking!\" at the end of the answer.

Context: {context}

Question: {question}

Answer: ";

const QA_CONTEXT_SPLIT_SUPPLEMENT: &str = "Reply with minimum 500 words and provide give a detailed list of research papers for this topic. If you do not know the answer, just say that you do not know, do not try to make up an answer. If you do not know the full research paper name, do not try to make up a research article name.";

const CUSTOM_CITATION: &str = "Use the following pieces of context to answer the question at the end. You are a subject matter expert in Oblique Detonation waves and their numerical analysis.
Also, use the following citation list to find the correct research article as seen in the pieces of context. Do not create an article name that is not in the citation list.
Always say \"thanks for asking!\" at the end of the answer.

Context: {context}

Citation List: {citation-list}

Question: {question}

Answer: ";

const CUSTOM_CITATION_SUPPLEMENT: &str = "Reply with minimum 500 words and provide give a detailed list of research papers for this topic. Use the provided citation list for quoting research articles.";

const INTROSPECTIVE: &str = "Answer the question using only the material below. Present a clear rationale for your answer, then list any information gaps in it and any assumptions it relies on that the material does not state.

Material: {context}

Question: {question}

Answer: ";

const SENSIBLE_VALIDATION: &str = "Divide the question into discrete sub-queries, at most {max-subqueries} of them. Answer each sub-query from the material below, then combine those answers into the final response and point out any details the material does not provide.

Material: {context}

Question: {question}

Answer: ";

/// Default cap on sub-queries for the sensible validation stencil.
pub const DEFAULT_MAX_SUBQUERIES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
    /// Appended to the user's question when rendering.
    pub supplement: Option<String>,
    /// Fixed slot values such as `max-subqueries`.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl PromptTemplate {
    pub fn builtin(name: TemplateName) -> Self {
        let (body, supplement) = match name {
            TemplateName::QaContext => (QA_CONTEXT, None),
            TemplateName::QaContextSplit => (QA_CONTEXT_SPLIT, Some(QA_CONTEXT_SPLIT_SUPPLEMENT)),
            TemplateName::CustomCitation => (CUSTOM_CITATION, Some(CUSTOM_CITATION_SUPPLEMENT)),
            TemplateName::Introspective => (INTROSPECTIVE, None),
            TemplateName::SensibleValidation => (SENSIBLE_VALIDATION, None),
        };
        let mut params = BTreeMap::new();
        if name == TemplateName::SensibleValidation {
            params.insert("max-subqueries".to_owned(), DEFAULT_MAX_SUBQUERIES.to_string());
        }
        Self {
            name,
            body: body.to_owned(),
            supplement: supplement.map(str::to_owned),
            params,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }

    /// Slot names referenced by the body, in order, with repeats.
    pub fn slots(&self) -> Result<Vec<String>, TemplateError> {
        let mut out = Vec::new();
        scan(&self.body, |piece| {
            if let Piece::Slot(name) = piece {
                out.push(name.to_owned());
            }
        })?;
        Ok(out)
    }

    pub fn uses(&self, slot: &str) -> bool {
        self.slots().is_ok_and(|s| s.iter().any(|x| x == slot))
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

/// Walks the body; `{{` and `}}` stand for literal braces.
fn scan<'a>(body: &'a str, mut f: impl FnMut(Piece<'a>)) -> Result<(), TemplateError> {
    let bytes = body.as_bytes();
    let mut i = 0;
    let mut text_start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                f(Piece::Text(&body[text_start..i + 1]));
                i += 2;
                text_start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                f(Piece::Text(&body[text_start..i + 1]));
                i += 2;
                text_start = i;
            }
            b'{' => {
                let close = body[i..].find('}').ok_or(TemplateError::Unbalanced(i))? + i;
                f(Piece::Text(&body[text_start..i]));
                f(Piece::Slot(&body[i + 1..close]));
                i = close + 1;
                text_start = i;
            }
            b'}' => return Err(TemplateError::Unbalanced(i)),
            _ => i += 1,
        }
    }
    f(Piece::Text(&body[text_start..]));
    Ok(())
}

/// Fills the template's slots in one pass; inserted values are never re-scanned.
///
/// The template's supplement, if any, is appended to the question on its own line.
pub fn render_prompt(
    tpl: &PromptTemplate,
    context: &str,
    question: &str,
    citation_list: Option<&str>,
) -> Result<String, TemplateError> {
    let question = match &tpl.supplement {
        Some(s) => format!("{question}\n{s}"),
        None => question.to_owned(),
    };
    let mut out = String::with_capacity(tpl.body.len() + context.len() + question.len());
    let mut err = None;
    scan(&tpl.body, |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Slot(name) => {
            let value = match name {
                SLOT_CONTEXT => Ok(context),
                SLOT_QUESTION => Ok(question.as_str()),
                SLOT_CITATIONS => citation_list.ok_or_else(|| TemplateError::MissingSlot(name.to_owned())),
                other => tpl
                    .params
                    .get(other)
                    .map(String::as_str)
                    .ok_or_else(|| TemplateError::UnknownSlot(other.to_owned())),
            };
            match value {
                Ok(v) => out.push_str(v),
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
