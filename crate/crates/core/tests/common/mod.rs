#![allow(dead_code)]

pub mod corrupt;
pub mod gen;
pub mod oracle;

use megaloop::fixtures;
use megaloop::validate::{DocKind, Document};

/// Every pristine document of the corpus.
pub fn corpus_documents() -> Vec<Document> {
    let mut docs = vec![Document::new("events.evt", DocKind::Events, fixtures::EVENTS)];
    docs.extend(fixtures::FLDS.iter().map(|(f, t)| Document::new(f, DocKind::Megamodel, t)));
    docs.extend(fixtures::LDS.iter().map(|(f, t)| Document::new(f, DocKind::Architecture, t)));
    docs.extend(fixtures::PATCHES.iter().map(|(f, t)| Document::new(f, DocKind::Patch, t)));
    docs
}
