//! Token-per-line column files: one token per line, whitespace separated
//! columns, blank lines between sentences, `#` comment lines ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::task::{Corpus, TaggedSentence, TaskSpec};
use crate::error::{Error, Result};

/// Parses `text`, reading tags from `column` (column 0 holds the token).
/// Returns the sentences and the label inventory in first-seen order.
pub fn parse_conll(text: &str, column: usize) -> Result<(Vec<TaggedSentence>, Vec<String>)> {
    let mut labels = Vec::new();
    let sentences = parse_conll_into(text, column, &mut labels)?;
    Ok((sentences, labels))
}

/// Like [`parse_conll`] but extends an existing label inventory, so that
/// several files of one task share label ids.
pub fn parse_conll_into(
    text: &str,
    column: usize,
    labels: &mut Vec<String>,
) -> Result<Vec<TaggedSentence>> {
    if column == 0 {
        return Err(Error::Config("tag column must be >= 1".into()));
    }
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !tokens.is_empty() {
                sentences.push(TaggedSentence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(&tag) = fields.get(column) else {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!(
                    "expected at least {} columns, found {}",
                    column + 1,
                    fields.len()
                ),
            });
        };
        let id = match labels.iter().position(|l| l == tag) {
            Some(id) => id,
            None => {
                labels.push(tag.to_string());
                labels.len() - 1
            }
        };
        tokens.push(fields[0].to_string());
        tags.push(id);
    }
    if !tokens.is_empty() {
        sentences.push(TaggedSentence { tokens, tags });
    }
    Ok(sentences)
}

/// Two-column serialization (`token<TAB>tag`) readable by [`parse_conll`]
/// with column 1.
pub fn write_conll(sentences: &[TaggedSentence], labels: &[String]) -> Result<String> {
    let mut out = String::new();
    for s in sentences {
        for (tok, &tag) in s.tokens.iter().zip(&s.tags) {
            let label = labels.get(tag).ok_or(Error::Label {
                label: tag,
                classes: labels.len(),
            })?;
            let _ = writeln!(out, "{tok}\t{label}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Multi-column serialization: each row of `columns[s][t]` holds the
/// string tags of token `t` in sentence `s`.
pub fn write_columns(tokens: &[Vec<String>], columns: &[Vec<Vec<String>>]) -> String {
    let mut out = String::new();
    for (toks, cols) in tokens.iter().zip(columns) {
        for (tok, tags) in toks.iter().zip(cols) {
            out.push_str(tok);
            for t in tags {
                out.push('\t');
                out.push_str(t);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Where a task's splits live on disk.
#[derive(Clone, Debug, Default)]
pub struct CorpusFiles {
    pub train: Option<std::path::PathBuf>,
    pub dev: Option<std::path::PathBuf>,
    pub test: Option<std::path::PathBuf>,
    pub extra_tests: Vec<(String, std::path::PathBuf)>,
    pub column: usize,
}

/// Loads every configured split of one task with a shared label inventory.
pub fn load_corpus(name: &str, files: &CorpusFiles) -> Result<Corpus> {
    let mut labels = Vec::new();
    let mut load = |p: &Option<std::path::PathBuf>| -> Result<Vec<TaggedSentence>> {
        match p {
            None => Ok(Vec::new()),
            Some(p) => parse_conll_into(&read_file(p)?, files.column, &mut labels)
                .map_err(|e| with_path(e, p)),
        }
    };
    let train = load(&files.train)?;
    let dev = load(&files.dev)?;
    let test = load(&files.test)?;
    let mut extra_tests = BTreeMap::new();
    for (split, p) in &files.extra_tests {
        extra_tests.insert(split.clone(), load(&Some(p.clone()))?);
    }
    if labels.len() < 2 {
        return Err(Error::Input(format!(
            "task {name} has {} distinct labels in its files, at least 2 are required",
            labels.len()
        )));
    }
    Ok(Corpus {
        task: TaskSpec {
            name: name.to_string(),
            labels,
            is_main: false,
        },
        train,
        dev,
        test,
        extra_tests,
    })
}

fn with_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    }
}
