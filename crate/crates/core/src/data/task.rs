use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named tagging task and its ordered label inventory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub is_main: bool,
}

impl TaskSpec {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let spec = TaskSpec {
            name: name.into(),
            labels,
            is_main: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::Config(format!(
                "task {} needs at least 2 labels, has {}",
                self.name,
                self.labels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &self.labels {
            if !seen.insert(l) {
                return Err(Error::Config(format!(
                    "task {} has duplicate label {l}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }
}

/// One sentence with a label id per token.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<usize>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, tags: Vec<usize>) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::Input(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        Ok(TaggedSentence { tokens, tags })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// A task's annotated data, split for training and evaluation.
///
/// `extra_tests` holds additional named evaluation sets, e.g. test data
/// from other domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub task: TaskSpec,
    pub train: Vec<TaggedSentence>,
    pub dev: Vec<TaggedSentence>,
    pub test: Vec<TaggedSentence>,
    #[serde(default)]
    pub extra_tests: BTreeMap<String, Vec<TaggedSentence>>,
}

impl Corpus {
    pub fn new(task: TaskSpec) -> Self {
        Corpus {
            task,
            train: Vec::new(),
            dev: Vec::new(),
            test: Vec::new(),
            extra_tests: BTreeMap::new(),
        }
    }

    pub fn split(&self, split: Split) -> &[TaggedSentence] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty() && self.dev.is_empty() && self.test.is_empty()
    }

    /// Every sentence in every split, in a fixed order.
    pub fn all_sentences(&self) -> impl Iterator<Item = &TaggedSentence> {
        self.train
            .iter()
            .chain(&self.dev)
            .chain(&self.test)
            .chain(self.extra_tests.values().flatten())
    }

    /// Checks that every tag id is inside the label inventory.
    pub fn validate(&self) -> Result<()> {
        let n = self.task.num_labels();
        for s in self.all_sentences() {
            if s.tokens.len() != s.tags.len() {
                return Err(Error::Input(format!(
                    "sentence with {} tokens and {} tags in task {}",
                    s.tokens.len(),
                    s.tags.len(),
                    self.task.name
                )));
            }
            if let Some(&bad) = s.tags.iter().find(|&&t| t >= n) {
                return Err(Error::Label {
                    label: bad,
                    classes: n,
                });
            }
        }
        Ok(())
    }
}
