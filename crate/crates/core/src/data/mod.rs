//! Corpora: column-file parsing, vocabulary construction, the bundled toy
//! corpus, synthetic auxiliary tasks and uniform task sampling.

mod batch;
pub mod conll;
mod synth;
mod task;
pub mod toy;

pub use batch::{batch_iterator, epoch_batches, Batch};
pub use conll::{load_corpus, parse_conll, parse_conll_into, write_conll, CorpusFiles};
pub use synth::{
    make_copy_aux, make_noise_corpus, make_random_relabel, NOISE_AUX_SENTENCES,
    NOISE_MAIN_SENTENCES,
};
pub use task::{Corpus, Split, TaggedSentence, TaskSpec};

use std::collections::HashMap;

use crate::encoder::Vocabulary;

/// Word and character vocabulary from the training splits only.
///
/// Tokens seen fewer than `min_count` times map to unk. Ids follow first
/// occurrence across the corpora in order.
pub fn build_vocab(corpora: &[Corpus], min_count: usize) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    let mut chars: Vec<char> = Vec::new();
    let mut seen_chars = std::collections::HashSet::new();
    for c in corpora {
        for s in &c.train {
            for t in &s.tokens {
                let n = counts.entry(t.as_str()).or_insert(0);
                if *n == 0 {
                    order.push(t);
                }
                *n += 1;
            }
        }
    }
    let kept: Vec<String> = order
        .into_iter()
        .filter(|t| counts[t] >= min_count)
        .map(str::to_string)
        .collect();
    for t in &kept {
        for ch in t.chars() {
            if seen_chars.insert(ch) {
                chars.push(ch);
            }
        }
    }
    Vocabulary::from_parts(kept, chars)
}
