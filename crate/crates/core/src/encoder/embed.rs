use std::collections::HashMap;

use super::lstm::LstmCell;
use super::vocab::Vocabulary;
use crate::diffcore::{uniform, Axis, ParamId, ParamStore, Rng, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lookup tables start uniform in `±√(3 / dim)`, i.e. unit expected
/// squared norm per row.
fn lookup_bound(dim: usize) -> f64 {
    (3.0 / dim as f64).sqrt()
}

/// Word table plus a character-level bidirectional LSTM, shared by all tasks.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub words: ParamId,
    pub chars: Option<CharEncoder>,
}

#[derive(Clone, Debug)]
pub struct CharEncoder {
    pub table: ParamId,
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl EmbeddingTable {
    /// A `char_hidden` of 0 disables the character encoder.
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut Rng,
        vocab: &Vocabulary,
        word_dim: usize,
        char_dim: usize,
        char_hidden: usize,
    ) -> Self {
        let words = store.add(
            "embed.words",
            uniform(vocab.len(), word_dim, lookup_bound(word_dim), rng),
        );
        let chars = (char_hidden > 0).then(|| CharEncoder {
            table: store.add(
                "embed.chars",
                uniform(vocab.char_len(), char_dim, lookup_bound(char_dim), rng),
            ),
            forward: LstmCell::new(store, rng, "embed.char_fwd", char_dim, char_hidden),
            backward: LstmCell::new(store, rng, "embed.char_bwd", char_dim, char_hidden),
        });
        EmbeddingTable {
            word_dim,
            char_dim,
            char_hidden,
            words,
            chars,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.word_dim
            + if self.chars.is_some() {
                2 * self.char_hidden
            } else {
                0
            }
    }

    /// `1 × output_dim` vector: word row followed by the final forward and
    /// final backward character states.
    pub fn embed_token<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        vocab: &Vocabulary,
        token: &str,
    ) -> Result<Var> {
        if token.is_empty() {
            return Err(Error::Input("cannot embed an empty token".into()));
        }
        let table = tape.param(self.words);
        let word = tape.gather_rows(table, &[vocab.word_id(token)])?;
        match &self.chars {
            None => Ok(word),
            Some(enc) => {
                let chars = enc.encode(tape, &vocab.char_ids(token))?;
                tape.concat(&[word, chars], Axis::Cols)
            }
        }
    }

    /// `T × output_dim` matrix for a sentence.
    pub fn embed_sentence<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        vocab: &Vocabulary,
        tokens: &[String],
    ) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::Input("empty sentence".into()));
        }
        let ids: Vec<usize> = tokens.iter().map(|t| vocab.word_id(t)).collect();
        let table = tape.param(self.words);
        let words = tape.gather_rows(table, &ids)?;
        let Some(enc) = &self.chars else {
            return Ok(words);
        };
        let mut seen: HashMap<&str, Var> = HashMap::new();
        let mut rows = Vec::with_capacity(tokens.len());
        for tok in tokens {
            if tok.is_empty() {
                return Err(Error::Input("cannot embed an empty token".into()));
            }
            let v = match seen.get(tok.as_str()) {
                Some(&v) => v,
                None => {
                    let v = enc.encode(tape, &vocab.char_ids(tok))?;
                    seen.insert(tok, v);
                    v
                }
            };
            rows.push(v);
        }
        let chars = tape.concat(&rows, Axis::Rows)?;
        tape.concat(&[words, chars], Axis::Cols)
    }
}

impl CharEncoder {
    fn encode<T: Scalar>(&self, tape: &mut Tape<'_, T>, ids: &[usize]) -> Result<Var> {
        let table = tape.param(self.table);
        let seq = tape.gather_rows(table, ids)?;
        let (_, last_fwd) = self.forward.run(tape, seq, false)?;
        let (_, last_bwd) = self.backward.run(tape, seq, true)?;
        tape.concat(&[last_fwd.h, last_bwd.h], Axis::Cols)
    }
}
