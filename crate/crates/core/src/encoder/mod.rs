//! Token representations and the recurrent building blocks of each task
//! network: word and character embeddings, bidirectional LSTM layers with
//! a two-way subspace partition, and the tagging head.

mod embed;
mod head;
mod lstm;
mod vocab;

pub use embed::{CharEncoder, EmbeddingTable};
pub use head::{argmax, OutputHead};
pub use lstm::{merge_subspaces, split_subspaces, LstmCell, LstmState, RecurrentLayer, SUBSPACES};
pub use vocab::{Vocabulary, UNK};
