use super::task::Corpus;
use crate::diffcore::Rng;

/// A group of training sentences from one task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub task: usize,
    /// Indices into the task's training split.
    pub sentences: Vec<usize>,
}

/// Draws one epoch of batches.
///
/// Each step picks a task uniformly among those with unseen training
/// sentences left, then takes up to `batch_size` of that task's remaining
/// sentences in shuffled order. The epoch ends when every task's training
/// split is exhausted.
pub fn epoch_batches(train_sizes: &[usize], batch_size: usize, rng: &mut Rng) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut queues: Vec<Vec<usize>> = train_sizes
        .iter()
        .map(|&n| {
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            idx.reverse();
            idx
        })
        .collect();
    let mut out = Vec::new();
    loop {
        let live: Vec<usize> = (0..queues.len())
            .filter(|&t| !queues[t].is_empty())
            .collect();
        let Some(&task) = rng.choose(&live) else {
            break;
        };
        let q = &mut queues[task];
        let take = batch_size.min(q.len());
        let sentences = q.split_off(q.len() - take).into_iter().rev().collect();
        out.push(Batch { task, sentences });
    }
    out
}

/// Convenience wrapper over [`epoch_batches`] for a list of corpora.
pub fn batch_iterator(
    corpora: &[Corpus],
    batch_size: usize,
    rng: &mut Rng,
) -> std::vec::IntoIter<Batch> {
    let sizes: Vec<usize> = corpora.iter().map(|c| c.train.len()).collect();
    epoch_batches(&sizes, batch_size, rng).into_iter()
}
