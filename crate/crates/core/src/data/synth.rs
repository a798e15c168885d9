use super::task::{Corpus, TaggedSentence};
use crate::diffcore::Rng;
use crate::error::{Error, Result};

/// Same tokens, every tag replaced by a uniform draw from the inventory.
///
/// All splits are relabeled; the task keeps its inventory and gains a
/// `_random` suffix.
pub fn make_random_relabel(corpus: &Corpus, rng: &mut Rng) -> Corpus {
    let n = corpus.task.num_labels();
    let mut relabel = |xs: &[TaggedSentence]| -> Vec<TaggedSentence> {
        xs.iter()
            .map(|s| TaggedSentence {
                tokens: s.tokens.clone(),
                tags: s
                    .tags
                    .iter()
                    .map(|_| if n <= 1 { 0 } else { rng.below(n) })
                    .collect(),
            })
            .collect()
    };
    let mut out = corpus.clone();
    out.train = relabel(&corpus.train);
    out.dev = relabel(&corpus.dev);
    out.test = relabel(&corpus.test);
    for (name, split) in &corpus.extra_tests {
        out.extra_tests.insert(name.clone(), relabel(split));
    }
    if n <= 1 {
        // A single-label inventory has only one possible draw.
        out = corpus.clone();
    }
    out.task.name = format!("{}_random", corpus.task.name);
    out
}

/// Deep copy under a distinct task name.
pub fn make_copy_aux(corpus: &Corpus) -> Corpus {
    let mut out = corpus.clone();
    out.task.name = format!("{}_copy", corpus.task.name);
    out.task.is_main = false;
    out
}

/// Number of main-task (relabeled chunking) and auxiliary (gold POS)
/// sentences in the noise-fitting protocol.
pub const NOISE_MAIN_SENTENCES: usize = 200;
pub const NOISE_AUX_SENTENCES: usize = 100;

/// Builds the noise-fitting pair: the first `main_n` training sentences of
/// `chunk` with random labels as main task, and the first `aux_n` training
/// sentences of `pos` untouched as auxiliary task.
pub fn make_noise_corpus(
    main_n: usize,
    aux_n: usize,
    chunk: &Corpus,
    pos: &Corpus,
    rng: &mut Rng,
) -> Result<(Corpus, Corpus)> {
    if chunk.train.len() < main_n {
        return Err(Error::Input(format!(
            "noise corpus needs {main_n} {} sentences, source has {}",
            chunk.task.name,
            chunk.train.len()
        )));
    }
    if pos.train.len() < aux_n {
        return Err(Error::Input(format!(
            "noise corpus needs {aux_n} {} sentences, source has {}",
            pos.task.name,
            pos.train.len()
        )));
    }
    let mut main = Corpus::new(chunk.task.clone());
    main.train = chunk.train[..main_n].to_vec();
    let mut main = make_random_relabel(&main, rng);
    main.task.is_main = true;
    let mut aux = Corpus::new(pos.task.clone());
    aux.train = pos.train[..aux_n].to_vec();
    aux.task.is_main = false;
    Ok((main, aux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::task::TaskSpec;
    use crate::data::toy::{toy_corpora, BUNDLED_SIZES};

    fn tiny(labels: usize, sentences: usize) -> Corpus {
        let task = TaskSpec {
            name: "T".into(),
            labels: (0..labels).map(|i| format!("L{i}")).collect(),
            is_main: false,
        };
        let mut c = Corpus::new(task);
        c.train = (0..sentences)
            .map(|i| TaggedSentence {
                tokens: (0..5).map(|j| format!("w{}", (i + j) % 7)).collect(),
                tags: (0..5).map(|j| (i + j) % labels).collect(),
            })
            .collect();
        c
    }

    #[test]
    fn single_label_inventory_is_unchanged() {
        let c = tiny(1, 4);
        let r = make_random_relabel(&c, &mut Rng::new(0));
        assert_eq!(r.train, c.train);
    }

    #[test]
    fn relabel_preserves_tokens_and_lengths() {
        let c = tiny(5, 30);
        let r = make_random_relabel(&c, &mut Rng::new(1));
        assert_eq!(r.train.len(), c.train.len());
        for (a, b) in r.train.iter().zip(&c.train) {
            assert_eq!(a.tokens, b.tokens);
            assert_eq!(a.tags.len(), b.tags.len());
        }
        assert_ne!(r.train, c.train);
    }

    #[test]
    fn relabel_agreement_matches_binomial() {
        // n tags, each agreeing with probability 1/L.
        let labels = 4;
        let c = tiny(labels, 2000);
        let r = make_random_relabel(&c, &mut Rng::new(7));
        let n = (2000 * 5) as f64;
        let agree = r
            .train
            .iter()
            .zip(&c.train)
            .flat_map(|(a, b)| a.tags.iter().zip(&b.tags))
            .filter(|(x, y)| x == y)
            .count() as f64;
        let p = 1.0 / labels as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((agree - n * p).abs() < 3.0 * sigma, "agree={agree}");
    }

    #[test]
    fn copy_is_deep_and_renamed() {
        let c = tiny(3, 3);
        let mut k = make_copy_aux(&c);
        assert_eq!(k.train, c.train);
        assert_ne!(k.task.name, c.task.name);
        k.train[0].tags[0] = 2;
        k.train[0].tokens[0] = "changed".into();
        assert_ne!(c.train[0].tokens[0], "changed");
        let empty = make_copy_aux(&tiny(3, 0));
        assert!(empty.train.is_empty());
    }

    #[test]
    fn noise_corpus_sizes_and_slices() {
        let toy = toy_corpora(BUNDLED_SIZES, 11);
        let (pos, chunk) = (&toy[0], &toy[1]);
        let (main, aux) = make_noise_corpus(200, 100, chunk, pos, &mut Rng::new(3)).unwrap();
        assert_eq!((main.train.len(), aux.train.len()), (200, 100));
        assert_eq!(aux.train, pos.train[..100]);
        for (a, b) in main.train.iter().zip(&chunk.train) {
            assert_eq!(a.tokens, b.tokens);
        }
        assert!(main.task.is_main && !aux.task.is_main);
        assert!(make_noise_corpus(500, 100, chunk, pos, &mut Rng::new(3)).is_err());
    }
}
