//! Seeded generator for a small synthetic English-like corpus annotated
//! with POS, chunk, named-entity and headword semantic-role tags.
//!
//! Sentences follow `subject verb object [prepositional phrase] [adverb] .`
//! with lexical ambiguity (e.g. `reports` as plural noun or verb), so the
//! tags depend on context. Two domains share the grammar but draw from
//! different lexicon slices and phrase frequencies, which provides a
//! distribution-shifted test set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conll::write_columns;
use super::task::{Corpus, TaggedSentence, TaskSpec};
use crate::diffcore::Rng;

pub const TASK_NAMES: [&str; 4] = ["POS", "CHUNK", "NER", "SRL"];

pub const POS_LABELS: &[&str] = &[
    "DT", "JJ", "NN", "NNS", "NNP", "VBD", "VBZ", "IN", "PRP", "RB", ".",
];
pub const CHUNK_LABELS: &[&str] = &["B-NP", "I-NP", "B-VP", "B-PP", "B-ADVP", "O"];
pub const NER_LABELS: &[&str] = &["O", "B-PERSON", "I-PERSON", "B-GPE", "B-ORG"];
pub const SRL_LABELS: &[&str] = &[
    "B-ARG0",
    "I-ARG0",
    "B-V",
    "B-ARG1",
    "I-ARG1",
    "B-ARGM-LOC",
    "I-ARGM-LOC",
    "B-ARGM-TMP",
    "O",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    News,
    Web,
}

/// One generated sentence with all four annotation layers as strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToySentence {
    pub tokens: Vec<String>,
    pub pos: Vec<&'static str>,
    pub chunk: Vec<&'static str>,
    pub ner: Vec<&'static str>,
    pub srl: Vec<&'static str>,
}

impl ToySentence {
    fn push(
        &mut self,
        tok: &str,
        pos: &'static str,
        chunk: &'static str,
        ner: &'static str,
        srl: &'static str,
    ) {
        self.tokens.push(tok.to_string());
        self.pos.push(pos);
        self.chunk.push(chunk);
        self.ner.push(ner);
        self.srl.push(srl);
    }

    pub fn column(&self, task: usize) -> &[&'static str] {
        match task {
            0 => &self.pos,
            1 => &self.chunk,
            2 => &self.ner,
            _ => &self.srl,
        }
    }
}

struct Lexicon {
    det: &'static [&'static str],
    adj: &'static [&'static str],
    noun: &'static [&'static str],
    nouns: &'static [&'static str],
    first: &'static [&'static str],
    last: &'static [&'static str],
    place: &'static [&'static str],
    org: &'static [&'static str],
    vbd: &'static [&'static str],
    vbz: &'static [&'static str],
    prep: &'static [&'static str],
    pron: &'static [&'static str],
    adv: &'static [&'static str],
}

const NEWS: Lexicon = Lexicon {
    det: &["the", "a", "this", "every", "some"],
    adj: &["big", "old", "new", "local", "small", "red", "quick"],
    noun: &[
        "car", "accident", "report", "market", "plan", "house", "team", "deal", "court", "bank",
    ],
    nouns: &[
        "cars", "reports", "markets", "plans", "houses", "teams", "deals", "banks",
    ],
    first: &["Abramov", "Maria", "John", "Olga", "Ahmed", "Chen"],
    last: &["Smith", "Ivanov", "Garcia", "Okafor"],
    place: &["Paris", "Moscow", "Texas", "Berlin", "Lagos"],
    org: &["Reuters", "Acme", "Unicef", "Boeing"],
    vbd: &[
        "had", "saw", "bought", "sold", "reported", "visited", "found", "built", "signed",
    ],
    vbz: &[
        "has", "sees", "buys", "sells", "reports", "visits", "plans", "builds", "signs",
    ],
    prep: &["in", "near", "from", "at"],
    pron: &["he", "she", "they", "it"],
    adv: &["yesterday", "again", "today"],
};

const WEB: Lexicon = Lexicon {
    det: &["the", "a", "my", "your", "some"],
    adj: &["cool", "new", "cheap", "awesome", "old", "big"],
    noun: &[
        "phone", "blog", "post", "game", "plan", "car", "report", "video", "site",
    ],
    nouns: &[
        "phones", "posts", "games", "plans", "videos", "reports", "sites",
    ],
    first: &["Maria", "Kevin", "Priya", "Lars"],
    last: &["Smith", "Jensen", "Rao"],
    place: &["Seattle", "Paris", "Tokyo", "Texas"],
    org: &["Google", "Acme", "Reddit"],
    vbd: &[
        "had", "saw", "bought", "posted", "liked", "found", "played", "sold",
    ],
    vbz: &[
        "has", "sees", "buys", "posts", "likes", "plays", "plans", "reports",
    ],
    prep: &["on", "in", "from", "with"],
    pron: &["I", "we", "you", "they"],
    adv: &["today", "again", "honestly", "now"],
};

fn pick(rng: &mut Rng, xs: &[&'static str]) -> &'static str {
    xs[rng.below(xs.len())]
}

/// Role of a noun phrase inside the clause, which fixes its SRL tags.
#[derive(Clone, Copy)]
enum Role {
    Agent,
    Patient,
    Location,
}

impl Role {
    fn tags(self) -> (&'static str, &'static str) {
        match self {
            Role::Agent => ("B-ARG0", "I-ARG0"),
            Role::Patient => ("B-ARG1", "I-ARG1"),
            Role::Location => ("I-ARGM-LOC", "I-ARGM-LOC"),
        }
    }
}

struct Generator<'r> {
    rng: &'r mut Rng,
    lex: &'static Lexicon,
    web: bool,
}

impl Generator<'_> {
    fn noun_phrase(&mut self, s: &mut ToySentence, role: Role, allow_pron: bool) {
        let (b, i) = role.tags();
        let roll = self.rng.uniform(0.0, 1.0);
        let pron_p = if self.web { 0.3 } else { 0.12 };
        if allow_pron && roll < pron_p {
            s.push(pick(self.rng, self.lex.pron), "PRP", "B-NP", "O", b);
            return;
        }
        let roll = self.rng.uniform(0.0, 1.0);
        if roll < 0.22 {
            s.push(pick(self.rng, self.lex.first), "NNP", "B-NP", "B-PERSON", b);
            if self.rng.bernoulli(0.5) {
                s.push(pick(self.rng, self.lex.last), "NNP", "I-NP", "I-PERSON", i);
            }
        } else if roll < 0.32 {
            s.push(pick(self.rng, self.lex.place), "NNP", "B-NP", "B-GPE", b);
        } else if roll < 0.40 {
            s.push(pick(self.rng, self.lex.org), "NNP", "B-NP", "B-ORG", b);
        } else {
            let plural = self.rng.bernoulli(0.3);
            let mut words: Vec<(&'static str, &'static str)> = Vec::new();
            if !plural || self.rng.bernoulli(0.5) {
                words.push((pick(self.rng, self.lex.det), "DT"));
            }
            let adjs = if self.rng.bernoulli(0.4) {
                1 + usize::from(self.rng.bernoulli(0.25))
            } else {
                0
            };
            for _ in 0..adjs {
                words.push((pick(self.rng, self.lex.adj), "JJ"));
            }
            if plural {
                words.push((pick(self.rng, self.lex.nouns), "NNS"));
            } else {
                words.push((pick(self.rng, self.lex.noun), "NN"));
            }
            for (k, (tok, pos)) in words.into_iter().enumerate() {
                let (chunk, srl) = if k == 0 { ("B-NP", b) } else { ("I-NP", i) };
                s.push(tok, pos, chunk, "O", srl);
            }
        }
    }

    fn sentence(&mut self) -> ToySentence {
        let mut s = ToySentence {
            tokens: Vec::new(),
            pos: Vec::new(),
            chunk: Vec::new(),
            ner: Vec::new(),
            srl: Vec::new(),
        };
        self.noun_phrase(&mut s, Role::Agent, true);
        if self.rng.bernoulli(0.6) {
            s.push(pick(self.rng, self.lex.vbd), "VBD", "B-VP", "O", "B-V");
        } else {
            s.push(pick(self.rng, self.lex.vbz), "VBZ", "B-VP", "O", "B-V");
        }
        self.noun_phrase(&mut s, Role::Patient, false);
        let pp = if self.web { 0.25 } else { 0.45 };
        if self.rng.bernoulli(pp) {
            s.push(
                pick(self.rng, self.lex.prep),
                "IN",
                "B-PP",
                "O",
                "B-ARGM-LOC",
            );
            self.noun_phrase(&mut s, Role::Location, false);
        }
        let adv = if self.web { 0.35 } else { 0.15 };
        if self.rng.bernoulli(adv) {
            s.push(
                pick(self.rng, self.lex.adv),
                "RB",
                "B-ADVP",
                "O",
                "B-ARGM-TMP",
            );
        }
        s.push(".", ".", "O", "O", "O");
        s
    }
}

/// Generates `n` sentences from `domain`.
pub fn generate(n: usize, domain: Domain, rng: &mut Rng) -> Vec<ToySentence> {
    let mut g = Generator {
        rng,
        lex: match domain {
            Domain::News => &NEWS,
            Domain::Web => &WEB,
        },
        web: domain == Domain::Web,
    };
    (0..n).map(|_| g.sentence()).collect()
}

/// Canonical label inventory of one of the four toy tasks.
pub fn task_spec(task: usize) -> TaskSpec {
    let labels = match task {
        0 => POS_LABELS,
        1 => CHUNK_LABELS,
        2 => NER_LABELS,
        _ => SRL_LABELS,
    };
    TaskSpec {
        name: TASK_NAMES[task].to_string(),
        labels: labels.iter().map(|s| s.to_string()).collect(),
        is_main: false,
    }
}

/// Converts generated sentences into tagged sentences of one task.
pub fn to_tagged(sentences: &[ToySentence], task: usize) -> Vec<TaggedSentence> {
    let spec = task_spec(task);
    sentences
        .iter()
        .map(|s| TaggedSentence {
            tokens: s.tokens.clone(),
            tags: s
                .column(task)
                .iter()
                .map(|l| spec.label_id(l).expect("generator only emits known labels"))
                .collect(),
        })
        .collect()
}

/// Sizes of the bundled toy splits.
#[derive(Clone, Copy, Debug)]
pub struct ToySizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub test_ood: usize,
}

pub const BUNDLED_SIZES: ToySizes = ToySizes {
    train: 400,
    dev: 50,
    test: 50,
    test_ood: 50,
};

pub const BUNDLED_SEED: u64 = 20170802;

/// File names of the splits returned by [`toy_splits`], in order.
pub const SPLIT_FILES: [&str; 4] = ["train.conll", "dev.conll", "test.conll", "test_ood.conll"];

/// Raw splits `(train, dev, test, test_ood)` for a seed.
pub fn toy_splits(sizes: ToySizes, seed: u64) -> [Vec<ToySentence>; 4] {
    let base = Rng::new(seed);
    let mut news = base.fork(1);
    let mut web = base.fork(2);
    let train = generate(sizes.train, Domain::News, &mut news);
    let dev = generate(sizes.dev, Domain::News, &mut news);
    let test = generate(sizes.test, Domain::News, &mut news);
    let ood = generate(sizes.test_ood, Domain::Web, &mut web);
    [train, dev, test, ood]
}

/// One corpus per toy task, with the web-domain test set as the extra
/// `test_ood` split.
pub fn toy_corpora(sizes: ToySizes, seed: u64) -> Vec<Corpus> {
    let [train, dev, test, ood] = toy_splits(sizes, seed);
    (0..TASK_NAMES.len())
        .map(|t| {
            let mut extra = BTreeMap::new();
            extra.insert("test_ood".to_string(), to_tagged(&ood, t));
            Corpus {
                task: task_spec(t),
                train: to_tagged(&train, t),
                dev: to_tagged(&dev, t),
                test: to_tagged(&test, t),
                extra_tests: extra,
            }
        })
        .collect()
}

/// Source corpus of the synthetic Random/Copy experiment: `n` news-domain
/// POS sentences, disjoint in generation stream from the bundled splits.
pub fn synthetic_source(n: usize) -> Corpus {
    let mut rng = Rng::new(BUNDLED_SEED).fork(3);
    let mut corpus = Corpus::new(task_spec(0));
    corpus.train = to_tagged(&generate(n, Domain::News, &mut rng), 0);
    corpus
}

/// Renders sentences as five-column text: token, POS, CHUNK, NER, SRL.
pub fn render(sentences: &[ToySentence]) -> String {
    let tokens: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
    let columns: Vec<Vec<Vec<String>>> = sentences
        .iter()
        .map(|s| {
            (0..s.tokens.len())
                .map(|i| {
                    vec![
                        s.pos[i].to_string(),
                        s.chunk[i].to_string(),
                        s.ner[i].to_string(),
                        s.srl[i].to_string(),
                    ]
                })
                .collect()
        })
        .collect();
    write_columns(&tokens, &columns)
}
