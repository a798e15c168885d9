use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const UNK: &str = "<unk>";

/// Word and character inventories; id 0 of each is the unknown symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    id_to_char: Vec<char>,
    #[serde(skip)]
    token_to_id: HashMap<String, usize>,
    #[serde(skip)]
    char_to_id: HashMap<char, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_parts(Vec::new(), Vec::new())
    }
}

impl Vocabulary {
    pub const UNK_ID: usize = 0;

    /// Builds the maps from known tokens and characters, in the given order.
    /// Duplicates are ignored after their first occurrence.
    pub fn from_parts(tokens: Vec<String>, chars: Vec<char>) -> Self {
        let mut v = Vocabulary {
            id_to_token: vec![UNK.to_string()],
            // U+FFFD stands in for unknown characters.
            id_to_char: vec!['\u{FFFD}'],
            token_to_id: HashMap::new(),
            char_to_id: HashMap::new(),
        };
        for t in tokens {
            if t != UNK && !v.token_to_id.contains_key(&t) {
                v.token_to_id.insert(t.clone(), v.id_to_token.len());
                v.id_to_token.push(t);
            }
        }
        for c in chars {
            if c != '\u{FFFD}' && !v.char_to_id.contains_key(&c) {
                v.char_to_id.insert(c, v.id_to_char.len());
                v.id_to_char.push(c);
            }
        }
        v
    }

    /// Restores the lookup maps after deserialization.
    pub fn rebuild_index(&mut self) {
        self.token_to_id = self
            .id_to_token
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, t)| (t.clone(), i))
            .collect();
        self.char_to_id = self
            .id_to_char
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| (c, i))
            .collect();
    }

    /// Number of word ids including unk.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.len() == 1
    }

    pub fn char_len(&self) -> usize {
        self.id_to_char.len()
    }

    pub fn word_id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_to_id.get(&c).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn char_ids(&self, token: &str) -> Vec<usize> {
        token.chars().map(|c| self.char_id(c)).collect()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn chars(&self) -> &[char] {
        &self.id_to_char
    }
}
