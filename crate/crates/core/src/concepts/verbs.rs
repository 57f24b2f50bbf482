//! English regular past-tense classes, suffix features and the verb corpus.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ConceptError;

/// Lexicon shipped with the crate: one `lemma<TAB>past` pair per line.
pub const BUNDLED_LEXICON: &str = include_str!("../../data/verbs.tsv");

/// Suffix lengths used as features.
pub const SUFFIX_ORDERS: [usize; 3] = [1, 2, 3];

/// Minimum corpus frequency for a suffix to enter the vocabulary.
pub const DEFAULT_MIN_SUFFIX_COUNT: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerbClass {
    #[serde(rename = "+ed")]
    Ed,
    #[serde(rename = "+d")]
    D,
    #[serde(rename = "+ied")]
    Ied,
    #[serde(rename = "+consonant+ed")]
    ConsonantEd,
}

impl VerbClass {
    pub const ALL: [VerbClass; 4] = [
        VerbClass::Ed,
        VerbClass::D,
        VerbClass::Ied,
        VerbClass::ConsonantEd,
    ];

    pub fn index(self) -> usize {
        match self {
            VerbClass::Ed => 0,
            VerbClass::D => 1,
            VerbClass::Ied => 2,
            VerbClass::ConsonantEd => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<VerbClass> {
        VerbClass::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            VerbClass::Ed => "+ed",
            VerbClass::D => "+d",
            VerbClass::Ied => "+ied",
            VerbClass::ConsonantEd => "+consonant+ed",
        }
    }

    /// Category name used in teacher prompts.
    pub fn prompt_name(self) -> &'static str {
        match self {
            VerbClass::Ied => "y_to_ied",
            other => other.label(),
        }
    }

    /// Past form this class produces for `lemma`.
    pub fn apply(self, lemma: &str) -> String {
        match self {
            VerbClass::Ed => format!("{lemma}ed"),
            VerbClass::D => format!("{lemma}d"),
            VerbClass::Ied => {
                let stem = lemma.strip_suffix('y').unwrap_or(lemma);
                format!("{stem}ied")
            }
            VerbClass::ConsonantEd => {
                let last = lemma.chars().last().unwrap_or_default();
                format!("{lemma}{last}ed")
            }
        }
    }
}

impl fmt::Display for VerbClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VerbClass {
    type Err = ConceptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_matches(|c| c == '\'' || c == '`').to_ascii_lowercase().as_str() {
            "+ed" | "ed" => Ok(VerbClass::Ed),
            "+d" | "d" => Ok(VerbClass::D),
            "+ied" | "ied" | "y_to_ied" => Ok(VerbClass::Ied),
            "+consonant+ed" | "consonant+ed" => Ok(VerbClass::ConsonantEd),
            _ => Err(ConceptError::Parse(s.to_string())),
        }
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Assigns a regular past-tense class by matching the past form against the
/// lemma. Rules are tried in the order +ied, +consonant+ed, +d, +ed.
pub fn classify_lemma(lemma: &str, past: &str) -> Result<VerbClass, ConceptError> {
    if lemma.is_empty() || past.is_empty() {
        return Err(ConceptError::EmptyLemma);
    }
    if let Some(stem) = lemma.strip_suffix('y') {
        if past.strip_suffix("ied") == Some(stem) {
            return Ok(VerbClass::Ied);
        }
    }
    if let Some(last) = lemma.chars().last() {
        if last.is_ascii_alphabetic() && !is_vowel(last) {
            if let Some(rest) = past.strip_suffix("ed") {
                if rest.strip_suffix(last) == Some(lemma) {
                    return Ok(VerbClass::ConsonantEd);
                }
            }
        }
    }
    if past.strip_suffix('d') == Some(lemma) {
        return Ok(VerbClass::D);
    }
    if past.strip_suffix("ed") == Some(lemma) {
        return Ok(VerbClass::Ed);
    }
    Err(ConceptError::NoMatch {
        lemma: lemma.to_string(),
        past: past.to_string(),
    })
}

/// Spelling-only guess for lemmas missing from the corpus. Cannot detect
/// consonant doubling, which depends on stress.
pub fn guess_class_by_spelling(lemma: &str) -> VerbClass {
    let chars: Vec<char> = lemma.chars().collect();
    match chars.as_slice() {
        [.., c, 'y'] if !is_vowel(*c) => VerbClass::Ied,
        [.., 'e'] => VerbClass::D,
        _ => VerbClass::Ed,
    }
}

fn final_ngrams(lemma: &str) -> impl Iterator<Item = &str> + '_ {
    SUFFIX_ORDERS.iter().filter_map(move |&n| {
        let len = lemma.chars().count();
        if len < n {
            return None;
        }
        let start = lemma.char_indices().nth(len - n).map(|(i, _)| i)?;
        Some(&lemma[start..])
    })
}

/// Sorted list of word-final character n-grams used as binary features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    suffixes: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_suffixes<I: IntoIterator<Item = String>>(suffixes: I) -> Self {
        let mut suffixes: Vec<String> = suffixes.into_iter().collect();
        suffixes.sort();
        suffixes.dedup();
        let index = suffixes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Self { suffixes, index }
    }

    /// Every final n-gram occurring in at least `min_count` lemmas.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(lemmas: I, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for lemma in lemmas {
            for s in final_ngrams(lemma) {
                *counts.entry(s).or_default() += 1;
            }
        }
        Self::from_suffixes(
            counts
                .into_iter()
                .filter(|&(_, c)| c >= min_count)
                .map(|(s, _)| s.to_string()),
        )
    }

    pub fn len(&self) -> usize {
        self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.suffixes.is_empty()
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn get(&self, suffix: &str) -> Option<u32> {
        self.index.get(suffix).copied()
    }

    /// One suffix per line, sorted.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.suffixes {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    pub fn from_lines(text: &str) -> Self {
        Self::from_suffixes(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        )
    }
}

/// Active feature indices of one lemma, sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
}

impl FeatureVector {
    pub fn contains(&self, i: u32) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

pub fn featurize_lemma(lemma: &str, vocab: &Vocabulary) -> Result<FeatureVector, ConceptError> {
    if lemma.is_empty() {
        return Err(ConceptError::EmptyLemma);
    }
    let mut indices: Vec<u32> = final_ngrams(lemma).filter_map(|s| vocab.get(s)).collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(FeatureVector { indices })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbExample {
    pub lemma: String,
    pub class: VerbClass,
}

/// Classified regular verbs. Lemmas are unique; corpus order is file order.
#[derive(Clone, Debug)]
pub struct VerbCorpus {
    entries: Vec<VerbExample>,
    index: HashMap<String, usize>,
    skipped: usize,
}

impl VerbCorpus {
    /// Reads `lemma<TAB>past[<TAB>features]` lines. Lines with a third
    /// column are kept only when it marks a past form (`PST`), which accepts
    /// Unimorph-style files directly. Irregular and malformed pairs are
    /// counted in [`VerbCorpus::skipped`].
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, ConceptError> {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        let mut skipped = 0;
        for line in reader.lines() {
            let line = line.map_err(|e| ConceptError::Io(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 {
                skipped += 1;
                continue;
            }
            if let Some(feats) = cols.get(2) {
                if !feats.split(';').any(|f| f == "PST") {
                    continue;
                }
            }
            let lemma = cols[0].trim().to_lowercase();
            let past = cols[1].trim().to_lowercase();
            if !lemma.chars().all(|c| c.is_ascii_lowercase()) || index.contains_key(&lemma) {
                skipped += 1;
                continue;
            }
            match classify_lemma(&lemma, &past) {
                Ok(class) => {
                    index.insert(lemma.clone(), entries.len());
                    entries.push(VerbExample { lemma, class });
                }
                Err(_) => skipped += 1,
            }
        }
        Ok(Self {
            entries,
            index,
            skipped,
        })
    }

    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED_LEXICON.as_bytes()).expect("bundled lexicon is valid UTF-8")
    }

    pub fn from_examples(examples: Vec<VerbExample>) -> Self {
        let mut index = HashMap::new();
        let mut entries = Vec::new();
        for ex in examples {
            if index.contains_key(&ex.lemma) {
                continue;
            }
            index.insert(ex.lemma.clone(), entries.len());
            entries.push(ex);
        }
        Self {
            entries,
            index,
            skipped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn entries(&self) -> &[VerbExample] {
        &self.entries
    }

    pub fn lemmas(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.lemma.clone()).collect()
    }

    pub fn class_of(&self, lemma: &str) -> Option<VerbClass> {
        self.index.get(lemma).map(|&i| self.entries[i].class)
    }

    /// Corpus class, falling back to the spelling rule for unknown lemmas.
    pub fn label(&self, lemma: &str) -> VerbClass {
        self.class_of(lemma)
            .unwrap_or_else(|| guess_class_by_spelling(lemma))
    }

    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for e in &self.entries {
            counts[e.class.index()] += 1;
        }
        counts
    }

    pub fn vocabulary(&self, min_count: usize) -> Vocabulary {
        Vocabulary::build(self.entries.iter().map(|e| e.lemma.as_str()), min_count)
    }
}

/// Shared handles to the bundled corpus and its default vocabulary.
pub fn bundled_corpus() -> (Arc<VerbCorpus>, Arc<Vocabulary>) {
    use std::sync::OnceLock;
    static CACHE: OnceLock<(Arc<VerbCorpus>, Arc<Vocabulary>)> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            let corpus = VerbCorpus::bundled();
            let vocab = corpus.vocabulary(DEFAULT_MIN_SUFFIX_COUNT);
            (Arc::new(corpus), Arc::new(vocab))
        })
        .clone()
}
