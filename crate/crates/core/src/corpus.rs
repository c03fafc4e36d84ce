//! Tokenized corpora, special-token replacement and vocabulary construction.
//!
//! Input text is expected to be lemmatized upstream. Loading only splits on
//! Unicode whitespace, lowercases, and applies an exact-match replacement
//! table (e.g. pronouns or numbers mapped to `<pron>` / `<num>`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Document {
    /// Builds a document from raw text: whitespace split, lowercase, replace.
    pub fn from_text(id: impl Into<String>, text: &str, rules: &ReplacementRules) -> Self {
        let tokens = text
            .split_whitespace()
            .map(|t| rules.apply(&t.to_lowercase()).to_owned())
            .collect();
        Document {
            id: id.into(),
            tokens,
        }
    }
}

/// Documents sorted by id, plus the special tokens the replacement rules
/// can emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    pub language_tag: String,
    special_tokens: BTreeSet<String>,
}

impl Corpus {
    pub fn new(
        mut documents: Vec<Document>,
        language_tag: impl Into<String>,
        special_tokens: BTreeSet<String>,
    ) -> Result<Self> {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in documents.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateDocument(pair[0].id.clone()));
            }
        }
        for doc in &documents {
            if let Some(bad) = doc
                .tokens
                .iter()
                .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
            {
                return Err(Error::invalid(format!(
                    "document {:?} has malformed token {bad:?}",
                    doc.id
                )));
            }
        }
        Ok(Corpus {
            documents,
            language_tag: language_tag.into(),
            special_tokens,
        })
    }

    /// Convenience constructor for in-memory token lists (ids must be unique).
    pub fn from_token_lists<I, S>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<String>)>,
        S: Into<String>,
    {
        let documents = docs
            .into_iter()
            .map(|(id, tokens)| Document {
                id: id.into(),
                tokens,
            })
            .collect();
        Corpus::new(documents, "und", BTreeSet::new())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn special_tokens(&self) -> &BTreeSet<String> {
        &self.special_tokens
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    /// Splits the corpus into documents whose predicate holds and the rest.
    pub fn partition<F: Fn(usize, &Document) -> bool>(&self, pred: F) -> (Corpus, Corpus) {
        let (a, b): (Vec<_>, Vec<_>) = self
            .documents
            .iter()
            .enumerate()
            .partition(|(i, d)| pred(*i, d));
        let strip = |v: Vec<(usize, &Document)>| Corpus {
            documents: v.into_iter().map(|(_, d)| d.clone()).collect(),
            language_tag: self.language_tag.clone(),
            special_tokens: self.special_tokens.clone(),
        };
        (strip(a), strip(b))
    }

    /// Writes the tokenized corpus: a `#lang=` line, a `#special=` line, then
    /// one `id<TAB>space-separated tokens` line per document.
    pub fn write_tokenized(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let special: Vec<&str> = self.special_tokens.iter().map(String::as_str).collect();
        let res = (|| -> std::io::Result<()> {
            writeln!(w, "#lang={}", self.language_tag)?;
            writeln!(w, "#special={}", special.join(" "))?;
            for doc in &self.documents {
                writeln!(w, "{}\t{}", doc.id, doc.tokens.join(" "))?;
            }
            w.flush()
        })();
        res.map_err(|e| Error::io(path, e))
    }

    pub fn read_tokenized(path: &Path) -> Result<Corpus> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut language_tag = String::from("und");
        let mut special = BTreeSet::new();
        let mut documents = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Some(tag) = line.strip_prefix("#lang=") {
                language_tag = tag.to_owned();
            } else if let Some(list) = line.strip_prefix("#special=") {
                special.extend(list.split_whitespace().map(str::to_owned));
            } else if !line.is_empty() {
                let (id, toks) = line.split_once('\t').ok_or_else(|| Error::Parse {
                    path: path.to_owned(),
                    line: lineno + 1,
                    msg: "expected id<TAB>tokens".into(),
                })?;
                documents.push(Document {
                    id: id.to_owned(),
                    tokens: toks.split_whitespace().map(str::to_owned).collect(),
                });
            }
        }
        Corpus::new(documents, language_tag, special)
    }
}

/// Exact-match token replacement (`source -> special token`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplacementRules {
    mapping: BTreeMap<String, String>,
}

impl ReplacementRules {
    /// A special token may not itself be a source, otherwise replacement would
    /// not be idempotent.
    pub fn new(mapping: BTreeMap<String, String>) -> Result<Self> {
        for (src, dst) in &mapping {
            if mapping.contains_key(dst) {
                return Err(Error::invalid(format!(
                    "rule {src:?} -> {dst:?} targets a token that is itself replaced"
                )));
            }
            if src.is_empty() || dst.is_empty() || dst.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("malformed rule {src:?} -> {dst:?}")));
            }
        }
        Ok(ReplacementRules { mapping })
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(a, b)| (a.into(), b.into()))
                .collect(),
        )
    }

    /// Reads `source<TAB>special_token` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = read_utf8(path)?;
        let mut mapping = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                msg: "expected source<TAB>special_token".into(),
            })?;
            mapping.insert(src.to_owned(), dst.trim_end_matches('\r').to_owned());
        }
        Self::new(mapping)
    }

    pub fn apply<'a>(&'a self, token: &'a str) -> &'a str {
        self.mapping.get(token).map_or(token, String::as_str)
    }

    pub fn special_tokens(&self) -> BTreeSet<String> {
        self.mapping.values().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Utf8 {
        path: path.to_owned(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Loads every `*.txt` file directly under `root` as one document.
pub fn load_corpus(root: &Path, rules: &ReplacementRules, language_tag: &str) -> Result<Corpus> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "txt") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::NoDocuments);
    }
    paths.sort();
    let documents = paths
        .par_iter()
        .map(|path| {
            let text = read_utf8(path)?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Document::from_text(id, &text, rules))
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(documents, language_tag, rules.special_tokens())
}

/// Dense word index ordered by descending count, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    special_tokens: BTreeSet<String>,
}

impl Vocabulary {
    fn from_sorted(entries: Vec<(String, u64)>, special_tokens: BTreeSet<String>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Vocabulary {
            words,
            counts,
            index,
            special_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn special_tokens(&self) -> &BTreeSet<String> {
        &self.special_tokens
    }

    /// Maps a document to in-vocabulary indices, dropping unknown tokens.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index_of(t)).collect()
    }

    /// `word<TAB>index<TAB>count` sorted by index, LF line endings.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (i, (w, c)) in self.words.iter().zip(&self.counts).enumerate() {
            out.push_str(&format!("{w}\t{i}\t{c}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path, special_tokens: BTreeSet<String>) -> Result<Self> {
        let text = read_utf8(path)?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let parse_err = |msg: &str| Error::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                msg: msg.to_owned(),
            };
            let mut cols = line.split('\t');
            let (Some(w), Some(i), Some(c), None) = (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(parse_err("expected word<TAB>index<TAB>count"));
            };
            let i: usize = i.parse().map_err(|_| parse_err("bad index"))?;
            if i != entries.len() {
                return Err(parse_err("indices must be 0..V-1 in order"));
            }
            let c: u64 = c.parse().map_err(|_| parse_err("bad count"))?;
            entries.push((w.to_owned(), c));
        }
        Ok(Self::from_sorted(entries, special_tokens))
    }
}

/// Retains words occurring at least `min_count` times, plus every special
/// token of the corpus regardless of its count.
pub fn build_vocabulary(corpus: &Corpus, min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::invalid("min_count must be positive"));
    }
    if corpus.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus.documents() {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    for special in corpus.special_tokens() {
        counts.entry(special.as_str()).or_default();
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(w, c)| *c >= min_count || corpus.special_tokens().contains(*w))
        .map(|(w, c)| (w.to_owned(), c))
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_sorted(
        entries,
        corpus.special_tokens().clone(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub avg_tokens: usize,
    pub total_tokens: usize,
    pub vocabulary_size: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let documents = corpus.len();
    let total_tokens = corpus.total_tokens();
    let avg_tokens = if documents == 0 {
        0
    } else {
        // round half up
        (2 * total_tokens + documents) / (2 * documents)
    };
    let vocabulary_size = corpus
        .documents()
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect::<BTreeSet<_>>()
        .len();
    CorpusStats {
        documents,
        avg_tokens,
        total_tokens,
        vocabulary_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn replacement_after_lowercasing() {
        let rules = ReplacementRules::from_pairs([("the", "<det>")]).unwrap();
        let doc = Document::from_text("a", "The DOG runs", &rules);
        assert_eq!(doc.tokens, toks("<det> dog runs"));
    }

    #[test]
    fn chained_rules_rejected() {
        assert!(ReplacementRules::from_pairs([("he", "<pron>"), ("<pron>", "<x>")]).is_err());
    }

    #[test]
    fn replacement_is_idempotent() {
        let rules = ReplacementRules::from_pairs([("he", "<pron>"), ("5", "<num>")]).unwrap();
        for t in ["he", "5", "dog", "<pron>"] {
            let once = rules.apply(t);
            assert_eq!(rules.apply(once), once);
        }
    }

    #[test]
    fn empty_directory_has_no_documents() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_corpus(dir.path(), &ReplacementRules::default(), "en").unwrap_err();
        assert_eq!(err.to_string(), "no documents");
    }

    #[test]
    fn documents_sorted_by_id() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "x y").unwrap();
        fs::write(dir.path().join("a.txt"), "z").unwrap();
        fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let c = load_corpus(dir.path(), &ReplacementRules::default(), "en").unwrap();
        let ids: Vec<_> = c.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), b"abc\xffdef").unwrap();
        let err = load_corpus(dir.path(), &ReplacementRules::default(), "en").unwrap_err();
        match err {
            Error::Utf8 { offset, path } => {
                assert_eq!(offset, 3);
                assert!(path.ends_with("a.txt"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_directory_names_path() {
        let err = load_corpus(Path::new("/nonexistent/xyz"), &ReplacementRules::default(), "en")
            .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/xyz"));
    }

    #[test]
    fn vocabulary_threshold() {
        let c = Corpus::from_token_lists([("d", toks("a a b"))]).unwrap();
        let v = build_vocabulary(&c, 2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.index_of("b"), None);
    }

    #[test]
    fn vocabulary_lexicographic_ties() {
        let c = Corpus::from_token_lists([("d", toks("b a"))]).unwrap();
        let v = build_vocabulary(&c, 1).unwrap();
        assert_eq!(v.index_of("a"), Some(0));
        assert_eq!(v.index_of("b"), Some(1));
    }

    #[test]
    fn vocabulary_keeps_specials_and_errors_when_empty() {
        let mut specials = BTreeSet::new();
        specials.insert("<num>".to_owned());
        let c = Corpus::new(
            vec![Document {
                id: "d".into(),
                tokens: toks("x y"),
            }],
            "en",
            specials,
        )
        .unwrap();
        let v = build_vocabulary(&c, 5).unwrap();
        assert_eq!(v.words(), ["<num>"]);

        let plain = Corpus::from_token_lists([("d", toks("x y"))]).unwrap();
        assert!(matches!(
            build_vocabulary(&plain, 5),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn vocabulary_counts_sum_to_tokens() {
        let c = Corpus::from_token_lists([("a", toks("x y x z")), ("b", toks("z z q"))]).unwrap();
        let v = build_vocabulary(&c, 1).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.counts().iter().sum::<u64>() as usize, c.total_tokens());
        assert_eq!(v.words(), ["z", "x", "q", "y"]);
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let c = Corpus::from_token_lists([("a", toks("x y x"))]).unwrap();
        let v = build_vocabulary(&c, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        v.write_tsv(&p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x\t0\t2\ny\t1\t1\n");
        assert_eq!(Vocabulary::read_tsv(&p, BTreeSet::new()).unwrap(), v);
    }

    #[test]
    fn stats_rounding() {
        let c = Corpus::from_token_lists([("a", toks("x")), ("b", toks("x y"))]).unwrap();
        let s = corpus_stats(&c);
        assert_eq!(s.avg_tokens, 2);
        assert_eq!(s.documents, 2);
        assert_eq!(s.vocabulary_size, 2);

        let long: Vec<String> = (0..1000).map(|i| format!("w{}", i % 7)).collect();
        let c = Corpus::from_token_lists([("a", long.clone()), ("b", long)]).unwrap();
        assert_eq!(corpus_stats(&c).avg_tokens, 1000);

        let empty = Corpus::from_token_lists(Vec::<(String, Vec<String>)>::new()).unwrap();
        assert_eq!(corpus_stats(&empty).avg_tokens, 0);
    }

    #[test]
    fn tokenized_round_trip() {
        let rules = ReplacementRules::from_pairs([("he", "<pron>")]).unwrap();
        let c = Corpus::new(
            vec![Document::from_text("d1", "He saw it", &rules)],
            "en",
            rules.special_tokens(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("corpus.tsv");
        c.write_tokenized(&p).unwrap();
        assert_eq!(Corpus::read_tokenized(&p).unwrap(), c);
    }
}
