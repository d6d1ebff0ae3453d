//! Textual-complexity and valence features of a post.

mod lexicon;
mod sentiment;
mod tokenize;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lexicon::{LexiconTable, WordList};
pub use sentiment::{is_booster, is_negator, normalize, raw_valence, sentiment, sentiment_tokens, SentimentConfig};
pub use tokenize::{is_emoticon, split_sentences, tokenize, EMOTICONS};

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};
use crate::topics::{Topic, TopicLexicon, TopicSet};

pub const VALENCE_RANGE: (f64, f64) = (-4.0, 4.0);
pub const SUBJECTIVITY_RANGE: (f64, f64) = (0.0, 1.0);
pub const CONCRETENESS_RANGE: (f64, f64) = (1.0, 5.0);

const BUILTIN_VALENCE: &str = include_str!("../../data/sentiment.tsv");
const BUILTIN_SUBJECTIVITY: &str = include_str!("../../data/subjectivity.tsv");
const BUILTIN_CONCRETENESS: &str = include_str!("../../data/concreteness.tsv");
const BUILTIN_EASY_WORDS: &str = include_str!("../../data/easy_words.txt");

const DALE_CHALL_PCT_WEIGHT: f64 = 0.1579;
const DALE_CHALL_ASL_WEIGHT: f64 = 0.0496;
const DALE_CHALL_ADJUSTMENT: f64 = 3.6365;

/// Dale–Chall score. Emoticons are not words; a word is difficult when it is
/// not in `easy_words`. Text without words scores 0.
pub fn readability(text: &str, easy_words: &WordList) -> f64 {
    let words: Vec<String> = tokenize(text).into_iter().filter(|t| !is_emoticon(t)).collect();
    if words.is_empty() {
        return 0.0;
    }
    let sentences = split_sentences(text).len().max(1);
    let difficult = words.iter().filter(|w| !easy_words.contains(w)).count();
    readability_from_counts(words.len(), difficult, sentences)
}

pub fn readability_from_counts(words: usize, difficult: usize, sentences: usize) -> f64 {
    if words == 0 {
        return 0.0;
    }
    let pct = 100.0 * difficult as f64 / words as f64;
    let asl = words as f64 / sentences.max(1) as f64;
    let mut score = DALE_CHALL_PCT_WEIGHT * pct + DALE_CHALL_ASL_WEIGHT * asl;
    if pct > 5.0 {
        score += DALE_CHALL_ADJUSTMENT;
    }
    score
}

fn mean_of_matches<S: AsRef<str>>(tokens: &[S], lexicon: &LexiconTable) -> Option<f64> {
    let (sum, n) =
        tokens.iter().filter_map(|t| lexicon.get(t.as_ref())).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean rating of the tokens found in `lexicon`; `None` when nothing matches.
pub fn concreteness<S: AsRef<str>>(tokens: &[S], lexicon: &LexiconTable) -> Option<f64> {
    mean_of_matches(tokens, lexicon)
}

/// Mean subjectivity of matched tokens, 0 when nothing matches.
pub fn subjectivity<S: AsRef<str>>(tokens: &[S], lexicon: &LexiconTable) -> f64 {
    mean_of_matches(tokens, lexicon).unwrap_or(0.0)
}

/// Character length as a count of Unicode scalar values.
pub fn length(cleaned_text: &str) -> usize {
    cleaned_text.chars().count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityFeatures {
    pub readability: f64,
    pub concreteness: Option<f64>,
    pub length: usize,
    pub has_link: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValenceFeatures {
    pub sentiment: f64,
    pub subjectivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub complexity: ComplexityFeatures,
    pub valence: ValenceFeatures,
    pub topics: TopicSet,
    pub log_followers: f64,
    pub log_listed: f64,
    pub verified: bool,
}

impl FeatureVector {
    pub fn concreteness_missing(&self) -> bool {
        self.complexity.concreteness.is_none()
    }
}

/// Optional lexicon file overrides; unset entries use the shipped starter lexicons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    pub valence: Option<PathBuf>,
    pub subjectivity: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub easy_words: Option<PathBuf>,
    pub topics: Option<PathBuf>,
}

impl LexiconPaths {
    /// Resolves relative paths against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let fix = |p: &Option<PathBuf>| p.as_ref().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) });
        Self {
            valence: fix(&self.valence),
            subjectivity: fix(&self.subjectivity),
            concreteness: fix(&self.concreteness),
            easy_words: fix(&self.easy_words),
            topics: fix(&self.topics),
        }
    }
}

/// Immutable lexicon bundle shared by every featurization call.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub valence: LexiconTable,
    pub subjectivity: LexiconTable,
    pub concreteness: LexiconTable,
    pub easy_words: WordList,
    pub topics: TopicLexicon,
}

impl Lexicons {
    pub fn builtin() -> Self {
        let parse = |name: &str, range, src: &str| {
            LexiconTable::from_reader(name, range, src.as_bytes()).expect("builtin lexicon is valid")
        };
        Self {
            valence: parse("valence", VALENCE_RANGE, BUILTIN_VALENCE),
            subjectivity: parse("subjectivity", SUBJECTIVITY_RANGE, BUILTIN_SUBJECTIVITY),
            concreteness: parse("concreteness", CONCRETENESS_RANGE, BUILTIN_CONCRETENESS),
            easy_words: WordList::from_reader(BUILTIN_EASY_WORDS.as_bytes()).expect("builtin word list"),
            topics: TopicLexicon::builtin(),
        }
    }

    pub fn load(paths: &LexiconPaths) -> Result<Self> {
        let mut lex = Self::builtin();
        let with_name = |name: &str, path: &Path, e: Error| match e {
            Error::Io(io) => Error::Lexicon { name: name.into(), message: format!("{}: {io}", path.display()) },
            other => other,
        };
        if let Some(p) = &paths.valence {
            lex.valence =
                LexiconTable::from_path("valence", VALENCE_RANGE, p).map_err(|e| with_name("valence", p, e))?;
        }
        if let Some(p) = &paths.subjectivity {
            lex.subjectivity = LexiconTable::from_path("subjectivity", SUBJECTIVITY_RANGE, p)
                .map_err(|e| with_name("subjectivity", p, e))?;
        }
        if let Some(p) = &paths.concreteness {
            lex.concreteness = LexiconTable::from_path("concreteness", CONCRETENESS_RANGE, p)
                .map_err(|e| with_name("concreteness", p, e))?;
        }
        if let Some(p) = &paths.easy_words {
            lex.easy_words = WordList::from_path(p).map_err(|e| with_name("easy_words", p, e))?;
        }
        if let Some(p) = &paths.topics {
            lex.topics = TopicLexicon::from_path(p).map_err(|e| with_name("topics", p, e))?;
        }
        Ok(lex)
    }
}

/// Feature vector of one post. Text features are computed on the text with
/// links and hashtags removed; topics come from the post's hashtags.
pub fn featurize(record: &TweetRecord, lexicons: &Lexicons, cfg: &SentimentConfig) -> FeatureVector {
    let topics = lexicons.topics.tag(&record.hashtags);
    featurize_with_topics(record, lexicons, cfg, topics)
}

pub fn featurize_with_topics(
    record: &TweetRecord,
    lexicons: &Lexicons,
    cfg: &SentimentConfig,
    topics: TopicSet,
) -> FeatureVector {
    let cleaned = record.cleaned_text();
    let tokens = tokenize(&cleaned);
    FeatureVector {
        id: record.id.clone(),
        complexity: ComplexityFeatures {
            readability: readability(&cleaned, &lexicons.easy_words),
            concreteness: concreteness(&tokens, &lexicons.concreteness),
            length: length(&cleaned),
            has_link: record.has_link(),
        },
        valence: ValenceFeatures {
            sentiment: sentiment_tokens(&tokens, &lexicons.valence, cfg),
            subjectivity: subjectivity(&tokens, &lexicons.subjectivity),
        },
        topics,
        log_followers: (record.author.followers as f64).ln_1p(),
        log_listed: (record.author.listed as f64).ln_1p(),
        verified: record.author.verified,
    }
}

/// Featurizes records in parallel, preserving order.
pub fn featurize_all(records: &[TweetRecord], lexicons: &Lexicons, cfg: &SentimentConfig) -> Vec<FeatureVector> {
    records.par_iter().map(|r| featurize(r, lexicons, cfg)).collect()
}

pub fn feature_csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "id",
        "readability",
        "concreteness",
        "concreteness_missing",
        "length",
        "has_link",
        "sentiment",
        "subjectivity",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(Topic::ALL.iter().map(|t| format!("topic_{}", t.slug())));
    h.extend(["log_followers", "log_listed", "verified"].iter().map(|s| s.to_string()));
    h
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_features_csv<W: Write>(w: W, features: &[FeatureVector]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(feature_csv_header())?;
    for f in features {
        let mut row = vec![
            f.id.clone(),
            f.complexity.readability.to_string(),
            f.complexity.concreteness.map(|c| c.to_string()).unwrap_or_default(),
            flag(f.concreteness_missing()).to_string(),
            f.complexity.length.to_string(),
            flag(f.complexity.has_link).to_string(),
            f.valence.sentiment.to_string(),
            f.valence.subjectivity.to_string(),
        ];
        row.extend(f.topics.flags().iter().map(|&b| flag(b).to_string()));
        row.push(f.log_followers.to_string());
        row.push(f.log_listed.to_string());
        row.push(flag(f.verified).to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(r: R) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let expected = feature_csv_header();
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(Error::input("features.csv header does not match the expected columns"));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let num = |col: usize| -> Result<f64> {
            row[col].parse::<f64>().map_err(|_| Error::Record {
                line,
                message: format!("column {} is not a number: {:?}", expected[col], &row[col]),
            })
        };
        let boolean = |col: usize| -> Result<bool> {
            match &row[col] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => {
                    Err(Error::Record { line, message: format!("column {} is not 0/1: {other:?}", expected[col]) })
                }
            }
        };
        let concreteness = if row[2].is_empty() { None } else { Some(num(2)?) };
        let mut topics = TopicSet::empty();
        for (k, t) in Topic::ALL.iter().enumerate() {
            if boolean(8 + k)? {
                topics.insert(*t);
            }
        }
        out.push(FeatureVector {
            id: row[0].to_string(),
            complexity: ComplexityFeatures {
                readability: num(1)?,
                concreteness,
                length: num(4)? as usize,
                has_link: boolean(5)?,
            },
            valence: ValenceFeatures { sentiment: num(6)?, subjectivity: num(7)? },
            topics,
            log_followers: num(20)?,
            log_listed: num(21)?,
            verified: boolean(22)?,
        });
    }
    Ok(out)
}
