//! Hashtag → topic tagging.
//!
//! A [`TopicLexicon`] maps lowercase hashtags to one or more of twelve topic
//! categories. Tagging a post takes the union of the categories of its
//! hashtags; a post with no lexicon match is tagged [`Topic::Other`] alone.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Starter lexicon covering the sample hashtags of every category.
pub const BUILTIN_TOPIC_LEXICON: &str = include_str!("../data/topics.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Topic {
    Technology,
    Sports,
    Games,
    Idioms,
    MoviesTv,
    Politics,
    Music,
    Celebrity,
    Art,
    Business,
    News,
    Other,
}

impl Topic {
    pub const ALL: [Topic; 12] = [
        Topic::Technology,
        Topic::Sports,
        Topic::Games,
        Topic::Idioms,
        Topic::MoviesTv,
        Topic::Politics,
        Topic::Music,
        Topic::Celebrity,
        Topic::Art,
        Topic::Business,
        Topic::News,
        Topic::Other,
    ];

    /// The eleven substantive categories; `Other` is the regression reference level.
    pub const NAMED: [Topic; 11] = [
        Topic::Technology,
        Topic::Sports,
        Topic::Games,
        Topic::Idioms,
        Topic::MoviesTv,
        Topic::Politics,
        Topic::Music,
        Topic::Celebrity,
        Topic::Art,
        Topic::Business,
        Topic::News,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Human-readable label as used in lexicon files.
    pub fn label(self) -> &'static str {
        match self {
            Topic::Technology => "Technology",
            Topic::Sports => "Sports",
            Topic::Games => "Games",
            Topic::Idioms => "Idioms",
            Topic::MoviesTv => "Movies/TV",
            Topic::Politics => "Politics",
            Topic::Music => "Music",
            Topic::Celebrity => "Celebrity",
            Topic::Art => "Art",
            Topic::Business => "Business",
            Topic::News => "News",
            Topic::Other => "Other",
        }
    }

    /// Identifier-safe name used for design-matrix columns and CSV headers.
    pub fn slug(self) -> &'static str {
        match self {
            Topic::Technology => "technology",
            Topic::Sports => "sports",
            Topic::Games => "games",
            Topic::Idioms => "idioms",
            Topic::MoviesTv => "movies_tv",
            Topic::Politics => "politics",
            Topic::Music => "music",
            Topic::Celebrity => "celebrity",
            Topic::Art => "art",
            Topic::Business => "business",
            Topic::News => "news",
            Topic::Other => "other",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Topic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let topic = match key.as_str() {
            "technology" => Topic::Technology,
            "sports" => Topic::Sports,
            "games" => Topic::Games,
            "idioms" => Topic::Idioms,
            "movies/tv" | "movies_tv" => Topic::MoviesTv,
            "politics" => Topic::Politics,
            "music" => Topic::Music,
            "celebrity" => Topic::Celebrity,
            "art" | "arts" => Topic::Art,
            "business" => Topic::Business,
            "news" => Topic::News,
            "other" => Topic::Other,
            _ => return Err(Error::input(format!("unknown topic label {s:?}"))),
        };
        Ok(topic)
    }
}

/// Twelve topic flags, one per [`Topic`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TopicSet {
    flags: [bool; 12],
}

impl TopicSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_topics<I: IntoIterator<Item = Topic>>(topics: I) -> Self {
        let mut set = Self::empty();
        for t in topics {
            set.insert(t);
        }
        set
    }

    pub fn insert(&mut self, topic: Topic) {
        self.flags[topic.index()] = true;
    }

    pub fn contains(&self, topic: Topic) -> bool {
        self.flags[topic.index()]
    }

    pub fn is_empty(&self) -> bool {
        !self.flags.iter().any(|&f| f)
    }

    pub fn len(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn flags(&self) -> &[bool; 12] {
        &self.flags
    }

    pub fn iter(&self) -> impl Iterator<Item = Topic> + '_ {
        Topic::ALL.into_iter().filter(|t| self.contains(*t))
    }

    pub fn union_with(&mut self, other: &TopicSet) {
        for (a, b) in self.flags.iter_mut().zip(other.flags) {
            *a |= b;
        }
    }
}

/// Annotated hashtag → topic-set mapping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicLexicon {
    mapping: BTreeMap<String, TopicSet>,
}

fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

impl TopicLexicon {
    /// Reads "hashtag,topic" CSV rows; repeated hashtags accumulate labels.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (Some(hcol), Some(tcol)) = (col("hashtag"), col("topic")) else {
            return Err(Error::Lexicon { name: "topics".into(), message: "header must be \"hashtag,topic\"".into() });
        };

        let mut mapping: BTreeMap<String, TopicSet> = BTreeMap::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            // Row numbers are 1-based and count the header line.
            let line = i + 2;
            let tag = normalize_hashtag(row.get(hcol).unwrap_or(""));
            let label = row.get(tcol).unwrap_or("");
            if tag.is_empty() {
                return Err(Error::Lexicon { name: "topics".into(), message: format!("row {line}: empty hashtag") });
            }
            let topic: Topic = label.parse().map_err(|_| Error::Lexicon {
                name: "topics".into(),
                message: format!("row {line}: unknown topic label {label:?} for #{tag}"),
            })?;
            mapping.entry(tag).or_default().insert(topic);
        }
        if mapping.is_empty() {
            return Err(Error::Lexicon { name: "topics".into(), message: "no hashtag rows".into() });
        }
        Ok(Self { mapping })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn builtin() -> Self {
        Self::from_reader(BUILTIN_TOPIC_LEXICON.as_bytes()).expect("builtin topic lexicon is valid")
    }

    pub fn get(&self, hashtag: &str) -> Option<&TopicSet> {
        self.mapping.get(hashtag)
    }

    pub fn contains(&self, hashtag: &str) -> bool {
        self.mapping.contains_key(hashtag)
    }

    /// Lexicon hashtags in sorted order.
    pub fn hashtags(&self) -> impl Iterator<Item = &str> {
        self.mapping.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Topic set of a post's hashtags; falls back to `{Other}` when nothing matches.
    pub fn tag<S: AsRef<str>>(&self, hashtags: &[S]) -> TopicSet {
        let mut set = TopicSet::empty();
        for tag in hashtags {
            if let Some(topics) = self.mapping.get(tag.as_ref()) {
                set.union_with(topics);
            }
        }
        if set.is_empty() {
            set.insert(Topic::Other);
        }
        set
    }
}

/// Free-function form of [`TopicLexicon::from_path`].
pub fn load_topic_lexicon(path: &Path) -> Result<TopicLexicon> {
    TopicLexicon::from_path(path)
}

/// Free-function form of [`TopicLexicon::tag`].
pub fn tag<S: AsRef<str>>(hashtags: &[S], lexicon: &TopicLexicon) -> TopicSet {
    lexicon.tag(hashtags)
}
