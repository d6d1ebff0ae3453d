//! Post records: ingestion, entity extraction, filtering, and corpus summaries.
//!
//! Input is line-delimited JSON, one post per line:
//!
//! ```text
//! {"id":"t1","text":"win! #Fortnite","author":{"followers":10,"listed":0,"verified":false},
//!  "counts":{"likes":5,"retweets":3,"comments":2}}
//! ```
//!
//! `hashtags` and `urls` are optional; when absent they are extracted from the text.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::topics::TopicLexicon;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementCounts {
    pub likes: u64,
    pub retweets: u64,
    pub comments: u64,
}

impl EngagementCounts {
    pub fn new(likes: u64, retweets: u64, comments: u64) -> Self {
        Self { likes, retweets, comments }
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.likes, self.retweets, self.comments]
    }

    pub fn min(&self) -> u64 {
        self.likes.min(self.retweets).min(self.comments)
    }

    pub fn max(&self) -> u64 {
        self.likes.max(self.retweets).max(self.comments)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorAttributes {
    pub followers: u64,
    /// Number of public lists that include the author.
    pub listed: u64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub hashtags: Vec<String>,
    pub urls: Vec<String>,
    pub author: AuthorAttributes,
    pub counts: EngagementCounts,
}

impl TweetRecord {
    pub fn has_link(&self) -> bool {
        !self.urls.is_empty()
    }

    /// Text with links and hashtags removed and whitespace collapsed.
    pub fn cleaned_text(&self) -> String {
        extract_entities(&self.text).cleaned_text
    }
}

/// Hashtags, links, and the residual text of a post.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Entities {
    pub hashtags: Vec<String>,
    pub urls: Vec<String>,
    pub cleaned_text: String,
}

fn is_tag_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `text` into hashtags (`#[A-Za-z0-9_]+`, lowercased, `#` stripped),
/// `http://`/`https://` links (up to the next whitespace), and the remaining
/// text with runs of whitespace collapsed to one space and ends trimmed.
pub fn extract_entities(text: &str) -> Entities {
    let mut out = Entities::default();
    let mut residual = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if rest.starts_with("http://") || rest.starts_with("https://") {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            out.urls.push(rest[..end].to_string());
            residual.push(' ');
            i += end;
            continue;
        }
        let c = rest.chars().next().expect("non-empty rest");
        if c == '#' {
            let body_len = rest[1..].find(|ch: char| !is_tag_char(ch)).unwrap_or(rest.len() - 1);
            if body_len > 0 {
                out.hashtags.push(rest[1..1 + body_len].to_ascii_lowercase());
                residual.push(' ');
                i += 1 + body_len;
                continue;
            }
        }
        residual.push(c);
        i += c.len_utf8();
    }
    out.cleaned_text = residual.split_whitespace().collect::<Vec<_>>().join(" ");
    out
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    text: Option<String>,
    hashtags: Option<Vec<String>>,
    urls: Option<Vec<String>>,
    author: Option<AuthorAttributes>,
    counts: Option<EngagementCounts>,
}

fn normalize_tag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

impl RawRecord {
    fn into_record(self) -> std::result::Result<TweetRecord, String> {
        let id = self.id.ok_or("missing id")?;
        if id.is_empty() {
            return Err("empty id".into());
        }
        let text = self.text.ok_or("missing text")?;
        let author = self.author.ok_or("missing author")?;
        let counts = self.counts.ok_or("missing counts")?;
        let (hashtags, urls) = match (self.hashtags, self.urls) {
            (Some(h), Some(u)) => (h, u),
            (h, u) => {
                let ent = extract_entities(&text);
                (h.unwrap_or(ent.hashtags), u.unwrap_or(ent.urls))
            }
        };
        let hashtags = hashtags.iter().map(|t| normalize_tag(t)).filter(|t| !t.is_empty()).collect();
        Ok(TweetRecord { id, text, hashtags, urls, author, counts })
    }
}

/// A line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<TweetRecord>,
    pub errors: Vec<RecordError>,
}

/// Parses line-delimited JSON records.
///
/// Malformed lines are collected as [`RecordError`]s (1-based line numbers) and
/// skipped; blank lines are ignored. A repeated id fails the whole corpus.
pub fn parse_records<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let parsed: Vec<Option<std::result::Result<TweetRecord, RecordError>>> = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| {
            if line.trim().is_empty() {
                return None;
            }
            let rec = serde_json::from_str::<RawRecord>(line)
                .map_err(|e| format!("invalid record: {e}"))
                .and_then(RawRecord::into_record)
                .map_err(|message| RecordError { line: i + 1, message });
            Some(rec)
        })
        .collect();

    let mut out = ParseOutcome::default();
    let mut seen = HashSet::new();
    for item in parsed.into_iter().flatten() {
        match item {
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    return Err(Error::DuplicateId(rec.id));
                }
                out.records.push(rec);
            }
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

pub fn write_records<W: Write>(mut w: W, records: &[TweetRecord]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub require_text: bool,
    pub min_each_engagement: u64,
    pub min_any_engagement: u64,
    pub require_lexicon_hashtag: bool,
    /// Minimum share of ASCII characters in the text; off when unset.
    pub min_ascii_ratio: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            require_text: true,
            min_each_engagement: 1,
            min_any_engagement: 0,
            require_lexicon_hashtag: true,
            min_ascii_ratio: None,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.min_ascii_ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(format!("filter.min_ascii_ratio must be in [0,1], got {r}")));
            }
        }
        Ok(())
    }
}

/// Why a record was dropped. Reasons are checked in declaration order and a
/// record is counted under the first one it fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExclusionReason {
    NoText,
    MinEachEngagement,
    MinAnyEngagement,
    NoLexiconHashtag,
    AsciiRatio,
}

impl ExclusionReason {
    pub const ALL: [ExclusionReason; 5] = [
        ExclusionReason::NoText,
        ExclusionReason::MinEachEngagement,
        ExclusionReason::MinAnyEngagement,
        ExclusionReason::NoLexiconHashtag,
        ExclusionReason::AsciiRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::NoText => "require_text",
            ExclusionReason::MinEachEngagement => "min_each_engagement",
            ExclusionReason::MinAnyEngagement => "min_any_engagement",
            ExclusionReason::NoLexiconHashtag => "require_lexicon_hashtag",
            ExclusionReason::AsciiRatio => "min_ascii_ratio",
        }
    }
}

pub fn exclusion_reason(rec: &TweetRecord, cfg: &FilterConfig, lexicon: &TopicLexicon) -> Option<ExclusionReason> {
    if cfg.require_text && extract_entities(&rec.text).cleaned_text.is_empty() {
        return Some(ExclusionReason::NoText);
    }
    if rec.counts.min() < cfg.min_each_engagement {
        return Some(ExclusionReason::MinEachEngagement);
    }
    if rec.counts.max() < cfg.min_any_engagement {
        return Some(ExclusionReason::MinAnyEngagement);
    }
    if cfg.require_lexicon_hashtag && !rec.hashtags.iter().any(|h| lexicon.contains(h)) {
        return Some(ExclusionReason::NoLexiconHashtag);
    }
    if let Some(min_ratio) = cfg.min_ascii_ratio {
        let total = rec.text.chars().count();
        let ascii = rec.text.chars().filter(char::is_ascii).count();
        if total > 0 && (ascii as f64) < min_ratio * total as f64 {
            return Some(ExclusionReason::AsciiRatio);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config: FilterConfig,
    pub input_count: usize,
    /// One entry per [`ExclusionReason`], in fixed order.
    pub exclusions: Vec<(ExclusionReason, usize)>,
}

impl Provenance {
    pub fn excluded_total(&self) -> usize {
        self.exclusions.iter().map(|(_, n)| n).sum()
    }

    pub fn write_exclusions_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["reason", "count"])?;
        for (reason, n) in &self.exclusions {
            wtr.write_record([reason.as_str(), &n.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Filtered, id-sorted corpus together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSnapshot {
    pub records: Vec<TweetRecord>,
    pub provenance: Provenance,
}

impl CorpusSnapshot {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Keeps records that pass every rule of `cfg`. An empty result is allowed;
/// callers decide whether to warn.
pub fn apply_filters(records: &[TweetRecord], cfg: &FilterConfig, lexicon: &TopicLexicon) -> CorpusSnapshot {
    let verdicts: Vec<Option<ExclusionReason>> =
        records.par_iter().map(|r| exclusion_reason(r, cfg, lexicon)).collect();

    let mut counts = [0usize; ExclusionReason::ALL.len()];
    let mut kept = Vec::new();
    for (rec, verdict) in records.iter().zip(verdicts) {
        match verdict {
            Some(reason) => counts[reason as usize] += 1,
            None => kept.push(rec.clone()),
        }
    }
    kept.sort_by(|a, b| a.id.cmp(&b.id));
    CorpusSnapshot {
        records: kept,
        provenance: Provenance {
            config: cfg.clone(),
            input_count: records.len(),
            exclusions: ExclusionReason::ALL.iter().map(|&r| (r, counts[r as usize])).collect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub p90: f64,
    pub max: f64,
    pub skewness: f64,
}

impl CountDistribution {
    fn from_values(values: &[f64]) -> Self {
        let s = stats::sorted(values);
        Self {
            min: s[0],
            median: stats::quantile_sorted(&s, 0.5),
            mean: stats::mean(values),
            p90: stats::quantile_sorted(&s, 0.9),
            max: s[s.len() - 1],
            skewness: stats::skewness(values),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub records: usize,
    /// Likes, retweets, comments.
    pub distributions: [CountDistribution; 3],
    /// Pearson correlations (likes–retweets, likes–comments, retweets–comments);
    /// `None` where a column is constant.
    pub correlations: [Option<f64>; 3],
    pub with_link: usize,
    pub without_link: usize,
    pub verified: usize,
    pub unverified: usize,
}

/// Count distributions, pairwise count correlations, and link/verified tallies.
pub fn summarize(corpus: &CorpusSnapshot) -> Result<CorpusStats> {
    summarize_records(&corpus.records)
}

pub fn summarize_records(records: &[TweetRecord]) -> Result<CorpusStats> {
    if records.len() < 2 {
        return Err(Error::degenerate(format!("correlations need at least 2 records, corpus has {}", records.len())));
    }
    let column =
        |f: fn(&EngagementCounts) -> u64| -> Vec<f64> { records.iter().map(|r| f(&r.counts) as f64).collect() };
    let likes = column(|c| c.likes);
    let retweets = column(|c| c.retweets);
    let comments = column(|c| c.comments);
    let with_link = records.iter().filter(|r| r.has_link()).count();
    let verified = records.iter().filter(|r| r.author.verified).count();
    Ok(CorpusStats {
        records: records.len(),
        distributions: [
            CountDistribution::from_values(&likes),
            CountDistribution::from_values(&retweets),
            CountDistribution::from_values(&comments),
        ],
        correlations: [
            stats::pearson(&likes, &retweets),
            stats::pearson(&likes, &comments),
            stats::pearson(&retweets, &comments),
        ],
        with_link,
        without_link: records.len() - with_link,
        verified,
        unverified: records.len() - verified,
    })
}

impl CorpusStats {
    /// Flat `key=value` report, one entry per line.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records={}", self.records);
        for (name, d) in ["likes", "retweets", "comments"].iter().zip(&self.distributions) {
            let _ = writeln!(s, "{name}.min={}", d.min);
            let _ = writeln!(s, "{name}.median={}", d.median);
            let _ = writeln!(s, "{name}.mean={}", d.mean);
            let _ = writeln!(s, "{name}.p90={}", d.p90);
            let _ = writeln!(s, "{name}.max={}", d.max);
            let _ = writeln!(s, "{name}.skewness={}", d.skewness);
        }
        for (name, c) in ["likes_retweets", "likes_comments", "retweets_comments"].iter().zip(&self.correlations) {
            match c {
                Some(v) => writeln!(s, "corr.{name}={v}"),
                None => writeln!(s, "corr.{name}=undefined"),
            }
            .expect("write to string");
        }
        let _ = writeln!(s, "with_link={}", self.with_link);
        let _ = writeln!(s, "without_link={}", self.without_link);
        let _ = writeln!(s, "verified={}", self.verified);
        let _ = writeln!(s, "unverified={}", self.unverified);
        s
    }
}
