//! Lexicon-based compound sentiment.
//!
//! Each lexicon word contributes its valence. An intensifier directly before
//! it pushes the valence further from zero by `booster_increment` (a dampener
//! pulls it toward zero by the same amount), and a negator among the
//! preceding `negation_window` tokens multiplies it by `negation_factor`. The
//! summed valence is squashed with `raw / sqrt(raw² + alpha)`.

use serde::{Deserialize, Serialize};

use super::lexicon::LexiconTable;
use super::tokenize::tokenize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    pub normalization_alpha: f64,
    pub booster_increment: f64,
    pub negation_factor: f64,
    pub negation_window: usize,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        Self { normalization_alpha: 15.0, booster_increment: 0.293, negation_factor: -0.74, negation_window: 3 }
    }
}

impl SentimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.normalization_alpha > 0.0) {
            return Err(Error::config("sentiment.normalization_alpha must be > 0"));
        }
        if self.negation_window < 1 {
            return Err(Error::config("sentiment.negation_window must be >= 1"));
        }
        if !self.booster_increment.is_finite() || !self.negation_factor.is_finite() {
            return Err(Error::config("sentiment constants must be finite"));
        }
        Ok(())
    }
}

const INTENSIFIERS: &[&str] = &[
    "absolutely",
    "amazingly",
    "awfully",
    "completely",
    "considerably",
    "decidedly",
    "deeply",
    "enormously",
    "entirely",
    "especially",
    "exceptionally",
    "extremely",
    "fabulously",
    "greatly",
    "highly",
    "hugely",
    "incredibly",
    "intensely",
    "majorly",
    "particularly",
    "purely",
    "quite",
    "really",
    "remarkably",
    "so",
    "substantially",
    "thoroughly",
    "totally",
    "tremendously",
    "unbelievably",
    "unusually",
    "utterly",
    "very",
];

const DAMPENERS: &[&str] = &[
    "almost",
    "barely",
    "hardly",
    "kinda",
    "marginally",
    "occasionally",
    "partly",
    "scarcely",
    "slightly",
    "somewhat",
    "sorta",
];

const NEGATORS: &[&str] =
    &["not", "no", "never", "none", "nobody", "nothing", "nowhere", "neither", "nor", "cannot", "without", "aint"];

pub fn is_negator(token: &str) -> bool {
    NEGATORS.contains(&token) || token.ends_with("n't")
}

/// Intensifier or dampener.
pub fn is_booster(token: &str) -> bool {
    booster_direction(token) != 0.0
}

fn booster_direction(token: &str) -> f64 {
    if INTENSIFIERS.contains(&token) {
        1.0
    } else if DAMPENERS.contains(&token) {
        -1.0
    } else {
        0.0
    }
}

/// Sum of adjusted valences over `tokens`, or `None` when no token is in the lexicon.
pub fn raw_valence(tokens: &[String], lexicon: &LexiconTable, cfg: &SentimentConfig) -> Option<f64> {
    let mut total = 0.0;
    let mut matched = false;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(mut v) = lexicon.get(tok) else { continue };
        matched = true;
        if i > 0 && v != 0.0 {
            v += booster_direction(&tokens[i - 1]) * cfg.booster_increment * v.signum();
        }
        let start = i.saturating_sub(cfg.negation_window);
        if tokens[start..i].iter().any(|t| is_negator(t)) {
            v *= cfg.negation_factor;
        }
        total += v;
    }
    matched.then_some(total)
}

/// `raw / sqrt(raw² + alpha)`, clamped to [−1, 1].
pub fn normalize(raw: f64, alpha: f64) -> f64 {
    (raw / (raw * raw + alpha).sqrt()).clamp(-1.0, 1.0)
}

pub fn sentiment_tokens(tokens: &[String], lexicon: &LexiconTable, cfg: &SentimentConfig) -> f64 {
    raw_valence(tokens, lexicon, cfg).map_or(0.0, |raw| normalize(raw, cfg.normalization_alpha))
}

/// Compound sentiment of `text` in [−1, 1]; 0 when no word is in the lexicon.
pub fn sentiment(text: &str, lexicon: &LexiconTable, cfg: &SentimentConfig) -> f64 {
    sentiment_tokens(&tokenize(text), lexicon, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> LexiconTable {
        LexiconTable::from_pairs("v", (-4.0, 4.0), [("good", 1.9), ("bad", -2.5)]).unwrap()
    }

    #[test]
    fn empty_text_is_neutral() {
        assert_eq!(sentiment("", &lex(), &SentimentConfig::default()), 0.0);
        assert_eq!(sentiment("the table", &lex(), &SentimentConfig::default()), 0.0);
    }

    #[test]
    fn single_word() {
        let s = sentiment("good", &lex(), &SentimentConfig::default());
        assert!((s - 1.9 / (1.9f64 * 1.9 + 15.0).sqrt()).abs() < 1e-15);
        assert!((s - 0.4404).abs() < 1e-4);
    }

    #[test]
    fn negation_flips_and_shrinks() {
        let s = sentiment("not good", &lex(), &SentimentConfig::default());
        assert!((s - (-0.3413)).abs() < 1e-4, "{s}");
        // Negator three tokens back is still inside the default window.
        let far = sentiment("not at all good", &lex(), &SentimentConfig::default());
        assert_eq!(far, s);
        let beyond = sentiment("not at all that good", &lex(), &SentimentConfig::default());
        assert!(beyond > 0.0);
        assert!(sentiment("isn't good", &lex(), &SentimentConfig::default()) < 0.0);
    }

    #[test]
    fn boosters_move_away_from_zero() {
        let cfg = SentimentConfig::default();
        let raw = |t: &str| raw_valence(&tokenize(t), &lex(), &cfg).unwrap();
        assert!((raw("very good") - (1.9 + 0.293)).abs() < 1e-12);
        assert!((raw("very bad") - (-2.5 - 0.293)).abs() < 1e-12);
        assert!((raw("slightly good") - (1.9 - 0.293)).abs() < 1e-12);
        assert!((raw("not very good") - (1.9 + 0.293) * -0.74).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SentimentConfig { normalization_alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(SentimentConfig { negation_window: 0, ..Default::default() }.validate().is_err());
        assert!(SentimentConfig::default().validate().is_ok());
    }
}
