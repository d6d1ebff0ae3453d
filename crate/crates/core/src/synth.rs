//! Seeded synthetic corpora with correlated heavy-tailed engagement counts.
//!
//! Counts follow a one-factor log-normal model. For post `i` and engagement
//! type `t`:
//!
//! ```text
//! ln c_it = mean_t + loading_t · z_i + noise_t · ε_it + Σ planted effects
//! z_i ~ N(0, popularity_sigma²),  ε_it ~ N(0, 1)
//! count = max(1, round(exp(ln c_it)))
//! ```
//!
//! Text is assembled from the shipped lexicons so that the feature extractors
//! see real signal (topic hashtags, links, sentiment, subjective, concrete and
//! difficult words). Planted effects are applied to the *extracted* features,
//! so the effect a regression should recover is exactly the planted one.
//! Author attributes are drawn independently of everything else.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorAttributes, EngagementCounts, TweetRecord};
use crate::error::{Error, Result};
use crate::stats::{mean, pearson, std_dev};
use crate::textfeat::{featurize, is_booster, is_negator, FeatureVector, Lexicons, SentimentConfig};
use crate::topics::{Topic, TopicSet};
use crate::unexpect::{topic_column, Target};

/// Pairwise raw-count correlations (likes–retweets, likes–comments, retweets–comments).
pub const DEFAULT_TARGET_CORRELATIONS: [f64; 3] = [0.96, 0.80, 0.81];
pub const DEFAULT_LOG_MEANS: [f64; 3] = [3.0, 2.0, 1.5];
pub const DEFAULT_LOG_SD: [f64; 3] = [1.0, 1.0, 1.0];
pub const DEFAULT_POPULARITY_SIGMA: f64 = 1.0;

/// Output of [`calibrate_correlations`] for the defaults above.
pub const CALIBRATED_LOADINGS: [f64; 3] = [0.9840144047520792, 0.9908304799981789, 0.8842449613007978];
pub const CALIBRATED_NOISE: [f64; 3] = [0.17808888578575363, 0.13511091705180023, 0.46702339172053325];

/// Monte Carlo sample size used by calibration.
pub const CALIBRATION_DRAWS: usize = 100_000;
const CALIBRATION_SEED: u64 = 0x5eed_ca1b;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedEffect {
    /// A design feature: `has_link`, `verified`, `concreteness_missing`,
    /// `topic_<slug>`, or a continuous feature name.
    pub feature: String,
    pub target: Target,
    /// Additive log-count effect per unit of a binary feature, or per
    /// standard deviation of a continuous one.
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub popularity_sigma: f64,
    /// Mean log-count per type (likes, retweets, comments).
    pub type_log_means: [f64; 3],
    /// Marginal log-count standard deviation per type, before planted effects.
    pub type_log_sd: [f64; 3],
    /// Explicit factor loadings; calibrated from `target_correlations` when unset.
    pub type_loadings: Option<[f64; 3]>,
    /// Explicit idiosyncratic log-noise sds; set together with `type_loadings`.
    pub type_noise: Option<[f64; 3]>,
    /// Multiplies the resolved noise sds, e.g. to inflate one type's noise.
    pub noise_multipliers: [f64; 3],
    pub target_correlations: [f64; 3],
    pub planted_effects: Vec<PlantedEffect>,
    pub link_probability: f64,
    pub verified_probability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 7,
            popularity_sigma: DEFAULT_POPULARITY_SIGMA,
            type_log_means: DEFAULT_LOG_MEANS,
            type_log_sd: DEFAULT_LOG_SD,
            type_loadings: None,
            type_noise: None,
            noise_multipliers: [1.0; 3],
            target_correlations: DEFAULT_TARGET_CORRELATIONS,
            planted_effects: Vec::new(),
            link_probability: 0.5,
            verified_probability: 0.15,
        }
    }
}

const BINARY_FEATURES: [&str; 3] = ["has_link", "verified", "concreteness_missing"];
const CONTINUOUS_FEATURES: [&str; 7] =
    ["readability", "concreteness", "length", "sentiment", "subjectivity", "followers", "listed"];

fn known_feature(name: &str) -> bool {
    BINARY_FEATURES.contains(&name)
        || CONTINUOUS_FEATURES.contains(&name)
        || Topic::ALL.iter().any(|t| topic_column(*t) == name)
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::config("synth.n must be >= 1"));
        }
        let nonneg = |name: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite() && *x >= 0.0) {
                Ok(())
            } else {
                Err(Error::config(format!("synth.{name} must be finite and >= 0")))
            }
        };
        nonneg("popularity_sigma", &[self.popularity_sigma])?;
        nonneg("type_log_sd", &self.type_log_sd)?;
        nonneg("noise_multipliers", &self.noise_multipliers)?;
        if let Some(n) = &self.type_noise {
            nonneg("type_noise", n)?;
        }
        if self.type_log_means.iter().chain(self.type_loadings.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::config("synth.type_log_means and synth.type_loadings must be finite"));
        }
        if self.type_loadings.is_some() != self.type_noise.is_some() {
            return Err(Error::config("synth.type_loadings and synth.type_noise must be set together"));
        }
        if self.target_correlations.iter().any(|c| !(*c > -1.0 && *c < 1.0)) {
            return Err(Error::config("synth.target_correlations must lie in (-1, 1)"));
        }
        for p in [self.link_probability, self.verified_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("synth probabilities must lie in [0, 1]"));
            }
        }
        for e in &self.planted_effects {
            if !known_feature(&e.feature) {
                return Err(Error::config(format!("synth.planted_effects: unknown feature {:?}", e.feature)));
            }
            if !e.size.is_finite() {
                return Err(Error::config("synth.planted_effects: size must be finite"));
            }
        }
        Ok(())
    }

    /// Loadings and noise sds actually used, after calibration and multipliers.
    pub fn resolved_parameters(&self) -> Result<([f64; 3], [f64; 3])> {
        let (loadings, noise) = match (self.type_loadings, self.type_noise) {
            (Some(l), Some(n)) => (l, n),
            (None, None) => {
                if self.target_correlations == DEFAULT_TARGET_CORRELATIONS
                    && self.type_log_sd == DEFAULT_LOG_SD
                    && self.type_log_means == DEFAULT_LOG_MEANS
                    && self.popularity_sigma == DEFAULT_POPULARITY_SIGMA
                {
                    (CALIBRATED_LOADINGS, CALIBRATED_NOISE)
                } else {
                    calibrate_correlations(self, 0.01)?
                }
            }
            _ => return Err(Error::config("synth.type_loadings and synth.type_noise must be set together")),
        };
        let noise = [0, 1, 2].map(|k| noise[k] * self.noise_multipliers[k]);
        Ok((loadings, noise))
    }
}

/// Loadings on a unit-variance factor that reproduce the pairwise
/// correlations `rho = (ρ_lr, ρ_lc, ρ_rc)`.
fn one_factor(rho: [f64; 3]) -> Result<[f64; 3]> {
    let infeasible = || {
        Error::config(format!(
            "target correlations {rho:?} cannot be produced by a single shared popularity factor; \
             use a two-factor configuration or set type_loadings/type_noise explicitly"
        ))
    };
    let zero = |v: f64| v.abs() < 1e-12;
    let [lr, lc, rc] = rho;
    let q = match (zero(lr), zero(lc), zero(rc)) {
        (true, true, true) => [0.0; 3],
        (false, true, true) => [lr.abs().sqrt(), lr.signum() * lr.abs().sqrt(), 0.0],
        (true, false, true) => [lc.abs().sqrt(), 0.0, lc.signum() * lc.abs().sqrt()],
        (true, true, false) => [0.0, rc.abs().sqrt(), rc.signum() * rc.abs().sqrt()],
        (false, false, false) => {
            let q2 = lr * lc / rc;
            if q2 <= 0.0 {
                return Err(infeasible());
            }
            let ql = q2.sqrt();
            [ql, lr / ql, lc / ql]
        }
        _ => return Err(infeasible()),
    };
    if q.iter().any(|v| v.abs() > 1.0 + 1e-9) {
        return Err(infeasible());
    }
    Ok(q.map(|v| v.clamp(-1.0, 1.0)))
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn lognormal_var_factor(sd: f64) -> f64 {
    (sd * sd).exp_m1()
}

#[cfg(test)]
/// Raw-scale correlation of two log-normals with log-sds `sa`, `sb` and log-correlation `rho`.
fn raw_correlation(rho: f64, sa: f64, sb: f64) -> f64 {
    (rho * sa * sb).exp_m1() / (lognormal_var_factor(sa) * lognormal_var_factor(sb)).sqrt()
}

/// Inverse of [`raw_correlation`] in `rho`, clamped to [−1, 1].
fn log_correlation(raw: f64, sa: f64, sb: f64) -> f64 {
    if sa == 0.0 || sb == 0.0 {
        return raw;
    }
    let arg = 1.0 + raw * (lognormal_var_factor(sa) * lognormal_var_factor(sb)).sqrt();
    if arg <= 0.0 {
        return -1.0;
    }
    (arg.ln() / (sa * sb)).clamp(-1.0, 1.0)
}

fn count_from_log(v: f64) -> u64 {
    // `as` saturates at u64::MAX for huge values.
    (v.exp().round() as u64).max(1)
}

struct CalibrationDraws {
    z: Vec<f64>,
    eps: [Vec<f64>; 3],
}

fn calibration_draws() -> CalibrationDraws {
    let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
    let mut draw = |_| -> f64 { StandardNormal.sample(&mut rng) };
    let z = (0..CALIBRATION_DRAWS).map(&mut draw).collect();
    let eps = [0, 1, 2].map(|_| (0..CALIBRATION_DRAWS).map(&mut draw).collect());
    CalibrationDraws { z, eps }
}

fn simulated_correlations(
    draws: &CalibrationDraws,
    means: &[f64; 3],
    loadings: &[f64; 3],
    noise: &[f64; 3],
) -> [f64; 3] {
    let counts: Vec<Vec<f64>> = (0..3)
        .map(|t| {
            draws
                .z
                .iter()
                .zip(&draws.eps[t])
                .map(|(z, e)| count_from_log(means[t] + loadings[t] * z + noise[t] * e) as f64)
                .collect()
        })
        .collect();
    PAIRS.map(|(a, b)| pearson(&counts[a], &counts[b]).unwrap_or(0.0))
}

fn parameters_from_q(q: &[f64; 3], sd: &[f64; 3], sigma: f64) -> ([f64; 3], [f64; 3]) {
    let loadings = [0, 1, 2].map(|k| if sigma > 0.0 { q[k] * sd[k] / sigma } else { 0.0 });
    let noise = [0, 1, 2].map(|k| sd[k] * (1.0 - q[k] * q[k]).max(0.0).sqrt());
    (loadings, noise)
}

/// Finds factor loadings and noise sds whose simulated raw-count correlations
/// lie within `tol` of `cfg.target_correlations`, keeping each type's
/// marginal log-sd at `cfg.type_log_sd`.
///
/// Starts from the closed-form log-normal inversion and corrects the implied
/// log-scale correlations against Monte Carlo estimates on fixed draws, which
/// absorbs the effect of rounding and the floor at 1.
pub fn calibrate_correlations(cfg: &SynthConfig, tol: f64) -> Result<([f64; 3], [f64; 3])> {
    let targets = cfg.target_correlations;
    if targets.iter().any(|c| !(-1.0..=1.0).contains(c)) {
        return Err(Error::config("target correlations must lie in [-1, 1]"));
    }
    if !(tol > 0.0) {
        return Err(Error::config("calibration tolerance must be > 0"));
    }
    let sd = cfg.type_log_sd;
    if targets.iter().any(|c| *c != 0.0) && (cfg.popularity_sigma <= 0.0 || sd.iter().any(|s| *s <= 0.0)) {
        return Err(Error::config("calibration needs popularity_sigma > 0 and type_log_sd > 0"));
    }
    let draws = calibration_draws();
    let mut rho = [0, 1, 2].map(|k| {
        let (a, b) = PAIRS[k];
        log_correlation(targets[k], sd[a], sd[b])
    });
    let mut best: Option<(f64, [f64; 3], [f64; 3])> = None;
    for _ in 0..60 {
        let q = one_factor(rho)?;
        let (loadings, noise) = parameters_from_q(&q, &sd, cfg.popularity_sigma);
        let sim = simulated_correlations(&draws, &cfg.type_log_means, &loadings, &noise);
        let err = [0, 1, 2].map(|k| targets[k] - sim[k]);
        let worst = err.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if best.as_ref().is_none_or(|(w, _, _)| worst < *w) {
            best = Some((worst, loadings, noise));
        }
        // Aim well inside the tolerance so fresh samples also land inside it.
        if worst <= tol / 4.0 {
            break;
        }
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            // Independence and perfect correlation are structural; sampling
            // noise must not move them.
            if targets[k] == 0.0 || targets[k].abs() == 1.0 {
                continue;
            }
            // Newton step through the closed-form relation between scales.
            let slope = sd[a] * sd[b] * (rho[k] * sd[a] * sd[b]).exp()
                / (lognormal_var_factor(sd[a]) * lognormal_var_factor(sd[b])).sqrt();
            rho[k] = (rho[k] + err[k] / slope).clamp(-1.0, 1.0);
        }
    }
    let (worst, loadings, noise) = best.expect("at least one iteration");
    if worst > tol {
        return Err(Error::degenerate(format!(
            "calibration reached {worst:.4} from the target correlations, tolerance {tol}"
        )));
    }
    Ok((loadings, noise))
}

/// Words used to assemble post text.
struct Vocabulary {
    easy: Vec<String>,
    difficult: Vec<&'static str>,
    positive: Vec<String>,
    negative: Vec<String>,
    subjective: Vec<String>,
    concrete: Vec<String>,
    /// Hashtags that map to exactly one topic, per topic index.
    hashtags: Vec<Vec<String>>,
}

const DIFFICULT_WORDS: [&str; 32] = [
    "approximately",
    "infrastructure",
    "legislation",
    "phenomenon",
    "consequence",
    "sustainability",
    "administration",
    "acknowledgement",
    "bureaucracy",
    "comprehensive",
    "configuration",
    "deliberation",
    "demographic",
    "extraordinary",
    "hypothesis",
    "implementation",
    "jurisdiction",
    "methodology",
    "negotiation",
    "optimization",
    "perspective",
    "preliminary",
    "quantitative",
    "reconciliation",
    "specification",
    "subsequent",
    "transparency",
    "unprecedented",
    "vulnerability",
    "algorithmic",
    "contemporary",
    "parliamentary",
];

impl Vocabulary {
    fn new(lex: &Lexicons) -> Self {
        let in_any = |w: &str| {
            lex.valence.get(w).is_some()
                || lex.subjectivity.get(w).is_some()
                || lex.concreteness.get(w).is_some()
                || is_negator(w)
                || is_booster(w)
        };
        let easy = lex.easy_words.sorted().into_iter().filter(|w| !in_any(w)).map(str::to_string).collect();
        let difficult = DIFFICULT_WORDS.iter().copied().filter(|w| !in_any(w) && !lex.easy_words.contains(w)).collect();
        let words = |pred: &dyn Fn(f64) -> bool, table: &crate::textfeat::LexiconTable| -> Vec<String> {
            table
                .sorted_entries()
                .into_iter()
                .filter(|(w, v)| w.chars().all(char::is_alphabetic) && pred(*v))
                .map(|(w, _)| w.to_string())
                .collect()
        };
        let mut hashtags = vec![Vec::new(); Topic::ALL.len()];
        for tag in lex.topics.hashtags() {
            let set = lex.topics.get(tag).expect("listed hashtag");
            if set.len() == 1 {
                let t = set.iter().next().expect("one topic");
                hashtags[t.index()].push(tag.to_string());
            }
        }
        Self {
            easy,
            difficult,
            positive: words(&|v| v > 0.0, &lex.valence),
            negative: words(&|v| v < 0.0, &lex.valence),
            subjective: words(&|v| v >= 0.5, &lex.subjectivity),
            concrete: words(&|_| true, &lex.concreteness),
            hashtags,
        }
    }
}

fn pick<'a, T: AsRef<str>>(rng: &mut ChaCha8Rng, pool: &'a [T], fallback: &'a str) -> &'a str {
    pool.choose(rng).map_or(fallback, AsRef::as_ref)
}

/// Text, hashtags, link and author of one post, plus its latent draws.
struct Draft {
    record: TweetRecord,
    z: f64,
    eps: [f64; 3],
}

fn draft(index: usize, cfg: &SynthConfig, vocab: &Vocabulary) -> Draft {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let z = cfg.popularity_sigma * normal(&mut rng);
    let eps = [normal(&mut rng), normal(&mut rng), normal(&mut rng)];

    let positive_tone = rng.random_bool(0.6);
    let mut sentences = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let mut words = Vec::new();
        for _ in 0..rng.random_range(3..=9) {
            let u: f64 = rng.random();
            let w = if u < 0.12 {
                pick(&mut rng, &vocab.concrete, "table")
            } else if u < 0.20 {
                pick(&mut rng, &vocab.subjective, "good")
            } else if u < 0.28 {
                let pool = if positive_tone ^ rng.random_bool(0.2) { &vocab.positive } else { &vocab.negative };
                pick(&mut rng, pool, "good")
            } else if u < 0.42 {
                pick(&mut rng, &vocab.difficult, "phenomenon")
            } else {
                pick(&mut rng, &vocab.easy, "the")
            };
            words.push(w);
        }
        let end = if rng.random_bool(0.2) { "!" } else { "." };
        sentences.push(format!("{}{end}", words.join(" ")));
    }

    let mut topics = vec![*Topic::ALL.choose(&mut rng).expect("topics")];
    if rng.random_bool(0.2) {
        let second = *Topic::NAMED.choose(&mut rng).expect("topics");
        if !topics.contains(&second) {
            topics.push(second);
        }
    }
    let mut hashtags = Vec::new();
    for t in &topics {
        if let Some(tag) = vocab.hashtags[t.index()].choose(&mut rng) {
            hashtags.push(tag.clone());
        }
    }
    let mut text = sentences.join(" ");
    for tag in &hashtags {
        text.push_str(" #");
        text.push_str(tag);
    }
    let mut urls = Vec::new();
    if rng.random_bool(cfg.link_probability) {
        const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        let slug: String = (0..10).map(|_| *ALNUM.choose(&mut rng).expect("alphabet") as char).collect();
        let url = format!("https://t.co/{slug}");
        text.push(' ');
        text.push_str(&url);
        urls.push(url);
    }

    let followers = ((5.5 + 2.0 * normal(&mut rng)).exp().round() as u64).min(200_000_000);
    let listed = (followers as f64 * (-5.0 + normal(&mut rng)).exp()).round() as u64;
    let author = AuthorAttributes { followers, listed, verified: rng.random_bool(cfg.verified_probability) };

    Draft {
        record: TweetRecord {
            id: format!("syn{index:08}"),
            text,
            hashtags,
            urls,
            author,
            counts: EngagementCounts::default(),
        },
        z,
        eps,
    }
}

fn feature_value(f: &FeatureVector, name: &str) -> Option<f64> {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Some(match name {
        "has_link" => flag(f.complexity.has_link),
        "verified" => flag(f.verified),
        "concreteness_missing" => flag(f.concreteness_missing()),
        "readability" => f.complexity.readability,
        "concreteness" => f.complexity.concreteness?,
        "length" => f.complexity.length as f64,
        "sentiment" => f.valence.sentiment,
        "subjectivity" => f.valence.subjectivity,
        "followers" => f.log_followers,
        "listed" => f.log_listed,
        other => {
            let t = Topic::ALL.iter().find(|t| topic_column(**t) == other)?;
            flag(f.topics.contains(*t))
        }
    })
}

/// Per-record planted log-effects for every type.
fn planted_offsets(features: &[FeatureVector], effects: &[PlantedEffect]) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; features.len()];
    for e in effects {
        let values: Vec<Option<f64>> = features.iter().map(|f| feature_value(f, &e.feature)).collect();
        let per_unit: Vec<f64> = if CONTINUOUS_FEATURES.contains(&e.feature.as_str()) {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let (m, s) = (mean(&present), std_dev(&present));
            values
                .iter()
                .map(|v| match v {
                    Some(v) if s > 0.0 => (v - m) / s,
                    _ => 0.0,
                })
                .collect()
        } else {
            values.iter().map(|v| v.unwrap_or(0.0)).collect()
        };
        for (o, u) in out.iter_mut().zip(per_unit) {
            o[e.target.index()] += e.size * u;
        }
    }
    out
}

/// Generates `cfg.n` posts. Identical configs give identical corpora.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<TweetRecord>> {
    cfg.validate()?;
    let (loadings, noise) = cfg.resolved_parameters()?;
    let lexicons = Lexicons::builtin();
    let vocab = Vocabulary::new(&lexicons);
    let drafts: Vec<Draft> = (0..cfg.n).into_par_iter().map(|i| draft(i, cfg, &vocab)).collect();
    let offsets = if cfg.planted_effects.is_empty() {
        vec![[0.0; 3]; cfg.n]
    } else {
        let sentiment = SentimentConfig::default();
        let features: Vec<FeatureVector> =
            drafts.par_iter().map(|d| featurize(&d.record, &lexicons, &sentiment)).collect();
        planted_offsets(&features, &cfg.planted_effects)
    };
    Ok(drafts
        .into_iter()
        .zip(offsets)
        .map(|(d, off)| {
            let c = [0, 1, 2]
                .map(|t| count_from_log(cfg.type_log_means[t] + loadings[t] * d.z + noise[t] * d.eps[t] + off[t]));
            TweetRecord { counts: EngagementCounts::new(c[0], c[1], c[2]), ..d.record }
        })
        .collect())
}

/// Topic sets of the hashtag pools, exposed for tests of the generator's coverage.
pub fn generator_topics() -> Vec<TopicSet> {
    let lex = Lexicons::builtin();
    let vocab = Vocabulary::new(&lex);
    Topic::ALL.iter().filter(|t| !vocab.hashtags[t.index()].is_empty()).map(|t| TopicSet::from_topics([*t])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::summarize_records;
    use crate::topics::TopicLexicon;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let cfg = SynthConfig { n: 200, ..Default::default() };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        let b = generate(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, b);
        assert_eq!(a[3].id, "syn00000003");
    }

    #[test]
    fn degenerate_generator_gives_identical_counts() {
        let cfg = SynthConfig {
            n: 50,
            popularity_sigma: 0.0,
            type_loadings: Some([1.0; 3]),
            type_noise: Some([0.0; 3]),
            ..Default::default()
        };
        let recs = generate(&cfg).unwrap();
        assert!(recs.iter().all(|r| r.counts == recs[0].counts));
        assert_eq!(recs[0].counts, EngagementCounts::new(20, 7, 4));
    }

    #[test]
    fn records_pass_the_default_filter() {
        let recs = generate(&SynthConfig { n: 300, ..Default::default() }).unwrap();
        let lex = TopicLexicon::builtin();
        let kept = crate::corpus::apply_filters(&recs, &crate::corpus::FilterConfig::default(), &lex);
        assert_eq!(kept.len(), recs.len());
        assert!(recs.iter().all(|r| r.counts.min() >= 1));
        let mut buf = Vec::new();
        crate::corpus::write_records(&mut buf, &recs).unwrap();
        let parsed = crate::corpus::parse_records(&buf[..]).unwrap();
        assert!(parsed.errors.is_empty());
        assert_eq!(parsed.records, recs);
    }

    #[test]
    fn heavy_tails() {
        let recs = generate(&SynthConfig { n: 5000, ..Default::default() }).unwrap();
        let stats = summarize_records(&recs).unwrap();
        for d in &stats.distributions {
            assert!(d.skewness > 2.0, "{}", d.skewness);
        }
    }

    #[test]
    fn every_topic_has_hashtags() {
        assert_eq!(generator_topics().len(), Topic::ALL.len());
    }

    #[test]
    fn one_factor_limits() {
        assert_eq!(one_factor([0.0; 3]).unwrap(), [0.0; 3]);
        let q = one_factor([1.0; 3]).unwrap();
        assert_eq!(q, [1.0; 3]);
        let q = one_factor([0.5, 0.4, 0.2]).unwrap();
        assert!((q[0] * q[1] - 0.5).abs() < 1e-12 && (q[0] * q[2] - 0.4).abs() < 1e-12);
        // q_l² = 0.9·0.9/0.1 > 1.
        assert!(one_factor([0.9, 0.9, 0.1]).unwrap_err().to_string().contains("two-factor"));
        assert!(one_factor([0.5, -0.5, 0.5]).is_err());
        assert!(one_factor([0.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn raw_and_log_correlation_are_inverse() {
        for rho in [-0.3, 0.0, 0.4, 0.9, 1.0] {
            let c = raw_correlation(rho, 1.0, 0.7);
            assert!((log_correlation(c, 1.0, 0.7) - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_limits() {
        let ones = SynthConfig { target_correlations: [1.0; 3], ..Default::default() };
        let (l, n) = calibrate_correlations(&ones, 0.01).unwrap();
        assert_eq!(n, [0.0; 3]);
        assert_eq!(l, [1.0; 3]);
        let zeros = SynthConfig { target_correlations: [0.0; 3], ..Default::default() };
        let (l, n) = calibrate_correlations(&zeros, 0.01).unwrap();
        assert_eq!(l, [0.0; 3]);
        assert_eq!(n, DEFAULT_LOG_SD);
        let bad = SynthConfig { target_correlations: [0.9, 0.9, 0.1], ..Default::default() };
        assert!(calibrate_correlations(&bad, 0.01).is_err());
    }

    #[test]
    fn frozen_calibration_is_current() {
        let (l, n) = calibrate_correlations(&SynthConfig::default(), 0.01).unwrap();
        for k in 0..3 {
            assert!((l[k] - CALIBRATED_LOADINGS[k]).abs() < 1e-9, "{l:?} {n:?}");
            assert!((n[k] - CALIBRATED_NOISE[k]).abs() < 1e-9, "{n:?}");
        }
    }

    #[test]
    fn planted_effect_shifts_target_only() {
        let base = SynthConfig { n: 4000, ..Default::default() };
        let planted = SynthConfig {
            planted_effects: vec![PlantedEffect { feature: "has_link".into(), target: Target::Retweets, size: 1.0 }],
            ..base.clone()
        };
        let a = generate(&base).unwrap();
        let b = generate(&planted).unwrap();
        let mut shifted = 0;
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.counts.likes, y.counts.likes);
            assert_eq!(x.counts.comments, y.counts.comments);
            if x.has_link() {
                shifted += usize::from(y.counts.retweets > x.counts.retweets);
            } else {
                assert_eq!(x.counts.retweets, y.counts.retweets);
            }
        }
        assert!(shifted > 0);
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let bad = SynthConfig { type_loadings: Some([1.0; 3]), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SynthConfig {
            planted_effects: vec![PlantedEffect { feature: "nope".into(), target: Target::Likes, size: 1.0 }],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let ok = SynthConfig {
            planted_effects: vec![PlantedEffect { feature: "topic_news".into(), target: Target::Likes, size: 1.0 }],
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
    }
}
