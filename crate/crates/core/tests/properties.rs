use proptest::prelude::*;
use unexq_core::corpus::{
    apply_filters, extract_entities, summarize_records, AuthorAttributes, EngagementCounts, FilterConfig, TweetRecord,
};
use unexq_core::design::DesignMatrix;
use unexq_core::linmod::{fit_ols, fold_assignment, model_stats, robust_se};
use unexq_core::quantreg::SolverConfig;
use unexq_core::stats::pearson;
use unexq_core::synth::{self, SynthConfig};
use unexq_core::textfeat::{
    self, concreteness, readability, sentiment, subjectivity, tokenize, Lexicons, SentimentConfig, WordList,
};
use unexq_core::topics::TopicLexicon;
use unexq_core::unexpect::{fit_baselines, quotient, score, QuantileScale};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

const TAGS: [&str; 8] =
    ["robotics", "worldcup", "football", "machinelearning", "nosuchtag", "cats", "photography", "fortnite"];

fn record_strategy() -> impl Strategy<Value = (String, Vec<String>, bool, [u64; 3])> {
    (
        prop::sample::select(vec!["", "hello there", "a good day for robots", "  "]).prop_map(str::to_string),
        prop::collection::vec(prop::sample::select(TAGS.to_vec()).prop_map(str::to_string), 0..3),
        any::<bool>(),
        [0u64..4, 0u64..4, 0u64..4],
    )
}

fn build(parts: Vec<(String, Vec<String>, bool, [u64; 3])>) -> Vec<TweetRecord> {
    parts
        .into_iter()
        .enumerate()
        .map(|(i, (text, hashtags, link, c))| TweetRecord {
            id: format!("r{i:04}"),
            text,
            hashtags,
            urls: if link { vec!["https://t.co/x".into()] } else { Vec::new() },
            author: AuthorAttributes { followers: 10, listed: 1, verified: false },
            counts: EngagementCounts::new(c[0], c[1], c[2]),
        })
        .collect()
}

fn filter_strategy() -> impl Strategy<Value = FilterConfig> {
    (any::<bool>(), 0u64..3, 0u64..4, any::<bool>()).prop_map(|(text, each, any_, lex)| FilterConfig {
        require_text: text,
        min_each_engagement: each,
        min_any_engagement: any_,
        require_lexicon_hashtag: lex,
        min_ascii_ratio: None,
    })
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn filtering_is_idempotent_and_conserves_records(
        parts in prop::collection::vec(record_strategy(), 0..40),
        cfg in filter_strategy(),
    ) {
        let records = build(parts);
        let lex = TopicLexicon::builtin();
        let once = apply_filters(&records, &cfg, &lex);
        let twice = apply_filters(&once.records, &cfg, &lex);
        prop_assert_eq!(&once.records, &twice.records);
        prop_assert_eq!(once.len() + once.provenance.excluded_total(), records.len());
    }

    #[test]
    fn cleaned_text_has_no_hashtags_or_links(
        words in prop::collection::vec(
            prop::sample::select(vec!["#tag", "#Mixed_9", "https://t.co/a", "http://x.org/b?c=1", "word", "#", "plain", "rt"]),
            0..12,
        ),
    ) {
        let e = extract_entities(&words.join(" "));
        let c = &e.cleaned_text;
        prop_assert!(!c.contains("http://") && !c.contains("https://"));
        let bytes = c.as_bytes();
        for (i, b) in bytes.iter().enumerate() {
            if *b == b'#' {
                prop_assert!(i + 1 == bytes.len() || !(bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_'));
            }
        }
    }

    #[test]
    fn correlations_are_symmetric_and_bounded(xs in prop::collection::vec((1u64..500, 1u64..500), 3..40)) {
        let a: Vec<f64> = xs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = xs.iter().map(|p| p.1 as f64).collect();
        if let Some(r) = pearson(&a, &b) {
            prop_assert_eq!(Some(r), pearson(&b, &a));
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        let records = build(xs.iter().map(|p| (String::new(), vec![], false, [p.0, p.1, p.0 + p.1])).collect());
        for r in summarize_records(&records).unwrap().correlations.into_iter().flatten() {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

const WORDS: [&str; 14] = [
    "amazing", "not", "very", "good", "bad", "terrible", "apple", "idea", "the", "happy", "never", "sad", "rock",
    "love",
];

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn valence_features_stay_in_range(words in prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..15)) {
        let lex = Lexicons::builtin();
        let text = words.join(" ");
        let tokens = tokenize(&text);
        let s = sentiment(&text, &lex.valence, &SentimentConfig::default());
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!((0.0..=1.0).contains(&subjectivity(&tokens, &lex.subjectivity)));
        if let Some(c) = concreteness(&tokens, &lex.concreteness) {
            prop_assert!((1.0..=5.0).contains(&c));
        }
        prop_assert!(readability(&text, &lex.easy_words) >= 0.0);
    }

    #[test]
    fn negating_the_lexicon_negates_sentiment(words in prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..15)) {
        let lex = Lexicons::builtin();
        let text = words.join(" ");
        let cfg = SentimentConfig::default();
        prop_assert_eq!(sentiment(&text, &lex.valence.negated(), &cfg), -sentiment(&text, &lex.valence, &cfg));
    }

    #[test]
    fn lexicon_means_ignore_token_order(
        (words, perm) in prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..15)
            .prop_flat_map(|w| { let n = w.len(); (Just(w), Just((0..n).collect::<Vec<_>>()).prop_shuffle()) }),
    ) {
        let lex = Lexicons::builtin();
        let tokens: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let shuffled: Vec<String> = perm.iter().map(|&i| tokens[i].clone()).collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        prop_assert!(close(subjectivity(&tokens, &lex.subjectivity), subjectivity(&shuffled, &lex.subjectivity)));
        match (concreteness(&tokens, &lex.concreteness), concreteness(&shuffled, &lex.concreteness)) {
            (Some(a), Some(b)) => prop_assert!(close(a, b)),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn readability_grows_with_difficult_words(n in 1usize..20, hard in 0usize..20, sentences in 1usize..4) {
        let hard = hard.min(n);
        let easy = WordList::from_words(["cat"]);
        let text_with = |h: usize| {
            let words: Vec<&str> = (0..n).map(|i| if i < h { "zyzzyva" } else { "cat" }).collect();
            let per = n.div_ceil(sentences);
            words.chunks(per).map(|c| c.join(" ") + ".").collect::<Vec<_>>().join(" ")
        };
        if hard < n {
            prop_assert!(readability(&text_with(hard + 1), &easy) >= readability(&text_with(hard), &easy));
        }
    }

    #[test]
    fn tagging_ignores_order_and_duplicates_and_is_monotone(
        tags in prop::collection::vec(prop::sample::select(TAGS.to_vec()), 0..6),
        extra in prop::sample::select(TAGS.to_vec()),
    ) {
        let lex = TopicLexicon::builtin();
        let base = lex.tag(&tags);
        let mut rev = tags.clone();
        rev.reverse();
        rev.extend(tags.iter().cloned());
        prop_assert_eq!(&base, &lex.tag(&rev));
        prop_assert!(!base.is_empty());
        let mut more = tags.clone();
        more.push(extra);
        let grown = lex.tag(&more);
        let only_other = base.len() == 1 && base.contains(unexq_core::topics::Topic::Other);
        for t in base.iter() {
            prop_assert!(grown.contains(t) || only_other);
        }
    }

    #[test]
    fn featurize_is_deterministic(words in prop::collection::vec(prop::sample::select(WORDS.to_vec()), 1..10)) {
        let lex = Lexicons::builtin();
        let rec = &build(vec![(words.join(" "), vec!["robotics".into()], true, [1, 1, 1])])[0];
        let cfg = SentimentConfig::default();
        prop_assert_eq!(textfeat::featurize(rec, &lex, &cfg), textfeat::featurize(rec, &lex, &cfg));
    }
}

fn ols_instance() -> impl Strategy<Value = (Vec<[f64; 2]>, Vec<f64>)> {
    (8usize..40).prop_flat_map(|n| {
        (prop::collection::vec([-3.0f64..3.0, -3.0f64..3.0], n), prop::collection::vec(-5.0f64..5.0, n))
    })
}

fn design(rows: &[[f64; 2]]) -> DesignMatrix {
    DesignMatrix::with_intercept(rows.len())
        .with_column("a", rows.iter().map(|r| r[0]).collect())
        .unwrap()
        .with_column("b", rows.iter().map(|r| r[1]).collect())
        .unwrap()
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn ols_residuals_are_orthogonal_and_r2_bounded((rows, y) in ols_instance()) {
        let x = design(&rows);
        let Ok(m) = fit_ols(&x, &y) else { return Ok(()) };
        let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max) * rows.len() as f64 * 3.0;
        for j in 0..x.ncols() {
            let xr: f64 = x.column_at(j).iter().zip(&m.residuals).map(|(a, b)| a * b).sum();
            prop_assert!(xr.abs() <= 1e-8 * scale);
        }
        if let Ok(s) = model_stats(&m, &y) {
            prop_assert!((0.0..=1.0).contains(&s.r_squared));
        }
    }

    #[test]
    fn hc1_ignores_row_order(
        ((rows, y), perm) in ols_instance()
            .prop_flat_map(|(r, y)| { let n = r.len(); (Just((r, y)), Just((0..n).collect::<Vec<_>>()).prop_shuffle()) }),
    ) {
        let x = design(&rows);
        let Ok(m) = fit_ols(&x, &y) else { return Ok(()) };
        let se = robust_se(&m, &x).unwrap();
        let rows2: Vec<[f64; 2]> = perm.iter().map(|&i| rows[i]).collect();
        let y2: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let x2 = design(&rows2);
        let m2 = fit_ols(&x2, &y2).unwrap();
        for (a, b) in se.iter().zip(robust_se(&m2, &x2).unwrap()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-6));
        }
    }

    #[test]
    fn rescaling_a_column_rescales_its_coefficient((rows, y) in ols_instance(), c in prop::sample::select(vec![0.25, 2.0, 10.0, -3.0])) {
        let x = design(&rows);
        let Ok(m) = fit_ols(&x, &y) else { return Ok(()) };
        let scaled: Vec<[f64; 2]> = rows.iter().map(|r| [r[0] * c, r[1]]).collect();
        let m2 = fit_ols(&design(&scaled), &y).unwrap();
        prop_assert!((m2.coefficients[1] * c - m.coefficients[1]).abs() <= 1e-8 * m.coefficients[1].abs().max(1.0));
        for (a, b) in m.fitted.iter().zip(&m2.fitted) {
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        }
    }

    #[test]
    fn folds_partition_the_rows(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let fold_of = fold_assignment(n, k, seed);
        prop_assert_eq!(fold_of.len(), n);
        let mut sizes = vec![0usize; k];
        for &f in &fold_of {
            prop_assert!(f < k);
            sizes[f] += 1;
        }
        prop_assert!(sizes.iter().all(|&s| s == n / k || s == n / k + 1));
    }

    #[test]
    fn quotient_scales_with_the_observed_count(obs in 1u32..10_000, pred in 0.0f64..500.0, c in 1u32..64) {
        let q = quotient(obs as f64, pred, 1.0);
        let qc = quotient((obs * c) as f64, pred, 1.0);
        prop_assert!((qc - c as f64 * q).abs() <= 2.0 * f64::EPSILON * qc);
    }
}

fn counts_strategy() -> impl Strategy<Value = Vec<EngagementCounts>> {
    prop::collection::vec((1u64..200, 1u64..100, 1u64..50), 12..60)
        .prop_map(|v| v.into_iter().map(|(a, b, c)| EngagementCounts::new(a, b + a / 3, c + b / 4)).collect())
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn scores_do_not_depend_on_record_order(
        (counts, perm) in counts_strategy()
            .prop_flat_map(|c| { let n = c.len(); (Just(c), Just((0..n).collect::<Vec<_>>()).prop_shuffle()) }),
        log in any::<bool>(),
    ) {
        let scale = if log { QuantileScale::Log1p } else { QuantileScale::Raw };
        let ids: Vec<String> = (0..counts.len()).map(|i| format!("p{i}")).collect();
        let solver = SolverConfig::default();
        let Ok(base) = fit_baselines(&counts, 0.9, scale, &solver) else { return Ok(()) };
        let a = score(&ids, &counts, &base, 1.0).unwrap();
        let ids2: Vec<String> = perm.iter().map(|&i| ids[i].clone()).collect();
        let counts2: Vec<EngagementCounts> = perm.iter().map(|&i| counts[i]).collect();
        let base2 = fit_baselines(&counts2, 0.9, scale, &solver).unwrap();
        let b = score(&ids2, &counts2, &base2, 1.0).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            prop_assert_eq!(&a[i].id, &b[j].id);
            for k in 0..3 {
                prop_assert!((a[i].quotient[k] - b[j].quotient[k]).abs() <= 1e-7 * a[i].quotient[k]);
            }
        }
    }

    #[test]
    fn generated_counts_are_positive(seed in any::<u64>(), n in 1usize..200) {
        let recs = synth::generate(&SynthConfig { n, seed, ..SynthConfig::default() }).unwrap();
        prop_assert_eq!(recs.len(), n);
        prop_assert!(recs.iter().all(|r| r.counts.min() >= 1));
    }
}

#[test]
fn tag_subsets_never_lose_topics() {
    // Exhaustive over every subset of the sample tags.
    let lex = TopicLexicon::builtin();
    for mask in 0u32..(1 << TAGS.len()) {
        let subset: Vec<&str> =
            TAGS.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| *t).collect();
        let set = lex.tag(&subset);
        for t in &subset {
            let single = lex.tag(&[*t]);
            if lex.contains(t) {
                for topic in single.iter() {
                    assert!(set.contains(topic), "{subset:?} lost {topic:?}");
                }
            }
        }
    }
}
