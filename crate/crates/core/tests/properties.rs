mod common;

use std::collections::{BTreeMap, BTreeSet};

use asrfair_core::harness::{HypothesisSet, Provenance};
use asrfair_core::manifest::{
    select_training_composition, split_corpus, validate_manifest, Category, Composition, CorpusManifest, Group,
    Partition, Severity, SplitSpec,
};
use asrfair_core::metrics::{align_tokens, macro_pooled_wer, score_testset, MissingPolicy, ScoreOptions};
use asrfair_core::spectral::{detect_voiced, dtw_distance, FrameSpec, LocalMetric, DEFAULT_THRESHOLD_FRACTION};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{aiish_shaped_manifest, brute_edit_cost, record, signal};

fn tokens(max: usize, min: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), min..=max)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn frames(max_len: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), 1..=max_len)
}

fn flat_manifest(n: usize, speakers: usize) -> CorpusManifest {
    let records = (0..n)
        .map(|i| {
            let cat = if i % 2 == 0 { Category::Normal } else { Category::Mild };
            record(&format!("u{i:03}"), &format!("s{}", i % speakers), cat, &["a"])
        })
        .collect();
    CorpusManifest {
        dataset_id: "FIXTURE".into(),
        records,
    }
}

fn partition_ids(m: &CorpusManifest, p: Partition) -> BTreeSet<String> {
    m.partition(p).map(|r| r.utterance_id.clone()).collect()
}

proptest! {
    #[test]
    fn alignment_matches_exhaustive_search(r in tokens(7, 1), h in tokens(7, 0)) {
        prop_assert_eq!(align_tokens(&r, &h).unwrap().cost(), brute_edit_cost(&r, &h));
    }

    #[test]
    fn swapping_roles_trades_deletions_for_insertions(r in tokens(8, 1), h in tokens(8, 1)) {
        let fwd = align_tokens(&r, &h).unwrap();
        let rev = align_tokens(&h, &r).unwrap();
        prop_assert_eq!(fwd.cost(), rev.cost());
        // per-path roles swap, so the totals must agree in aggregate
        prop_assert_eq!(fwd.hits + fwd.substitutions + fwd.insertions, h.len());
        prop_assert_eq!(rev.hits + rev.substitutions + rev.deletions, h.len());
    }

    #[test]
    fn one_extra_token_changes_cost_by_at_most_one(r in tokens(8, 1), h in tokens(8, 0)) {
        let base = align_tokens(&r, &h).unwrap().cost();
        let mut longer = h.clone();
        longer.push("zz".into());
        let after = align_tokens(&r, &longer).unwrap().cost();
        prop_assert!(after == base || after == base + 1 || after + 1 == base);
    }

    #[test]
    fn identity_is_error_free(r in tokens(10, 1)) {
        let out = align_tokens(&r, &r).unwrap();
        prop_assert_eq!(out.cost(), 0);
        prop_assert_eq!(out.hits, r.len());
    }

    #[test]
    fn pooled_lies_between_group_rates(a in 0.0f64..200.0, b in 0.0f64..200.0) {
        let p = macro_pooled_wer(a, b);
        prop_assert!(p >= a.min(b) - 1e-12 && p <= a.max(b) + 1e-12);
        prop_assert_eq!(p, macro_pooled_wer(b, a));
    }

    #[test]
    fn dtw_is_symmetric(a in frames(6, 2), b in frames(6, 2)) {
        for metric in [LocalMetric::Euclidean, LocalMetric::Manhattan, LocalMetric::Cosine] {
            let ab = dtw_distance(&a, &b, metric).unwrap().total_cost;
            let ba = dtw_distance(&b, &a, metric).unwrap().total_cost;
            prop_assert!((ab - ba).abs() < 1e-9);
        }
    }

    #[test]
    fn dtw_cost_bounds(a in frames(6, 3), b in frames(6, 3)) {
        let r = dtw_distance(&a, &b, LocalMetric::Euclidean).unwrap();
        let d = |i: usize, j: usize| LocalMetric::Euclidean.distance(&a[i], &b[j]);
        // endpoints lie on every path
        let ends = d(0, 0) + if a.len() * b.len() > 1 { d(a.len() - 1, b.len() - 1) } else { 0.0 };
        prop_assert!(r.total_cost >= ends - 1e-9);
        prop_assert!(r.path_length >= a.len().max(b.len()));
        prop_assert!(r.path_length <= a.len() + b.len() - 1);
        prop_assert!((r.normalized_cost * r.path_length as f64 - r.total_cost).abs() < 1e-9);
    }

    #[test]
    fn vad_mask_is_scale_invariant(
        samples in prop::collection::vec(-1.0f64..1.0, 800..2000),
        k in 0.01f64..100.0,
    ) {
        let sig = signal(samples, 16_000);
        let spec = FrameSpec::default();
        let a = detect_voiced(&sig, &spec, DEFAULT_THRESHOLD_FRACTION).unwrap();
        let b = detect_voiced(&sig.scaled(k), &spec, DEFAULT_THRESHOLD_FRACTION).unwrap();
        prop_assert_eq!(a.flags, b.flags);
    }

    #[test]
    fn split_is_exhaustive_and_deterministic(n in 1usize..120, seed in any::<u64>(), tf in 0.0f64..=1.0, df in 0.0f64..=1.0) {
        let m = flat_manifest(n, 7);
        let spec = SplitSpec { test_fraction: tf, dev_fraction_of_train: df, seed, speaker_disjoint: false };
        let a = split_corpus(&m, &spec).unwrap();
        prop_assert_eq!(&a, &split_corpus(&m, &spec).unwrap());
        prop_assert!(a.records.iter().all(|r| r.partition.is_some()));
        let (eval, dev) = spec.target_sizes(n);
        prop_assert_eq!(a.partition(Partition::Eval).count(), eval);
        prop_assert_eq!(a.partition(Partition::Dev).count(), dev);
        prop_assert_eq!(a.partition(Partition::Train).count(), n - eval - dev);
    }

    #[test]
    fn speaker_disjoint_split_keeps_speakers_together(n in 10usize..150, speakers in 4usize..20, seed in any::<u64>()) {
        let m = flat_manifest(n, speakers);
        let spec = SplitSpec { seed, speaker_disjoint: true, ..SplitSpec::default() };
        let out = split_corpus(&m, &spec).unwrap();
        let mut seen: BTreeMap<&str, Partition> = BTreeMap::new();
        for r in &out.records {
            let p = r.partition.unwrap();
            prop_assert_eq!(*seen.entry(r.speaker_id.as_str()).or_insert(p), p);
        }
    }

    #[test]
    fn larger_composition_selects_superset(seed in any::<u64>(), mask_a in 1u8..16, extra in 0u8..16) {
        let all = [Category::Normal, Category::Mild, Category::Moderate, Category::Severe];
        let pick = |mask: u8| all.iter().enumerate().filter(move |(i, _)| mask & (1 << i) != 0).map(|(_, c)| *c);
        let small = Composition::new(pick(mask_a)).unwrap();
        let large = Composition::new(pick(mask_a | extra)).unwrap();
        let m = split_corpus(&flat_pool(), &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        let ids = |c: &Composition| -> BTreeSet<String> {
            select_training_composition(&m, c).unwrap().into_iter().map(|r| r.utterance_id.clone()).collect()
        };
        prop_assert!(small.is_subset(&large));
        prop_assert!(ids(&small).is_subset(&ids(&large)));
    }
}

fn flat_pool() -> CorpusManifest {
    let cats = [Category::Normal, Category::Mild, Category::Moderate, Category::Severe];
    let records = (0..80)
        .map(|i| record(&format!("p{i:02}"), &format!("s{}", i % 9), cats[i % 4], &["a"]))
        .collect();
    CorpusManifest {
        dataset_id: "FIXTURE".into(),
        records,
    }
}

#[test]
fn split_matches_independent_shuffle_oracle() {
    let m = flat_manifest(100, 10);
    for seed in [0u64, 7, 12345] {
        let out = split_corpus(&m, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        let mut ids: Vec<String> = m.records.iter().map(|r| r.utterance_id.clone()).collect();
        ids.sort();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let eval: BTreeSet<String> = ids[..20].iter().cloned().collect();
        let dev: BTreeSet<String> = ids[20..36].iter().cloned().collect();
        assert_eq!(partition_ids(&out, Partition::Eval), eval);
        assert_eq!(partition_ids(&out, Partition::Dev), dev);
        assert_eq!(partition_ids(&out, Partition::Train).len(), 64);
    }
}

#[test]
fn different_seeds_same_sizes_different_members() {
    let m = flat_manifest(100, 10);
    let a = split_corpus(&m, &SplitSpec { seed: 1, ..SplitSpec::default() }).unwrap();
    let b = split_corpus(&m, &SplitSpec { seed: 2, ..SplitSpec::default() }).unwrap();
    for p in [Partition::Train, Partition::Dev, Partition::Eval] {
        assert_eq!(a.partition(p).count(), b.partition(p).count());
    }
    assert_ne!(partition_ids(&a, Partition::Eval), partition_ids(&b, Partition::Eval));
}

#[test]
fn aiish_shaped_manifest_counts() {
    let m = aiish_shaped_manifest();
    let report = validate_manifest(&m);
    assert!(report.is_valid());
    assert_eq!(report.total, 2726);
    assert_eq!(report.count(Group::Normal, Severity::None), 1741);
    assert_eq!(report.count(Group::Clp, Severity::Mild), 473);
    assert_eq!(report.count(Group::Clp, Severity::Moderate), 379);
    assert_eq!(report.count(Group::Clp, Severity::Severe), 133);
    assert_eq!(report.group_total(Group::Clp), 985);
}

#[test]
fn composition_selection_matches_direct_filter() {
    let m = split_corpus(&aiish_shaped_manifest(), &SplitSpec { seed: 3, ..SplitSpec::default() }).unwrap();
    for label in ["Normal", "CLP", "Mild+Normal", "Mild+Moderate+Normal", "Mild+Moderate+Severe+Normal"] {
        let comp: Composition = label.parse().unwrap();
        let selected = select_training_composition(&m, &comp).unwrap();
        let oracle: Vec<_> = m
            .records
            .iter()
            .filter(|r| r.partition == Some(Partition::Train))
            .filter(|r| {
                let cat = match (r.group, r.severity) {
                    (Group::Normal, _) => "Normal",
                    (_, Severity::Mild) => "Mild",
                    (_, Severity::Moderate) => "Moderate",
                    (_, _) => "Severe",
                };
                label == "CLP" && cat != "Normal" || label.split('+').any(|c| c == cat)
            })
            .collect();
        assert_eq!(selected.len(), oracle.len(), "{label}");
        assert!(selected.iter().zip(&oracle).all(|(a, b)| a.utterance_id == b.utterance_id));
    }
}

#[test]
fn missing_clp_hypotheses_are_excluded_but_counted() {
    // 209 CLP eval utterances, 11 without output: the CLP rate is computed
    // over the remaining 198.
    let records: Vec<_> = (0..209)
        .map(|i| record(&format!("c{i:03}"), "s", Category::Moderate, &["one", "two"]))
        .collect();
    let mut hyps = HypothesisSet::new(Provenance::External);
    for (i, r) in records.iter().enumerate().skip(11) {
        let words = if i % 2 == 0 { vec!["one".to_string(), "two".to_string()] } else { vec!["one".to_string()] };
        hyps.insert(&r.utterance_id, words).unwrap();
    }
    let rep = score_testset(&records, &hyps, &ScoreOptions::default()).unwrap();
    let clp = &rep.by_group[&Group::Clp];
    assert_eq!(clp.n_missing_hypotheses, 11);
    assert_eq!(clp.n_utterances, 198);
    // i in 11..209 odd → 99 utterances with one deletion
    assert_eq!(clp.counts.deletions, 99);
    assert!((rep.w_clp().unwrap() - 100.0 * 99.0 / 396.0).abs() < 1e-12);

    let opts = ScoreOptions { missing: MissingPolicy::ScoreAsEmpty, ..ScoreOptions::default() };
    let rep = score_testset(&records, &hyps, &opts).unwrap();
    assert!((rep.w_clp().unwrap() - 100.0 * (99.0 + 22.0) / 418.0).abs() < 1e-12);
}

#[test]
fn toy_two_group_set_matches_hand_summation() {
    let records = vec![
        record("n1", "a", Category::Normal, &["the", "cat", "sat"]),
        record("n2", "a", Category::Normal, &["a", "dog"]),
        record("c1", "b", Category::Mild, &["one", "two", "three", "four"]),
        record("c2", "b", Category::Severe, &["red"]),
    ];
    let mut hyps = HypothesisSet::new(Provenance::External);
    let put = |h: &mut HypothesisSet, id: &str, text: &str| {
        h.insert(id, text.split_whitespace().map(String::from).collect()).unwrap()
    };
    put(&mut hyps, "n1", "the bat sat");
    put(&mut hyps, "n2", "a dog");
    put(&mut hyps, "c1", "one three four five");
    put(&mut hyps, "c2", "blue green");
    let rep = score_testset(&records, &hyps, &ScoreOptions::default()).unwrap();
    // normal: 1 sub over 5 words; CLP: (1 del + 1 ins) + (1 sub + 1 ins) over 5 words
    assert!((rep.w_normal().unwrap() - 20.0).abs() < 1e-12);
    assert!((rep.w_clp().unwrap() - 80.0).abs() < 1e-12);
    assert!((rep.macro_pooled().unwrap() - 50.0).abs() < 1e-12);
    assert!((rep.micro_pooled().unwrap() - 50.0).abs() < 1e-12);
    assert!((rep.severity_rate(Severity::Mild).unwrap() - 50.0).abs() < 1e-12);
    assert!((rep.severity_rate(Severity::Severe).unwrap() - 200.0).abs() < 1e-12);
}

#[test]
fn scoring_ignores_record_order_and_thread_count() {
    let mut records: Vec<_> = (0..60)
        .map(|i| {
            let cat = [Category::Normal, Category::Mild, Category::Severe][i % 3];
            record(&format!("u{i:02}"), "s", cat, &["x", "y", "z"])
        })
        .collect();
    let mut hyps = HypothesisSet::new(Provenance::External);
    for (i, r) in records.iter().enumerate() {
        let h: Vec<String> = ["x", "q", "z", "w"].iter().take(1 + i % 4).map(|s| s.to_string()).collect();
        hyps.insert(&r.utterance_id, h).unwrap();
    }
    let opts = ScoreOptions::default();
    let base = score_testset(&records, &hyps, &opts).unwrap();
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(score_testset(&records, &hyps, &opts).unwrap(), base);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(single.install(|| score_testset(&records, &hyps, &opts).unwrap()), base);
}
