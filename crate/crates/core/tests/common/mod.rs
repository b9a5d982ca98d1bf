//! Independent oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use asrfair_core::manifest::{
    load_manifest, Category, CorpusManifest, Group, ManifestFormat, UtteranceRecord,
};
use asrfair_core::spectral::AudioSignal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimal unit-cost edit distance by depth-first enumeration of every
/// alignment path, pruned only by an admissible length-difference bound.
pub fn brute_edit_cost<T: PartialEq>(r: &[T], h: &[T]) -> usize {
    fn go<T: PartialEq>(r: &[T], h: &[T], i: usize, j: usize, acc: usize, best: &mut usize) {
        let remaining_gap = (r.len() - i).abs_diff(h.len() - j);
        if acc + remaining_gap >= *best {
            return;
        }
        if i == r.len() && j == h.len() {
            *best = acc;
            return;
        }
        if i < r.len() && j < h.len() {
            go(r, h, i + 1, j + 1, acc + usize::from(r[i] != h[j]), best);
        }
        if i < r.len() {
            go(r, h, i + 1, j, acc + 1, best);
        }
        if j < h.len() {
            go(r, h, i, j + 1, acc + 1, best);
        }
    }
    let mut best = r.len() + h.len() + 1;
    go(r, h, 0, 0, 0, &mut best);
    best
}

/// Minimal DTW cost by enumerating every monotone path from (0,0) to the
/// last cell with unit steps right, down or diagonal.
pub fn brute_dtw_cost(a: &[Vec<f64>], b: &[Vec<f64>], d: impl Fn(&[f64], &[f64]) -> f64 + Copy) -> f64 {
    fn go(
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        i: usize,
        j: usize,
        acc: f64,
        d: impl Fn(&[f64], &[f64]) -> f64 + Copy,
        best: &mut f64,
    ) {
        let acc = acc + d(&a[i], &b[j]);
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            go(a, b, i + 1, j, acc, d, best);
        }
        if j + 1 < b.len() {
            go(a, b, i, j + 1, acc, d, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            go(a, b, i + 1, j + 1, acc, d, best);
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, 0, 0, 0.0, d, &mut best);
    best
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn record(id: &str, speaker: &str, category: Category, words: &[&str]) -> UtteranceRecord {
    UtteranceRecord {
        utterance_id: id.to_string(),
        speaker_id: speaker.to_string(),
        dataset_id: "FIXTURE".to_string(),
        group: if category == Category::Normal {
            Group::Normal
        } else {
            Group::Clp
        },
        severity: category.severity(),
        reference_words: words.iter().map(|w| w.to_string()).collect(),
        reference_phonemes: None,
        audio_path: None,
        partition: None,
    }
}

/// Delimited manifest text with the AIISH cell counts: 1741 Normal, 473
/// Mild, 379 Moderate, 133 Severe, spread over 31/14/11/4 speakers.
pub fn aiish_shaped_csv() -> String {
    let mut out =
        String::from("utterance_id,speaker_id,dataset_id,group,severity,words,phonemes,audio_path\n");
    let cells = [
        ("normal", "none", 1741, 31),
        ("clp", "mild", 473, 14),
        ("clp", "moderate", 379, 11),
        ("clp", "severe", 133, 4),
    ];
    for (group, severity, count, speakers) in cells {
        for i in 0..count {
            out.push_str(&format!(
                "{severity}-{i:04},{severity}-spk{:02},AIISH,{group},{severity},\"kage ondu mane\",\"k a g e\",\n",
                i % speakers
            ));
        }
    }
    out
}

pub fn aiish_shaped_manifest() -> CorpusManifest {
    load_manifest(aiish_shaped_csv().as_bytes(), ManifestFormat::DelimitedRows).unwrap()
}

/// Harmonic tone burst with 100 ms of silence on each side.
pub fn vowel(f0: f64, voiced_samples: usize, rate: u32) -> Vec<f64> {
    let pad = rate as usize / 10;
    let mut samples = vec![0.0; pad];
    samples.extend((0..voiced_samples).map(|i| {
        let t = i as f64 / f64::from(rate);
        (1..=6)
            .map(|h| (0.35 / h as f64) * (2.0 * PI * f0 * h as f64 * t).sin())
            .sum::<f64>()
    }));
    samples.extend(vec![0.0; pad]);
    samples
}

/// Copy of `samples` with seeded uniform noise of relative level `level`
/// added wherever the signal is non-silent.
pub fn perturb(samples: &[f64], level: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .iter()
        .map(|&x| {
            let noise: f64 = rng.gen_range(-1.0..1.0);
            if x == 0.0 {
                0.0
            } else {
                x + level * 0.35 * noise
            }
        })
        .collect()
}

pub fn signal(samples: Vec<f64>, rate: u32) -> AudioSignal {
    AudioSignal::new(samples, rate).unwrap()
}
