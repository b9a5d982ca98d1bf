use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Local distance between two frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalMetric {
    #[default]
    Euclidean,
    Manhattan,
    /// `1 − cos θ`; two zero frames are at distance 0, one zero frame at 1.
    Cosine,
}

impl LocalMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            LocalMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            LocalMetric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            LocalMetric::Cosine if a == b => 0.0,
            LocalMetric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                match (na == 0.0, nb == 0.0) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => 1.0,
                    _ => (1.0 - dot / (na * nb)).max(0.0),
                }
            }
        }
    }
}

impl FromStr for LocalMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(LocalMetric::Euclidean),
            "manhattan" | "absolute" => Ok(LocalMetric::Manhattan),
            "cosine" => Ok(LocalMetric::Cosine),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub total_cost: f64,
    /// Number of cells on the optimal warping path.
    pub path_length: usize,
    pub normalized_cost: f64,
    pub path: Vec<(usize, usize)>,
}

/// Minimal accumulated cost over monotone warping paths from the first pair
/// of frames to the last, with steps `(i−1, j)`, `(i, j−1)` and `(i−1, j−1)`.
///
/// The backtrace takes the diagonal on ties, so `path_length` is the shortest
/// among optimal paths found that way.
pub fn dtw_distance<A, B>(seq_a: &[A], seq_b: &[B], metric: LocalMetric) -> Result<DtwResult, SpectralError>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let (n, m) = (seq_a.len(), seq_b.len());
    if n == 0 || m == 0 {
        return Err(SpectralError::EmptySequence);
    }
    let dim = seq_a[0].as_ref().len();
    for f in seq_a.iter().map(AsRef::as_ref).chain(seq_b.iter().map(AsRef::as_ref)) {
        if f.len() != dim {
            return Err(SpectralError::DimensionMismatch(dim, f.len()));
        }
    }

    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        let a = seq_a[i].as_ref();
        for j in 0..m {
            let d = metric.distance(a, seq_b[j].as_ref());
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[at(0, j - 1)],
                (_, 0) => acc[at(i - 1, 0)],
                _ => acc[at(i - 1, j - 1)]
                    .min(acc[at(i - 1, j)])
                    .min(acc[at(i, j - 1)]),
            };
            acc[at(i, j)] = d + best;
        }
    }

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();

    let total_cost = acc[at(n - 1, m - 1)];
    Ok(DtwResult {
        total_cost,
        path_length: path.len(),
        normalized_cost: total_cost / path.len() as f64,
        path,
    })
}
