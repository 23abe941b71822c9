//! Independent reference implementations used by the acceptance and
//! integration tests. Each favours the most literal formulation over speed.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn synthetic(name: &str) -> PathBuf {
    workspace_root().join("data/synthetic").join(name)
}

/// Rank by counting: 1 + number of smaller values + half the other equal values.
pub fn counting_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Textbook computational formula; `None` when either side is constant.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson_oracle(&counting_ranks(x), &counting_ranks(y))
}

pub fn rmse_oracle(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += (x[i] - y[i]).powi(2);
    }
    (acc / x.len() as f64).sqrt()
}

/// Friedman statistic in Conover's form from explicitly ranked rows:
/// (k−1) Σ_j (R_j − n(k+1)/2)² / (Σ r² − n k (k+1)² / 4); 0 when every row is tied.
pub fn friedman_oracle(data: &[Vec<f64>]) -> f64 {
    let n = data.len() as f64;
    let k = data[0].len();
    let kf = k as f64;
    let ranks: Vec<Vec<f64>> = data.iter().map(|r| counting_ranks(r)).collect();
    let mut a = 0.0;
    for row in &ranks {
        for r in row {
            a += r * r;
        }
    }
    let c = n * kf * (kf + 1.0).powi(2) / 4.0;
    if a - c <= 0.0 {
        return 0.0;
    }
    let mut num = 0.0;
    for j in 0..k {
        let rj: f64 = ranks.iter().map(|row| row[j]).sum();
        num += (rj - n * (kf + 1.0) / 2.0).powi(2);
    }
    (kf - 1.0) * num / (a - c)
}

/// Fewest edit runs among minimum-cost alignments, in two phases: the
/// Levenshtein table first, then a shortest-path count of run openings over
/// "tight" steps only (steps that keep the path on an optimal alignment).
#[derive(Default)]
pub struct EditRunsOracle {
    dist: Vec<usize>,
    runs: Vec<[usize; 2]>,
}

impl EditRunsOracle {
    pub fn runs<T: PartialEq>(&mut self, a: &[T], b: &[T]) -> usize {
        const INF: usize = usize::MAX / 2;
        let (n, m) = (a.len(), b.len());
        let w = m + 1;
        self.dist.clear();
        self.dist.resize((n + 1) * w, 0);
        let d = &mut self.dist;
        for i in 0..=n {
            for j in 0..=m {
                d[i * w + j] = if i == 0 {
                    j
                } else if j == 0 {
                    i
                } else {
                    let diag = d[(i - 1) * w + j - 1] + usize::from(a[i - 1] != b[j - 1]);
                    diag.min(d[(i - 1) * w + j] + 1).min(d[i * w + j - 1] + 1)
                };
            }
        }
        self.runs.clear();
        self.runs.resize((n + 1) * w, [INF; 2]);
        let (d, r) = (&self.dist, &mut self.runs);
        r[0][0] = 0;
        for i in 0..=n {
            for j in 0..=m {
                for inside in 0..2 {
                    let cur = r[i * w + j][inside];
                    if cur >= INF {
                        continue;
                    }
                    let open = cur + usize::from(inside == 0);
                    let here = d[i * w + j];
                    if i < n && j < m {
                        let t = (i + 1) * w + j + 1;
                        if a[i] == b[j] {
                            if d[t] == here {
                                r[t][0] = r[t][0].min(cur);
                            }
                        } else if d[t] == here + 1 {
                            r[t][1] = r[t][1].min(open);
                        }
                    }
                    if i < n && d[(i + 1) * w + j] == here + 1 {
                        let t = (i + 1) * w + j;
                        r[t][1] = r[t][1].min(open);
                    }
                    if j < m && d[i * w + j + 1] == here + 1 {
                        let t = i * w + j + 1;
                        r[t][1] = r[t][1].min(open);
                    }
                }
            }
        }
        let end = r[n * w + m];
        end[0].min(end[1])
    }
}

/// Standard normal CDF from the everywhere-convergent series
/// Φ(x) = ½ + φ(x) Σ x^(2n+1) / (1·3·5···(2n+1)); accurate for |x| ≲ 5.
pub fn normal_cdf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        n += 2.0;
        term *= x * x / n;
        sum += term;
    }
    0.5 + (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() * sum
}

/// All sequences over `0..alphabet` of length `0..=max_len`.
pub fn all_sequences(alphabet: u8, max_len: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in 0..=max_len {
        for mut code in 0..(alphabet as usize).pow(len) {
            let mut s = Vec::with_capacity(len as usize);
            for _ in 0..len {
                s.push((code % alphabet as usize) as u8);
                code /= alphabet as usize;
            }
            out.push(s);
        }
    }
    out
}

/// True when symbols of `a ++ b` first appear in increasing order 0, 1, 2, …
/// Every pair is a relabelling of exactly one such canonical pair.
pub fn is_canonical_pair(a: &[u8], b: &[u8]) -> bool {
    let mut next = 0u8;
    for &s in a.iter().chain(b) {
        if s > next {
            return false;
        }
        if s == next {
            next += 1;
        }
    }
    true
}

/// Relative paths of every file below `dir`, sorted, with contents.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
