use super::StatsError;

/// Aligned pairs with absent values dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub ids: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Pairs discarded because either side was absent or non-finite.
    pub dropped: usize,
}

impl PairedSeries {
    /// Complete series; ids are positional.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<PairedSeries, StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch(x.len(), y.len()));
        }
        let ids = (0..x.len()).map(|i| i.to_string()).collect();
        PairedSeries::from_options(
            ids,
            x.into_iter().map(Some).collect(),
            y.into_iter().map(Some).collect(),
        )
    }

    /// Keeps the pairs where both sides are present and finite.
    pub fn from_options(
        ids: Vec<String>,
        x: Vec<Option<f64>>,
        y: Vec<Option<f64>>,
    ) -> Result<PairedSeries, StatsError> {
        if x.len() != y.len() || ids.len() != x.len() {
            return Err(StatsError::LengthMismatch(x.len(), y.len()));
        }
        let mut out = PairedSeries {
            ids: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            dropped: 0,
        };
        for ((id, a), b) in ids.into_iter().zip(x).zip(y) {
            match (a, b) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => {
                    out.ids.push(id);
                    out.x.push(a);
                    out.y.push(b);
                }
                _ => out.dropped += 1,
            }
        }
        if out.len() < 3 {
            return Err(StatsError::TooFewPoints(out.len()));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn correlation(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() < 3 {
        return Err(StatsError::TooFewPoints(x.len()));
    }
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(s: &PairedSeries) -> Result<f64, StatsError> {
    correlation(&s.x, &s.y)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn spearman(s: &PairedSeries) -> Result<f64, StatsError> {
    correlation(&average_ranks(&s.x), &average_ranks(&s.y))
}

pub fn rmse(pred: &[f64], reference: &[f64]) -> Result<f64, StatsError> {
    if pred.len() != reference.len() {
        return Err(StatsError::LengthMismatch(pred.len(), reference.len()));
    }
    if pred.is_empty() {
        return Err(StatsError::Empty);
    }
    let sum: f64 = pred.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}
