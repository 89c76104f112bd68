//! Performance measures: bias, standard deviation, MSE, confusion matrices,
//! prediction-interval coverage, and replicate averaging.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantile::PredictionInterval;

/// Regression metrics for one evaluation (or a replicate average).
///
/// `sd` holds [`sd_paper`], the literal sqrt-of-sum-over-N formula used by
/// the simulation tables; `sd_conventional` is the usual sample standard
/// deviation. Reports carry both so tables can label which one they show.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegressionReport {
    pub bias: f64,
    pub sd: f64,
    pub sd_conventional: f64,
    pub mse: f64,
    pub pi_coverage: Option<f64>,
}

/// Predicted-vs-actual counts plus column-normalized percentages: each
/// actual-level column of `percent` sums to 100 (when that class occurs).
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    pub levels: Vec<String>,
    /// counts[predicted][actual]
    pub counts: Vec<Vec<usize>>,
    /// percent[predicted][actual], normalized within each actual column
    pub percent: Vec<Vec<f64>>,
}

/// (Σŷᵢ − Σyᵢ)/N.
pub fn bias(pred: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(pred.len(), actual.len());
    assert!(!pred.is_empty());
    let n = pred.len() as f64;
    (pred.iter().sum::<f64>() - actual.iter().sum::<f64>()) / n
}

/// sqrt(Σ(ŷᵢ − mean)²)/N, the tables' literal formula (note the divisor
/// sits outside the square root).
pub fn sd_paper(pred: &[f64]) -> f64 {
    assert!(!pred.is_empty());
    let n = pred.len() as f64;
    let mean = pred.iter().sum::<f64>() / n;
    pred.iter().map(|y| (y - mean).powi(2)).sum::<f64>().sqrt() / n
}

/// Conventional sample standard deviation (divisor N−1; 0 when N=1).
pub fn sd_conventional(pred: &[f64]) -> f64 {
    assert!(!pred.is_empty());
    let n = pred.len() as f64;
    if pred.len() == 1 {
        return 0.0;
    }
    let mean = pred.iter().sum::<f64>() / n;
    (pred.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Σ(ŷᵢ − yᵢ)²/N.
pub fn mse(pred: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(pred.len(), actual.len());
    assert!(!pred.is_empty());
    let n = pred.len() as f64;
    pred.iter()
        .zip(actual)
        .map(|(p, a)| (p - a).powi(2))
        .sum::<f64>()
        / n
}

/// Fraction of yᵢ with lowerᵢ ≤ yᵢ ≤ upperᵢ.
pub fn pi_coverage(intervals: &[PredictionInterval], actual: &[f64]) -> f64 {
    assert_eq!(intervals.len(), actual.len());
    assert!(!intervals.is_empty());
    let hits = intervals
        .iter()
        .zip(actual)
        .filter(|(pi, &y)| pi.lower <= y && y <= pi.upper)
        .count();
    hits as f64 / actual.len() as f64
}

/// Bundle the regression metrics for one test set.
pub fn regression_report(
    pred: &[f64],
    actual: &[f64],
    intervals: Option<&[PredictionInterval]>,
) -> RegressionReport {
    RegressionReport {
        bias: bias(pred, actual),
        sd: sd_paper(pred),
        sd_conventional: sd_conventional(pred),
        mse: mse(pred, actual),
        pi_coverage: intervals.map(|pis| pi_coverage(pis, actual)),
    }
}

/// Predicted-vs-actual matrix over a shared level list. Level codes index
/// into `levels`; percentages are normalized within each actual column.
pub fn confusion(levels: &[String], pred: &[u32], actual: &[u32]) -> Result<ConfusionMatrix> {
    if pred.len() != actual.len() {
        return Err(Error::schema("confusion: length mismatch"));
    }
    let k = levels.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &a) in pred.iter().zip(actual) {
        if p as usize >= k || a as usize >= k {
            return Err(Error::schema("confusion: level code out of range"));
        }
        counts[p as usize][a as usize] += 1;
    }
    let mut percent = vec![vec![0.0; k]; k];
    for a in 0..k {
        let total: usize = (0..k).map(|p| counts[p][a]).sum();
        if total > 0 {
            for p in 0..k {
                percent[p][a] = 100.0 * counts[p][a] as f64 / total as f64;
            }
        }
    }
    Ok(ConfusionMatrix { levels: levels.to_vec(), counts, percent })
}

impl ConfusionMatrix {
    /// Overall accuracy: trace / total.
    pub fn accuracy(&self) -> f64 {
        let total: usize = self.counts.iter().flatten().sum();
        if total == 0 {
            return 0.0;
        }
        let diag: usize = (0..self.levels.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / total as f64
    }

    /// Diagonal of the percentage matrix (per-class recall, in percent).
    pub fn diagonal_percent(&self) -> Vec<f64> {
        (0..self.levels.len()).map(|i| self.percent[i][i]).collect()
    }
}

/// Field-wise mean over replicate reports.
pub fn replicate_average(reports: &[RegressionReport]) -> RegressionReport {
    assert!(!reports.is_empty());
    let b = reports.len() as f64;
    let coverage = if reports.iter().all(|r| r.pi_coverage.is_some()) {
        Some(reports.iter().map(|r| r.pi_coverage.unwrap()).sum::<f64>() / b)
    } else {
        None
    };
    RegressionReport {
        bias: reports.iter().map(|r| r.bias).sum::<f64>() / b,
        sd: reports.iter().map(|r| r.sd).sum::<f64>() / b,
        sd_conventional: reports.iter().map(|r| r.sd_conventional).sum::<f64>() / b,
        mse: reports.iter().map(|r| r.mse).sum::<f64>() / b,
        pi_coverage: coverage,
    }
}

/// Cell-wise mean of percentage matrices over replicates. All matrices must
/// share one level list.
pub fn average_confusion_percent(mats: &[ConfusionMatrix]) -> Result<ConfusionMatrix> {
    let first = mats
        .first()
        .ok_or_else(|| Error::schema("average_confusion_percent: no matrices"))?;
    let k = first.levels.len();
    let mut percent = vec![vec![0.0; k]; k];
    let mut counts = vec![vec![0usize; k]; k];
    for m in mats {
        if m.levels != first.levels {
            return Err(Error::schema("average_confusion_percent: level lists differ"));
        }
        for p in 0..k {
            for a in 0..k {
                percent[p][a] += m.percent[p][a];
                counts[p][a] += m.counts[p][a];
            }
        }
    }
    let b = mats.len() as f64;
    for row in &mut percent {
        for cell in row {
            *cell /= b;
        }
    }
    Ok(ConfusionMatrix { levels: first.levels.clone(), counts, percent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn bias_examples() {
        assert_eq!(bias(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(bias(&[2.0, 3.0], &[1.0, 2.0]), 1.0);
        assert_eq!(bias(&[1.0, 2.0], &[0.0, 0.0]), 1.5);
    }

    #[test]
    fn sd_paper_examples() {
        assert_eq!(sd_paper(&[3.0, 3.0, 3.0]), 0.0);
        let got = sd_paper(&[0.0, 2.0]);
        assert!((got - 2.0_f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sd_formulas_relate_algebraically() {
        let mut rng = crate::rng::derive_rng(11, &["sd"]);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let lhs = sd_paper(&v);
            let rhs = sd_conventional(&v) * ((n - 1) as f64).sqrt() / n as f64;
            assert!((lhs - rhs).abs() < 1e-12, "n={n} lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(mse(&[1.0], &[3.0]), 4.0);
        assert_eq!(mse(&[1.0, -1.0], &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn mse_decomposes_into_bias_and_residual_variance() {
        let mut rng = crate::rng::derive_rng(12, &["mse"]);
        for _ in 0..50 {
            let n = rng.random_range(1..40);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let resid: Vec<f64> = p.iter().zip(&a).map(|(x, y)| x - y).collect();
            let rbar = resid.iter().sum::<f64>() / n as f64;
            let pop_var = resid.iter().map(|r| (r - rbar).powi(2)).sum::<f64>() / n as f64;
            let b = bias(&p, &a);
            assert!((mse(&p, &a) - (b * b + pop_var)).abs() < 1e-9);
        }
    }

    #[test]
    fn pi_coverage_examples() {
        let pi = |lo: f64, hi: f64| PredictionInterval { lower: lo, upper: hi, level: 0.9 };
        assert_eq!(pi_coverage(&[pi(0.0, 2.0), pi(0.0, 2.0)], &[1.0, 1.5]), 1.0);
        assert_eq!(pi_coverage(&[pi(0.0, 1.0), pi(0.0, 1.0)], &[2.0, -1.0]), 0.0);
        assert_eq!(pi_coverage(&[pi(0.0, 1.0), pi(0.0, 1.0)], &[0.5, 9.0]), 0.5);
    }

    fn lv(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn confusion_perfect_prediction() {
        let m = confusion(&lv(&["N", "P"]), &[0, 1, 0, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(m.percent[0][0], 100.0);
        assert_eq!(m.percent[1][1], 100.0);
        assert_eq!(m.percent[1][0], 0.0);
        assert_eq!(m.accuracy(), 1.0);
    }

    #[test]
    fn confusion_all_wrong() {
        let m = confusion(&lv(&["N", "P"]), &[1, 0], &[0, 1]).unwrap();
        assert_eq!(m.percent[1][0], 100.0);
        assert_eq!(m.percent[0][1], 100.0);
        assert_eq!(m.accuracy(), 0.0);
    }

    #[test]
    fn confusion_column_normalization() {
        // counts [[9,1],[1,9]] by predicted row: columns normalize to 90/10.
        let mut pred = Vec::new();
        let mut actual = Vec::new();
        for _ in 0..9 {
            pred.push(0);
            actual.push(0);
        }
        pred.push(1);
        actual.push(0);
        pred.push(0);
        actual.push(1);
        for _ in 0..9 {
            pred.push(1);
            actual.push(1);
        }
        let m = confusion(&lv(&["N", "P"]), &pred, &actual).unwrap();
        assert_eq!(m.counts[0][0], 9);
        assert_eq!(m.percent[0][0], 90.0);
        assert_eq!(m.percent[1][0], 10.0);
        assert_eq!(m.percent[0][1], 10.0);
        assert_eq!(m.percent[1][1], 90.0);
        for a in 0..2 {
            let colsum: f64 = (0..2).map(|p| m.percent[p][a]).sum();
            assert!((colsum - 100.0).abs() < 0.01);
        }
    }

    #[test]
    fn replicate_average_examples() {
        let r = |mse_v: f64| RegressionReport {
            bias: 0.0,
            sd: 1.0,
            sd_conventional: 1.0,
            mse: mse_v,
            pi_coverage: Some(0.9),
        };
        let one = replicate_average(&[r(2.0)]);
        assert_eq!(one.mse, 2.0);
        let avg = replicate_average(&[r(2.0), r(4.0)]);
        assert_eq!(avg.mse, 3.0);
        assert_eq!(avg.pi_coverage, Some(0.9));
        let flipped = replicate_average(&[r(4.0), r(2.0)]);
        assert_eq!(avg.mse, flipped.mse);
    }
}
