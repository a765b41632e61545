use serde::{Deserialize, Serialize};

use crate::corpus::{RatingGrid, RatingMatrix};
use crate::error::{Error, Result};
use crate::stats;
use crate::traits::TraitId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Interval,
    Ordinal,
}

impl std::str::FromStr for DistanceMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "interval" => Ok(DistanceMetric::Interval),
            "ordinal" => Ok(DistanceMetric::Ordinal),
            _ => Err(format!("unknown metric '{s}' (interval|ordinal)")),
        }
    }
}

/// Krippendorff's alpha from the coincidence matrix. Only units with at least
/// two ratings are pairable; missing entries are skipped.
pub fn krippendorff_alpha_grid(grid: &RatingGrid, metric: DistanceMetric) -> Result<f64> {
    let units: Vec<Vec<f64>> = (0..grid.n_items())
        .map(|i| grid.row(i).iter().flatten().copied().collect::<Vec<f64>>())
        .filter(|u| u.len() >= 2)
        .collect();
    if units.len() < 2 {
        return Err(Error::Aggregation(format!(
            "{} pairable item(s); need at least two items with two ratings",
            units.len()
        )));
    }

    let mut values: Vec<f64> = units.iter().flatten().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let v = values.len();
    let index = |x: f64| values.binary_search_by(|p| p.total_cmp(&x)).unwrap();

    let mut coincidence = vec![0.0; v * v];
    for u in &units {
        let w = 1.0 / (u.len() as f64 - 1.0);
        for (a, &x) in u.iter().enumerate() {
            for (b, &y) in u.iter().enumerate() {
                if a != b {
                    coincidence[index(x) * v + index(y)] += w;
                }
            }
        }
    }
    let marginals: Vec<f64> = (0..v)
        .map(|c| (0..v).map(|k| coincidence[c * v + k]).sum())
        .collect();
    let n: f64 = marginals.iter().sum();

    let delta2 = |c: usize, k: usize| -> f64 {
        match metric {
            DistanceMetric::Interval => (values[c] - values[k]).powi(2),
            DistanceMetric::Ordinal => {
                let (lo, hi) = (c.min(k), c.max(k));
                let s: f64 = marginals[lo..=hi].iter().sum();
                (s - 0.5 * (marginals[lo] + marginals[hi])).powi(2)
            }
        }
    };

    let (mut observed, mut expected) = (0.0, 0.0);
    for c in 0..v {
        for k in 0..v {
            let d = delta2(c, k);
            observed += coincidence[c * v + k] * d;
            expected += marginals[c] * marginals[k] * d;
        }
    }
    if expected == 0.0 {
        return Err(Error::Degenerate(
            "zero expected disagreement: every rating is identical".into(),
        ));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

pub fn krippendorff_alpha(
    matrix: &RatingMatrix,
    t: TraitId,
    metric: DistanceMetric,
) -> Result<f64> {
    krippendorff_alpha_grid(&matrix.grid(t), metric)
}

/// Correlation of each rater with the mean of the remaining raters over the
/// items both sides rated. `None` where fewer than three items are co-rated
/// or either series is constant.
pub fn one_vs_rest_grid(grid: &RatingGrid) -> Vec<(String, Option<f64>)> {
    (0..grid.n_raters())
        .map(|j| {
            let (mut own, mut rest) = (Vec::new(), Vec::new());
            for i in 0..grid.n_items() {
                let Some(v) = grid.get(i, j) else { continue };
                let others: Vec<f64> = grid
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .filter_map(|(_, x)| *x)
                    .collect();
                if let Some(m) = stats::mean(&others) {
                    own.push(v);
                    rest.push(m);
                }
            }
            let r = if own.len() >= 3 {
                stats::pearson(&own, &rest)
            } else {
                None
            };
            (grid.raters[j].clone(), r)
        })
        .collect()
}

pub fn one_vs_rest_correlation(matrix: &RatingMatrix, t: TraitId) -> Vec<(String, Option<f64>)> {
    one_vs_rest_grid(&matrix.grid(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub trait_id: TraitId,
    pub alpha: Option<f64>,
    pub mean_one_vs_rest_r: Option<f64>,
}

/// Per-trait alpha and mean one-vs-rest correlation.
pub fn agreement_report(matrix: &RatingMatrix, metric: DistanceMetric) -> Vec<AgreementRow> {
    TraitId::ALL
        .iter()
        .map(|&t| {
            let grid = matrix.grid(t);
            let alpha = krippendorff_alpha_grid(&grid, metric).ok();
            let rs: Vec<f64> = one_vs_rest_grid(&grid)
                .into_iter()
                .filter_map(|(_, r)| r)
                .collect();
            AgreementRow {
                trait_id: t,
                alpha,
                mean_one_vs_rest_r: stats::mean(&rs),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&[Option<f64>]]) -> RatingGrid {
        RatingGrid::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn perfect_agreement_is_exactly_one() {
        let g = grid(&[
            &[Some(2.0), Some(2.0), Some(2.0)],
            &[Some(5.0), Some(5.0), None],
            &[Some(7.0), Some(7.0), Some(7.0)],
        ]);
        assert_eq!(
            krippendorff_alpha_grid(&g, DistanceMetric::Interval).unwrap(),
            1.0
        );
        assert_eq!(
            krippendorff_alpha_grid(&g, DistanceMetric::Ordinal).unwrap(),
            1.0
        );
    }

    #[test]
    fn identical_everywhere_is_degenerate() {
        let g = grid(&[&[Some(4.0), Some(4.0)], &[Some(4.0), Some(4.0)]]);
        assert!(matches!(
            krippendorff_alpha_grid(&g, DistanceMetric::Interval),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn textbook_two_rater_interval_value() {
        // Units (1,2),(2,2),(3,4),(4,4): n = 8, Σ o·δ² = 2·(1+1) = 4 over
        // ordered pairs, Σ n_c n_k δ² over the value marginals.
        let g = grid(&[
            &[Some(1.0), Some(2.0)],
            &[Some(2.0), Some(2.0)],
            &[Some(3.0), Some(4.0)],
            &[Some(4.0), Some(4.0)],
        ]);
        // Marginals: 1→1, 2→3, 3→1, 4→3.
        let m = [(1.0, 1.0), (2.0, 3.0), (3.0, 1.0), (4.0, 3.0)];
        let mut e = 0.0;
        for &(a, na) in &m {
            for &(b, nb) in &m {
                e += na * nb * (a - b) * (a - b);
            }
        }
        let expected = 1.0 - 7.0 * 4.0 / e;
        let got = krippendorff_alpha_grid(&g, DistanceMetric::Interval).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn one_vs_rest_extremes() {
        // Rater 0 equals the others' mean, rater 3 is that mean reflected about 4.
        let rows: Vec<Vec<Option<f64>>> = [(2.0, 4.0), (3.0, 5.0), (5.0, 7.0), (1.0, 3.0)]
            .iter()
            .map(|&(a, b)| {
                let m = (a + b) / 2.0;
                vec![Some(m), Some(a), Some(b)]
            })
            .collect();
        let g = RatingGrid::from_rows(&rows).unwrap();
        let r = one_vs_rest_grid(&g);
        assert!((r[0].1.unwrap() - 1.0).abs() < 1e-12);

        let rows2: Vec<Vec<Option<f64>>> = [3.0, 5.0, 2.0, 6.0]
            .iter()
            .map(|&m| vec![Some(m), Some(m), Some(8.0 - m)])
            .collect();
        let g2 = RatingGrid::from_rows(&rows2).unwrap();
        let r2 = one_vs_rest_grid(&g2);
        assert!((r2[2].1.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_vs_rest_constant_is_missing() {
        let g = grid(&[
            &[Some(4.0), Some(1.0)],
            &[Some(4.0), Some(3.0)],
            &[Some(4.0), Some(6.0)],
        ]);
        let r = one_vs_rest_grid(&g);
        assert_eq!(r[0].1, None);
    }
}
