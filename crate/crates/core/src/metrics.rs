//! Stability indicators of matched procedures on the control set.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::error_rates::{standard_error, ReplicateOutcome};
use crate::scalar::Real;

/// Distribution of true (`S`) and total (`R`) discoveries at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySummary<F> {
    pub mean_s: F,
    pub median_s: F,
    pub sd_s: F,
    pub se_mean_s: F,
    pub mean_r: F,
    pub median_r: F,
    pub sd_r: F,
    pub se_mean_r: F,
    pub replicates: usize,
}

struct Moments<F> {
    mean: F,
    median: F,
    sd: F,
    se: F,
}

fn moments<F: Real>(counts: &mut [usize]) -> Moments<F> {
    let n = counts.len();
    let mean = F::count(counts.iter().sum::<usize>()) / F::count(n);
    let se = standard_error(counts.iter().map(|&c| F::count(c)), mean, n);
    let sd = se * F::count(n).sqrt();
    counts.sort_unstable();
    let median = if n % 2 == 1 {
        F::count(counts[n / 2])
    } else {
        (F::count(counts[n / 2 - 1]) + F::count(counts[n / 2])) / F::lit(2.0)
    };
    Moments {
        mean,
        median,
        sd,
        se,
    }
}

/// Sample mean, median (midpoint for even counts) and SD (`n - 1`) of `S` and `R`.
pub fn summarize<F: Real>(outcomes: &[ReplicateOutcome<F>]) -> Result<StabilitySummary<F>> {
    if outcomes.is_empty() {
        return Err(Error::input("no outcomes to summarize"));
    }
    let s = moments::<F>(&mut outcomes.iter().map(|o| o.s).collect::<Vec<_>>());
    let r = moments::<F>(&mut outcomes.iter().map(|o| o.r).collect::<Vec<_>>());
    Ok(StabilitySummary {
        mean_s: s.mean,
        median_s: s.median,
        sd_s: s.sd,
        se_mean_s: s.se,
        mean_r: r.mean,
        median_r: r.median,
        sd_r: r.sd,
        se_mean_r: r.se,
        replicates: outcomes.len(),
    })
}

/// A distinct `(R_bonf, R_bh)` outcome and how many replicates produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ScatterPoint {
    pub r_bonf: usize,
    pub r_bh: usize,
    pub count: usize,
}

impl ScatterPoint {
    /// Frequent outcomes are drawn as closed circles.
    pub fn is_frequent(&self, min_count: usize) -> bool {
        self.count >= min_count
    }
}

/// Paired comparison of rejection counts of the two procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonStats<F> {
    /// `None` when either sequence has zero variance.
    pub pearson_r: Option<F>,
    pub identical_count: usize,
    pub bonf_wins: usize,
    pub bh_wins: usize,
    pub scatter: Vec<ScatterPoint>,
}

impl<F> ComparisonStats<F> {
    pub fn replicates(&self) -> usize {
        self.identical_count + self.bonf_wins + self.bh_wins
    }
}

/// Pearson correlation; `None` if either side is constant.
pub fn pearson<F: Real>(x: &[usize], y: &[usize]) -> Option<F> {
    // Integer moments keep the degenerate check and the sign exact.
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let cxy = n * sxy - sx * sy;
    let cxx = n * sxx - sx * sx;
    let cyy = n * syy - sy * sy;
    if cxx == 0 || cyy == 0 {
        return None;
    }
    let to_f = |v: i128| F::lit(v as f64);
    let r = to_f(cxy) / (to_f(cxx).sqrt() * to_f(cyy).sqrt());
    Some(r.max(-F::one()).min(F::one()))
}

pub fn compare_outcomes<F: Real>(r_bonf: &[usize], r_bh: &[usize]) -> Result<ComparisonStats<F>> {
    if r_bonf.is_empty() || r_bonf.len() != r_bh.len() {
        return Err(Error::input(format!(
            "need equal-length nonempty sequences, got {} and {}",
            r_bonf.len(),
            r_bh.len()
        )));
    }
    let mut tally: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let (mut identical_count, mut bonf_wins, mut bh_wins) = (0, 0, 0);
    for (&a, &b) in r_bonf.iter().zip(r_bh) {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => identical_count += 1,
            std::cmp::Ordering::Greater => bonf_wins += 1,
            std::cmp::Ordering::Less => bh_wins += 1,
        }
        *tally.entry((a, b)).or_default() += 1;
    }
    Ok(ComparisonStats {
        pearson_r: pearson(r_bonf, r_bh),
        identical_count,
        bonf_wins,
        bh_wins,
        scatter: tally
            .into_iter()
            .map(|((r_bonf, r_bh), count)| ScatterPoint {
                r_bonf,
                r_bh,
                count,
            })
            .collect(),
    })
}

/// Grid index with the smallest `sd_r`; ties go to the smallest index.
pub fn sd_minimum_location<F: Real>(summaries: &[StabilitySummary<F>]) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (i, s) in summaries.iter().enumerate() {
        if best.is_none_or(|(_, b)| s.sd_r < b) {
            best = Some((i, s.sd_r));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_s(s: &[usize]) -> Vec<ReplicateOutcome<f64>> {
        s.iter()
            .map(|&s| ReplicateOutcome::from_counts(0, s))
            .collect()
    }

    fn with_sd_r(sd: &[f64]) -> Vec<StabilitySummary<f64>> {
        sd.iter()
            .map(|&sd_r| StabilitySummary {
                mean_s: 0.0,
                median_s: 0.0,
                sd_s: 0.0,
                se_mean_s: 0.0,
                mean_r: 0.0,
                median_r: 0.0,
                sd_r,
                se_mean_r: 0.0,
                replicates: 1,
            })
            .collect()
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&with_s(&[10, 10, 10])).unwrap();
        assert_eq!((s.mean_s, s.median_s, s.sd_s), (10.0, 10.0, 0.0));

        let s = summarize(&with_s(&[4, 1, 3, 2])).unwrap();
        assert_eq!((s.mean_s, s.median_s), (2.5, 2.5));
        assert!((s.sd_s - 1.29099).abs() < 1e-5);
        assert!((s.se_mean_s - s.sd_s / 2.0).abs() < 1e-15);

        let r: Vec<_> = [0, 100]
            .iter()
            .map(|&v| ReplicateOutcome::<f64>::from_counts(v, 0))
            .collect();
        let s = summarize(&r).unwrap();
        assert_eq!(s.mean_r, 50.0);
        assert!((s.sd_r - 70.7107).abs() < 1e-4);
        assert!(s.mean_r >= s.mean_s);

        assert!(summarize::<f64>(&[]).is_err());
        let one = summarize(&with_s(&[7])).unwrap();
        assert_eq!((one.sd_s, one.se_mean_s), (0.0, 0.0));
    }

    #[test]
    fn compare_examples() {
        let c = compare_outcomes::<f64>(&[3, 5, 9], &[3, 5, 9]).unwrap();
        assert_eq!((c.identical_count, c.bonf_wins, c.bh_wins), (3, 0, 0));
        assert!((c.pearson_r.unwrap() - 1.0).abs() < 1e-15);

        let c = compare_outcomes::<f64>(&[10, 12], &[12, 10]).unwrap();
        assert_eq!((c.identical_count, c.bonf_wins, c.bh_wins), (0, 1, 1));
        assert_eq!(c.pearson_r, Some(-1.0));
        assert_eq!(c.replicates(), 2);
    }

    #[test]
    fn compare_constant_sequence() {
        let c = compare_outcomes::<f64>(&[4, 4, 4], &[1, 4, 6]).unwrap();
        assert_eq!(c.pearson_r, None);
        assert_eq!((c.identical_count, c.bonf_wins, c.bh_wins), (1, 1, 1));
        assert!(compare_outcomes::<f64>(&[1], &[1, 2]).is_err());
        assert!(compare_outcomes::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn scatter_multiplicities() {
        let bonf = [5, 5, 5, 6, 7];
        let bh = [5, 5, 6, 6, 5];
        let c = compare_outcomes::<f64>(&bonf, &bh).unwrap();
        assert_eq!(
            c.scatter,
            vec![
                ScatterPoint {
                    r_bonf: 5,
                    r_bh: 5,
                    count: 2
                },
                ScatterPoint {
                    r_bonf: 5,
                    r_bh: 6,
                    count: 1
                },
                ScatterPoint {
                    r_bonf: 6,
                    r_bh: 6,
                    count: 1
                },
                ScatterPoint {
                    r_bonf: 7,
                    r_bh: 5,
                    count: 1
                },
            ]
        );
        assert!(c.scatter[0].is_frequent(2) && !c.scatter[1].is_frequent(2));
    }

    #[test]
    fn sd_minimum_examples() {
        assert_eq!(sd_minimum_location(&with_sd_r(&[5.0, 3.0, 4.0])), Some(1));
        assert_eq!(sd_minimum_location(&with_sd_r(&[2.0, 2.0, 2.0])), Some(0));
        assert_eq!(sd_minimum_location::<f64>(&[]), None);
    }
}
