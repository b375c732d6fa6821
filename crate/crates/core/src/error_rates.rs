//! Ground-truth classification of rejections and Monte Carlo error-rate estimates.

use crate::error::{Error, Result};
use crate::procedures::{BHParam, BonferroniParam, PValueVector, RankedPValues, RejectionSet};
use crate::scalar::Real;

/// Which hypotheses are false nulls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    is_alternative: Vec<bool>,
    m_alt: usize,
}

impl GroundTruth {
    pub fn new(alternative_indices: &[usize], m: usize) -> Result<Self> {
        let mut is_alternative = vec![false; m];
        for &i in alternative_indices {
            if i >= m {
                return Err(Error::input(format!("alternative index {i} >= m = {m}")));
            }
            if std::mem::replace(&mut is_alternative[i], true) {
                return Err(Error::input(format!("alternative index {i} listed twice")));
            }
        }
        Ok(Self {
            is_alternative,
            m_alt: alternative_indices.len(),
        })
    }

    /// Alternatives occupy `[0, m_alt)`.
    pub fn leading(m_alt: usize, m: usize) -> Result<Self> {
        if m_alt > m {
            return Err(Error::input(format!("m_alt = {m_alt} exceeds m = {m}")));
        }
        let mut is_alternative = vec![false; m];
        is_alternative[..m_alt].fill(true);
        Ok(Self {
            is_alternative,
            m_alt,
        })
    }

    pub fn m(&self) -> usize {
        self.is_alternative.len()
    }

    pub fn m_alt(&self) -> usize {
        self.m_alt
    }

    /// Number of true nulls.
    pub fn m0(&self) -> usize {
        self.m() - self.m_alt
    }

    pub fn is_alternative(&self, i: usize) -> bool {
        self.is_alternative[i]
    }

    pub fn alternative_indices(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.is_alternative[i]).collect()
    }
}

/// Outcome of one procedure on one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome<F> {
    /// False discoveries.
    pub v: usize,
    /// True discoveries.
    pub s: usize,
    /// Total rejections, `v + s`.
    pub r: usize,
    /// False discovery proportion; 0 when nothing is rejected.
    pub eta: F,
}

impl<F: Real> ReplicateOutcome<F> {
    pub fn from_counts(v: usize, s: usize) -> Self {
        let r = v + s;
        let eta = if r == 0 {
            F::zero()
        } else {
            F::count(v) / F::count(r)
        };
        Self { v, s, r, eta }
    }
}

pub fn classify<F: Real>(
    rejections: &RejectionSet,
    truth: &GroundTruth,
) -> Result<ReplicateOutcome<F>> {
    if rejections.m() != truth.m() {
        return Err(Error::input(format!(
            "rejection set refers to m = {} but ground truth has m = {}",
            rejections.m(),
            truth.m()
        )));
    }
    let s = rejections
        .indices()
        .iter()
        .filter(|&&i| truth.is_alternative(i))
        .count();
    Ok(ReplicateOutcome::from_counts(rejections.len() - s, s))
}

/// Sample means of the per-replicate error quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimates<F> {
    pub fdr: F,
    pub pfer: F,
    pub fwer: F,
    /// `pfer / m`.
    pub pcer: F,
    pub se_fdr: F,
    pub se_pfer: F,
    pub se_fwer: F,
    pub replicates: usize,
}

pub fn aggregate_rates<F: Real>(
    outcomes: &[ReplicateOutcome<F>],
    m: usize,
) -> Result<RateEstimates<F>> {
    if outcomes.is_empty() {
        return Err(Error::input("no replicate outcomes to aggregate"));
    }
    if m == 0 {
        return Err(Error::param("m", "must be positive"));
    }
    let n = outcomes.len();
    // Integer sums keep fwer <= pfer exact.
    let v_sum: usize = outcomes.iter().map(|o| o.v).sum();
    let any_sum = outcomes.iter().filter(|o| o.v > 0).count();
    let nf = F::count(n);
    let pfer = F::count(v_sum) / nf;
    let fwer = F::count(any_sum) / nf;
    let fdr = outcomes.iter().map(|o| o.eta).sum::<F>() / nf;

    let se = |mean: F, f: &dyn Fn(&ReplicateOutcome<F>) -> F| {
        standard_error(outcomes.iter().map(f), mean, n)
    };
    Ok(RateEstimates {
        fdr,
        pfer,
        fwer,
        pcer: pfer / F::count(m),
        se_fdr: se(fdr, &|o| o.eta),
        se_pfer: se(pfer, &|o| F::count(o.v)),
        se_fwer: se(fwer, &|o| if o.v > 0 { F::one() } else { F::zero() }),
        replicates: n,
    })
}

/// Standard error of the mean with the unbiased variance; 0 for a single value.
pub(crate) fn standard_error<F: Real>(values: impl Iterator<Item = F>, mean: F, n: usize) -> F {
    if n < 2 {
        return F::zero();
    }
    let ss: F = values.map(|x| (x - mean) * (x - mean)).sum();
    (ss / F::count(n - 1) / F::count(n)).sqrt()
}

/// One replicate's p-values ranked once and annotated with ground truth, so
/// outcomes at any threshold cost a search rather than a full pass.
#[derive(Debug, Clone)]
pub struct RankedReplicate<F> {
    ranked: RankedPValues<F>,
    // alternatives among the first k sorted positions, k = 0..=m
    alt_prefix: Vec<u32>,
}

impl<F: Real> RankedReplicate<F> {
    pub fn new(p: &PValueVector<F>, truth: &GroundTruth) -> Result<Self> {
        if p.m() != truth.m() {
            return Err(Error::input(format!(
                "p-value vector has m = {} but ground truth has m = {}",
                p.m(),
                truth.m()
            )));
        }
        let ranked = RankedPValues::new(p);
        let mut alt_prefix = Vec::with_capacity(p.m() + 1);
        alt_prefix.push(0u32);
        let mut acc = 0u32;
        for &i in ranked.order() {
            acc += u32::from(truth.is_alternative(i));
            alt_prefix.push(acc);
        }
        Ok(Self { ranked, alt_prefix })
    }

    pub fn ranked(&self) -> &RankedPValues<F> {
        &self.ranked
    }

    /// Outcome of rejecting the `k` smallest p-values.
    pub fn outcome_of_leading(&self, k: usize) -> ReplicateOutcome<F> {
        let s = self.alt_prefix[k] as usize;
        ReplicateOutcome::from_counts(k - s, s)
    }

    pub fn bonferroni(&self, param: &BonferroniParam<F>) -> ReplicateOutcome<F> {
        self.outcome_of_leading(self.ranked.bonferroni_count(param))
    }

    pub fn bh(&self, param: &BHParam<F>) -> ReplicateOutcome<F> {
        self.outcome_of_leading(self.ranked.bh_count(param))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedures::{bh_reject, bonferroni_reject};

    #[test]
    fn classify_examples() {
        let truth = GroundTruth::leading(125, 1255).unwrap();
        let rej = RejectionSet::new((0..130).collect(), 1255).unwrap();
        let o: ReplicateOutcome<f64> = classify(&rej, &truth).unwrap();
        assert_eq!((o.v, o.s, o.r), (5, 125, 130));
        assert!((o.eta - 0.0384615).abs() < 1e-7);

        let o: ReplicateOutcome<f64> = classify(&RejectionSet::empty(1255), &truth).unwrap();
        assert_eq!((o.v, o.s, o.r, o.eta), (0, 0, 0, 0.0));

        let rej = RejectionSet::new((500..507).collect(), 1255).unwrap();
        let o: ReplicateOutcome<f64> = classify(&rej, &truth).unwrap();
        assert_eq!((o.v, o.s, o.r, o.eta), (7, 0, 7, 1.0));
    }

    #[test]
    fn classify_rejects_mismatched_m() {
        let truth = GroundTruth::leading(1, 4).unwrap();
        let rej = RejectionSet::empty(5);
        assert!(classify::<f64>(&rej, &truth).is_err());
    }

    #[test]
    fn ground_truth_validation() {
        assert!(GroundTruth::new(&[0, 4], 4).is_err());
        assert!(GroundTruth::new(&[1, 1], 4).is_err());
        let t = GroundTruth::new(&[3, 1], 4).unwrap();
        assert_eq!((t.m0(), t.m_alt()), (2, 2));
        assert_eq!(t.alternative_indices(), vec![1, 3]);
        assert!(GroundTruth::leading(5, 4).is_err());
    }

    #[test]
    fn aggregate_example() {
        let outcomes: Vec<ReplicateOutcome<f64>> = (0..3)
            .map(|v| ReplicateOutcome::from_counts(v, 0))
            .collect();
        let est = aggregate_rates(&outcomes, 10).unwrap();
        assert_eq!(est.pfer, 1.0);
        assert!((est.fwer - 2.0 / 3.0).abs() < 1e-15);
        assert!((est.fdr - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(est.pcer, est.pfer / 10.0);
        // sd of (0, 1, 2) is 1
        assert!((est.se_pfer - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn aggregate_all_zero() {
        let outcomes = vec![ReplicateOutcome::<f64>::from_counts(0, 0); 4];
        let est = aggregate_rates(&outcomes, 3).unwrap();
        assert_eq!(
            (est.fdr, est.pfer, est.fwer, est.pcer),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!((est.se_fdr, est.se_pfer, est.se_fwer), (0.0, 0.0, 0.0));
        assert!(aggregate_rates::<f64>(&[], 3).is_err());
    }

    #[test]
    fn ranked_replicate_matches_classify() {
        let truth = GroundTruth::new(&[0, 2, 5], 7).unwrap();
        let p = PValueVector::new(vec![0.001, 0.2, 0.004, 0.004, 0.8, 0.03, 0.0005]).unwrap();
        let ranked = RankedReplicate::new(&p, &truth).unwrap();
        for gamma in [0.001, 0.01, 0.03, 0.2, 1.0, 7.0] {
            let param = BonferroniParam::new(gamma).unwrap();
            let want = classify(&bonferroni_reject(&p, &param).unwrap(), &truth).unwrap();
            assert_eq!(ranked.bonferroni(&param), want);
        }
        for beta in [0.001, 0.01, 0.05, 0.3, 0.9] {
            let param = BHParam::new(beta).unwrap();
            let want = classify(&bh_reject(&p, &param), &truth).unwrap();
            assert_eq!(ranked.bh(&param), want);
        }
    }
}
