//! Extended Bonferroni and Benjamini–Hochberg selection rules.
//!
//! Both rules are pure functions from a p-value vector and a threshold to the
//! set of rejected hypotheses. All comparisons are inclusive (`p <= cutoff`).
//! Ties among equal p-values are ordered by original index, so the step-up
//! rule always rejects a prefix of the `(p-value, index)` order.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Observed p-values of one experiment, one per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector<F> {
    values: Vec<F>,
}

impl<F: Real> PValueVector<F> {
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("p-value vector is empty"));
        }
        if let Some(i) = values
            .iter()
            .position(|p| !(*p >= F::zero() && *p <= F::one()))
        {
            return Err(Error::input(format!(
                "p-value {} at index {i} is outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// Hypothesis indices ordered by `(p-value, index)`.
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| cmp_p(self.values[a], self.values[b]).then(a.cmp(&b)));
        order
    }
}

// Values are validated to lie in [0, 1], so partial_cmp never fails.
#[inline]
pub(crate) fn cmp_p<F: Real>(a: F, b: F) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Indices of rejected hypotheses, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RejectionSet {
    indices: Vec<usize>,
    m: usize,
}

impl RejectionSet {
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("rejection indices are not distinct"));
        }
        if let Some(&last) = indices.last() {
            if last >= m {
                return Err(Error::input(format!("rejection index {last} >= m = {m}")));
            }
        }
        Ok(Self { indices, m })
    }

    pub fn empty(m: usize) -> Self {
        Self {
            indices: Vec::new(),
            m,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn is_subset(&self, other: &RejectionSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

/// Nominal PFER bound γ of the extended Bonferroni rule, `0 < γ <= m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonferroniParam<F> {
    gamma: F,
}

impl<F: Real> BonferroniParam<F> {
    /// Checks `γ > 0`; the upper bound `γ <= m` is checked against the data.
    pub fn new(gamma: F) -> Result<Self> {
        if !(gamma > F::zero()) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("{gamma} must be positive")));
        }
        Ok(Self { gamma })
    }

    pub fn for_m(gamma: F, m: usize) -> Result<Self> {
        let p = Self::new(gamma)?;
        p.check_m(m)?;
        Ok(p)
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    /// Per-hypothesis cutoff γ/m.
    pub fn cutoff(&self, m: usize) -> F {
        self.gamma / F::count(m)
    }

    fn check_m(&self, m: usize) -> Result<()> {
        if self.gamma > F::count(m) {
            return Err(Error::param(
                "gamma",
                format!("{} exceeds the number of hypotheses {m}", self.gamma),
            ));
        }
        Ok(())
    }
}

/// Nominal FDR level β of the step-up rule, `0 < β < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BHParam<F> {
    beta: F,
}

impl<F: Real> BHParam<F> {
    pub fn new(beta: F) -> Result<Self> {
        if !(beta > F::zero() && beta < F::one()) {
            return Err(Error::param("beta", format!("{beta} outside (0, 1)")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    /// Step-up threshold for the k-th smallest p-value (1-based), `kβ/m`.
    ///
    /// Every BH code path goes through this expression so that boundary
    /// decisions agree bit for bit.
    #[inline]
    pub fn step_threshold(&self, k: usize, m: usize) -> F {
        F::count(k) * self.beta / F::count(m)
    }
}

/// Extended Bonferroni: rejects every hypothesis with `p_i <= γ/m`.
pub fn bonferroni_reject<F: Real>(
    p: &PValueVector<F>,
    param: &BonferroniParam<F>,
) -> Result<RejectionSet> {
    let m = p.m();
    param.check_m(m)?;
    let cutoff = param.cutoff(m);
    let indices = p
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= cutoff)
        .map(|(i, _)| i)
        .collect();
    Ok(RejectionSet { indices, m })
}

/// Benjamini–Hochberg step-up: rejects the `k*` smallest p-values where
/// `k* = max{k : p_(k) <= kβ/m}`, or nothing if no such `k` exists.
pub fn bh_reject<F: Real>(p: &PValueVector<F>, param: &BHParam<F>) -> RejectionSet {
    let m = p.m();
    let order = p.ascending_order();
    let k_star = step_up_count(&order, p.values(), param);
    RejectionSet::new(order[..k_star].to_vec(), m).expect("prefix of a permutation")
}

fn step_up_count<F: Real>(order: &[usize], values: &[F], param: &BHParam<F>) -> usize {
    let m = values.len();
    (1..=m)
        .rev()
        .find(|&k| values[order[k - 1]] <= param.step_threshold(k, m))
        .unwrap_or(0)
}

/// Brute-force reference for [`bh_reject`] that never sorts.
///
/// `p_(k) <= t` holds exactly when at least `k` p-values are `<= t`, so every
/// `k` from `m` down to 1 is tested by counting. The rejected hypotheses are
/// those whose `(p-value, index)` rank is below `k*`, also found by counting.
/// Quadratic in `m`.
pub fn bh_reject_oracle<F: Real>(p: &PValueVector<F>, param: &BHParam<F>) -> RejectionSet {
    let m = p.m();
    let values = p.values();
    let mut k_star = 0;
    for k in (1..=m).rev() {
        let threshold = param.step_threshold(k, m);
        let at_or_below = values.iter().filter(|&&v| v <= threshold).count();
        if at_or_below >= k {
            k_star = k;
            break;
        }
    }
    let indices = (0..m)
        .filter(|&i| {
            let rank = (0..m)
                .filter(|&j| values[j] < values[i] || (values[j] == values[i] && j < i))
                .count();
            rank < k_star
        })
        .collect();
    RejectionSet { indices, m }
}

/// P-values sorted once so either rule can be applied at many thresholds
/// cheaply. Results are identical to [`bonferroni_reject`] and [`bh_reject`].
#[derive(Debug, Clone)]
pub struct RankedPValues<F> {
    order: Vec<usize>,
    sorted: Vec<F>,
}

impl<F: Real> RankedPValues<F> {
    pub fn new(p: &PValueVector<F>) -> Self {
        let order = p.ascending_order();
        let sorted = order.iter().map(|&i| p.values()[i]).collect();
        Self { order, sorted }
    }

    pub fn m(&self) -> usize {
        self.sorted.len()
    }

    /// Hypothesis index at each sorted position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted(&self) -> &[F] {
        &self.sorted
    }

    /// Number of Bonferroni rejections at `γ`; γ is not range-checked.
    pub fn bonferroni_count(&self, param: &BonferroniParam<F>) -> usize {
        let cutoff = param.cutoff(self.m());
        self.sorted.partition_point(|&v| v <= cutoff)
    }

    /// Number of step-up rejections `k*` at `β`.
    pub fn bh_count(&self, param: &BHParam<F>) -> usize {
        let m = self.m();
        (1..=m)
            .rev()
            .find(|&k| self.sorted[k - 1] <= param.step_threshold(k, m))
            .unwrap_or(0)
    }

    /// The `k` hypotheses with the smallest p-values.
    pub fn leading(&self, k: usize) -> RejectionSet {
        RejectionSet::new(self.order[..k].to_vec(), self.m()).expect("prefix of a permutation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> PValueVector<f64> {
        PValueVector::new(v.to_vec()).unwrap()
    }

    fn set(ix: &[usize], m: usize) -> RejectionSet {
        RejectionSet::new(ix.to_vec(), m).unwrap()
    }

    #[test]
    fn bonferroni_examples() {
        let p = pv(&[0.001, 0.02, 0.9]);
        let small = BonferroniParam::new(0.05f64).unwrap();
        assert!((small.cutoff(3) - 0.0166667).abs() < 1e-7);
        assert_eq!(bonferroni_reject(&p, &small).unwrap(), set(&[0], 3));

        let full = BonferroniParam::new(3.0).unwrap();
        assert_eq!(full.cutoff(3), 1.0);
        assert_eq!(bonferroni_reject(&p, &full).unwrap(), set(&[0, 1, 2], 3));
    }

    #[test]
    fn bonferroni_cutoff_is_inclusive() {
        let m = 1255;
        let param = BonferroniParam::new(0.6f64).unwrap();
        let cutoff = param.cutoff(m);
        assert!((cutoff - 4.78088e-4).abs() < 1e-9);
        let mut values = vec![0.5; m];
        values[7] = cutoff;
        values[8] = f64::from_bits(cutoff.to_bits() + 1);
        let r = bonferroni_reject(&pv(&values), &param).unwrap();
        assert_eq!(r, set(&[7], m));
    }

    #[test]
    fn bonferroni_parameter_errors() {
        assert!(BonferroniParam::new(0.0).is_err());
        assert!(BonferroniParam::new(-1.0).is_err());
        assert!(BonferroniParam::new(f64::NAN).is_err());
        let p = pv(&[0.1, 0.2]);
        let too_big = BonferroniParam::new(2.5).unwrap();
        assert!(matches!(
            bonferroni_reject(&p, &too_big),
            Err(Error::InvalidParameter { name: "gamma", .. })
        ));
        assert!(BonferroniParam::for_m(2.0, 2).is_ok());
    }

    #[test]
    fn empty_and_out_of_range_inputs() {
        assert!(matches!(
            PValueVector::<f64>::new(vec![]),
            Err(Error::InvalidInput(_))
        ));
        assert!(PValueVector::new(vec![0.1, 1.01]).is_err());
        assert!(PValueVector::new(vec![f64::NAN]).is_err());
        assert!(PValueVector::new(vec![0.0, 1.0]).is_ok());
        assert!(BHParam::new(0.0).is_err());
        assert!(BHParam::new(1.0).is_err());
    }

    #[test]
    fn bh_examples() {
        let beta = BHParam::new(0.05).unwrap();
        for (p, want) in [
            (vec![0.001, 0.03, 0.9], vec![0, 1]),
            (vec![1.0, 1.0, 1.0], vec![]),
            (vec![0.01, 0.02, 0.5], vec![0, 1]),
            (vec![0.04], vec![0]),
            (vec![0.04, 0.05], vec![0, 1]),
        ] {
            let p = pv(&p);
            let want = set(&want, p.m());
            assert_eq!(bh_reject(&p, &beta), want);
            assert_eq!(bh_reject_oracle(&p, &beta), want);
        }
    }

    #[test]
    fn bh_ties_follow_index_order() {
        // A step-up cut can never split a run of equal values: if p_(k) = p_(k+1)
        // passes at k it also passes at k + 1. All copies go in or out together.
        let beta = BHParam::new(0.3).unwrap();
        let p = pv(&[0.2, 0.5, 0.2, 0.2, 0.9]);
        // thresholds 0.06, 0.12, 0.18, 0.24, 0.30
        assert!(bh_reject(&p, &beta).is_empty());
        let beta = BHParam::new(0.55).unwrap();
        // thresholds 0.11, 0.22, 0.33, 0.44, 0.55 -> k* = 3 (p_(3)=0.2 <= 0.33)
        assert_eq!(bh_reject(&p, &beta), set(&[0, 2, 3], 5));
        assert_eq!(bh_reject_oracle(&p, &beta), set(&[0, 2, 3], 5));
    }

    #[test]
    fn ranked_counts_match_direct_rules() {
        let p = pv(&[0.3, 0.0001, 0.02, 0.0004, 0.7, 0.0004, 1.0, 0.0]);
        let ranked = RankedPValues::new(&p);
        for gamma in [0.001, 0.0032, 0.16, 1.0, 5.0, 8.0] {
            let param = BonferroniParam::new(gamma).unwrap();
            let direct = bonferroni_reject(&p, &param).unwrap();
            let k = ranked.bonferroni_count(&param);
            assert_eq!(ranked.leading(k), direct, "gamma={gamma}");
        }
        for beta in [0.0001, 0.001, 0.01, 0.1, 0.5, 0.99] {
            let param = BHParam::new(beta).unwrap();
            let k = ranked.bh_count(&param);
            assert_eq!(ranked.leading(k), bh_reject(&p, &param), "beta={beta}");
        }
    }

    #[test]
    fn rejection_set_validation() {
        assert!(RejectionSet::new(vec![1, 1], 3).is_err());
        assert!(RejectionSet::new(vec![3], 3).is_err());
        let s = RejectionSet::new(vec![2, 0], 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert!(s.contains(2) && !s.contains(1));
        assert!(RejectionSet::empty(3).is_subset(&s));
    }

    #[test]
    fn single_precision() {
        let p = PValueVector::new(vec![0.001f32, 0.03, 0.9]).unwrap();
        let r = bh_reject(&p, &BHParam::new(0.05f32).unwrap());
        assert_eq!(r.indices(), &[0, 1]);
    }
}
