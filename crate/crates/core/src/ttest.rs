//! Two-sample pooled-variance Student t test.

use crate::error::{Error, Result};
use crate::procedures::PValueVector;
use crate::scalar::Real;
use crate::special::incomplete_beta_split;

/// Log-expression matrices for two groups, genes in rows (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGroupDataset<F> {
    m: usize,
    n_a: usize,
    n_b: usize,
    group_a: Vec<F>,
    group_b: Vec<F>,
}

impl<F: Real> TwoGroupDataset<F> {
    pub fn new(m: usize, n_a: usize, n_b: usize, group_a: Vec<F>, group_b: Vec<F>) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("dataset has no genes"));
        }
        if n_a < 2 || n_b < 2 {
            return Err(Error::input(format!(
                "each group needs at least 2 arrays, got {n_a} and {n_b}"
            )));
        }
        if group_a.len() != m * n_a || group_b.len() != m * n_b {
            return Err(Error::input("matrix sizes do not match m x n"));
        }
        if group_a.iter().chain(&group_b).any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        Ok(Self {
            m,
            n_a,
            n_b,
            group_a,
            group_b,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn row_a(&self, gene: usize) -> &[F] {
        &self.group_a[gene * self.n_a..(gene + 1) * self.n_a]
    }

    pub fn row_b(&self, gene: usize) -> &[F] {
        &self.group_b[gene * self.n_b..(gene + 1) * self.n_b]
    }

    /// Degrees of freedom of the pooled test, `n_a + n_b - 2`.
    pub fn df(&self) -> usize {
        self.n_a + self.n_b - 2
    }

    /// Applies `f` to every entry of both groups.
    pub fn map(&self, f: impl Fn(F) -> F) -> Result<Self> {
        Self::new(
            self.m,
            self.n_a,
            self.n_b,
            self.group_a.iter().map(|&v| f(v)).collect(),
            self.group_b.iter().map(|&v| f(v)).collect(),
        )
    }
}

fn mean_and_ss<F: Real>(x: &[F]) -> (F, F) {
    let mean = x.iter().copied().sum::<F>() / F::count(x.len());
    let ss = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss)
}

/// Equal-variance two-sample t statistic `(x̄ - ȳ) / sqrt(s_p² (1/n_x + 1/n_y))`.
pub fn pooled_t_statistic<F: Real>(x: &[F], y: &[F]) -> Result<F> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::input("each sample needs at least 2 observations"));
    }
    let (mx, ssx) = mean_and_ss(x);
    let (my, ssy) = mean_and_ss(y);
    let (nx, ny) = (F::count(x.len()), F::count(y.len()));
    let pooled = (ssx + ssy) / (nx + ny - F::lit(2.0));
    if !(pooled > F::zero()) {
        return Err(Error::DegenerateVariance { gene: None });
    }
    Ok((mx - my) / (pooled * (nx.recip() + ny.recip())).sqrt())
}

/// Two-sided p-value `2 P(T_df >= |t|)` of Student's t distribution.
///
/// Uses `2 P(T >= |t|) = I_{df/(df+t²)}(df/2, 1/2)`; for `df = 1` the Cauchy
/// closed form is used instead.
pub fn t_pvalue<F: Real>(t: F, df: F) -> Result<F> {
    if !(df >= F::one()) || !df.is_finite() {
        return Err(Error::param("df", format!("{df} must be at least 1")));
    }
    if !t.is_finite() {
        return Err(Error::param("t", format!("{t} is not finite")));
    }
    let t = t.abs();
    if t == F::zero() {
        return Ok(F::one());
    }
    if df == F::one() {
        let frac_2_pi = F::lit(std::f64::consts::FRAC_2_PI);
        return Ok(frac_2_pi * t.recip().atan());
    }
    let t2 = t * t;
    let denom = df + t2;
    let half = F::lit(0.5);
    let p = incomplete_beta_split(half * df, half, df / denom, t2 / denom)?;
    Ok(p.max(F::zero()).min(F::one()))
}

/// What to do with a gene whose pooled variance is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    #[default]
    Abort,
    /// Report the gene as p = 1.
    PValueOne,
}

pub fn pvalues_for_dataset<F: Real>(d: &TwoGroupDataset<F>) -> Result<PValueVector<F>> {
    pvalues_for_dataset_with(d, DegeneratePolicy::Abort)
}

pub fn pvalues_for_dataset_with<F: Real>(
    d: &TwoGroupDataset<F>,
    policy: DegeneratePolicy,
) -> Result<PValueVector<F>> {
    let df = F::count(d.df());
    let mut out = Vec::with_capacity(d.m());
    for gene in 0..d.m() {
        let p = match pooled_t_statistic(d.row_a(gene), d.row_b(gene)) {
            Ok(t) => t_pvalue(t, df)?,
            Err(Error::DegenerateVariance { .. }) if policy == DegeneratePolicy::PValueOne => {
                F::one()
            }
            Err(Error::DegenerateVariance { .. }) => {
                return Err(Error::DegenerateVariance { gene: Some(gene) })
            }
            Err(e) => return Err(e),
        };
        out.push(p);
    }
    PValueVector::new(out)
}
