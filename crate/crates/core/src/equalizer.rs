//! Threshold grids and matching of Bonferroni and BH parameters by their
//! estimated FDR or PFER on a training set.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Sub;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::error_rates::{
    aggregate_rates, GroundTruth, RankedReplicate, RateEstimates, ReplicateOutcome,
};
use crate::procedures::{BHParam, BonferroniParam, PValueVector};
use crate::scalar::Real;
use crate::textio::{fmt_real, parse_field, TableReader};

/// Number of thresholds on each grid.
pub const GRID_LEN: usize = 280;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Procedure {
    Bonferroni,
    BenjaminiHochberg,
}

impl Procedure {
    pub fn name(self) -> &'static str {
        match self {
            Procedure::Bonferroni => "bonferroni",
            Procedure::BenjaminiHochberg => "bh",
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error rate used to equalize the two procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Fdr,
    Pfer,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Fdr => "fdr",
            Metric::Pfer => "pfer",
        }
    }

    pub fn of<F: Copy>(self, est: &RateEstimates<F>) -> F {
        match self {
            Metric::Fdr => est.fdr,
            Metric::Pfer => est.pfer,
        }
    }

    pub fn se_of<F: Copy>(self, est: &RateEstimates<F>) -> F {
        match self {
            Metric::Fdr => est.se_fdr,
            Metric::Pfer => est.se_pfer,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fdr" => Ok(Metric::Fdr),
            "pfer" => Ok(Metric::Pfer),
            other => Err(Error::param(
                "metric",
                format!("unknown metric `{other}`, expected fdr or pfer"),
            )),
        }
    }
}

/// The γ grid and the β grid derived from it by `β = γ / (a + γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid<F> {
    gammas: Vec<F>,
    betas: Vec<F>,
    a: F,
}

impl<F: Real> ThresholdGrid<F> {
    pub fn gammas(&self) -> &[F] {
        &self.gammas
    }

    pub fn betas(&self) -> &[F] {
        &self.betas
    }

    pub fn a(&self) -> F {
        self.a
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn bonferroni_param(&self, i: usize) -> BonferroniParam<F> {
        BonferroniParam::new(self.gammas[i]).expect("grid gammas are positive")
    }

    pub fn bh_param(&self, j: usize) -> BHParam<F> {
        BHParam::new(self.betas[j]).expect("grid betas lie in (0, 1)")
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "index,gamma,beta")?;
        for (i, (g, b)) in self.gammas.iter().zip(&self.betas).enumerate() {
            writeln!(out, "{i},{},{}", fmt_real(*g), fmt_real(*b))?;
        }
        Ok(())
    }
}

/// 0.01 to 1 in steps of 0.01, 1.1 to 10 in steps of 0.1, 11 to 100 in steps
/// of 1. Each value is a single integer division, so nothing accumulates.
pub fn build_grid<F: Real>(a: F) -> Result<ThresholdGrid<F>> {
    if !(a > F::zero()) || !a.is_finite() {
        return Err(Error::param("a", format!("{a} must be positive")));
    }
    let hundred = F::lit(100.0);
    let ten = F::lit(10.0);
    let gammas: Vec<F> = (1..=100)
        .map(|k| F::count(k) / hundred)
        .chain((11..=100).map(|k| F::count(k) / ten))
        .chain((11..=100).map(F::count))
        .collect();
    let betas = gammas.iter().map(|&g| g / (a + g)).collect();
    Ok(ThresholdGrid { gammas, betas, a })
}

/// Estimated error rates of one procedure at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve<F> {
    pub procedure: Procedure,
    pub metric: Metric,
    pub points: Vec<RateEstimates<F>>,
}

impl<F: Real> ErrorCurve<F> {
    pub fn values(&self) -> Vec<F> {
        self.points.iter().map(|e| self.metric.of(e)).collect()
    }

    pub fn with_metric(&self, metric: Metric) -> Self {
        Self {
            metric,
            ..self.clone()
        }
    }

    pub fn write<W: Write>(&self, grid: &ThresholdGrid<F>, out: &mut W) -> std::io::Result<()> {
        let thresholds = match self.procedure {
            Procedure::Bonferroni => grid.gammas(),
            Procedure::BenjaminiHochberg => grid.betas(),
        };
        writeln!(
            out,
            "index,threshold,fdr_hat,se_fdr,pfer_hat,se_pfer,fwer_hat,se_fwer,pcer_hat,replicates"
        )?;
        for (i, (t, e)) in thresholds.iter().zip(&self.points).enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{},{}",
                fmt_real(*t),
                fmt_real(e.fdr),
                fmt_real(e.se_fdr),
                fmt_real(e.pfer),
                fmt_real(e.se_pfer),
                fmt_real(e.fwer),
                fmt_real(e.se_fwer),
                fmt_real(e.pcer),
                e.replicates
            )?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(procedure: Procedure, metric: Metric, input: R) -> Result<Self> {
        let mut reader = TableReader::new(input)?;
        let cols = [
            "fdr_hat",
            "se_fdr",
            "pfer_hat",
            "se_pfer",
            "fwer_hat",
            "se_fwer",
            "pcer_hat",
            "replicates",
        ]
        .map(|c| reader.column(c));
        let cols: Vec<usize> = cols.into_iter().collect::<Result<_>>()?;
        let mut points = Vec::new();
        while let Some(row) = reader.next_row()? {
            let f = |k: usize| parse_field::<F>(&row, cols[k]);
            points.push(RateEstimates {
                fdr: f(0)?,
                se_fdr: f(1)?,
                pfer: f(2)?,
                se_pfer: f(3)?,
                fwer: f(4)?,
                se_fwer: f(5)?,
                pcer: f(6)?,
                replicates: parse_field::<usize>(&row, cols[7])?,
            });
        }
        Ok(Self {
            procedure,
            metric,
            points,
        })
    }
}

/// Outcomes of one replicate at every grid point for one procedure.
pub fn grid_outcomes<F: Real>(
    procedure: Procedure,
    grid: &ThresholdGrid<F>,
    replicate: &RankedReplicate<F>,
) -> Vec<ReplicateOutcome<F>> {
    (0..grid.len())
        .map(|i| match procedure {
            Procedure::Bonferroni => replicate.bonferroni(&grid.bonferroni_param(i)),
            Procedure::BenjaminiHochberg => replicate.bh(&grid.bh_param(i)),
        })
        .collect()
}

/// Aggregates per-replicate grid outcomes (`outcomes[replicate][grid index]`).
pub fn curve_from_outcomes<F: Real>(
    procedure: Procedure,
    metric: Metric,
    outcomes: &[Vec<ReplicateOutcome<F>>],
    m: usize,
) -> Result<ErrorCurve<F>> {
    let len = outcomes
        .first()
        .ok_or_else(|| Error::input("training set is empty"))?
        .len();
    if outcomes.iter().any(|o| o.len() != len) {
        return Err(Error::input("replicates disagree on the grid length"));
    }
    let points = (0..len)
        .map(|i| {
            let column: Vec<_> = outcomes.iter().map(|o| o[i]).collect();
            aggregate_rates(&column, m)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorCurve {
        procedure,
        metric,
        points,
    })
}

/// Runs `procedure` at every grid point on every training replicate and
/// aggregates the outcomes.
pub fn estimate_error_curve<F: Real>(
    procedure: Procedure,
    grid: &ThresholdGrid<F>,
    training: &[PValueVector<F>],
    truth: &GroundTruth,
    metric: Metric,
) -> Result<ErrorCurve<F>> {
    if training.is_empty() {
        return Err(Error::input("training set is empty"));
    }
    let outcomes = training
        .iter()
        .map(|p| RankedReplicate::new(p, truth).map(|r| grid_outcomes(procedure, grid, &r)))
        .collect::<Result<Vec<_>>>()?;
    curve_from_outcomes(procedure, metric, &outcomes, truth.m())
}

/// Index of the candidate closest to `target`; ties go to the smallest index.
///
/// Generic so exact (rational) values can be matched without rounding.
pub fn nearest_index<T>(candidates: &[T], target: T) -> Option<usize>
where
    T: Copy + PartialOrd + Sub<Output = T>,
{
    let dist = |c: T| if c >= target { c - target } else { target - c };
    let mut best: Option<(usize, T)> = None;
    for (i, &c) in candidates.iter().enumerate() {
        let d = dist(c);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// For every reference value, the index of the nearest candidate.
pub fn match_values<T>(reference: &[T], candidates: &[T]) -> Vec<usize>
where
    T: Copy + PartialOrd + Sub<Output = T>,
{
    reference
        .iter()
        .map(|&r| nearest_index(candidates, r).expect("candidates nonempty"))
        .collect()
}

/// One row of the correspondence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair<F> {
    /// Grid index of the procedure whose thresholds index the table.
    pub index: usize,
    pub gamma_index: usize,
    pub beta_index: usize,
    pub gamma: F,
    pub beta: F,
    /// Training rate of the reference procedure at `index`.
    pub reference_rate: F,
    /// Training rate of the other procedure at its matched threshold.
    pub matched_rate: F,
}

/// Matched `(γ, β)` pairs. Under FDR the table is indexed by the BH grid
/// (`β_j`, `γ*_j`); under PFER by the Bonferroni grid (`γ_i`, `β*_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizationTable<F> {
    pub metric: Metric,
    pub pairs: Vec<MatchedPair<F>>,
}

impl<F: Real> EqualizationTable<F> {
    /// Reference procedure whose grid indexes the rows.
    pub fn reference(&self) -> Procedure {
        match self.metric {
            Metric::Fdr => Procedure::BenjaminiHochberg,
            Metric::Pfer => Procedure::Bonferroni,
        }
    }

    /// Row whose training reference rate is closest to `target`.
    pub fn nearest_to_rate(&self, target: F) -> Option<usize> {
        let rates: Vec<F> = self.pairs.iter().map(|p| p.reference_rate).collect();
        nearest_index(&rates, target)
    }

    fn header(&self) -> &'static str {
        match self.metric {
            Metric::Fdr => "j,beta_j,gamma_star_j,fdr_hat_bh,fdr_hat_bonf,gamma_star_index",
            Metric::Pfer => "i,gamma_i,beta_star_i,pfer_hat_bonf,pfer_hat_bh,beta_star_index",
        }
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header())?;
        for p in &self.pairs {
            let (own, other, other_index) = match self.metric {
                Metric::Fdr => (p.beta, p.gamma, p.gamma_index),
                Metric::Pfer => (p.gamma, p.beta, p.beta_index),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.index,
                fmt_real(own),
                fmt_real(other),
                fmt_real(p.reference_rate),
                fmt_real(p.matched_rate),
                other_index
            )?;
        }
        Ok(())
    }

    /// Reads a table written by [`EqualizationTable::write`]; the metric is
    /// recognised from the header.
    pub fn read<R: BufRead>(input: R, grid: &ThresholdGrid<F>) -> Result<Self> {
        let mut reader = TableReader::new(input)?;
        let metric = if reader.has_column("gamma_star_j") {
            Metric::Fdr
        } else if reader.has_column("beta_star_i") {
            Metric::Pfer
        } else {
            return Err(Error::input("unrecognised equalization table header"));
        };
        let mut pairs = Vec::new();
        while let Some(row) = reader.next_row()? {
            let index: usize = parse_field(&row, 0)?;
            let reference_rate: F = parse_field(&row, 3)?;
            let matched_rate: F = parse_field(&row, 4)?;
            let other: usize = parse_field(&row, 5)?;
            if index >= grid.len() || other >= grid.len() {
                return Err(Error::input(format!(
                    "grid index out of range in row {index}"
                )));
            }
            let (gamma_index, beta_index) = match metric {
                Metric::Fdr => (other, index),
                Metric::Pfer => (index, other),
            };
            pairs.push(MatchedPair {
                index,
                gamma_index,
                beta_index,
                gamma: grid.gammas()[gamma_index],
                beta: grid.betas()[beta_index],
                reference_rate,
                matched_rate,
            });
        }
        Ok(Self { metric, pairs })
    }
}

fn check_curves<F: Real>(
    bonf: &ErrorCurve<F>,
    bh: &ErrorCurve<F>,
    grid: &ThresholdGrid<F>,
    metric: Metric,
) -> Result<()> {
    if bonf.metric != metric || bh.metric != metric {
        return Err(Error::input(format!(
            "curves carry metrics {} and {}, expected {metric}",
            bonf.metric, bh.metric
        )));
    }
    if bonf.procedure != Procedure::Bonferroni || bh.procedure != Procedure::BenjaminiHochberg {
        return Err(Error::input("curves passed in the wrong order"));
    }
    if bonf.points.len() != grid.len() || bh.points.len() != grid.len() {
        return Err(Error::input("curve length does not match the grid"));
    }
    if grid.is_empty() {
        return Err(Error::input("empty grid"));
    }
    Ok(())
}

/// `γ*_j = argmin_i |FDR_BH(β_j) - FDR_Bonf(γ_i)|` for every `j`.
pub fn match_by_fdr<F: Real>(
    bonf_curve: &ErrorCurve<F>,
    bh_curve: &ErrorCurve<F>,
    grid: &ThresholdGrid<F>,
) -> Result<EqualizationTable<F>> {
    check_curves(bonf_curve, bh_curve, grid, Metric::Fdr)?;
    let bh = bh_curve.values();
    let bonf = bonf_curve.values();
    let pairs = match_values(&bh, &bonf)
        .into_iter()
        .enumerate()
        .map(|(j, i)| MatchedPair {
            index: j,
            gamma_index: i,
            beta_index: j,
            gamma: grid.gammas()[i],
            beta: grid.betas()[j],
            reference_rate: bh[j],
            matched_rate: bonf[i],
        })
        .collect();
    Ok(EqualizationTable {
        metric: Metric::Fdr,
        pairs,
    })
}

/// `β*_i = argmin_j |PFER_Bonf(γ_i) - PFER_BH(β_j)|` for every `i`.
pub fn match_by_pfer<F: Real>(
    bonf_curve: &ErrorCurve<F>,
    bh_curve: &ErrorCurve<F>,
    grid: &ThresholdGrid<F>,
) -> Result<EqualizationTable<F>> {
    check_curves(bonf_curve, bh_curve, grid, Metric::Pfer)?;
    let bh = bh_curve.values();
    let bonf = bonf_curve.values();
    let pairs = match_values(&bonf, &bh)
        .into_iter()
        .enumerate()
        .map(|(i, j)| MatchedPair {
            index: i,
            gamma_index: i,
            beta_index: j,
            gamma: grid.gammas()[i],
            beta: grid.betas()[j],
            reference_rate: bonf[i],
            matched_rate: bh[j],
        })
        .collect();
    Ok(EqualizationTable {
        metric: Metric::Pfer,
        pairs,
    })
}

/// Dispatches on `metric`.
pub fn equalize<F: Real>(
    bonf_curve: &ErrorCurve<F>,
    bh_curve: &ErrorCurve<F>,
    grid: &ThresholdGrid<F>,
    metric: Metric,
) -> Result<EqualizationTable<F>> {
    let bonf = bonf_curve.with_metric(metric);
    let bh = bh_curve.with_metric(metric);
    match metric {
        Metric::Fdr => match_by_fdr(&bonf, &bh, grid),
        Metric::Pfer => match_by_pfer(&bonf, &bh, grid),
    }
}
