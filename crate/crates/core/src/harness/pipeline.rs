use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::HarnessError;
use crate::equalizer::{
    build_grid, curve_from_outcomes, equalize, grid_outcomes, EqualizationTable, ErrorCurve,
    Metric, Procedure, ThresholdGrid,
};
use crate::error::Error;
use crate::error_rates::{aggregate_rates, RankedReplicate, RateEstimates, ReplicateOutcome};
use crate::metrics::{compare_outcomes, summarize, ComparisonStats, StabilitySummary};
use crate::simulator::{generate_replicate, write_dataset, SimulationConfig};
use crate::textio::{fmt_f64, parse_field, TableReader};
use crate::ttest::pvalues_for_dataset;

pub const GRID_FILE: &str = "grid.csv";
pub const BONF_CURVE_FILE: &str = "curve_bonferroni.csv";
pub const BH_CURVE_FILE: &str = "curve_bh.csv";
pub const TABLE_FILE: &str = "equalization.csv";
pub const BONF_SUMMARY_FILE: &str = "summary_bonferroni.csv";
pub const BH_SUMMARY_FILE: &str = "summary_bh.csv";
pub const OUTCOMES_FILE: &str = "outcomes.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Grid,
    Train,
    Equalize,
    Evaluate,
    Report,
    Run,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Grid,
        Stage::Train,
        Stage::Equalize,
        Stage::Evaluate,
        Stage::Report,
        Stage::Run,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Grid => "grid",
            Stage::Train => "train",
            Stage::Equalize => "equalize",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
            Stage::Run => "run",
        }
    }
}

impl FromStr for Stage {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown stage `{s}`")))
    }
}

/// Outcomes of both procedures at every grid point, `[replicate][grid index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid {
    pub m: usize,
    pub bonferroni: Vec<Vec<ReplicateOutcome<f64>>>,
    pub bh: Vec<Vec<ReplicateOutcome<f64>>>,
}

impl OutcomeGrid {
    pub fn replicates(&self) -> usize {
        self.bonferroni.len()
    }

    pub fn of(&self, procedure: Procedure) -> &[Vec<ReplicateOutcome<f64>>] {
        match procedure {
            Procedure::Bonferroni => &self.bonferroni,
            Procedure::BenjaminiHochberg => &self.bh,
        }
    }

    pub fn curve(&self, procedure: Procedure, metric: Metric) -> Result<ErrorCurve<f64>> {
        Ok(curve_from_outcomes(
            procedure,
            metric,
            self.of(procedure),
            self.m,
        )?)
    }

    /// Outcomes of one procedure at one grid index across replicates.
    pub fn column(&self, procedure: Procedure, index: usize) -> Vec<ReplicateOutcome<f64>> {
        self.of(procedure).iter().map(|row| row[index]).collect()
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start {workers} workers: {e}")))
}

/// Simulates every replicate, computes its p-values once and applies both
/// procedures at every grid point. Replicates run in parallel; the result
/// does not depend on `workers`.
pub fn simulate_outcomes(
    sim: &SimulationConfig,
    grid: &ThresholdGrid<f64>,
    workers: usize,
) -> Result<OutcomeGrid> {
    sim.validate()?;
    let truth = sim.truth();
    let rows = thread_pool(workers)?.install(|| {
        (0..sim.replicates)
            .into_par_iter()
            .map(|r| -> std::result::Result<_, Error> {
                let data = generate_replicate::<f64>(sim, r)?;
                let p = pvalues_for_dataset(&data)?;
                let ranked = RankedReplicate::new(&p, &truth)?;
                Ok((
                    grid_outcomes(Procedure::Bonferroni, grid, &ranked),
                    grid_outcomes(Procedure::BenjaminiHochberg, grid, &ranked),
                ))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    let (bonferroni, bh) = rows.into_iter().unzip();
    Ok(OutcomeGrid {
        m: sim.m,
        bonferroni,
        bh,
    })
}

/// Control-set indicators of one procedure at one matched pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSummary {
    pub stability: StabilitySummary<f64>,
    pub rates: RateEstimates<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub table: EqualizationTable<f64>,
    pub bonferroni: Vec<PairSummary>,
    pub bh: Vec<PairSummary>,
}

impl Evaluation {
    pub fn of(&self, procedure: Procedure) -> &[PairSummary] {
        match procedure {
            Procedure::Bonferroni => &self.bonferroni,
            Procedure::BenjaminiHochberg => &self.bh,
        }
    }
}

/// Outcomes of Bonferroni and BH at matched pair `pair`.
pub fn pair_outcomes(
    table: &EqualizationTable<f64>,
    outcomes: &OutcomeGrid,
    pair: usize,
) -> (Vec<ReplicateOutcome<f64>>, Vec<ReplicateOutcome<f64>>) {
    let p = &table.pairs[pair];
    (
        outcomes.column(Procedure::Bonferroni, p.gamma_index),
        outcomes.column(Procedure::BenjaminiHochberg, p.beta_index),
    )
}

pub fn evaluate(table: &EqualizationTable<f64>, outcomes: &OutcomeGrid) -> Result<Evaluation> {
    let summarize_pair = |column: &[ReplicateOutcome<f64>]| -> Result<PairSummary> {
        Ok(PairSummary {
            stability: summarize(column)?,
            rates: aggregate_rates(column, outcomes.m)?,
        })
    };
    let mut bonferroni = Vec::with_capacity(table.pairs.len());
    let mut bh = Vec::with_capacity(table.pairs.len());
    for k in 0..table.pairs.len() {
        let (b, h) = pair_outcomes(table, outcomes, k);
        bonferroni.push(summarize_pair(&b)?);
        bh.push(summarize_pair(&h)?);
    }
    Ok(Evaluation {
        table: table.clone(),
        bonferroni,
        bh,
    })
}

pub fn compare_pair(
    table: &EqualizationTable<f64>,
    outcomes: &OutcomeGrid,
    pair: usize,
) -> Result<ComparisonStats<f64>> {
    let (b, h) = pair_outcomes(table, outcomes, pair);
    let rb: Vec<usize> = b.iter().map(|o| o.r).collect();
    let rh: Vec<usize> = h.iter().map(|o| o.r).collect();
    Ok(compare_outcomes(&rb, &rh)?)
}

/// Rows to emit scatter data for: the requested rows plus the rows whose
/// training reference rate is nearest each target, sorted and deduplicated.
pub fn scatter_rows(cfg: &PipelineConfig, table: &EqualizationTable<f64>) -> Vec<usize> {
    let mut rows: Vec<usize> = cfg.scatter_pairs.clone();
    rows.extend(
        cfg.effective_targets()
            .into_iter()
            .filter_map(|t| table.nearest_to_rate(t)),
    );
    rows.sort_unstable();
    rows.dedup();
    rows
}

// ---------------------------------------------------------------------------
// file stages

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let (path, mut w) = create(dir, name)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|source| HarnessError::Io { path, source })
}

fn open(dir: &Path, name: &str) -> Result<BufReader<File>> {
    let path = dir.join(name);
    File::open(&path)
        .map(BufReader::new)
        .map_err(|source| HarnessError::Io { path, source })
}

fn in_file<T>(dir: &Path, name: &str, r: std::result::Result<T, Error>) -> Result<T> {
    r.map_err(|e| HarnessError::Parse {
        path: dir.join(name),
        message: e.to_string(),
    })
}

pub fn write_manifest<W: Write>(cfg: &PipelineConfig, out: &mut W) -> std::io::Result<()> {
    let s = &cfg.simulation;
    let lines = [
        (
            "tool",
            format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        ),
        ("simulation.m", s.m.to_string()),
        ("simulation.m_alt", s.m_alt.to_string()),
        ("simulation.n", s.n.to_string()),
        ("simulation.delta", fmt_f64(s.delta)),
        ("simulation.rho", fmt_f64(s.rho)),
        ("simulation.replicates", s.replicates.to_string()),
        ("seeds.training", cfg.training_seed.to_string()),
        ("seeds.control", cfg.control_seed.to_string()),
        (
            "rng",
            "chacha8, stream 2r (group A) and 2r+1 (group B) per replicate r".into(),
        ),
        ("equalize.metric", cfg.metric.name().into()),
        ("equalize.a", fmt_f64(cfg.a)),
        ("grid.len", crate::equalizer::GRID_LEN.to_string()),
        ("run.evaluation_set", cfg.evaluation_set.name().into()),
        ("report.pairs", format!("{:?}", cfg.scatter_pairs)),
        ("report.targets", format!("{:?}", cfg.effective_targets())),
        ("report.min_count", cfg.scatter_min_count.to_string()),
        ("ttest", "pooled two-sample student t, two-sided".into()),
    ];
    for (k, v) in lines {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}

fn write_summaries<W: Write>(
    out: &mut W,
    table: &EqualizationTable<f64>,
    rows: &[PairSummary],
) -> std::io::Result<()> {
    writeln!(
        out,
        "index,gamma,beta,mean_s,median_s,sd_s,se_mean_s,mean_r,median_r,sd_r,se_mean_r,fdr_hat,se_fdr,pfer_hat,se_pfer,fwer_hat,se_fwer,replicates"
    )?;
    for (p, row) in table.pairs.iter().zip(rows) {
        let (st, ra) = (&row.stability, &row.rates);
        let reals = [
            p.gamma,
            p.beta,
            st.mean_s,
            st.median_s,
            st.sd_s,
            st.se_mean_s,
            st.mean_r,
            st.median_r,
            st.sd_r,
            st.se_mean_r,
            ra.fdr,
            ra.se_fdr,
            ra.pfer,
            ra.se_pfer,
            ra.fwer,
            ra.se_fwer,
        ];
        write!(out, "{}", p.index)?;
        for v in reals {
            write!(out, ",{}", fmt_f64(v))?;
        }
        writeln!(out, ",{}", st.replicates)?;
    }
    Ok(())
}

fn write_outcomes<W: Write>(
    out: &mut W,
    table: &EqualizationTable<f64>,
    outcomes: &OutcomeGrid,
) -> std::io::Result<()> {
    writeln!(out, "index,replicate,v_bonf,s_bonf,v_bh,s_bh")?;
    for k in 0..table.pairs.len() {
        let (b, h) = pair_outcomes(table, outcomes, k);
        for (r, (b, h)) in b.iter().zip(&h).enumerate() {
            writeln!(out, "{k},{r},{},{},{},{}", b.v, b.s, h.v, h.s)?;
        }
    }
    Ok(())
}

fn read_outcomes(dir: &Path, pairs: usize) -> Result<OutcomeGrid> {
    // Rebuilt as a grid whose columns are table rows, so pair k maps to
    // column k for both procedures.
    let file = open(dir, OUTCOMES_FILE)?;
    let parsed = (|| -> std::result::Result<_, Error> {
        let mut reader = TableReader::new(file)?;
        let mut bonferroni: Vec<Vec<ReplicateOutcome<f64>>> = Vec::new();
        let mut bh: Vec<Vec<ReplicateOutcome<f64>>> = Vec::new();
        while let Some(row) = reader.next_row()? {
            let k: usize = parse_field(&row, 0)?;
            let r: usize = parse_field(&row, 1)?;
            let f = |c| parse_field::<usize>(&row, c);
            if k >= pairs {
                return Err(Error::input(format!("row index {k} outside the table")));
            }
            if r >= bonferroni.len() {
                bonferroni.resize(r + 1, vec![ReplicateOutcome::from_counts(0, 0); pairs]);
                bh.resize(r + 1, vec![ReplicateOutcome::from_counts(0, 0); pairs]);
            }
            bonferroni[r][k] = ReplicateOutcome::from_counts(f(2)?, f(3)?);
            bh[r][k] = ReplicateOutcome::from_counts(f(4)?, f(5)?);
        }
        Ok((bonferroni, bh))
    })();
    let (bonferroni, bh) = in_file(dir, OUTCOMES_FILE, parsed)?;
    if bonferroni.is_empty() {
        return Err(HarnessError::Parse {
            path: dir.join(OUTCOMES_FILE),
            message: "no outcomes".into(),
        });
    }
    Ok(OutcomeGrid {
        m: 0,
        bonferroni,
        bh,
    })
}

fn identity_table(table: &EqualizationTable<f64>) -> EqualizationTable<f64> {
    let mut t = table.clone();
    for (k, p) in t.pairs.iter_mut().enumerate() {
        p.gamma_index = k;
        p.beta_index = k;
    }
    t
}

fn write_comparisons<W: Write>(
    out: &mut W,
    table: &EqualizationTable<f64>,
    stats: &[ComparisonStats<f64>],
) -> std::io::Result<()> {
    writeln!(
        out,
        "index,gamma,beta,pearson_r,identical,bonf_wins,bh_wins,replicates"
    )?;
    for (p, c) in table.pairs.iter().zip(stats) {
        let r = c.pearson_r.map_or_else(|| "NA".to_string(), fmt_f64);
        writeln!(
            out,
            "{},{},{},{r},{},{},{},{}",
            p.index,
            fmt_f64(p.gamma),
            fmt_f64(p.beta),
            c.identical_count,
            c.bonf_wins,
            c.bh_wins,
            c.replicates()
        )?;
    }
    Ok(())
}

fn write_scatter<W: Write>(
    out: &mut W,
    rows: &[(usize, ComparisonStats<f64>)],
    min_count: usize,
) -> std::io::Result<()> {
    writeln!(out, "index,r_bonf,r_bh,count,frequent")?;
    for (k, c) in rows {
        for pt in &c.scatter {
            writeln!(
                out,
                "{k},{},{},{},{}",
                pt.r_bonf,
                pt.r_bh,
                pt.count,
                u8::from(pt.is_frequent(min_count))
            )?;
        }
    }
    Ok(())
}

fn grid_for(cfg: &PipelineConfig) -> Result<ThresholdGrid<f64>> {
    Ok(build_grid(cfg.a)?)
}

pub fn stage_grid(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let grid = grid_for(cfg)?;
    write_file(dir, GRID_FILE, |w| grid.write(w))
}

pub fn stage_train(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let grid = grid_for(cfg)?;
    let training = simulate_outcomes(&cfg.training(), &grid, cfg.workers)?;
    for procedure in [Procedure::Bonferroni, Procedure::BenjaminiHochberg] {
        let curve = training.curve(procedure, cfg.metric)?;
        let name = match procedure {
            Procedure::Bonferroni => BONF_CURVE_FILE,
            Procedure::BenjaminiHochberg => BH_CURVE_FILE,
        };
        write_file(dir, name, |w| curve.write(&grid, w))?;
    }
    Ok(())
}

pub fn stage_equalize(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let grid = grid_for(cfg)?;
    let read = |procedure, name| -> Result<ErrorCurve<f64>> {
        in_file(
            dir,
            name,
            ErrorCurve::read(procedure, cfg.metric, open(dir, name)?),
        )
    };
    let bonf = read(Procedure::Bonferroni, BONF_CURVE_FILE)?;
    let bh = read(Procedure::BenjaminiHochberg, BH_CURVE_FILE)?;
    let table = equalize(&bonf, &bh, &grid, cfg.metric)?;
    write_file(dir, TABLE_FILE, |w| table.write(w))
}

fn read_table(cfg: &PipelineConfig, dir: &Path) -> Result<EqualizationTable<f64>> {
    let grid = grid_for(cfg)?;
    in_file(
        dir,
        TABLE_FILE,
        EqualizationTable::read(open(dir, TABLE_FILE)?, &grid),
    )
}

pub fn stage_evaluate(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let table = read_table(cfg, dir)?;
    let grid = grid_for(cfg)?;
    let outcomes = simulate_outcomes(&cfg.evaluation(), &grid, cfg.workers)?;
    let eval = evaluate(&table, &outcomes)?;
    write_file(dir, BONF_SUMMARY_FILE, |w| {
        write_summaries(w, &table, &eval.bonferroni)
    })?;
    write_file(dir, BH_SUMMARY_FILE, |w| {
        write_summaries(w, &table, &eval.bh)
    })?;
    write_file(dir, OUTCOMES_FILE, |w| write_outcomes(w, &table, &outcomes))
}

pub fn stage_report(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let table = read_table(cfg, dir)?;
    let outcomes = read_outcomes(dir, table.pairs.len())?;
    let by_row = identity_table(&table);
    let stats = (0..table.pairs.len())
        .map(|k| compare_pair(&by_row, &outcomes, k))
        .collect::<Result<Vec<_>>>()?;
    write_file(dir, COMPARISON_FILE, |w| {
        write_comparisons(w, &table, &stats)
    })?;
    let rows: Vec<(usize, ComparisonStats<f64>)> = scatter_rows(cfg, &table)
        .into_iter()
        .map(|k| (k, stats[k].clone()))
        .collect();
    write_file(dir, SCATTER_FILE, |w| {
        write_scatter(w, &rows, cfg.scatter_min_count)
    })
}

/// Writes one replicate of the training (or control) set as delimited text.
pub fn dump_replicate(
    cfg: &PipelineConfig,
    dir: &Path,
    control: bool,
    replicate: usize,
) -> Result<PathBuf> {
    let sim = if control {
        cfg.control()
    } else {
        cfg.training()
    };
    let data = generate_replicate::<f64>(&sim, replicate)?;
    let name = format!(
        "dataset_{}_{replicate}.csv",
        if control { "control" } else { "training" }
    );
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(dir, &name, |w| write_dataset(w, &sim, replicate, &data))?;
    Ok(dir.join(name))
}

/// Runs `stage` (or every stage for [`Stage::Run`]) writing into `dir`.
pub fn run_pipeline(cfg: &PipelineConfig, stage: Stage, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(dir, MANIFEST_FILE, |w| write_manifest(cfg, w))?;
    match stage {
        Stage::Grid => stage_grid(cfg, dir),
        Stage::Train => stage_train(cfg, dir),
        Stage::Equalize => stage_equalize(cfg, dir),
        Stage::Evaluate => stage_evaluate(cfg, dir),
        Stage::Report => stage_report(cfg, dir),
        Stage::Run => run_all(cfg, dir),
    }
}

fn run_all(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let grid = grid_for(cfg)?;
    write_file(dir, GRID_FILE, |w| grid.write(w))?;

    let training = simulate_outcomes(&cfg.training(), &grid, cfg.workers)?;
    let bonf = training.curve(Procedure::Bonferroni, cfg.metric)?;
    let bh = training.curve(Procedure::BenjaminiHochberg, cfg.metric)?;
    write_file(dir, BONF_CURVE_FILE, |w| bonf.write(&grid, w))?;
    write_file(dir, BH_CURVE_FILE, |w| bh.write(&grid, w))?;

    let table = equalize(&bonf, &bh, &grid, cfg.metric)?;
    write_file(dir, TABLE_FILE, |w| table.write(w))?;

    let outcomes = match cfg.evaluation_set {
        super::config::EvaluationSet::Training => training,
        super::config::EvaluationSet::Control => {
            drop(training);
            simulate_outcomes(&cfg.control(), &grid, cfg.workers)?
        }
    };
    let eval = evaluate(&table, &outcomes)?;
    write_file(dir, BONF_SUMMARY_FILE, |w| {
        write_summaries(w, &table, &eval.bonferroni)
    })?;
    write_file(dir, BH_SUMMARY_FILE, |w| {
        write_summaries(w, &table, &eval.bh)
    })?;
    write_file(dir, OUTCOMES_FILE, |w| write_outcomes(w, &table, &outcomes))?;

    let stats = (0..table.pairs.len())
        .map(|k| compare_pair(&table, &outcomes, k))
        .collect::<Result<Vec<_>>>()?;
    write_file(dir, COMPARISON_FILE, |w| {
        write_comparisons(w, &table, &stats)
    })?;
    let rows: Vec<(usize, ComparisonStats<f64>)> = scatter_rows(cfg, &table)
        .into_iter()
        .map(|k| (k, stats[k].clone()))
        .collect();
    write_file(dir, SCATTER_FILE, |w| {
        write_scatter(w, &rows, cfg.scatter_min_count)
    })
}
