//! Two-group log-expression data with exchangeable gene-gene correlation.
//!
//! Entry `(gene i, array j)` of a group is `mu_i + sqrt(rho) W_j + sqrt(1 - rho) Z_ij`
//! with one shared standard normal factor `W_j` per array and independent
//! standard normal `Z_ij`. Every pair of genes then has correlation `rho` and
//! every entry has unit variance. Group A shifts the first `m_alt` genes by
//! `delta`; group B is centred at zero.
//!
//! Each `(master_seed, replicate, group)` owns its own ChaCha stream, so a
//! replicate is a pure function of its key and never depends on evaluation order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::error_rates::GroundTruth;
use crate::scalar::Real;
use crate::ttest::TwoGroupDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Number of genes.
    pub m: usize,
    /// Differentially expressed genes, indices `[0, m_alt)`.
    pub m_alt: usize,
    /// Arrays per group.
    pub n: usize,
    /// Mean log-expression shift of the alternatives in group A.
    pub delta: f64,
    /// Common pairwise correlation, `0 <= rho < 1`.
    pub rho: f64,
    pub replicates: usize,
    pub master_seed: u64,
}

impl SimulationConfig {
    /// Gene count, effect size and sample sizes of the reference design, at the
    /// given correlation.
    pub fn reference(rho: f64, master_seed: u64) -> Self {
        Self {
            m: 1255,
            m_alt: 125,
            n: 43,
            delta: 1.0,
            rho,
            replicates: 500,
            master_seed,
        }
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self.clone()
        }
    }

    /// Every violated invariant as `(field, message)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.m == 0 {
            out.push(("m", "must be at least 1".to_string()));
        }
        if self.m_alt == 0 || self.m_alt > self.m {
            out.push((
                "m_alt",
                format!("must lie in [1, m = {}], got {}", self.m, self.m_alt),
            ));
        }
        if self.n < 2 {
            out.push(("n", format!("must be at least 2, got {}", self.n)));
        }
        if !self.delta.is_finite() {
            out.push(("delta", format!("must be finite, got {}", self.delta)));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            out.push(("rho", format!("must lie in [0, 1), got {}", self.rho)));
        }
        if self.replicates == 0 {
            out.push(("replicates", "must be at least 1".to_string()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((name, reason)) => Err(Error::param(name, reason)),
        }
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth::leading(self.m_alt, self.m).expect("validated m_alt <= m")
    }
}

/// Independent random stream keyed by `(seed, stream)`.
pub fn keyed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn fill_group<F: Real, R: Rng>(
    rng: &mut R,
    m: usize,
    n: usize,
    rho: f64,
    shift: impl Fn(usize) -> F,
) -> Vec<F>
where
    StandardNormal: Distribution<F>,
{
    let shared_w = F::lit(rho.sqrt());
    let own_w = F::lit((1.0 - rho).sqrt());
    let factors: Vec<F> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = Vec::with_capacity(m * n);
    for gene in 0..m {
        let mu = shift(gene);
        for &w in &factors {
            let z: F = rng.sample(StandardNormal);
            out.push(mu + shared_w * w + own_w * z);
        }
    }
    out
}

/// Draws replicate `replicate_index` of the configured design.
pub fn generate_replicate<F: Real>(
    config: &SimulationConfig,
    replicate_index: usize,
) -> Result<TwoGroupDataset<F>>
where
    StandardNormal: Distribution<F>,
{
    config.validate()?;
    if replicate_index >= config.replicates {
        return Err(Error::param(
            "replicate_index",
            format!("{replicate_index} >= replicates = {}", config.replicates),
        ));
    }
    let stream = 2 * replicate_index as u64;
    let delta = F::lit(config.delta);
    let m_alt = config.m_alt;
    let a = fill_group(
        &mut keyed_stream(config.master_seed, stream),
        config.m,
        config.n,
        config.rho,
        |gene| if gene < m_alt { delta } else { F::zero() },
    );
    let b = fill_group(
        &mut keyed_stream(config.master_seed, stream + 1),
        config.m,
        config.n,
        config.rho,
        |_| F::zero(),
    );
    TwoGroupDataset::new(config.m, config.n, config.n, a, b)
}

/// Writes a replicate as delimited text: `#` header lines echoing the
/// configuration, a column header, then one row per gene with the group A
/// arrays followed by the group B arrays.
pub fn write_dataset<F: Real, W: Write>(
    out: &mut W,
    config: &SimulationConfig,
    replicate_index: usize,
    data: &TwoGroupDataset<F>,
) -> std::io::Result<()> {
    writeln!(
        out,
        "# m={} m_alt={} n={} delta={} rho={} master_seed={} replicate={}",
        config.m,
        config.m_alt,
        config.n,
        config.delta,
        config.rho,
        config.master_seed,
        replicate_index
    )?;
    writeln!(
        out,
        "# columns: gene, a_0..a_{{n-1}}, b_0..b_{{n-1}} (log scale)"
    )?;
    let mut header = vec!["gene".to_string()];
    header.extend((0..data.n_a()).map(|j| format!("a_{j}")));
    header.extend((0..data.n_b()).map(|j| format!("b_{j}")));
    writeln!(out, "{}", header.join(","))?;
    for gene in 0..data.m() {
        write!(out, "{gene}")?;
        for v in data.row_a(gene).iter().chain(data.row_b(gene)) {
            write!(out, ",{:.16e}", v.to_f64().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rho: f64) -> SimulationConfig {
        SimulationConfig {
            m: 40,
            m_alt: 5,
            n: 6,
            delta: 1.0,
            rho,
            replicates: 3,
            master_seed: 11,
        }
    }

    #[test]
    fn reference_dimensions() {
        let cfg = SimulationConfig::reference(0.0, 1);
        let d = generate_replicate::<f64>(&cfg, 0).unwrap();
        assert_eq!((d.m(), d.n_a(), d.n_b()), (1255, 43, 43));
    }

    #[test]
    fn deterministic_and_replicate_specific() {
        let cfg = small(0.4);
        let a = generate_replicate::<f64>(&cfg, 1).unwrap();
        let b = generate_replicate::<f64>(&cfg, 1).unwrap();
        assert_eq!(a, b);
        let c = generate_replicate::<f64>(&cfg, 2).unwrap();
        assert_ne!(a, c);
        let d = generate_replicate::<f64>(&cfg.with_seed(12), 1).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn zero_rho_ignores_shared_factor() {
        // With rho = 0 each entry is mu + Z, so group B entries are exactly the
        // normals drawn after the n shared factors.
        let cfg = small(0.0);
        let d = generate_replicate::<f64>(&cfg, 0).unwrap();
        let mut rng = keyed_stream(cfg.master_seed, 1);
        for _ in 0..cfg.n {
            let _: f64 = rng.sample(StandardNormal);
        }
        let z: f64 = rng.sample(StandardNormal);
        assert_eq!(d.row_b(0)[0], z);
    }

    #[test]
    fn replicate_index_bounds() {
        let cfg = small(0.0);
        assert!(generate_replicate::<f64>(&cfg, 3).is_err());
        let mut bad = small(1.0);
        bad.n = 1;
        let v = bad.violations();
        assert_eq!(v.len(), 2);
        assert!(generate_replicate::<f64>(&bad, 0).is_err());
    }

    #[test]
    fn single_precision_generation() {
        let d = generate_replicate::<f32>(&small(0.4), 0).unwrap();
        assert_eq!(d.m(), 40);
    }

    #[test]
    fn dump_layout() {
        let cfg = small(0.0);
        let d = generate_replicate::<f64>(&cfg, 0).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &cfg, 0, &d).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 41);
        assert!(rows[0].starts_with("gene,a_0,"));
        let first: Vec<f64> = rows[1]
            .split(',')
            .skip(1)
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first.len(), 12);
        assert_eq!(first[0], d.row_a(0)[0]);
        assert_eq!(first[6], d.row_b(0)[0]);
    }
}
