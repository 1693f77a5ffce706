//! Seeded generators for 2x2x2 tables and binary datasets.
//!
//! Three base schemes are available: i.i.d. fair-coin entries, uniformly
//! drawn weak compositions of `N` into 8 cells, and a flat Dirichlet draw
//! scaled by `N` and rounded (half to even), rejected until it sums to `N`.
//! Batches draw each table from its own stream so they can be produced in
//! parallel without changing the result.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{purpose, stream_id, stream_rng, PRNG_VERSION};
use crate::tables::{is_simpson, ContingencyTable222, Dataset};

pub const DEFAULT_MAX_REJECTS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Bernoulli,
    DirichletRounded,
    UniformComposition,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bernoulli => "bernoulli",
            Self::DirichletRounded => "dirichlet_rounded",
            Self::UniformComposition => "uniform_composition",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "bernoulli" => Ok(Self::Bernoulli),
            "dirichlet" | "dirichlet_rounded" => Ok(Self::DirichletRounded),
            "uniform" | "uniform_composition" => Ok(Self::UniformComposition),
            _ => Err(Error::InvalidParameter(format!("unknown sampling scheme `{s}`"))),
        }
    }
}

/// Which tables a batch keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Any,
    Simpson,
    NonSimpson,
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "any" => Ok(Self::Any),
            "simpson" => Ok(Self::Simpson),
            "non_simpson" => Ok(Self::NonSimpson),
            _ => Err(Error::InvalidParameter(format!("unknown table population `{s}`"))),
        }
    }
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Self::Any => "any",
            Self::Simpson => "simpson",
            Self::NonSimpson => "non_simpson",
        }
    }

    fn accepts(self, table: &ContingencyTable222) -> Result<bool> {
        Ok(match self {
            Self::Any => true,
            Self::Simpson => is_simpson(table)?.is_simpson(),
            Self::NonSimpson => !is_simpson(table)?.is_simpson(),
        })
    }

    fn purpose(self) -> u8 {
        match self {
            Self::Any => purpose::BASE_TABLES,
            Self::Simpson => purpose::SIMPSON,
            Self::NonSimpson => purpose::NON_SIMPSON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplerConfig {
    pub scheme: Scheme,
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub max_rejects: u64,
}

impl SamplerConfig {
    pub fn new(scheme: Scheme, n: u64, seed: u64) -> Result<Self> {
        Self { scheme, n, seed, max_rejects: DEFAULT_MAX_REJECTS }.validated()
    }

    pub fn with_max_rejects(self, max_rejects: u64) -> Result<Self> {
        Self { max_rejects, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        if self.max_rejects == 0 {
            return Err(Error::InvalidParameter("max_rejects must be at least 1".into()));
        }
        Ok(self)
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    Ok(())
}

/// `n` rows of fair-coin bits, drawn in the order `y, x1, x2` per row.
pub fn draw_bernoulli_rows<R: Rng + ?Sized>(n: u64, rng: &mut R) -> (Vec<u8>, Vec<Vec<u8>>) {
    let mut y = Vec::with_capacity(n as usize);
    let mut rows = Vec::with_capacity(n as usize);
    for _ in 0..n {
        y.push(u8::from(rng.random::<bool>()));
        rows.push(vec![u8::from(rng.random::<bool>()), u8::from(rng.random::<bool>())]);
    }
    (y, rows)
}

/// Counts of [`draw_bernoulli_rows`].
pub fn draw_bernoulli_table<R: Rng + ?Sized>(n: u64, rng: &mut R) -> ContingencyTable222 {
    let mut counts = [[[0u64; 2]; 2]; 2];
    for _ in 0..n {
        let y = usize::from(rng.random::<bool>());
        let a = usize::from(rng.random::<bool>());
        let b = usize::from(rng.random::<bool>());
        counts[y][a][b] += 1;
    }
    ContingencyTable222::new(counts)
}

/// Uniform weak composition of `n` into the 8 canonical cells: 7 bar
/// positions are chosen among `n + 7` slots and the cells are the gaps.
pub fn draw_uniform_table<R: Rng + ?Sized>(n: u64, rng: &mut R) -> ContingencyTable222 {
    let slots = (n + 7) as usize;
    let mut bars = index::sample(rng, slots, 7).into_vec();
    bars.sort_unstable();
    let mut cells = [0u64; 8];
    let mut prev: i64 = -1;
    for (k, &b) in bars.iter().enumerate() {
        cells[k] = (b as i64 - prev - 1) as u64;
        prev = b as i64;
    }
    cells[7] = (slots as i64 - prev - 1) as u64;
    ContingencyTable222::from_canonical(cells)
}

/// A flat Dirichlet draw on the 7-simplex (normalized unit exponentials).
pub fn draw_dirichlet<R: Rng + ?Sized>(rng: &mut R) -> [f64; 8] {
    let mut p = [0.0; 8];
    for v in &mut p {
        *v = rng.sample::<f64, _>(Exp1);
    }
    let total: f64 = p.iter().sum();
    p.map(|v| v / total)
}

/// `round(p * n)` cellwise, half to even; `None` if the cells do not sum to `n`.
pub fn round_to_table(p: &[f64; 8], n: u64) -> Option<ContingencyTable222> {
    let cells = p.map(|v| (v * n as f64).round_ties_even() as u64);
    (cells.iter().sum::<u64>() == n).then(|| ContingencyTable222::from_canonical(cells))
}

/// Rounded Dirichlet table together with the number of rejected draws.
pub fn draw_dirichlet_table<R: Rng + ?Sized>(
    n: u64,
    rng: &mut R,
    max_rejects: u64,
) -> Result<(ContingencyTable222, u64)> {
    let mut rejects = 0;
    loop {
        if let Some(t) = round_to_table(&draw_dirichlet(rng), n) {
            return Ok((t, rejects));
        }
        rejects += 1;
        if rejects >= max_rejects {
            return Err(Error::RejectionBudgetExceeded { budget: max_rejects });
        }
    }
}

/// One table from `scheme`, and how many draws were discarded by the
/// scheme itself (non-zero only for rounded Dirichlet draws).
pub fn draw_table<R: Rng + ?Sized>(
    scheme: Scheme,
    n: u64,
    rng: &mut R,
    max_rejects: u64,
) -> Result<(ContingencyTable222, u64)> {
    match scheme {
        Scheme::Bernoulli => Ok((draw_bernoulli_table(n, rng), 0)),
        Scheme::UniformComposition => Ok((draw_uniform_table(n, rng), 0)),
        Scheme::DirichletRounded => draw_dirichlet_table(n, rng, max_rejects),
    }
}

pub fn sample_bernoulli_dataset(n: u64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let (y, rows) = draw_bernoulli_rows(n, &mut stream_rng(seed, 0));
    Dataset::from_rows(&y, &rows)
}

pub fn sample_uniform_table(n: u64, seed: u64) -> Result<ContingencyTable222> {
    check_n(n)?;
    Ok(draw_uniform_table(n, &mut stream_rng(seed, 0)))
}

pub fn sample_dirichlet_table(n: u64, seed: u64) -> Result<ContingencyTable222> {
    check_n(n)?;
    Ok(draw_dirichlet_table(n, &mut stream_rng(seed, 0), DEFAULT_MAX_REJECTS)?.0)
}

/// `M` tables of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Batch {
    pub scheme: Scheme,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub condition: Condition,
    pub prng_version: &'static str,
    /// Kept tables divided by the valid (correctly summing) draws examined.
    pub acceptance_rate: f64,
    pub valid_draws: u64,
    #[serde(skip)]
    pub tables: Vec<ContingencyTable222>,
}

impl Batch {
    pub fn datasets(&self) -> Result<Vec<Dataset>> {
        self.tables.iter().map(ContingencyTable222::encode).collect()
    }

    /// Writes `table_00000.csv, ...` and `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (i, t) in self.tables.iter().enumerate() {
            t.write_csv(dir.join(format!("table_{i:05}.csv")))?;
        }
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }
}

/// Draws until `condition` holds; returns the table and the number of valid
/// draws examined. `max_rejects` bounds all discarded draws of this item.
fn draw_conditioned<R: Rng + ?Sized>(
    cfg: &SamplerConfig,
    condition: Condition,
    rng: &mut R,
) -> Result<(ContingencyTable222, u64)> {
    let mut discarded = 0u64;
    let mut valid = 0u64;
    loop {
        let (t, r) = draw_table(cfg.scheme, cfg.n, rng, cfg.max_rejects - discarded)?;
        discarded += r;
        valid += 1;
        if condition.accepts(&t)? {
            return Ok((t, valid));
        }
        discarded += 1;
        if discarded >= cfg.max_rejects {
            return Err(Error::RejectionBudgetExceeded { budget: cfg.max_rejects });
        }
    }
}

/// `m` tables satisfying `condition`. Item `i` uses stream
/// `(condition, group, i)`, so `group` separates batches sharing a seed
/// (for instance different sample sizes within one experiment).
pub fn sample_batch(cfg: &SamplerConfig, m: usize, condition: Condition, group: u32) -> Result<Batch> {
    if m == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    let drawn: Vec<(ContingencyTable222, u64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, stream_id(condition.purpose(), group, i as u32));
            draw_conditioned(cfg, condition, &mut rng)
        })
        .collect::<Result<_>>()?;
    let valid_draws: u64 = drawn.iter().map(|d| d.1).sum();
    Ok(Batch {
        scheme: cfg.scheme,
        n: cfg.n,
        m,
        seed: cfg.seed,
        condition,
        prng_version: PRNG_VERSION,
        acceptance_rate: m as f64 / valid_draws as f64,
        valid_draws,
        tables: drawn.into_iter().map(|d| d.0).collect(),
    })
}

/// `m` Simpson tables of size `n` from `base`, with the acceptance rate.
pub fn sample_simpson_datasets(m: usize, n: u64, base: Scheme, seed: u64) -> Result<Batch> {
    sample_batch(&SamplerConfig::new(base, n, seed)?, m, Condition::Simpson, 0)
}

pub fn sample_non_simpson_datasets(m: usize, n: u64, base: Scheme, seed: u64) -> Result<Batch> {
    sample_batch(&SamplerConfig::new(base, n, seed)?, m, Condition::NonSimpson, 0)
}
