//! 2x2x2 contingency tables, their encoding as regression datasets, and the
//! Simpson's-paradox test.
//!
//! Cells are indexed `(y, x1, x2)` with each index in `{0, 1}`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight cells in canonical (lexicographic) order.
pub const CELLS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 1, 0),
    (0, 1, 1),
    (1, 0, 0),
    (1, 0, 1),
    (1, 1, 0),
    (1, 1, 1),
];

pub type Counts = [[[u64; 2]; 2]; 2];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisLabels {
    pub y: String,
    pub x1: String,
    pub x2: String,
}

/// Integer counts `d[y][x1][x2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable222 {
    counts: Counts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<AxisLabels>,
}

impl ContingencyTable222 {
    pub fn new(counts: Counts) -> Self {
        Self { counts, labels: None }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> u64) -> Self {
        let mut counts = [[[0; 2]; 2]; 2];
        for (y, x1, x2) in CELLS {
            counts[y][x1][x2] = f(y, x1, x2);
        }
        Self::new(counts)
    }

    /// Builds a table from the eight counts in canonical order.
    pub fn from_canonical(cells: [u64; 8]) -> Self {
        let mut it = cells.into_iter();
        Self::from_fn(|_, _, _| it.next().unwrap_or(0))
    }

    pub fn with_labels(mut self, labels: AxisLabels) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn labels(&self) -> Option<&AxisLabels> {
        self.labels.as_ref()
    }

    pub fn counts(&self) -> &Counts {
        &self.counts
    }

    pub fn get(&self, y: usize, x1: usize, x2: usize) -> u64 {
        self.counts[y][x1][x2]
    }

    /// Counts in canonical order.
    pub fn canonical(&self) -> [u64; 8] {
        CELLS.map(|(y, x1, x2)| self.counts[y][x1][x2])
    }

    /// `N = d_{+++}`.
    pub fn sample_size(&self) -> u64 {
        self.canonical().iter().sum()
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self { counts: self.counts.map(|a| a.map(|b| b.map(|d| d * k))), labels: self.labels.clone() }
    }

    /// The table with the two response labels exchanged.
    pub fn swap_response(&self) -> Self {
        let mut t = Self::from_fn(|y, x1, x2| self.counts[1 - y][x1][x2]);
        t.labels = self.labels.clone();
        t
    }

    /// The table with the roles of `x1` and `x2` exchanged.
    pub fn swap_features(&self) -> Self {
        let mut t = Self::from_fn(|y, x1, x2| self.counts[y][x2][x1]);
        t.labels = self.labels.as_ref().map(|l| AxisLabels {
            y: l.y.clone(),
            x1: l.x2.clone(),
            x2: l.x1.clone(),
        });
        t
    }

    pub fn probabilities(&self) -> Result<ProbabilityTable> {
        let n = self.sample_size();
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        let n = n as f64;
        Ok(ProbabilityTable { p: self.counts.map(|a| a.map(|b| b.map(|d| d as f64 / n))) })
    }

    /// Encodes with the default `(0, 1)` encoding.
    pub fn encode(&self) -> Result<Dataset> {
        self.encode_with(Encoding::default())
    }

    /// Cell `(i, j, k)` with count `d` becomes `d` rows with response `i` and
    /// features `(j, k)`, mapped through `encoding`. Rows are emitted in
    /// ascending `(y, x1, x2)` order.
    pub fn encode_with(&self, encoding: Encoding) -> Result<Dataset> {
        let n = self.sample_size();
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        let n = usize::try_from(n).map_err(|_| Error::InvalidDataset("table too large".into()))?;
        let mut y = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(2 * n);
        for (i, j, k) in CELLS {
            for _ in 0..self.counts[i][j][k] {
                y.push(encoding.value(i));
                x.push(encoding.value(j));
                x.push(encoding.value(k));
            }
        }
        Ok(Dataset {
            y: DVector::from_vec(y),
            x: DMatrix::from_row_slice(n, 2, &x),
            encoding,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv_writer(file)
    }

    /// Parses the `y,x1,x2,count` cell format. Missing cells are zero;
    /// duplicate cells are rejected.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();

        let header = match records.next() {
            None => return Err(Error::Parse { line: 1, message: "empty file, expected header `y,x1,x2,count`".into() }),
            Some(rec) => rec?,
        };
        let fields: Vec<&str> = header.iter().collect();
        if fields != ["y", "x1", "x2", "count"] {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `y,x1,x2,count`, found `{}`", fields.join(",")),
            });
        }

        let mut counts = [[[0u64; 2]; 2]; 2];
        let mut seen = [[[false; 2]; 2]; 2];
        for rec in records {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() == 1 && rec.get(0) == Some("") {
                continue;
            }
            if rec.len() != 4 {
                return Err(Error::Parse { line, message: format!("expected 4 fields, found {}", rec.len()) });
            }
            let bit = |idx: usize, name: &str| -> Result<usize> {
                match rec.get(idx) {
                    Some("0") => Ok(0),
                    Some("1") => Ok(1),
                    other => Err(Error::Parse {
                        line,
                        message: format!("{name} must be 0 or 1, found `{}`", other.unwrap_or("")),
                    }),
                }
            };
            let (y, x1, x2) = (bit(0, "y")?, bit(1, "x1")?, bit(2, "x2")?);
            let raw = rec.get(3).unwrap_or("");
            let count: i64 = raw
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("count must be an integer, found `{raw}`") })?;
            if count < 0 {
                return Err(Error::NegativeCount { line });
            }
            if seen[y][x1][x2] {
                return Err(Error::Parse { line, message: format!("duplicate cell ({y},{x1},{x2})") });
            }
            seen[y][x1][x2] = true;
            counts[y][x1][x2] = count as u64;
        }
        Ok(Self::new(counts))
    }

    pub fn to_csv_writer(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["y", "x1", "x2", "count"])?;
        for (y, x1, x2) in CELLS {
            w.write_record([y.to_string(), x1.to_string(), x2.to_string(), self.counts[y][x1][x2].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv_writer(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

impl fmt::Display for ContingencyTable222 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x1 x2 | y=0 y=1")?;
        for x1 in 0..2 {
            for x2 in 0..2 {
                writeln!(f, " {x1}  {x2} | {:>3} {:>3}", self.counts[0][x1][x2], self.counts[1][x1][x2])?;
            }
        }
        Ok(())
    }
}

/// Joint distribution `p[y][x1][x2]` of three binary variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityTable {
    p: [[[f64; 2]; 2]; 2],
}

impl ProbabilityTable {
    pub fn new(p: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        let flat = CELLS.map(|(y, x1, x2)| p[y][x1][x2]);
        if flat.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDataset("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = flat.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDataset(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { p })
    }

    pub fn from_canonical(cells: [f64; 8]) -> Result<Self> {
        let mut p = [[[0.0; 2]; 2]; 2];
        for ((y, x1, x2), v) in CELLS.into_iter().zip(cells) {
            p[y][x1][x2] = v;
        }
        Self::new(p)
    }

    pub fn get(&self, y: usize, x1: usize, x2: usize) -> f64 {
        self.p[y][x1][x2]
    }

    pub fn canonical(&self) -> [f64; 8] {
        CELLS.map(|(y, x1, x2)| self.p[y][x1][x2])
    }

    /// Floating-point Simpson test stratified by `x1`.
    pub fn simpson_verdict(&self) -> SimpsonVerdict {
        let p = &self.p;
        let m = |x1: usize, x2: usize| p[0][x1][x2] + p[1][x1][x2];
        let col = |y: usize, x2: usize| p[y][0][x2] + p[y][1][x2];
        let a = p[1][0][1] * m(0, 0) - p[1][0][0] * m(0, 1);
        let b = p[1][1][1] * m(1, 0) - p[1][1][0] * m(1, 1);
        let c = col(1, 1) * (col(0, 0) + col(1, 0)) - col(1, 0) * (col(0, 1) + col(1, 1));
        SimpsonVerdict::from_signs(a.partial_cmp(&0.0), b.partial_cmp(&0.0), c.partial_cmp(&0.0))
    }
}

/// Value pair used to encode binary data: `low` encodes 0, `high` encodes 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub low: f64,
    pub high: f64,
}

impl Default for Encoding {
    fn default() -> Self {
        Self { low: 0.0, high: 1.0 }
    }
}

impl Encoding {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low >= 0.0 && high >= 0.0) || low == high {
            return Err(Error::InvalidDataset(format!(
                "encoding ({low}, {high}) must be two distinct non-negative finite values"
            )));
        }
        Ok(Self { low, high })
    }

    pub fn value(&self, bit: usize) -> f64 {
        if bit == 0 {
            self.low
        } else {
            self.high
        }
    }

    pub fn is_binary01(&self) -> bool {
        self.low == 0.0 && self.high == 1.0
    }

    fn bit(&self, v: f64) -> Option<bool> {
        if v == self.low {
            Some(false)
        } else if v == self.high {
            Some(true)
        } else {
            None
        }
    }
}

/// Response vector and `N x p` design matrix over an [`Encoding`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    encoding: Encoding,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, encoding: Encoding) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::WrongShape(format!("y has {} rows, x has {}", y.len(), x.nrows())));
        }
        if x.ncols() == 0 {
            return Err(Error::WrongShape("design matrix has no columns".into()));
        }
        if y.iter().chain(x.iter()).any(|v| encoding.bit(*v).is_none()) {
            return Err(Error::InvalidDataset(format!(
                "entries must be {} or {}",
                encoding.low, encoding.high
            )));
        }
        Ok(Self { y, x, encoding })
    }

    /// Builds a `(0, 1)`-encoded dataset from labels and feature rows.
    pub fn from_rows(y: &[u8], rows: &[Vec<u8>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::WrongShape("feature rows have different lengths".into()));
        }
        let x = DMatrix::from_fn(rows.len(), p, |r, c| f64::from(rows[r][c]));
        let y = DVector::from_iterator(y.len(), y.iter().map(|v| f64::from(*v)));
        Self::new(y, x, Encoding::default())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    /// Binary class labels (`true` where `y` equals the encoded 1).
    pub fn labels(&self) -> Vec<bool> {
        self.y.iter().map(|v| *v == self.encoding.high).collect()
    }

    /// `(N_0, N_1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels().iter().filter(|b| **b).count();
        (self.n() - ones, ones)
    }

    /// `true` when every entry is an integer, so sums can be formed exactly.
    pub fn is_integral(&self) -> bool {
        self.y.iter().chain(self.x.iter()).all(|v| v.fract() == 0.0 && v.abs() < 2f64.powi(53))
    }

    /// Appends `k` columns filled with the encoded 0.
    pub fn append_zero_columns(&self, k: usize) -> Self {
        let p = self.p();
        let low = self.encoding.low;
        let x = DMatrix::from_fn(self.n(), p + k, |r, c| if c < p { self.x[(r, c)] } else { low });
        Self { y: self.y.clone(), x, encoding: self.encoding }
    }

    /// The rows at `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        let x = DMatrix::from_fn(idx.len(), self.p(), |r, c| self.x[(idx[r], c)]);
        Self { y, x, encoding: self.encoding }
    }

    /// Re-encodes a `(0, 1)` dataset with another value pair.
    pub fn reencode(&self, encoding: Encoding) -> Result<Self> {
        let map = |v: f64| encoding.value(usize::from(self.encoding.bit(v) == Some(true)));
        Self::new(self.y.map(map), self.x.map(map), encoding)
    }

    /// Inverse of [`ContingencyTable222::encode`].
    pub fn decode(&self) -> Result<ContingencyTable222> {
        if self.p() != 2 {
            return Err(Error::WrongShape(format!("decode needs 2 features, dataset has {}", self.p())));
        }
        let mut counts = [[[0u64; 2]; 2]; 2];
        let bit = |v: f64| usize::from(self.encoding.bit(v) == Some(true));
        for r in 0..self.n() {
            counts[bit(self.y[r])][bit(self.x[(r, 0)])][bit(self.x[(r, 1)])] += 1;
        }
        Ok(ContingencyTable222::new(counts))
    }
}

/// Outcome of the Simpson's-paradox test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimpsonVerdict {
    None,
    /// Both stratum trends negative, aggregate trend positive.
    TypeA,
    /// Both stratum trends positive, aggregate trend negative.
    TypeB,
}

impl SimpsonVerdict {
    pub fn name(self) -> &'static str {
        match self {
            SimpsonVerdict::None => "none",
            SimpsonVerdict::TypeA => "type_a",
            SimpsonVerdict::TypeB => "type_b",
        }
    }

    pub fn is_simpson(self) -> bool {
        self != SimpsonVerdict::None
    }

    fn from_signs(
        a: Option<std::cmp::Ordering>,
        b: Option<std::cmp::Ordering>,
        c: Option<std::cmp::Ordering>,
    ) -> Self {
        use std::cmp::Ordering::{Greater, Less};
        match (a, b, c) {
            (Some(Less), Some(Less), Some(Greater)) => SimpsonVerdict::TypeA,
            (Some(Greater), Some(Greater), Some(Less)) => SimpsonVerdict::TypeB,
            _ => SimpsonVerdict::None,
        }
    }
}

/// Feature whose values define the strata of a Simpson test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratifier {
    /// Strata `x1 = 0, 1`; compares the `x2` trend within strata and overall.
    X1,
    /// Strata `x2 = 0, 1`; compares the `x1` trend within strata and overall.
    X2,
}

impl Stratifier {
    /// 1-based index of the stratifying feature.
    pub fn variable(self) -> usize {
        match self {
            Stratifier::X1 => 1,
            Stratifier::X2 => 2,
        }
    }
}

/// Simpson test on the empirical distribution, stratified by `x1`:
///
/// type A iff `p101 p+00 - p100 p+01 < 0`, `p111 p+10 - p110 p+11 < 0` and
/// `p1+1 p++0 - p1+0 p++1 > 0`; type B iff all three signs are flipped. All
/// inequalities are strict and evaluated on integer counts.
pub fn is_simpson(table: &ContingencyTable222) -> Result<SimpsonVerdict> {
    let n = table.sample_size();
    if n == 0 {
        return Err(Error::EmptyTable);
    }
    let d = |y: usize, x1: usize, x2: usize| i128::from(table.get(y, x1, x2));
    let m = |x1: usize, x2: usize| d(0, x1, x2) + d(1, x1, x2);
    let col = |y: usize, x2: usize| d(y, 0, x2) + d(y, 1, x2);
    let a = d(1, 0, 1) * m(0, 0) - d(1, 0, 0) * m(0, 1);
    let b = d(1, 1, 1) * m(1, 0) - d(1, 1, 0) * m(1, 1);
    let c = col(1, 1) * (col(0, 0) + col(1, 0)) - col(1, 0) * (col(0, 1) + col(1, 1));
    Ok(SimpsonVerdict::from_signs(Some(a.cmp(&0)), Some(b.cmp(&0)), Some(c.cmp(&0))))
}

/// Simpson test with an explicit stratifying feature.
pub fn simpson_verdict_within(table: &ContingencyTable222, stratifier: Stratifier) -> Result<SimpsonVerdict> {
    match stratifier {
        Stratifier::X1 => is_simpson(table),
        Stratifier::X2 => is_simpson(&table.swap_features()),
    }
}

/// Reference tables used in documentation, tests and the CLI.
pub mod fixtures {
    use super::{AxisLabels, ContingencyTable222, Dataset};

    /// Loan defaults by gender (`x1 = 1` male) and occupation group
    /// (`x2 = 1` group B); `y = 1` is a default.
    pub fn loan() -> ContingencyTable222 {
        // female A 15/15, female B 10/14, male A 16/5, male B 27/8 (no/yes)
        ContingencyTable222::from_canonical([15, 10, 16, 27, 15, 14, 5, 8]).with_labels(AxisLabels {
            y: "default".into(),
            x1: "male".into(),
            x2: "occupation_b".into(),
        })
    }

    /// Florida death-penalty verdicts 1976-77 by victim race (`x1 = 1` black)
    /// and defendant race (`x2 = 1` black); `y = 1` is a death sentence.
    pub fn death_penalty() -> ContingencyTable222 {
        // WW 132/19, WB 52/11, BW 9/0, BB 97/6
        ContingencyTable222::from_canonical([132, 52, 9, 97, 19, 11, 0, 6]).with_labels(AxisLabels {
            y: "death_penalty".into(),
            x1: "black_victim".into(),
            x2: "black_defendant".into(),
        })
    }

    pub const PATHOLOGICAL_DEFAULT_CSV: &str =
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/pathological-default.csv"));

    /// 600-sample loan-default table (`x1 = 1` male, `x2 = 1` occupation B)
    /// with a Simpson reversal of the gender trend inside each occupation group.
    pub fn pathological_default() -> ContingencyTable222 {
        ContingencyTable222::from_csv_reader(PATHOLOGICAL_DEFAULT_CSV.as_bytes())
            .expect("bundled fixture parses")
            .with_labels(AxisLabels { y: "default".into(), x1: "male".into(), x2: "occupation_b".into() })
    }

    /// Nine rows with five binary features. The ridge path of the first
    /// coefficient changes sign twice, so its regime is a bounded interval.
    pub fn bounded_five_feature() -> Dataset {
        let y = [0, 1, 0, 0, 0, 1, 1, 0, 0];
        let rows = [
            [0, 0, 0, 1, 0],
            [0, 1, 1, 1, 0],
            [1, 0, 0, 1, 1],
            [1, 1, 0, 1, 1],
            [0, 1, 1, 0, 1],
            [0, 1, 0, 1, 0],
            [1, 1, 0, 1, 0],
            [1, 0, 1, 0, 0],
            [1, 0, 1, 1, 0],
        ];
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(&y, &rows).expect("fixture rows are binary")
    }
}
