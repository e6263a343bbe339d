//! Loading price tables, relative returns, sign binarization and
//! configuration coding.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{CritError, Result};
use crate::rng::seeded_rng;

/// A single orientation, always `-1` or `+1`.
pub type Spin = i8;

/// Largest system size representable by a [`ConfigCode`].
pub const MAX_CODE_BITS: usize = 63;

/// A parsed numeric CSV table: header labels, optional `t` column, row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub labels: Vec<String>,
    pub timestamps: Option<Vec<String>>,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Table {
    /// Reads a comma-separated table whose header holds entity labels. A first
    /// column named `t` is taken as opaque timestamps.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(CritError::InvalidInput("empty CSV: no header row".into()));
        }
        let has_t = header.get(0).is_some_and(|h| h.eq_ignore_ascii_case("t"));
        let skip = usize::from(has_t);
        let labels: Vec<String> = header.iter().skip(skip).map(str::to_owned).collect();
        if labels.is_empty() {
            return Err(CritError::InvalidInput("no entity columns in header".into()));
        }
        let cols = labels.len();
        let mut timestamps = Vec::new();
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != cols + skip {
                return Err(CritError::InvalidInput(format!(
                    "row {row} has {} fields, expected {}",
                    record.len(),
                    cols + skip
                )));
            }
            if has_t {
                timestamps.push(record[0].to_owned());
            }
            for (column, field) in record.iter().skip(skip).enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    CritError::InvalidInput(format!(
                        "row {row}, column {column}: cannot parse `{field}` as a number"
                    ))
                })?;
                values.push(v);
            }
        }
        let rows = values.len() / cols;
        if rows == 0 {
            return Err(CritError::InvalidInput("empty CSV: no data rows".into()));
        }
        Ok(Table {
            labels,
            timestamps: has_t.then_some(timestamps),
            rows,
            cols,
            values,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// True when every entry is exactly `-1` or `+1`.
    pub fn is_spin_valued(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }
}

/// M x N positive prices, one column per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    labels: Vec<String>,
    timestamps: Option<Vec<String>>,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(labels: Vec<String>, timestamps: Option<Vec<String>>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = labels.len();
        let m = rows.len();
        let mut values = Vec::with_capacity(m * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(CritError::InvalidInput(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::from_table(Table {
            labels,
            timestamps,
            rows: m,
            cols,
            values,
        })
    }

    pub fn from_table(table: Table) -> Result<Self> {
        if table.rows < 2 {
            return Err(CritError::InsufficientRows {
                needed: 2,
                got: table.rows,
            });
        }
        if let Some(ts) = &table.timestamps {
            if ts.len() != table.rows {
                return Err(CritError::InvalidInput("timestamp count differs from row count".into()));
            }
        }
        for (k, &v) in table.values.iter().enumerate() {
            let reason = if !v.is_finite() {
                "price is not finite"
            } else if v <= 0.0 {
                "price is not positive"
            } else {
                continue;
            };
            return Err(CritError::BadEntry {
                row: k / table.cols,
                column: k % table.cols,
                value: v,
                reason,
            });
        }
        Ok(PriceSeries {
            labels: table.labels,
            timestamps: table.timestamps,
            rows: table.rows,
            cols: table.cols,
            values: table.values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.cols + i]
    }
}

/// Relative returns, one row fewer than the price table they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    labels: Vec<String>,
    timestamps: Option<Vec<String>>,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ReturnMatrix {
    pub fn from_table(table: Table) -> Result<Self> {
        if table.rows == 0 {
            return Err(CritError::InsufficientRows { needed: 1, got: 0 });
        }
        if let Some((k, &v)) = table.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CritError::BadEntry {
                row: k / table.cols,
                column: k % table.cols,
                value: v,
                reason: "return is not finite",
            });
        }
        Ok(ReturnMatrix {
            labels: table.labels,
            timestamps: table.timestamps,
            rows: table.rows,
            cols: table.cols,
            values: table.values,
        })
    }

    /// Treats each spin as a real-valued observation (used for spin-based correlations).
    pub fn from_spins(data: &BinaryMatrix) -> Self {
        ReturnMatrix {
            labels: data.labels.clone(),
            timestamps: data.timestamps.clone(),
            rows: data.rows,
            cols: data.cols,
            values: data.spins.iter().map(|&s| f64::from(s)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.cols + i]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.get(t, i)).collect()
    }
}

/// `r[t][i] = (p[t+1][i] - p[t][i]) / p[t][i]`.
pub fn compute_returns(prices: &PriceSeries) -> ReturnMatrix {
    let (m, n) = (prices.rows, prices.cols);
    let mut values = Vec::with_capacity((m - 1) * n);
    for t in 0..m - 1 {
        for i in 0..n {
            let p0 = prices.get(t, i);
            values.push((prices.get(t + 1, i) - p0) / p0);
        }
    }
    ReturnMatrix {
        labels: prices.labels.clone(),
        timestamps: prices.timestamps.as_ref().map(|ts| ts[1..].to_vec()),
        rows: m - 1,
        cols: n,
        values,
    }
}

/// How a return of exactly zero is mapped to a spin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroPolicy {
    /// Repeat the previous sign of the same column; `-1` on the first row.
    #[default]
    Carry,
    Down,
    Up,
    /// Discard every row containing a zero return.
    DropRow,
}

impl FromStr for ZeroPolicy {
    type Err = CritError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "carry" => Ok(ZeroPolicy::Carry),
            "down" | "-1" => Ok(ZeroPolicy::Down),
            "up" | "+1" | "1" => Ok(ZeroPolicy::Up),
            "drop-row" | "drop" => Ok(ZeroPolicy::DropRow),
            other => Err(CritError::param(
                "zero_policy",
                format!("unknown policy `{other}` (carry, down, up, drop-row)"),
            )),
        }
    }
}

impl std::fmt::Display for ZeroPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ZeroPolicy::Carry => "carry",
            ZeroPolicy::Down => "down",
            ZeroPolicy::Up => "up",
            ZeroPolicy::DropRow => "drop-row",
        })
    }
}

/// M x N table of spins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    labels: Vec<String>,
    timestamps: Option<Vec<String>>,
    rows: usize,
    cols: usize,
    spins: Vec<Spin>,
}

impl BinaryMatrix {
    /// Builds a matrix from row-major spins; labels default to `s0, s1, ...`.
    pub fn from_rows(rows: &[Vec<Spin>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut spins = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(CritError::ShapeMismatch("ragged spin rows".into()));
            }
            spins.extend_from_slice(r);
        }
        Self::from_flat(default_labels(cols), None, rows.len(), cols, spins)
    }

    pub fn from_flat(
        labels: Vec<String>,
        timestamps: Option<Vec<String>>,
        rows: usize,
        cols: usize,
        spins: Vec<Spin>,
    ) -> Result<Self> {
        if spins.len() != rows * cols || labels.len() != cols {
            return Err(CritError::ShapeMismatch(format!(
                "{} spins / {} labels for a {rows}x{cols} matrix",
                spins.len(),
                labels.len()
            )));
        }
        if let Some(k) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(CritError::BadEntry {
                row: k / cols.max(1),
                column: k % cols.max(1),
                value: f64::from(spins[k]),
                reason: "spin must be -1 or +1",
            });
        }
        Ok(BinaryMatrix {
            labels,
            timestamps,
            rows,
            cols,
            spins,
        })
    }

    pub fn from_table(table: Table) -> Result<Self> {
        let spins = table
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if v == 1.0 {
                    Ok(1)
                } else if v == -1.0 {
                    Ok(-1)
                } else {
                    Err(CritError::BadEntry {
                        row: k / table.cols,
                        column: k % table.cols,
                        value: v,
                        reason: "spin must be -1 or +1",
                    })
                }
            })
            .collect::<Result<Vec<Spin>>>()?;
        Self::from_flat(table.labels, table.timestamps, table.rows, table.cols, spins)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, t: usize) -> &[Spin] {
        &self.spins[t * self.cols..(t + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[Spin]> {
        self.spins.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn get(&self, t: usize, i: usize) -> Spin {
        self.spins[t * self.cols + i]
    }

    /// Configuration code of every row.
    pub fn codes(&self) -> Vec<u64> {
        assert!(self.cols <= MAX_CODE_BITS, "too many entities to encode");
        self.iter_rows().map(code_of).collect()
    }

    /// Restriction to the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<BinaryMatrix> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.cols) {
            return Err(CritError::param("columns", format!("index {bad} out of range 0..{}", self.cols)));
        }
        let mut spins = Vec::with_capacity(self.rows * columns.len());
        for row in self.iter_rows() {
            spins.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(BinaryMatrix {
            labels: columns.iter().map(|&c| self.labels[c].clone()).collect(),
            timestamps: self.timestamps.clone(),
            rows: self.rows,
            cols: columns.len(),
            spins,
        })
    }

    /// Rows `start..end`.
    pub fn window(&self, start: usize, end: usize) -> BinaryMatrix {
        let end = end.min(self.rows);
        BinaryMatrix {
            labels: self.labels.clone(),
            timestamps: self.timestamps.as_ref().map(|ts| ts[start..end].to_vec()),
            rows: end - start,
            cols: self.cols,
            spins: self.spins[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Writes the matrix in the ingest CSV format with a leading `t` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (t, row) in self.iter_rows().enumerate() {
            let stamp = match &self.timestamps {
                Some(ts) => ts[t].clone(),
                None => t.to_string(),
            };
            let mut record = vec![stamp];
            record.extend(row.iter().map(|s| s.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

/// `+1` for positive, `-1` for negative; zeros resolved by `policy`.
pub fn binarize(returns: &ReturnMatrix, policy: ZeroPolicy) -> BinaryMatrix {
    let (m, n) = (returns.rows, returns.cols);
    let mut spins = Vec::with_capacity(m * n);
    let mut kept_stamps = Vec::new();
    let mut previous: Vec<Spin> = vec![-1; n];
    let mut rows = 0;
    for t in 0..m {
        let row = &returns.values[t * n..(t + 1) * n];
        if policy == ZeroPolicy::DropRow && row.contains(&0.0) {
            continue;
        }
        for (i, &r) in row.iter().enumerate() {
            let s = if r > 0.0 {
                1
            } else if r < 0.0 {
                -1
            } else {
                match policy {
                    ZeroPolicy::Carry => previous[i],
                    ZeroPolicy::Down | ZeroPolicy::DropRow => -1,
                    ZeroPolicy::Up => 1,
                }
            };
            previous[i] = s;
            spins.push(s);
        }
        if let Some(ts) = &returns.timestamps {
            kept_stamps.push(ts[t].clone());
        }
        rows += 1;
    }
    BinaryMatrix {
        labels: returns.labels.clone(),
        timestamps: returns.timestamps.as_ref().map(|_| kept_stamps),
        rows,
        cols: n,
        spins,
    }
}

/// Integer code of a spin configuration on `n` entities: bit `b` is set iff
/// entity `b` is up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigCode {
    pub code: u64,
    pub n: usize,
}

impl ConfigCode {
    pub fn new(code: u64, n: usize) -> Result<Self> {
        if n > MAX_CODE_BITS {
            return Err(CritError::param("n", format!("at most {MAX_CODE_BITS} entities")));
        }
        if code >> n != 0 {
            return Err(CritError::param("code", format!("{code} is out of range for n = {n}")));
        }
        Ok(ConfigCode { code, n })
    }
}

fn code_of(row: &[Spin]) -> u64 {
    row.iter()
        .enumerate()
        .fold(0u64, |acc, (b, &s)| if s > 0 { acc | (1 << b) } else { acc })
}

pub fn encode(row: &[Spin]) -> Result<ConfigCode> {
    if row.len() > MAX_CODE_BITS {
        return Err(CritError::param("row", format!("at most {MAX_CODE_BITS} entities")));
    }
    if row.iter().any(|&s| s != 1 && s != -1) {
        return Err(CritError::InvalidInput("spin must be -1 or +1".into()));
    }
    Ok(ConfigCode {
        code: code_of(row),
        n: row.len(),
    })
}

pub fn decode(code: ConfigCode) -> Result<Vec<Spin>> {
    let code = ConfigCode::new(code.code, code.n)?;
    Ok(decode_unchecked(code.code, code.n))
}

pub(crate) fn decode_unchecked(code: u64, n: usize) -> Vec<Spin> {
    (0..n).map(|b| if (code >> b) & 1 == 1 { 1 } else { -1 }).collect()
}

/// Mean Pearson correlation over all unordered pairs of the selected columns.
pub fn mean_correlation(returns: &ReturnMatrix, subset: &[usize]) -> Result<f64> {
    if subset.len() < 2 {
        return Err(CritError::param("subset", "need at least two columns"));
    }
    if let Some(&bad) = subset.iter().find(|&&c| c >= returns.cols) {
        return Err(CritError::param("subset", format!("column {bad} out of range")));
    }
    let m = returns.rows as f64;
    let standardized: Vec<Vec<f64>> = subset
        .iter()
        .map(|&c| {
            let col = returns.column(c);
            let mean = col.iter().sum::<f64>() / m;
            let ss: f64 = col.iter().map(|x| (x - mean).powi(2)).sum();
            if ss == 0.0 {
                return Err(CritError::ConstantColumn(c));
            }
            let scale = ss.sqrt();
            Ok(col.iter().map(|x| (x - mean) / scale).collect())
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..standardized.len() {
        for b in a + 1..standardized.len() {
            let r: f64 = standardized[a]
                .iter()
                .zip(&standardized[b])
                .map(|(x, y)| x * y)
                .sum();
            total += r.clamp(-1.0, 1.0);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// `C(n_total, n)`, saturating at `u128::MAX`.
pub fn binomial(n_total: usize, n: usize) -> u128 {
    if n > n_total {
        return 0;
    }
    let k = n.min(n_total - n);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n_total - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `n`-subsets of `0..n_total` in lexicographic order.
pub fn all_subsets(n_total: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n > n_total {
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..n).rev().find(|&p| idx[p] != p + n_total - n) else {
            break;
        };
        idx[pos] += 1;
        for q in pos + 1..n {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

/// `count` distinct index sets of size `n` drawn from `0..n_total`, each sorted.
/// Returns every subset exactly once when `count >= C(n_total, n)`.
pub fn random_subsets(n_total: usize, n: usize, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n > n_total {
        return Err(CritError::param("n", format!("subset size {n} exceeds {n_total} entities")));
    }
    if n == 0 {
        return Err(CritError::param("n", "subset size must be positive"));
    }
    let total = binomial(n_total, n);
    if count as u128 >= total {
        return Ok(all_subsets(n_total, n));
    }
    let mut rng = seeded_rng(seed);
    if 2 * count as u128 > total {
        // dense regime: pick from the full list
        let all = all_subsets(n_total, n);
        let picks = index::sample(&mut rng, all.len(), count);
        return Ok(picks.iter().map(|k| all[k].clone()).collect());
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut s = index::sample(&mut rng, n_total, n).into_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    Ok(out)
}
