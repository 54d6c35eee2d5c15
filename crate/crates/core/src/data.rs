//! Categorical data sets: CSV ingestion, value interning, missing-value
//! handling and the synthetic generator.
//!
//! Every feature has its own dense code space `0..m_r`, assigned in order of
//! first appearance. [`MISSING`] is reserved for NULL cells.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code reserved for a missing (NULL) cell.
pub const MISSING: u32 = u32::MAX;

/// Ground-truth classes carried alongside a data set for evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLabels {
    pub codes: Vec<usize>,
    pub names: Vec<String>,
}

/// Immutable integer-coded categorical matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<u32>,
    vocab: Vec<Vec<String>>,
    feature_names: Vec<String>,
    labels: Option<ClassLabels>,
}

impl Dataset {
    /// Builds a data set from row-major codes, validating every invariant.
    pub fn new(
        n: usize,
        d: usize,
        values: Vec<u32>,
        vocab: Vec<Vec<String>>,
        feature_names: Vec<String>,
        labels: Option<ClassLabels>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset("no objects".into()));
        }
        if d == 0 {
            return Err(Error::EmptyDataset("no features".into()));
        }
        if values.len() != n * d {
            return Err(Error::LengthMismatch { left: values.len(), right: n * d });
        }
        if vocab.len() != d || feature_names.len() != d {
            return Err(Error::InvalidArgument(format!(
                "expected {d} vocabularies and feature names, got {} and {}",
                vocab.len(),
                feature_names.len()
            )));
        }
        for (r, v) in vocab.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::InvalidArgument(format!("feature {r} has an empty vocabulary")));
            }
            let mut seen = std::collections::HashSet::with_capacity(v.len());
            if !v.iter().all(|s| seen.insert(s.as_str())) {
                return Err(Error::InvalidArgument(format!("feature {r} has duplicate vocabulary entries")));
            }
        }
        for (idx, &code) in values.iter().enumerate() {
            let r = idx % d;
            if code != MISSING && code as usize >= vocab[r].len() {
                return Err(Error::InvalidArgument(format!(
                    "code {code} out of range for feature {r} (m = {})",
                    vocab[r].len()
                )));
            }
        }
        if let Some(l) = &labels {
            if l.codes.len() != n {
                return Err(Error::LengthMismatch { left: l.codes.len(), right: n });
            }
        }
        Ok(Self { n, d, values, vocab, feature_names, labels })
    }

    /// Convenience constructor from integer rows; feature `r` gets the
    /// vocabulary `"0".."max_r"`.
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse { row: i + 1, message: format!("expected {d} fields, found {}", row.len()) });
            }
            values.extend_from_slice(row);
        }
        let vocab = (0..d)
            .map(|r| {
                let m = values
                    .iter()
                    .skip(r)
                    .step_by(d.max(1))
                    .filter(|&&c| c != MISSING)
                    .map(|&c| c + 1)
                    .max()
                    .unwrap_or(1);
                (0..m).map(|c| c.to_string()).collect()
            })
            .collect();
        let names = (0..d).map(|r| r.to_string()).collect();
        Self::new(n, d, values, vocab, names, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Domain size `m_r` of feature `r`.
    pub fn cardinality(&self, r: usize) -> usize {
        self.vocab[r].len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.vocab.iter().map(Vec::len).collect()
    }

    pub fn vocab(&self) -> &[Vec<String>] {
        &self.vocab
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> Option<&ClassLabels> {
        self.labels.as_ref()
    }

    pub fn with_labels(mut self, labels: ClassLabels) -> Result<Self> {
        if labels.codes.len() != self.n {
            return Err(Error::LengthMismatch { left: labels.codes.len(), right: self.n });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn has_missing(&self) -> bool {
        self.values.contains(&MISSING)
    }

    /// Original string of cell `(i, r)`, `None` when missing.
    pub fn decode(&self, i: usize, r: usize) -> Option<&str> {
        match self.values[i * self.d + r] {
            MISSING => None,
            c => Some(self.vocab[r][c as usize].as_str()),
        }
    }
}

/// CSV ingestion options.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Column holding ground-truth classes. Without a header, columns are
    /// named by their zero-based position.
    pub label_column: Option<String>,
    /// Cell text interpreted as NULL; `None` disables missing detection.
    pub missing_token: Option<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { has_header: true, label_column: None, missing_token: Some("?".to_string()) }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(BufReader::new(file), options)
}

/// Parses RFC 4180 CSV, interning each column into its own vocabulary.
pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);

    let mut records = rdr.records();
    let mut header: Option<Vec<String>> = None;
    let mut first_data: Option<csv::StringRecord> = None;
    if let Some(rec) = records.next() {
        let rec = rec.map_err(csv_error)?;
        if options.has_header {
            header = Some(rec.iter().map(str::to_string).collect());
        } else {
            first_data = Some(rec);
        }
    }
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| first_data.as_ref().map(|r| r.len()))
        .ok_or_else(|| Error::EmptyDataset("empty file".into()))?;
    let names: Vec<String> = header.unwrap_or_else(|| (0..width).map(|j| j.to_string()).collect());

    let label_idx = match &options.label_column {
        Some(name) => Some(
            names
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("label column `{name}` not found")))?,
        ),
        None => None,
    };
    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::EmptyDataset("no feature columns".into()));
    }

    let mut interners: Vec<Interner> = (0..d).map(|_| Interner::default()).collect();
    let mut label_interner = Interner::default();
    let mut label_codes = Vec::new();
    let mut values = Vec::new();
    let mut n = 0usize;

    let mut ingest = |rec: &csv::StringRecord, row_no: usize| -> Result<()> {
        if rec.len() != width {
            return Err(Error::Parse { row: row_no, message: format!("expected {width} fields, found {}", rec.len()) });
        }
        let mut r = 0;
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                label_codes.push(label_interner.intern(cell) as usize);
                continue;
            }
            let code = match &options.missing_token {
                Some(tok) if cell == tok => MISSING,
                _ => interners[r].intern(cell),
            };
            values.push(code);
            r += 1;
        }
        n += 1;
        Ok(())
    };

    if let Some(rec) = &first_data {
        ingest(rec, line_of(rec, 1))?;
    }
    for (k, rec) in records.enumerate() {
        let rec = rec.map_err(csv_error)?;
        let fallback = k + 1 + usize::from(options.has_header) + usize::from(first_data.is_some());
        ingest(&rec, line_of(&rec, fallback))?;
    }
    if n == 0 {
        return Err(Error::EmptyDataset("no data rows".into()));
    }

    let feature_names: Vec<String> =
        names.iter().enumerate().filter(|(j, _)| Some(*j) != label_idx).map(|(_, s)| s.clone()).collect();
    // A column that is entirely missing still needs m_r >= 1.
    let vocab =
        interners.into_iter().map(|i| if i.values.is_empty() { vec![String::new()] } else { i.values }).collect();
    let labels = label_idx.map(|_| ClassLabels { codes: label_codes, names: label_interner.values });
    Dataset::new(n, d, values, vocab, feature_names, labels)
}

fn line_of(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map_or(fallback, |p| p.line() as usize)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { row, message: e.to_string() }
}

#[derive(Default)]
struct Interner {
    index: HashMap<String, u32>,
    values: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&c) = self.index.get(s) {
            return c;
        }
        let c = self.values.len() as u32;
        self.index.insert(s.to_string(), c);
        self.values.push(s.to_string());
        c
    }
}

/// Keeps only fully observed rows; class labels are filtered alongside.
pub fn drop_missing(ds: &Dataset) -> Result<Dataset> {
    let keep: Vec<usize> = (0..ds.n).filter(|&i| !ds.row(i).contains(&MISSING)).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset("empty dataset after filtering".into()));
    }
    if keep.len() == ds.n {
        return Ok(ds.clone());
    }
    let values = keep.iter().flat_map(|&i| ds.row(i).iter().copied()).collect();
    let labels = ds
        .labels
        .as_ref()
        .map(|l| ClassLabels { codes: keep.iter().map(|&i| l.codes[i]).collect(), names: l.names.clone() });
    Dataset::new(keep.len(), ds.d, values, ds.vocab.clone(), ds.feature_names.clone(), labels)
}

/// Parameters of the planted-signature generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub k_true: usize,
    /// Probability that a cell carries its cluster's signature value.
    pub purity: f64,
    /// Values per feature.
    pub m: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.k_true == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("n, d, k and m must all be at least 1".into()));
        }
        if self.k_true > self.m {
            return Err(Error::InvalidArgument(format!(
                "k_true ({}) exceeds values per feature ({})",
                self.k_true, self.m
            )));
        }
        if !(self.purity > 0.0 && self.purity <= 1.0) {
            return Err(Error::InvalidArgument(format!("purity {} outside (0, 1]", self.purity)));
        }
        if self.m > u32::MAX as usize {
            return Err(Error::InvalidArgument("too many values per feature".into()));
        }
        Ok(())
    }
}

/// Object `i` belongs to latent cluster `i mod k_true`; each of its cells is
/// the cluster's signature code with probability `purity`, otherwise a
/// uniform draw from `0..m`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth: Vec<usize> = (0..spec.n).map(|i| i % spec.k_true).collect();
    let mut values = Vec::with_capacity(spec.n * spec.d);
    for &c in &truth {
        for _ in 0..spec.d {
            let code = if spec.purity >= 1.0 || rng.gen_bool(spec.purity) {
                c as u32
            } else {
                rng.gen_range(0..spec.m as u32)
            };
            values.push(code);
        }
    }
    let vocab = vec![(0..spec.m).map(|t| format!("v{t}")).collect::<Vec<_>>(); spec.d];
    let names = (0..spec.d).map(|r| format!("f{r}")).collect();
    let ds = Dataset::new(spec.n, spec.d, values, vocab, names, None)?;
    Ok((ds, truth))
}

/// Writes the data set as CSV with a header row, missing cells as `missing_token`.
/// An optional class column named `label_name` is appended.
pub fn write_csv<W: Write>(
    ds: &Dataset,
    writer: W,
    missing_token: &str,
    labels: Option<(&str, &[usize])>,
) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    if let Some((name, l)) = labels {
        if l.len() != ds.n {
            return Err(Error::LengthMismatch { left: l.len(), right: ds.n });
        }
        header.push(name);
    }
    w.write_record(&header).map_err(io)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.n {
        rec.clear();
        for r in 0..ds.d {
            rec.push(ds.decode(i, r).unwrap_or(missing_token).to_string());
        }
        if let Some((_, l)) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    Ok(())
}

/// Reads a label file: one non-negative integer per line, blank lines ignored.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t.parse::<usize>().map_err(|e| Error::Parse { row: k + 1, message: format!("`{t}`: {e}") })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[usize]) -> std::io::Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()
}
