//! DARWIN loading, preprocessing and cross-validation splits.
//!
//! The DARWIN table has one row per participant: an `ID` column, 450
//! handwriting features (25 tasks x 18 features, task-major) and a `class`
//! column holding `H` (healthy) or `P` (patient).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};

pub const N_TASKS: usize = 25;
pub const FEATURES_PER_TASK: usize = 18;
pub const N_DARWIN_FEATURES: usize = N_TASKS * FEATURES_PER_TASK;

pub const ID_COLUMN: &str = "ID";
pub const CLASS_COLUMN: &str = "class";

/// Relative threshold under which a column's standard deviation is treated as zero.
const CONSTANT_COLUMN_EPS: f64 = 1e-12;

/// Binary diagnosis label. `Patient` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "H")]
    Healthy,
    #[serde(rename = "P")]
    Patient,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Healthy => -1.0,
            Label::Patient => 1.0,
        }
    }

    /// Sign of a decision value; exact zero maps to `Patient`.
    pub fn from_decision(value: f64) -> Label {
        if value < 0.0 {
            Label::Healthy
        } else {
            Label::Patient
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "H" => Some(Label::Healthy),
            "P" => Some(Label::Patient),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Healthy => "H",
            Label::Patient => "P",
        })
    }
}

/// Rows of real features with one binary label per row.
///
/// Storage is row-major so that kernels can borrow rows as slices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    labels: Vec<Label>,
    column_names: Vec<String>,
    row_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        data: Vec<f64>,
        n_rows: usize,
        n_cols: usize,
        labels: Vec<Label>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let row_ids = (0..n_rows).map(|i| i.to_string()).collect();
        Self::with_ids(data, n_rows, n_cols, labels, column_names, row_ids)
    }

    pub fn with_ids(
        data: Vec<f64>,
        n_rows: usize,
        n_cols: usize,
        labels: Vec<Label>,
        column_names: Vec<String>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(dim(format!("empty matrix ({n_rows}x{n_cols})")));
        }
        if data.len() != n_rows * n_cols {
            return Err(dim(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        if labels.len() != n_rows || row_ids.len() != n_rows {
            return Err(dim(format!(
                "{} labels / {} ids for {n_rows} rows",
                labels.len(),
                row_ids.len()
            )));
        }
        if column_names.len() != n_cols {
            return Err(dim(format!(
                "{} column names for {n_cols} columns",
                column_names.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite value at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            data,
            n_rows,
            n_cols,
            labels,
            column_names,
            row_ids,
        })
    }

    /// Builds a matrix from row vectors with generated column names.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(dim("ragged rows"));
        }
        let data = rows.iter().flatten().copied().collect();
        let names = (0..n_cols).map(|j| format!("x{j}")).collect();
        Self::new(data, rows.len(), n_cols, labels, names)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows).map(move |i| self.get(i, j))
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows at `idx`, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            data,
            n_rows: idx.len(),
            n_cols: self.n_cols,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            column_names: self.column_names.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }

    /// Columns at `idx`, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<FeatureMatrix> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.n_cols) {
            return Err(dim(format!("column {bad} out of range ({})", self.n_cols)));
        }
        let mut data = Vec::with_capacity(idx.len() * self.n_rows);
        for r in self.rows() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        FeatureMatrix::with_ids(
            data,
            self.n_rows,
            idx.len(),
            self.labels.clone(),
            idx.iter().map(|&j| self.column_names[j].clone()).collect(),
            self.row_ids.clone(),
        )
    }

    fn with_values(&self, data: Vec<f64>, n_cols: usize, names: Vec<String>) -> FeatureMatrix {
        FeatureMatrix {
            data,
            n_rows: self.n_rows,
            n_cols,
            labels: self.labels.clone(),
            column_names: names,
            row_ids: self.row_ids.clone(),
        }
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows, self.n_cols, &self.data)
    }

    /// Writes `ID,<columns...>,class`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![ID_COLUMN.to_string()];
        header.extend(self.column_names.iter().cloned());
        header.push(CLASS_COLUMN.to_string());
        w.write_record(&header)?;
        for (i, r) in self.rows().enumerate() {
            let mut rec = vec![self.row_ids[i].clone()];
            rec.extend(r.iter().map(|v| format!("{v:e}")));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// Loads a DARWIN-style CSV: drops the `ID` column (if any), converts the
/// `class` column to labels and keeps every other column as a feature in
/// file order.
pub fn load_darwin(path: &Path) -> Result<FeatureMatrix> {
    let table = read_table(path)?;
    let class_col = table.class_col.ok_or_else(|| Error::Schema {
        path: path.to_path_buf(),
        message: format!("no `{CLASS_COLUMN}` column in header"),
    })?;
    let feature_cols: Vec<usize> = (0..table.header.len())
        .filter(|&j| j != class_col && Some(j) != table.id_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: "no feature columns".into(),
        });
    }
    if table.rows.is_empty() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }

    let mut data = Vec::with_capacity(table.rows.len() * feature_cols.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    let mut ids = Vec::with_capacity(table.rows.len());
    let mut seen = HashSet::new();
    for (r, rec) in table.rows.iter().enumerate() {
        let row = r + 1;
        if rec.len() != table.header.len() {
            return Err(Error::Cell {
                row,
                column: "*".into(),
                message: format!(
                    "expected {} columns, found {}",
                    table.header.len(),
                    rec.len()
                ),
            });
        }
        for &j in &feature_cols {
            data.push(parse_cell(&rec[j], row, &table.header[j])?);
        }
        let label = Label::parse(&rec[class_col]).ok_or_else(|| Error::Cell {
            row,
            column: CLASS_COLUMN.into(),
            message: format!("unknown label {:?} (expected H or P)", &rec[class_col]),
        })?;
        labels.push(label);
        let id = match table.id_col {
            Some(c) => rec[c].trim().to_string(),
            None => r.to_string(),
        };
        if !seen.insert(id.clone()) {
            return Err(Error::Cell {
                row,
                column: ID_COLUMN.into(),
                message: format!("duplicate participant id {id:?}"),
            });
        }
        ids.push(id);
    }
    let names = feature_cols.iter().map(|&j| table.header[j].clone()).collect();
    FeatureMatrix::with_ids(data, table.rows.len(), feature_cols.len(), labels, names, ids)
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Cell {
        row,
        column: column.to_string(),
        message: format!("not a number: {raw:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Cell {
            row,
            column: column.to_string(),
            message: format!("non-finite value {raw:?}"),
        });
    }
    Ok(v)
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
    id_col: Option<usize>,
    class_col: Option<usize>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: format!("unreadable header: {e}"),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: "missing header row".into(),
        });
    }
    let rows = rdr
        .records()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Cell {
                row: i + 1,
                column: "*".into(),
                message: format!("malformed row: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let id_col = header.iter().position(|h| h == ID_COLUMN);
    let class_col = header.iter().position(|h| h == CLASS_COLUMN);
    Ok(RawTable {
        header,
        rows,
        id_col,
        class_col,
    })
}

/// Outcome of a full schema check of a DARWIN file.
#[derive(Debug, Clone, Serialize)]
pub struct SchemaReport {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_patients: usize,
    pub n_healthy: usize,
    pub issues: Vec<String>,
}

impl SchemaReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn summary(&self) -> String {
        let status = if self.is_ok() { "OK" } else { "FAILED" };
        format!(
            "{} rows, {} P, {} H, {} features: {status}",
            self.n_rows, self.n_patients, self.n_healthy, self.n_features
        )
    }
}

/// Checks every cell of a DARWIN file instead of stopping at the first
/// problem: header layout (`ID`, 450 task-major features, `class`), label
/// values and numeric parse of each feature cell.
pub fn validate_darwin(path: &Path) -> Result<SchemaReport> {
    let table = read_table(path)?;
    let mut issues = Vec::new();
    let expected_cols = N_DARWIN_FEATURES + 2;
    if table.header.len() != expected_cols {
        issues.push(format!(
            "header has {} columns, expected {expected_cols} (ID + {N_DARWIN_FEATURES} features + class)",
            table.header.len()
        ));
    }
    if table.id_col.is_none() {
        issues.push(format!("missing `{ID_COLUMN}` column"));
    }
    let Some(class_col) = table.class_col else {
        issues.push(format!("missing `{CLASS_COLUMN}` column"));
        return Ok(SchemaReport {
            n_rows: table.rows.len(),
            n_features: 0,
            n_patients: 0,
            n_healthy: 0,
            issues,
        });
    };
    let feature_cols: Vec<usize> = (0..table.header.len())
        .filter(|&j| j != class_col && Some(j) != table.id_col)
        .collect();
    let names: Vec<&str> = feature_cols.iter().map(|&j| table.header[j].as_str()).collect();
    issues.extend(task_major_issues(&names));

    let (mut n_p, mut n_h) = (0, 0);
    for (r, rec) in table.rows.iter().enumerate() {
        let row = r + 1;
        if rec.len() != table.header.len() {
            issues.push(format!(
                "row {row}: expected {} columns, found {}",
                table.header.len(),
                rec.len()
            ));
            continue;
        }
        for &j in &feature_cols {
            if let Err(e) = parse_cell(&rec[j], row, &table.header[j]) {
                issues.push(e.to_string());
            }
        }
        match Label::parse(&rec[class_col]) {
            Some(Label::Patient) => n_p += 1,
            Some(Label::Healthy) => n_h += 1,
            None => issues.push(format!(
                "row {row}, column {CLASS_COLUMN}: unknown label {:?}",
                &rec[class_col]
            )),
        }
    }
    Ok(SchemaReport {
        n_rows: table.rows.len(),
        n_features: feature_cols.len(),
        n_patients: n_p,
        n_healthy: n_h,
        issues,
    })
}

/// Feature column names must end in their task number: columns 0..18 end
/// in `1`, 18..36 in `2`, and so on.
pub fn task_major_issues(names: &[&str]) -> Vec<String> {
    let mut issues = Vec::new();
    for (j, name) in names.iter().enumerate().take(N_DARWIN_FEATURES) {
        let task = j / FEATURES_PER_TASK + 1;
        let digits: String = name
            .chars()
            .rev()
            .take_while(char::is_ascii_digit)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        if digits.parse::<usize>().ok() != Some(task) {
            issues.push(format!(
                "column {name:?} at feature position {j} should belong to task {task}"
            ));
        }
    }
    if names.len() < N_DARWIN_FEATURES {
        let missing = N_DARWIN_FEATURES - names.len();
        issues.push(format!(
            "{missing} feature columns missing (tasks {}..={N_TASKS} incomplete)",
            names.len() / FEATURES_PER_TASK + 1
        ));
    }
    issues
}

// ---------------------------------------------------------------------------
// Standardization and PCA
// ---------------------------------------------------------------------------

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(m: &FeatureMatrix) -> Result<Scaler> {
        if m.n_rows() < 2 {
            return Err(invalid("standardization needs at least 2 rows"));
        }
        let n = m.n_rows() as f64;
        let mut mean = vec![0.0; m.n_cols()];
        for r in m.rows() {
            for (acc, v) in mean.iter_mut().zip(r) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0; m.n_cols()];
        for r in m.rows() {
            for ((acc, v), mu) in var.iter_mut().zip(r).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        let std = var
            .iter()
            .zip(&mean)
            .map(|(v, mu)| {
                let s = (v / n).sqrt();
                if s <= CONSTANT_COLUMN_EPS * (1.0 + mu.abs()) {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Scaler { mean, std })
    }

    /// Centers and scales; zero-variance columns become all zeros.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.n_cols() != self.mean.len() {
            return Err(dim(format!(
                "scaler fitted on {} columns, got {}",
                self.mean.len(),
                m.n_cols()
            )));
        }
        let mut data = Vec::with_capacity(m.values().len());
        for r in m.rows() {
            data.extend(r.iter().zip(&self.mean).zip(&self.std).map(|((v, mu), s)| {
                if *s == 0.0 {
                    0.0
                } else {
                    (v - mu) / s
                }
            }));
        }
        Ok(m.with_values(data, m.n_cols(), m.column_names().to_vec()))
    }
}

pub fn standardize(m: &FeatureMatrix) -> Result<(FeatureMatrix, Scaler)> {
    let scaler = Scaler::fit(m)?;
    Ok((scaler.transform(m)?, scaler))
}

/// Principal axes of a centered data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k rows of length D, orthonormal.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (divisor N-1) along each component, nonincreasing.
    pub explained_variance: Vec<f64>,
}

pub fn fit_pca(m: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (m.n_rows(), m.n_cols());
    if k == 0 || k > d || k + 1 > n {
        return Err(invalid(format!(
            "PCA with k={k} needs 1 <= k <= min(N-1, D) = {}",
            (n.saturating_sub(1)).min(d)
        )));
    }
    let mut x = m.to_dmatrix();
    let mean: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let svd = x.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut comp: Vec<f64> = v_t.row(idx).iter().copied().collect();
        // Deterministic sign: largest-magnitude loading is positive.
        let pivot = comp
            .iter()
            .copied()
            .fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(comp);
        let s = svd.singular_values[idx];
        explained_variance.push(s * s / (n as f64 - 1.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.n_cols() != self.mean.len() {
            return Err(dim(format!(
                "PCA fitted on {} columns, got {}",
                self.mean.len(),
                m.n_cols()
            )));
        }
        let k = self.n_components();
        let mut data = Vec::with_capacity(m.n_rows() * k);
        let mut centered = vec![0.0; m.n_cols()];
        for r in m.rows() {
            for ((c, v), mu) in centered.iter_mut().zip(r).zip(&self.mean) {
                *c = v - mu;
            }
            data.extend(
                self.components
                    .iter()
                    .map(|comp| comp.iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>()),
            );
        }
        let names = (1..=k).map(|i| format!("pc{i}")).collect();
        Ok(m.with_values(data, k, names))
    }

    /// Maps projected coordinates back to the original (uncentered) space.
    pub fn inverse_transform(&self, projected: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (coef, comp) in projected.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += coef * c;
            }
        }
        out
    }
}

/// standardize -> PCA(k) -> standardize, fitted once and reusable on new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub k: usize,
    pub input_scaler: Scaler,
    pub pca: PcaModel,
    pub output_scaler: Scaler,
}

impl Preprocessor {
    pub fn fit(m: &FeatureMatrix, k: usize) -> Result<(Preprocessor, FeatureMatrix)> {
        let (scaled, input_scaler) = standardize(m)?;
        let pca = fit_pca(&scaled, k)?;
        let projected = pca.transform(&scaled)?;
        let (out, output_scaler) = standardize(&projected)?;
        Ok((
            Preprocessor {
                k,
                input_scaler,
                pca,
                output_scaler,
            },
            out,
        ))
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let scaled = self.input_scaler.transform(m)?;
        let projected = self.pca.transform(&scaled)?;
        self.output_scaler.transform(&projected)
    }
}

pub fn preprocess(m: &FeatureMatrix, k: usize) -> Result<FeatureMatrix> {
    Preprocessor::fit(m, k).map(|(_, out)| out)
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub n_splits: usize,
    pub seed: u64,
}

impl SplitConfig {
    /// 60% train, 20% validation, 20% test.
    pub fn train_val_test(n_splits: usize, seed: u64) -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            n_splits,
            seed,
        }
    }

    /// 80% train, 20% test.
    pub fn train_test(n_splits: usize, seed: u64) -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.0,
            test_frac: 0.2,
            n_splits,
            seed,
        }
    }

    /// (train, val, test) sizes for `n` samples: val and test are rounded,
    /// train takes the remainder.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0)
            || self.train_frac <= 0.0
            || self.test_frac <= 0.0
        {
            return Err(invalid(format!(
                "split fractions must be finite, train/test positive, val nonnegative: {fracs:?}"
            )));
        }
        let total: f64 = fracs.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(invalid(format!("split fractions sum to {total} > 1")));
        }
        let test = (self.test_frac * n as f64).round() as usize;
        let val = (self.val_frac * n as f64).round() as usize;
        if test + val >= n || test == 0 {
            return Err(invalid(format!(
                "fractions {fracs:?} leave no room for training or testing with n={n}"
            )));
        }
        let remainder = n - test - val;
        let train = if total < 1.0 - 1e-9 {
            ((self.train_frac * n as f64).round() as usize).clamp(1, remainder)
        } else {
            remainder
        };
        Ok((train, val, test))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Training and validation indices together, ascending.
    pub fn train_val(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.train.iter().chain(&self.val).copied().collect();
        all.sort_unstable();
        all
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub config: SplitConfig,
    pub n: usize,
    pub splits: Vec<Split>,
}

impl SplitPlan {
    pub fn has_validation(&self) -> bool {
        self.splits.iter().all(|s| !s.val.is_empty())
    }
}

/// Independent random partitions (ShuffleSplit semantics): each split is a
/// fresh permutation, so different splits may overlap.
pub fn make_splits(n: usize, config: SplitConfig) -> Result<SplitPlan> {
    if config.n_splits == 0 {
        return Err(invalid("n_splits must be at least 1"));
    }
    let (n_train, n_val, n_test) = config.sizes(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let splits = (0..config.n_splits)
        .map(|_| {
            perm.shuffle(&mut rng);
            let mut test = perm[..n_test].to_vec();
            let mut val = perm[n_test..n_test + n_val].to_vec();
            let mut train = perm[n_test + n_val..n_test + n_val + n_train].to_vec();
            test.sort_unstable();
            val.sort_unstable();
            train.sort_unstable();
            Split { train, val, test }
        })
        .collect();
    Ok(SplitPlan { config, n, splits })
}

// ---------------------------------------------------------------------------
// Task subsets
// ---------------------------------------------------------------------------

/// Task groups of the DARWIN protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskCategory {
    /// Memory and dictation.
    Memory,
    Graphic,
    Copy,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 3] = [TaskCategory::Copy, TaskCategory::Graphic, TaskCategory::Memory];

    pub fn tasks(self) -> Vec<usize> {
        const MEMORY: [usize; 5] = [1, 14, 18, 20, 23];
        const GRAPHIC: [usize; 6] = [2, 3, 4, 5, 21, 24];
        match self {
            TaskCategory::Memory => MEMORY.to_vec(),
            TaskCategory::Graphic => GRAPHIC.to_vec(),
            TaskCategory::Copy => (1..=N_TASKS)
                .filter(|t| !MEMORY.contains(t) && !GRAPHIC.contains(t))
                .collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskCategory::Memory => "memory",
            TaskCategory::Graphic => "graphic",
            TaskCategory::Copy => "copy",
        }
    }

    pub fn parse(s: &str) -> Option<TaskCategory> {
        match s.to_ascii_lowercase().as_str() {
            "memory" | "m" => Some(TaskCategory::Memory),
            "graphic" | "g" => Some(TaskCategory::Graphic),
            "copy" | "c" => Some(TaskCategory::Copy),
            _ => None,
        }
    }
}

/// Column indices belonging to the given tasks (1-based), ascending task order.
pub fn task_columns(tasks: &[usize]) -> Result<Vec<usize>> {
    let mut sorted: Vec<usize> = tasks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(invalid("empty task list"));
    }
    if let Some(&bad) = sorted.iter().find(|&&t| t == 0 || t > N_TASKS) {
        return Err(invalid(format!("task id {bad} outside 1..={N_TASKS}")));
    }
    Ok(sorted
        .iter()
        .flat_map(|t| (t - 1) * FEATURES_PER_TASK..t * FEATURES_PER_TASK)
        .collect())
}

pub fn select_task_features(m: &FeatureMatrix, tasks: &[usize]) -> Result<FeatureMatrix> {
    if m.n_cols() != N_DARWIN_FEATURES {
        return Err(dim(format!(
            "task selection needs {N_DARWIN_FEATURES} task-major columns, got {}",
            m.n_cols()
        )));
    }
    m.select_columns(&task_columns(tasks)?)
}
