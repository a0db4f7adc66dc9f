//! Fixed-effects OLS by the within transformation.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SimulateError;

/// Relative residual norm below which a demeaned column counts as a linear
/// combination of the ones before it.
const COLLINEAR_TOL: f64 = 1e-9;

/// Named numeric columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PanelData {
    columns: BTreeMap<String, Vec<f64>>,
    rows: usize,
}

impl PanelData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<(), SimulateError> {
        let name = name.into();
        if !self.columns.is_empty() && values.len() != self.rows {
            return Err(SimulateError::Input(format!(
                "column {name} has {} rows, the panel {}",
                values.len(),
                self.rows
            )));
        }
        self.rows = values.len();
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[f64], SimulateError> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| SimulateError::Input(format!("no column named {name}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Adds `{prefix}{level}` dummies for the listed levels of a categorical
    /// column and returns their names.
    pub fn add_dummies(&mut self, source: &str, levels: &[i64], prefix: &str) -> Result<Vec<String>, SimulateError> {
        let src = self.column(source)?.to_vec();
        let mut names = Vec::with_capacity(levels.len());
        for &level in levels {
            let name = format!("{prefix}{level}");
            let values = src.iter().map(|&v| if v == level as f64 { 1.0 } else { 0.0 }).collect();
            self.insert(name.clone(), values)?;
            names.push(name);
        }
        Ok(names)
    }

    /// Adds the product column `{left}_x_{right}` and returns its name.
    pub fn add_interaction(&mut self, left: &str, right: &str) -> Result<String, SimulateError> {
        let name = format!("{left}_x_{right}");
        let values = self.column(left)?.iter().zip(self.column(right)?).map(|(x, y)| x * y).collect();
        self.insert(name.clone(), values)?;
        Ok(name)
    }

    /// Reads a CSV with a header row; every column must be numeric.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, SimulateError> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                let v = field.trim().parse::<f64>().map_err(|_| {
                    SimulateError::Input(format!("row {}, column {}: {field:?} is not a number", line + 2, headers[j]))
                })?;
                cols[j].push(v);
            }
        }
        let mut panel = Self::new();
        for (name, values) in headers.into_iter().zip(cols) {
            panel.insert(name, values)?;
        }
        Ok(panel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub outcome: String,
    /// Type dummies, interactions and any other slope regressors.
    pub regressors: Vec<String>,
    /// Column whose distinct values define the fixed-effect groups.
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub outcome: String,
    pub regressors: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Homoskedastic standard errors.
    pub std_errors: Vec<f64>,
    /// Within R².
    pub r_squared: f64,
    pub observations: usize,
    pub groups: usize,
    /// Residual degrees of freedom, `n − k − groups`.
    pub dof: usize,
    /// Group key and group mean of `y − Xβ`.
    pub group_effects: Vec<(f64, f64)>,
    /// Residuals of the demeaned system, in row order.
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.regressors.iter().position(|r| r == name).map(|i| self.coefficients[i])
    }
}

/// Demeans the outcome and regressors within groups, then solves the least
/// squares problem by QR.
pub fn fe_ols(data: &PanelData, spec: &PanelSpec) -> Result<RegressionResult, SimulateError> {
    let n = data.rows();
    let k = spec.regressors.len();
    if k == 0 {
        return Err(SimulateError::Input("no regressors".into()));
    }
    let keys = data.column(&spec.group)?;
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut group_keys = Vec::new();
    let group_of: Vec<usize> = keys
        .iter()
        .map(|&g| {
            *index.entry(g.to_bits()).or_insert_with(|| {
                group_keys.push(g);
                group_keys.len() - 1
            })
        })
        .collect();
    let groups = group_keys.len();
    if n < k + groups + 1 {
        return Err(SimulateError::Input(format!(
            "{n} observations cannot identify {k} slopes and {groups} group effects"
        )));
    }
    let demean = |v: &[f64]| -> Vec<f64> {
        let mut sum = vec![0.0; groups];
        let mut count = vec![0usize; groups];
        for (x, &g) in v.iter().zip(&group_of) {
            sum[g] += x;
            count[g] += 1;
        }
        v.iter()
            .zip(&group_of)
            .map(|(x, &g)| x - sum[g] / count[g] as f64)
            .collect()
    };

    let y_raw = data.column(&spec.outcome)?;
    let y = DVector::from_vec(demean(y_raw));
    let mut x = DMatrix::zeros(n, k);
    for (j, name) in spec.regressors.iter().enumerate() {
        x.set_column(j, &DVector::from_vec(demean(data.column(name)?)));
    }
    check_rank(&x, &spec.regressors)?;

    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| SimulateError::RankDeficient(spec.regressors.clone()))?;
    let residuals = &y - &x * &beta;
    let ssr = residuals.norm_squared();
    let sst = y.norm_squared();
    let dof = n - k - groups;
    let sigma2 = ssr / dof as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| SimulateError::RankDeficient(spec.regressors.clone()))?;
    let std_errors = (0..k)
        .map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt())
        .collect();

    let mut effect_sum = vec![0.0; groups];
    let mut effect_count = vec![0usize; groups];
    let raw: Vec<&[f64]> = spec.regressors.iter().map(|name| data.column(name)).collect::<Result<_, _>>()?;
    for i in 0..n {
        let raw_fit: f64 = raw.iter().zip(beta.iter()).map(|(c, b)| c[i] * b).sum();
        effect_sum[group_of[i]] += y_raw[i] - raw_fit;
        effect_count[group_of[i]] += 1;
    }
    let group_effects = group_keys
        .iter()
        .enumerate()
        .map(|(g, &key)| (key, effect_sum[g] / effect_count[g] as f64))
        .collect();

    Ok(RegressionResult {
        outcome: spec.outcome.clone(),
        regressors: spec.regressors.clone(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 },
        observations: n,
        groups,
        dof,
        group_effects,
        residuals: residuals.iter().copied().collect(),
    })
}

/// Gram-Schmidt pass naming every column that lies in the span of the
/// columns before it.
fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<(), SimulateError> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut collinear = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col = x.column(j).into_owned();
        let scale = col.norm();
        let mut v = col;
        for q in &basis {
            let c = q.dot(&v);
            v -= q * c;
        }
        let left = v.norm();
        if scale == 0.0 || left <= COLLINEAR_TOL * scale {
            collinear.push(name.clone());
        } else {
            basis.push(v / left);
        }
    }
    if collinear.is_empty() {
        Ok(())
    } else {
        Err(SimulateError::RankDeficient(collinear))
    }
}
