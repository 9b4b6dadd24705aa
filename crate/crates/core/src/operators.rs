//! Symmetric operators, synthetic generators, Matrix Market ingestion and
//! spectrum-bound utilities.
//!
//! A [`LinearOperator`] is immutable after construction and its `matvec` takes
//! `&self`, so one operator can be shared across threads freely.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, DenseMatrix};
use crate::error::{Result, SlqError};
use crate::lanczos::{lanczos, LanczosOptions};

/// Default enclosure factor applied to Lanczos-probed spectrum extremes.
pub const DEFAULT_SAFETY: f64 = 1.01;

/// Compressed-row storage with the full (mirrored) symmetric pattern and
/// sorted column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles a matrix from coordinate triplets (0-based). Duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.col_idx[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] += self.values[k];
            }
        }
        d
    }

    fn norm_one(&self) -> f64 {
        // symmetric storage: row sums equal column sums
        (0..self.n)
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// `A = H diag(eigenvalues) H` with the normalized Householder reflector
/// `H = I - (2/n) 1 1^T`, applied implicitly in O(n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholderSpectral {
    eigenvalues: Vec<f64>,
}

impl HouseholderSpectral {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(SlqError::InvalidArgument("eigenvalue list is empty".into()));
        }
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// In-place `x <- H x`.
    pub fn reflect(x: &mut [f64]) {
        let n = x.len() as f64;
        let s = 2.0 * x.iter().sum::<f64>() / n;
        for xi in x.iter_mut() {
            *xi -= s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LinearOperator {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
    Spectral(HouseholderSpectral),
    Diagonal(Vec<f64>),
}

impl LinearOperator {
    /// Wraps a dense matrix after checking that it is square and symmetric.
    pub fn dense(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(SlqError::InvalidArgument(format!(
                "dense operator must be square and nonempty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let tol = 1e-12 * m.max_abs().max(f64::MIN_POSITIVE);
        if m.max_abs_asymmetry() > tol {
            return Err(SlqError::InvalidArgument(
                "dense operator is not symmetric".into(),
            ));
        }
        Ok(LinearOperator::Dense(m))
    }

    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(SlqError::InvalidArgument(
                "diagonal operator is empty".into(),
            ));
        }
        Ok(LinearOperator::Diagonal(d))
    }

    pub fn dim(&self) -> usize {
        match self {
            LinearOperator::Dense(m) => m.rows(),
            LinearOperator::Sparse(s) => s.dim(),
            LinearOperator::Spectral(h) => h.eigenvalues.len(),
            LinearOperator::Diagonal(d) => d.len(),
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        match self {
            LinearOperator::Dense(m) => m.matvec_into(x, y),
            LinearOperator::Sparse(s) => s.matvec_into(x, y),
            LinearOperator::Spectral(h) => {
                y.copy_from_slice(x);
                HouseholderSpectral::reflect(y);
                for (yi, l) in y.iter_mut().zip(&h.eigenvalues) {
                    *yi *= l;
                }
                HouseholderSpectral::reflect(y);
            }
            LinearOperator::Diagonal(d) => {
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(d) {
                    *yi = di * xi;
                }
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    /// Cheap upper estimate of the operator norm (max column sum, or max |λ|
    /// when the spectrum is stored).
    pub fn norm_estimate(&self) -> f64 {
        match self {
            LinearOperator::Dense(m) => m.norm_one(),
            LinearOperator::Sparse(s) => s.norm_one(),
            LinearOperator::Spectral(h) => h.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            LinearOperator::Diagonal(d) => d.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        }
    }

    /// The exact spectrum for the forms that store it.
    pub fn known_spectrum(&self) -> Option<&[f64]> {
        match self {
            LinearOperator::Spectral(h) => Some(&h.eigenvalues),
            LinearOperator::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    /// Dense materialization by applying the operator to unit vectors.
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            LinearOperator::Dense(m) => m.clone(),
            LinearOperator::Sparse(s) => s.to_dense(),
            _ => {
                let n = self.dim();
                let mut out = DenseMatrix::zeros(n, n);
                let mut e = vec![0.0; n];
                let mut col = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    self.matvec_into(&e, &mut col);
                    for i in 0..n {
                        out[(i, j)] = col[i];
                    }
                    e[j] = 0.0;
                }
                out
            }
        }
    }

    /// `s * A` in the same storage form.
    pub fn scaled(&self, s: f64) -> LinearOperator {
        match self {
            LinearOperator::Dense(m) => LinearOperator::Dense(m.scaled(s)),
            LinearOperator::Sparse(c) => {
                let mut c = c.clone();
                for v in &mut c.values {
                    *v *= s;
                }
                LinearOperator::Sparse(c)
            }
            LinearOperator::Spectral(h) => LinearOperator::Spectral(HouseholderSpectral {
                eigenvalues: h.eigenvalues.iter().map(|l| l * s).collect(),
            }),
            LinearOperator::Diagonal(d) => {
                LinearOperator::Diagonal(d.iter().map(|l| l * s).collect())
            }
        }
    }

    pub fn form_name(&self) -> &'static str {
        match self {
            LinearOperator::Dense(_) => "dense",
            LinearOperator::Sparse(_) => "sparse",
            LinearOperator::Spectral(_) => "spectral",
            LinearOperator::Diagonal(_) => "diagonal",
        }
    }
}

/// An interval `[lambda_min, lambda_max]` enclosing the spectrum of an SPD matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub n: usize,
    /// Set when the interval comes from a Lanczos probe rather than exact knowledge.
    pub heuristic: bool,
}

impl SpectrumBounds {
    pub fn new(lambda_min: f64, lambda_max: f64, n: usize) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_min.is_finite() && lambda_max.is_finite()) {
            return Err(SlqError::InvalidArgument(format!(
                "lambda_min must be positive and finite, got {lambda_min}"
            )));
        }
        if lambda_min > lambda_max {
            return Err(SlqError::InvalidArgument(format!(
                "lambda_min = {lambda_min} exceeds lambda_max = {lambda_max}"
            )));
        }
        if n == 0 {
            return Err(SlqError::InvalidArgument("n must be positive".into()));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            kappa: lambda_max / lambda_min,
            n,
            heuristic: false,
        })
    }

    /// Exact bounds from an explicitly known spectrum.
    pub fn from_spectrum(eigenvalues: &[f64]) -> Result<Self> {
        let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if lo <= 0.0 {
            return Err(SlqError::NotSpd(format!(
                "smallest eigenvalue {lo} is not positive"
            )));
        }
        Self::new(lo, hi, eigenvalues.len())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lambda_min: self.lambda_min * s,
            lambda_max: self.lambda_max * s,
            kappa: self.kappa,
            n: self.n,
            heuristic: self.heuristic,
        }
    }
}

/// Diagonal operator with eigenvalues `scale / i^r`, `i = 1..n`.
pub fn generate_decay_spectrum(n: usize, r: f64, scale: f64) -> Result<LinearOperator> {
    if n == 0 {
        return Err(SlqError::InvalidArgument("n must be at least 1".into()));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(SlqError::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(SlqError::InvalidArgument(format!(
            "decay rate must be nonnegative, got {r}"
        )));
    }
    Ok(LinearOperator::Diagonal(decay_eigenvalues(n, r, scale)))
}

pub fn decay_eigenvalues(n: usize, r: f64, scale: f64) -> Vec<f64> {
    (1..=n).map(|i| scale / (i as f64).powf(r)).collect()
}

/// Dense `A = H Λ H^T` with `H = I - (2/n) 1 1^T`.
pub fn generate_householder_matrix(eigenvalues: &[f64]) -> Result<LinearOperator> {
    if eigenvalues.is_empty() {
        return Err(SlqError::InvalidArgument("eigenvalue list is empty".into()));
    }
    let n = eigenvalues.len();
    let c = 2.0 / n as f64;
    // (HΛH)_ij = Λ_i δ_ij - c(Λ_i + Λ_j) + c² Σλ
    let total: f64 = eigenvalues.iter().sum();
    let m = DenseMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { eigenvalues[i] } else { 0.0 };
        diag - c * (eigenvalues[i] + eigenvalues[j]) + c * c * total
    });
    Ok(LinearOperator::Dense(m))
}

/// Same matrix as [`generate_householder_matrix`] but applied implicitly.
pub fn householder_operator(eigenvalues: Vec<f64>) -> Result<LinearOperator> {
    Ok(LinearOperator::Spectral(HouseholderSpectral::new(
        eigenvalues,
    )?))
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<LinearOperator> {
    let file = File::open(path.as_ref())?;
    parse_matrix_market(BufReader::new(file))
}

/// Parses a coordinate-format real (or integer) Matrix Market stream declaring
/// a symmetric or general matrix. Lower/upper triangle entries of a symmetric
/// file are mirrored. General files must be numerically symmetric.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<LinearOperator> {
    let mut lines = reader.lines().enumerate();
    let malformed = |line: usize, message: &str| SlqError::MalformedInput {
        line,
        message: message.to_string(),
    };

    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty file"))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(malformed(
            1,
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(SlqError::UnsupportedFormat(format!(
            "format '{}' (only coordinate)",
            tokens[2]
        )));
    }
    if tokens[3] != "real" && tokens[3] != "integer" && tokens[3] != "double" {
        return Err(SlqError::UnsupportedFormat(format!(
            "field '{}' (only real)",
            tokens[3]
        )));
    }
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(SlqError::UnsupportedFormat(format!("symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut entries = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(malformed(lineno, "size line needs 'rows cols nnz'"));
                }
                let nums: std::result::Result<Vec<usize>, _> =
                    parts.iter().map(|p| p.parse()).collect();
                let nums = nums.map_err(|_| malformed(lineno, "size line is not integral"))?;
                if nums[0] != nums[1] {
                    return Err(SlqError::UnsupportedFormat(format!(
                        "non-square matrix {}x{}",
                        nums[0], nums[1]
                    )));
                }
                size = Some((nums[0], nums[1], nums[2]));
                triplets.reserve(if symmetric { 2 * nums[2] } else { nums[2] });
            }
            Some((n, _, _)) => {
                if parts.len() != 3 {
                    return Err(malformed(lineno, "entry needs 'row col value'"));
                }
                let i: usize = parts[0]
                    .parse()
                    .map_err(|_| malformed(lineno, "bad row index"))?;
                let j: usize = parts[1]
                    .parse()
                    .map_err(|_| malformed(lineno, "bad column index"))?;
                let v: f64 = parts[2]
                    .parse()
                    .map_err(|_| malformed(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(malformed(lineno, "index out of range"));
                }
                entries += 1;
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (n, _, nnz) = size.ok_or_else(|| malformed(1, "missing size line"))?;
    if entries != nnz {
        return Err(SlqError::MalformedInput {
            line: 2,
            message: format!("size line declares {nnz} entries, found {entries}"),
        });
    }
    if n == 0 {
        return Err(SlqError::InvalidArgument("matrix has dimension 0".into()));
    }
    let csr = CsrMatrix::from_triplets(n, &triplets);
    if !symmetric && !csr_is_symmetric(&csr) {
        return Err(SlqError::UnsupportedFormat(
            "general matrix is not symmetric".into(),
        ));
    }
    Ok(LinearOperator::Sparse(csr))
}

fn csr_is_symmetric(c: &CsrMatrix) -> bool {
    let lookup = |i: usize, j: usize| -> f64 {
        let (lo, hi) = (c.row_ptr[i], c.row_ptr[i + 1]);
        match c.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => c.values[lo + k],
            Err(_) => 0.0,
        }
    };
    (0..c.n).all(|i| {
        (c.row_ptr[i]..c.row_ptr[i + 1]).all(|k| {
            let j = c.col_idx[k];
            let v = c.values[k];
            (lookup(j, i) - v).abs() <= 1e-12 * v.abs().max(1.0)
        })
    })
}

/// Encloses the spectrum with a short Lanczos probe from a fixed-seed random
/// start. The result is flagged heuristic: Ritz values lie inside the true
/// spectrum, the safety factor widens the interval outward.
pub fn estimate_spectrum_bounds(
    a: &LinearOperator,
    probe_steps: usize,
    safety: f64,
) -> Result<SpectrumBounds> {
    if probe_steps < 2 {
        return Err(SlqError::InvalidArgument(
            "probe_steps must be at least 2".into(),
        ));
    }
    if !(safety >= 1.0) {
        return Err(SlqError::InvalidArgument(format!(
            "safety must be >= 1, got {safety}"
        )));
    }
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_B0B5);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let steps = probe_steps.min(n.saturating_sub(1));
    let res = lanczos(a, &v, steps, &LanczosOptions::default())?;
    let lo = *res.rule.nodes.first().expect("at least one Ritz value");
    let hi = *res.rule.nodes.last().expect("at least one Ritz value");
    if lo <= 0.0 {
        return Err(SlqError::NotSpd(format!("Ritz value {lo} is not positive")));
    }
    let mut b = SpectrumBounds::new(lo / safety, hi * safety, n)?;
    b.heuristic = true;
    Ok(b)
}

/// `s A` together with the additive log-determinant correction.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub operator: LinearOperator,
    pub bounds: SpectrumBounds,
    pub scale: f64,
    /// `n log(1/s)`, so that `logdet(A) = logdet(sA) + log_correction`.
    pub log_correction: f64,
}

pub fn rescale_to_unit(
    a: &LinearOperator,
    bounds: &SpectrumBounds,
    headroom: f64,
) -> Result<Rescaled> {
    if !(headroom > 0.0 && headroom < 1.0) {
        return Err(SlqError::InvalidArgument(format!(
            "headroom must be in (0,1), got {headroom}"
        )));
    }
    let s = headroom / bounds.lambda_max;
    let n = a.dim();
    let (operator, log_correction) = if s == 1.0 {
        (a.clone(), 0.0)
    } else {
        (a.scaled(s), n as f64 * (1.0 / s).ln())
    };
    Ok(Rescaled {
        operator,
        bounds: bounds.scaled(s),
        scale: s,
        log_correction,
    })
}

/// Textual operator description used by the command line and the demo.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Decay { n: usize, r: f64, scale: f64 },
    Householder { file: PathBuf },
    MatrixMarket { file: PathBuf },
}

impl OperatorSpec {
    /// Accepts `decay:n=<int>,r=<float>,scale=<float>`, `householder:file=<path>`
    /// and `mm:file=<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: String| SlqError::InvalidArgument(format!("matrix spec '{s}': {msg}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing ':'".into()))?;
        let mut fields = std::collections::BTreeMap::new();
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("'{kv}' is not key=value")))?;
            if fields.insert(k.trim(), v.trim()).is_some() {
                return Err(bad(format!("duplicate key '{k}'")));
            }
        }
        let take =
            |fields: &mut std::collections::BTreeMap<&str, &str>, k: &str| -> Result<String> {
                fields
                    .remove(k)
                    .map(str::to_string)
                    .ok_or_else(|| bad(format!("missing '{k}'")))
            };
        let spec = match kind.trim() {
            "decay" => {
                let n = take(&mut fields, "n")?
                    .parse()
                    .map_err(|_| bad("n is not an integer".into()))?;
                let r = take(&mut fields, "r")?
                    .parse()
                    .map_err(|_| bad("r is not a number".into()))?;
                let scale = take(&mut fields, "scale")?
                    .parse()
                    .map_err(|_| bad("scale is not a number".into()))?;
                OperatorSpec::Decay { n, r, scale }
            }
            "householder" => OperatorSpec::Householder {
                file: take(&mut fields, "file")?.into(),
            },
            "mm" => OperatorSpec::MatrixMarket {
                file: take(&mut fields, "file")?.into(),
            },
            other => return Err(bad(format!("unknown kind '{other}'"))),
        };
        if let Some(k) = fields.keys().next() {
            return Err(bad(format!("unexpected key '{k}'")));
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<LinearOperator> {
        match self {
            OperatorSpec::Decay { n, r, scale } => generate_decay_spectrum(*n, *r, *scale),
            OperatorSpec::Householder { file } => {
                let text = std::fs::read_to_string(file)?;
                let mut values = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let t = line.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    values.push(t.parse::<f64>().map_err(|_| SlqError::MalformedInput {
                        line: i + 1,
                        message: format!("'{t}' is not a real number"),
                    })?);
                }
                householder_operator(values)
            }
            OperatorSpec::MatrixMarket { file } => read_matrix_market(file),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn decay_examples() {
        let op = generate_decay_spectrum(5000, 0.5, 0.99).unwrap();
        let d = op.known_spectrum().unwrap();
        assert_eq!(d[0], 0.99);
        assert_relative_eq!(d[4999], 0.99 / 5000f64.sqrt(), max_relative = 1e-15);

        let id = generate_decay_spectrum(3, 0.0, 1.0).unwrap();
        assert_eq!(id.known_spectrum().unwrap(), &[1.0, 1.0, 1.0]);

        let h = generate_decay_spectrum(4, 1.0, 0.99).unwrap();
        for (got, want) in h
            .known_spectrum()
            .unwrap()
            .iter()
            .zip([0.99, 0.495, 0.33, 0.2475])
        {
            assert_relative_eq!(*got, want, max_relative = 1e-15);
        }
        assert!(generate_decay_spectrum(0, 1.0, 1.0).is_err());
        assert!(generate_decay_spectrum(3, 1.0, 0.0).is_err());
    }

    #[test]
    fn householder_two_by_two() {
        let LinearOperator::Dense(a) = generate_householder_matrix(&[1.0, 2.0]).unwrap() else {
            panic!("expected dense form");
        };
        // n = 2 gives H = [[0, -1], [-1, 0]], a plain swap
        let want = [[2.0, 0.0], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(a[(i, j)], want[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn householder_constant_spectrum_is_scaled_identity() {
        let LinearOperator::Dense(a) = generate_householder_matrix(&[3.0; 7]).unwrap() else {
            panic!("expected dense form");
        };
        let diff = a.sub(&DenseMatrix::identity(7).scaled(3.0));
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn householder_case_one_trace() {
        let ev: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
        let LinearOperator::Dense(a) = generate_householder_matrix(&ev).unwrap() else {
            panic!()
        };
        assert_relative_eq!(a.trace(), 25.5, max_relative = 1e-13);
        let implicit = householder_operator(ev).unwrap().to_dense();
        assert!(implicit.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn matrix_market_lower_triangle_is_mirrored() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n";
        let op = parse_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(op.matvec(&[1.0, 0.0]), vec![2.0, 1.0]);
        assert_eq!(op.matvec(&[0.0, 1.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn matrix_market_empty_entry_list_is_zero_operator() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 0\n";
        let op = parse_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(op.matvec(&[1.0, 2.0, 3.0]), vec![0.0; 3]);
    }

    #[test]
    fn matrix_market_rejects_other_fields() {
        for field in ["pattern", "complex"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} symmetric\n2 2 1\n1 1\n");
            assert!(matches!(
                parse_matrix_market(text.as_bytes()),
                Err(SlqError::UnsupportedFormat(_))
            ));
        }
        let skew = "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 1\n";
        assert!(matches!(
            parse_matrix_market(skew.as_bytes()),
            Err(SlqError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn matrix_market_reports_line_of_bad_entry() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n2 x 1\n";
        match parse_matrix_market(text.as_bytes()) {
            Err(SlqError::MalformedInput { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_market_general_must_be_symmetric() {
        let ok =
            "%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 2\n1 2 1\n2 1 1\n2 2 2\n";
        assert!(parse_matrix_market(ok.as_bytes()).is_ok());
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2\n1 2 1\n";
        assert!(matches!(
            parse_matrix_market(bad.as_bytes()),
            Err(SlqError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn spectrum_bounds_full_krylov_dimension() {
        let op = LinearOperator::diagonal((1..=10).map(f64::from).collect()).unwrap();
        let b = estimate_spectrum_bounds(&op, 10, 1.0).unwrap();
        assert_relative_eq!(b.lambda_min, 1.0, max_relative = 1e-10);
        assert_relative_eq!(b.lambda_max, 10.0, max_relative = 1e-10);
        assert!(b.heuristic);
    }

    #[test]
    fn spectrum_bounds_scaled_identity() {
        let op = LinearOperator::diagonal(vec![2.5; 30]).unwrap();
        let b = estimate_spectrum_bounds(&op, 5, 1.25).unwrap();
        assert_relative_eq!(b.lambda_min, 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.lambda_max, 3.125, max_relative = 1e-14);
    }

    #[test]
    fn spectrum_bounds_rejects_indefinite() {
        let op = LinearOperator::diagonal(vec![-1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            estimate_spectrum_bounds(&op, 3, 1.0),
            Err(SlqError::NotSpd(_))
        ));
    }

    #[test]
    fn rescale_examples() {
        let op = LinearOperator::diagonal(vec![0.5, 1.0, 2.0]).unwrap();
        let b = SpectrumBounds::new(0.5, 2.0, 3).unwrap();
        let r = rescale_to_unit(&op, &b, 0.99).unwrap();
        assert_relative_eq!(r.scale, 0.495, max_relative = 1e-15);
        assert_relative_eq!(
            r.log_correction,
            3.0 * (1.0f64 / 0.495).ln(),
            max_relative = 1e-14
        );

        let b1 = SpectrumBounds::new(0.5, 0.99, 3).unwrap();
        let r1 = rescale_to_unit(&op, &b1, 0.99).unwrap();
        assert_eq!(r1.scale, 1.0);
        assert_eq!(r1.log_correction, 0.0);
    }

    #[test]
    fn spec_strings() {
        assert_eq!(
            OperatorSpec::parse("decay:n=500,r=0.5,scale=0.99").unwrap(),
            OperatorSpec::Decay {
                n: 500,
                r: 0.5,
                scale: 0.99
            }
        );
        assert_eq!(
            OperatorSpec::parse("householder:file=ev.txt").unwrap(),
            OperatorSpec::Householder {
                file: "ev.txt".into()
            }
        );
        for bad in [
            "decay",
            "decay:n=5",
            "decay:n=x,r=1,scale=1",
            "wat:n=1",
            "decay:n=5,r=1,scale=1,q=2",
        ] {
            assert!(OperatorSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn householder_spec_reads_eigenvalue_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ev.txt");
        std::fs::write(&path, "1\n2\n\n3.5\n").unwrap();
        let op = OperatorSpec::Householder { file: path }.build().unwrap();
        assert_eq!(op.known_spectrum().unwrap(), &[1.0, 2.0, 3.5]);
    }
}
