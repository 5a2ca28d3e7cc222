//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [geometry]
//! outer = circle 0 0 1
//! inclusion.1 = circle 0 0 0.5
//! [coefficients]
//! components = 1
//! a.1 = 1
//! source.2 = x*y
//! [interfaces]
//! g.1 = cos(theta)
//! ```
//!
//! Lines starting with `#` or `;` are comments. List values (flux, source,
//! interface data, exact solutions, matrix rows) are separated by commas at
//! parenthesis depth zero, matrix rows by `;`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;
use transmission_core::analysis::oscillation::Clip;
use transmission_core::fem::BasisOrder;
use transmission_core::geometry::{DomainPartition, InterfaceCurve, OuterBoundary, Point};
use transmission_core::transmission::Pipeline;

use crate::expr::Expr;

/// Position of a value in the source text; line 0 marks a command-line override.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "command line")
        } else {
            write!(f, "line {}, column {}", self.line, self.column)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{span}: {message}")]
    Parse { span: Span, message: String },
    #[error("{span}: {key}: {message}")]
    Validation { span: Span, key: String, message: String },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { key, .. } => Some(key),
            ConfigError::Parse { .. } => None,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            ConfigError::Parse { span, .. } | ConfigError::Validation { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub span: Span,
}

/// Unvalidated sections, keys sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse { span: Span { line, column }, message: message.into() }
}

fn strip_quotes(s: &str) -> &str {
    let b = s.as_bytes();
    if b.len() >= 2 && ((b[0] == b'"' && b[b.len() - 1] == b'"') || (b[0] == b'\'' && b[b.len() - 1] == b'\'')) {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let indent = line.chars().take_while(|c| c.is_whitespace()).count();
            let body = line.trim();
            if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
                continue;
            }
            let col = indent + 1;
            if let Some(rest) = body.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(parse_err(lineno, col + body.chars().count(), "expected ']' to close the section header"));
                };
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(parse_err(lineno, col + 1, format!("invalid section name '{name}'")));
                }
                raw.sections.entry(name.to_string()).or_default();
                section = Some(name.to_string());
                continue;
            }
            let Some(eq) = body.find('=') else {
                return Err(parse_err(lineno, col, "expected 'key = value'"));
            };
            let Some(sec) = &section else {
                return Err(parse_err(lineno, col, "key outside of any [section]"));
            };
            let key = body[..eq].trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(parse_err(lineno, col, format!("invalid key '{key}'")));
            }
            let after = &body[eq + 1..];
            let lead = after.chars().take_while(|c| c.is_whitespace()).count();
            let mut value = after.trim();
            let mut vcol = col + body[..eq].chars().count() + 1 + lead;
            let unquoted = strip_quotes(value);
            if unquoted.len() != value.len() {
                vcol += 1;
            }
            value = unquoted;
            let map = raw.sections.get_mut(sec).expect("section exists");
            if map.contains_key(key) {
                return Err(ConfigError::Validation {
                    span: Span { line: lineno, column: col },
                    key: format!("{sec}.{key}"),
                    message: "duplicate key".into(),
                });
            }
            map.insert(key.to_string(), Entry { value: value.to_string(), span: Span { line: lineno, column: vcol } });
        }
        Ok(raw)
    }

    /// Applies `section.key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let cli = Span { line: 0, column: 0 };
        let Some((path, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Parse { span: cli, message: format!("override '{assignment}' is not key=value") });
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            return Err(ConfigError::Parse { span: cli, message: format!("override key '{path}' needs a section prefix") });
        };
        self.sections.entry(section.to_string()).or_default().insert(
            key.to_string(),
            Entry { value: strip_quotes(value.trim()).to_string(), span: cli },
        );
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.get(key)
    }

    /// `section.key=value` lines in sorted order, without the output directory.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (sec, map) in &self.sections {
            for (k, e) in map {
                if sec == "run" && k == "out" {
                    continue;
                }
                s.push_str(&format!("{sec}.{k}={}\n", e.value));
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Campaign {
    Solve,
    Compare,
    Convergence,
    Probe,
    MeshInfo,
}

impl Campaign {
    pub fn name(self) -> &'static str {
        match self {
            Campaign::Solve => "solve",
            Campaign::Compare => "compare",
            Campaign::Convergence => "convergence",
            Campaign::Probe => "probe",
            Campaign::MeshInfo => "mesh-info",
        }
    }

    fn from_name(s: &str) -> Option<Campaign> {
        Some(match s {
            "solve" => Campaign::Solve,
            "compare" => Campaign::Compare,
            "convergence" => Campaign::Convergence,
            "probe" => Campaign::Probe,
            "mesh-info" => Campaign::MeshInfo,
            _ => return None,
        })
    }
}

/// An expression with the key it came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Keyed {
    pub key: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorSpec {
    /// `A = a(x) I`.
    Scalar(Keyed),
    /// `A^{kl} = m_kl(x)`, identity across components.
    Matrix(Box<[[Keyed; 2]; 2]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainSpec {
    pub tensor: TensorSpec,
    /// `2n` entries, `k * n + i`.
    pub flux: Option<Vec<Keyed>>,
    pub source: Option<Vec<Keyed>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub order: BasisOrder,
    pub h: f64,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub levels: usize,
    pub pipeline: Pipeline,
    /// Ellipticity constant checked before solving.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub alpha: f64,
    /// Minimum Hölder pair distance in units of the mesh size.
    pub rho_factor: f64,
    pub pairs: usize,
    pub center: Point,
    pub r0: f64,
    pub mu: f64,
    pub levels: usize,
    pub clip: Clip,
    /// Ball centers for the coefficient modulus.
    pub modulus_centers: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub partition: DomainPartition,
    pub components: usize,
    /// Index `j - 1` holds subdomain `j`.
    pub subdomains: Vec<SubdomainSpec>,
    /// Index `i` holds inclusion `i + 1`.
    pub interfaces: Vec<Option<Vec<Keyed>>>,
    /// Exact solution per subdomain, `n` entries each.
    pub exact: Option<Vec<Vec<Keyed>>>,
    pub solver: SolverSettings,
    pub analysis: AnalysisSettings,
    pub campaign: Campaign,
    pub out: PathBuf,
    pub seed: u64,
    /// Also write the stiffness matrix as triplets.
    pub export_matrix: bool,
    /// SHA-256 of the canonical key listing.
    pub hash: String,
}

impl RunConfig {
    pub fn subdomain_count(&self) -> usize {
        self.partition.subdomain_count()
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    validate(&RawConfig::parse(text)?)
}

struct Ctx<'a> {
    raw: &'a RawConfig,
    used: BTreeMap<(String, String), ()>,
}

fn invalid(e: &Entry, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { span: e.span, key: key.to_string(), message: message.into() }
}

/// Splits on `sep` at parenthesis depth zero, with the column of each piece.
fn split_top(s: &str, sep: char) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut start = 0;
    for (i, c) in s.chars().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 {
            out.push((std::mem::take(&mut cur), start));
            start = i + 1;
        } else {
            cur.push(c);
        }
    }
    out.push((cur, start));
    out
}

impl<'a> Ctx<'a> {
    fn entry(&mut self, section: &str, key: &str) -> Option<&'a Entry> {
        let e = self.raw.get(section, key)?;
        self.used.insert((section.to_string(), key.to_string()), ());
        Some(e)
    }

    fn number<T: std::str::FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T, ConfigError> {
        match self.entry(section, key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse::<T>()
                .map_err(|_| invalid(e, &format!("{section}.{key}"), format!("'{}' is not a valid number", e.value))),
        }
    }

    fn positive(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v: f64 = self.number(section, key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            let e = self.raw.get(section, key).expect("only explicit values can be non-positive");
            return Err(invalid(e, &format!("{section}.{key}"), "must be positive"));
        }
        Ok(v)
    }
}

fn expr_at(e: &Entry, key: &str, text: &str, offset: usize) -> Result<Keyed, ConfigError> {
    let lead = text.chars().take_while(|c| c.is_whitespace()).count();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(parse_err(e.span.line, e.span.column + offset, format!("{key}: empty expression")));
    }
    Expr::parse(trimmed).map(|expr| Keyed { key: key.to_string(), expr }).map_err(|pe| {
        let column = if e.span.line == 0 { 0 } else { e.span.column + offset + lead + pe.column - 1 };
        ConfigError::Parse { span: Span { line: e.span.line, column }, message: format!("{key}: {}", pe.message) }
    })
}

fn expr_list(e: &Entry, key: &str, expected: usize) -> Result<Vec<Keyed>, ConfigError> {
    let parts = split_top(&e.value, ',');
    if parts.len() != expected {
        return Err(invalid(e, key, format!("expected {expected} expression(s), got {}", parts.len())));
    }
    parts.iter().map(|(t, off)| expr_at(e, key, t, *off)).collect()
}

fn curve_spec(e: &Entry, key: &str, allow_box: bool) -> Result<CurveOrBox, ConfigError> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    let Some((&kind, rest)) = words.split_first() else {
        return Err(invalid(e, key, "missing curve description"));
    };
    let nums = |count: usize| -> Result<Vec<f64>, ConfigError> {
        if rest.len() < count {
            return Err(invalid(e, key, format!("{kind} needs {count} numbers")));
        }
        rest[..count]
            .iter()
            .map(|w| w.parse::<f64>().map_err(|_| invalid(e, key, format!("'{w}' is not a number"))))
            .collect()
    };
    let geometry = |r: transmission_core::Result<InterfaceCurve>| r.map_err(|err| invalid(e, key, err.to_string()));
    let exact_len = |count: usize| -> Result<(), ConfigError> {
        if rest.len() != count {
            return Err(invalid(e, key, format!("{kind} takes {count} values, got {}", rest.len())));
        }
        Ok(())
    };
    match kind {
        "circle" => {
            exact_len(3)?;
            let v = nums(3)?;
            Ok(CurveOrBox::Curve(geometry(InterfaceCurve::circle(Point::new(v[0], v[1]), v[2]))?))
        }
        "ellipse" => {
            exact_len(4)?;
            let v = nums(4)?;
            Ok(CurveOrBox::Curve(geometry(InterfaceCurve::ellipse(Point::new(v[0], v[1]), v[2], v[3]))?))
        }
        "perturbed" => {
            // perturbed cx cy R alpha k:a [k:a ...]
            let v = nums(4)?;
            let mut modes = Vec::new();
            for w in &rest[4..] {
                let parsed = w.split_once(':').and_then(|(k, a)| Some((k.parse::<u32>().ok()?, a.parse::<f64>().ok()?)));
                let Some(m) = parsed else {
                    return Err(invalid(e, key, format!("mode '{w}' is not k:amplitude")));
                };
                modes.push(m);
            }
            Ok(CurveOrBox::Curve(geometry(InterfaceCurve::perturbed_circle(Point::new(v[0], v[1]), v[2], modes, v[3]))?))
        }
        "box" if allow_box => {
            exact_len(4)?;
            let v = nums(4)?;
            if !(v[2] > v[0] && v[3] > v[1]) {
                return Err(invalid(e, key, "box needs x0 < x1 and y0 < y1"));
            }
            Ok(CurveOrBox::Box(Point::new(v[0], v[1]), Point::new(v[2], v[3])))
        }
        _ => Err(invalid(e, key, format!("unknown shape '{kind}'"))),
    }
}

enum CurveOrBox {
    Curve(InterfaceCurve),
    Box(Point, Point),
}

/// `prefix.<index>` keys of a section with their 1-based index.
fn indexed<'a>(raw: &'a RawConfig, section: &str, prefix: &str) -> Vec<(usize, String, &'a Entry)> {
    let Some(map) = raw.sections.get(section) else {
        return Vec::new();
    };
    map.iter()
        .filter_map(|(k, e)| {
            let rest = k.strip_prefix(prefix)?.strip_prefix('.')?;
            let idx = rest.split('.').next()?.parse::<usize>().ok()?;
            Some((idx, k.clone(), e))
        })
        .collect()
}

pub fn validate(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
    let mut cx = Ctx { raw, used: BTreeMap::new() };
    let known_sections = ["geometry", "coefficients", "interfaces", "solver", "analysis", "exact", "run"];
    for (name, map) in &raw.sections {
        if !known_sections.contains(&name.as_str()) {
            let span = map.values().next().map_or(Span { line: 0, column: 0 }, |e| e.span);
            return Err(ConfigError::Validation { span, key: name.clone(), message: "unknown section".into() });
        }
    }

    // Geometry.
    let Some(outer_e) = cx.entry("geometry", "outer") else {
        return Err(ConfigError::Validation {
            span: Span { line: 0, column: 0 },
            key: "geometry.outer".into(),
            message: "missing outer boundary".into(),
        });
    };
    let outer = match curve_spec(outer_e, "geometry.outer", true)? {
        CurveOrBox::Curve(c) => OuterBoundary::Curve(c),
        CurveOrBox::Box(min, max) => OuterBoundary::Box { min, max },
    };
    let mut inclusion_entries = indexed(raw, "geometry", "inclusion");
    inclusion_entries.sort_by_key(|(i, _, _)| *i);
    let mut inclusions = Vec::new();
    for (pos, (idx, key, e)) in inclusion_entries.iter().enumerate() {
        cx.used.insert(("geometry".into(), key.clone()), ());
        let full = format!("geometry.{key}");
        if *idx != pos + 1 {
            return Err(invalid(e, &full, format!("inclusions must be numbered 1..; expected inclusion.{}", pos + 1)));
        }
        match curve_spec(e, &full, false)? {
            CurveOrBox::Curve(c) => inclusions.push(c),
            CurveOrBox::Box(..) => unreachable!("boxes are rejected for inclusions"),
        }
    }
    let tol_geom: Option<f64> = match cx.entry("geometry", "tolerance") {
        None => None,
        Some(e) => Some(e.value.parse().map_err(|_| invalid(e, "geometry.tolerance", "not a number"))?),
    };
    let mut partition = DomainPartition::new(outer, inclusions).map_err(|err| ConfigError::Validation {
        span: outer_e.span,
        key: "geometry".into(),
        message: err.to_string(),
    })?;
    if let Some(t) = tol_geom {
        partition = partition.with_tolerance(t);
    }
    let m = partition.subdomain_count();
    let inclusions = partition.inclusions.len();

    // Coefficients.
    let n = match cx.entry("coefficients", "components") {
        None => 1,
        Some(e) => match e.value.parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => return Err(invalid(e, "coefficients.components", "must be a positive integer")),
        },
    };
    let one = Keyed { key: "default".into(), expr: Expr::num(1.0) };
    let mut subdomains: Vec<SubdomainSpec> =
        (0..m).map(|_| SubdomainSpec { tensor: TensorSpec::Scalar(one.clone()), flux: None, source: None }).collect();
    if let Some(map) = raw.sections.get("coefficients") {
        for (key, e) in map {
            if key == "components" {
                continue;
            }
            let full = format!("coefficients.{key}");
            let mut parts = key.split('.');
            let kind = parts.next().unwrap_or_default();
            let idx = parts.next().and_then(|s| s.parse::<usize>().ok());
            if parts.next().is_some() {
                return Err(invalid(e, &full, "unexpected key"));
            }
            let Some(j) = idx else {
                return Err(invalid(e, &full, "expected '<name>.<subdomain>'"));
            };
            if j == 0 || j > m {
                return Err(invalid(e, &full, format!("subdomain {j} does not exist (there are {m})")));
            }
            cx.used.insert(("coefficients".into(), key.clone()), ());
            let spec = &mut subdomains[j - 1];
            match kind {
                "a" => {
                    if matches!(spec.tensor, TensorSpec::Matrix(_)) {
                        return Err(invalid(e, &full, "subdomain already has a matrix coefficient"));
                    }
                    spec.tensor = TensorSpec::Scalar(expr_list(e, &full, 1)?.remove(0));
                }
                "matrix" => {
                    if raw.get("coefficients", &format!("a.{j}")).is_some() {
                        return Err(invalid(e, &full, format!("both a.{j} and matrix.{j} given")));
                    }
                    let rows = split_top(&e.value, ';');
                    if rows.len() != 2 {
                        return Err(invalid(e, &full, "matrix needs two rows separated by ';'"));
                    }
                    let mut cells = Vec::new();
                    for (row, off) in &rows {
                        let cols = split_top(row, ',');
                        if cols.len() != 2 {
                            return Err(invalid(e, &full, "each matrix row needs two entries"));
                        }
                        for (c, o) in cols {
                            cells.push(expr_at(e, &full, &c, off + o)?);
                        }
                    }
                    let mut it = cells.into_iter();
                    let mut next = || it.next().expect("four cells");
                    spec.tensor = TensorSpec::Matrix(Box::new([[next(), next()], [next(), next()]]));
                }
                "flux" => spec.flux = Some(expr_list(e, &full, 2 * n)?),
                "source" => spec.source = Some(expr_list(e, &full, n)?),
                _ => return Err(invalid(e, &full, format!("unknown coefficient '{kind}'"))),
            }
        }
    }

    // Interface data.
    let mut interfaces: Vec<Option<Vec<Keyed>>> = vec![None; inclusions];
    if let Some(map) = raw.sections.get("interfaces") {
        for (key, e) in map {
            let full = format!("interfaces.{key}");
            let idx = key.strip_prefix("g.").and_then(|s| s.parse::<usize>().ok());
            let Some(i) = idx else {
                return Err(invalid(e, &full, "expected 'g.<interface>'"));
            };
            if i == 0 || i > inclusions {
                return Err(invalid(e, &full, format!("interface {i} does not exist (there are {inclusions})")));
            }
            cx.used.insert(("interfaces".into(), key.clone()), ());
            interfaces[i - 1] = Some(expr_list(e, &full, n)?);
        }
    }

    // Exact solution.
    let exact = match raw.sections.get("exact") {
        None => None,
        Some(map) => {
            let mut per: Vec<Option<Vec<Keyed>>> = vec![None; m];
            for (key, e) in map {
                let full = format!("exact.{key}");
                let idx = key.strip_prefix("u.").and_then(|s| s.parse::<usize>().ok());
                let Some(j) = idx else {
                    return Err(invalid(e, &full, "expected 'u.<subdomain>'"));
                };
                if j == 0 || j > m {
                    return Err(invalid(e, &full, format!("subdomain {j} does not exist (there are {m})")));
                }
                cx.used.insert(("exact".into(), key.clone()), ());
                per[j - 1] = Some(expr_list(e, &full, n)?);
            }
            let mut all = Vec::new();
            for (j, u) in per.into_iter().enumerate() {
                match u {
                    Some(u) => all.push(u),
                    None => {
                        return Err(ConfigError::Validation {
                            span: map.values().next().map_or(Span { line: 0, column: 0 }, |e| e.span),
                            key: format!("exact.u.{}", j + 1),
                            message: "exact solution must cover every subdomain".into(),
                        })
                    }
                }
            }
            Some(all)
        }
    };

    // Solver.
    let order = match cx.entry("solver", "order") {
        None => BasisOrder::P1,
        Some(e) => match e.value.as_str() {
            "1" => BasisOrder::P1,
            "2" => BasisOrder::P2,
            _ => return Err(invalid(e, "solver.order", "basis order must be 1 or 2")),
        },
    };
    let h = cx.positive("solver", "h", 0.1)?;
    let tol = cx.positive("solver", "tol", 1e-10)?;
    let max_iter = match cx.entry("solver", "max_iter") {
        None => None,
        Some(e) => Some(e.value.parse::<usize>().map_err(|_| invalid(e, "solver.max_iter", "not an integer"))?),
    };
    let levels: usize = cx.number("solver", "levels", 4)?;
    if levels == 0 {
        return Err(invalid(raw.get("solver", "levels").expect("explicit"), "solver.levels", "must be at least 1"));
    }
    let pipeline = match cx.entry("solver", "pipeline") {
        None => Pipeline::Reduction,
        Some(e) => match e.value.as_str() {
            "reduction" => Pipeline::Reduction,
            "direct" => Pipeline::Direct,
            _ => return Err(invalid(e, "solver.pipeline", "pipeline must be 'reduction' or 'direct'")),
        },
    };
    let kappa = match cx.entry("solver", "kappa") {
        None => None,
        Some(e) => match e.value.parse::<f64>() {
            Ok(k) if k > 0.0 && k <= 1.0 => Some(k),
            _ => return Err(invalid(e, "solver.kappa", "must be in (0, 1]")),
        },
    };

    // Analysis.
    let alpha = cx.positive("analysis", "alpha", 0.5)?;
    let rho_factor = cx.positive("analysis", "rho_factor", 4.0)?;
    let pairs: usize = cx.number("analysis", "pairs", 10_000)?;
    let center = match cx.entry("analysis", "center") {
        None => Point::new(0.0, 0.0),
        Some(e) => parse_point(&e.value).ok_or_else(|| invalid(e, "analysis.center", "expected 'x, y'"))?,
    };
    let r0 = cx.positive("analysis", "r0", 0.2)?;
    let mu = cx.positive("analysis", "mu", 0.5)?;
    if mu >= 1.0 {
        return Err(invalid(raw.get("analysis", "mu").expect("explicit"), "analysis.mu", "must be in (0, 1)"));
    }
    let probe_levels: usize = cx.number("analysis", "levels", 5)?;
    let clip = match cx.entry("analysis", "clip") {
        None => Clip::Domain,
        Some(e) if e.value == "domain" => Clip::Domain,
        Some(e) => match e.value.parse::<usize>() {
            Ok(j) if j >= 1 && j <= m => Clip::Subdomain(j),
            _ => return Err(invalid(e, "analysis.clip", format!("expected 'domain' or a subdomain in 1..={m}"))),
        },
    };
    let modulus_centers: usize = cx.number("analysis", "modulus_centers", 64)?;

    // Run.
    let campaign = match cx.entry("run", "campaign") {
        None => Campaign::Solve,
        Some(e) => Campaign::from_name(&e.value).ok_or_else(|| invalid(e, "run.campaign", format!("unknown campaign '{}'", e.value)))?,
    };
    let out = cx.entry("run", "out").map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));
    let seed: u64 = cx.number("run", "seed", 2024)?;
    let export_matrix = match cx.entry("run", "export_matrix") {
        None => false,
        Some(e) => match e.value.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(invalid(e, "run.export_matrix", "expected true or false")),
        },
    };

    for (sec, map) in &raw.sections {
        for (key, e) in map {
            if !cx.used.contains_key(&(sec.clone(), key.clone())) {
                return Err(invalid(e, &format!("{sec}.{key}"), "unknown key"));
            }
        }
    }

    let hash = hex(&Sha256::digest(raw.canonical().as_bytes()));
    Ok(RunConfig {
        partition,
        components: n,
        subdomains,
        interfaces,
        exact,
        solver: SolverSettings { order, h, tol, max_iter, levels, pipeline, kappa },
        analysis: AnalysisSettings { alpha, rho_factor, pairs, center, r0, mu, levels: probe_levels, clip, modulus_centers },
        campaign,
        out,
        seed,
        export_matrix,
        hash,
    })
}

pub fn parse_point(s: &str) -> Option<Point> {
    let (a, b) = s.split_once(',')?;
    Some(Point::new(a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
