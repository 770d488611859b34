//! Scenario file syntax: opaque header lines followed by TOML sections.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Raw contents of a scenario file; expressions are kept as written.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip)]
    pub opaques: BTreeMap<String, usize>,
    pub scenario: Header,
    pub chart: ChartSpec,
    pub form: FormSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<FieldList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_conditions: Option<OpenSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_set: Option<LevelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotient: Option<QuotientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub initial: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSpec>,
    #[serde(default, skip_serializing_if = "Expect::is_empty")]
    pub expect: Expect,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub title: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub name: String,
    pub coords: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
}

/// Components keyed `1..k`: `eta.1 = "d(z) - p d(q)"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldList {
    pub fields: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenSpec {
    pub nonzero: Vec<String>,
}

/// Basis names plus nonzero brackets `"e1,e2" = "-2 e1"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub names: Vec<String>,
    #[serde(flatten)]
    pub brackets: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    #[serde(default = "minus_one")]
    pub sigma: i8,
    pub fields: Vec<String>,
}

fn minus_one() -> i8 {
    -1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuSpec {
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub name: String,
    pub coords: Vec<String>,
    pub embedding: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub open: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotientSpec {
    pub name: String,
    pub coords: Vec<String>,
    pub projection: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<Vec<String>>,
    pub eta_red: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub h: String,
    /// Coordinates on which `[X_a, X_b] = 0` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrable_on: Option<Vec<String>>,
    pub darboux: DarbouxSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub gauge: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarbouxSpec {
    pub q: Vec<String>,
    pub p: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub determined: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub nodes: usize,
    pub steps: usize,
    pub t_end: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub t_end: f64,
    pub dt: f64,
    pub start: BTreeMap<String, String>,
}

/// Expected outcomes checked by the pipeline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kcontact: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kcontact_witness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ksymplectic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reeb: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariance: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub willett: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_mu: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_bracket_mu: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_identity: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_k_mu_mismatch: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_red: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hdw: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_max_error: Option<f64>,
}

impl Expect {
    pub fn is_empty(&self) -> bool {
        self == &Expect::default()
    }
}

/// Failure to read a scenario file.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadError {
    Io(String),
    Parse { line: usize, col: usize, msg: String },
    Semantic(String),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(m) => write!(f, "cannot read scenario: {m}"),
            LoadError::Parse { line, col, msg } => write!(f, "parse error at line {line}, column {col}: {msg}"),
            LoadError::Semantic(m) => write!(f, "invalid scenario: {m}"),
        }
    }
}

impl std::error::Error for LoadError {}

/// 1-based line and column of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn parse_header(line: &str) -> Option<(String, usize)> {
    let line = line.split_once('#').map_or(line, |(code, _)| code);
    let rest = line.trim().strip_prefix("opaque")?;
    let (name, arity) = rest.split_once(':')?;
    let name = name.trim();
    let mut words = arity.split_whitespace();
    let n: usize = words.next()?.parse().ok()?;
    let unit = words.next()?;
    let valid_name = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    (valid_name && (unit == "arg" || unit == "args") && words.next().is_none()).then(|| (name.to_string(), n))
}

/// Splits off `opaque NAME : N arg` lines (blanked so TOML positions stay put) and parses the rest.
pub fn parse_file(src: &str) -> Result<ScenarioFile, LoadError> {
    let mut opaques = BTreeMap::new();
    let mut body = String::with_capacity(src.len());
    for (i, line) in src.split_inclusive('\n').enumerate() {
        if line.trim_start().starts_with("opaque") && !line.contains('=') {
            let Some((name, n)) = parse_header(line) else {
                return Err(LoadError::Parse {
                    line: i + 1,
                    col: 1,
                    msg: "expected an opaque declaration `opaque NAME : N arg`".into(),
                });
            };
            if opaques.insert(name.clone(), n).is_some() {
                return Err(LoadError::Semantic(format!("opaque `{name}` is declared twice")));
            }
            body.extend(line.chars().map(|c| if c == '\n' { '\n' } else { ' ' }));
        } else {
            body.push_str(line);
        }
    }
    let mut file: ScenarioFile = toml::from_str(&body).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(&body, s.start));
        LoadError::Parse { line, col, msg: e.message().trim().to_string() }
    })?;
    file.opaques = opaques;
    Ok(file)
}

/// Canonical text: opaque header, then TOML with sections in declaration order.
pub fn write_file(file: &ScenarioFile) -> String {
    let mut out = String::new();
    for (name, n) in &file.opaques {
        out.push_str(&format!("opaque {name} : {n} {}\n", if *n == 1 { "arg" } else { "args" }));
    }
    if !file.opaques.is_empty() {
        out.push('\n');
    }
    out.push_str(&toml::to_string(file).expect("scenario data is representable in TOML"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "opaque C : 1 arg\n[scenario]\nid = \"m\"\n[chart]\nname = \"c\"\ncoords = [\"q\", \"p\", \"z\"]\n[form]\neta.1 = \"d(z) - p d(q)\"\n";

    #[test]
    fn header_lines_are_blanked() {
        let f = parse_file(MINIMAL).unwrap();
        assert_eq!(f.opaques.get("C"), Some(&1));
        assert_eq!(f.form.eta.as_ref().unwrap()["1"], "d(z) - p d(q)");
    }

    #[test]
    fn toml_errors_carry_positions() {
        let bad = MINIMAL.replace("coords = [", "coords = [[");
        match parse_file(&bad).unwrap_err() {
            LoadError::Parse { line, .. } => assert_eq!(line, 7),
            e => panic!("{e}"),
        }
        let commented = MINIMAL.replace("opaque C : 1 arg", "opaque C : 1 arg   # potential");
        assert_eq!(parse_file(&commented).unwrap().opaques.get("C"), Some(&1));
        let bad = MINIMAL.replace("opaque C : 1 arg", "opaque C 1");
        assert!(matches!(parse_file(&bad), Err(LoadError::Parse { line: 1, col: 1, .. })));
    }

    #[test]
    fn unknown_sections_are_rejected() {
        let bad = format!("{MINIMAL}[extra]\na = 1\n");
        let e = parse_file(&bad).unwrap_err();
        assert!(matches!(e, LoadError::Parse { line: 9, .. }), "{e}");
    }

    #[test]
    fn write_then_parse() {
        let f = parse_file(MINIMAL).unwrap();
        let text = write_file(&f);
        assert!(text.starts_with("opaque C : 1 arg\n"));
        assert_eq!(parse_file(&text).unwrap(), f);
    }

    #[test]
    fn positions() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }
}
