//! Command implementations behind the `hammerstein` binary. Each command
//! returns an [`Output`]: a JSON document, optional solution tables and the
//! process exit code.

use std::fmt;

use serde_json::{json, Map, Value};

use hammerstein::kernels::kernel_constant;
use hammerstein::problem::{bundled_example, ProblemFile};
use hammerstein::report;
use hammerstein::solver::{residual_certificate, solve_multistart, Annulus, SolverOptions};
use hammerstein::spectral::{check_c7_prime, spectral_radius, DEFAULT_TOL};
use hammerstein::verify::{certify_growth, compute_constants, ExistenceWindow};
use hammerstein::{check_existence, check_nonexistence, search_existence_window, Error, SystemSpec, Verdict};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NOINPUT: i32 = 66;
pub const EXIT_SOFTWARE: i32 = 70;

/// Interval on which the kernel positivity condition is checked.
pub const POSITIVITY_WINDOW: (f64, f64) = (0.25, 0.75);

/// Annulus used by `solve` when the file has no existence block. A block
/// without `r` takes it from the window search when that succeeds.
pub const DEFAULT_INNER_RADIUS: f64 = 1e-3;
pub const DEFAULT_OUTER_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Data(String),
    NoInput(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::NoInput(_) => EXIT_NOINPUT,
            CliError::Runtime(_) => EXIT_SOFTWARE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::NoInput(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Convergence { .. } | Error::Divergence { .. } | Error::DegenerateKernel { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Existence,
    Nonexistence,
}

/// Command-line overrides of the file's `[numerics]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, file: &mut ProblemFile) {
        if let Some(r) = self.resolution {
            file.numerics.resolution = r;
        }
        if let Some(t) = self.tol {
            file.numerics.tol = t;
        }
        if let Some(s) = self.seed {
            file.numerics.seed = s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub document: Value,
    pub tables: Vec<Table>,
    pub exit_code: i32,
}

impl Output {
    fn new(document: Value, exit_code: i32) -> Self {
        Output {
            document,
            tables: Vec::new(),
            exit_code,
        }
    }

    /// The document as pretty JSON with 12 significant digits.
    pub fn render(&self) -> CliResult<String> {
        Ok(report::render(&self.document)?)
    }
}

pub fn load(text: &str, overrides: &Overrides) -> CliResult<ProblemFile> {
    let mut file = ProblemFile::parse(text)?;
    overrides.apply(&mut file);
    Ok(file)
}

fn to_value<T: serde::Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Runtime(e.to_string()))
}

fn numerics_value(file: &ProblemFile) -> CliResult<Value> {
    to_value(&file.numerics)
}

/// Kernel constants, γ norms, characteristic values and the positivity
/// check for every component. Spectral failures are reported in place.
pub fn cmd_constants(file: &ProblemFile) -> CliResult<Output> {
    let spec = file.to_spec()?;
    let resolution = file.numerics.resolution;
    let radius = file.existence.as_ref().map(|e| e.big_r);
    let constants = compute_constants(&spec, resolution, radius, file.numerics.seed)?;
    let mut components = Vec::with_capacity(spec.n());
    for (c, cc) in spec.components().iter().zip(constants) {
        let mut entry = to_value(&cc)?;
        let obj = entry.as_object_mut().expect("struct serializes to an object");
        match spectral_radius(&c.kernel, resolution, DEFAULT_TOL) {
            Ok(pair) => {
                obj.insert("characteristic_value".into(), json!(pair.characteristic_value));
            }
            Err(e) => {
                obj.insert("spectral_error".into(), json!(e.to_string()));
            }
        }
        let (a, b) = POSITIVITY_WINDOW;
        let positivity = match check_c7_prime(&c.kernel, a, b, resolution) {
            Ok(p) => to_value(&p)?,
            Err(e) => json!({ "error": e.to_string() }),
        };
        obj.insert("positivity".into(), positivity);
        components.push(entry);
    }
    let doc = json!({
        "command": "constants",
        "numerics": numerics_value(file)?,
        "radius": radius,
        "components": components,
    });
    Ok(Output::new(doc, 0))
}

/// Characteristic value and eigenfunction of the level-0 kernel of each
/// component. Exits with the runtime code if any kernel fails.
pub fn cmd_spectral(file: &ProblemFile, tol: Option<f64>) -> CliResult<Output> {
    let spec = file.to_spec()?;
    let resolution = file.numerics.resolution;
    let tol = tol.unwrap_or(DEFAULT_TOL);
    let mut failed = false;
    let mut components = Vec::with_capacity(spec.n());
    for (k, c) in spec.components().iter().enumerate() {
        let mut entry = Map::new();
        entry.insert("component".into(), json!(k + 1));
        entry.insert("kernel".into(), json!(c.kernel.name()));
        match spectral_radius(&c.kernel, resolution, tol) {
            Ok(pair) => {
                entry.insert("eigen".into(), to_value(&pair)?);
            }
            Err(e) => {
                failed = true;
                entry.insert("error".into(), json!(e.to_string()));
            }
        }
        components.push(Value::Object(entry));
    }
    let doc = json!({
        "command": "spectral",
        "resolution": resolution,
        "tol": tol,
        "components": components,
    });
    Ok(Output::new(doc, if failed { EXIT_SOFTWARE } else { 0 }))
}

fn existence_document(file: &ProblemFile, spec: &SystemSpec) -> CliResult<(Value, Verdict)> {
    let block = file
        .existence
        .as_ref()
        .ok_or_else(|| CliError::Usage("mode existence needs an [existence] block".into()))?;
    let resolution = file.numerics.resolution;
    let mut window: Option<ExistenceWindow> = None;
    let (r, delta) = match (block.r, block.delta) {
        (Some(r), Some(d)) => (r, d),
        (Some(r), None) => (r, certify_growth(spec, block.i0, r)?.delta),
        (None, d) => {
            let w = search_existence_window(spec, block.i0, block.big_r, resolution)?;
            let pair = (w.r, d.unwrap_or(w.delta));
            window = Some(w);
            pair
        }
    };
    let window_value = window.as_ref().map(to_value).transpose()?;
    if delta <= 0.0 {
        // the lower growth hypothesis cannot be met with any positive δ
        let doc = json!({
            "command": "check",
            "mode": "existence",
            "verdict": Verdict::Inconclusive,
            "window": window_value,
            "reason": format!("no positive growth constant δ certified at r = {r}"),
        });
        return Ok((doc, Verdict::Inconclusive));
    }
    let hyp = file.existence_hypotheses(r, delta)?;
    let rep = check_existence(spec, &hyp)?;
    let mut doc = to_value(&rep)?;
    let obj = doc.as_object_mut().expect("report serializes to an object");
    obj.insert("command".into(), json!("check"));
    obj.insert("mode".into(), json!("existence"));
    obj.insert("hypotheses".into(), to_value(&hyp)?);
    if let Some(w) = window_value {
        obj.insert("window".into(), w);
    }
    Ok((doc, rep.verdict))
}

fn nonexistence_document(file: &ProblemFile, spec: &SystemSpec) -> CliResult<(Value, Verdict)> {
    if file.nonexistence.is_none() {
        return Err(CliError::Usage("mode nonexistence needs a [nonexistence] block".into()));
    }
    let hyp = file.nonexistence_hypotheses()?;
    let rep = check_nonexistence(spec, &hyp)?;
    let mut doc = to_value(&rep)?;
    let obj = doc.as_object_mut().expect("report serializes to an object");
    obj.insert("command".into(), json!("check"));
    obj.insert("mode".into(), json!("nonexistence"));
    obj.insert("hypotheses".into(), to_value(&hyp)?);
    Ok((doc, rep.verdict))
}

/// Run the existence or non-existence check; the exit code is the verdict's.
pub fn cmd_check(file: &ProblemFile, mode: Mode) -> CliResult<Output> {
    let spec = file.to_spec()?;
    let (doc, verdict) = match mode {
        Mode::Existence => existence_document(file, &spec)?,
        Mode::Nonexistence => nonexistence_document(file, &spec)?,
    };
    Ok(Output::new(doc, verdict.exit_code()))
}

/// Multistart Picard iteration. Failed starts are listed with their error;
/// every distinct fixed point gets a residual certificate and a table.
pub fn cmd_solve(file: &ProblemFile) -> CliResult<Output> {
    let spec = file.to_spec()?;
    let n = &file.numerics;
    let annulus = match &file.existence {
        Some(e) => {
            let r = match e.r {
                Some(r) => r,
                None => {
                    let w = search_existence_window(&spec, e.i0, e.big_r, n.resolution)?;
                    if w.feasible {
                        w.r
                    } else {
                        DEFAULT_INNER_RADIUS.min(e.big_r)
                    }
                }
            };
            Annulus { r, big_r: e.big_r, i0: e.i0 }
        }
        None => Annulus {
            r: DEFAULT_INNER_RADIUS,
            big_r: DEFAULT_OUTER_RADIUS,
            i0: 1,
        },
    };
    let options = SolverOptions {
        resolution: n.resolution,
        tol: n.tol,
        max_iter: n.max_iter,
        damping: n.damping,
    };
    let run = solve_multistart(&spec, annulus, n.starts, n.seed, &options)?;
    let mut solutions = Vec::with_capacity(run.solutions.len());
    let mut tables = Vec::with_capacity(run.solutions.len());
    for (k, s) in run.solutions.iter().enumerate() {
        let mut entry = to_value(s)?;
        let obj = entry.as_object_mut().expect("struct serializes to an object");
        obj.insert("index".into(), json!(k));
        match residual_certificate(&spec, &s.solution) {
            Ok(c) => obj.insert("residual_certificate".into(), json!(c)),
            Err(e) => obj.insert("residual_certificate_error".into(), json!(e.to_string())),
        };
        obj.insert("coherence".into(), to_value(&s.solution.derivative_coherence())?);
        let text = s.solution.to_table();
        obj.insert("table".into(), json!(text));
        solutions.push(entry);
        tables.push(Table {
            name: format!("solution-{k}"),
            text,
        });
    }
    let doc = json!({
        "command": "solve",
        "numerics": numerics_value(file)?,
        "annulus": to_value(&run.annulus)?,
        "starts": to_value(&run.starts)?,
        "solutions": solutions,
    });
    Ok(Output {
        document: doc,
        tables,
        exit_code: 0,
    })
}

/// Constants plus the check each bundled example was built for: existence
/// for example 1, non-existence for example 2.
pub fn cmd_reproduce(example: u32, overrides: &Overrides) -> CliResult<Output> {
    let text = bundled_example(example).map_err(|e| CliError::Usage(e.to_string()))?;
    let file = load(text, overrides)?;
    let mode = if example == 1 { Mode::Existence } else { Mode::Nonexistence };
    let constants = cmd_constants(&file)?;
    let check = cmd_check(&file, mode)?;
    let k21 = if example == 1 {
        let spec = file.to_spec()?;
        Some(kernel_constant(&spec.component(2)?.kernel, 1, file.numerics.resolution)?)
    } else {
        None
    };
    let doc = json!({
        "command": "reproduce",
        "example": example,
        "problem": text,
        "computed_k21": k21,
        "constants": constants.document,
        "check": check.document,
    });
    Ok(Output::new(doc, check.exit_code))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hammerstein::problem::{EXAMPLE1, EXAMPLE2, LINEAR};

    fn file(text: &str) -> ProblemFile {
        load(text, &Overrides::default()).unwrap()
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::ProblemFile("x".into())).exit_code(), EXIT_DATA);
        assert_eq!(CliError::from(Error::Argument("x".into())).exit_code(), EXIT_DATA);
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), EXIT_SOFTWARE);
        assert_eq!(
            CliError::from(Error::Divergence { iteration: 3, norm: 1e13 }).exit_code(),
            EXIT_SOFTWARE
        );
        assert_eq!(CliError::Usage(String::new()).exit_code(), EXIT_USAGE);
    }

    #[test]
    fn missing_block_is_usage() {
        let err = cmd_check(&file(LINEAR), Mode::Nonexistence).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        let err = cmd_check(&file(EXAMPLE2), Mode::Existence).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn overrides_apply() {
        let f = load(
            LINEAR,
            &Overrides {
                resolution: Some(32),
                tol: Some(1e-8),
                seed: Some(7),
            },
        )
        .unwrap();
        assert_eq!(f.numerics.resolution, 32);
        assert_eq!(f.numerics.tol, 1e-8);
        assert_eq!(f.numerics.seed, 7);
    }

    #[test]
    fn example1_constants() {
        let out = cmd_constants(&file(EXAMPLE1)).unwrap();
        assert_eq!(out.exit_code, 0);
        let c = &out.document["components"];
        let k = |i: usize, l: usize| c[i]["kernel_constants"][l]["computed"].as_f64().unwrap();
        assert!((k(0, 0) - 0.125).abs() < 1e-9);
        assert!((k(1, 0) - 5.0 / 384.0).abs() < 1e-9);
        assert!(k(1, 1) <= 5.0 / 24.0 + 1e-6);
        let mu2 = c[1]["characteristic_value"].as_f64().unwrap();
        assert!((mu2 / std::f64::consts::PI.powi(4) - 1.0).abs() < 1e-6);
        assert_eq!(c[0]["positivity"]["holds"], json!(true));
    }

    #[test]
    fn linear_solve_table() {
        let out = cmd_solve(&file(LINEAR)).unwrap();
        assert_eq!(out.tables.len(), 1);
        let sol = &out.document["solutions"][0];
        assert!((sol["norm"].as_f64().unwrap() - 0.5).abs() < 1e-10);
        let line = out.tables[0].text.lines().nth(1).unwrap();
        assert_eq!(line.split_whitespace().count(), 3);
    }
}
