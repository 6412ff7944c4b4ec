//! Shared CLI plumbing: exit codes, output-directory policy, target
//! parsing, and the config-file merge.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qfe_core::quantum::{named_state, NamedState, StateVector};
use qfe_core::Error as CoreError;

/// Exit codes: 0 ok, 2 config error, 3 data integrity, 4 runtime failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Integrity(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integrity(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Integrity(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::KOutOfRange { .. }
            | CoreError::BadEdges(_)
            | CoreError::UnsupportedState { .. }
            | CoreError::InfeasibleSpec(_) => CliError::Config(e.to_string()),
            CoreError::SchemaMismatch(_)
            | CoreError::CorruptRecord(_)
            | CoreError::LayoutMismatch(_)
            | CoreError::MissingModel(_) => CliError::Integrity(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Output root: --out wins, then QFE_OUTPUT_ROOT, then ./runs.
pub fn resolve_out_dir(out: Option<&Path>, command: &str) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os("QFE_OUTPUT_ROOT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(command),
    }
}

/// Refuse to clobber existing artifacts unless --force was given.
pub fn guard_outputs(paths: &[PathBuf], force: bool) -> CliResult<()> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(CliError::Config(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(())
}

/// Echo the fully resolved configuration next to the run's outputs.
pub fn write_config_echo<T: serde::Serialize>(
    dir: &Path,
    command: &str,
    resolved: &T,
) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{command}.config.json"));
    let text = serde_json::to_string_pretty(resolved)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct StateFile {
    n: usize,
    /// Amplitudes as [re, im] pairs, basis-ordered.
    amplitudes: Vec<[f64; 2]>,
}

/// Read a pure state from a JSON amplitude file.
pub fn load_state_file(path: &Path) -> CliResult<StateVector> {
    let text = std::fs::read_to_string(path)?;
    let file: StateFile =
        serde_json::from_str(&text).map_err(|e| CliError::Integrity(e.to_string()))?;
    let amp: Vec<Complex64> = file
        .amplitudes
        .iter()
        .map(|[re, im]| Complex64::new(*re, *im))
        .collect();
    StateVector::new(file.n, amp).map_err(|e| CliError::Integrity(e.to_string()))
}

/// Default qubit counts for named states that only exist at one size.
fn implied_n(kind: NamedState) -> Option<usize> {
    match kind {
        NamedState::Bell => Some(2),
        NamedState::CRing => Some(5),
        NamedState::C23 => Some(6),
        _ => None,
    }
}

/// Resolve --target/--n/--target-file into a state and an id string.
pub fn resolve_target(
    target: Option<&str>,
    n: Option<usize>,
    target_file: Option<&Path>,
) -> CliResult<(StateVector, String)> {
    if let Some(path) = target_file {
        let state = load_state_file(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        return Ok((state, id));
    }
    let name = target.ok_or_else(|| {
        CliError::Config("a target is required (--target <name> or --target-file)".into())
    })?;
    let kind = NamedState::parse(name)
        .ok_or_else(|| CliError::Config(format!("unknown named state {name:?}")))?;
    let n = n.or_else(|| implied_n(kind)).ok_or_else(|| {
        CliError::Config(format!("--n is required for target {name:?}"))
    })?;
    let state = named_state(kind, n)?;
    Ok((state, format!("{kind}{n}")))
}

/// Load a TOML config file into the given partial-arguments type.
pub fn load_config_file<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("bad config file: {e}")))
}

/// CLI-over-file merge for optional fields.
pub fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

pub fn pick_opt<T>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}
