//! Run configuration: TOML file plus `--override key=value` pairs.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use iqae_core::backend::hardware_efficient_gates;
use iqae_core::models::h2_ansatz_gates;
use iqae_core::solver::DEFAULT_REG_EXACT;
use iqae_core::{Backend, Mixer, ModelSpec, PauliHamiltonian, QaoaPreparer, ReferenceState, ShotModel, SolverConfig};
use serde::{Deserialize, Serialize};

/// Largest register for which dense oracle columns (exact energy, fidelity) are emitted.
pub const ORACLE_LIMIT: usize = 12;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every mode except `bench`.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub mode: ModeSpec,
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    #[default]
    Zero,
    Plus,
    Basis {
        excited: Vec<usize>,
    },
    Product {
        bloch: Vec<[f64; 3]>,
    },
    Qaoa {
        angles: Vec<[f64; 2]>,
        #[serde(default)]
        mixer: MixerSpec,
    },
    HardwareEfficient {
        layers: usize,
        seed: u64,
    },
    H2Ansatz {
        theta: [f64; 2],
    },
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerSpec {
    #[default]
    X,
    Z,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    #[default]
    Exact,
    Product,
    Sampled {
        /// Shots per measurement setting.
        shots: i64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "yes")]
        grouping: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Backend-dependent default when absent.
    #[serde(default)]
    pub reg_threshold: Option<f64>,
    #[serde(default = "default_stop")]
    pub stop_threshold: f64,
    #[serde(default)]
    pub cap: Option<usize>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            k_max: default_k_max(),
            reg_threshold: None,
            stop_threshold: default_stop(),
            cap: None,
        }
    }
}

fn default_k_max() -> usize {
    4
}

fn default_stop() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Solve,
    /// One assembly, then a solve per value of a model parameter.
    Sweep {
        parameter: String,
        values: Vec<f64>,
    },
    CompareIte {
        taus: Vec<f64>,
    },
    Moments {
        k: Vec<usize>,
    },
    Bench {
        n: Vec<usize>,
        r: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl ModeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModeSpec::Solve => "solve",
            ModeSpec::Sweep { .. } => "sweep",
            ModeSpec::CompareIte { .. } => "compare_ite",
            ModeSpec::Moments { .. } => "moments",
            ModeSpec::Bench { .. } => "bench",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Adds wall-clock columns; output is then no longer reproducible byte for byte.
    #[serde(default)]
    pub timings: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Reads `path`, applies overrides and deserializes.
pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut table: toml::Table = toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| anyhow!("invalid configuration: {}", e.message()))
}

fn apply_override(table: &mut toml::Table, pair: &str) -> Result<()> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| anyhow!("override {pair:?} is not of the form key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    // bare words fall back to strings
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key {key:?} is malformed");
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {key:?}: {p} is not a section"))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Everything a mode needs, checked before any computation starts.
pub struct Prepared {
    pub hamiltonian: Option<PauliHamiltonian>,
    pub state: Option<ReferenceState>,
    pub backend: Backend,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<Prepared> {
        let backend = self.backend.build()?;
        let reg = self.solver.reg_threshold.unwrap_or(if backend.is_exact() {
            DEFAULT_REG_EXACT
        } else {
            iqae_core::solver::DEFAULT_REG_SAMPLED
        });
        let solver = SolverConfig {
            reg_threshold: reg,
            stop_threshold: self.solver.stop_threshold,
            k_max: self.solver.k_max,
            cap: self.solver.cap,
        };
        solver.validate().map_err(|e| anyhow!("solver: {e}"))?;
        if let ModeSpec::Bench { n, r, .. } = &self.mode {
            if n.is_empty() {
                bail!("mode.n: the list of qubit counts is empty");
            }
            if n.contains(&0) {
                bail!("mode.n: qubit counts must be positive");
            }
            if *r == 0 || *r > 16 {
                bail!("mode.r must lie in 1..=16, got {r}");
            }
            return Ok(Prepared {
                hamiltonian: None,
                state: None,
                backend: Backend::Product,
                solver,
            });
        }
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| anyhow!("model: section is required for mode {}", self.mode.name()))?;
        let h = model.build().map_err(|e| anyhow!("model: {e}"))?;
        let state = self.state.build(&h).map_err(|e| anyhow!("state: {e}"))?;
        if matches!(backend, Backend::Product) && !state.is_product() {
            bail!("backend.kind = product needs a product state (zero, plus, basis or product)");
        }
        match &self.mode {
            ModeSpec::Solve | ModeSpec::Bench { .. } => {}
            ModeSpec::Sweep { parameter, values } => {
                if values.is_empty() {
                    bail!("mode.values: the sweep grid is empty");
                }
                for v in values {
                    let variant = model_with(model, parameter, *v)?;
                    h.coefficients_of(&variant)
                        .map_err(|e| anyhow!("mode.parameter: {parameter} = {v} changes the term set ({e})"))?;
                }
            }
            ModeSpec::CompareIte { taus } => {
                if taus.is_empty() {
                    bail!("mode.taus: the imaginary-time grid is empty");
                }
                if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    bail!("mode.taus: times must be finite and nonnegative");
                }
                if h.n_qubits() > 10 {
                    bail!("mode.kind = compare_ite needs at most 10 qubits, got {}", h.n_qubits());
                }
            }
            ModeSpec::Moments { k } => {
                if k.is_empty() {
                    bail!("mode.k: the list of moment orders is empty");
                }
            }
        }
        Ok(Prepared {
            hamiltonian: Some(h),
            state: Some(state),
            backend,
            solver,
        })
    }
}

/// The model with one real parameter replaced.
pub fn model_with(model: &ModelSpec, parameter: &str, value: f64) -> Result<PauliHamiltonian> {
    let mut json = serde_json::to_value(model)?;
    let obj = json.as_object_mut().expect("models serialize to objects");
    if parameter == "name" || !obj.get(parameter).is_some_and(|v| v.is_f64()) {
        bail!("mode.parameter: {parameter:?} is not a real-valued parameter of this model");
    }
    obj.insert(parameter.to_string(), serde_json::json!(value));
    let spec: ModelSpec = serde_json::from_value(json)?;
    spec.build().map_err(|e| anyhow!("mode.values: {e}"))
}

impl BackendSpec {
    pub fn build(&self) -> Result<Backend> {
        Ok(match *self {
            BackendSpec::Exact => Backend::Exact,
            BackendSpec::Product => Backend::Product,
            BackendSpec::Sampled { shots, seed, grouping } => {
                if shots <= 0 {
                    bail!("backend.shots must be a positive integer, got {shots}");
                }
                let model = ShotModel::new(shots as u64, seed, grouping).map_err(|e| anyhow!("backend: {e}"))?;
                Backend::Sampled(model)
            }
        })
    }
}

impl StateSpec {
    pub fn build(&self, h: &PauliHamiltonian) -> iqae_core::Result<ReferenceState> {
        let n = h.n_qubits();
        match self {
            StateSpec::Zero => ReferenceState::zero(n),
            StateSpec::Plus => ReferenceState::plus(n),
            StateSpec::Basis { excited } => ReferenceState::basis_state(n, excited),
            StateSpec::Product { bloch } => {
                if bloch.len() != n {
                    return Err(iqae_core::Error::SizeMismatch {
                        expected: n,
                        found: bloch.len(),
                    });
                }
                ReferenceState::product(bloch.clone())
            }
            StateSpec::Qaoa { angles, mixer } => {
                let mixer = match mixer {
                    MixerSpec::X => Mixer::X,
                    MixerSpec::Z => Mixer::Z,
                };
                let angles: Vec<(f64, f64)> = angles.iter().map(|a| (a[0], a[1])).collect();
                QaoaPreparer::new(h.clone(), mixer).prepare(&angles)
            }
            StateSpec::HardwareEfficient { layers, seed } => {
                ReferenceState::circuit(n, hardware_efficient_gates(n, *layers, *seed))
            }
            StateSpec::H2Ansatz { theta } => {
                if n != 2 {
                    return Err(iqae_core::Error::SizeMismatch { expected: 2, found: n });
                }
                ReferenceState::circuit(2, h2_ansatz_gates(theta[0], theta[1]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let dir = tempfile::tempdir()?;
        let p = dir.path().join("c.toml");
        std::fs::write(&p, text)?;
        load(&p, &[])
    }

    const H2: &str = r#"
[model]
name = "h2"
[state]
kind = "h2_ansatz"
theta = [0.4, 1.1]
[solver]
k_max = 1
[mode]
kind = "solve"
[output]
path = "out.json"
"#;

    #[test]
    fn parses_and_validates() {
        let c = parse(H2).unwrap();
        let p = c.validate().unwrap();
        assert_eq!(p.solver.reg_threshold, DEFAULT_REG_EXACT);
        assert_eq!(c.output.format, Format::Json);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse(&H2.replace("k_max = 1", "k_max = 1\nbogus = 2")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, H2).unwrap();
        let c = load(&p, &["solver.k_max=3".into(), "output.format=csv".into()]).unwrap();
        assert_eq!(c.solver.k_max, 3);
        assert_eq!(c.output.format, Format::Csv);
        assert!(load(&p, &["solver".into()]).is_err());
    }

    #[test]
    fn negative_shots_named() {
        let c = parse(&H2.replace("[solver]", "[backend]\nkind = \"sampled\"\nshots = -5\n[solver]")).unwrap();
        let err = c.validate().err().unwrap().to_string();
        assert!(err.contains("backend.shots"), "{err}");
    }

    #[test]
    fn sweep_parameter_checked() {
        let text = r#"
[model]
name = "ising"
n = 4
h = 0.5
[mode]
kind = "sweep"
parameter = "h"
values = [0.1, 1.0]
[output]
path = "o.csv"
"#;
        assert!(parse(text).unwrap().validate().is_ok());
        let bad = parse(&text.replace("\"h\"\nvalues", "\"n\"\nvalues")).unwrap();
        assert!(bad.validate().is_err());
        let empty = parse(&text.replace("[0.1, 1.0]", "[]")).unwrap();
        assert!(empty.validate().is_err());
    }
}
