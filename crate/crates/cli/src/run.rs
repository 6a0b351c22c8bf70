//! Mode execution.

use std::time::Instant;

use iqae_core::models::random_pauli;
use iqae_core::oracles::{exact_ground, ite_energies};
use iqae_core::overlap::OverlapSet;
use iqae_core::solver::{fidelity, iterate_detailed, prefix_scan, reconstruct_state, solve_overlaps, sweep};
use iqae_core::{
    plan, Backend, CVector, Complex64, GroundStateSolution, MomentBasis, PauliHamiltonian, ReferenceState,
    SolverConfig,
};
use serde_json::{json, Map, Value};

use crate::config::{model_with, ModeSpec, Prepared, RunConfig, ORACLE_LIMIT};
use crate::output::{Cell, Report, Table};

#[derive(Debug)]
pub enum Failure {
    /// Bad input; exit code 1.
    Config(anyhow::Error),
    /// The computation broke down; exit code 2.
    Numerical(anyhow::Error),
}

impl From<iqae_core::Error> for Failure {
    fn from(e: iqae_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else {
            Failure::Config(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<Report, Failure>;

pub fn execute(config: &RunConfig, prepared: &Prepared) -> Outcome {
    let timings = config.output.timings;
    match &config.mode {
        ModeSpec::Bench { n, r, seed } => bench(n, *r, *seed, &prepared.solver, timings),
        mode => {
            let h = prepared.hamiltonian.as_ref().expect("validated");
            let state = prepared.state.as_ref().expect("validated");
            let ctx = Context {
                h,
                state,
                backend: &prepared.backend,
                solver: &prepared.solver,
            };
            match mode {
                ModeSpec::Solve => ctx.solve(),
                ModeSpec::Sweep { parameter, values } => {
                    ctx.sweep(config.model.as_ref().expect("validated"), parameter, values)
                }
                ModeSpec::CompareIte { taus } => ctx.compare_ite(taus),
                ModeSpec::Moments { k } => ctx.moments(k),
                ModeSpec::Bench { .. } => unreachable!(),
            }
        }
    }
}

struct Context<'a> {
    h: &'a PauliHamiltonian,
    state: &'a ReferenceState,
    backend: &'a Backend,
    solver: &'a SolverConfig,
}

impl Context<'_> {
    fn small(&self) -> bool {
        self.h.n_qubits() <= ORACLE_LIMIT
    }

    fn fidelity_to(&self, target: &CVector, set: &OverlapSet, sol: &GroundStateSolution) -> Result<f64, Failure> {
        let psi = reconstruct_state(set.basis(), self.state, &sol.alpha)?;
        let t: Vec<Complex64> = target.iter().copied().collect();
        Ok(fidelity(&t, &psi))
    }

    /// Strings, settings and shots of an overlap set.
    fn measurement_summary(&self, set: &OverlapSet, summary: &mut Map<String, Value>) -> Result<(), Failure> {
        let strings = set.cache_len();
        summary.insert("unique_strings".into(), json!(strings));
        if let Backend::Sampled(model) = self.backend {
            let settings = if model.grouping {
                plan(&set.cached_strings())?.settings_count()
            } else {
                strings
            };
            summary.insert("settings".into(), json!(settings));
            summary.insert("shots_per_setting".into(), json!(model.shots_per_setting));
            summary.insert("total_shots".into(), json!(settings as u64 * model.shots_per_setting));
        }
        Ok(())
    }

    fn solve(&self) -> Outcome {
        let run = iterate_detailed(self.h, self.state, self.backend, self.solver)?;
        let mut table = Table::new(&["k", "energy", "delta", "basis_size", "retained_rank", "degenerate"]);
        for t in &run.solution.trace {
            table.push(vec![
                t.k.into(),
                t.energy.into(),
                t.delta.into(),
                t.basis_size.into(),
                t.retained_rank.into(),
                t.degenerate.into(),
            ]);
        }
        let sol = &run.solution;
        let mut summary = Map::new();
        summary.insert("energy".into(), json!(sol.energy));
        summary.insert("k".into(), json!(sol.trace.last().map_or(0, |t| t.k)));
        summary.insert("basis_size".into(), json!(run.basis.len()));
        summary.insert("retained_rank".into(), json!(sol.retained_rank));
        summary.insert("closure_order".into(), json!(run.basis.closure_order()));
        self.measurement_summary(&run.overlaps, &mut summary)?;
        if self.small() {
            let (lambda, phi) = exact_ground(self.h)?;
            summary.insert("exact_energy".into(), json!(lambda));
            summary.insert("fidelity".into(), json!(self.fidelity_to(&phi, &run.overlaps, sol)?));
        }
        summary.insert(
            "alpha".into(),
            json!(sol.alpha.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()),
        );
        Ok(Report {
            mode: "solve",
            headline: format!(
                "solve: energy {:.10} at K={} (basis {}, rank {})",
                sol.energy,
                summary["k"],
                run.basis.len(),
                sol.retained_rank
            ),
            table,
            summary,
        })
    }

    fn sweep(&self, model: &iqae_core::ModelSpec, parameter: &str, values: &[f64]) -> Outcome {
        let basis = MomentBasis::build(self.h.strings(), self.solver.k_max, self.solver.cap)?;
        let set = OverlapSet::assemble(&basis, self.h, self.state, self.backend)?;
        let mut variants = Vec::with_capacity(values.len());
        let mut grid = Vec::with_capacity(values.len());
        for &v in values {
            let hv = model_with(model, parameter, v)?;
            grid.push(self.h.coefficients_of(&hv)?);
            variants.push(hv);
        }
        let sols = sweep(&set, &grid, self.solver)?;
        let mut columns = vec![parameter, "energy"];
        if self.small() {
            columns.extend(["exact_energy", "fidelity"]);
        }
        columns.push("retained_rank");
        let mut table = Table::new(&columns);
        for ((v, hv), sol) in values.iter().zip(&variants).zip(&sols) {
            let mut row: Vec<Cell> = vec![(*v).into(), sol.energy.into()];
            if self.small() {
                let (lambda, phi) = exact_ground(hv)?;
                row.push(lambda.into());
                row.push(self.fidelity_to(&phi, &set, sol)?.into());
            }
            row.push(sol.retained_rank.into());
            table.push(row);
        }
        let mut summary = Map::new();
        summary.insert("basis_size".into(), json!(basis.len()));
        summary.insert("backend_calls".into(), json!(set.provenance().backend_calls));
        self.measurement_summary(&set, &mut summary)?;
        Ok(Report {
            mode: "sweep",
            headline: format!(
                "sweep: {} points over {parameter}, basis {}, {} unique strings",
                values.len(),
                basis.len(),
                set.cache_len()
            ),
            table,
            summary,
        })
    }

    fn compare_ite(&self, taus: &[f64]) -> Outcome {
        let psi: CVector = CVector::from_vec(self.state.amplitudes()?.to_vec());
        let energies = ite_energies(self.h, &psi, taus)?;
        let (lambda, _) = exact_ground(self.h)?;
        let run = iterate_detailed(self.h, self.state, self.backend, self.solver)?;
        let mut table = Table::new(&["tau", "ite_energy", "ite_gap"]);
        for (t, e) in taus.iter().zip(&energies) {
            table.push(vec![(*t).into(), (*e).into(), (e - lambda).into()]);
        }
        let mut summary = Map::new();
        summary.insert("exact_energy".into(), json!(lambda));
        summary.insert("iqae_energy".into(), json!(run.solution.energy));
        summary.insert("iqae_gap".into(), json!(run.solution.energy - lambda));
        summary.insert("iqae_trace".into(), serde_json::to_value(&run.solution.trace).expect("plain data"));
        let ite_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Report {
            mode: "compare_ite",
            headline: format!(
                "compare_ite: ITE gap {:.3e}, IQAE gap {:.3e}",
                ite_min - lambda,
                run.solution.energy - lambda
            ),
            table,
            summary,
        })
    }

    fn moments(&self, ks: &[usize]) -> Outcome {
        let k_top = *ks.iter().max().expect("validated");
        let lambda = if self.small() { Some(exact_ground(self.h)?.0) } else { None };
        let sampled = matches!(self.backend, Backend::Sampled(_));
        let mut columns = vec!["k", "basis_size", "unique_strings"];
        if sampled {
            columns.push("settings");
        }
        columns.extend(["energy", "retained_rank"]);
        if lambda.is_some() {
            columns.push("error");
        }
        let mut table = Table::new(&columns);
        let mut basis = MomentBasis::build(self.h.strings(), 0, self.solver.cap)?;
        let mut set = OverlapSet::assemble(&basis, self.h, self.state, self.backend)?;
        for k in 0..=k_top {
            if k > 0 && basis.extend_level(self.solver.cap) > 0 {
                set.extend(&basis, self.state, self.backend)?;
            }
            if !ks.contains(&k) {
                continue;
            }
            let sol = solve_overlaps(&set, self.solver)?;
            let mut row: Vec<Cell> = vec![k.into(), basis.len().into(), set.cache_len().into()];
            if let Backend::Sampled(model) = self.backend {
                let settings = if model.grouping {
                    plan(&set.cached_strings())?.settings_count()
                } else {
                    set.cache_len()
                };
                row.push(settings.into());
            }
            row.push(sol.energy.into());
            row.push(sol.retained_rank.into());
            if let Some(l) = lambda {
                row.push((sol.energy - l).into());
            }
            table.push(row);
        }
        let mut summary = Map::new();
        summary.insert("closure_order".into(), json!(basis.closure_order()));
        summary.insert("exact_energy".into(), json!(lambda));
        Ok(Report {
            mode: "moments",
            headline: format!("moments: {} orders up to K={k_top}, final basis {}", table.rows.len(), basis.len()),
            table,
            summary,
        })
    }
}

fn bench(ns: &[usize], r: usize, seed: u64, solver: &SolverConfig, timings: bool) -> Outcome {
    let mut columns = vec!["n", "m", "energy", "delta_e", "exact_energy"];
    if timings {
        columns.push("wall_ms");
    }
    let mut table = Table::new(&columns);
    let mut summary = Map::new();
    let mut closed = Vec::new();
    for &n in ns {
        let start = Instant::now();
        let h = random_pauli(n, r, seed)?;
        let state = ReferenceState::zero(n)?;
        let basis = MomentBasis::build(h.strings(), r, None)?;
        let set = OverlapSet::assemble(&basis, &h, &state, &Backend::Product)?;
        let sizes: Vec<usize> = (1..=basis.len()).collect();
        let sols = prefix_scan(&set, &sizes, solver)?;
        let full = sols.last().expect("nonempty basis").energy;
        let exact = if n <= ORACLE_LIMIT { Some(exact_ground(&h)?.0) } else { None };
        let ms = start.elapsed().as_secs_f64() * 1e3;
        for (m, sol) in sizes.iter().zip(&sols) {
            let mut row: Vec<Cell> = vec![n.into(), (*m).into(), sol.energy.into(), (sol.energy - full).into(), exact.into()];
            if timings {
                row.push(ms.into());
            }
            table.push(row);
        }
        closed.push(json!({ "n": n, "m_max": basis.len(), "energy": full }));
    }
    summary.insert("instances".into(), Value::Array(closed));
    Ok(Report {
        mode: "bench",
        headline: format!("bench: {} instances, {} rows", ns.len(), table.rows.len()),
        table,
        summary,
    })
}
