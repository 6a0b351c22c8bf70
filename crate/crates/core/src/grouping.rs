//! Qubit-wise commuting partition of Pauli strings into measurement settings.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliTerm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    /// Indices into the planned string list, one list per setting.
    pub groups: Vec<Vec<usize>>,
    /// Per-setting measurement basis as a label: the letter measured on each
    /// qubit, `I` where the qubit is free.
    pub bases: Vec<PauliTerm>,
}

impl MeasurementPlan {
    pub fn settings_count(&self) -> usize {
        self.groups.len()
    }
}

/// Merges `p` into `basis` if every shared qubit agrees.
fn absorb(basis: &mut PauliTerm, p: &PauliTerm) -> bool {
    if !basis.qubitwise_compatible(p) {
        return false;
    }
    let x = basis.x_mask().iter().zip(p.x_mask()).map(|(a, b)| a | b).collect();
    let z = basis.z_mask().iter().zip(p.z_mask()).map(|(a, b)| a | b).collect();
    *basis = PauliTerm::from_masks(p.n_qubits(), x, z, 0).expect("union of valid masks");
    true
}

/// Greedy coloring of the incompatibility graph, largest degree first with ties
/// broken by lower index; each vertex takes the first group it fits.
pub fn plan(strings: &[PauliTerm]) -> Result<MeasurementPlan> {
    let Some(first) = strings.first() else {
        return Ok(MeasurementPlan {
            groups: Vec::new(),
            bases: Vec::new(),
        });
    };
    let n = first.n_qubits();
    let mut seen = HashSet::with_capacity(strings.len());
    for s in strings {
        if s.n_qubits() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: s.n_qubits(),
            });
        }
        if !s.is_hermitian() {
            return Err(Error::NonHermitian(s.to_string()));
        }
        if !seen.insert(s.key()) {
            return Err(Error::DuplicateString(s.without_phase().to_string()));
        }
    }
    let count = strings.len();
    let mut degree = vec![0usize; count];
    for i in 0..count {
        for j in i + 1..count {
            if !strings[i].qubitwise_compatible(&strings[j]) {
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut bases: Vec<PauliTerm> = Vec::new();
    for idx in order {
        let p = strings[idx].without_phase();
        match bases.iter_mut().position(|b| absorb(b, &p)) {
            Some(g) => groups[g].push(idx),
            None => {
                groups.push(vec![idx]);
                bases.push(p);
            }
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(MeasurementPlan { groups, bases })
}

/// Partition, pairwise compatibility and basis consistency.
pub fn validate(plan: &MeasurementPlan, strings: &[PauliTerm]) -> bool {
    if plan.groups.len() != plan.bases.len() {
        return false;
    }
    let mut covered = vec![false; strings.len()];
    for (group, basis) in plan.groups.iter().zip(&plan.bases) {
        for (a, &i) in group.iter().enumerate() {
            let Some(slot) = covered.get_mut(i) else {
                return false;
            };
            if *slot {
                return false;
            }
            *slot = true;
            let s = &strings[i];
            if s.n_qubits() != basis.n_qubits() || !s.qubitwise_compatible(basis) {
                return false;
            }
            // the basis must measure the string's letter wherever it acts
            for w in 0..s.x_mask().len() {
                let support = s.x_mask()[w] | s.z_mask()[w];
                if basis.x_mask()[w] & support != s.x_mask()[w]
                    || basis.z_mask()[w] & support != s.z_mask()[w]
                {
                    return false;
                }
            }
            if group[..a].iter().any(|&j| !strings[j].qubitwise_compatible(s)) {
                return false;
            }
        }
    }
    covered.into_iter().all(|c| c)
}
