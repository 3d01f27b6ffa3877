//! 0-1 integer linear programs built from at-most-one rows and linking rows.
//!
//! All variables are binary and the objective is maximised. Three row shapes
//! exist:
//!
//! * pairwise: `x_i + x_j <= 1`
//! * group: `sum(x_g) <= 1`
//! * linking: `aux <= a`, `aux <= b`, `a + b - aux <= 1`, i.e. `aux = a AND b`
//!
//! A linking row's `aux` variable is fully determined by its two ends, so the
//! solver branches only on the other ("primary") variables.

mod brute;
mod decompose;
mod lp_format;
mod solver;

use std::time::Duration;

use crate::constraints::{DecisionVar, HardConstraint, SoftAugmentation};
use crate::error::{Error, Result};

pub use brute::{brute_force, BRUTE_FORCE_LIMIT};
pub use decompose::{decompose, Component};
pub use lp_format::{export_lp, format_coeff, lp_names, write_lp};
pub use solver::{solve, solve_component, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelVar {
    pub name: String,
    pub coeff: f64,
}

/// `aux = a AND b`, expressed with three linear rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub aux: usize,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IlpModel {
    vars: Vec<ModelVar>,
    pairwise: Vec<[usize; 2]>,
    groups: Vec<Vec<usize>>,
    links: Vec<Link>,
    is_aux: Vec<bool>,
    in_rows: Vec<bool>,
}

impl IlpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, coeff: f64) -> usize {
        assert!(coeff.is_finite(), "objective coefficients must be finite");
        self.vars.push(ModelVar {
            name: name.into(),
            coeff,
        });
        self.is_aux.push(false);
        self.in_rows.push(false);
        self.vars.len() - 1
    }

    fn check_ids(&self, ids: &[usize], what: &str) -> Result<()> {
        for &id in ids {
            if id >= self.vars.len() {
                return Err(Error::Model(format!(
                    "{what} references unknown variable {id}"
                )));
            }
            if self.is_aux[id] {
                return Err(Error::Model(format!(
                    "{what} references linked variable {id}, which is derived"
                )));
            }
        }
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Model(format!("{what} repeats a variable")));
        }
        Ok(())
    }

    pub fn add_pairwise(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_ids(&[a, b], "pairwise row")?;
        self.in_rows[a] = true;
        self.in_rows[b] = true;
        self.pairwise.push([a, b]);
        Ok(())
    }

    pub fn add_group(&mut self, ids: Vec<usize>) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::Model("empty group row".into()));
        }
        self.check_ids(&ids, "group row")?;
        for &id in &ids {
            self.in_rows[id] = true;
        }
        self.groups.push(ids);
        Ok(())
    }

    pub fn add_link(&mut self, aux: usize, a: usize, b: usize) -> Result<()> {
        self.check_ids(&[aux, a, b], "linking row")?;
        if self.in_rows[aux] {
            return Err(Error::Model(format!(
                "variable {aux} cannot be linked: it already appears in another row"
            )));
        }
        self.is_aux[aux] = true;
        self.in_rows[aux] = true;
        self.in_rows[a] = true;
        self.in_rows[b] = true;
        self.links.push(Link { aux, a, b });
        Ok(())
    }

    pub fn vars(&self) -> &[ModelVar] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn pairwise(&self) -> &[[usize; 2]] {
        &self.pairwise
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn is_aux(&self, id: usize) -> bool {
        self.is_aux[id]
    }

    pub fn num_rows(&self) -> usize {
        self.pairwise.len() + self.groups.len() + 3 * self.links.len()
    }

    /// Objective of an assignment, summed in variable-id order.
    pub fn objective(&self, assignment: &[bool]) -> f64 {
        self.vars
            .iter()
            .zip(assignment)
            .filter(|(_, &x)| x)
            .map(|(v, _)| v.coeff)
            .sum()
    }

    /// Checks every row; the error names the first violated one.
    pub fn check(&self, assignment: &[bool]) -> std::result::Result<(), String> {
        if assignment.len() != self.vars.len() {
            return Err(format!(
                "assignment has {} entries for {} variables",
                assignment.len(),
                self.vars.len()
            ));
        }
        for (i, [a, b]) in self.pairwise.iter().enumerate() {
            if assignment[*a] && assignment[*b] {
                return Err(format!("pairwise row {i} violated by {a} and {b}"));
            }
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.iter().filter(|&&v| assignment[v]).count() > 1 {
                return Err(format!("group row {i} has more than one selected variable"));
            }
        }
        for l in &self.links {
            let (x, a, b) = (assignment[l.aux], assignment[l.a], assignment[l.b]);
            if x && !a {
                return Err(format!("link {}: aux set without {}", l.aux, l.a));
            }
            if x && !b {
                return Err(format!("link {}: aux set without {}", l.aux, l.b));
            }
            if a && b && !x {
                return Err(format!("link {}: both ends set but aux is 0", l.aux));
            }
        }
        Ok(())
    }
}

/// Tie-break between equal-objective assignments: at the first variable where
/// they differ, the one selecting it wins. This is compositional over
/// variable-disjoint components.
pub fn preferred(a: &[bool], b: &[bool]) -> bool {
    match a.iter().zip(b).find(|(x, y)| x != y) {
        Some((&x, _)) => x,
        None => false,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub components: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: Vec<bool>,
    pub objective_value: f64,
    pub optimal: bool,
    pub stats: SolveStats,
}

impl Solution {
    pub fn selected(&self) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &x)| x)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds the program for hard constraints plus an optional soft augmentation.
///
/// Decision variable `i` becomes model variable `i`; auxiliary variables keep
/// their ids and carry `-penalty` as objective coefficient.
pub fn build_model(
    vars: &[DecisionVar],
    hard: &[HardConstraint],
    soft: Option<&SoftAugmentation>,
) -> Result<IlpModel> {
    let mut model = IlpModel::new();
    for (i, v) in vars.iter().enumerate() {
        if v.id != i {
            return Err(Error::Model(format!(
                "decision variable {} stored at {i}",
                v.id
            )));
        }
        model.add_var(format!("d_{}_{}", v.pair_id, v.relation), v.objective_coeff);
    }
    if let Some(soft) = soft {
        for (k, aux) in soft.aux.iter().enumerate() {
            if aux.id != model.num_vars() {
                return Err(Error::Model(format!(
                    "auxiliary variable {} out of sequence (expected {})",
                    aux.id,
                    model.num_vars()
                )));
            }
            if !aux.penalty.is_finite() {
                return Err(Error::Model(format!(
                    "auxiliary variable {} has infinite penalty",
                    aux.id
                )));
            }
            model.add_var(format!("aux_{k}"), -aux.penalty);
        }
    }
    for c in hard {
        match c.vars.as_slice() {
            [a, b] if c.family.is_type_clue() => model.add_pairwise(*a, *b)?,
            ids => model.add_group(ids.to_vec())?,
        }
    }
    if let Some(soft) = soft {
        for aux in &soft.aux {
            model.add_link(aux.id, aux.var_a, aux.var_b)?;
        }
    }
    Ok(model)
}
