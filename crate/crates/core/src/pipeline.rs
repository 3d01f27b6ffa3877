//! End-to-end joint inference: candidates, constraints, program, solution.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::candidates::{build_candidates, CandidateParams, MentionPrediction, PairCandidates};
use crate::clues::{prune_clues, ClueSet};
use crate::config::{Mode, RunConfig};
use crate::constraints::{census, generate_hard, soften, Generated, SoftAugmentation};
use crate::error::Result;
use crate::eval::{ilp_predictions, RankedPrediction};
use crate::ilp::{build_model, solve, IlpModel, Solution, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub candidates: CandidateParams,
    pub mode: Mode,
    pub alpha: f64,
    pub max_relations: usize,
    pub solve: SolveOptions,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams::from(&RunConfig::default())
    }
}

impl From<&RunConfig> for PipelineParams {
    fn from(cfg: &RunConfig) -> Self {
        PipelineParams {
            candidates: cfg.candidate_params(),
            mode: cfg.mode,
            alpha: cfg.alpha,
            max_relations: cfg.max_relations,
            solve: cfg.solve_options(),
        }
    }
}

/// The instantiated program before solving.
#[derive(Debug, Clone)]
pub struct Program {
    pub generated: Generated,
    /// Constraints that remain hard (all of them in hard mode).
    pub hard: Vec<crate::constraints::HardConstraint>,
    pub soft: Option<SoftAugmentation>,
    pub model: IlpModel,
    pub clues_used: ClueSet,
}

pub fn build_program(
    candidates: &[PairCandidates],
    clues: &ClueSet,
    params: &PipelineParams,
) -> Result<Program> {
    let clues_used = prune_clues(clues, candidates, params.max_relations);
    let generated = generate_hard(candidates, &clues_used)?;
    let (hard, soft) = match params.mode {
        Mode::Hard => (generated.constraints.clone(), None),
        Mode::Soft => {
            let (hard, soft) = soften(&generated.vars, &generated.constraints, params.alpha)?;
            (hard, Some(soft))
        }
    };
    let model = build_model(&generated.vars, &hard, soft.as_ref())?;
    Ok(Program {
        generated,
        hard,
        soft,
        model,
        clues_used,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub candidates: Vec<PairCandidates>,
    pub program: Program,
    pub solution: Solution,
    pub predictions: Vec<RankedPrediction>,
}

pub fn run_ilp(
    mentions: &[MentionPrediction],
    clues: &ClueSet,
    params: &PipelineParams,
) -> Result<PipelineOutput> {
    let candidates = build_candidates(mentions, params.candidates)?;
    let program = build_program(&candidates, clues, params)?;
    let solution = solve(&program.model, &params.solve);
    let predictions = ilp_predictions(&program.generated.vars, &solution);
    Ok(PipelineOutput {
        candidates,
        program,
        solution,
        predictions,
    })
}

/// Timestamp-free summary of a solve run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub pairs: usize,
    pub decision_vars: usize,
    pub aux_vars: usize,
    pub clues_used: usize,
    /// Constraints per family before softening.
    pub constraints: BTreeMap<String, usize>,
    pub hard_rows: usize,
    pub soft_constraints: usize,
    pub skipped_self_rer: usize,
    pub components: usize,
    pub nodes: u64,
    pub optimal: bool,
    pub objective: f64,
    pub selected: usize,
}

impl SolveReport {
    pub fn new(out: &PipelineOutput, mode: Mode) -> Self {
        let g = &out.program.generated;
        let aux = out.program.soft.as_ref().map_or(0, |s| s.aux.len());
        SolveReport {
            mode,
            pairs: out.candidates.len(),
            decision_vars: g.vars.len(),
            aux_vars: aux,
            clues_used: out.program.clues_used.len(),
            constraints: census(&g.constraints)
                .into_iter()
                .map(|(k, n)| (k.to_string(), n))
                .collect(),
            hard_rows: out.program.hard.len(),
            soft_constraints: aux,
            skipped_self_rer: g.skipped_self_rer,
            components: out.solution.stats.components,
            nodes: out.solution.stats.nodes,
            optimal: out.solution.optimal,
            objective: out.solution.objective_value,
            selected: out.predictions.len(),
        }
    }
}
