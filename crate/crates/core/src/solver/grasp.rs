use std::time::Instant;

use crate::schedule::{Assignment, DispatchProblem};

use super::candidates::SolveContext;
use super::construct::{construct, iteration_rng};
use super::local_search::improve;
use super::{Objective, Solution, SolverConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraspOutcome {
    pub assignment: Assignment,
    pub objective: Objective,
    /// Incumbent objective after each completed iteration.
    pub trace: Vec<Objective>,
    pub iterations_run: u32,
}

fn run_iteration(ctx: &SolveContext<'_, '_>, config: &SolverConfig, iteration: u32) -> (Objective, Solution) {
    let mut rng = iteration_rng(config.seed, u64::from(iteration));
    let mut solution = construct(ctx, config, &mut rng);
    improve(ctx.problem, &ctx.travel, &mut solution, config.local_search);
    (solution.objective(), solution)
}

struct Incumbent {
    best: Option<(Objective, Solution)>,
    trace: Vec<Objective>,
}

impl Incumbent {
    /// Earlier iterations win ties.
    fn offer(&mut self, config: &SolverConfig, candidate: (Objective, Solution)) {
        let replace = match &self.best {
            None => true,
            Some((obj, _)) => candidate.0.better_than(obj, config.objective),
        };
        if replace {
            self.best = Some(candidate);
        }
        self.trace.push(self.best.as_ref().expect("set above").0);
    }
}

/// Multi-start GRASP over one snapshot.
///
/// Iteration `i` draws from the sub-stream `seed + i`, so the serial and the
/// parallel loop evaluate exactly the same solutions and reduce them in
/// iteration order. A time budget is checked between iterations (between
/// batches when parallel); the first iteration always runs.
pub fn grasp(problem: &DispatchProblem<'_>, config: &SolverConfig) -> GraspOutcome {
    let deadline = config.time_budget.map(|b| (Instant::now(), b));
    let ctx = SolveContext::new(problem, config.greedy_value);
    let mut inc = Incumbent {
        best: None,
        trace: Vec::with_capacity(config.iterations as usize),
    };
    let out_of_time = || deadline.is_some_and(|(started, b)| started.elapsed() >= b);

    #[cfg(feature = "parallel")]
    if config.parallel {
        use rayon::prelude::*;
        let batch = (rayon::current_num_threads() * 4).max(1) as u32;
        let mut next = 0;
        while next < config.iterations && (next == 0 || !out_of_time()) {
            let end = (next + batch).min(config.iterations);
            let results: Vec<_> = (next..end)
                .into_par_iter()
                .map(|i| run_iteration(&ctx, config, i))
                .collect();
            for r in results {
                inc.offer(config, r);
            }
            next = end;
        }
        return finish(problem, inc);
    }

    for i in 0..config.iterations {
        if i > 0 && out_of_time() {
            break;
        }
        inc.offer(config, run_iteration(&ctx, config, i));
    }
    finish(problem, inc)
}

fn finish(problem: &DispatchProblem<'_>, inc: Incumbent) -> GraspOutcome {
    let (objective, solution) = inc.best.expect("at least one iteration");
    GraspOutcome {
        assignment: solution.to_assignment(problem.couriers()),
        objective,
        iterations_run: inc.trace.len() as u32,
        trace: inc.trace,
    }
}
