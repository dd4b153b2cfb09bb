//! Differential evolution over the Galerkin coefficient space.
//!
//! Classic DE/rand/1/bin with greedy selection: for each agent, three
//! distinct partners form the mutant `a + F·(b - c)`, binomial crossover
//! with one forced coordinate mixes it into the target, the trial is clamped
//! to the bounds, and it replaces the target only on improvement. Trial
//! generation is serial against the previous generation, so objective
//! evaluations can run in a parallel map while histories stay bit-identical
//! for a fixed seed at any worker count.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::{evaluate_ansatz, AnsatzCoefficients};
use crate::error::{Error, Result};
use crate::objective::ControlProblem;

/// Hyperparameters of the evolution. The defaults are the canonical
/// Storn–Price settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    /// Differential weight F in (0, 2].
    pub weight_f: f64,
    /// Crossover rate CR in [0, 1].
    pub crossover_cr: f64,
    pub generations: usize,
    pub seed: u64,
    /// Per-coordinate (lo, hi) box; trials are clamped into it.
    pub bounds: Vec<(f64, f64)>,
}

impl DeConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            population: 30,
            weight_f: 0.8,
            crossover_cr: 0.9,
            generations: 150,
            seed,
            bounds: vec![(-1.0, 1.0); dim],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidConfig(
                "DE needs a population of at least 4 (three partners plus the target)".into(),
            ));
        }
        if !(self.weight_f > 0.0 && self.weight_f <= 2.0) {
            return Err(Error::InvalidConfig("DE weight F must lie in (0, 2]".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_cr) {
            return Err(Error::InvalidConfig("DE crossover CR must lie in [0, 1]".into()));
        }
        if self.bounds.is_empty() || self.bounds.iter().any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::InvalidConfig("DE bounds must be non-degenerate".into()));
        }
        Ok(())
    }
}

/// Record of one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeHistory {
    /// Best objective after each generation (entry 0 is the initial
    /// population); non-increasing by greedy selection.
    pub best_value_per_generation: Vec<f64>,
    /// Best agent after each generation, matching the values above.
    pub best_agent_per_generation: Vec<Vec<f64>>,
    pub best_agent: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Trials whose objective came back non-finite; such trials are
    /// rejected as if infinitely bad.
    pub non_finite_evaluations: usize,
}

/// Runs DE/rand/1/bin on a black-box objective. `injected` agents replace
/// the first few random initializers; callers use this to seed known-good
/// designs so the result can never be worse than them.
pub fn differential_evolution<F>(
    objective: F,
    config: &DeConfig,
    injected: &[Vec<f64>],
) -> Result<DeHistory>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dim = config.bounds.len();
    let np = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let clamp = |x: f64, d: usize| -> f64 {
        let (lo, hi) = config.bounds[d];
        x.clamp(lo, hi)
    };

    let mut population: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            (0..dim)
                .map(|d| {
                    let (lo, hi) = config.bounds[d];
                    rng.random_range(lo..=hi)
                })
                .collect()
        })
        .collect();
    for (slot, seed_agent) in population.iter_mut().zip(injected.iter()) {
        if seed_agent.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: seed_agent.len(),
            });
        }
        *slot = seed_agent
            .iter()
            .enumerate()
            .map(|(d, &x)| clamp(x, d))
            .collect();
    }

    let mut non_finite = 0usize;
    let sanitize = |v: f64, non_finite: &mut usize| -> f64 {
        if v.is_finite() {
            v
        } else {
            *non_finite += 1;
            f64::INFINITY
        }
    };

    let mut fitness: Vec<f64> = population
        .par_iter()
        .map(|x| objective(x))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|v| sanitize(v, &mut non_finite))
        .collect();
    let mut evaluations = np;

    let best_of = |fitness: &[f64]| -> usize {
        let mut bi = 0;
        for (i, &f) in fitness.iter().enumerate() {
            if f < fitness[bi] {
                bi = i;
            }
        }
        bi
    };

    let mut bi = best_of(&fitness);
    let mut best_value_per_generation = vec![fitness[bi]];
    let mut best_agent_per_generation = vec![population[bi].clone()];

    for _gen in 0..config.generations {
        // Serial trial construction against the previous generation keeps
        // the RNG stream independent of evaluation order.
        let mut trials: Vec<Vec<f64>> = Vec::with_capacity(np);
        for i in 0..np {
            let mut partners = [0usize; 3];
            let mut filled = 0;
            while filled < 3 {
                let cand = rng.random_range(0..np);
                if cand != i && !partners[..filled].contains(&cand) {
                    partners[filled] = cand;
                    filled += 1;
                }
            }
            let [a, b, c] = partners;
            let forced = rng.random_range(0..dim);
            let trial: Vec<f64> = (0..dim)
                .map(|d| {
                    if d == forced || rng.random_range(0.0..1.0) < config.crossover_cr {
                        let m = population[a][d]
                            + config.weight_f * (population[b][d] - population[c][d]);
                        clamp(m, d)
                    } else {
                        population[i][d]
                    }
                })
                .collect();
            trials.push(trial);
        }

        let trial_fitness: Vec<f64> = trials.par_iter().map(|x| objective(x)).collect();
        evaluations += np;

        for i in 0..np {
            let tf = sanitize(trial_fitness[i], &mut non_finite);
            if tf < fitness[i] {
                fitness[i] = tf;
                population[i] = std::mem::take(&mut trials[i]);
            }
        }

        bi = best_of(&fitness);
        best_value_per_generation.push(fitness[bi]);
        best_agent_per_generation.push(population[bi].clone());
    }

    Ok(DeHistory {
        best_agent: population[bi].clone(),
        best_value: fitness[bi],
        best_value_per_generation,
        best_agent_per_generation,
        evaluations,
        non_finite_evaluations: non_finite,
    })
}

/// Splits a flattened DE agent into the two coefficient vectors.
pub fn split_agent(agent: &[f64], n_modes: usize) -> (&[f64], &[f64]) {
    agent.split_at(n_modes)
}

/// Runs DE over the joint `(ε_u, ε_v)` coefficient space of one control
/// problem. The linear-ramp pair (all coefficients zero) is injected into
/// the initial population, so the search never returns worse than the
/// trivial coupler.
pub fn de_over_controls(
    problem: &ControlProblem,
    n_modes: usize,
    config: &DeConfig,
) -> Result<(AnsatzCoefficients, AnsatzCoefficients, DeHistory)> {
    if config.bounds.len() != 2 * n_modes {
        return Err(Error::InvalidConfig(format!(
            "DE bounds dimension {} does not match 2 x {n_modes} coefficients",
            config.bounds.len()
        )));
    }
    let interval = (problem.axial.z0, problem.axial.z1);
    let axial = problem.axial;

    let objective = |agent: &[f64]| -> f64 {
        let (eu, ev) = split_agent(agent, n_modes);
        let coeffs_u = AnsatzCoefficients::new(eu.to_vec(), (1.0, 0.0), interval);
        let coeffs_v = AnsatzCoefficients::new(ev.to_vec(), (0.0, 1.0), interval);
        let (Ok(cu), Ok(cv)) = (coeffs_u, coeffs_v) else {
            return f64::INFINITY;
        };
        let (Ok(u), Ok(v)) = (evaluate_ansatz(&cu, &axial), evaluate_ansatz(&cv, &axial)) else {
            return f64::INFINITY;
        };
        match problem.reduced_objective(&u, &v) {
            Ok(obj) => obj.total,
            Err(_) => f64::INFINITY,
        }
    };

    let ramp_agent = vec![0.0; 2 * n_modes];
    let history = differential_evolution(objective, config, &[ramp_agent])?;

    let (eu, ev) = split_agent(&history.best_agent, n_modes);
    let best_u = AnsatzCoefficients::new(eu.to_vec(), (1.0, 0.0), interval)?;
    let best_v = AnsatzCoefficients::new(ev.to_vec(), (0.0, 1.0), interval)?;
    Ok((best_u, best_v, history))
}
