//! Steady-state solving for the crosstalk network.
//!
//! The main path integrates with the Rosenbrock pair from the initial
//! conditions and, once the derivative residual is small, polishes the
//! state with Newton's method on a reduced system whose conservation rows
//! are replaced by the invariant constraints. The polished root is only
//! accepted when it lies close to the trajectory, so the reported
//! equilibrium is the one the dynamics actually reach.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::integrate::{OdeSystem, Rosenbrock23, Sdirk2, StepControl, StepOutcome, Stepper};
use super::network::{
    conserved_sums, derivatives, jacobian, relative_residual, ChemicalState, JacobianMatrix, StateVector,
    CONSERVED_PAIRS, CONSTANT_SPECIES, N_SPECIES,
};
use super::params::ParameterTable;
use super::rates::{to_rate_constants, ExperimentSpec, RateConstants};
use crate::error::{Error, Result};

/// Numerical settings for steady-state detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Converged when `|f|_inf / max(|s|_inf, 1)` falls below this. Slow
    /// modes (rates near 1e-4) turn a residual r into a state error of about
    /// r * 1e4, hence the tight default.
    pub tol: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Refine near-equilibrium states with Newton's method.
    pub polish: bool,
    /// Residual at which the first polish is attempted.
    pub polish_start: f64,
    /// Largest accepted Newton displacement relative to `max(|s|_inf, 1)`.
    pub polish_max_shift: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-10,
            tol: 1e-10,
            t_max: 1e6,
            max_steps: 100_000,
            polish: true,
            polish_start: 1e-5,
            polish_max_shift: 5e-2,
        }
    }
}

/// A converged equilibrium and how it was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub state: ChemicalState,
    pub time: f64,
    pub steps: usize,
    pub residual: f64,
    pub polished: bool,
}

struct Network<'a> {
    rates: &'a RateConstants,
    analytic: bool,
}

impl OdeSystem<N_SPECIES> for Network<'_> {
    fn rhs(&self, y: &StateVector) -> StateVector {
        derivatives(y, self.rates)
    }

    fn jacobian(&self, y: &StateVector) -> JacobianMatrix {
        if self.analytic {
            jacobian(y, self.rates)
        } else {
            super::integrate::finite_difference_jacobian(self, y)
        }
    }
}

/// Solves for the steady state of one experiment at a scaled parameter point.
pub fn solve_steady_state(
    table: &ParameterTable,
    coords: &[f64],
    experiment: ExperimentSpec,
    cfg: &SolverConfig,
) -> Result<SteadyState> {
    let r = to_rate_constants(table, coords, experiment)?;
    solve_with_rates(&r, experiment, cfg)
}

/// Steady state for explicit rate constants (Rosenbrock + Newton polish).
pub fn solve_with_rates(r: &RateConstants, experiment: ExperimentSpec, cfg: &SolverConfig) -> Result<SteadyState> {
    let sys = Network { rates: r, analytic: true };
    run_to_steady(&sys, &mut Rosenbrock23, experiment, cfg, cfg.polish)
}

/// Independent reference solver: SDIRK with finite-difference Jacobians,
/// no polishing, driven to the (typically tighter) residual `cfg.tol`.
pub fn solve_with_rates_reference(
    r: &RateConstants,
    experiment: ExperimentSpec,
    cfg: &SolverConfig,
) -> Result<SteadyState> {
    let sys = Network { rates: r, analytic: false };
    run_to_steady(&sys, &mut Sdirk2::default(), experiment, cfg, false)
}

fn non_converged(experiment: ExperimentSpec, reason: impl Into<String>) -> Error {
    Error::NonConverged {
        context: experiment.to_string(),
        reason: reason.into(),
    }
}

fn run_to_steady<M: Stepper<N_SPECIES>>(
    sys: &Network<'_>,
    method: &mut M,
    experiment: ExperimentSpec,
    cfg: &SolverConfig,
    polish: bool,
) -> Result<SteadyState> {
    let ctl = StepControl {
        rtol: cfg.rtol,
        atol: cfg.atol,
        h0: 1e-4,
        h_max: cfg.t_max,
    };
    let y0 = ChemicalState::initial(experiment).0;
    let totals = conserved_sums(&y0);
    let mut y = y0;
    let mut t = 0.0;
    let mut h = ctl.h0;
    let mut steps = 0usize;
    let mut attempts = 0usize;
    let mut next_polish = cfg.polish_start;

    let finish = |y: StateVector, t: f64, steps: usize, polished: bool| -> Result<SteadyState> {
        let y = clean_negatives(y, cfg).ok_or_else(|| non_converged(experiment, "negative concentration"))?;
        Ok(SteadyState {
            state: ChemicalState(y),
            time: t,
            steps,
            residual: relative_residual(&y, sys.rates),
            polished,
        })
    };

    let res0 = relative_residual(&y, sys.rates);
    if res0 < cfg.tol {
        return finish(y, t, 0, false);
    }

    loop {
        if t >= cfg.t_max {
            return Err(non_converged(
                experiment,
                format!("t exceeded {:e} with residual {:.3e}", cfg.t_max, relative_residual(&y, sys.rates)),
            ));
        }
        if steps >= cfg.max_steps || attempts >= 4 * cfg.max_steps {
            return Err(non_converged(experiment, format!("step budget {} exhausted at t = {t:.3e}", cfg.max_steps)));
        }
        if h < 1e-14 * t.max(1.0) {
            return Err(non_converged(experiment, format!("step size underflow at t = {t:.3e}")));
        }
        attempts += 1;
        match method.step(sys, &y, h, &ctl) {
            StepOutcome::Accepted {
                y: yn, f, h_used, h_next,
            } => {
                if !yn.iter().all(|v| v.is_finite()) {
                    return Err(non_converged(experiment, "state became non-finite"));
                }
                y = yn;
                t += h_used;
                h = h_next;
                steps += 1;
                let f = f.unwrap_or_else(|| sys.rhs(&y));
                let res = f.amax() / y.amax().max(1.0);
                if res < cfg.tol {
                    // slow modes leave the state off the root by about
                    // residual / rate, so finish with Newton when allowed
                    if polish {
                        if let Some(p) = newton_polish(sys.rates, &y, &y0, &totals, cfg) {
                            return finish(p, t, steps, true);
                        }
                    }
                    return finish(y, t, steps, false);
                }
                if polish && res < next_polish {
                    if let Some(p) = newton_polish(sys.rates, &y, &y0, &totals, cfg) {
                        return finish(p, t, steps, true);
                    }
                    next_polish = res * 0.1;
                }
            }
            StepOutcome::Rejected { h_next } => h = h_next,
        }
    }
}

/// Zeroes round-off negatives; rejects materially negative states.
fn clean_negatives(y: StateVector, cfg: &SolverConfig) -> Option<StateVector> {
    let floor = -(cfg.atol.max(1e-12)) * y.amax().max(1.0) * 10.0;
    if y.iter().any(|&v| v < floor) {
        return None;
    }
    Some(y.map(|v| v.max(0.0)))
}

/// Newton iteration on `f(y) = 0` with one equation of each conserved pair
/// (and each constant species) swapped for its invariant.
fn newton_polish(
    r: &RateConstants,
    start: &StateVector,
    y0: &StateVector,
    totals: &[f64; 3],
    cfg: &SolverConfig,
) -> Option<StateVector> {
    let scale = start.amax().max(1.0);
    let mut y = *start;
    for _ in 0..30 {
        let mut g = derivatives(&y, r);
        let mut jg = jacobian(&y, r);
        for (k, &(a, b)) in CONSERVED_PAIRS.iter().enumerate() {
            g[a] = y[a] + y[b] - totals[k];
            jg.row_mut(a).fill(0.0);
            jg[(a, a)] = 1.0;
            jg[(a, b)] = 1.0;
        }
        for i in 0..N_SPECIES {
            // held species, and knocked-out ones whose rates are all zero
            if CONSTANT_SPECIES.contains(&i) || jg.row(i).amax() == 0.0 {
                g[i] = y[i] - y0[i];
                jg.row_mut(i).fill(0.0);
                jg[(i, i)] = 1.0;
            }
        }
        let delta: SVector<f64, N_SPECIES> = jg.lu().solve(&(-g))?;
        y += delta;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if (y - start).amax() > cfg.polish_max_shift * scale {
            return None;
        }
        if delta.amax() <= 1e-14 * y.amax().max(1.0) {
            break;
        }
    }
    let y = clean_negatives(y, cfg)?;
    let sums = conserved_sums(&y);
    let sums_ok = sums.iter().zip(totals).all(|(s, t)| (s - t).abs() <= 1e-12 * t.max(1.0));
    (relative_residual(&y, r) < cfg.tol && sums_ok).then_some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rates::{Feeding, Mutant};

    fn table() -> ParameterTable {
        ParameterTable::crosstalk()
    }

    #[test]
    fn midpoint_wild_type_converges() {
        let ss = solve_steady_state(&table(), &[0.0; 31], ExperimentSpec::WILD_TYPE, &SolverConfig::default()).unwrap();
        assert!(ss.residual < 1e-8, "{}", ss.residual);
        let sums = ss.state.conserved_sums();
        assert!((sums[0] - 1.0).abs() < 1e-9);
        assert!((sums[1] - 0.3).abs() < 1e-9);
        assert!((sums[2] - 0.3).abs() < 1e-9);
        assert!(ss.state.0.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn pls_knockout_has_no_plsm() {
        let e = ExperimentSpec::new(Mutant::Pls, Feeding::NONE);
        let ss = solve_steady_state(&table(), &[0.2; 31], e, &SolverConfig::default()).unwrap();
        assert!(ss.state.0[7].abs() < 1e-9);
        assert!(ss.state.0[2].abs() < 1e-9);
    }

    #[test]
    fn fed_species_stay_at_one() {
        let e = ExperimentSpec::new(
            Mutant::WildType,
            Feeding {
                auxin: true,
                cytokinin: false,
                ethylene: true,
            },
        );
        let ss = solve_steady_state(&table(), &[-0.3; 31], e, &SolverConfig::default()).unwrap();
        assert_eq!(ss.state.0[15], 1.0);
        assert_eq!(ss.state.0[16], 0.0);
        assert_eq!(ss.state.0[17], 1.0);
    }

    #[test]
    fn tiny_time_budget_reports_non_convergence() {
        let cfg = SolverConfig {
            t_max: 1e-3,
            polish: false,
            ..Default::default()
        };
        let err = solve_steady_state(&table(), &[0.0; 31], ExperimentSpec::WILD_TYPE, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConverged { .. }), "{err}");
    }

    #[test]
    fn reference_solver_agrees_at_initial_value_column() {
        let t = table();
        let p = t.initial_point().unwrap();
        let r = to_rate_constants(&t, &p, ExperimentSpec::WILD_TYPE).unwrap();
        let a = solve_with_rates(&r, ExperimentSpec::WILD_TYPE, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            tol: 1e-12,
            rtol: 1e-8,
            atol: 1e-12,
            max_steps: 200_000,
            ..Default::default()
        };
        let b = solve_with_rates_reference(&r, ExperimentSpec::WILD_TYPE, &cfg).unwrap();
        let scale = a.state.0.amax().max(1.0);
        assert!((a.state.0 - b.state.0).amax() <= 1e-6 * scale);
    }
}
