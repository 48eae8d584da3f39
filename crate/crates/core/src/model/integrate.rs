//! Stiff integrators for small autonomous systems.
//!
//! Two unrelated schemes are provided so that steady states can be
//! cross-checked: a linearly implicit Rosenbrock 2(3) pair with an analytic
//! Jacobian, and a fully implicit two-stage SDIRK method that solves its
//! stage equations by Newton iteration on a finite-difference Jacobian and
//! controls the step by step doubling. Both are L-stable and both preserve
//! linear invariants of the vector field.

use nalgebra::{Const, DimMin, SMatrix, SVector, ToTypenum};

/// Bound needed for LU factorisation of `N x N` static matrices.
pub trait SquareDim: ToTypenum + DimMin<Self, Output = Self> + Sized {}
impl<T: ToTypenum + DimMin<T, Output = T>> SquareDim for T {}

/// An autonomous system `dy/dt = f(y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, y: &SVector<f64, N>) -> SVector<f64, N>;

    fn jacobian(&self, y: &SVector<f64, N>) -> SMatrix<f64, N, N> {
        finite_difference_jacobian(self, y)
    }
}

/// Forward-difference Jacobian.
pub fn finite_difference_jacobian<S, const N: usize>(sys: &S, y: &SVector<f64, N>) -> SMatrix<f64, N, N>
where
    S: OdeSystem<N> + ?Sized,
{
    let f0 = sys.rhs(y);
    let mut j = SMatrix::<f64, N, N>::zeros();
    for c in 0..N {
        let h = f64::EPSILON.sqrt() * y[c].abs().max(1e-6);
        let mut yp = *y;
        yp[c] += h;
        let h = yp[c] - y[c];
        let fc = (sys.rhs(&yp) - f0) / h;
        j.set_column(c, &fc);
    }
    j
}

/// Error-control tolerances and step limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-10,
            h0: 1e-4,
            h_max: 1e7,
        }
    }
}

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y0: &SVector<f64, N>,
    y1: &SVector<f64, N>,
    ctl: &StepControl,
) -> f64 {
    let mut m = 0.0f64;
    for i in 0..N {
        let sc = ctl.atol + ctl.rtol * y0[i].abs().max(y1[i].abs());
        m = m.max(err[i].abs() / sc);
    }
    m
}

/// Outcome of one attempted step.
pub enum StepOutcome<const N: usize> {
    Accepted {
        y: SVector<f64, N>,
        /// `f(y)` at the new state when the method produces it for free.
        f: Option<SVector<f64, N>>,
        h_used: f64,
        h_next: f64,
    },
    Rejected {
        h_next: f64,
    },
}

/// A single-step method with its own error control.
pub trait Stepper<const N: usize> {
    fn step<S: OdeSystem<N>>(&mut self, sys: &S, y: &SVector<f64, N>, h: f64, ctl: &StepControl) -> StepOutcome<N>;
}

/// Rosenbrock 2(3) pair (Shampine & Reichelt), one LU factorisation per step.
#[derive(Debug, Default, Clone, Copy)]
pub struct Rosenbrock23;

impl<const N: usize> Stepper<N> for Rosenbrock23
where
    Const<N>: SquareDim,
{
    fn step<S: OdeSystem<N>>(&mut self, sys: &S, y: &SVector<f64, N>, h: f64, ctl: &StepControl) -> StepOutcome<N> {
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;

        let jac = sys.jacobian(y);
        let w = SMatrix::<f64, N, N>::identity() - jac * (h * d);
        let lu = w.lu();
        let f0 = sys.rhs(y);
        let Some(k1) = lu.solve(&f0) else {
            return StepOutcome::Rejected { h_next: h * 0.25 };
        };
        let f1 = sys.rhs(&(y + k1 * (0.5 * h)));
        let Some(k2) = lu.solve(&(f1 - k1)).map(|v| v + k1) else {
            return StepOutcome::Rejected { h_next: h * 0.25 };
        };
        let y_new = y + k2 * h;
        let f2 = sys.rhs(&y_new);
        let rhs3 = f2 - (k2 - f1) * e32 - (k1 - f0) * 2.0;
        let Some(k3) = lu.solve(&rhs3) else {
            return StepOutcome::Rejected { h_next: h * 0.25 };
        };
        let err = (k1 - k2 * 2.0 + k3) * (h / 6.0);
        if !y_new.iter().all(|v| v.is_finite()) || !err.iter().all(|v| v.is_finite()) {
            return StepOutcome::Rejected { h_next: h * 0.25 };
        }
        let en = error_norm(&err, y, &y_new, ctl);
        let factor = if en == 0.0 {
            5.0
        } else {
            (0.8 * en.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
        };
        if en <= 1.0 {
            StepOutcome::Accepted {
                y: y_new,
                f: Some(f2),
                h_used: h,
                h_next: (h * factor).min(ctl.h_max),
            }
        } else {
            StepOutcome::Rejected { h_next: h * factor.min(0.9) }
        }
    }
}

/// Two-stage, second-order, L-stable SDIRK (Alexander) with step doubling.
#[derive(Debug, Clone, Copy)]
pub struct Sdirk2 {
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for Sdirk2 {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            max_newton: 12,
        }
    }
}

impl Sdirk2 {
    const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

    /// Solves `Y = base + h*gamma*f(Y)` by simplified Newton.
    fn solve_stage<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        base: &SVector<f64, N>,
        guess: &SVector<f64, N>,
        hg: f64,
        jac: &SMatrix<f64, N, N>,
    ) -> Option<SVector<f64, N>>
    where
        Const<N>: SquareDim,
    {
        let m = SMatrix::<f64, N, N>::identity() - jac * hg;
        let lu = m.lu();
        let mut stage = *guess;
        for _ in 0..self.max_newton {
            let resid = stage - base - sys.rhs(&stage) * hg;
            let delta = lu.solve(&(-resid))?;
            stage += delta;
            if !stage.iter().all(|v| v.is_finite()) {
                return None;
            }
            let scale = stage.amax().max(1.0);
            if delta.amax() <= self.newton_tol * scale {
                return Some(stage);
            }
        }
        None
    }

    fn single<S: OdeSystem<N>, const N: usize>(
        &self,
        sys: &S,
        y: &SVector<f64, N>,
        h: f64,
        jac: &SMatrix<f64, N, N>,
    ) -> Option<SVector<f64, N>>
    where
        Const<N>: SquareDim,
    {
        let hg = h * Self::GAMMA;
        let y1 = self.solve_stage(sys, y, y, hg, jac)?;
        let base2 = y + sys.rhs(&y1) * (h * (1.0 - Self::GAMMA));
        self.solve_stage(sys, &base2, &y1, hg, jac)
    }
}

impl<const N: usize> Stepper<N> for Sdirk2
where
    Const<N>: SquareDim,
{
    fn step<S: OdeSystem<N>>(&mut self, sys: &S, y: &SVector<f64, N>, h: f64, ctl: &StepControl) -> StepOutcome<N> {
        // one Jacobian serves both steps that start at y
        let jac = finite_difference_jacobian(sys, y);
        let full = self.single(sys, y, h, &jac);
        let half = self
            .single(sys, y, 0.5 * h, &jac)
            .and_then(|mid| self.single(sys, &mid, 0.5 * h, &finite_difference_jacobian(sys, &mid)));
        let (Some(full), Some(fine)) = (full, half) else {
            return StepOutcome::Rejected { h_next: h * 0.25 };
        };
        // Local error of the two half steps, order 2 => divide by 2^2 - 1.
        let err = (fine - full) / 3.0;
        let en = error_norm(&err, y, &fine, ctl);
        let factor = if en == 0.0 {
            4.0
        } else {
            (0.8 * en.powf(-1.0 / 3.0)).clamp(0.2, 4.0)
        };
        if en <= 1.0 {
            StepOutcome::Accepted {
                y: fine,
                f: None,
                h_used: h,
                h_next: (h * factor).min(ctl.h_max),
            }
        } else {
            StepOutcome::Rejected { h_next: h * factor.min(0.9) }
        }
    }
}

/// Integrates from `t = 0` to `t_end`, returning the final state and the
/// number of accepted steps.
pub fn integrate<S, M, const N: usize>(
    sys: &S,
    method: &mut M,
    y0: SVector<f64, N>,
    t_end: f64,
    ctl: &StepControl,
    max_steps: usize,
) -> Option<(SVector<f64, N>, usize)>
where
    S: OdeSystem<N>,
    M: Stepper<N>,
{
    let mut t = 0.0;
    let mut y = y0;
    let mut h = ctl.h0.min(t_end);
    let mut steps = 0;
    while t < t_end {
        if steps >= max_steps || h < 1e-14 * t.max(1.0) {
            return None;
        }
        let h_try = h.min(t_end - t);
        match method.step(sys, &y, h_try, ctl) {
            StepOutcome::Accepted { y: yn, h_used, h_next, .. } => {
                y = yn;
                t += h_used;
                h = h_next;
                steps += 1;
            }
            StepOutcome::Rejected { h_next } => h = h_next,
        }
    }
    Some((y, steps))
}
