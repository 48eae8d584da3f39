use hmatch_core::model::integrate::{finite_difference_jacobian, integrate, OdeSystem, Rosenbrock23, StepControl};
use hmatch_core::model::network::JacobianMatrix;
use hmatch_core::model::{derivatives, jacobian, to_rate_constants, ChemicalState, CrosstalkModel, RateConstants, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Net<'a>(&'a RateConstants);

impl OdeSystem<18> for Net<'_> {
    fn rhs(&self, y: &StateVector) -> StateVector {
        derivatives(y, self.0)
    }

    fn jacobian(&self, y: &StateVector) -> JacobianMatrix {
        jacobian(y, self.0)
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..31).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn derivatives_leave_conserved_totals_unchanged() {
    let model = CrosstalkModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let x = random_point(&mut rng);
        for e in model.outputs.configurations() {
            let r = to_rate_constants(&model.parameters, &x, e).unwrap();
            let y = StateVector::from_iterator((0..18).map(|_| rng.random_range(0.0..2.0)));
            let dy = derivatives(&y, &r);
            let scale = dy.amax().max(1.0);
            for s in ChemicalState(dy).conserved_sums() {
                assert!(s.abs() <= 1e-12 * scale, "{s}");
            }
        }
    }
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let model = CrosstalkModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..20 {
        let x = random_point(&mut rng);
        let e = model.outputs.configurations()[0];
        let r = to_rate_constants(&model.parameters, &x, e).unwrap();
        let y = StateVector::from_iterator((0..18).map(|_| rng.random_range(0.1..2.0)));
        let a = jacobian(&y, &r);
        let fd = finite_difference_jacobian(&Net(&r), &y);
        let scale = a.amax().max(1.0);
        assert!((a - fd).amax() <= 1e-5 * scale, "{}", (a - fd).amax());
    }
}

#[test]
fn trajectories_conserve_totals() {
    let model = CrosstalkModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let ctl = StepControl::default();
    for _ in 0..10 {
        let x = random_point(&mut rng);
        for e in model.outputs.configurations() {
            let r = to_rate_constants(&model.parameters, &x, e).unwrap();
            let y0 = ChemicalState::initial(e);
            let Some((y, _)) = integrate(&Net(&r), &mut Rosenbrock23, y0.0, 10.0, &ctl, 100_000) else {
                continue;
            };
            assert!(y.iter().all(|v| *v >= -1e-9), "negative concentration");
            let (a, b) = (ChemicalState(y).conserved_sums(), y0.conserved_sums());
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-9, "{p} vs {q}");
            }
        }
    }
}

#[test]
fn midpoint_outputs_are_finite() {
    let model = CrosstalkModel::default();
    let out = model.compute_outputs(&[0.0; 31]).unwrap();
    assert_eq!(out.values.len(), 32);
    assert!(out.values.iter().all(|v| v.is_finite()));
}
