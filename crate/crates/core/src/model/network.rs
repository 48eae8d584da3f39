//! The 18-species hormonal crosstalk reaction network.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::rates::{ExperimentSpec, RateConstants};

pub const N_SPECIES: usize = 18;

pub type StateVector = SVector<f64, N_SPECIES>;
pub type JacobianMatrix = SMatrix<f64, N_SPECIES, N_SPECIES>;

/// Chemical species, in state-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(usize)]
pub enum Species {
    Auxin = 0,
    X,
    PlsP,
    Ra,
    RaStar,
    Ck,
    Et,
    PlsM,
    Re,
    ReStar,
    Ctr1,
    Ctr1Star,
    Pin1m,
    Pin1pi,
    Pin1pm,
    Iaa,
    Cytokinin,
    Acc,
}

impl Species {
    pub const ALL: [Species; N_SPECIES] = [
        Species::Auxin,
        Species::X,
        Species::PlsP,
        Species::Ra,
        Species::RaStar,
        Species::Ck,
        Species::Et,
        Species::PlsM,
        Species::Re,
        Species::ReStar,
        Species::Ctr1,
        Species::Ctr1Star,
        Species::Pin1m,
        Species::Pin1pi,
        Species::Pin1pm,
        Species::Iaa,
        Species::Cytokinin,
        Species::Acc,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Auxin => "Auxin",
            Species::X => "X",
            Species::PlsP => "PLSp",
            Species::Ra => "Ra",
            Species::RaStar => "Ra*",
            Species::Ck => "CK",
            Species::Et => "ET",
            Species::PlsM => "PLSm",
            Species::Re => "Re",
            Species::ReStar => "Re*",
            Species::Ctr1 => "CTR1",
            Species::Ctr1Star => "CTR1*",
            Species::Pin1m => "PIN1m",
            Species::Pin1pi => "PIN1pi",
            Species::Pin1pm => "PIN1pm",
            Species::Iaa => "IAA",
            Species::Cytokinin => "cytokinin",
            Species::Acc => "ACC",
        }
    }
}

/// Concentrations of all 18 species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemicalState(pub StateVector);

impl ChemicalState {
    /// Initial conditions for an experiment; fed chemicals start (and stay) at 1.
    pub fn initial(experiment: ExperimentSpec) -> Self {
        let mut s = StateVector::zeros();
        s[Species::Auxin.index()] = 0.1;
        s[Species::X.index()] = 0.1;
        s[Species::PlsP.index()] = 0.1;
        s[Species::Ra.index()] = 0.0;
        s[Species::RaStar.index()] = 1.0;
        s[Species::Ck.index()] = 0.1;
        s[Species::Et.index()] = 0.1;
        s[Species::PlsM.index()] = 0.1;
        s[Species::Re.index()] = 0.0;
        s[Species::ReStar.index()] = 0.3;
        s[Species::Ctr1.index()] = 0.0;
        s[Species::Ctr1Star.index()] = 0.3;
        s[Species::Pin1m.index()] = 0.0;
        s[Species::Pin1pi.index()] = 0.0;
        s[Species::Pin1pm.index()] = 0.0;
        let feed = |on: bool| if on { 1.0 } else { 0.0 };
        s[Species::Iaa.index()] = feed(experiment.feeding.auxin);
        s[Species::Cytokinin.index()] = feed(experiment.feeding.cytokinin);
        s[Species::Acc.index()] = feed(experiment.feeding.ethylene);
        ChemicalState(s)
    }

    pub fn get(&self, species: Species) -> f64 {
        self.0[species.index()]
    }

    /// Cell-averaged PIN: `(PIN1pm + lambda * PIN1pi) / (1 + lambda)`.
    pub fn mixed_pin(&self, lambda: f64) -> f64 {
        mixed_pin(self.get(Species::Pin1pm), self.get(Species::Pin1pi), lambda)
    }

    /// The three conserved pair sums (Ra, Re, CTR1 totals).
    pub fn conserved_sums(&self) -> [f64; 3] {
        conserved_sums(&self.0)
    }
}

pub fn mixed_pin(pin1pm: f64, pin1pi: f64, lambda: f64) -> f64 {
    (pin1pm + lambda * pin1pi) / (1.0 + lambda)
}

pub(crate) fn conserved_sums(s: &StateVector) -> [f64; 3] {
    [
        s[Species::Ra.index()] + s[Species::RaStar.index()],
        s[Species::Re.index()] + s[Species::ReStar.index()],
        s[Species::Ctr1.index()] + s[Species::Ctr1Star.index()],
    ]
}

/// Pairs `(inactive, active)` whose sums are conserved.
pub(crate) const CONSERVED_PAIRS: [(usize, usize); 3] = [(3, 4), (8, 9), (10, 11)];
/// Species with identically zero derivative.
pub(crate) const CONSTANT_SPECIES: [usize; 3] = [15, 16, 17];

/// Right-hand side of the network. Negative excursions produced by an
/// integrator are evaluated at zero.
pub fn derivatives(state: &StateVector, r: &RateConstants) -> StateVector {
    let s = state.map(|v| v.max(0.0));
    let auxin = s[0];
    let x = s[1];
    let plsp = s[2];
    let ra = s[3];
    let ra_s = s[4];
    let ck = s[5];
    let et = s[6];
    let plsm = s[7];
    let re = s[8];
    let re_s = s[9];
    let ctr1 = s[10];
    let ctr1_s = s[11];
    let pin1m = s[12];
    let pin1pi = s[13];
    let pin1pm = s[14];
    let iaa = s[15];
    let cyt = s[16];
    let acc = s[17];

    let mut d = StateVector::zeros();
    d[0] = r.k1a / (1.0 + x / r.k1)
        + r.k2
        + r.k2a * et / (1.0 + ck / r.k2b) * plsp / (r.k2c + plsp)
        + r.V_IAA * iaa / (r.Km_IAA + iaa)
        - (r.k3 + r.k3a * pin1pm / (r.k3auxin + auxin)) * auxin;
    d[1] = r.k16 - r.k16a * ctr1_s - r.k17 * x;
    d[2] = r.k8 * plsm - r.k9 * plsp;
    let ra_flux = -r.k4 * auxin * ra + r.k5 * ra_s;
    d[3] = ra_flux;
    d[4] = -ra_flux;
    d[5] = r.k18a / (1.0 + auxin / r.k18) - r.k19 * ck + r.V_CK * cyt / (r.Km_CK + cyt);
    d[6] = r.k12 + r.k12a * auxin * ck - r.k13 * et + r.V_ACC * acc / (r.Km_ACC + acc);
    d[7] = r.k6 * ra_s / (1.0 + et / r.k6a) - r.k7 * plsm;
    let re_flux = r.k11 * re_s * et - (r.k10 + r.k10a * plsp) * re;
    d[8] = re_flux;
    d[9] = -re_flux;
    let ctr_flux = -r.k14 * re_s * ctr1 + r.k15 * ctr1_s;
    d[10] = ctr_flux;
    d[11] = -ctr_flux;
    d[12] = r.k20a / (r.k20b + ck) * x * auxin / (r.k20c + auxin) - r.k1_v21 * pin1m;
    let recycle = r.k25a * pin1pm / (1.0 + auxin / r.k25b);
    d[13] = r.k22a * pin1m - r.k1_v23 * pin1pi - r.k1_v24 * pin1pi + recycle;
    d[14] = r.k1_v24 * pin1pi - recycle;
    // IAA, cytokinin and ACC are held at their initial values.
    d
}

/// Analytic Jacobian of [`derivatives`].
pub fn jacobian(state: &StateVector, r: &RateConstants) -> JacobianMatrix {
    let s = state.map(|v| v.max(0.0));
    let auxin = s[0];
    let x = s[1];
    let plsp = s[2];
    let ra = s[3];
    let ra_s = s[4];
    let ck = s[5];
    let et = s[6];
    let re = s[8];
    let re_s = s[9];
    let ctr1 = s[10];
    let pin1pm = s[14];
    let iaa = s[15];
    let cyt = s[16];
    let acc = s[17];

    let mut j = JacobianMatrix::zeros();

    // Auxin
    let ck_inhib = 1.0 + ck / r.k2b;
    let pls_sat = plsp / (r.k2c + plsp);
    let pin_den = r.k3auxin + auxin;
    j[(0, 0)] = -r.k3 - r.k3a * pin1pm * r.k3auxin / (pin_den * pin_den);
    let xk = 1.0 + x / r.k1;
    j[(0, 1)] = -r.k1a / r.k1 / (xk * xk);
    j[(0, 2)] = r.k2a * et / ck_inhib * r.k2c / ((r.k2c + plsp) * (r.k2c + plsp));
    j[(0, 5)] = -r.k2a * et * pls_sat / r.k2b / (ck_inhib * ck_inhib);
    j[(0, 6)] = r.k2a / ck_inhib * pls_sat;
    j[(0, 14)] = -r.k3a * auxin / pin_den;
    j[(0, 15)] = r.V_IAA * r.Km_IAA / ((r.Km_IAA + iaa) * (r.Km_IAA + iaa));

    // X
    j[(1, 1)] = -r.k17;
    j[(1, 11)] = -r.k16a;

    // PLSp
    j[(2, 2)] = -r.k9;
    j[(2, 7)] = r.k8;

    // Ra / Ra*
    j[(3, 0)] = -r.k4 * ra;
    j[(3, 3)] = -r.k4 * auxin;
    j[(3, 4)] = r.k5;
    for c in [0, 3, 4] {
        j[(4, c)] = -j[(3, c)];
    }

    // CK
    let ak = 1.0 + auxin / r.k18;
    j[(5, 0)] = -r.k18a / r.k18 / (ak * ak);
    j[(5, 5)] = -r.k19;
    j[(5, 16)] = r.V_CK * r.Km_CK / ((r.Km_CK + cyt) * (r.Km_CK + cyt));

    // ET
    j[(6, 0)] = r.k12a * ck;
    j[(6, 5)] = r.k12a * auxin;
    j[(6, 6)] = -r.k13;
    j[(6, 17)] = r.V_ACC * r.Km_ACC / ((r.Km_ACC + acc) * (r.Km_ACC + acc));

    // PLSm
    let ek = 1.0 + et / r.k6a;
    j[(7, 4)] = r.k6 / ek;
    j[(7, 6)] = -r.k6 * ra_s / r.k6a / (ek * ek);
    j[(7, 7)] = -r.k7;

    // Re / Re*
    j[(8, 2)] = -r.k10a * re;
    j[(8, 6)] = r.k11 * re_s;
    j[(8, 8)] = -(r.k10 + r.k10a * plsp);
    j[(8, 9)] = r.k11 * et;
    for c in [2, 6, 8, 9] {
        j[(9, c)] = -j[(8, c)];
    }

    // CTR1 / CTR1*
    j[(10, 9)] = -r.k14 * ctr1;
    j[(10, 10)] = -r.k14 * re_s;
    j[(10, 11)] = r.k15;
    for c in [9, 10, 11] {
        j[(11, c)] = -j[(10, c)];
    }

    // PIN1m
    let ckd = r.k20b + ck;
    let asat = auxin / (r.k20c + auxin);
    j[(12, 0)] = r.k20a / ckd * x * r.k20c / ((r.k20c + auxin) * (r.k20c + auxin));
    j[(12, 1)] = r.k20a / ckd * asat;
    j[(12, 5)] = -r.k20a / (ckd * ckd) * x * asat;
    j[(12, 12)] = -r.k1_v21;

    // PIN1pi / PIN1pm
    let bk = 1.0 + auxin / r.k25b;
    let d_recycle_d_pm = r.k25a / bk;
    let d_recycle_d_aux = -r.k25a * pin1pm / r.k25b / (bk * bk);
    j[(13, 0)] = d_recycle_d_aux;
    j[(13, 12)] = r.k22a;
    j[(13, 13)] = -(r.k1_v23 + r.k1_v24);
    j[(13, 14)] = d_recycle_d_pm;
    j[(14, 0)] = -d_recycle_d_aux;
    j[(14, 13)] = r.k1_v24;
    j[(14, 14)] = -d_recycle_d_pm;

    // Columns of clamped (negative) components carry no sensitivity.
    for (c, v) in state.iter().enumerate() {
        if *v < 0.0 {
            j.column_mut(c).fill(0.0);
        }
    }
    j
}

/// Max-norm derivative residual relative to `max(|state|_inf, 1)`.
pub fn relative_residual(state: &StateVector, r: &RateConstants) -> f64 {
    let d = derivatives(state, r);
    d.amax() / state.amax().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::ParameterTable;
    use crate::model::rates::{to_rate_constants, Feeding, Mutant};
    use proptest::prelude::*;

    fn rates(coords: &[f64], e: ExperimentSpec) -> RateConstants {
        to_rate_constants(&ParameterTable::crosstalk(), coords, e).unwrap()
    }

    fn arb_state() -> impl Strategy<Value = StateVector> {
        proptest::collection::vec(0.0f64..3.0, N_SPECIES).prop_map(|v| StateVector::from_column_slice(&v))
    }

    fn arb_coords() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..=1.0, 31)
    }

    #[test]
    fn pin_mixing_of_equal_pools() {
        assert!((mixed_pin(1.0, 1.0, 6.0) - 1.0).abs() < 1e-15);
        assert!((mixed_pin(0.0, 7.0, 6.0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn steady_plsp_relation() {
        // d[PLSp]/dt = 0 iff k8 PLSm = k9 PLSp
        let r = rates(&[0.3; 31], ExperimentSpec::WILD_TYPE);
        let mut s = ChemicalState::initial(ExperimentSpec::WILD_TYPE).0;
        s[7] = 0.8;
        s[2] = r.k8 * 0.8 / r.k9;
        assert!(derivatives(&s, &r)[2].abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn fed_species_are_constant(s in arb_state(), c in arb_coords()) {
            let e = ExperimentSpec::new(Mutant::PlsOx, Feeding { auxin: true, cytokinin: true, ethylene: true });
            let d = derivatives(&s, &rates(&c, e));
            prop_assert_eq!(d[15], 0.0);
            prop_assert_eq!(d[16], 0.0);
            prop_assert_eq!(d[17], 0.0);
        }

        #[test]
        fn conserved_pairs_cancel(s in arb_state(), c in arb_coords()) {
            let d = derivatives(&s, &rates(&c, ExperimentSpec::WILD_TYPE));
            for (a, b) in CONSERVED_PAIRS {
                prop_assert_eq!(d[a] + d[b], 0.0);
            }
        }

        #[test]
        fn jacobian_matches_finite_differences(s in arb_state(), c in arb_coords()) {
            let e = ExperimentSpec::new(Mutant::WildType, Feeding { auxin: true, cytokinin: false, ethylene: true });
            let r = rates(&c, e);
            // keep away from the clamp at zero
            let s = s.map(|v| v + 0.05);
            let j = jacobian(&s, &r);
            for col in 0..N_SPECIES {
                let h = 1e-6 * s[col].max(1e-3);
                let mut up = s;
                let mut dn = s;
                up[col] += h;
                dn[col] -= h;
                let fd = (derivatives(&up, &r) - derivatives(&dn, &r)) / (2.0 * h);
                for row in 0..N_SPECIES {
                    let scale = 1.0 + fd[row].abs().max(j[(row, col)].abs());
                    prop_assert!((fd[row] - j[(row, col)]).abs() <= 1e-5 * scale,
                        "J[{},{}] analytic {} fd {}", row, col, j[(row, col)], fd[row]);
                }
            }
        }
    }
}
