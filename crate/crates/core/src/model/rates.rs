//! Rate constants and experiment configurations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::ParameterTable;
use crate::error::{Error, Result};

/// Volume ratio between cytosol and cell wall used when mixing PIN pools.
pub const DEFAULT_LAMBDA: f64 = 6.0;

/// Fixed ratio k16 / k16a.
pub const K16_RATIO: f64 = 0.3;

/// Plant genotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mutant {
    #[serde(rename = "wt")]
    WildType,
    #[serde(rename = "pls")]
    Pls,
    #[serde(rename = "PLSox")]
    PlsOx,
    #[serde(rename = "etr1")]
    Etr1,
    #[serde(rename = "plsetr1")]
    PlsEtr1,
}

impl Mutant {
    pub const ALL: [Mutant; 5] = [
        Mutant::WildType,
        Mutant::Pls,
        Mutant::PlsOx,
        Mutant::Etr1,
        Mutant::PlsEtr1,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Mutant::WildType => "wt",
            Mutant::Pls => "pls",
            Mutant::PlsOx => "PLSox",
            Mutant::Etr1 => "etr1",
            Mutant::PlsEtr1 => "plsetr1",
        }
    }

    fn knocks_out_pls(self) -> bool {
        matches!(self, Mutant::Pls | Mutant::PlsEtr1)
    }

    fn ethylene_insensitive(self) -> bool {
        matches!(self, Mutant::Etr1 | Mutant::PlsEtr1)
    }
}

impl fmt::Display for Mutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Set of exogenously applied hormones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Feeding {
    pub auxin: bool,
    pub cytokinin: bool,
    pub ethylene: bool,
}

impl Feeding {
    pub const NONE: Feeding = Feeding {
        auxin: false,
        cytokinin: false,
        ethylene: false,
    };

    pub fn label(self) -> String {
        let mut s = String::new();
        if self.auxin {
            s.push('a');
        }
        if self.cytokinin {
            s.push('c');
        }
        if self.ethylene {
            s.push('e');
        }
        if s.is_empty() {
            s.push_str("none");
        }
        s
    }
}

impl FromStr for Feeding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" || s.is_empty() {
            return Ok(Feeding::NONE);
        }
        let mut f = Feeding::NONE;
        for ch in s.chars() {
            let slot = match ch {
                'a' => &mut f.auxin,
                'c' => &mut f.cytokinin,
                'e' => &mut f.ethylene,
                other => {
                    return Err(Error::Config(format!(
                        "unknown feeding code '{other}' in \"{s}\" (use a, c, e or none)"
                    )))
                }
            };
            if *slot {
                return Err(Error::Config(format!("feeding \"{s}\" repeats '{ch}'")));
            }
            *slot = true;
        }
        Ok(f)
    }
}

impl fmt::Display for Feeding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Feeding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Feeding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One experimental condition: genotype plus feeding regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mutant: Mutant,
    pub feeding: Feeding,
}

impl ExperimentSpec {
    pub const WILD_TYPE: ExperimentSpec = ExperimentSpec {
        mutant: Mutant::WildType,
        feeding: Feeding::NONE,
    };

    pub fn new(mutant: Mutant, feeding: Feeding) -> Self {
        Self { mutant, feeding }
    }
}

impl fmt::Display for ExperimentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.mutant, self.feeding)
    }
}

/// Full set of rate constants for one model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct RateConstants {
    pub k1: f64,
    pub k1a: f64,
    pub k2: f64,
    pub k2a: f64,
    pub k2b: f64,
    pub k2c: f64,
    pub k3: f64,
    pub k3a: f64,
    pub k3auxin: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k6a: f64,
    pub k7: f64,
    pub k8: f64,
    pub k9: f64,
    pub k10: f64,
    pub k10a: f64,
    pub k11: f64,
    pub k12: f64,
    pub k12a: f64,
    pub k13: f64,
    pub k14: f64,
    pub k15: f64,
    pub k16: f64,
    pub k16a: f64,
    pub k17: f64,
    pub k18: f64,
    pub k18a: f64,
    pub k19: f64,
    pub k20a: f64,
    pub k20b: f64,
    pub k20c: f64,
    pub k1_v21: f64,
    pub k22a: f64,
    pub k1_v23: f64,
    pub k1_v24: f64,
    pub k25a: f64,
    pub k25b: f64,
    pub V_IAA: f64,
    pub Km_IAA: f64,
    pub V_CK: f64,
    pub Km_CK: f64,
    pub V_ACC: f64,
    pub Km_ACC: f64,
    pub lambda: f64,
}

// Column order of the 31-coordinate parameter point.
mod col {
    pub const K1: usize = 0;
    pub const K1A: usize = 1;
    pub const K2A: usize = 2;
    pub const K2B: usize = 3;
    pub const K2C: usize = 4;
    pub const K3: usize = 5;
    pub const K3A: usize = 6;
    pub const K3AUXIN: usize = 7;
    pub const K5: usize = 8;
    pub const K6A: usize = 9;
    pub const K6W: usize = 10;
    pub const K9: usize = 11;
    pub const K10A: usize = 12;
    pub const K11W: usize = 13;
    pub const K12A: usize = 14;
    pub const K13: usize = 15;
    pub const K15: usize = 16;
    pub const K17: usize = 17;
    pub const K19: usize = 18;
    pub const K18: usize = 19;
    pub const K20A: usize = 20;
    pub const K20B: usize = 21;
    pub const K20C: usize = 22;
    pub const K22A: usize = 23;
    pub const K25A: usize = 24;
    pub const K25B: usize = 25;
    pub const FEED_IAA: usize = 26;
    pub const FEED_CK: usize = 27;
    pub const FEED_ACC: usize = 28;
    pub const K6M: usize = 29;
    pub const K11M: usize = 30;
}

/// Michaelis constant used to realise the feeding composites.
const FEED_KM: f64 = 1.0;

impl RateConstants {
    /// Rate constants from natural-scale ratio values (table order).
    pub fn from_natural(v: &[f64], experiment: ExperimentSpec) -> Result<Self> {
        if v.len() != 31 {
            return Err(Error::Domain(format!(
                "crosstalk model needs 31 inputs, got {}",
                v.len()
            )));
        }
        // Denominators of every ratio are fixed at 1.
        let (k2, k4, k7, k8, k10, k12, k14, k16a, k18a) = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let (k1_v21, k1_v23, k1_v24) = (1.0, 1.0, 1.0);

        let k6w = v[col::K6W] * k7;
        let k6 = if experiment.mutant.knocks_out_pls() {
            0.0
        } else if experiment.mutant == Mutant::PlsOx {
            v[col::K6M] * k6w
        } else {
            k6w
        };
        let k11w = v[col::K11W] * k10;
        let k11 = if experiment.mutant.ethylene_insensitive() {
            v[col::K11M] * k11w
        } else {
            k11w
        };

        Ok(RateConstants {
            k1: v[col::K1],
            k1a: v[col::K1A] * k2,
            k2,
            k2a: v[col::K2A] * k2,
            k2b: v[col::K2B],
            k2c: v[col::K2C],
            k3: v[col::K3] * k2,
            k3a: v[col::K3A] * k2,
            k3auxin: v[col::K3AUXIN],
            k4,
            k5: v[col::K5] * k4,
            k6,
            k6a: v[col::K6A],
            k7,
            k8,
            k9: v[col::K9] * k8,
            k10,
            k10a: v[col::K10A] * k10,
            k11,
            k12,
            k12a: v[col::K12A] * k12,
            k13: v[col::K13] * k12,
            k14,
            k15: v[col::K15] * k14,
            k16: K16_RATIO * k16a,
            k16a,
            k17: v[col::K17] * k16a,
            k18: v[col::K18],
            k18a,
            k19: v[col::K19] * k18a,
            k20a: v[col::K20A] * k1_v21,
            k20b: v[col::K20B],
            k20c: v[col::K20C],
            k1_v21,
            k22a: v[col::K22A] * k1_v23,
            k1_v23,
            k1_v24,
            k25a: v[col::K25A] * k1_v24,
            k25b: v[col::K25B],
            V_IAA: v[col::FEED_IAA] * k2 * (FEED_KM + 1.0),
            Km_IAA: FEED_KM,
            V_CK: v[col::FEED_CK] * k18a * (FEED_KM + 1.0),
            Km_CK: FEED_KM,
            V_ACC: v[col::FEED_ACC] * k12 * (FEED_KM + 1.0),
            Km_ACC: FEED_KM,
            lambda: DEFAULT_LAMBDA,
        })
    }

    /// Checks positivity, the k16/k16a constraint and the lambda range.
    pub fn validate(&self, experiment: ExperimentSpec) -> Result<()> {
        for (name, value) in self.named() {
            let ok = if name == "k6" && experiment.mutant.knocks_out_pls() {
                value == 0.0
            } else {
                value > 0.0 && value.is_finite()
            };
            if !ok {
                return Err(Error::Domain(format!(
                    "rate constant {name} = {value} invalid for {experiment}"
                )));
            }
        }
        if (self.k16 - K16_RATIO * self.k16a).abs() > 1e-15 * self.k16a {
            return Err(Error::Domain("k16 must equal 0.3 * k16a".into()));
        }
        if !(2.0..=16.0).contains(&self.lambda) {
            return Err(Error::Domain(format!(
                "lambda = {} outside [2, 16]",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Name / value pairs of every rate constant (excluding lambda).
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("k1", self.k1),
            ("k1a", self.k1a),
            ("k2", self.k2),
            ("k2a", self.k2a),
            ("k2b", self.k2b),
            ("k2c", self.k2c),
            ("k3", self.k3),
            ("k3a", self.k3a),
            ("k3auxin", self.k3auxin),
            ("k4", self.k4),
            ("k5", self.k5),
            ("k6", self.k6),
            ("k6a", self.k6a),
            ("k7", self.k7),
            ("k8", self.k8),
            ("k9", self.k9),
            ("k10", self.k10),
            ("k10a", self.k10a),
            ("k11", self.k11),
            ("k12", self.k12),
            ("k12a", self.k12a),
            ("k13", self.k13),
            ("k14", self.k14),
            ("k15", self.k15),
            ("k16", self.k16),
            ("k16a", self.k16a),
            ("k17", self.k17),
            ("k18", self.k18),
            ("k18a", self.k18a),
            ("k19", self.k19),
            ("k20a", self.k20a),
            ("k20b", self.k20b),
            ("k20c", self.k20c),
            ("k1_v21", self.k1_v21),
            ("k22a", self.k22a),
            ("k1_v23", self.k1_v23),
            ("k1_v24", self.k1_v24),
            ("k25a", self.k25a),
            ("k25b", self.k25b),
            ("V_IAA", self.V_IAA),
            ("Km_IAA", self.Km_IAA),
            ("V_CK", self.V_CK),
            ("Km_CK", self.Km_CK),
            ("V_ACC", self.V_ACC),
            ("Km_ACC", self.Km_ACC),
        ]
    }
}

/// Maps a scaled parameter point onto rate constants for one experiment.
pub fn to_rate_constants(
    table: &ParameterTable,
    coords: &[f64],
    experiment: ExperimentSpec,
) -> Result<RateConstants> {
    let natural = table.to_natural(coords)?;
    RateConstants::from_natural(&natural, experiment)
}
