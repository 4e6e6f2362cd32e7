//! Shared report types for the verification suites.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Serde adapter for extended reals: finite values serialize as numbers,
/// infinities as the strings `"inf"` / `"-inf"` (JSON has no infinity
/// literal and the default would silently become `null`).
pub mod ext_real {
    use serde::de::{self, Deserializer, Unexpected, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else if *value == f64::INFINITY {
            serializer.serialize_str("inf")
        } else if *value == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_str("nan")
        }
    }

    struct ExtRealVisitor;

    impl Visitor<'_> for ExtRealVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or \"inf\"/\"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, s: &str) -> Result<f64, E> {
            match s {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(de::Error::invalid_value(Unexpected::Str(s), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        deserializer.deserialize_any(ExtRealVisitor)
    }
}

/// Identifier of a property check.
///
/// `A*` checks apply to simple risk statistics, `B*` to clustering
/// functions, `C*` to complex risk statistics; the remaining identifiers
/// cover acceptance-set properties, level-set constancy of the composed
/// statistic, and weak duality of sampled dual pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckId {
    A1,
    A2,
    B1,
    B2,
    B3,
    C1,
    C2,
    C3,
    SetConvexity,
    SetFMonotonicity,
    SetBMonotonicity,
    LevelSets,
    WeakDuality,
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckId::A1 => "A1",
            CheckId::A2 => "A2",
            CheckId::B1 => "B1",
            CheckId::B2 => "B2",
            CheckId::B3 => "B3",
            CheckId::C1 => "C1",
            CheckId::C2 => "C2",
            CheckId::C3 => "C3",
            CheckId::SetConvexity => "SetConvexity",
            CheckId::SetFMonotonicity => "SetFMonotonicity",
            CheckId::SetBMonotonicity => "SetBMonotonicity",
            CheckId::LevelSets => "LevelSets",
            CheckId::WeakDuality => "WeakDuality",
        };
        f.write_str(s)
    }
}

/// Outcome of a sampled property check.
///
/// A trial is a *violation* when its inequality fails by more than
/// `tolerance`; trials whose premises cannot be realized (unavailable
/// witness sections, infinite targets) are *skipped*, not violated.
/// `worst_margin` is the largest observed `lhs - rhs` over evaluated
/// trials (negative values mean the inequality held with room), `0.0`
/// when nothing was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    #[serde(rename = "axiom")]
    pub check: CheckId,
    pub trials: u64,
    pub violations: u64,
    pub skipped: u64,
    #[serde(with = "ext_real")]
    pub worst_margin: f64,
    pub seed: u64,
    pub tolerance: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Number of trials that actually evaluated their inequality.
    pub fn evaluated(&self) -> u64 {
        self.trials - self.skipped
    }
}

/// Accumulator used by the suites to build an [`AxiomReport`].
#[derive(Debug)]
pub(crate) struct ReportBuilder {
    check: CheckId,
    trials: u64,
    violations: u64,
    skipped: u64,
    worst_margin: f64,
    seed: u64,
    tolerance: f64,
    evaluated: u64,
}

impl ReportBuilder {
    pub(crate) fn new(check: CheckId, seed: u64, tolerance: f64) -> Self {
        Self {
            check,
            trials: 0,
            violations: 0,
            skipped: 0,
            worst_margin: 0.0,
            seed,
            tolerance,
            evaluated: 0,
        }
    }

    /// Records one evaluated trial with margin `lhs - rhs`.
    pub(crate) fn record(&mut self, margin: f64) {
        self.trials += 1;
        if self.evaluated == 0 || margin > self.worst_margin {
            self.worst_margin = margin;
        }
        self.evaluated += 1;
        if margin > self.tolerance {
            self.violations += 1;
        }
    }

    pub(crate) fn skip(&mut self) {
        self.trials += 1;
        self.skipped += 1;
    }

    pub(crate) fn finish(self) -> AxiomReport {
        AxiomReport {
            check: self.check,
            trials: self.trials,
            violations: self.violations,
            skipped: self.skipped,
            worst_margin: self.worst_margin,
            seed: self.seed,
            tolerance: self.tolerance,
        }
    }
}
