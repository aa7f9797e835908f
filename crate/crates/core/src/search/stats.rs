use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeStats {
    pub configurations: u64,
    pub cheap_evals: u64,
    pub full_evals: u64,
    pub pruned: u64,
}

impl TypeStats {
    fn add(&mut self, other: &TypeStats) {
        self.configurations += other.configurations;
        self.cheap_evals += other.cheap_evals;
        self.full_evals += other.full_evals;
        self.pruned += other.pruned;
    }
}

/// Evaluation counters. Single-tier modes count their only evaluation as full.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub cheap_evals: u64,
    pub full_evals: u64,
    pub pruned: u64,
    pub rejected_nonsimple: u64,
    pub per_type: BTreeMap<String, TypeStats>,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

impl SearchStats {
    pub(crate) fn record(&mut self, ty: &str, delta: &TypeStats) {
        self.cheap_evals += delta.cheap_evals;
        self.full_evals += delta.full_evals;
        self.pruned += delta.pruned;
        self.per_type.entry(ty.to_string()).or_default().add(delta);
    }

    #[cfg(feature = "parallel")]
    pub(crate) fn absorb(&mut self, other: SearchStats) {
        self.rejected_nonsimple += other.rejected_nonsimple;
        for (ty, s) in &other.per_type {
            self.record(ty, s);
        }
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(secs.max(0.0)))
    }
}
