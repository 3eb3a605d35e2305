//! Reference experiment grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DeltaRule, ExperimentSpec, DEFAULT_MAX_ROUNDS};
use crate::analytics::ThresholdRegime;
use crate::dynamics::ModelVariant;
use crate::error::{Error, Result};
use crate::graph::BlockParams;

/// Reference grids.
///
/// * `T1`, `T2`, `T3`: Markovian, `p = 0.5`, `q = 0.3`, `n` from 50 to 250,
///   with `delta = 1`, `ceil(ln n)` and `ceil(n / 10)`.
/// * `T4`: non-Markovian, `n = 500`, `p = 1`, `q = 0.3`, bias from `L`.
/// * `T5`: non-Markovian, `n = 500`, `p = 0.5`, `q = 0.3`, bias from `L`.
/// * `T6`: the `T5` grid under a second name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl TableId {
    pub const ALL: [TableId; 6] = [
        TableId::T1,
        TableId::T2,
        TableId::T3,
        TableId::T4,
        TableId::T5,
        TableId::T6,
    ];
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownTable(s.to_string()))
    }
}

pub const MARKOVIAN_NS: [u64; 8] = [50, 100, 125, 150, 175, 200, 225, 250];
pub const UNIT_P_LS: [f64; 12] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 2.7, 2.788, 2.8, 3.0, 3.5, 4.0];
pub const HALF_P_LS: [f64; 10] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 2.582, 2.6, 3.0, 4.0];
pub const NON_MARKOVIAN_N: u64 = 500;

/// The experiments of a table, in row order.
pub fn table_specs(table: TableId, replicates: u64, master_seed: u64) -> Result<Vec<ExperimentSpec>> {
    let markovian = |delta: fn(u64) -> i64| -> Result<Vec<ExperimentSpec>> {
        let params = BlockParams::new(0.5, 0.3)?;
        Ok(MARKOVIAN_NS
            .iter()
            .map(|&n| ExperimentSpec {
                variant: ModelVariant::Markovian,
                n,
                delta_rule: DeltaRule::Explicit(delta(n)),
                params,
                replicates,
                max_rounds: DEFAULT_MAX_ROUNDS,
                master_seed,
            })
            .collect())
    };
    let scanned = |p: f64, ls: &[f64]| -> Result<Vec<ExperimentSpec>> {
        let params = BlockParams::new(p, 0.3)?;
        Ok(ls
            .iter()
            .map(|&l| ExperimentSpec {
                variant: ModelVariant::NonMarkovian,
                n: NON_MARKOVIAN_N,
                delta_rule: DeltaRule::Threshold(ThresholdRegime::Experiment { l }),
                params,
                replicates,
                max_rounds: DEFAULT_MAX_ROUNDS,
                master_seed,
            })
            .collect())
    };
    match table {
        TableId::T1 => markovian(|_| 1),
        TableId::T2 => markovian(|n| (n as f64).ln().ceil() as i64),
        TableId::T3 => markovian(|n| n.div_ceil(10) as i64),
        TableId::T4 => scanned(1.0, &UNIT_P_LS),
        TableId::T5 | TableId::T6 => scanned(0.5, &HALF_P_LS),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deltas(t: TableId) -> Vec<i64> {
        table_specs(t, 1, 0)
            .unwrap()
            .iter()
            .map(|s| s.delta().unwrap())
            .collect()
    }

    #[test]
    fn parse_ids() {
        assert_eq!("t4".parse::<TableId>().unwrap(), TableId::T4);
        assert_eq!("T6".parse::<TableId>().unwrap(), TableId::T6);
        assert!(matches!("T7".parse::<TableId>(), Err(Error::UnknownTable(_))));
    }

    #[test]
    fn markovian_deltas() {
        assert_eq!(deltas(TableId::T1), vec![1; 8]);
        assert_eq!(deltas(TableId::T2), vec![4, 5, 5, 6, 6, 6, 6, 6]);
        assert_eq!(deltas(TableId::T3), vec![5, 10, 13, 15, 18, 20, 23, 25]);
    }

    #[test]
    fn scanned_deltas() {
        assert_eq!(
            deltas(TableId::T4),
            vec![1167, 1139, 1111, 1084, 1056, 1028, 1017, 1012, 1011, 1000, 972, 944]
        );
        assert_eq!(
            deltas(TableId::T6),
            vec![334, 306, 278, 250, 222, 194, 190, 189, 167, 111]
        );
        assert_eq!(deltas(TableId::T5), deltas(TableId::T6));
    }
}
