//! Per-mode 3-tap prediction weights in 1/64 fixed point.

use crate::modes::MODE_COUNT;
use crate::{Error, Result};

/// Fixed-point scale of the 3-tap weights: weights of one mode sum to 64.
pub const WEIGHT_SCALE: i32 = 64;

/// Component range accepted by table validation. Negative weights are legal
/// (least-squares fits produce them); prediction output is clipped instead.
pub const WEIGHT_MIN: i32 = -128;
pub const WEIGHT_MAX: i32 = 192;

/// Range storable in a bitstream header (offset-encoded as value + 128).
pub const WIRE_MIN: i32 = -128;
pub const WIRE_MAX: i32 = 127;

/// Integer 3-tap weights `(rho1, rho2, rho3)` in units of 1/64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightSet {
    pub rho1: i32,
    pub rho2: i32,
    pub rho3: i32,
}

impl WeightSet {
    pub const fn new(rho1: i32, rho2: i32, rho3: i32) -> WeightSet {
        WeightSet { rho1, rho2, rho3 }
    }

    #[inline]
    pub fn sum(&self) -> i32 {
        self.rho1 + self.rho2 + self.rho3
    }

    pub fn components(&self) -> [i32; 3] {
        [self.rho1, self.rho2, self.rho3]
    }

    pub fn from_components(c: [i32; 3]) -> WeightSet {
        WeightSet::new(c[0], c[1], c[2])
    }

    /// Sum-to-64 and component-range check used by table validation.
    pub fn validate(&self) -> Result<()> {
        if self.sum() != WEIGHT_SCALE {
            return Err(Error::BadWeightTable(format!(
                "weights {:?} sum to {} (expected {WEIGHT_SCALE})",
                self.components(),
                self.sum()
            )));
        }
        for c in self.components() {
            if !(WEIGHT_MIN..=WEIGHT_MAX).contains(&c) {
                return Err(Error::BadWeightTable(format!(
                    "weight component {c} outside [{WEIGHT_MIN}, {WEIGHT_MAX}]"
                )));
            }
        }
        Ok(())
    }

    /// True when every component fits the bitstream's signed-byte encoding.
    pub fn storable(&self) -> bool {
        self.components()
            .iter()
            .all(|c| (WIRE_MIN..=WIRE_MAX).contains(c))
    }
}

/// One `WeightSet` per intra mode, indexed by mode id 0..=34.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightTable {
    sets: [WeightSet; MODE_COUNT],
}

impl WeightTable {
    pub fn new(sets: [WeightSet; MODE_COUNT]) -> WeightTable {
        WeightTable { sets }
    }

    pub fn uniform(set: WeightSet) -> WeightTable {
        WeightTable {
            sets: [set; MODE_COUNT],
        }
    }

    #[inline]
    pub fn get(&self, mode_id: u8) -> WeightSet {
        self.sets[mode_id as usize]
    }

    pub fn set(&mut self, mode_id: u8, w: WeightSet) {
        self.sets[mode_id as usize] = w;
    }

    pub fn validate(&self) -> Result<()> {
        for (mode, w) in self.sets.iter().enumerate() {
            w.validate().map_err(|e| {
                Error::BadWeightTable(format!("mode {mode}: {e}"))
            })?;
        }
        Ok(())
    }

    /// Serializes the table in the text format: one `mode rho1 rho2 rho3`
    /// line per mode, decimal integers.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# mode rho1 rho2 rho3\n");
        for (mode, w) in self.sets.iter().enumerate() {
            out.push_str(&format!("{} {} {} {}\n", mode, w.rho1, w.rho2, w.rho3));
        }
        out
    }

    /// Parses the text format. `#` comment lines and blank lines are skipped.
    /// Every mode 0..=34 must appear exactly once and satisfy sum-to-64.
    pub fn from_text(text: &str) -> Result<WeightTable> {
        let mut seen = [false; MODE_COUNT];
        let mut sets = [WeightSet::new(64, 0, 0); MODE_COUNT];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::BadWeightTable(format!(
                    "line {}: expected 'mode rho1 rho2 rho3'",
                    lineno + 1
                )));
            }
            let nums: Vec<i64> = fields
                .iter()
                .map(|f| f.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::BadWeightTable(format!("line {}: non-integer field", lineno + 1))
                })?;
            let mode = nums[0];
            if !(0..MODE_COUNT as i64).contains(&mode) {
                return Err(Error::BadWeightTable(format!(
                    "line {}: mode {mode} out of range",
                    lineno + 1
                )));
            }
            let mode = mode as usize;
            if seen[mode] {
                return Err(Error::BadWeightTable(format!(
                    "line {}: duplicate mode {mode}",
                    lineno + 1
                )));
            }
            seen[mode] = true;
            sets[mode] = WeightSet::new(nums[1] as i32, nums[2] as i32, nums[3] as i32);
        }
        for (mode, present) in seen.iter().enumerate() {
            if !present {
                return Err(Error::BadWeightTable(format!("missing mode {mode}")));
            }
        }
        let table = WeightTable::new(sets);
        table.validate()?;
        Ok(table)
    }
}
