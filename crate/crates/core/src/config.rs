use serde_json::{json, Value};

use crate::error::{EngineError, Result};

/// Truncation bounds shared by every computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Λ₊ filtration order: `Λ₊^{D+1} = 0`.
    pub d: u32,
    /// Order of `u`-series.
    pub e: i64,
    /// Sequence length.
    pub r: u32,
    /// Largest root-of-unity order checked.
    pub m_max: u32,
    /// Novikov degree bound.
    pub g: u32,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { d: 3, e: 10, r: 6, m_max: 4, g: 2, seed: 1 }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.e < 1 || self.r < 1 || self.m_max < 1 || self.g < 1 {
            return Err(EngineError::Precondition("all bounds must be at least 1".into()));
        }
        if self.e < self.d as i64 + 2 {
            return Err(EngineError::Precondition(format!("E = {} must be at least D + 2 = {}", self.e, self.d + 2)));
        }
        Ok(())
    }

    /// Rows of the check window: `r ≤ max(1, ⌊R / M_max⌋)`, every `m ≤ M_max`.
    pub fn window_rows(&self) -> u32 {
        (self.r / self.m_max).max(1)
    }

    pub fn to_json(&self) -> Value {
        json!({"D": self.d, "E": self.e, "R": self.r, "M_max": self.m_max, "G": self.g, "seed": self.seed})
    }

    /// Reads the keys present in `v`, keeping the current values for the rest.
    pub fn merge_json(&mut self, v: &Value) -> Result<()> {
        let obj = v.as_object().ok_or_else(|| EngineError::Parse("config must be an object".into()))?;
        for (k, val) in obj {
            let n = val.as_u64().ok_or_else(|| EngineError::Parse(format!("config key {k} must be a non-negative integer")))?;
            match k.as_str() {
                "D" => self.d = n as u32,
                "E" => self.e = n as i64,
                "R" => self.r = n as u32,
                "M_max" | "M-max" => self.m_max = n as u32,
                "G" => self.g = n as u32,
                "seed" => self.seed = n,
                _ => return Err(EngineError::Parse(format!("unknown config key {k}"))),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(EngineConfig::default().validate().is_ok());
        assert!(EngineConfig { e: 4, ..Default::default() }.validate().is_err());
        assert!(EngineConfig { r: 0, ..Default::default() }.validate().is_err());
        let mut c = EngineConfig::default();
        c.merge_json(&json!({"D": 2, "M_max": 3})).unwrap();
        assert_eq!((c.d, c.m_max, c.e), (2, 3, 10));
        assert_eq!(c.window_rows(), 2);
    }
}
