use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One excitation power with the parameters measured or assumed there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSweepRow {
    pub power_uw: f64,
    pub t2_ps: f64,
    pub pair_contrast_c0: f64,
    pub blink_off_rate: f64,
    pub blink_on_rate: f64,
    pub excitation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PowerSweepTable {
    pub rows: Vec<PowerSweepRow>,
}

impl PowerSweepTable {
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = csv.deserialize().collect::<std::result::Result<Vec<PowerSweepRow>, _>>()?;
        let table = PowerSweepTable { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Powers strictly increasing and every value in its physical range.
    /// Emitter-level checks happen when a row is applied to a configuration.
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::config("rows", "sweep table has no rows"));
        }
        for (i, w) in self.rows.windows(2).enumerate() {
            if !(w[1].power_uw > w[0].power_uw) {
                return Err(Error::config(
                    format!("rows[{}].power_uw", i + 1),
                    format!("powers must increase strictly ({} after {})", w[1].power_uw, w[0].power_uw),
                ));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            let path = |f: &str| format!("rows[{i}].{f}");
            let positive = [("power_uw", r.power_uw), ("t2_ps", r.t2_ps)];
            for (name, v) in positive {
                if !(v > 0.0) {
                    return Err(Error::config(path(name), format!("must be > 0, got {v}")));
                }
            }
            let non_negative =
                [("blink_off_rate", r.blink_off_rate), ("blink_on_rate", r.blink_on_rate), ("excitation_rate", r.excitation_rate)];
            for (name, v) in non_negative {
                if !(v >= 0.0) {
                    return Err(Error::config(path(name), format!("must be >= 0, got {v}")));
                }
            }
            if !(0.0..=1.0).contains(&r.pair_contrast_c0) {
                return Err(Error::config(path("pair_contrast_c0"), format!("must lie in [0, 1], got {}", r.pair_contrast_c0)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "power_uw,t2_ps,pair_contrast_c0,blink_off_rate,blink_on_rate,excitation_rate\n";

    #[test]
    fn parses_rows() {
        let text = format!("{HEADER}2.0, 600, 0.9, 1e-7, 1e-8, 1e-6\n4.6, 508, 0.8, 1e-7, 1e-8, 2e-6\n");
        let t = PowerSweepTable::from_reader(text.as_bytes()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].t2_ps, 508.0);
    }

    #[test]
    fn rejects_unsorted_powers() {
        let text = format!("{HEADER}4.6,508,0.8,0,0,1e-6\n2.0,600,0.9,0,0,1e-6\n");
        let err = PowerSweepTable::from_reader(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("rows[1].power_uw"), "{err}");
    }
}
