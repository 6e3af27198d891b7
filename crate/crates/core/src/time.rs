//! Integer simulation time.
//!
//! All simulated time is kept in femtoseconds so that picosecond-scale cell
//! delays and sub-picosecond clock periods (333,333 fs for 3 GHz) stay exact.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Femtoseconds per picosecond.
pub const FS_PER_PS: u64 = 1_000;

/// A point in (or span of) simulated time, in femtoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_fs(fs: u64) -> Self {
        SimTime(fs)
    }

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps * FS_PER_PS)
    }

    /// Converts a (possibly fractional) picosecond value, rounding to the
    /// nearest femtosecond. Negative and non-finite inputs are rejected.
    pub fn from_ps_f64(ps: f64) -> Option<Self> {
        if !ps.is_finite() || ps < 0.0 {
            return None;
        }
        let fs = (ps * FS_PER_PS as f64).round();
        if fs > u64::MAX as f64 {
            return None;
        }
        Some(SimTime(fs as u64))
    }

    pub const fn as_fs(self) -> u64 {
        self.0
    }

    pub fn as_ps_f64(self) -> f64 {
        self.0 as f64 / FS_PER_PS as f64
    }

    pub fn checked_add(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_add(rhs.0).map(SimTime)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    /// Multiplies by an integer count (e.g. `interval * pulses`).
    pub fn times(self, n: u64) -> SimTime {
        SimTime(self.0 * n)
    }

    /// Scales by `percent` / 100, rounding half up. Used for margin sweeps.
    pub fn scale_percent(self, percent: u64) -> SimTime {
        SimTime((self.0 * percent + 50) / 100)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps = self.0 / FS_PER_PS;
        let frac = self.0 % FS_PER_PS;
        if frac == 0 {
            write!(f, "{ps} ps")
        } else {
            write!(f, "{ps}.{frac:03} ps")
        }
    }
}

/// Serde adapter: times in files are written in picoseconds.
pub mod ps {
    use super::*;

    pub fn serialize<S: Serializer>(t: &SimTime, s: S) -> Result<S::Ok, S::Error> {
        if t.0.is_multiple_of(FS_PER_PS) {
            s.serialize_u64(t.0 / FS_PER_PS)
        } else {
            s.serialize_f64(t.as_ps_f64())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SimTime, D::Error> {
        let raw = f64::deserialize(d)?;
        SimTime::from_ps_f64(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid time {raw} ps")))
    }
}

/// Serde adapter for optional picosecond times.
pub mod ps_opt {
    use super::*;

    pub fn serialize<S: Serializer>(t: &Option<SimTime>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => super::ps::serialize(t, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<SimTime>, D::Error> {
        let raw = Option::<f64>::deserialize(d)?;
        raw.map(|ps| {
            SimTime::from_ps_f64(ps)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid time {ps} ps")))
        })
        .transpose()
    }
}

/// Serde adapter for lists of picosecond times.
pub mod ps_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[SimTime], s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for t in v {
            seq.serialize_element(&PsValue(*t))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SimTime>, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        raw.into_iter()
            .map(|ps| {
                SimTime::from_ps_f64(ps)
                    .ok_or_else(|| serde::de::Error::custom(format!("invalid time {ps} ps")))
            })
            .collect()
    }

    struct PsValue(SimTime);

    impl Serialize for PsValue {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::ps::serialize(&self.0, s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picoseconds_scale_to_femtoseconds() {
        assert_eq!(SimTime::from_ps(40).as_fs(), 40_000);
        assert_eq!(SimTime::from_ps_f64(333.333).unwrap().as_fs(), 333_333);
        assert_eq!(SimTime::from_ps_f64(-1.0), None);
        assert_eq!(SimTime::from_ps_f64(f64::NAN), None);
    }

    #[test]
    fn percent_scaling_rounds() {
        assert_eq!(SimTime::from_ps(8).scale_percent(125).as_fs(), 10_000);
        assert_eq!(SimTime::from_fs(3).scale_percent(50).as_fs(), 2);
    }

    #[test]
    fn display_keeps_fraction() {
        assert_eq!(SimTime::from_fs(333_333).to_string(), "333.333 ps");
        assert_eq!(SimTime::from_ps(5).to_string(), "5 ps");
    }
}
