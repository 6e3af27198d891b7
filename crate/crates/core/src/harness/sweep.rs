use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::TimingParam;
use crate::kernel::Netlist;
use crate::time::SimTime;

use super::{HarnessError, Prepared, Scenario};

fn default_range() -> u32 {
    30
}

fn default_step() -> u32 {
    5
}

/// One-at-a-time timing perturbation over a set of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSweepSpec {
    pub schema: u32,
    /// Scenario files, relative to the spec file.
    pub scenarios: Vec<String>,
    /// Parameter names such as `merger.dead_time`; empty means all.
    #[serde(default)]
    pub parameters: Vec<String>,
    #[serde(default = "default_range")]
    pub range_percent: u32,
    #[serde(default = "default_step")]
    pub step_percent: u32,
    /// Replace a parameter everywhere before sweeping, in picoseconds.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl MarginSweepSpec {
    pub fn scenario_paths(&self, spec_path: &Path) -> Vec<PathBuf> {
        let base = spec_path.parent().unwrap_or(Path::new("."));
        self.scenarios.iter().map(|s| base.join(s)).collect()
    }

    fn param(name: &str) -> Result<TimingParam, HarnessError> {
        TimingParam::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = TimingParam::ALL.iter().map(|p| p.name()).collect();
            HarnessError::Invalid(format!("unknown timing parameter `{name}`; known: {}", known.join(", ")))
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.scenarios.is_empty() {
            return Err(HarnessError::Invalid("a sweep needs at least one scenario".into()));
        }
        if self.step_percent == 0 || !self.range_percent.is_multiple_of(self.step_percent) {
            return Err(HarnessError::Invalid(format!(
                "range {}% is not a whole number of {}% steps",
                self.range_percent, self.step_percent
            )));
        }
        if self.range_percent >= 100 {
            return Err(HarnessError::Invalid("range must stay below 100%".into()));
        }
        for p in &self.parameters {
            Self::param(p)?;
        }
        for (p, &v) in &self.overrides {
            Self::param(p)?;
            if SimTime::from_ps_f64(v).is_none() {
                return Err(HarnessError::Invalid(format!("override `{p}`: invalid time {v} ps")));
            }
        }
        Ok(())
    }

    fn selected(&self) -> Vec<TimingParam> {
        if self.parameters.is_empty() {
            TimingParam::ALL.to_vec()
        } else {
            self.parameters.iter().map(|p| TimingParam::from_name(p).expect("validated")).collect()
        }
    }

    fn percents(&self) -> Vec<i32> {
        let r = self.range_percent as i32;
        (-r..=r).step_by(self.step_percent as usize).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub percent: i32,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamMargin {
    pub parameter: String,
    /// Whether any swept circuit has this parameter at all.
    pub present: bool,
    pub points: Vec<SweepPoint>,
    /// Widest symmetric deviation around nominal at which every point passes.
    pub margin_percent: u32,
    pub below_25: bool,
    pub below_20: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenarios: Vec<String>,
    pub range_percent: u32,
    pub step_percent: u32,
    /// All scenarios meet their expectations with no perturbation.
    pub nominal_pass: bool,
    pub parameters: Vec<ParamMargin>,
    /// Present parameters with a margin under 25%.
    pub below_25: Vec<String>,
    /// Present parameters with a margin under 20%.
    pub below_20: Vec<String>,
}

impl SweepReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>8}  flags", "parameter", "margin");
        for p in &self.parameters {
            let mut flags = Vec::new();
            if !p.present {
                flags.push("unused");
            }
            if p.below_25 {
                flags.push("<25%");
            }
            if p.below_20 {
                flags.push("<20%");
            }
            let _ = writeln!(s, "{:<18} {:>7}%  {}", p.parameter, p.margin_percent, flags.join(" "));
        }
        let _ = writeln!(s, "nominal: {}", if self.nominal_pass { "pass" } else { "FAIL" });
        s
    }
}

fn retimed(base: &Netlist, edits: &[(TimingParam, SimTime)], scale: Option<(TimingParam, i32)>) -> Netlist {
    let mut n = base.clone();
    for inst in n.cells_mut() {
        for &(param, value) in edits {
            inst.cell.retime(param, |_| value);
        }
        if let Some((param, pct)) = scale {
            inst.cell.retime(param, |t| t.scale_percent((100 + pct) as u64));
        }
    }
    n
}

struct Case {
    prepared: Prepared,
    reference: Vec<String>,
}

impl Case {
    fn passes(&self, netlist: Netlist) -> bool {
        match self.prepared.execute_on(netlist) {
            Ok(out) => out.passed() && self.prepared.port_order(&out.trace) == self.reference,
            Err(_) => false,
        }
    }
}

/// Perturbs one parameter at a time across every cell that has it and
/// checks each scenario against its own expectations and its nominal
/// port-level pulse order.
pub fn margin_sweep(spec: &MarginSweepSpec, spec_path: &Path) -> Result<SweepReport, HarnessError> {
    spec.validate()?;
    let mut cases = Vec::new();
    for path in spec.scenario_paths(spec_path) {
        let prepared = Scenario::load(&path)?.prepare()?;
        let nominal = prepared.execute()?;
        let reference = prepared.port_order(&nominal.trace);
        cases.push(Case { prepared, reference });
    }

    let overrides: Vec<(TimingParam, SimTime)> = spec
        .overrides
        .iter()
        .map(|(p, &v)| (TimingParam::from_name(p).expect("validated"), SimTime::from_ps_f64(v).expect("validated")))
        .collect();
    let base_netlists: Vec<Netlist> = cases.iter().map(|c| retimed(&c.prepared.netlist, &overrides, None)).collect();

    let nominal_pass = cases.iter().zip(&base_netlists).all(|(c, n)| c.passes(n.clone()));

    let params = spec.selected();
    let percents = spec.percents();
    let jobs: Vec<(TimingParam, i32)> = params.iter().flat_map(|&p| percents.iter().map(move |&pc| (p, pc))).collect();
    let results: Vec<bool> = jobs
        .par_iter()
        .map(|&(param, pct)| cases.iter().zip(&base_netlists).all(|(c, n)| c.passes(retimed(n, &[], Some((param, pct))))))
        .collect();

    let mut parameters = Vec::new();
    for (i, &param) in params.iter().enumerate() {
        let row = &results[i * percents.len()..(i + 1) * percents.len()];
        let points: Vec<SweepPoint> = percents.iter().zip(row).map(|(&percent, &pass)| SweepPoint { percent, pass }).collect();
        let margin_percent = percents
            .iter()
            .filter(|&&p| p >= 0)
            .take_while(|&&p| points.iter().filter(|pt| pt.percent.abs() <= p).all(|pt| pt.pass))
            .last()
            .map_or(0, |&p| p as u32);
        let zero_passes = points.iter().any(|pt| pt.percent == 0 && pt.pass);
        let present = base_netlists.iter().any(|n| n.cells().iter().any(|c| c.cell.has_param(param)));
        let margin_percent = if zero_passes { margin_percent } else { 0 };
        parameters.push(ParamMargin {
            parameter: param.name().to_string(),
            present,
            points,
            margin_percent,
            below_25: present && margin_percent < 25,
            below_20: present && margin_percent < 20,
        });
    }
    let below_25 = parameters.iter().filter(|p| p.below_25).map(|p| p.parameter.clone()).collect();
    let below_20 = parameters.iter().filter(|p| p.below_20).map(|p| p.parameter.clone()).collect();
    Ok(SweepReport {
        scenarios: spec.scenarios.clone(),
        range_percent: spec.range_percent,
        step_percent: spec.step_percent,
        nominal_pass,
        parameters,
        below_25,
        below_20,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let mut s = MarginSweepSpec {
            schema: 1,
            scenarios: vec!["a.toml".into()],
            parameters: vec![],
            range_percent: 30,
            step_percent: 5,
            overrides: BTreeMap::new(),
        };
        assert!(s.validate().is_ok());
        assert_eq!(s.percents().len(), 13);
        s.step_percent = 7;
        assert!(s.validate().is_err());
        s.step_percent = 5;
        s.parameters = vec!["bogus".into()];
        assert!(s.validate().is_err());
    }
}
