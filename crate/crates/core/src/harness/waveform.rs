use std::collections::BTreeMap;
use std::fmt::Write;

use clap::ValueEnum;

use crate::kernel::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaveFormat {
    /// Value change dump.
    #[value(alias = "vc")]
    Vcd,
    Csv,
}

impl WaveFormat {
    pub fn render(self, trace: &Trace) -> String {
        match self {
            WaveFormat::Vcd => to_vcd(trace),
            WaveFormat::Csv => to_csv(trace),
        }
    }
}

/// One row per pulse: `time_fs,wire`.
pub fn to_csv(trace: &Trace) -> String {
    trace.to_csv()
}

fn identifier(mut i: usize) -> String {
    // Printable ASCII from '!' to '~'.
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            return s;
        }
        i -= 1;
    }
}

/// Value change dump with a 1 fs timescale. Each pulse is a 1 fs high level.
/// An empty trace yields only the header.
pub fn to_vcd(trace: &Trace) -> String {
    let names = trace.wire_names();
    let mut out = String::new();
    out.push_str("$version sfqsim $end\n$timescale 1 fs $end\n$scope module top $end\n");
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(out, "$var wire 1 {} {} $end", identifier(i), name);
    }
    out.push_str("$upscope $end\n$enddefinitions $end\n");
    if trace.is_empty() {
        return out;
    }

    // time -> wire -> level; a rise overrides a fall at the same instant.
    let mut changes: BTreeMap<u64, BTreeMap<usize, bool>> = BTreeMap::new();
    for e in trace.events() {
        let t = e.time.as_fs();
        changes.entry(t).or_default().insert(e.wire.index(), true);
        changes.entry(t + 1).or_default().entry(e.wire.index()).or_insert(false);
    }
    out.push_str("#0\n$dumpvars\n");
    for i in 0..names.len() {
        let _ = writeln!(out, "0{}", identifier(i));
    }
    out.push_str("$end\n");
    let mut level = vec![false; names.len()];
    for (t, wires) in changes {
        let flips: Vec<(usize, bool)> = wires.into_iter().filter(|&(w, v)| level[w] != v || v).collect();
        if flips.is_empty() {
            continue;
        }
        let _ = writeln!(out, "#{t}");
        for (w, v) in flips {
            level[w] = v;
            let _ = writeln!(out, "{}{}", u8::from(v), identifier(w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::Cell;
    use crate::kernel::{Netlist, Simulator};
    use crate::time::SimTime;

    fn delay_trace(times: &[u64]) -> Trace {
        let mut n = Netlist::new();
        let a = n.add_input("in");
        let y = n.add_output("out");
        n.add_cell("d", Cell::delay(SimTime::from_ps(5)), &[a], &[y]);
        let mut sim = Simulator::new(n).unwrap();
        for &t in times {
            sim.inject("in", SimTime::from_ps(t)).unwrap();
        }
        sim.run_to_completion().unwrap()
    }

    #[test]
    fn identifiers_unique() {
        let ids: std::collections::HashSet<String> = (0..10_000).map(identifier).collect();
        assert_eq!(ids.len(), 10_000);
        assert_eq!(identifier(0), "!");
    }

    #[test]
    fn empty_trace_is_header_only() {
        let v = to_vcd(&delay_trace(&[]));
        assert!(v.contains("$timescale 1 fs $end"));
        assert!(v.contains("$var wire 1 ! in $end"));
        assert!(v.ends_with("$enddefinitions $end\n"));
        assert_eq!(to_csv(&delay_trace(&[])), "time_fs,wire\n");
    }

    #[test]
    fn csv_row() {
        assert!(to_csv(&delay_trace(&[5])).ends_with("10000,out\n"));
    }

    #[test]
    fn pulses_are_one_femtosecond_wide() {
        let v = to_vcd(&delay_trace(&[5]));
        assert!(v.contains("#5000\n1!\n#5001\n0!\n#10000\n1\"\n#10001\n0\"\n"), "{v}");
    }
}
