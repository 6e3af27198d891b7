//! Behavioral SFQ cell models.
//!
//! Every cell is a passive state holder. The event kernel delivers a pulse on
//! one input port at a given time and the cell reports which output ports
//! fire and when. Pulses carry no amplitude or width; a pulse is a timestamp.

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Default timing for every cell type in the library.
///
/// One threshold adjustment (M-NDRO write, readout, arbiter path into the
/// threshold unit) sums to exactly 40 ps with these values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellTiming {
    #[serde(with = "crate::time::ps", rename = "delay_ps")]
    pub delay: SimTime,
    #[serde(with = "crate::time::ps", rename = "splitter_delay_ps")]
    pub splitter_delay: SimTime,
    #[serde(with = "crate::time::ps", rename = "merger_delay_ps")]
    pub merger_delay: SimTime,
    #[serde(with = "crate::time::ps", rename = "merger_dead_time_ps")]
    pub merger_dead_time: SimTime,
    #[serde(with = "crate::time::ps", rename = "and_delay_ps")]
    pub and_delay: SimTime,
    #[serde(with = "crate::time::ps", rename = "and_window_ps")]
    pub and_window: SimTime,
    #[serde(with = "crate::time::ps", rename = "rtff_delay_ps")]
    pub rtff_delay: SimTime,
    #[serde(with = "crate::time::ps", rename = "mndro_delay_ps")]
    pub mndro_delay: SimTime,
    #[serde(with = "crate::time::ps", rename = "mndro_interval_ps")]
    pub mndro_interval: SimTime,
    #[serde(with = "crate::time::ps", rename = "mndro_write_ps")]
    pub mndro_write: SimTime,
}

impl Default for CellTiming {
    fn default() -> Self {
        CellTiming {
            delay: SimTime::from_ps(5),
            splitter_delay: SimTime::from_ps(5),
            merger_delay: SimTime::from_ps(7),
            merger_dead_time: SimTime::from_ps(8),
            and_delay: SimTime::from_ps(7),
            and_window: SimTime::from_ps(8),
            rtff_delay: SimTime::from_ps(6),
            mndro_delay: SimTime::from_ps(11),
            mndro_interval: SimTime::from_ps(12),
            mndro_write: SimTime::from_ps(10),
        }
    }
}

impl CellTiming {
    /// Time from the first to the last pulse of a full M-NDRO readout.
    pub fn interval_span(&self, capacity: u32) -> SimTime {
        self.mndro_interval.times(u64::from(capacity.saturating_sub(1)))
    }

    /// Every field multiplied by `factor`. Pure-delay scaling keeps pulse
    /// counts unchanged and scales all latencies linearly.
    pub fn scaled(&self, factor: u64) -> CellTiming {
        CellTiming {
            delay: self.delay.times(factor),
            splitter_delay: self.splitter_delay.times(factor),
            merger_delay: self.merger_delay.times(factor),
            merger_dead_time: self.merger_dead_time.times(factor),
            and_delay: self.and_delay.times(factor),
            and_window: self.and_window.times(factor),
            rtff_delay: self.rtff_delay.times(factor),
            mndro_delay: self.mndro_delay.times(factor),
            mndro_interval: self.mndro_interval.times(factor),
            mndro_write: self.mndro_write.times(factor),
        }
    }
}

/// A timing field of one cell kind, addressable by name for margin sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimingParam {
    #[serde(rename = "delay.delay")]
    DelayDelay,
    #[serde(rename = "splitter.delay")]
    SplitterDelay,
    #[serde(rename = "merger.delay")]
    MergerDelay,
    #[serde(rename = "merger.dead_time")]
    MergerDeadTime,
    #[serde(rename = "and.delay")]
    AndDelay,
    #[serde(rename = "and.window")]
    AndWindow,
    #[serde(rename = "rtff.delay")]
    RtffDelay,
    #[serde(rename = "mndro.delay")]
    MndroDelay,
    #[serde(rename = "mndro.interval")]
    MndroInterval,
    #[serde(rename = "mndro.write")]
    MndroWrite,
}

impl TimingParam {
    pub const ALL: [TimingParam; 10] = [
        TimingParam::DelayDelay,
        TimingParam::SplitterDelay,
        TimingParam::MergerDelay,
        TimingParam::MergerDeadTime,
        TimingParam::AndDelay,
        TimingParam::AndWindow,
        TimingParam::RtffDelay,
        TimingParam::MndroDelay,
        TimingParam::MndroInterval,
        TimingParam::MndroWrite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimingParam::DelayDelay => "delay.delay",
            TimingParam::SplitterDelay => "splitter.delay",
            TimingParam::MergerDelay => "merger.delay",
            TimingParam::MergerDeadTime => "merger.dead_time",
            TimingParam::AndDelay => "and.delay",
            TimingParam::AndWindow => "and.window",
            TimingParam::RtffDelay => "rtff.delay",
            TimingParam::MndroDelay => "mndro.delay",
            TimingParam::MndroInterval => "mndro.interval",
            TimingParam::MndroWrite => "mndro.write",
        }
    }

    pub fn from_name(name: &str) -> Option<TimingParam> {
        TimingParam::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl std::fmt::Display for TimingParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An output pulse requested by a cell: (output port, emission time).
pub type Emission = (usize, SimTime);

/// JTL-like pure delay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayCell {
    pub delay: SimTime,
}

impl DelayCell {
    pub fn step(&self, at: SimTime, out: &mut Vec<Emission>) {
        out.push((0, at + self.delay));
    }
}

/// One input, two outputs; every input pulse appears on both outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitterCell {
    pub delay: SimTime,
}

impl SplitterCell {
    pub fn step(&self, at: SimTime, out: &mut Vec<Emission>) {
        out.push((0, at + self.delay));
        out.push((1, at + self.delay));
    }
}

/// Confluence buffer. A pulse arriving within `dead_time` of the last
/// accepted pulse (on either port) is absorbed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergerCell {
    pub delay: SimTime,
    pub dead_time: SimTime,
    last_accepted: Option<SimTime>,
}

impl MergerCell {
    pub fn new(delay: SimTime, dead_time: SimTime) -> Self {
        MergerCell { delay, dead_time, last_accepted: None }
    }

    pub fn step(&mut self, at: SimTime, out: &mut Vec<Emission>) {
        if let Some(last) = self.last_accepted {
            if at.saturating_sub(last) <= self.dead_time {
                return;
            }
        }
        self.last_accepted = Some(at);
        out.push((0, at + self.delay));
    }

    fn reset_state(&mut self) {
        self.last_accepted = None;
    }
}

/// Asynchronous coincidence AND. A pulse arms its side; a pulse on the
/// other side within `window` fires once and disarms both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceAndCell {
    pub delay: SimTime,
    pub window: SimTime,
    armed: [Option<SimTime>; 2],
}

impl CoincidenceAndCell {
    pub fn new(delay: SimTime, window: SimTime) -> Self {
        CoincidenceAndCell { delay, window, armed: [None, None] }
    }

    pub fn step(&mut self, port: usize, at: SimTime, out: &mut Vec<Emission>) {
        let other = 1 - port;
        match self.armed[other] {
            Some(t) if at.saturating_sub(t) <= self.window => {
                self.armed = [None, None];
                out.push((0, at + self.delay));
            }
            _ => self.armed[port] = Some(at),
        }
    }

    fn reset_state(&mut self) {
        self.armed = [None, None];
    }
}

/// Resettable toggle flip-flop states. `S1` is the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RtffState {
    #[default]
    S1,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtffSignal {
    Input,
    Reset,
}

/// The RTFF state table: returns the next state and whether a pulse is emitted.
pub fn rtff_step(state: RtffState, signal: RtffSignal) -> (RtffState, bool) {
    match (state, signal) {
        (_, RtffSignal::Reset) => (RtffState::S1, false),
        (RtffState::S1, RtffSignal::Input) => (RtffState::S2, false),
        (RtffState::S2, RtffSignal::Input) => (RtffState::S1, true),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtffCell {
    pub delay: SimTime,
    pub state: RtffState,
}

impl RtffCell {
    pub const INPUT: usize = 0;
    pub const RESET: usize = 1;

    pub fn new(delay: SimTime) -> Self {
        RtffCell { delay, state: RtffState::S1 }
    }

    pub fn step(&mut self, port: usize, at: SimTime, out: &mut Vec<Emission>) {
        let signal = if port == Self::RESET { RtffSignal::Reset } else { RtffSignal::Input };
        let (next, fire) = rtff_step(self.state, signal);
        self.state = next;
        if fire {
            out.push((0, at + self.delay));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MndroSignal {
    Increment,
    Decrement,
    Clock,
}

/// Saturating M-NDRO update: returns the new stored count and the number of
/// pulses the operation emits. Clocking never changes the stored count.
pub fn mndro_apply(stored: u32, capacity: u32, signal: MndroSignal) -> (u32, u32) {
    match signal {
        MndroSignal::Increment => ((stored + 1).min(capacity), 0),
        MndroSignal::Decrement => (stored.saturating_sub(1), 0),
        MndroSignal::Clock => (stored, stored),
    }
}

/// Multi-fluxon non-destructive readout storage.
///
/// Increments and decrements take effect `write_time` after they arrive. A
/// clock emits the stored count as a burst starting `delay` after the clock,
/// `interval` apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MndroCell {
    pub capacity: u32,
    pub delay: SimTime,
    pub interval: SimTime,
    pub write_time: SimTime,
    stored: u32,
    pending: Vec<(SimTime, MndroSignal)>,
}

impl MndroCell {
    pub const INCREMENT: usize = 0;
    pub const DECREMENT: usize = 1;
    pub const CLOCK: usize = 2;

    pub fn new(capacity: u32, delay: SimTime, interval: SimTime, write_time: SimTime) -> Self {
        MndroCell { capacity, delay, interval, write_time, stored: 0, pending: Vec::new() }
    }

    pub fn with_stored(mut self, stored: u32) -> Self {
        self.stored = stored.min(self.capacity);
        self
    }

    /// Stored count with every write that has completed by `now` applied.
    pub fn stored_at(&self, now: SimTime) -> u32 {
        self.pending
            .iter()
            .filter(|(t, _)| *t <= now)
            .fold(self.stored, |s, (_, sig)| mndro_apply(s, self.capacity, *sig).0)
    }

    /// Stored count once all in-flight writes complete.
    pub fn stored_settled(&self) -> u32 {
        self.stored_at(SimTime::MAX)
    }

    fn settle(&mut self, now: SimTime) {
        let capacity = self.capacity;
        let mut stored = self.stored;
        self.pending.retain(|(t, sig)| {
            if *t <= now {
                stored = mndro_apply(stored, capacity, *sig).0;
                false
            } else {
                true
            }
        });
        self.stored = stored;
    }

    pub fn step(&mut self, port: usize, at: SimTime, out: &mut Vec<Emission>) {
        let signal = match port {
            Self::INCREMENT => MndroSignal::Increment,
            Self::DECREMENT => MndroSignal::Decrement,
            _ => MndroSignal::Clock,
        };
        match signal {
            MndroSignal::Clock => {
                self.settle(at);
                let (_, pulses) = mndro_apply(self.stored, self.capacity, signal);
                for i in 0..u64::from(pulses) {
                    out.push((0, at + self.delay + self.interval.times(i)));
                }
            }
            _ => {
                // Writes complete in arrival order, so the list stays sorted.
                self.pending.push((at + self.write_time, signal));
            }
        }
    }
}

/// A behavioral cell with its internal state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Delay(DelayCell),
    Splitter(SplitterCell),
    Merger(MergerCell),
    And(CoincidenceAndCell),
    Rtff(RtffCell),
    Mndro(MndroCell),
}

impl Cell {
    pub fn delay(delay: SimTime) -> Cell {
        Cell::Delay(DelayCell { delay })
    }

    pub fn splitter(delay: SimTime) -> Cell {
        Cell::Splitter(SplitterCell { delay })
    }

    pub fn merger(delay: SimTime, dead_time: SimTime) -> Cell {
        Cell::Merger(MergerCell::new(delay, dead_time))
    }

    pub fn and(delay: SimTime, window: SimTime) -> Cell {
        Cell::And(CoincidenceAndCell::new(delay, window))
    }

    pub fn rtff(delay: SimTime) -> Cell {
        Cell::Rtff(RtffCell::new(delay))
    }

    pub fn mndro(capacity: u32, delay: SimTime, interval: SimTime, write_time: SimTime) -> Cell {
        Cell::Mndro(MndroCell::new(capacity, delay, interval, write_time))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Cell::Delay(_) => "delay",
            Cell::Splitter(_) => "splitter",
            Cell::Merger(_) => "merger",
            Cell::And(_) => "and",
            Cell::Rtff(_) => "rtff",
            Cell::Mndro(_) => "mndro",
        }
    }

    pub fn input_ports(&self) -> &'static [&'static str] {
        match self {
            Cell::Delay(_) | Cell::Splitter(_) => &["in"],
            Cell::Merger(_) | Cell::And(_) => &["a", "b"],
            Cell::Rtff(_) => &["in", "reset"],
            Cell::Mndro(_) => &["inc", "dec", "clk"],
        }
    }

    pub fn output_ports(&self) -> &'static [&'static str] {
        match self {
            Cell::Splitter(_) => &["out0", "out1"],
            _ => &["out"],
        }
    }

    /// Smallest input-to-output latency of the cell.
    pub fn min_delay(&self) -> SimTime {
        match self {
            Cell::Delay(c) => c.delay,
            Cell::Splitter(c) => c.delay,
            Cell::Merger(c) => c.delay,
            Cell::And(c) => c.delay,
            Cell::Rtff(c) => c.delay,
            Cell::Mndro(c) => c.delay,
        }
    }

    /// Delivers one pulse on input `port` at time `at`.
    pub fn on_pulse(&mut self, port: usize, at: SimTime, out: &mut Vec<Emission>) {
        match self {
            Cell::Delay(c) => c.step(at, out),
            Cell::Splitter(c) => c.step(at, out),
            Cell::Merger(c) => c.step(at, out),
            Cell::And(c) => c.step(port, at, out),
            Cell::Rtff(c) => c.step(port, at, out),
            Cell::Mndro(c) => c.step(port, at, out),
        }
    }

    /// Clears dynamic state (arming, dead-window history, RTFF state) but
    /// keeps M-NDRO contents, which are configuration rather than history.
    pub fn clear_transients(&mut self) {
        match self {
            Cell::Merger(c) => c.reset_state(),
            Cell::And(c) => c.reset_state(),
            Cell::Rtff(c) => c.state = RtffState::S1,
            _ => {}
        }
    }

    /// Applies a timing transform to the field named by `param`, if this
    /// cell has it.
    pub fn retime(&mut self, param: TimingParam, f: impl Fn(SimTime) -> SimTime) {
        match (self, param) {
            (Cell::Delay(c), TimingParam::DelayDelay) => c.delay = f(c.delay),
            (Cell::Splitter(c), TimingParam::SplitterDelay) => c.delay = f(c.delay),
            (Cell::Merger(c), TimingParam::MergerDelay) => c.delay = f(c.delay),
            (Cell::Merger(c), TimingParam::MergerDeadTime) => c.dead_time = f(c.dead_time),
            (Cell::And(c), TimingParam::AndDelay) => c.delay = f(c.delay),
            (Cell::And(c), TimingParam::AndWindow) => c.window = f(c.window),
            (Cell::Rtff(c), TimingParam::RtffDelay) => c.delay = f(c.delay),
            (Cell::Mndro(c), TimingParam::MndroDelay) => c.delay = f(c.delay),
            (Cell::Mndro(c), TimingParam::MndroInterval) => c.interval = f(c.interval),
            (Cell::Mndro(c), TimingParam::MndroWrite) => c.write_time = f(c.write_time),
            _ => {}
        }
    }

    /// Whether the cell carries the field named by `param`.
    pub fn has_param(&self, param: TimingParam) -> bool {
        matches!(
            (self, param),
            (Cell::Delay(_), TimingParam::DelayDelay)
                | (Cell::Splitter(_), TimingParam::SplitterDelay)
                | (Cell::Merger(_), TimingParam::MergerDelay | TimingParam::MergerDeadTime)
                | (Cell::And(_), TimingParam::AndDelay | TimingParam::AndWindow)
                | (Cell::Rtff(_), TimingParam::RtffDelay)
                | (
                    Cell::Mndro(_),
                    TimingParam::MndroDelay | TimingParam::MndroInterval | TimingParam::MndroWrite
                )
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: u64) -> SimTime {
        SimTime::from_ps(v)
    }

    #[test]
    fn rtff_table() {
        assert_eq!(rtff_step(RtffState::S1, RtffSignal::Input), (RtffState::S2, false));
        assert_eq!(rtff_step(RtffState::S2, RtffSignal::Input), (RtffState::S1, true));
        assert_eq!(rtff_step(RtffState::S2, RtffSignal::Reset), (RtffState::S1, false));
        assert_eq!(rtff_step(RtffState::S1, RtffSignal::Reset), (RtffState::S1, false));
    }

    #[test]
    fn rtff_divides_by_two() {
        for n in 0..=64u32 {
            let mut cell = RtffCell::new(ps(6));
            let mut out = Vec::new();
            for i in 0..n {
                cell.step(RtffCell::INPUT, ps(10 * u64::from(i)), &mut out);
            }
            assert_eq!(out.len() as u32, n / 2, "n = {n}");
        }
    }

    #[test]
    fn mndro_saturates_and_reads_nondestructively() {
        assert_eq!(mndro_apply(0, 3, MndroSignal::Decrement), (0, 0));
        assert_eq!(mndro_apply(2, 3, MndroSignal::Clock), (2, 2));
        assert_eq!(mndro_apply(3, 3, MndroSignal::Increment), (3, 0));
        assert_eq!(mndro_apply(1, 3, MndroSignal::Increment), (2, 0));
    }

    #[test]
    fn mndro_repeated_clocks_keep_contents() {
        for stored in 0..=3u32 {
            for k in 1..=5u64 {
                let mut cell = MndroCell::new(3, ps(11), ps(12), ps(10)).with_stored(stored);
                for c in 0..k {
                    let mut out = Vec::new();
                    let t = ps(100 * c);
                    cell.step(MndroCell::CLOCK, t, &mut out);
                    assert_eq!(out.len() as u32, stored);
                    for (i, (_, at)) in out.iter().enumerate() {
                        assert_eq!(*at, t + ps(11) + ps(12).times(i as u64));
                    }
                }
                assert_eq!(cell.stored_settled(), stored);
            }
        }
    }

    #[test]
    fn mndro_write_takes_effect_after_write_time() {
        let mut cell = MndroCell::new(3, ps(11), ps(12), ps(10));
        let mut out = Vec::new();
        cell.step(MndroCell::INCREMENT, ps(0), &mut out);
        cell.step(MndroCell::CLOCK, ps(9), &mut out);
        assert!(out.is_empty());
        cell.step(MndroCell::CLOCK, ps(10), &mut out);
        assert_eq!(out, vec![(0, ps(21))]);
    }

    #[test]
    fn merger_spacing() {
        let mut m = MergerCell::new(ps(7), ps(10));
        let mut out = Vec::new();
        m.step(ps(0), &mut out);
        m.step(ps(100), &mut out);
        assert_eq!(out, vec![(0, ps(7)), (0, ps(107))]);

        let mut m = MergerCell::new(ps(7), ps(10));
        let mut out = Vec::new();
        m.step(ps(0), &mut out);
        m.step(ps(2), &mut out);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn and_coincidence_is_one_shot() {
        let mut and = CoincidenceAndCell::new(ps(7), ps(10));
        let mut out = Vec::new();
        and.step(0, ps(0), &mut out);
        and.step(1, ps(3), &mut out);
        assert_eq!(out, vec![(0, ps(10))]);
        // Arming was consumed: a further B pulse does not re-fire.
        and.step(1, ps(5), &mut out);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn and_arming_expires() {
        let mut and = CoincidenceAndCell::new(ps(7), ps(8));
        let mut out = Vec::new();
        and.step(0, ps(0), &mut out);
        and.step(1, ps(9), &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn merger_and_complementarity() {
        // One pulse per port, any offset: merged outputs + coincidences = 2
        // when the dead time equals the coincidence window.
        for window_ps in [0u64, 3, 8] {
            for offset_fs in (0..=20_000u64).step_by(250) {
                for first in 0..2usize {
                    let mut m = MergerCell::new(ps(7), ps(window_ps));
                    let mut a = CoincidenceAndCell::new(ps(7), ps(window_ps));
                    let mut mo = Vec::new();
                    let mut ao = Vec::new();
                    let t0 = ps(50);
                    let t1 = t0 + SimTime::from_fs(offset_fs);
                    m.step(t0, &mut mo);
                    a.step(first, t0, &mut ao);
                    m.step(t1, &mut mo);
                    a.step(1 - first, t1, &mut ao);
                    assert_eq!(mo.len() + ao.len(), 2, "window {window_ps} offset {offset_fs}");
                }
            }
        }
    }

    #[test]
    fn outputs_follow_inputs() {
        let t = CellTiming::default();
        let mut cells = vec![
            Cell::delay(t.delay),
            Cell::splitter(t.splitter_delay),
            Cell::merger(t.merger_delay, t.merger_dead_time),
            Cell::and(t.and_delay, t.and_window),
            Cell::rtff(t.rtff_delay),
            Cell::mndro(3, t.mndro_delay, t.mndro_interval, t.mndro_write),
        ];
        for cell in &mut cells {
            if let Cell::Mndro(m) = cell {
                *m = m.clone().with_stored(3);
            }
            let mut out = Vec::new();
            let at = ps(100);
            for port in 0..cell.input_ports().len() {
                cell.on_pulse(port, at + ps(port as u64), &mut out);
            }
            for (_, when) in out {
                assert!(when > at, "{} emitted at {when}", cell.kind());
            }
        }
    }

    #[test]
    fn retime_touches_only_matching_field() {
        let mut c = Cell::merger(ps(7), ps(8));
        c.retime(TimingParam::MergerDeadTime, |t| t.times(2));
        assert_eq!(c, Cell::merger(ps(7), ps(16)));
        c.retime(TimingParam::RtffDelay, |t| t.times(2));
        assert_eq!(c, Cell::merger(ps(7), ps(16)));
    }
}
