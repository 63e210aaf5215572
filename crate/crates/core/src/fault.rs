//! Deterministic soft-error injection into kernel return arrays.
//!
//! Two fault types are supported: a single IEEE-754 bit flip (type B) and
//! scaling one value by a large factor (type A). Random faults follow a
//! fixed-window protocol: at the start of each window of `window` hook calls
//! a fault call is drawn uniformly from `[0, window)`; when the call counter
//! reaches it, one element of the array being returned is corrupted. The
//! counter keeps running to the end of the window, then resets and a new
//! fault call is drawn.
//!
//! Every stream owns a contiguous slice of each array and its own window
//! counter, mimicking independent ranks of a distributed run.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::kernel::{EvalSite, KernelProbe};
use crate::Result;

/// Default injection window: one fault per this many hook calls.
pub const DEFAULT_WINDOW: u64 = 5580;
/// Type-A multiplier.
pub const DEFAULT_SCALE: f64 = 1e4;

/// 32-bit words of ChaCha output reserved per window.
const WORDS_PER_WINDOW: u128 = 64;

/// Flips bit `bit` (0 = mantissa LSB, 52..=62 exponent, 63 sign) of `value`.
pub fn bit_flip(value: f64, bit: u32) -> Result<f64> {
    if bit > 63 {
        return Err(Error::invalid(format!("bit index {bit} outside 0..=63")));
    }
    Ok(f64::from_bits(value.to_bits() ^ (1u64 << bit)))
}

pub fn scale_fault(value: f64, scale: f64) -> f64 {
    value * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultMode {
    #[default]
    Off,
    /// Multiply one value by `scale`.
    TypeA,
    /// Flip one bit of one value.
    TypeB,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultConfig {
    pub mode: FaultMode,
    pub window: u64,
    pub scale: f64,
    pub seed: u64,
    /// Distinguishes runs sharing a seed; part of the RNG key.
    pub run_id: u64,
    /// Independent injection streams, each with its own share of every array.
    pub streams: usize,
    pub targeted_kernel: Option<String>,
    pub targeted_bit: Option<u32>,
    pub targeted_offset: Option<usize>,
}

impl Default for FaultConfig {
    fn default() -> Self {
        FaultConfig {
            mode: FaultMode::Off,
            window: DEFAULT_WINDOW,
            scale: DEFAULT_SCALE,
            seed: 0,
            run_id: 0,
            streams: 1,
            targeted_kernel: None,
            targeted_bit: None,
            targeted_offset: None,
        }
    }
}

impl FaultConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("fault window must be at least 1"));
        }
        if self.streams == 0 {
            return Err(Error::invalid("at least one injection stream is required"));
        }
        if let Some(b) = self.targeted_bit {
            if b > 63 {
                return Err(Error::invalid(format!("targeted bit {b} outside 0..=63")));
            }
        }
        Ok(())
    }
}

/// How a value was corrupted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultKind {
    BitFlip(u32),
    Scale(f64),
}

impl FaultKind {
    pub fn apply(self, value: f64) -> f64 {
        match self {
            FaultKind::BitFlip(bit) => f64::from_bits(value.to_bits() ^ (1u64 << (bit & 63))),
            FaultKind::Scale(s) => scale_fault(value, s),
        }
    }
}

/// Audit record of one injected fault.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultEvent {
    /// Zero-based index of the hook call that was corrupted.
    pub call_index: u64,
    pub stream: usize,
    pub kernel: &'static str,
    pub offset: usize,
    pub kind: FaultKind,
    pub old_value: f64,
    pub new_value: f64,
    pub site: EvalSite,
}

/// Window bookkeeping for one stream.
#[derive(Debug, Clone)]
pub struct InjectionState {
    pub stream: usize,
    pub window_index: u64,
    /// Calls seen since the window started.
    pub counter: u64,
    pub fault_call: u64,
    rng: ChaCha8Rng,
}

impl InjectionState {
    pub fn new(cfg: &FaultConfig, stream: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream((cfg.run_id << 16) ^ stream as u64);
        let mut state = InjectionState { stream, window_index: 0, counter: 0, fault_call: 0, rng };
        state.open_window(cfg.window, 0);
        state
    }

    fn open_window(&mut self, window: u64, index: u64) {
        self.window_index = index;
        self.counter = 0;
        self.rng.set_word_pos(index as u128 * WORDS_PER_WINDOW);
        self.fault_call = self.rng.gen_range(0..window);
    }

    /// Advances by one call; returns true when this call is the fault call.
    fn tick(&mut self, window: u64) -> bool {
        let hit = self.counter == self.fault_call;
        self.counter += 1;
        if self.counter == window {
            self.open_window(window, self.window_index + 1);
        }
        hit
    }
}

/// Random-window fault injector; plug it in as the run's [`KernelProbe`].
#[derive(Debug, Clone)]
pub struct FaultInjector {
    cfg: FaultConfig,
    streams: Vec<InjectionState>,
    calls: u64,
    events: Vec<FaultEvent>,
}

impl FaultInjector {
    pub fn new(cfg: FaultConfig) -> Result<Self> {
        cfg.validate()?;
        let streams = (0..cfg.streams).map(|s| InjectionState::new(&cfg, s)).collect();
        Ok(FaultInjector { cfg, streams, calls: 0, events: Vec::new() })
    }

    pub fn config(&self) -> &FaultConfig {
        &self.cfg
    }

    /// Total hook calls seen so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn events(&self) -> &[FaultEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<FaultEvent> {
        self.events
    }

    pub fn streams(&self) -> &[InjectionState] {
        &self.streams
    }

    /// Counts one kernel return and possibly corrupts one element of
    /// `array`, returning the events produced by this call (one per stream
    /// that fired).
    pub fn maybe_inject(&mut self, array: &mut [f64], kernel: &'static str, site: &EvalSite) -> &[FaultEvent] {
        let call_index = self.calls;
        self.calls += 1;
        let first_new = self.events.len();
        let active = self.cfg.mode != FaultMode::Off
            && self.cfg.targeted_kernel.as_deref().is_none_or(|k| k == kernel);
        let n_streams = self.streams.len();
        for stream in self.streams.iter_mut() {
            if !stream.tick(self.cfg.window) || !active || array.is_empty() {
                continue;
            }
            // Stream s owns elements [s·len/S, (s+1)·len/S).
            let lo = stream.stream * array.len() / n_streams;
            let hi = (stream.stream + 1) * array.len() / n_streams;
            if lo == hi {
                continue;
            }
            let offset = match self.cfg.targeted_offset {
                Some(o) if o < array.len() => o,
                Some(_) => continue,
                None => stream.rng.gen_range(lo..hi),
            };
            let kind = match self.cfg.mode {
                FaultMode::TypeA => FaultKind::Scale(self.cfg.scale),
                _ => FaultKind::BitFlip(self.cfg.targeted_bit.unwrap_or_else(|| stream.rng.gen_range(0..64))),
            };
            let old_value = array[offset];
            let new_value = kind.apply(old_value);
            array[offset] = new_value;
            self.events.push(FaultEvent {
                call_index,
                stream: stream.stream,
                kernel,
                offset,
                kind,
                old_value,
                new_value,
                site: *site,
            });
        }
        &self.events[first_new..]
    }
}

impl KernelProbe for FaultInjector {
    fn on_kernel_return(&mut self, kernel: &'static str, output: &mut [f64], _: &[f64], site: &EvalSite) {
        self.maybe_inject(output, kernel, site);
    }
}

/// Which element a one-shot fault hits.
#[derive(Debug, Clone, PartialEq)]
pub enum OffsetTarget {
    Fixed(usize),
    /// Grid point where `state[start..start + len]` is largest, e.g. the
    /// hottest cell of a temperature block. Resolved when the fault fires
    /// and wrapped onto the output array length.
    ArgMaxOfState { start: usize, len: usize },
}

/// When and where a one-shot fault fires.
#[derive(Debug, Clone, PartialEq)]
pub struct OneShotSchedule {
    pub step: usize,
    pub sweep: usize,
    pub node: usize,
    pub kernel: String,
    pub offset: OffsetTarget,
}

/// A hook that corrupts exactly one value at a scheduled evaluation.
#[derive(Debug, Clone)]
pub struct OneShot {
    pub schedule: OneShotSchedule,
    pub kind: FaultKind,
    armed: bool,
    calls: u64,
    event: Option<FaultEvent>,
}

/// Arms a hook that fires once at `schedule`.
pub fn one_shot_perturbation(schedule: OneShotSchedule, kind: FaultKind) -> OneShot {
    OneShot { schedule, kind, armed: true, calls: 0, event: None }
}

impl OneShot {
    /// A hook that never fires.
    pub fn disarmed(schedule: OneShotSchedule, kind: FaultKind) -> Self {
        OneShot { armed: false, ..one_shot_perturbation(schedule, kind) }
    }

    pub fn fired(&self) -> bool {
        self.event.is_some()
    }

    pub fn event(&self) -> Option<&FaultEvent> {
        self.event.as_ref()
    }

    /// End-of-run warning when an armed schedule was never reached.
    pub fn warning(&self) -> Option<String> {
        if self.armed && self.event.is_none() {
            let s = &self.schedule;
            Some(format!(
                "one-shot fault never fired: kernel {} at step {}, sweep {}, node {} was not reached",
                s.kernel, s.step, s.sweep, s.node
            ))
        } else {
            None
        }
    }
}

impl KernelProbe for OneShot {
    fn on_kernel_return(&mut self, kernel: &'static str, output: &mut [f64], state: &[f64], site: &EvalSite) {
        let call_index = self.calls;
        self.calls += 1;
        let s = &self.schedule;
        if !self.armed
            || self.event.is_some()
            || output.is_empty()
            || site.step != s.step
            || site.sweep != s.sweep
            || site.node != s.node
            || kernel != s.kernel
        {
            return;
        }
        let offset = match s.offset {
            OffsetTarget::Fixed(o) if o < output.len() => o,
            OffsetTarget::Fixed(_) => return,
            OffsetTarget::ArgMaxOfState { start, len } => {
                let block = &state[start.min(state.len())..(start + len).min(state.len())];
                let arg = block
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0;
                arg % output.len()
            }
        };
        let old_value = output[offset];
        let new_value = self.kind.apply(old_value);
        output[offset] = new_value;
        self.event = Some(FaultEvent {
            call_index,
            stream: 0,
            kernel,
            offset,
            kind: self.kind,
            old_value,
            new_value,
            site: *site,
        });
    }
}
