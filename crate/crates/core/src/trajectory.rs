//! Sampled sample paths of `Z(t)` and, for graph runs, `ξ(t)`.

use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub z: f64,
    /// Active-arc fraction; absent for aggregated chains, which do not track it.
    pub xi: Option<f64>,
}

/// How often event times are recorded, on top of the fixed time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stride {
    /// Every `max(1, N / 10)` events.
    #[default]
    Auto,
    Every(u64),
    /// Only grid points and absorption.
    Never,
}

impl Stride {
    fn resolve(self, n: usize) -> Option<u64> {
        match self {
            Stride::Auto => Some((n as u64 / 10).max(1)),
            Stride::Every(k) => Some(k.max(1)),
            Stride::Never => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    pub stride: Stride,
    /// The grid is `T·k / grid_intervals` for `k = 0..=grid_intervals`.
    pub grid_intervals: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            stride: Stride::Auto,
            grid_intervals: 1000,
        }
    }
}

impl SampleOptions {
    pub fn every_event() -> Self {
        Self {
            stride: Stride::Every(1),
            ..Self::default()
        }
    }

    pub fn grid_only(grid_intervals: usize) -> Self {
        Self {
            stride: Stride::Never,
            grid_intervals,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Strictly increasing in `t`. Between samples the path is constant
    /// unless events were skipped by the stride.
    pub samples: Vec<Sample>,
    pub horizon: f64,
    pub absorbed_at: Option<f64>,
    pub event_count: u64,
    pub seed: u64,
    /// The run stopped at an event cap before reaching the horizon.
    pub truncated: bool,
}

impl Trajectory {
    pub fn is_absorbed(&self) -> bool {
        self.absorbed_at.is_some()
    }

    /// Right-continuous step interpolation of the recorded samples.
    pub fn value_at(&self, t: f64) -> f64 {
        if let Some(a) = self.absorbed_at {
            if t >= a {
                return 0.0;
            }
        }
        let i = self.samples.partition_point(|s| s.t <= t);
        if i == 0 {
            self.samples.first().map_or(0.0, |s| s.z)
        } else {
            self.samples[i - 1].z
        }
    }

    pub fn final_z(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.z)
    }

    /// CSV with header `t,Z,xi`; `xi` is left empty when not tracked.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,Z,xi")?;
        for s in &self.samples {
            match s.xi {
                Some(xi) => writeln!(w, "{},{},{}", s.t, s.z, xi)?,
                None => writeln!(w, "{},{},", s.t, s.z)?,
            }
        }
        w.flush()
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "horizon": self.horizon,
            "absorbed_at": self.absorbed_at,
            "event_count": self.event_count,
            "truncated": self.truncated,
            "samples": self.samples.len(),
        })
    }
}

/// Shared sampling logic for the event-driven simulators.
///
/// The caller reports the time of each event before applying it, so grid
/// points falling before the event see the pre-event state, and then reports
/// the post-event state.
pub(crate) struct Recorder {
    samples: Vec<Sample>,
    stride: Option<u64>,
    horizon: f64,
    intervals: usize,
    next_grid: usize,
    events: u64,
}

impl Recorder {
    pub(crate) fn new(opts: SampleOptions, n: usize, horizon: f64, z: f64, xi: Option<f64>) -> Self {
        let intervals = opts.grid_intervals.max(1);
        let mut r = Self {
            samples: Vec::new(),
            stride: opts.stride.resolve(n),
            horizon,
            intervals,
            next_grid: 1,
            events: 0,
        };
        r.push(0.0, z, xi);
        r
    }

    fn grid_time(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.horizon
        } else {
            self.horizon * k as f64 / self.intervals as f64
        }
    }

    fn push(&mut self, t: f64, z: f64, xi: Option<f64>) {
        match self.samples.last_mut() {
            Some(last) if last.t == t => {
                last.z = z;
                last.xi = xi;
            }
            _ => self.samples.push(Sample { t, z, xi }),
        }
    }

    /// Record grid points strictly before `t` with the state held until `t`.
    pub(crate) fn advance_to(&mut self, t: f64, z: f64, xi: Option<f64>) {
        while self.next_grid <= self.intervals {
            let g = self.grid_time(self.next_grid);
            if g >= t {
                break;
            }
            self.push(g, z, xi);
            self.next_grid += 1;
        }
    }

    pub(crate) fn event(&mut self, t: f64, z: f64, xi: Option<f64>) {
        self.events += 1;
        if let Some(s) = self.stride {
            if self.events % s == 0 {
                self.push(t, z, xi);
            }
        }
    }

    pub(crate) fn events(&self) -> u64 {
        self.events
    }

    fn finish(mut self, absorbed_at: Option<f64>, seed: u64, truncated: bool) -> Trajectory {
        if self.samples.last().is_some_and(|s| s.t > self.horizon) {
            self.samples.pop();
        }
        Trajectory {
            samples: self.samples,
            horizon: self.horizon,
            absorbed_at,
            event_count: self.events,
            seed,
            truncated,
        }
    }

    pub(crate) fn absorbed(mut self, t: f64, xi: Option<f64>, seed: u64) -> Trajectory {
        self.push(t, 0.0, xi);
        self.finish(Some(t), seed, false)
    }

    /// No event before the horizon: fill the rest of the grid, ending at `T`.
    pub(crate) fn reached_horizon(mut self, z: f64, xi: Option<f64>, seed: u64) -> Trajectory {
        self.advance_to(f64::INFINITY, z, xi);
        self.finish(None, seed, false)
    }

    pub(crate) fn truncated(mut self, t: f64, z: f64, xi: Option<f64>, seed: u64) -> Trajectory {
        self.push(t, z, xi);
        self.finish(None, seed, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_integer_times() {
        let mut r = Recorder::new(SampleOptions::grid_only(1000), 10, 20.0, 0.5, None);
        r.advance_to(30.0, 0.5, None);
        let traj = r.reached_horizon(0.5, None, 7);
        assert_eq!(traj.samples.len(), 1001);
        for t in [1.0, 5.0, 20.0] {
            assert!(traj.samples.iter().any(|s| s.t == t), "missing {t}");
        }
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn grid_sees_pre_event_state() {
        let mut r = Recorder::new(SampleOptions::grid_only(4), 10, 4.0, 0.5, Some(0.25));
        r.advance_to(1.5, 0.5, Some(0.25));
        r.event(1.5, 0.6, Some(0.24));
        r.advance_to(2.0, 0.6, Some(0.24));
        r.event(2.0, 0.7, Some(0.21));
        let traj = r.reached_horizon(0.7, Some(0.21), 1);
        let zs: Vec<_> = traj.samples.iter().map(|s| (s.t, s.z)).collect();
        assert_eq!(zs, vec![(0.0, 0.5), (1.0, 0.5), (2.0, 0.7), (3.0, 0.7), (4.0, 0.7)]);
        assert_eq!(traj.event_count, 2);
        assert_eq!(traj.value_at(1.7), 0.5);
    }

    #[test]
    fn stride_and_absorption() {
        let opts = SampleOptions {
            stride: Stride::Every(2),
            grid_intervals: 1,
        };
        let mut r = Recorder::new(opts, 10, 10.0, 0.3, None);
        for (i, t) in [0.5, 0.7, 1.1].into_iter().enumerate() {
            r.advance_to(t, 0.3 - 0.1 * i as f64, None);
            r.event(t, 0.2 - 0.1 * i as f64, None);
        }
        let traj = r.absorbed(1.1, None, 0);
        let ts: Vec<_> = traj.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.7, 1.1]);
        assert_eq!(traj.absorbed_at, Some(1.1));
        assert_eq!(traj.value_at(5.0), 0.0);
        assert_eq!(traj.final_z(), 0.0);
    }

    #[test]
    fn csv_format() {
        let traj = Trajectory {
            samples: vec![
                Sample { t: 0.0, z: 0.5, xi: Some(0.25) },
                Sample { t: 1.5, z: 0.0, xi: None },
            ],
            horizon: 2.0,
            absorbed_at: Some(1.5),
            event_count: 3,
            seed: 9,
            truncated: false,
        };
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,Z,xi\n0,0.5,0.25\n1.5,0,\n");
    }

    #[test]
    fn auto_stride() {
        assert_eq!(Stride::Auto.resolve(5), Some(1));
        assert_eq!(Stride::Auto.resolve(1000), Some(100));
        assert_eq!(Stride::Every(0).resolve(5), Some(1));
    }
}
