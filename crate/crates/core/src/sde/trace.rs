use std::io::Write;

use super::{MachineState, Model, SdeParams};
use crate::Result;

/// What to record during a trajectory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceOptions {
    /// Record every `stride` steps (step 0 is always recorded).
    pub stride: usize,
    /// Pulses to record; `None` records all.
    pub pulses: Option<Vec<usize>>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { stride: 10, pulses: None }
    }
}

/// Sampled amplitudes and error variables of one trajectory.
///
/// `amplitude` holds `g·μ̃_r` for the CAC models and `c_r` for the open-loop
/// model; `error` holds `e_r` and is empty for the open-loop model.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub model: Model,
    pub stride: usize,
    pub pulses: Vec<usize>,
    pub times: Vec<f64>,
    pub amplitude: Vec<Vec<f64>>,
    pub error: Vec<Vec<f64>>,
    scale: f64,
}

impl Trace {
    pub(super) fn new(model: Model, opts: &TraceOptions, params: &SdeParams, n: usize) -> Self {
        Trace {
            model,
            stride: opts.stride.max(1),
            pulses: opts.pulses.clone().unwrap_or_else(|| (0..n).collect()),
            times: Vec::new(),
            amplitude: Vec::new(),
            error: Vec::new(),
            scale: if model.is_cac() { params.g2.sqrt() } else { 1.0 },
        }
    }

    pub(super) fn record(&mut self, step: usize, state: &MachineState) {
        if step % self.stride != 0 {
            return;
        }
        let amp = state.readout_amplitude();
        self.times.push(state.t());
        self.amplitude
            .push(self.pulses.iter().map(|&r| self.scale * amp[r]).collect());
        if let Some(e) = state.error_variable() {
            self.error.push(self.pulses.iter().map(|&r| e[r]).collect());
        }
    }

    /// Per recorded pulse, the mean of `amplitude²` over samples with
    /// `t > t_from`. For CAC models this is the time average of `g²μ̃²`.
    pub fn mean_squared_amplitude(&self, t_from: f64) -> Vec<f64> {
        let rows: Vec<&Vec<f64>> = self
            .times
            .iter()
            .zip(&self.amplitude)
            .filter(|(&t, _)| t > t_from)
            .map(|(_, a)| a)
            .collect();
        let count = rows.len().max(1) as f64;
        (0..self.pulses.len())
            .map(|i| rows.iter().map(|a| a[i] * a[i]).sum::<f64>() / count)
            .collect()
    }

    /// CSV with columns `t,r,amplitude,error` (error empty for open loop).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,r,amplitude,error")?;
        for (k, &t) in self.times.iter().enumerate() {
            for (i, &r) in self.pulses.iter().enumerate() {
                let a = self.amplitude[k][i];
                match self.error.get(k) {
                    Some(e) => writeln!(out, "{t},{r},{a:e},{:e}", e[i])?,
                    None => writeln!(out, "{t},{r},{a:e},")?,
                }
            }
        }
        Ok(())
    }
}
