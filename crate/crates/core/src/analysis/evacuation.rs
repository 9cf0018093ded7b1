//! Evacuation bookkeeping: how much is left, how much got out, and did
//! the flow freeze into a jam before the room emptied.

use crate::error::{Error, Result};
use crate::real::Real;

/// Time series of an evacuation run. `remaining` is interior mass for
/// macro runs and the active-disk count for micro runs; `exited` is the
/// matching absorbed tally, non-decreasing over the run.
#[derive(Debug, Clone)]
pub struct EvacuationCurve<S = f64> {
    pub times: Vec<S>,
    pub remaining: Vec<S>,
    pub exited: Vec<S>,
}

#[derive(Debug, Clone, Copy)]
pub struct JamVerdictParams<S = f64> {
    /// Trailing frames that must hold still to call the run jammed.
    pub window: usize,
    /// Relative change in remaining mass treated as "still".
    pub rel_tol: S,
}

impl<S: Real> Default for JamVerdictParams<S> {
    fn default() -> Self {
        JamVerdictParams {
            window: 200,
            rel_tol: S::of(1e-6),
        }
    }
}

/// Builds the curve and decides whether the run ended jammed: nonzero
/// remaining mass that did not move over the whole trailing window. Runs
/// shorter than the window and runs that emptied report no jam.
pub fn evacuation_metrics<S: Real>(
    frames: &[(S, S, S)],
    params: &JamVerdictParams<S>,
) -> Result<(EvacuationCurve<S>, bool)> {
    if frames.is_empty() {
        return Err(Error::EmptyRun);
    }
    let curve = EvacuationCurve {
        times: frames.iter().map(|f| f.0).collect(),
        remaining: frames.iter().map(|f| f.1).collect(),
        exited: frames.iter().map(|f| f.2).collect(),
    };

    let n = curve.remaining.len();
    let jammed = if n > params.window {
        let last = curve.remaining[n - 1];
        let past = curve.remaining[n - 1 - params.window];
        let scale = past.abs().max(S::of(f64::MIN_POSITIVE));
        last > S::zero() && ((last - past).abs() / scale) < params.rel_tol
    } else {
        false
    };
    Ok((curve, jammed))
}
