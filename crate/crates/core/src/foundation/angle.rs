use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut w = angle.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Removes 2*pi jumps from a sequence of wrapped angles.
///
/// Every step of the output lies in (-pi, pi] and the first sample is
/// passed through unchanged. Samples are shifted by whole turns only, so
/// a sequence without jumps is returned bit-identical.
pub fn unwrap_angles(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::invalid("unwrap_angles: empty input"));
    }
    if let Some(index) = raw.iter().position(|a| !a.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut out = Vec::with_capacity(raw.len());
    out.push(raw[0]);
    let mut turns = 0.0;
    for pair in raw.windows(2) {
        let step = pair[1] - pair[0];
        turns += ((wrap_angle(step) - step) / TAU).round();
        out.push(pair[1] + turns * TAU);
    }
    Ok(out)
}
