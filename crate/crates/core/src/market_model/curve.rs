use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// One piece of a piecewise-constant instantaneous volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Right end of the piece, in years. The piece starts at the previous end (or 0).
    pub end: f64,
    pub vol: f64,
}

/// Piecewise-constant instantaneous volatility `sigma(t)`.
///
/// After the last segment end the volatility stays at `tail_vol`, which is
/// the last segment's value for curves built from a segment list.
#[derive(Debug, Clone, PartialEq)]
pub struct VolCurve {
    segments: Vec<Segment>,
    tail_vol: f64,
}

impl VolCurve {
    /// Builds a curve from `(end_time, vol)` pairs. The last vol extends past its end.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let Some(&(_, last_vol)) = points.last() else {
            return Err(Error::validation("volatility curve needs at least one segment"));
        };
        let mut prev = 0.0;
        for &(end, vol) in points {
            if !(end.is_finite() && end > prev) {
                return Err(Error::validation(format!(
                    "volatility segment ends must be positive and strictly increasing (got {end} after {prev})"
                )));
            }
            if !(vol.is_finite() && vol >= 0.0) {
                return Err(Error::validation(format!("volatility must be finite and >= 0 (got {vol})")));
            }
            prev = end;
        }
        Ok(Self {
            segments: points.iter().map(|&(end, vol)| Segment { end, vol }).collect(),
            tail_vol: last_vol,
        })
    }

    pub fn flat(vol: f64) -> Result<Self> {
        if !(vol.is_finite() && vol >= 0.0) {
            return Err(Error::validation(format!("volatility must be finite and >= 0 (got {vol})")));
        }
        Ok(Self { segments: Vec::new(), tail_vol: vol })
    }

    pub fn zero() -> Self {
        Self { segments: Vec::new(), tail_vol: 0.0 }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.tail_vol == 0.0 && self.segments.iter().all(|s| s.vol == 0.0)
    }

    pub fn vol_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| t < s.end)
            .map_or(self.tail_vol, |s| s.vol)
    }

    /// `int_0^t sigma(s)^2 ds`.
    pub fn total_variance(&self, t: f64) -> f64 {
        self.cross_integral(self, t)
    }

    /// `int_0^t sigma_self(s) sigma_other(s) ds`, exact for piecewise-constant curves.
    pub fn cross_integral(&self, other: &VolCurve, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let end_of = |c: &VolCurve, i: usize| c.segments.get(i).map_or(f64::INFINITY, |s| s.end);
        let vol_of = |c: &VolCurve, i: usize| c.segments.get(i).map_or(c.tail_vol, |s| s.vol);
        let (mut i, mut j, mut start) = (0, 0, 0.0);
        let mut acc = CompensatedSum::new();
        loop {
            let (ea, eb) = (end_of(self, i), end_of(other, j));
            let stop = ea.min(eb).min(t);
            acc.add(vol_of(self, i) * vol_of(other, j) * (stop - start));
            if stop >= t {
                break;
            }
            start = stop;
            if ea == stop {
                i += 1;
            }
            if eb == stop {
                j += 1;
            }
        }
        acc.value()
    }

    /// The same curve on `[0, t)` and zero afterwards.
    ///
    /// Used to turn an observation at time `t` into a pseudo-asset observed at
    /// maturity: its integrated covariance with anything is the integral up to `t`.
    pub fn truncated(&self, t: f64) -> VolCurve {
        if t <= 0.0 {
            return VolCurve::zero();
        }
        let mut segments = Vec::new();
        for s in &self.segments {
            if s.end < t {
                segments.push(*s);
            } else {
                segments.push(Segment { end: t, vol: s.vol });
                return VolCurve { segments, tail_vol: 0.0 };
            }
        }
        segments.push(Segment { end: t, vol: self.tail_vol });
        VolCurve { segments, tail_vol: 0.0 }
    }
}
