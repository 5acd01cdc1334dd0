//! Piecewise-linear drive schedules for couplings and on-site potentials.

use crate::error::{Error, Result};
use crate::lattice::{Couplings, Lattice, Potential};
use crate::J_MAX_MHZ;

const CONTINUITY_TOL: f64 = 1e-9;

/// Monotone map from segment time fraction `tau` to path parameter `s`,
/// both in `[0, 1]`, linearly interpolated between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparam {
    tau: Vec<f64>,
    s: Vec<f64>,
}

impl Reparam {
    pub fn new(tau: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if tau.len() != s.len() || tau.len() < 2 {
            return Err(Error::config("reparameterization needs matching tables with at least two knots"));
        }
        let ends_ok = tau[0] == 0.0 && s[0] == 0.0 && tau[tau.len() - 1] == 1.0 && s[s.len() - 1] == 1.0;
        if !ends_ok {
            return Err(Error::config("reparameterization must run from (0, 0) to (1, 1)"));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&tau) || !increasing(&s) {
            return Err(Error::config("reparameterization must be strictly increasing"));
        }
        Ok(Self { tau, s })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, 1.0);
        let k = self.tau.partition_point(|&x| x <= tau).clamp(1, self.tau.len() - 1);
        let (t0, t1) = (self.tau[k - 1], self.tau[k]);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        s0 + (s1 - s0) * (tau - t0) / (t1 - t0)
    }

    /// Table for the time-mirrored segment: `s'(tau) = 1 - s(1 - tau)`.
    pub fn mirrored(&self) -> Self {
        Self {
            tau: self.tau.iter().rev().map(|t| 1.0 - t).collect(),
            s: self.s.iter().rev().map(|s| 1.0 - s).collect(),
        }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.tau, &self.s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration_us: f64,
    pub couplings_start: Couplings,
    pub couplings_end: Couplings,
    pub potential_start: Potential,
    pub potential_end: Potential,
    pub reparam: Option<Reparam>,
}

impl Segment {
    pub fn linear(duration_us: f64, couplings: (Couplings, Couplings), potential: (Potential, Potential)) -> Self {
        Self {
            duration_us,
            couplings_start: couplings.0,
            couplings_end: couplings.1,
            potential_start: potential.0,
            potential_end: potential.1,
            reparam: None,
        }
    }

    pub fn with_reparam(mut self, r: Reparam) -> Self {
        self.reparam = Some(r);
        self
    }

    /// Path parameter at segment-local time `t`.
    pub fn path_parameter(&self, t: f64) -> f64 {
        let tau = if self.duration_us > 0.0 { (t / self.duration_us).clamp(0.0, 1.0) } else { 1.0 };
        match &self.reparam {
            Some(r) => r.eval(tau),
            None => tau,
        }
    }

    pub fn at_parameter(&self, s: f64) -> (Couplings, Potential) {
        (self.couplings_start.lerp(&self.couplings_end, s), self.potential_start.lerp(&self.potential_end, s))
    }

    fn mirrored(&self) -> Self {
        Self {
            duration_us: self.duration_us,
            couplings_start: self.couplings_end.clone(),
            couplings_end: self.couplings_start.clone(),
            potential_start: self.potential_end.clone(),
            potential_end: self.potential_start.clone(),
            reparam: self.reparam.as_ref().map(Reparam::mirrored),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule {
    lattice: Lattice,
    segments: Vec<Segment>,
    over_cap: bool,
}

impl DriveSchedule {
    /// Validated schedule with couplings capped at `J_MAX_MHZ`.
    pub fn new(lattice: &Lattice, segments: Vec<Segment>) -> Result<Self> {
        Self::build(lattice, segments, false)
    }

    /// As [`DriveSchedule::new`] but allowing couplings above the hardware cap.
    pub fn new_uncapped(lattice: &Lattice, segments: Vec<Segment>) -> Result<Self> {
        Self::build(lattice, segments, true)
    }

    pub fn constant(lattice: &Lattice, couplings: Couplings, potential: Potential, duration_us: f64) -> Result<Self> {
        Self::new(
            lattice,
            vec![Segment::linear(duration_us, (couplings.clone(), couplings), (potential.clone(), potential))],
        )
    }

    fn build(lattice: &Lattice, segments: Vec<Segment>, over_cap: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::config("schedule has no segments"));
        }
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.duration_us.is_finite() && seg.duration_us >= 0.0) {
                return Err(Error::config(format!("segment {k}: duration must be finite and non-negative")));
            }
            for c in [&seg.couplings_start, &seg.couplings_end] {
                if c.values().len() != lattice.num_bonds() {
                    return Err(Error::config(format!("segment {k}: coupling table does not match lattice bonds")));
                }
                if c.values().iter().any(|j| !j.is_finite()) {
                    return Err(Error::config(format!("segment {k}: non-finite coupling")));
                }
                if !over_cap && c.max_abs() > J_MAX_MHZ + 1e-12 {
                    return Err(Error::config(format!(
                        "segment {k}: coupling {:.3} MHz exceeds the {J_MAX_MHZ} MHz hardware cap",
                        c.max_abs()
                    )));
                }
            }
            for p in [&seg.potential_start, &seg.potential_end] {
                if p.values().len() != lattice.num_sites() {
                    return Err(Error::config(format!("segment {k}: potential table does not match lattice sites")));
                }
            }
        }
        for (k, w) in segments.windows(2).enumerate() {
            let jump_j = max_diff(w[0].couplings_end.values(), w[1].couplings_start.values());
            let jump_v = max_diff(w[0].potential_end.values(), w[1].potential_start.values());
            if jump_j > CONTINUITY_TOL || jump_v > CONTINUITY_TOL {
                return Err(Error::config(format!("schedule is discontinuous between segments {k} and {}", k + 1)));
            }
        }
        let total: f64 = segments.iter().map(|s| s.duration_us).sum();
        if total <= 0.0 {
            return Err(Error::config("total schedule duration must be positive"));
        }
        Ok(Self { lattice: lattice.clone(), segments, over_cap })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_us).sum()
    }

    /// Couplings (MHz) and potentials (MHz) at time `t`, clamped to the schedule range.
    pub fn at(&self, t: f64) -> (Couplings, Potential) {
        let (k, local) = self.locate(t);
        let seg = &self.segments[k];
        seg.at_parameter(seg.path_parameter(local))
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let mut start = 0.0;
        let last = self.segments.len() - 1;
        for (k, seg) in self.segments.iter().enumerate() {
            if t < start + seg.duration_us || k == last {
                return (k, (t - start).clamp(0.0, seg.duration_us));
            }
            start += seg.duration_us;
        }
        unreachable!()
    }

    /// Time-mirrored schedule, `H_rev(t) = H(T - t)`.
    pub fn reversed(&self) -> Self {
        Self {
            lattice: self.lattice.clone(),
            segments: self.segments.iter().rev().map(Segment::mirrored).collect(),
            over_cap: self.over_cap,
        }
    }

    /// `self` followed by `other`; the junction must be continuous.
    pub fn then(&self, other: &DriveSchedule) -> Result<Self> {
        let segs = self.segments.iter().chain(&other.segments).cloned().collect();
        Self::build(&self.lattice, segs, self.over_cap || other.over_cap)
    }

    /// Same path with every duration multiplied by `factor`.
    pub fn time_scaled(&self, factor: f64) -> Result<Self> {
        let segs = self
            .segments
            .iter()
            .map(|s| Segment { duration_us: s.duration_us * factor, ..s.clone() })
            .collect();
        Self::build(&self.lattice, segs, self.over_cap)
    }

    /// Segment endpoints, where convex norm bounds attain their maxima.
    pub fn endpoints(&self) -> impl Iterator<Item = (&Couplings, &Potential)> + '_ {
        self.segments
            .iter()
            .flat_map(|s| [(&s.couplings_start, &s.potential_start), (&s.couplings_end, &s.potential_end)])
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
