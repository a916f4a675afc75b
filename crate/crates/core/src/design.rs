//! Pulse design: detuning schedules, the closed-form parallel-eigenvalue
//! solve for the Rabi envelopes, the Gaussian-fit / linear-chirp variants,
//! conventional STIRAP, and the area and fluence metrics.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::lambda::{eigensystem, FieldPoint, Hamiltonian3};

/// Relative tolerance (in units of Ω₀²) under which a negative squared Rabi
/// frequency is treated as zero. `S` touches zero tangentially at the
/// window edges.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Relative delay of the fitted Gaussian envelopes, in units of T.
pub const FIT_OFFSET: f64 = 0.14;

/// Width factor of the fitted Gaussian envelopes, `√(π/2)`.
pub fn fit_beta() -> f64 {
    (PI / 2.0).sqrt()
}

/// Knobs of a parallel-eigenvalue design. All times in units of T, all
/// frequencies in units of 1/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Ω₀, the constant eigenvalue spread.
    pub omega0: f64,
    /// Amplitude of the Gaussian bump in the two-photon detuning.
    pub alpha: f64,
    /// Inverse width of that bump.
    pub beta: f64,
    /// The time window is `[-t_span, t_span]`.
    pub t_span: f64,
    pub n_samples: usize,
}

impl DesignParams {
    pub const DEFAULT_T_SPAN: f64 = 4.0;
    pub const DEFAULT_SAMPLES: usize = 4096;

    /// Constant two-photon detuning (`α = 0`) on the default grid.
    pub fn new(omega0: f64) -> Self {
        Self {
            omega0,
            alpha: 0.0,
            beta: 1.0,
            t_span: Self::DEFAULT_T_SPAN,
            n_samples: Self::DEFAULT_SAMPLES,
        }
    }

    pub fn with_bump(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_grid(mut self, t_span: f64, n_samples: usize) -> Self {
        self.t_span = t_span;
        self.n_samples = n_samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid("omega0", format!("must be > 0, got {}", self.omega0)));
        }
        if !self.alpha.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be > 0, got {}", self.beta)));
        }
        self.grid().validate()
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t_span, self.n_samples)
    }
}

/// Uniform grid over `[-t_span, t_span]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_span: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_span: f64, n_samples: usize) -> Self {
        Self { t_span, n_samples }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_span > 0.0 && self.t_span.is_finite()) {
            return Err(invalid("t_span", format!("must be > 0, got {}", self.t_span)));
        }
        if self.n_samples < 2 {
            return Err(invalid("n_samples", format!("must be >= 2, got {}", self.n_samples)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.t_span / (self.n_samples - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        let last = self.n_samples - 1;
        (0..self.n_samples)
            .map(|i| {
                if i == last {
                    self.t_span
                } else {
                    -self.t_span + i as f64 * h
                }
            })
            .collect()
    }
}

/// `(Δ(t), δ(t))`: an erf sweep of the one-photon detuning from `−Ω₀/2` to
/// `Ω₀` and a two-photon detuning `Ω₀/2` with an optional Gaussian bump.
pub fn detuning_schedule(p: &DesignParams, t: f64) -> (f64, f64) {
    let w = p.omega0;
    let delta1 = 0.75 * w * libm::erf(t) + 0.25 * w;
    let bump = if p.alpha == 0.0 {
        0.0
    } else {
        let x = p.beta * t;
        p.alpha * (-x * x).exp()
    };
    (delta1, 0.5 * w * (1.0 + bump))
}

/// Rabi frequencies that keep the eigenvalues at `(Δ+δ)/3 + {−Ω₀/2, 0, Ω₀/2}`.
///
/// Both the spread condition and the equidistance condition are linear in
/// `Ω_P²` and `Ω_S²`:
///
/// ```text
/// S     = Ω₀² − (4/3)(Δ² − Δδ + δ²)           = Ω_P² + Ω_S²
/// Ω_P²  = (Δ+δ)·[9S − 4(2Δ−δ)(2δ−Δ)] / (27δ)
/// ```
pub fn solve_parallel_rabi(omega0: f64, delta1: f64, delta2: f64) -> Result<(f64, f64)> {
    if delta2 == 0.0 {
        return Err(invalid("delta2", "two-photon detuning must be nonzero"));
    }
    let (p2, s2) = parallel_rabi_squares(omega0, delta1, delta2);
    let floor = -CLAMP_TOLERANCE * omega0 * omega0;
    if p2 < floor || p2.is_nan() {
        return Err(Error::InfeasibleDesign {
            t: None,
            field: "omega_p",
            value: p2,
        });
    }
    if s2 < floor || s2.is_nan() {
        return Err(Error::InfeasibleDesign {
            t: None,
            field: "omega_s",
            value: s2,
        });
    }
    Ok((p2.max(0.0).sqrt(), s2.max(0.0).sqrt()))
}

#[inline]
fn parallel_rabi_squares(omega0: f64, d: f64, dd: f64) -> (f64, f64) {
    let total = omega0 * omega0 - (4.0 / 3.0) * (d * d - d * dd + dd * dd);
    let p2 = (d + dd) * (9.0 * total - 4.0 * (2.0 * d - dd) * (2.0 * dd - d)) / (27.0 * dd);
    (p2, total - p2)
}

/// Right-hand side of the equidistance condition; zero on a level line.
pub fn parallel_condition_residual(p: &FieldPoint) -> f64 {
    let (op, os, d, dd) = (p.omega_p, p.omega_s, p.delta1, p.delta2);
    (9.0 * (op * op + os * os) - 4.0 * (2.0 * d - dd) * (2.0 * dd - d)) * (d + dd) / 27.0
        - op * op * dd
}

/// `Ω₀ = √(Ω_P² + Ω_S² + (4/3)(Δ² − Δδ + δ²))` of an arbitrary field point.
pub fn eigenvalue_spread(p: &FieldPoint) -> f64 {
    let (d, dd) = (p.delta1, p.delta2);
    (p.omega_p * p.omega_p + p.omega_s * p.omega_s + (4.0 / 3.0) * (d * d - d * dd + dd * dd))
        .sqrt()
}

/// Gaussian fit of the `α = 0` envelopes, delayed by ±0.14 T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub omega0: f64,
}

pub fn gaussian_fit_envelopes(omega0: f64) -> GaussianFit {
    GaussianFit { omega0 }
}

impl GaussianFit {
    pub fn peak(&self) -> f64 {
        0.5 * self.omega0 * fit_beta()
    }

    /// Centered at `+0.14 T`.
    pub fn pump(&self, t: f64) -> f64 {
        let x = (t - FIT_OFFSET) / fit_beta();
        self.peak() * (-x * x).exp()
    }

    /// Centered at `−0.14 T`: the Stokes pulse comes first.
    pub fn stokes(&self, t: f64) -> f64 {
        let x = (t + FIT_OFFSET) / fit_beta();
        self.peak() * (-x * x).exp()
    }
}

/// Conventional STIRAP: two resonant Gaussians of width T, Stokes first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StirapParams {
    pub omega_max: f64,
    /// Delay between the Stokes and pump peaks.
    pub tau: f64,
}

impl StirapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(invalid("omega_max", format!("must be > 0, got {}", self.omega_max)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Parallel,
    Linearized,
    Stirap,
    Custom,
}

/// Where a schedule's field values come from. Every variant can be
/// evaluated at any time, which the propagator needs for RK4 midpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Parallel(DesignParams),
    /// Gaussian-fit envelopes with a linearly chirped one-photon detuning.
    Linearized(DesignParams),
    Stirap(StirapParams),
    /// Envelopes displaced in time and rescaled, detunings untouched.
    Shifted {
        base: Box<FieldSource>,
        pump_shift: f64,
        stokes_shift: f64,
        scale: f64,
    },
    /// `t ↦ base(−t)`.
    Mirrored(Box<FieldSource>),
    /// Tabulated fields, cubic interpolation in between.
    Sampled(SampledFields),
}

impl FieldSource {
    pub fn kind(&self) -> ScheduleKind {
        match self {
            FieldSource::Parallel(_) => ScheduleKind::Parallel,
            FieldSource::Linearized(_) => ScheduleKind::Linearized,
            FieldSource::Stirap(_) => ScheduleKind::Stirap,
            _ => ScheduleKind::Custom,
        }
    }

    /// Field values at `t`. Negative squares from the parallel solve are
    /// clamped silently here; grid construction is where they get checked.
    pub fn field_at(&self, t: f64) -> FieldPoint {
        match self {
            FieldSource::Parallel(p) => {
                let (d, dd) = detuning_schedule(p, t);
                let (p2, s2) = parallel_rabi_squares(p.omega0, d, dd);
                FieldPoint::new(p2.max(0.0).sqrt(), s2.max(0.0).sqrt(), d, dd)
            }
            FieldSource::Linearized(p) => {
                let fit = gaussian_fit_envelopes(p.omega0);
                FieldPoint::new(
                    fit.pump(t),
                    fit.stokes(t),
                    linearized_delta1(p.omega0, t),
                    0.5 * p.omega0,
                )
            }
            FieldSource::Stirap(s) => {
                let xp = t - 0.5 * s.tau;
                let xs = t + 0.5 * s.tau;
                FieldPoint::new(
                    s.omega_max * (-xp * xp).exp(),
                    s.omega_max * (-xs * xs).exp(),
                    0.0,
                    0.0,
                )
            }
            FieldSource::Shifted {
                base,
                pump_shift,
                stokes_shift,
                scale,
            } => {
                let here = base.field_at(t);
                FieldPoint::new(
                    scale * base.field_at(t - pump_shift).omega_p,
                    scale * base.field_at(t - stokes_shift).omega_s,
                    here.delta1,
                    here.delta2,
                )
            }
            FieldSource::Mirrored(base) => base.field_at(-t),
            FieldSource::Sampled(s) => s.at(t),
        }
    }

    /// The parallel design behind this source, if any.
    pub fn design(&self) -> Option<&DesignParams> {
        match self {
            FieldSource::Parallel(p) | FieldSource::Linearized(p) => Some(p),
            FieldSource::Shifted { base, .. } | FieldSource::Mirrored(base) => base.design(),
            _ => None,
        }
    }
}

/// One-photon detuning of the linear-chirp variant: the tangent of the erf
/// sweep at `t = 0`, `Ω₀/4 + 3Ω₀t/(2√π)`.
pub fn linearized_delta1(omega0: f64, t: f64) -> f64 {
    0.25 * omega0 + linearized_slope(omega0) * t
}

/// `dΔ/dt` of the linear chirp, equal to the erf sweep's slope at `t = 0`.
pub fn linearized_slope(omega0: f64) -> f64 {
    1.5 * omega0 / PI.sqrt()
}

/// Tabulated field components on an ascending time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFields {
    t: Vec<f64>,
    values: [Vec<f64>; 4],
}

impl SampledFields {
    pub fn new(t: Vec<f64>, points: &[FieldPoint]) -> Result<Self> {
        if t.len() != points.len() || t.len() < 2 {
            return Err(invalid("samples", "need >= 2 samples with matching lengths"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("samples", "time grid must be strictly ascending"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("samples", "non-finite field value"));
        }
        let values = [
            points.iter().map(|p| p.omega_p).collect(),
            points.iter().map(|p| p.omega_s).collect(),
            points.iter().map(|p| p.delta1).collect(),
            points.iter().map(|p| p.delta2).collect(),
        ];
        Ok(Self { t, values })
    }

    /// Catmull-Rom cubic (Hermite with centered-difference slopes); constant
    /// extrapolation outside the table.
    pub fn at(&self, t: f64) -> FieldPoint {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.point(0);
        }
        if t >= self.t[n - 1] {
            return self.point(n - 1);
        }
        let i = self.t.partition_point(|&x| x <= t) - 1;
        let i = i.min(n - 2);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let u = (t - t0) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        let interp = |y: &[f64]| {
            let slope = |k: usize| {
                if k == 0 {
                    (y[1] - y[0]) / (self.t[1] - self.t[0])
                } else if k == n - 1 {
                    (y[n - 1] - y[n - 2]) / (self.t[n - 1] - self.t[n - 2])
                } else {
                    (y[k + 1] - y[k - 1]) / (self.t[k + 1] - self.t[k - 1])
                }
            };
            h00 * y[i] + h10 * h * slope(i) + h01 * y[i + 1] + h11 * h * slope(i + 1)
        };
        FieldPoint::new(
            interp(&self.values[0]),
            interp(&self.values[1]),
            interp(&self.values[2]),
            interp(&self.values[3]),
        )
    }

    fn point(&self, k: usize) -> FieldPoint {
        FieldPoint::new(
            self.values[0][k],
            self.values[1][k],
            self.values[2][k],
            self.values[3][k],
        )
    }
}

/// A time-sampled field record plus the instantaneous eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    source: FieldSource,
    pub t: Vec<f64>,
    pub omega_p: Vec<f64>,
    pub omega_s: Vec<f64>,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    /// `[ω₋, ω₀, ω₊]` per sample.
    pub eigenvalues: Vec<[f64; 3]>,
}

impl Schedule {
    /// Samples `source` on `grid`. Parallel designs are checked for
    /// feasibility at every grid point.
    pub fn from_source(source: FieldSource, grid: &TimeGrid) -> Result<Self> {
        grid.validate()?;
        let t = grid.points();
        let mut points = Vec::with_capacity(t.len());
        for &ti in &t {
            let p = match &source {
                FieldSource::Parallel(d) => {
                    let (d1, d2) = detuning_schedule(d, ti);
                    let (op, os) = solve_parallel_rabi(d.omega0, d1, d2).map_err(|e| match e {
                        Error::InfeasibleDesign { field, value, .. } => Error::InfeasibleDesign {
                            t: Some(ti),
                            field,
                            value,
                        },
                        other => other,
                    })?;
                    FieldPoint::new(op, os, d1, d2)
                }
                other => other.field_at(ti),
            };
            if !p.is_finite() {
                return Err(invalid("schedule", format!("non-finite field at t = {ti}")));
            }
            points.push(p);
        }
        Ok(Self::assemble(source, t, &points))
    }

    /// Tabulated schedule (`kind = custom`).
    pub fn custom(t: Vec<f64>, points: Vec<FieldPoint>) -> Result<Self> {
        let sampled = SampledFields::new(t.clone(), &points)?;
        Ok(Self::assemble(FieldSource::Sampled(sampled), t, &points))
    }

    fn assemble(source: FieldSource, t: Vec<f64>, points: &[FieldPoint]) -> Self {
        let eigenvalues = points
            .iter()
            .map(|p| eigensystem(&Hamiltonian3::from_point(p)).values)
            .collect();
        Self {
            source,
            omega_p: points.iter().map(|p| p.omega_p).collect(),
            omega_s: points.iter().map(|p| p.omega_s).collect(),
            delta1: points.iter().map(|p| p.delta1).collect(),
            delta2: points.iter().map(|p| p.delta2).collect(),
            eigenvalues,
            t,
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.source.kind()
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn point(&self, i: usize) -> FieldPoint {
        FieldPoint::new(self.omega_p[i], self.omega_s[i], self.delta1[i], self.delta2[i])
    }

    /// Field values between samples, from the analytic source.
    pub fn field_at(&self, t: f64) -> FieldPoint {
        self.source.field_at(t)
    }

    /// Same fields played backwards in time: `t ↦ f(−t)` on the same grid.
    pub fn time_mirrored(&self) -> Result<Self> {
        let t_span = self.t[self.len() - 1];
        if (self.t[0] + t_span).abs() > 1e-12 * t_span.abs().max(1.0) {
            return Err(invalid("schedule", "mirroring needs a symmetric window"));
        }
        Self::from_source(
            FieldSource::Mirrored(Box::new(self.source.clone())),
            &TimeGrid::new(t_span, self.len()),
        )
    }

    /// Time of the largest sample of `values`.
    pub fn peak_time(&self, values: &[f64]) -> f64 {
        let k = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.t[k]
    }

    /// CSV with header `t,omega_p,omega_s,delta1,delta2,w_minus,w_0,w_plus`;
    /// every value printed with 17 significant digits. `preamble` lines are
    /// written first, each prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, preamble: &[String]) -> io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "t,omega_p,omega_s,delta1,delta2,w_minus,w_0,w_plus")?;
        for i in 0..self.len() {
            let [a, b, c] = self.eigenvalues[i];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                sci(self.t[i]),
                sci(self.omega_p[i]),
                sci(self.omega_s[i]),
                sci(self.delta1[i]),
                sci(self.delta2[i]),
                sci(a),
                sci(b),
                sci(c)
            )?;
        }
        Ok(())
    }
}

impl Hamiltonian3 {
    pub(crate) fn from_point(p: &FieldPoint) -> Self {
        crate::lambda::build_hamiltonian(p).expect("finite field point")
    }
}

/// 17 significant digits, the shortest width that round-trips any `f64`.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn make_parallel_schedule(p: &DesignParams) -> Result<Schedule> {
    p.validate()?;
    Schedule::from_source(FieldSource::Parallel(*p), &p.grid())
}

/// Linear-chirp variant with the fitted Gaussian envelopes; needs `α = 0`.
pub fn linearized_schedule(p: &DesignParams) -> Result<Schedule> {
    p.validate()?;
    if p.alpha != 0.0 {
        return Err(Error::UnsupportedVariant(format!(
            "linearized chirp is defined for alpha = 0 only (got {})",
            p.alpha
        )));
    }
    Schedule::from_source(FieldSource::Linearized(*p), &p.grid())
}

pub fn stirap_schedule(s: &StirapParams, grid: &TimeGrid) -> Result<Schedule> {
    s.validate()?;
    Schedule::from_source(FieldSource::Stirap(*s), grid)
}

/// Total pulse area `∫ √(Ω_P² + Ω_S²) dt`, composite trapezoid.
pub fn pulse_area(s: &Schedule) -> f64 {
    let rms: Vec<f64> = (0..s.len()).map(|i| s.omega_p[i].hypot(s.omega_s[i])).collect();
    trapezoid(&s.t, &rms)
}

/// Fluence `∫ (Ω_P² + Ω_S²) dt`, composite trapezoid.
pub fn fluence(s: &Schedule) -> f64 {
    let sq: Vec<f64> = (0..s.len())
        .map(|i| s.omega_p[i] * s.omega_p[i] + s.omega_s[i] * s.omega_s[i])
        .collect();
    trapezoid(&s.t, &sq)
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{build_hamiltonian, eigensystem};

    const FIG1: f64 = 5.8;

    #[test]
    fn detunings_at_origin_and_infinity() {
        let p = DesignParams::new(2.0).with_bump(0.3, 1.7);
        let (d, dd) = detuning_schedule(&p, 0.0);
        assert_eq!(d, 0.5);
        assert!((dd - 1.0 * 1.3).abs() < 1e-15);

        let (d, dd) = detuning_schedule(&p, -40.0);
        assert!((d + 1.0).abs() < 1e-15 && (dd - 1.0).abs() < 1e-15);
        let (d, dd) = detuning_schedule(&p, 40.0);
        assert!((d - 2.0).abs() < 1e-15 && (dd - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_two_photon_detuning_without_bump() {
        let p = DesignParams::new(3.0);
        for t in [-3.0, -0.2, 0.0, 1.1, 7.0] {
            assert_eq!(detuning_schedule(&p, t).1, 1.5);
        }
    }

    #[test]
    fn fields_vanish_at_initial_boundary() {
        let w = 4.0;
        let (op, os) = solve_parallel_rabi(w, -0.5 * w, 0.5 * w).unwrap();
        assert_eq!((op, os), (0.0, 0.0));
    }

    #[test]
    fn center_of_constant_design() {
        // By hand: S = (3/4)Ω₀², Ω_P² = (3/4)Ω₀²·[9·3/4 − 4·0·(3/4)]/(27/2)/... = (3/8)Ω₀².
        let w = 1.7;
        let (op, os) = solve_parallel_rabi(w, 0.25 * w, 0.5 * w).unwrap();
        let expected = (3.0_f64 / 8.0).sqrt() * w;
        assert!((op - expected).abs() < 1e-14);
        assert!((os - expected).abs() < 1e-14);

        // Independent check through the eigensolver.
        let es = eigensystem(&build_hamiltonian(&FieldPoint::new(op, os, 0.25 * w, 0.5 * w)).unwrap());
        assert!(es.gap_asymmetry().abs() < 1e-13);
        assert!((es.omega_plus() - es.omega_0() - 0.5 * w).abs() < 1e-13);
    }

    #[test]
    fn zero_two_photon_detuning_is_rejected() {
        assert!(solve_parallel_rabi(1.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn infeasible_point_names_field_and_time() {
        // Δ = δ = Ω₀/2 lies inside the S > 0 region but asks for Ω_S² < 0.
        let err = solve_parallel_rabi(1.0, 0.9, 0.05).unwrap_err();
        assert!(matches!(err, Error::InfeasibleDesign { .. }), "{err:?}");

        // A bump large enough that the level line leaves the feasible region.
        let p = DesignParams::new(5.0).with_bump(-0.9, 0.5);
        match make_parallel_schedule(&p) {
            Err(Error::InfeasibleDesign { t: Some(t), .. }) => assert!(t.abs() <= 4.0),
            other => panic!("expected infeasible design, got {other:?}"),
        }
    }

    #[test]
    fn every_sample_has_parallel_eigenvalues_and_zero_residual() {
        for (w, a, b) in [(3.0, 0.0, 1.0), (5.8, 0.0, 1.0), (10.0, 0.1, 1.25), (5.4, 0.1, 1.25)] {
            let s = make_parallel_schedule(&DesignParams::new(w).with_bump(a, b)).unwrap();
            for i in 0..s.len() {
                let p = s.point(i);
                let es = eigensystem(&build_hamiltonian(&p).unwrap());
                assert!(es.gap_asymmetry().abs() <= 1e-9 * w);
                assert!((es.omega_plus() - es.omega_0() - 0.5 * w).abs() <= 1e-9 * w);
                assert!(parallel_condition_residual(&p).abs() <= 1e-9 * w.powi(3));
                assert!((eigenvalue_spread(&p) - w).abs() <= 1e-9 * w);
            }
        }
    }

    #[test]
    fn boundary_connection() {
        for w in [3.0, 5.8, 12.0] {
            let s = make_parallel_schedule(&DesignParams::new(w)).unwrap();
            let n = s.len() - 1;
            assert!(s.omega_p[0].max(s.omega_s[0]) <= 1e-3 * w);
            assert!(s.omega_p[n].max(s.omega_s[n]) <= 1e-3 * w);
            // ω₀ connects 0 at the start to Ω₀/2 at the end.
            assert!(s.eigenvalues[0][1].abs() <= 1e-3 * w);
            assert!((s.eigenvalues[n][1] - 0.5 * w).abs() <= 1e-3 * w);
        }
    }

    #[test]
    fn counterintuitive_order_and_fig1_metrics() {
        let s = make_parallel_schedule(&DesignParams::new(FIG1)).unwrap();
        assert_eq!(s.kind(), ScheduleKind::Parallel);
        assert!(s.peak_time(&s.omega_s) < s.peak_time(&s.omega_p));
        let area = pulse_area(&s) / PI;
        let fl = fluence(&s);
        assert!((area - 3.6).abs() < 0.1, "area {area}π");
        assert!((fl - 40.0).abs() < 4.0, "fluence {fl}");
    }

    #[test]
    fn two_sample_grid() {
        let s = make_parallel_schedule(&DesignParams::new(FIG1).with_grid(4.0, 2)).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.omega_p.iter().chain(&s.omega_s).all(|&x| x < 1e-3 * FIG1));
    }

    #[test]
    fn gaussian_fit_matches_exact_design() {
        let w = FIG1;
        let fit = gaussian_fit_envelopes(w);
        assert!((fit.peak() / w - 0.626_657).abs() < 1e-6);
        assert!((fit.pump(FIT_OFFSET) - fit.peak()).abs() < 1e-15);
        assert!((fit.stokes(-FIT_OFFSET) - fit.peak()).abs() < 1e-15);

        let exact0 = (3.0_f64 / 8.0).sqrt() * w;
        assert!((fit.pump(0.0) / exact0 - 1.0).abs() < 0.011);
        assert!((fit.stokes(0.0) / exact0 - 1.0).abs() < 0.011);

        // RMS mismatch over [-3T, 3T].
        let s = make_parallel_schedule(&DesignParams::new(w).with_grid(3.0, 6001)).unwrap();
        let sq: Vec<f64> = (0..s.len())
            .map(|i| {
                let dp = fit.pump(s.t[i]) - s.omega_p[i];
                let ds = fit.stokes(s.t[i]) - s.omega_s[i];
                0.5 * (dp * dp + ds * ds)
            })
            .collect();
        let rms = (trapezoid(&s.t, &sq) / 6.0).sqrt();
        assert!(rms < 0.05 * fit.peak(), "rms {rms}");
    }

    #[test]
    fn linearized_chirp_tangent() {
        let w = 4.0;
        let p = DesignParams::new(w);
        let h = 1e-5;
        let numeric = (detuning_schedule(&p, h).0 - detuning_schedule(&p, -h).0) / (2.0 * h);
        assert!((numeric - linearized_slope(w)).abs() < 1e-8);
        assert_eq!(linearized_delta1(w, 0.0), detuning_schedule(&p, 0.0).0);

        let s = linearized_schedule(&p).unwrap();
        assert_eq!(s.kind(), ScheduleKind::Linearized);
        assert!(s.delta2.iter().all(|&d| d == 0.5 * w));
        assert!(matches!(
            linearized_schedule(&p.with_bump(0.1, 1.25)),
            Err(Error::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn stirap_shapes() {
        let grid = TimeGrid::new(8.0, 8001);
        let s = stirap_schedule(&StirapParams { omega_max: 2.0, tau: 0.0 }, &grid).unwrap();
        assert_eq!(s.omega_p, s.omega_s);
        assert!(s.delta1.iter().chain(&s.delta2).all(|&d| d == 0.0));

        // A single Gaussian of width T has area √π·Ω_max; well separated
        // pulses add, fully overlapped ones give √2 times one.
        let single = PI.sqrt() * 2.0;
        let apart = stirap_schedule(&StirapParams { omega_max: 2.0, tau: 9.0 }, &TimeGrid::new(12.0, 12001)).unwrap();
        assert!((pulse_area(&apart) - 2.0 * single).abs() < 1e-9);
        assert!((pulse_area(&s) - 2f64.sqrt() * single).abs() < 1e-9);

        let late = stirap_schedule(&StirapParams { omega_max: 1.0, tau: 1.1 }, &grid).unwrap();
        assert!(late.peak_time(&late.omega_s) < late.peak_time(&late.omega_p));
    }

    #[test]
    fn pi_pulse_areas() {
        // Ω_max chosen so that each Gaussian has area π.
        let omega_max = PI.sqrt();
        let grid = TimeGrid::new(12.0, 12001);
        let apart = stirap_schedule(&StirapParams { omega_max, tau: 9.0 }, &grid).unwrap();
        let together = stirap_schedule(&StirapParams { omega_max, tau: 0.0 }, &grid).unwrap();
        assert!((pulse_area(&apart) / PI - 2.0).abs() < 1e-9);
        assert!((pulse_area(&together) / PI - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_fields_have_zero_metrics() {
        let s = Schedule::custom(vec![0.0, 1.0, 2.0], vec![FieldPoint::default(); 3]).unwrap();
        assert_eq!(pulse_area(&s), 0.0);
        assert_eq!(fluence(&s), 0.0);
        assert_eq!(s.kind(), ScheduleKind::Custom);
    }

    #[test]
    fn fit_fluence_closed_form() {
        // Two Gaussians: 2·(Ω₀β/2)²·β·√(π/2) = (π²/8)·Ω₀² with β² = π/2.
        let w = FIG1;
        let b = fit_beta();
        let analytic = 2.0 * (0.5 * w * b).powi(2) * b * (PI / 2.0).sqrt();
        assert!((analytic / (w * w) - PI * PI / 8.0).abs() < 1e-12);
        let s = linearized_schedule(&DesignParams::new(w).with_grid(8.0, 16001)).unwrap();
        assert!((fluence(&s) - analytic).abs() < 1e-6 * analytic);
        assert!((analytic - 41.5).abs() < 0.1);
    }

    #[test]
    fn quadrature_is_second_order() {
        // Errors against a 16n reference must shrink ~4x per doubling.
        let area_at = |n: usize| {
            let s = make_parallel_schedule(&DesignParams::new(FIG1).with_grid(4.0, n)).unwrap();
            (pulse_area(&s), fluence(&s))
        };
        let (ra, rf) = area_at(16 * 64 + 1);
        let (a1, f1) = area_at(64 + 1);
        let (a2, f2) = area_at(128 + 1);
        let ratio_a = (a1 - ra).abs() / (a2 - ra).abs();
        let ratio_f = (f1 - rf).abs() / (f2 - rf).abs();
        assert!((3.0..5.5).contains(&ratio_a), "area ratio {ratio_a}");
        assert!((3.0..5.5).contains(&ratio_f), "fluence ratio {ratio_f}");
    }

    #[test]
    fn area_grows_with_omega0() {
        let mut prev = 0.0;
        for k in 0..=18 {
            let w = 3.0 + 0.5 * k as f64;
            let a = pulse_area(&make_parallel_schedule(&DesignParams::new(w)).unwrap());
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn cubic_interpolation_reproduces_samples_and_cubics() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let pts: Vec<FieldPoint> = t
            .iter()
            .map(|&x| FieldPoint::new(x * x, 1.0 - x, 2.0 * x, 0.5))
            .collect();
        let s = SampledFields::new(t.clone(), &pts).unwrap();
        for (ti, p) in t.iter().zip(&pts) {
            assert_eq!(s.at(*ti), *p);
        }
        let mid = s.at(0.55);
        assert!((mid.omega_p - 0.3025).abs() < 1e-12);
        assert!((mid.delta1 - 1.1).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let s = make_parallel_schedule(&DesignParams::new(FIG1).with_grid(4.0, 3)).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, &["config: {}".to_string()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config: {}");
        assert_eq!(lines[1], "t,omega_p,omega_s,delta1,delta2,w_minus,w_0,w_plus");
        assert_eq!(lines.len(), 5);
        let row: Vec<f64> = lines[3].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[0], 0.0);
        assert_eq!(row[3], 0.25 * FIG1);
    }
}
