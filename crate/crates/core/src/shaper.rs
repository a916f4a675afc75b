//! Spectral synthesis of designed pulses: temporal phase, Fourier masks
//! applied to a transform-limited seed, modulator pixelization, temporal
//! re-synthesis and conversion to physical units.
//!
//! Fields are complex envelopes in the frame of each field's carrier, with
//! time in units of `T` and frequency in `1/T`. The transform convention is
//!
//! ```text
//! F(ω) = ∫ f(t) e^{−iωt} dt,      f(t) = (1/2π) ∫ F(ω) e^{iωt} dω
//! ```
//!
//! discretized on an [`FftGrid`].

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::design::{sci, DesignParams, FieldSource, Schedule};
use crate::error::{invalid, Error, Result};
use crate::lambda::QuantumState;
use crate::propagate::{evolve, CMatrix3};

/// Largest `|f|/max|f|` allowed at either end of the time window.
pub const EDGE_LIMIT: f64 = 1e-6;
pub const DEFAULT_PIXELS: usize = 320;
pub const DEFAULT_SEED_FWHM_FS: f64 = 100.0;
pub const DEFAULT_FWHM_FS: f64 = 500.0;
/// The modulator covers frequencies where the seed amplitude exceeds this
/// fraction of its peak.
pub const SEED_BAND_FLOOR: f64 = 1e-4;

/// CODATA 2018 values, SI units.
pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Speed of light in vacuum, m/s.
    pub const C: f64 = 299_792_458.0;
    /// Vacuum permittivity, F/m.
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    /// One debye, C·m.
    pub const DEBYE: f64 = 3.335_640_95e-30;
}

/// Uniform time grid `t_n = −L + n·dt`, `n = 0..N`, `dt = 2L/N`, and its
/// FFT frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftGrid {
    pub n: usize,
    pub half_width: f64,
}

impl Default for FftGrid {
    /// `2¹⁷` samples over `[−64T, 64T)`: `dt = T/1024`, and the pixel
    /// replicas of a 320-pixel mask (near `±42T`) stay inside the window.
    fn default() -> Self {
        Self {
            n: 1 << 17,
            half_width: 64.0,
        }
    }
}

impl FftGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 2 != 0 {
            return Err(invalid("n", format!("must be even and >= 4, got {}", self.n)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid("half_width", "must be > 0"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn t0(&self) -> f64 {
        -self.half_width
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n).map(|i| self.t0() + i as f64 * dt).collect()
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dt())
    }

    /// Frequencies in ascending order, `−N/2 … N/2−1` times `dω`.
    pub fn omegas(&self) -> Vec<f64> {
        let dw = self.d_omega();
        let half = (self.n / 2) as f64;
        (0..self.n).map(|k| (k as f64 - half) * dw).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Pump,
    Stokes,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Pump => "pump",
            Channel::Stokes => "stokes",
        }
    }
}

/// `peak · envelope(t) · e^{iϕ(t)}` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub t: Vec<f64>,
    /// In `[0, 1]`.
    pub envelope: Vec<f64>,
    /// Unwrapped, radians.
    pub phase: Vec<f64>,
    pub peak: f64,
}

impl ComplexField {
    /// Splits complex samples into envelope and phase; the phase is
    /// unwrapped outward from the sample of largest magnitude.
    pub fn from_samples(t: Vec<f64>, values: &[Complex64]) -> Self {
        let mags: Vec<f64> = values.iter().map(|z| z.norm()).collect();
        let (k, peak) = argmax(&mags);
        let mut phase: Vec<f64> = values.iter().map(|z| z.arg()).collect();
        unwrap_from(&mut phase, k);
        let envelope = mags
            .iter()
            .map(|m| if peak > 0.0 { m / peak } else { 0.0 })
            .collect();
        Self {
            t,
            envelope,
            phase,
            peak,
        }
    }

    pub fn samples(&self) -> Vec<Complex64> {
        self.envelope
            .iter()
            .zip(&self.phase)
            .map(|(&a, &p)| Complex64::from_polar(self.peak * a, p))
            .collect()
    }

    /// `dϕ/dt` by central differences, one-sided at the ends.
    pub fn instantaneous_frequency(&self) -> Vec<f64> {
        derivative(&self.t, &self.phase)
    }

    /// `∫|f|² dt`.
    pub fn energy(&self) -> f64 {
        let dt = self.t[1] - self.t[0];
        self.envelope.iter().map(|a| (self.peak * a).powi(2)).sum::<f64>() * dt
    }
}

/// Placement of modulator pixels on the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelLayout {
    pub count: usize,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

impl PixelLayout {
    pub fn width(&self) -> f64 {
        (self.omega_hi - self.omega_lo) / self.count as f64
    }

    /// Pixel holding frequency `w`, if any.
    pub fn index(&self, w: f64) -> Option<usize> {
        if w < self.omega_lo || w >= self.omega_hi {
            return None;
        }
        Some((((w - self.omega_lo) / self.width()) as usize).min(self.count - 1))
    }
}

/// `scale · amplitude(ω) · e^{iφ(ω)}` on ascending FFT frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    /// Relative to the carrier, `1/T`.
    pub omega: Vec<f64>,
    /// Non-negative, maximum 1.
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub scale: f64,
    pub grid: FftGrid,
    /// `None` for a continuous spectrum.
    pub pixels: Option<PixelLayout>,
}

impl SpectralField {
    fn from_values(grid: FftGrid, values: &[Complex64], pixels: Option<PixelLayout>) -> Self {
        let mags: Vec<f64> = values.iter().map(|z| z.norm()).collect();
        let (k, scale) = argmax(&mags);
        let mut phase: Vec<f64> = values.iter().map(|z| z.arg()).collect();
        unwrap_from(&mut phase, k);
        Self {
            omega: grid.omegas(),
            amplitude: normalized(&mags, scale),
            phase,
            scale,
            grid,
            pixels,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.map_or(0, |p| p.count)
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &p)| Complex64::from_polar(self.scale * a, p))
            .collect()
    }

    /// `(1/2π) ∫|F|² dω`.
    pub fn energy(&self) -> f64 {
        let dw = self.grid.d_omega();
        self.amplitude.iter().map(|a| (self.scale * a).powi(2)).sum::<f64>() * dw / (2.0 * PI)
    }

    /// Rows `omega_rel,amplitude,phase` for `|ω| ≤ max_omega`, frequencies
    /// multiplied by `omega_unit`.
    pub fn write_csv<W: Write>(&self, mut w: W, max_omega: f64, omega_unit: f64, preamble: &[String]) -> io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "omega_rel,amplitude,phase")?;
        for ((&om, &a), &p) in self.omega.iter().zip(&self.amplitude).zip(&self.phase) {
            if om.abs() <= max_omega {
                writeln!(w, "{},{},{}", sci(om * omega_unit), sci(a), sci(p))?;
            }
        }
        Ok(())
    }

    /// One row per pixel: its band edges and the value it holds.
    pub fn pixel_table(&self) -> Vec<Pixel> {
        let Some(layout) = self.pixels else {
            return Vec::new();
        };
        let mut table: Vec<Option<Pixel>> = vec![None; layout.count];
        for ((&om, &a), &p) in self.omega.iter().zip(&self.amplitude).zip(&self.phase) {
            if let Some(j) = layout.index(om) {
                table[j].get_or_insert(Pixel {
                    index: j,
                    omega_lo: layout.omega_lo + j as f64 * layout.width(),
                    omega_hi: layout.omega_lo + (j + 1) as f64 * layout.width(),
                    amplitude: a,
                    phase: p,
                });
            }
        }
        table.into_iter().flatten().collect()
    }

    /// Rows `pixel_index,omega_lo,omega_hi,amplitude,phase`.
    pub fn write_pixel_csv<W: Write>(&self, mut w: W, omega_unit: f64, preamble: &[String]) -> io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "pixel_index,omega_lo,omega_hi,amplitude,phase")?;
        for p in self.pixel_table() {
            writeln!(
                w,
                "{},{},{},{},{}",
                p.index,
                sci(p.omega_lo * omega_unit),
                sci(p.omega_hi * omega_unit),
                sci(p.amplitude),
                sci(p.phase)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub index: usize,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Temporal phase of one field of a constant-δ schedule, relative to the
/// carrier `ω_P(0)` (or `ω_S(0)`):
///
/// ```text
/// ϕ(t) = −∫₀ᵗ [Δ(t′) − Δ(0)] dt′
/// ```
///
/// Pump and Stokes carry the same chirp. The envelope is the Rabi
/// frequency normalized to its maximum.
pub fn instantaneous_phase(s: &Schedule, channel: Channel, grid: &FftGrid) -> Result<ComplexField> {
    grid.validate()?;
    let source = s.source();
    if let Some(p) = source.design() {
        if p.alpha != 0.0 {
            return Err(Error::UnsupportedVariant(
                "shaping needs a constant two-photon detuning (alpha = 0)".into(),
            ));
        }
    }
    let d2 = &s.delta2;
    let tol = 1e-12 * d2.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if d2.iter().any(|x| (x - d2[0]).abs() > tol) {
        return Err(Error::UnsupportedVariant(
            "shaping needs a constant two-photon detuning".into(),
        ));
    }

    let t = grid.times();
    let rabi: Vec<f64> = t
        .iter()
        .map(|&x| {
            let p = source.field_at(x);
            match channel {
                Channel::Pump => p.omega_p,
                Channel::Stokes => p.omega_s,
            }
        })
        .collect();
    let phase = match source {
        FieldSource::Parallel(p) => t.iter().map(|&x| erf_sweep_phase(p.omega0, x)).collect(),
        FieldSource::Linearized(p) => {
            let k = crate::design::linearized_slope(p.omega0);
            t.iter().map(|&x| -0.5 * k * x * x).collect()
        }
        _ => numeric_phase(source, &t),
    };
    let (_, peak) = argmax(&rabi);
    Ok(ComplexField {
        envelope: normalized(&rabi, peak),
        phase,
        peak,
        t,
    })
}

/// `−(3Ω₀/4) ∫₀ᵗ erf = −(3Ω₀/4)[t erf t + (e^{−t²} − 1)/√π]`.
fn erf_sweep_phase(omega0: f64, t: f64) -> f64 {
    -0.75 * omega0 * (t * libm::erf(t) + ((-t * t).exp() - 1.0) / PI.sqrt())
}

/// Cumulative trapezoid of `−(Δ(t) − Δ(0))` outward from `t = 0`.
fn numeric_phase(source: &FieldSource, t: &[f64]) -> Vec<f64> {
    let d0 = source.field_at(0.0).delta1;
    let rate: Vec<f64> = t.iter().map(|&x| -(source.field_at(x).delta1 - d0)).collect();
    let k0 = t
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut phase = vec![0.0; t.len()];
    // The rate vanishes at t = 0; integrate from there to the nearest sample.
    phase[k0] = 0.5 * rate[k0] * t[k0];
    for i in k0 + 1..t.len() {
        phase[i] = phase[i - 1] + 0.5 * (rate[i] + rate[i - 1]) * (t[i] - t[i - 1]);
    }
    for i in (0..k0).rev() {
        phase[i] = phase[i + 1] - 0.5 * (rate[i] + rate[i + 1]) * (t[i + 1] - t[i]);
    }
    phase
}

/// Discrete Fourier transform of `f`, scaled to approximate the continuous
/// transform. Fails if `f` has not decayed at the window edges.
pub fn to_spectrum(f: &ComplexField, grid: &FftGrid) -> Result<SpectralField> {
    grid.validate()?;
    if f.t.len() != grid.n {
        return Err(invalid("field", "sample count differs from the FFT grid"));
    }
    let edge = f.envelope[0].max(f.envelope[grid.n - 1]);
    if edge > EDGE_LIMIT {
        return Err(Error::WindowingViolation {
            edge_ratio: edge,
            limit: EDGE_LIMIT,
        });
    }
    let mut buf = f.samples();
    FftPlanner::new().plan_fft_forward(grid.n).process(&mut buf);
    let (dt, t0) = (grid.dt(), grid.t0());
    let omegas = grid.omegas();
    let half = grid.n / 2;
    // Ascending ω: index k of the output holds FFT bin (k + N/2) mod N.
    let values: Vec<Complex64> = (0..grid.n)
        .map(|k| {
            let z = buf[(k + half) % grid.n];
            z * Complex64::from_polar(dt, -omegas[k] * t0)
        })
        .collect();
    Ok(SpectralField::from_values(*grid, &values, None))
}

/// Inverse of [`to_spectrum`].
pub fn to_temporal(sf: &SpectralField) -> ComplexField {
    let grid = sf.grid;
    let (dt, t0) = (grid.dt(), grid.t0());
    let half = grid.n / 2;
    let values = sf.values();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.n];
    for (k, z) in values.iter().enumerate() {
        buf[(k + half) % grid.n] = z * Complex64::from_polar(1.0, sf.omega[k] * t0);
    }
    FftPlanner::new().plan_fft_inverse(grid.n).process(&mut buf);
    let norm = 1.0 / (grid.n as f64 * dt);
    for z in &mut buf {
        *z *= norm;
    }
    ComplexField::from_samples(grid.times(), &buf)
}

/// Piecewise-constant quantization over the whole frequency grid.
pub fn pixelize(sf: &SpectralField, pixels: usize) -> Result<SpectralField> {
    let dw = sf.grid.d_omega();
    let band = (sf.omega[0] - 0.5 * dw, sf.omega[sf.omega.len() - 1] + 0.5 * dw);
    pixelize_within(sf, pixels, band)
}

/// Splits `band` into `pixels` equal cells; each cell takes the mean
/// amplitude and mean phase of the samples it covers. Outside the band the
/// amplitude is zero.
pub fn pixelize_within(sf: &SpectralField, pixels: usize, band: (f64, f64)) -> Result<SpectralField> {
    if pixels < 2 {
        return Err(invalid("pixels", format!("must be >= 2, got {pixels}")));
    }
    if !(band.1 > band.0) {
        return Err(invalid("band", "upper edge must exceed lower edge"));
    }
    let layout = PixelLayout {
        count: pixels,
        omega_lo: band.0,
        omega_hi: band.1,
    };
    let cell: Vec<Option<usize>> = sf.omega.iter().map(|&w| layout.index(w)).collect();
    let mut sum_a = vec![0.0; pixels];
    let mut sum_p = vec![0.0; pixels];
    let mut count = vec![0usize; pixels];
    for (i, c) in cell.iter().enumerate() {
        if let Some(j) = *c {
            sum_a[j] += sf.amplitude[i];
            sum_p[j] += sf.phase[i];
            count[j] += 1;
        }
    }
    let mut amplitude = vec![0.0; sf.omega.len()];
    let mut phase = vec![0.0; sf.omega.len()];
    for (i, c) in cell.iter().enumerate() {
        if let Some(j) = *c {
            amplitude[i] = sum_a[j] / count[j] as f64;
            phase[i] = sum_p[j] / count[j] as f64;
        }
    }
    let (_, m) = argmax(&amplitude);
    Ok(SpectralField {
        omega: sf.omega.clone(),
        amplitude: normalized(&amplitude, m),
        phase,
        scale: sf.scale * m,
        grid: sf.grid,
        pixels: Some(layout),
    })
}

/// Pulse duration in units of `T` of an intensity-FWHM given in fs.
pub fn fwhm_in_t(fwhm_fs: f64, t_fs: f64) -> f64 {
    fwhm_fs / t_fs
}

/// Normalized spectral amplitude of a transform-limited Gaussian pulse of
/// intensity FWHM `tau` (same time unit as `1/ω`).
pub fn seed_spectrum(omega: &[f64], tau: f64) -> Vec<f64> {
    let c = tau * tau / (8.0 * std::f64::consts::LN_2);
    omega.iter().map(|w| (-c * w * w).exp()).collect()
}

/// Half-width of the band where the seed amplitude exceeds `floor`.
pub fn seed_band(tau: f64, floor: f64) -> f64 {
    (8.0 * std::f64::consts::LN_2 * (1.0 / floor).ln()).sqrt() / tau
}

/// Transmission of a passive modulator placed in the Fourier plane of the
/// seed, and what it took to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorMask {
    /// Amplitude is the transmission (maximum 1); `scale` is the absolute
    /// spectral amplitude of the seed at full transmission.
    pub mask: SpectralField,
    /// Half-width of the modulator band.
    pub band: f64,
    /// `max A/S` over the band, both normalized to unit peak. Above 1 the
    /// target was renormalized against the seed.
    pub seed_ratio: f64,
    /// Fraction of the target energy outside the band.
    pub out_of_band_energy: f64,
}

impl ModulatorMask {
    /// True if the unit-normalized target exceeded the seed somewhere and
    /// had to be renormalized.
    pub fn renormalized(&self) -> bool {
        self.seed_ratio > 1.0
    }
}

/// Mask turning `seed` (normalized amplitudes on the same grid) into
/// `target` within `|ω| ≤ band`.
pub fn design_mask(target: &SpectralField, seed: &[f64], band: f64) -> Result<ModulatorMask> {
    if seed.len() != target.omega.len() {
        return Err(invalid("seed", "length differs from the spectrum"));
    }
    let inside = |w: f64| w.abs() <= band;
    let ratio = target
        .omega
        .iter()
        .zip(&target.amplitude)
        .zip(seed)
        .filter(|((w, _), _)| inside(**w))
        .map(|((_, a), s)| a / s)
        .fold(0.0, f64::max);
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(invalid("band", "target has no support where the seed is nonzero"));
    }
    let mut out = 0.0;
    let mut total = 0.0;
    let transmission: Vec<f64> = target
        .omega
        .iter()
        .zip(&target.amplitude)
        .zip(seed)
        .map(|((&w, &a), &s)| {
            total += a * a;
            if inside(w) {
                a / (ratio * s)
            } else {
                out += a * a;
                0.0
            }
        })
        .collect();
    let (_, m) = argmax(&transmission);
    Ok(ModulatorMask {
        mask: SpectralField {
            omega: target.omega.clone(),
            amplitude: normalized(&transmission, m),
            phase: target
                .omega
                .iter()
                .zip(&target.phase)
                .map(|(&w, &p)| if inside(w) { p } else { 0.0 })
                .collect(),
            scale: target.scale * ratio * m,
            grid: target.grid,
            pixels: None,
        },
        band,
        seed_ratio: ratio,
        out_of_band_energy: if total > 0.0 { out / total } else { 0.0 },
    })
}

/// Output spectrum of the modulator: seed times transmission.
pub fn apply_mask(mask: &SpectralField, seed: &[f64]) -> SpectralField {
    let values: Vec<Complex64> = mask
        .values()
        .iter()
        .zip(seed)
        .map(|(z, &s)| z * s)
        .collect();
    SpectralField::from_values(mask.grid, &values, mask.pixels)
}

/// Which atomic levels the Λ system uses; absolute frequencies only enter
/// the reported carriers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    /// Level frequencies, rad/fs.
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub intensity_fwhm_fs: f64,
    pub dipole_debye: f64,
}

impl Default for PhysicalConfig {
    /// Illustrative level frequencies for a Λ system driven near 800 nm.
    fn default() -> Self {
        Self {
            omega1: 0.0,
            omega2: 2.355,
            omega3: 0.1,
            intensity_fwhm_fs: DEFAULT_FWHM_FS,
            dipole_debye: 1.0,
        }
    }
}

impl PhysicalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity_fwhm_fs > 0.0 && self.intensity_fwhm_fs.is_finite()) {
            return Err(invalid("intensity_fwhm_fs", "must be > 0"));
        }
        if !(self.dipole_debye > 0.0 && self.dipole_debye.is_finite()) {
            return Err(invalid("dipole_debye", "must be > 0"));
        }
        if !(self.omega2 > self.omega1 && self.omega2 > self.omega3) {
            return Err(invalid("omega2", "level 2 must lie above levels 1 and 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    pub t_fs: f64,
    pub omega0_rad_per_fs: f64,
    /// Angular, `10¹² rad/s`.
    pub omega0_thz: f64,
}

/// `T` and `Ω₀` in physical units for the Gaussian-fit envelopes, whose
/// intensity `exp(−2(t/βT)²)` has FWHM `2βT√(ln2/2)`.
pub fn physical_units(p: &DesignParams, intensity_fwhm_fs: f64) -> Result<PhysicalUnits> {
    if !(intensity_fwhm_fs > 0.0 && intensity_fwhm_fs.is_finite()) {
        return Err(invalid("intensity_fwhm_fs", "must be > 0"));
    }
    let beta = crate::design::fit_beta();
    let t_fs = intensity_fwhm_fs / (2.0 * beta * (0.5 * std::f64::consts::LN_2).sqrt());
    let w = p.omega0 / t_fs;
    Ok(PhysicalUnits {
        t_fs,
        omega0_rad_per_fs: w,
        omega0_thz: w * 1e3,
    })
}

/// Laboratory carriers `[ω_P, ω_S]` in rad/fs from the level frequencies
/// and the detunings (in `1/T`) at one instant:
/// `Δ = ω₂ − ω₁ − ω_P`, `δ = ω₃ − ω₁ − ω_P + ω_S`.
pub fn carriers(p: &PhysicalConfig, delta1: f64, delta2: f64, t_fs: f64) -> [f64; 2] {
    let wp = p.omega2 - p.omega1 - delta1 / t_fs;
    let ws = wp - (p.omega3 - p.omega1) + delta2 / t_fs;
    [wp, ws]
}

/// Peak intensity in GW/cm² of a field with Rabi frequency
/// `omega_peak_rad_per_s` on a transition of dipole `dipole_debye`.
pub fn peak_intensity(omega_peak_rad_per_s: f64, dipole_debye: f64) -> Result<f64> {
    if !(omega_peak_rad_per_s > 0.0 && dipole_debye > 0.0) {
        return Err(invalid("peak_intensity", "inputs must be > 0"));
    }
    use constants::*;
    let e = HBAR * omega_peak_rad_per_s / (dipole_debye * DEBYE);
    let w_per_m2 = 0.5 * C * EPSILON_0 * e * e;
    Ok(w_per_m2 * 1e-4 * 1e-9)
}

/// `P₃` from `|1⟩` for complex fields in the carrier frame, over
/// `[−span, span]`. Steps cover two grid samples so the RK4 midpoint is a
/// sample.
pub fn carrier_frame_p3(pump: &ComplexField, stokes: &ComplexField, delta1: f64, delta2: f64, span: f64) -> Result<f64> {
    let t = &pump.t;
    if stokes.t.len() != t.len() || t.len() < 3 {
        return Err(invalid("fields", "pump and stokes grids differ"));
    }
    let dt = t[1] - t[0];
    let i0 = ((-span - t[0]) / dt).round();
    let i1 = ((span - t[0]) / dt).round();
    if i0 < 0.0 || i1 as usize >= t.len() || i1 <= i0 {
        return Err(invalid("span", "outside the field grid"));
    }
    let (i0, mut i1) = (i0 as usize, i1 as usize);
    if (i1 - i0) % 2 == 1 {
        i1 -= 1;
    }
    let (cp, cs) = (pump.samples(), stokes.samples());
    let zero = Complex64::new(0.0, 0.0);
    let h = |k: usize| -> CMatrix3 {
        [
            [zero, 0.5 * cp[k], zero],
            [0.5 * cp[k].conj(), Complex64::new(delta1, 0.0), 0.5 * cs[k].conj()],
            [zero, 0.5 * cs[k], Complex64::new(delta2, 0.0)],
        ]
    };
    let nodes: Vec<usize> = (i0..=i1).step_by(2).collect();
    let times: Vec<f64> = nodes.iter().map(|&k| t[k]).collect();
    let traj = evolve(&times, &QuantumState::ground(), 2.0 * dt, |i, _, _| {
        let k = nodes[i];
        [h(k), h(k + 1), h(k + 2)]
    })?;
    Ok(traj.states.last().expect("at least one step").populations()[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingConfig {
    pub pixels: usize,
    pub seed_fwhm_fs: f64,
    pub grid: FftGrid,
    /// Half-width of the propagation window, `T`.
    pub span: f64,
    pub physical: PhysicalConfig,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            pixels: DEFAULT_PIXELS,
            seed_fwhm_fs: DEFAULT_SEED_FWHM_FS,
            grid: FftGrid::default(),
            span: DesignParams::DEFAULT_T_SPAN,
            physical: PhysicalConfig::default(),
        }
    }
}

/// One field through the shaper.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResult {
    pub channel: Channel,
    pub target: ComplexField,
    pub spectrum: SpectralField,
    pub mask: ModulatorMask,
    pub pixelized_mask: SpectralField,
    pub output: ComplexField,
    /// RMS of `|output| − |target|` over the propagation window, relative
    /// to the target peak.
    pub envelope_rms_error: f64,
    /// Largest `|dϕ/dt|` mismatch where the target envelope exceeds 0.1,
    /// relative to `Ω₀`.
    pub max_frequency_error: f64,
    /// See [`quantization_error`].
    pub quantization_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingSummary {
    pub units: PhysicalUnits,
    pub peak_rabi_rad_per_s: f64,
    pub peak_intensity_gw_cm2: f64,
    pub seed_band_rad_per_fs: f64,
    pub pixels: usize,
    pub p3_ideal: f64,
    pub p3_shaped: f64,
    pub delta_p3: f64,
    pub pump_envelope_rms_error: f64,
    pub stokes_envelope_rms_error: f64,
    pub pump_frequency_error: f64,
    pub stokes_frequency_error: f64,
    pub quantization_error: f64,
    pub renormalized: bool,
    pub out_of_band_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingReport {
    pub summary: ShapingSummary,
    pub pump: ChannelResult,
    pub stokes: ChannelResult,
}

/// Phase synthesis, spectrum, seed mask, pixelization, re-synthesis and
/// propagation for both fields of `s`.
pub fn shape_schedule(s: &Schedule, cfg: &ShapingConfig) -> Result<ShapingReport> {
    cfg.physical.validate()?;
    let design = *s
        .source()
        .design()
        .ok_or_else(|| Error::UnsupportedVariant("shaping needs a designed schedule".into()))?;
    let units = physical_units(&design, cfg.physical.intensity_fwhm_fs)?;
    let tau = fwhm_in_t(cfg.seed_fwhm_fs, units.t_fs);
    let band = seed_band(tau, SEED_BAND_FLOOR);
    let seed = seed_spectrum(&cfg.grid.omegas(), tau);

    let run = |channel| -> Result<ChannelResult> {
        let target = instantaneous_phase(s, channel, &cfg.grid)?;
        let spectrum = to_spectrum(&target, &cfg.grid)?;
        let mask = design_mask(&spectrum, &seed, band)?;
        let pixelized_mask = pixelize_within(&mask.mask, cfg.pixels, (-band, band))?;
        let output = to_temporal(&apply_mask(&pixelized_mask, &seed));
        let (envelope_rms_error, max_frequency_error) =
            roundtrip_errors(&target, &output, cfg.span, design.omega0);
        let quantization_error = quantization_error(&mask.mask, &pixelized_mask, band);
        Ok(ChannelResult {
            channel,
            target,
            spectrum,
            mask,
            pixelized_mask,
            output,
            envelope_rms_error,
            max_frequency_error,
            quantization_error,
        })
    };
    let pump = run(Channel::Pump)?;
    let stokes = run(Channel::Stokes)?;

    let d1 = s.source().field_at(0.0).delta1;
    let d2 = s.delta2[0];
    let p3_ideal = carrier_frame_p3(&pump.target, &stokes.target, d1, d2, cfg.span)?;
    let p3_shaped = carrier_frame_p3(&pump.output, &stokes.output, d1, d2, cfg.span)?;
    let peak_rabi = pump.target.peak.max(stokes.target.peak) / units.t_fs * 1e15;

    Ok(ShapingReport {
        summary: ShapingSummary {
            units,
            peak_rabi_rad_per_s: peak_rabi,
            peak_intensity_gw_cm2: peak_intensity(peak_rabi, cfg.physical.dipole_debye)?,
            seed_band_rad_per_fs: band / units.t_fs,
            pixels: cfg.pixels,
            p3_ideal,
            p3_shaped,
            delta_p3: p3_shaped - p3_ideal,
            pump_envelope_rms_error: pump.envelope_rms_error,
            stokes_envelope_rms_error: stokes.envelope_rms_error,
            pump_frequency_error: pump.max_frequency_error,
            stokes_frequency_error: stokes.max_frequency_error,
            quantization_error: pump.quantization_error.max(stokes.quantization_error),
            renormalized: pump.mask.renormalized() || stokes.mask.renormalized(),
            out_of_band_energy: pump.mask.out_of_band_energy.max(stokes.mask.out_of_band_energy),
        },
        pump,
        stokes,
    })
}

/// Envelope RMS error over `|t| ≤ span` and the largest instantaneous
/// frequency error where the target envelope exceeds 0.1.
pub fn roundtrip_errors(target: &ComplexField, output: &ComplexField, span: f64, omega0: f64) -> (f64, f64) {
    let f_target = target.instantaneous_frequency();
    let f_out = output.instantaneous_frequency();
    let mut sq = 0.0;
    let mut n = 0usize;
    let mut freq = 0.0f64;
    for i in 0..target.t.len() {
        if target.t[i].abs() > span {
            continue;
        }
        let a = target.peak * target.envelope[i];
        let b = output.peak * output.envelope[i];
        sq += (a - b).powi(2);
        n += 1;
        if target.envelope[i] > 0.1 {
            freq = freq.max((f_target[i] - f_out[i]).abs() / omega0);
        }
    }
    ((sq / n.max(1) as f64).sqrt() / target.peak, freq)
}

/// RMS of the complex difference between a continuous and a pixelized
/// mask over `|ω| ≤ band`, relative to the continuous peak.
pub fn quantization_error(continuous: &SpectralField, pixelized: &SpectralField, band: f64) -> f64 {
    let (a, b) = (continuous.values(), pixelized.values());
    let mut sq = 0.0;
    let mut n = 0usize;
    for (i, w) in continuous.omega.iter().enumerate() {
        if w.abs() <= band {
            sq += (a[i] - b[i]).norm_sqr();
            n += 1;
        }
    }
    (sq / n.max(1) as f64).sqrt() / continuous.scale
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc })
}

fn normalized(v: &[f64], peak: f64) -> Vec<f64> {
    if peak > 0.0 {
        v.iter().map(|x| x / peak).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Removes `2π` jumps, scanning outward from `center`.
pub fn unwrap_from(phase: &mut [f64], center: usize) {
    let fix = |prev: f64, cur: f64| cur - 2.0 * PI * ((cur - prev) / (2.0 * PI)).round();
    for i in center + 1..phase.len() {
        phase[i] = fix(phase[i - 1], phase[i]);
    }
    for i in (0..center).rev() {
        phase[i] = fix(phase[i + 1], phase[i]);
    }
}

fn derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[b] - y[a]) / (t[b] - t[a])
        })
        .collect()
}
