//! Transfer efficiency versus pulse area and fluence for the parallel
//! designs, the linear-chirp variant and conventional STIRAP.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use crate::design::{
    fluence, pulse_area, sci, DesignParams, FieldSource, Schedule, StirapParams, TimeGrid,
};
use crate::error::{invalid, Error, Result};
use crate::propagate::{final_p3, DEFAULT_DT};

/// A fully parameterized pulse family; the swept control is Ω₀T for the
/// parallel and linearized families and Ω_max·T for STIRAP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Strategy {
    Parallel { alpha: f64, beta: f64 },
    Linearized,
    Stirap { tau: f64 },
}

impl Strategy {
    pub const PARALLEL_CONSTANT: Strategy = Strategy::Parallel {
        alpha: 0.0,
        beta: 1.0,
    };

    /// Bumped two-photon detuning, `α = 0.1`, `β = 1.25`.
    pub const PARALLEL_BUMP: Strategy = Strategy::Parallel {
        alpha: 0.1,
        beta: 1.25,
    };

    pub fn stirap(tau: f64) -> Strategy {
        Strategy::Stirap { tau }
    }

    /// The five curves of the area/fluence comparison.
    pub fn comparison_set() -> [Strategy; 5] {
        [
            Strategy::PARALLEL_CONSTANT,
            Strategy::Linearized,
            Strategy::stirap(1.1),
            Strategy::stirap(1.0),
            Strategy::PARALLEL_BUMP,
        ]
    }

    pub fn tag(&self) -> String {
        self.to_string()
    }

    /// Builds the schedule at one control value.
    pub fn schedule(&self, control: f64, cfg: &SweepConfig) -> Result<Schedule> {
        let grid = cfg.grid();
        match *self {
            Strategy::Parallel { alpha, beta } => crate::design::make_parallel_schedule(
                &DesignParams::new(control)
                    .with_bump(alpha, beta)
                    .with_grid(grid.t_span, grid.n_samples),
            ),
            Strategy::Linearized => crate::design::linearized_schedule(
                &DesignParams::new(control).with_grid(grid.t_span, grid.n_samples),
            ),
            Strategy::Stirap { tau } => crate::design::stirap_schedule(
                &StirapParams {
                    omega_max: control,
                    tau,
                },
                &grid,
            ),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Parallel { alpha, .. } if *alpha == 0.0 => write!(f, "parallel-a0"),
            Strategy::Parallel { alpha, beta } => write!(f, "parallel-a{alpha}-b{beta}"),
            Strategy::Linearized => write!(f, "linearized"),
            Strategy::Stirap { tau } => write!(f, "stirap-tau{tau}"),
        }
    }
}

/// Numerical settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub t_span: f64,
    pub n_samples: usize,
    pub dt: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t_span: DesignParams::DEFAULT_T_SPAN,
            n_samples: DesignParams::DEFAULT_SAMPLES,
            dt: DEFAULT_DT,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t_span, self.n_samples)
    }
}

/// `steps + 1` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![start];
    }
    let h = (stop - start) / steps as f64;
    (0..=steps)
        .map(|i| if i == steps { stop } else { start + i as f64 * h })
        .collect()
}

/// Ω₀T from 3 to 14 in 45 steps.
pub fn default_parallel_grid() -> Vec<f64> {
    linspace(3.0, 14.0, 45)
}

/// Ω_max·T from 1 to 14 in 45 steps.
pub fn default_stirap_grid() -> Vec<f64> {
    linspace(1.0, 14.0, 45)
}

pub fn default_grid(strategy: &Strategy) -> Vec<f64> {
    match strategy {
        Strategy::Stirap { .. } => default_stirap_grid(),
        _ => default_parallel_grid(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub control: f64,
    /// Radians.
    pub area: f64,
    pub fluence: f64,
    pub p3: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub control: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub strategy: Strategy,
    pub config: SweepConfig,
    pub points: Vec<SweepPoint>,
    pub skipped: Vec<SkippedPoint>,
}

/// Runs one propagation per control value. Points are independent and run
/// in parallel; the output order is the grid order. Infeasible designs are
/// recorded in `skipped` and the sweep carries on.
pub fn sweep_strategy(strategy: Strategy, grid: &[f64], cfg: &SweepConfig) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(invalid("grid", "empty control grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid", "control grid must be strictly increasing"));
    }
    cfg.grid().validate()?;

    let outcomes: Vec<Result<SweepPoint>> = grid
        .par_iter()
        .map(|&control| evaluate_point(&strategy, control, cfg))
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for (outcome, &control) in outcomes.into_iter().zip(grid) {
        match outcome {
            Ok(p) => points.push(p),
            Err(e @ Error::InfeasibleDesign { .. }) => skipped.push(SkippedPoint {
                control,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(SweepResult {
        strategy,
        config: *cfg,
        points,
        skipped,
    })
}

pub fn evaluate_point(strategy: &Strategy, control: f64, cfg: &SweepConfig) -> Result<SweepPoint> {
    let s = strategy.schedule(control, cfg)?;
    let p3 = final_p3(&s, cfg.dt)?;
    Ok(SweepPoint {
        control,
        area: pulse_area(&s),
        fluence: fluence(&s),
        p3,
        deviation: 1.0 - p3,
    })
}

impl SweepResult {
    pub fn tag(&self) -> String {
        self.strategy.tag()
    }

    /// First crossing of `P₃ ≥ target`, linearly interpolated in
    /// `(control, P₃)`; area and fluence are interpolated with the same
    /// weight.
    pub fn first_reaching(&self, target_p3: f64) -> Option<Reach> {
        let pts = &self.points;
        let k = pts.iter().position(|p| p.p3 >= target_p3)?;
        if k == 0 {
            let p = pts[0];
            return Some(Reach {
                control: p.control,
                area: p.area,
                fluence: p.fluence,
            });
        }
        let (a, b) = (pts[k - 1], pts[k]);
        let w = (target_p3 - a.p3) / (b.p3 - a.p3);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        Some(Reach {
            control: lerp(a.control, b.control),
            area: lerp(a.area, b.area),
            fluence: lerp(a.fluence, b.fluence),
        })
    }

    /// Deviation `1 − P₃` at a given area, interpolating `log10(deviation)`
    /// linearly in area between the bracketing points.
    pub fn deviation_at_area(&self, area: f64) -> Option<f64> {
        let pts = &self.points;
        let k = pts.iter().position(|p| p.area >= area)?;
        if k == 0 {
            return (pts[0].area == area).then_some(pts[0].deviation);
        }
        let (a, b) = (pts[k - 1], pts[k]);
        let w = (area - a.area) / (b.area - a.area);
        let la = a.deviation.max(f64::MIN_POSITIVE).log10();
        let lb = b.deviation.max(f64::MIN_POSITIVE).log10();
        Some(10f64.powf(la + w * (lb - la)))
    }

    /// First grid point whose area is at least `area`.
    pub fn first_point_with_area(&self, area: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.area >= area)
    }

    /// Smallest deviation among points with area at most `max_area`.
    pub fn min_deviation_up_to(&self, max_area: f64) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.area <= max_area)
            .map(|p| p.deviation)
            .min_by(f64::total_cmp)
    }

    /// Rows `strategy,control,area_over_pi,fluence_T,p3,deviation`, no header.
    pub fn write_rows<W: Write>(&self, mut w: W) -> io::Result<()> {
        let tag = self.tag();
        for p in &self.points {
            writeln!(
                w,
                "{tag},{},{},{},{},{}",
                sci(p.control),
                sci(p.area / PI),
                sci(p.fluence),
                sci(p.p3),
                sci(p.deviation)
            )?;
        }
        Ok(())
    }
}

pub const SWEEP_CSV_HEADER: &str = "strategy,control,area_over_pi,fluence_T,p3,deviation";

/// Several sweeps in one CSV.
pub fn write_sweep_csv<W: Write>(mut w: W, sweeps: &[SweepResult], preamble: &[String]) -> io::Result<()> {
    for line in preamble {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for s in sweeps {
        s.write_rows(&mut w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reach {
    pub control: f64,
    pub area: f64,
    pub fluence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub target_p3: f64,
    pub reference: String,
    pub competitor: String,
    pub reference_reach: Reach,
    pub competitor_reach: Reach,
    /// Competitor area over reference area.
    pub area_ratio: f64,
    pub fluence_ratio: f64,
}

/// How much more area and fluence `competitor` needs than `reference` to
/// first reach `target_p3`.
pub fn crossover(reference: &SweepResult, competitor: &SweepResult, target_p3: f64) -> Result<Crossover> {
    let reach = |s: &SweepResult| {
        s.first_reaching(target_p3).ok_or_else(|| Error::UnreachableTarget {
            strategy: s.tag(),
            target: target_p3,
        })
    };
    let r = reach(reference)?;
    let c = reach(competitor)?;
    Ok(Crossover {
        target_p3,
        reference: reference.tag(),
        competitor: competitor.tag(),
        reference_reach: r,
        competitor_reach: c,
        area_ratio: c.area / r.area,
        fluence_ratio: c.fluence / r.fluence,
    })
}

/// Pulse families with an adjustable delay between pump and Stokes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DelayFamily {
    /// Delay is τ itself.
    Stirap,
    /// Delay is an extra separation of the envelopes: the pump moves by
    /// `+d/2`, the Stokes by `−d/2`, detunings stay put.
    Parallel { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayReport {
    pub family: DelayFamily,
    pub area: f64,
    pub delays: Vec<f64>,
    pub p3: Vec<f64>,
    /// `max P₃ − min P₃` over the delays.
    pub sensitivity: f64,
}

/// `P₃` versus delay at fixed total pulse area. Amplitudes are rescaled at
/// every delay so the area is exactly `area`.
pub fn delay_scan(family: DelayFamily, delays: &[f64], area: f64, cfg: &SweepConfig) -> Result<DelayReport> {
    if delays.is_empty() {
        return Err(invalid("delays", "empty delay grid"));
    }
    if !(area > 0.0) {
        return Err(invalid("area", "must be > 0"));
    }
    let grid = cfg.grid();
    let p3: Vec<f64> = delays
        .par_iter()
        .map(|&d| {
            let s = delayed_schedule(family, d, area, &grid)?;
            final_p3(&s, cfg.dt)
        })
        .collect::<Result<_>>()?;
    let hi = p3.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = p3.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DelayReport {
        family,
        area,
        delays: delays.to_vec(),
        p3,
        sensitivity: hi - lo,
    })
}

/// The schedule used by [`delay_scan`] at one delay.
pub fn delayed_schedule(family: DelayFamily, delay: f64, area: f64, grid: &TimeGrid) -> Result<Schedule> {
    let base = match family {
        DelayFamily::Stirap => FieldSource::Stirap(StirapParams {
            omega_max: 1.0,
            tau: delay,
        }),
        DelayFamily::Parallel { alpha, beta } => {
            // Every field scales with Ω₀, so the area is linear in it.
            let unit = DesignParams::new(1.0)
                .with_bump(alpha, beta)
                .with_grid(grid.t_span, grid.n_samples);
            let a1 = pulse_area(&crate::design::make_parallel_schedule(&unit)?);
            let design = DesignParams {
                omega0: area / a1,
                ..unit
            };
            design.validate()?;
            FieldSource::Shifted {
                base: Box::new(FieldSource::Parallel(design)),
                pump_shift: 0.5 * delay,
                stokes_shift: -0.5 * delay,
                scale: 1.0,
            }
        }
    };
    let raw = Schedule::from_source(base.clone(), grid)?;
    let scale = area / pulse_area(&raw);
    let scaled = match base {
        FieldSource::Stirap(s) => FieldSource::Stirap(StirapParams {
            omega_max: s.omega_max * scale,
            ..s
        }),
        FieldSource::Shifted {
            base,
            pump_shift,
            stokes_shift,
            ..
        } => FieldSource::Shifted {
            base,
            pump_shift,
            stokes_shift,
            scale,
        },
        other => other,
    };
    Schedule::from_source(scaled, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_counts_steps() {
        let g = default_parallel_grid();
        assert_eq!(g.len(), 46);
        assert_eq!(g[0], 3.0);
        assert_eq!(g[45], 14.0);
        assert_eq!(linspace(2.0, 5.0, 0), vec![2.0]);
    }

    #[test]
    fn tags() {
        assert_eq!(Strategy::PARALLEL_CONSTANT.tag(), "parallel-a0");
        assert_eq!(Strategy::PARALLEL_BUMP.tag(), "parallel-a0.1-b1.25");
        assert_eq!(Strategy::stirap(1.1).tag(), "stirap-tau1.1");
        assert_eq!(Strategy::Linearized.tag(), "linearized");
    }

    #[test]
    fn rejects_non_monotone_grid() {
        let cfg = SweepConfig::default();
        assert!(sweep_strategy(Strategy::Linearized, &[5.0, 4.0], &cfg).is_err());
        assert!(sweep_strategy(Strategy::Linearized, &[], &cfg).is_err());
    }

    #[test]
    fn single_point_sweep() {
        let cfg = SweepConfig::default();
        let s = sweep_strategy(Strategy::PARALLEL_CONSTANT, &[5.8], &cfg).unwrap();
        assert_eq!(s.points.len(), 1);
        let p = s.points[0];
        assert!((p.area / PI - 3.65).abs() < 0.01);
        assert!((p.p3 - 0.9945).abs() < 5e-4);
        assert_eq!(p.deviation, 1.0 - p.p3);
    }

    #[test]
    fn infeasible_points_are_skipped() {
        let strategy = Strategy::Parallel {
            alpha: -0.9,
            beta: 0.5,
        };
        let s = sweep_strategy(strategy, &[4.0, 5.0], &SweepConfig::default()).unwrap();
        assert!(s.points.is_empty());
        assert_eq!(s.skipped.len(), 2);
        assert!(s.skipped[0].reason.contains("infeasible"));
    }

    #[test]
    fn identical_sweeps_cross_at_ratio_one() {
        let cfg = SweepConfig::default();
        let s = sweep_strategy(Strategy::PARALLEL_CONSTANT, &linspace(5.0, 7.0, 4), &cfg).unwrap();
        let c = crossover(&s, &s, 0.995).unwrap();
        assert_eq!(c.area_ratio, 1.0);
        assert_eq!(c.fluence_ratio, 1.0);
    }

    #[test]
    fn unreachable_target_names_strategy() {
        let cfg = SweepConfig::default();
        let s = sweep_strategy(Strategy::stirap(1.1), &[1.0, 2.0], &cfg).unwrap();
        match crossover(&s, &s, 0.9) {
            Err(Error::UnreachableTarget { strategy, .. }) => assert_eq!(strategy, "stirap-tau1.1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interpolation_helpers() {
        let mk = |control: f64, area: f64, p3: f64| SweepPoint {
            control,
            area,
            fluence: 2.0 * area,
            p3,
            deviation: 1.0 - p3,
        };
        let s = SweepResult {
            strategy: Strategy::Linearized,
            config: SweepConfig::default(),
            points: vec![mk(1.0, 1.0, 0.9), mk(2.0, 2.0, 0.99), mk(3.0, 3.0, 0.999)],
            skipped: vec![],
        };
        let r = s.first_reaching(0.945).unwrap();
        assert!((r.control - 1.5).abs() < 1e-12);
        assert!((r.fluence - 3.0).abs() < 1e-12);
        let d = s.deviation_at_area(2.5).unwrap();
        assert!((d - 10f64.powf(-2.5)).abs() < 1e-15);
        assert_eq!(s.first_point_with_area(1.5).unwrap().control, 2.0);
        assert!((s.min_deviation_up_to(2.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(s.deviation_at_area(5.0).is_none());
    }

    #[test]
    fn sweep_points_match_rebuilt_schedules() {
        let cfg = SweepConfig::default();
        let grid = linspace(4.0, 6.0, 2);
        for strategy in [Strategy::PARALLEL_BUMP, Strategy::stirap(1.0)] {
            let s = sweep_strategy(strategy, &grid, &cfg).unwrap();
            for p in &s.points {
                let sched = strategy.schedule(p.control, &cfg).unwrap();
                assert_eq!(pulse_area(&sched), p.area);
                assert_eq!(fluence(&sched), p.fluence);
            }
        }
    }

    #[test]
    fn delay_scan_keeps_area_fixed() {
        let cfg = SweepConfig::default();
        let area = 3.6 * PI;
        for family in [
            DelayFamily::Stirap,
            DelayFamily::Parallel {
                alpha: 0.0,
                beta: 1.0,
            },
        ] {
            for d in [0.0, 0.03, 1.1] {
                let s = delayed_schedule(family, d, area, &cfg.grid()).unwrap();
                assert!((pulse_area(&s) - area).abs() < 1e-9 * area);
            }
        }
        let single = delay_scan(DelayFamily::Stirap, &[1.0], area, &cfg).unwrap();
        assert_eq!(single.sensitivity, 0.0);
    }

    #[test]
    fn csv_rows() {
        let cfg = SweepConfig::default();
        let s = sweep_strategy(Strategy::stirap(1.1), &[3.0], &cfg).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[s], &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("stirap-tau1.1,3.0000000000000000e0,"));
    }
}
