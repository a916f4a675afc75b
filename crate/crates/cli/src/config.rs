//! Run configuration: a versioned JSON document, validated before any
//! computation. Every section has defaults, so `{"version": 1}` is a valid
//! config describing the Fig. 1 design.

use parstirap::benchmark::{linspace, Strategy, SweepConfig};
use parstirap::design::{DesignParams, FieldSource, Schedule, StirapParams, TimeGrid};
use parstirap::lambda::FieldPoint;
use parstirap::noise::NoiseConfig;
use parstirap::shaper::{FftGrid, PhysicalConfig, ShapingConfig};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config format version; must be 1.
    pub version: u32,
    /// Seed for the Monte-Carlo noise streams.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub propagate: PropagateSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub shape: ShapeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            schedule: ScheduleSection::default(),
            propagate: PropagateSection::default(),
            sweep: SweepSection::default(),
            noise: NoiseSection::default(),
            shape: ShapeSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Parallel,
    Linearized,
    Stirap,
    /// All fields and detunings zero.
    Zero,
}

/// The schedule used by `design`, `propagate`, `noise` and `shape`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub kind: ScheduleKind,
    /// Ω₀T for the parallel and linearized designs.
    pub omega0: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Peak Rabi frequency of STIRAP pulses, 1/T.
    pub omega_max: f64,
    /// STIRAP delay, T.
    pub tau: f64,
    /// Half-width of the time window, T.
    pub t_span: f64,
    pub n_samples: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Parallel,
            omega0: 5.8,
            alpha: 0.0,
            beta: 1.0,
            omega_max: 10.0,
            tau: 1.1,
            t_span: DesignParams::DEFAULT_T_SPAN,
            n_samples: DesignParams::DEFAULT_SAMPLES,
        }
    }
}

impl ScheduleSection {
    pub fn design(&self) -> DesignParams {
        DesignParams::new(self.omega0)
            .with_bump(self.alpha, self.beta)
            .with_grid(self.t_span, self.n_samples)
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t_span, self.n_samples)
    }

    pub fn build(&self) -> parstirap::Result<Schedule> {
        let grid = self.grid();
        match self.kind {
            ScheduleKind::Parallel => parstirap::design::make_parallel_schedule(&self.design()),
            ScheduleKind::Linearized => parstirap::design::linearized_schedule(&self.design()),
            ScheduleKind::Stirap => parstirap::design::stirap_schedule(
                &StirapParams {
                    omega_max: self.omega_max,
                    tau: self.tau,
                },
                &grid,
            ),
            ScheduleKind::Zero => {
                grid.validate()?;
                let t = grid.points();
                let points = vec![FieldPoint::new(0.0, 0.0, 0.0, 0.0); t.len()];
                Schedule::custom(t, points)
            }
        }
    }

    /// Scale of the field values: Ω₀ for designs, Ω_max for STIRAP.
    pub fn field_scale(&self) -> f64 {
        match self.kind {
            ScheduleKind::Stirap => self.omega_max,
            _ => self.omega0,
        }
    }

    pub fn source_kind(s: &Schedule) -> &'static str {
        match s.source() {
            FieldSource::Parallel(_) => "parallel",
            FieldSource::Linearized(_) => "linearized",
            FieldSource::Stirap(_) => "stirap",
            _ => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PropagateSection {
    /// Largest RK4 step, T.
    pub dt: f64,
}

impl Default for PropagateSection {
    fn default() -> Self {
        Self {
            dt: parstirap::propagate::DEFAULT_DT,
        }
    }
}

/// `steps + 1` evenly spaced control values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum StrategySpec {
    Parallel { alpha: f64, beta: f64 },
    Linearized,
    Stirap { tau: f64 },
}

impl From<StrategySpec> for Strategy {
    fn from(s: StrategySpec) -> Self {
        match s {
            StrategySpec::Parallel { alpha, beta } => Strategy::Parallel { alpha, beta },
            StrategySpec::Linearized => Strategy::Linearized,
            StrategySpec::Stirap { tau } => Strategy::Stirap { tau },
        }
    }
}

impl From<Strategy> for StrategySpec {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Parallel { alpha, beta } => StrategySpec::Parallel { alpha, beta },
            Strategy::Linearized => StrategySpec::Linearized,
            Strategy::Stirap { tau } => StrategySpec::Stirap { tau },
        }
    }
}

/// First-reach comparison between two swept strategies, named by tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CrossoverSpec {
    pub reference: String,
    pub competitor: String,
    pub target_p3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub strategies: Vec<StrategySpec>,
    /// Ω₀T values for parallel and linearized strategies.
    pub parallel_grid: GridSpec,
    /// Ω_max·T values for STIRAP.
    pub stirap_grid: GridSpec,
    pub crossovers: Vec<CrossoverSpec>,
    pub dt: f64,
    pub t_span: f64,
    pub n_samples: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            strategies: Strategy::comparison_set().into_iter().map(Into::into).collect(),
            parallel_grid: GridSpec {
                start: 3.0,
                stop: 14.0,
                steps: 45,
            },
            stirap_grid: GridSpec {
                start: 1.0,
                stop: 14.0,
                steps: 45,
            },
            crossovers: vec![
                CrossoverSpec {
                    reference: "parallel-a0".into(),
                    competitor: "stirap-tau1.1".into(),
                    target_p3: 0.995,
                },
                CrossoverSpec {
                    reference: "linearized".into(),
                    competitor: "stirap-tau1.1".into(),
                    target_p3: 0.99,
                },
            ],
            dt: d.dt,
            t_span: d.t_span,
            n_samples: d.n_samples,
        }
    }
}

impl SweepSection {
    pub fn numerics(&self) -> SweepConfig {
        SweepConfig {
            t_span: self.t_span,
            n_samples: self.n_samples,
            dt: self.dt,
        }
    }

    pub fn grid_for(&self, s: &Strategy) -> Vec<f64> {
        match s {
            Strategy::Stirap { .. } => self.stirap_grid.values(),
            _ => self.parallel_grid.values(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Noise width, 1/T.
    pub gamma: f64,
    pub n_realizations: usize,
    /// Step and noise correlation time, T.
    pub dt: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            gamma: NoiseConfig::DEFAULT_GAMMA,
            n_realizations: NoiseConfig::DEFAULT_REALIZATIONS,
            dt: NoiseConfig::DEFAULT_DT,
        }
    }
}

impl NoiseSection {
    pub fn config(&self, seed: u64) -> NoiseConfig {
        NoiseConfig {
            gamma: self.gamma,
            n_realizations: self.n_realizations,
            seed,
            dt: self.dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalSection {
    /// Level frequencies, rad/fs.
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub intensity_fwhm_fs: f64,
    pub dipole_debye: f64,
}

impl Default for PhysicalSection {
    fn default() -> Self {
        let p = PhysicalConfig::default();
        Self {
            omega1: p.omega1,
            omega2: p.omega2,
            omega3: p.omega3,
            intensity_fwhm_fs: p.intensity_fwhm_fs,
            dipole_debye: p.dipole_debye,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeSection {
    pub pixels: usize,
    pub seed_fwhm_fs: f64,
    pub fft_samples: usize,
    /// Half-width of the FFT window, T.
    pub fft_half_width: f64,
    /// Half-width of the propagation window, T.
    pub span: f64,
    pub physical: PhysicalSection,
}

impl Default for ShapeSection {
    fn default() -> Self {
        let d = ShapingConfig::default();
        Self {
            pixels: d.pixels,
            seed_fwhm_fs: d.seed_fwhm_fs,
            fft_samples: d.grid.n,
            fft_half_width: d.grid.half_width,
            span: d.span,
            physical: PhysicalSection::default(),
        }
    }
}

impl ShapeSection {
    pub fn config(&self) -> ShapingConfig {
        let p = self.physical;
        ShapingConfig {
            pixels: self.pixels,
            seed_fwhm_fs: self.seed_fwhm_fs,
            grid: FftGrid {
                n: self.fft_samples,
                half_width: self.fft_half_width,
            },
            span: self.span,
            physical: PhysicalConfig {
                omega1: p.omega1,
                omega2: p.omega2,
                omega3: p.omega3,
                intensity_fwhm_fs: p.intensity_fwhm_fs,
                dipole_debye: p.dipole_debye,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig23,
    Fig4,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig1, Preset::Fig23, Preset::Fig4, Preset::Fig5];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig23 => "fig23",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }

    pub fn parse(name: &str) -> Option<Preset> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn source(&self) -> &'static str {
        match self {
            Preset::Fig1 => include_str!("../presets/fig1.json"),
            Preset::Fig23 => include_str!("../presets/fig23.json"),
            Preset::Fig4 => include_str!("../presets/fig4.json"),
            Preset::Fig5 => include_str!("../presets/fig5.json"),
        }
    }

    pub fn load(&self) -> Result<RunConfig, String> {
        parse_config(self.source())
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, x: f64) -> Result<(), String> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(format!("`{name}` must be a positive number, got {x}"))
    }
}

impl RunConfig {
    /// Checks the ranges the schema cannot express. Physics-level checks
    /// (feasibility, grid spacing) are left to the library.
    pub fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        let s = &self.schedule;
        positive("schedule.t_span", s.t_span)?;
        if s.n_samples < 2 {
            return Err("`schedule.n_samples` must be >= 2".into());
        }
        match s.kind {
            ScheduleKind::Parallel | ScheduleKind::Linearized => {
                positive("schedule.omega0", s.omega0)?;
                positive("schedule.beta", s.beta)?;
            }
            ScheduleKind::Stirap => {
                positive("schedule.omega_max", s.omega_max)?;
                if !(s.tau >= 0.0 && s.tau.is_finite()) {
                    return Err("`schedule.tau` must be >= 0".into());
                }
            }
            ScheduleKind::Zero => {}
        }
        positive("propagate.dt", self.propagate.dt)?;

        let w = &self.sweep;
        positive("sweep.dt", w.dt)?;
        positive("sweep.t_span", w.t_span)?;
        if w.n_samples < 2 {
            return Err("`sweep.n_samples` must be >= 2".into());
        }
        for (name, g) in [("sweep.parallel_grid", w.parallel_grid), ("sweep.stirap_grid", w.stirap_grid)] {
            if !(g.start.is_finite() && g.stop.is_finite()) || (g.steps > 0 && g.stop <= g.start) {
                return Err(format!("`{name}` must satisfy start < stop (or steps = 0)"));
            }
        }
        let tags: Vec<String> = w.strategies.iter().map(|s| Strategy::from(*s).tag()).collect();
        for c in &w.crossovers {
            for tag in [&c.reference, &c.competitor] {
                if !tags.contains(tag) {
                    return Err(format!("crossover names unknown strategy `{tag}` (known: {tags:?})"));
                }
            }
            if !(c.target_p3 > 0.0 && c.target_p3 < 1.0) {
                return Err("`crossovers[].target_p3` must lie in (0, 1)".into());
            }
        }

        let n = &self.noise;
        if !(n.gamma >= 0.0 && n.gamma.is_finite()) {
            return Err("`noise.gamma` must be >= 0".into());
        }
        if n.n_realizations == 0 {
            return Err("`noise.n_realizations` must be >= 1".into());
        }
        positive("noise.dt", n.dt)?;

        let sh = &self.shape;
        if sh.pixels < 2 {
            return Err("`shape.pixels` must be >= 2".into());
        }
        if sh.fft_samples < 4 || sh.fft_samples % 2 != 0 {
            return Err("`shape.fft_samples` must be even and >= 4".into());
        }
        positive("shape.seed_fwhm_fs", sh.seed_fwhm_fs)?;
        positive("shape.fft_half_width", sh.fft_half_width)?;
        positive("shape.span", sh.span)?;
        if sh.span >= sh.fft_half_width {
            return Err("`shape.span` must be smaller than `shape.fft_half_width`".into());
        }
        self.shape.config().physical.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// One-line JSON of the resolved config, for provenance headers.
    pub fn provenance(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// The published JSON schema of [`RunConfig`].
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(RunConfig);
    serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
}
