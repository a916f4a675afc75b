//! The five subcommands. Each writes its artifacts into the output
//! directory and returns the list of files written.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use parstirap::benchmark::{crossover, sweep_strategy, write_sweep_csv, Strategy};
use parstirap::design::{fluence, pulse_area, sci, Schedule};
use parstirap::lambda::QuantumState;
use parstirap::noise::{monte_carlo, MonteCarloResult, NoiseConfig};
use parstirap::propagate::propagate;
use parstirap::shaper::{carriers, shape_schedule, ChannelResult, SpectralField};
use serde_json::{json, Value};

use crate::config::{RunConfig, ScheduleSection};
use crate::error::CliError;
use crate::plots;

/// Largest norm drift a run may report and still succeed.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

pub struct Artifacts {
    dir: PathBuf,
    preamble: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, cfg: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            preamble: vec![
                format!("parstirap {}", env!("CARGO_PKG_VERSION")),
                format!("config: {}", cfg.provenance()),
            ],
            written: Vec::new(),
        })
    }

    pub fn preamble(&self) -> &[String] {
        &self.preamble
    }

    fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w).map_err(io)?;
        w.flush().map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("json value serializes");
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn csv<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>, &[String]) -> std::io::Result<()>,
    {
        let preamble = self.preamble.clone();
        self.write_with(name, |w| f(w, &preamble))
    }

    fn plot(&mut self, name: &str, template: &str, cfg: &RunConfig) -> Result<(), CliError> {
        self.text(name, &plots::render(template, cfg))
    }
}

fn config_value(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn build_schedule(section: &ScheduleSection) -> Result<Schedule, CliError> {
    Ok(section.build()?)
}

pub fn design(cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let s = build_schedule(&cfg.schedule)?;
    let mut art = Artifacts::new(out, cfg)?;
    art.csv("schedule.csv", |w, pre| s.write_csv(w, pre))?;

    let scale = cfg.schedule.field_scale();
    let last = s.len() - 1;
    let edge = [s.omega_p[0], s.omega_s[0], s.omega_p[last], s.omega_s[last]];
    let edge_ratio = edge.iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale;
    let asym = s
        .eigenvalues
        .iter()
        .map(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs())
        .fold(0.0, f64::max)
        / scale;
    let area = pulse_area(&s) / PI;
    let flu = fluence(&s);
    art.json(
        "design_summary.json",
        &json!({
            "config": config_value(cfg),
            "kind": ScheduleSection::source_kind(&s),
            "n_samples": s.len(),
            "area_over_pi": area,
            "fluence_T": flu,
            "endpoints": {
                "omega_p_first": s.omega_p[0],
                "omega_s_first": s.omega_s[0],
                "omega_p_last": s.omega_p[last],
                "omega_s_last": s.omega_s[last],
                "max_ratio_to_scale": edge_ratio,
                "within_1e-3": edge_ratio <= 1e-3,
            },
            "max_gap_asymmetry_over_scale": asym,
        }),
    )?;
    art.plot("plot_design.py", plots::DESIGN, cfg)?;
    println!("area = {area:.6} pi, fluence = {flu:.6} / T, endpoint field / scale = {edge_ratio:.3e}");
    Ok(art)
}

pub fn propagate_cmd(cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let s = build_schedule(&cfg.schedule)?;
    let r = propagate(&s, &QuantumState::ground(), cfg.propagate.dt)?;
    let mut art = Artifacts::new(out, cfg)?;
    art.csv("schedule.csv", |w, pre| s.write_csv(w, pre))?;
    art.csv("populations.csv", |w, pre| r.write_csv(w, pre))?;
    let amps: Vec<[f64; 2]> = r.final_state.amplitudes.iter().map(|z| [z.re, z.im]).collect();
    art.json(
        "final_state.json",
        &json!({
            "config": config_value(cfg),
            "final_populations": r.final_populations(),
            "p3": r.p3(),
            "max_p2": r.max_upper_population(),
            "final_amplitudes": amps,
            "norm_drift": r.norm_drift,
            "continuity_warning": r.continuity_warning,
        }),
    )?;
    art.plot("plot_propagate.py", plots::PROPAGATE, cfg)?;
    println!(
        "P = [{:.6}, {:.6}, {:.6}], norm drift {:.2e}",
        r.final_populations()[0],
        r.final_populations()[1],
        r.p3(),
        r.norm_drift
    );
    if r.norm_drift > NORM_DRIFT_LIMIT {
        return Err(CliError::Contract(format!(
            "norm drift {:e} exceeds {NORM_DRIFT_LIMIT:e}",
            r.norm_drift
        )));
    }
    Ok(art)
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let numerics = cfg.sweep.numerics();
    let mut sweeps = Vec::new();
    for spec in &cfg.sweep.strategies {
        let strategy = Strategy::from(*spec);
        sweeps.push(sweep_strategy(strategy, &cfg.sweep.grid_for(&strategy), &numerics)?);
    }

    let mut crossovers = Vec::new();
    for c in &cfg.sweep.crossovers {
        let find = |tag: &str| sweeps.iter().find(|s| s.tag() == tag).expect("validated tag");
        let entry = match crossover(find(&c.reference), find(&c.competitor), c.target_p3) {
            Ok(x) => {
                println!(
                    "to reach P3 = {}: {} needs {:.4}x the area and {:.4}x the fluence of {}",
                    c.target_p3, x.competitor, x.area_ratio, x.fluence_ratio, x.reference
                );
                serde_json::to_value(&x).expect("crossover serializes")
            }
            Err(e) => {
                println!("{e}");
                json!({
                    "reference": c.reference,
                    "competitor": c.competitor,
                    "target_p3": c.target_p3,
                    "error": e.to_string(),
                })
            }
        };
        crossovers.push(entry);
    }

    let mut art = Artifacts::new(out, cfg)?;
    art.csv("sweep.csv", |w, pre| write_sweep_csv(w, &sweeps, pre))?;
    let strategies: Vec<Value> = sweeps
        .iter()
        .map(|s| {
            json!({
                "tag": s.tag(),
                "strategy": s.strategy,
                "control": cfg.sweep.grid_for(&s.strategy),
                "n_points": s.points.len(),
                "skipped": s.skipped,
            })
        })
        .collect();
    art.json(
        "sweep_manifest.json",
        &json!({
            "config": config_value(cfg),
            "numerics": numerics,
            "csv": "sweep.csv",
            "strategies": strategies,
            "crossovers": crossovers,
        }),
    )?;
    art.plot("plot_sweep.py", plots::SWEEP, cfg)?;
    Ok(art)
}

fn write_mean_populations<W: Write>(
    w: &mut W,
    pre: &[String],
    noisy: &MonteCarloResult,
    clean: &MonteCarloResult,
) -> std::io::Result<()> {
    for line in pre {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "t,p1,p2,p3,p1_clean,p2_clean,p3_clean")?;
    for ((t, p), q) in noisy.t.iter().zip(&noisy.mean_populations).zip(&clean.mean_populations) {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            sci(*t),
            sci(p[0]),
            sci(p[1]),
            sci(p[2]),
            sci(q[0]),
            sci(q[1]),
            sci(q[2])
        )?;
    }
    Ok(())
}

pub fn noise(cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let s = build_schedule(&cfg.schedule)?;
    let nc = cfg.noise.config(cfg.seed);
    let noisy = monte_carlo(&s, &nc)?;
    let clean = monte_carlo(
        &s,
        &NoiseConfig {
            gamma: 0.0,
            n_realizations: 1,
            ..nc
        },
    )?;
    let mut art = Artifacts::new(out, cfg)?;
    art.csv("noise_populations.csv", |w, pre| write_mean_populations(w, pre, &noisy, &clean))?;
    let final_p3: Vec<f64> = noisy.realizations.iter().map(|r| r.final_populations[2]).collect();
    let r1: Vec<f64> = noisy.realizations.iter().map(|r| r.r1).collect();
    art.json(
        "noise.json",
        &json!({
            "config": config_value(cfg),
            "design": cfg.schedule,
            "noise": nc,
            "mean_p3": noisy.mean_p3,
            "stderr_p3": noisy.stderr_p3,
            "deterministic_p3": clean.mean_p3,
            "max_norm_drift": noisy.max_norm_drift,
            "populations_csv": "noise_populations.csv",
            "realizations": { "r1": r1, "final_p3": final_p3 },
        }),
    )?;
    art.plot("plot_noise.py", plots::NOISE, cfg)?;
    println!(
        "mean P3 = {:.6} +/- {:.1e} over {} realizations (without noise {:.6})",
        noisy.mean_p3, noisy.stderr_p3, nc.n_realizations, clean.mean_p3
    );
    if noisy.max_norm_drift > NORM_DRIFT_LIMIT {
        return Err(CliError::Contract(format!(
            "norm drift {:e} exceeds {NORM_DRIFT_LIMIT:e}",
            noisy.max_norm_drift
        )));
    }
    Ok(art)
}

fn write_spectrum<W: Write>(w: &mut W, pre: &[String], sf: &SpectralField, band: f64, t_fs: f64) -> std::io::Result<()> {
    sf.write_csv(w, band, 1.0 / t_fs, pre)
}

fn write_fields<W: Write>(
    w: &mut W,
    pre: &[String],
    pump: &ChannelResult,
    stokes: &ChannelResult,
    span: f64,
    t_fs: f64,
) -> std::io::Result<()> {
    for line in pre {
        writeln!(w, "# {line}")?;
    }
    writeln!(
        w,
        "t,t_fs,pump_target,pump_shaped,stokes_target,stokes_shaped,freq_target,freq_shaped"
    )?;
    let f_target = pump.target.instantaneous_frequency();
    let f_shaped = pump.output.instantaneous_frequency();
    let t = &pump.target.t;
    for i in (0..t.len()).step_by(4) {
        if t[i].abs() > span {
            continue;
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            sci(t[i]),
            sci(t[i] * t_fs),
            sci(pump.target.peak * pump.target.envelope[i]),
            sci(pump.output.peak * pump.output.envelope[i]),
            sci(stokes.target.peak * stokes.target.envelope[i]),
            sci(stokes.output.peak * stokes.output.envelope[i]),
            sci(f_target[i]),
            sci(f_shaped[i])
        )?;
    }
    Ok(())
}

pub fn shape(cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let s = build_schedule(&cfg.schedule)?;
    let sc = cfg.shape.config();
    let report = shape_schedule(&s, &sc)?;
    let sum = report.summary;
    let t_fs = sum.units.t_fs;
    let band = report.pump.mask.band;

    let mut art = Artifacts::new(out, cfg)?;
    for ch in [&report.pump, &report.stokes] {
        let name = ch.channel.name();
        art.csv(&format!("spectrum_{name}.csv"), |w, pre| write_spectrum(w, pre, &ch.spectrum, band, t_fs))?;
        art.csv(&format!("mask_{name}.csv"), |w, pre| write_spectrum(w, pre, &ch.mask.mask, band, t_fs))?;
        art.csv(&format!("pixels_{name}.csv"), |w, pre| {
            ch.pixelized_mask.write_pixel_csv(w, 1.0 / t_fs, pre)
        })?;
    }
    art.csv("fields_shaped.csv", |w, pre| {
        write_fields(w, pre, &report.pump, &report.stokes, sc.span, t_fs)
    })?;
    let units = sum.units;
    let f0 = s.source().field_at(0.0);
    let [wp, ws] = carriers(&sc.physical, f0.delta1, f0.delta2, units.t_fs);
    art.json(
        "shape_report.json",
        &json!({
            "config": config_value(cfg),
            "summary": sum,
            "carriers_at_t0_rad_per_fs": { "pump": wp, "stokes": ws },
            "mask_seed_ratio": { "pump": report.pump.mask.seed_ratio, "stokes": report.stokes.mask.seed_ratio },
            "files": {
                "spectra": ["spectrum_pump.csv", "spectrum_stokes.csv"],
                "masks": ["mask_pump.csv", "mask_stokes.csv"],
                "pixels": ["pixels_pump.csv", "pixels_stokes.csv"],
                "fields": "fields_shaped.csv",
            },
        }),
    )?;
    art.plot("plot_shape.py", plots::SHAPE, cfg)?;
    println!(
        "T = {:.2} fs, Omega0 = {:.3} THz, peak intensity {:.2} GW/cm2, P3 {:.6} -> {:.6} with {} pixels",
        units.t_fs, units.omega0_thz, sum.peak_intensity_gw_cm2, sum.p3_ideal, sum.p3_shaped, sum.pixels
    );
    Ok(art)
}
