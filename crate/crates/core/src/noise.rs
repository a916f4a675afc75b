//! Monte-Carlo robustness of a schedule against random amplitude and
//! detuning noise.
//!
//! Per realization, one offset `r₁` is drawn; per integration step, `r₂`,
//! `r₃`, `r₄` are drawn and held through the RK4 substages:
//!
//! ```text
//! Ω_F = Ω + Γ Λ (r₁ + r₂),   Λ = Ω / max Ω
//! Δ_F = Δ + Γ r₃
//! δ_F = δ + Γ r₄
//! ```
//!
//! with all `r` uniform on `[−½, ½)`. `r₁` and `r₂` are shared by the two
//! fields. Realization `k` draws from a ChaCha8 stream keyed by
//! `(seed, k)`, so results do not depend on the number of threads.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{FieldSource, Schedule};
use crate::error::{invalid, Result};
use crate::lambda::{FieldPoint, QuantumState};
use crate::propagate::evolve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Noise strength in units of `1/T`.
    pub gamma: f64,
    pub n_realizations: usize,
    pub seed: u64,
    /// Integration step; also the noise correlation time.
    pub dt: f64,
}

impl NoiseConfig {
    pub const DEFAULT_GAMMA: f64 = 0.5;
    pub const DEFAULT_REALIZATIONS: usize = 400;
    pub const DEFAULT_DT: f64 = 1.0 / 300.0;

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        if self.n_realizations == 0 {
            return Err(invalid("n_realizations", "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            gamma: Self::DEFAULT_GAMMA,
            n_realizations: Self::DEFAULT_REALIZATIONS,
            seed: 0,
            dt: Self::DEFAULT_DT,
        }
    }
}

/// Uniform draw on `[−½, ½)`.
pub fn centered_uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

/// The generator for realization `index`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Noise values held over one integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepNoise {
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

/// The random numbers of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub r1: f64,
    pub steps: Vec<StepNoise>,
}

impl NoiseDraw {
    pub fn sample(rng: &mut ChaCha8Rng, n_steps: usize) -> Self {
        let r1 = centered_uniform(rng);
        let steps = (0..n_steps)
            .map(|_| StepNoise {
                r2: centered_uniform(rng),
                r3: centered_uniform(rng),
                r4: centered_uniform(rng),
            })
            .collect();
        Self { r1, steps }
    }

    pub fn zero(n_steps: usize) -> Self {
        Self {
            r1: 0.0,
            steps: vec![
                StepNoise {
                    r2: 0.0,
                    r3: 0.0,
                    r4: 0.0
                };
                n_steps
            ],
        }
    }
}

/// Applies the noise model to one field point. `peaks` are the maxima of
/// `Ω_P` and `Ω_S` used to normalize the envelopes.
pub fn perturb_point(p: &FieldPoint, peaks: (f64, f64), gamma: f64, r1: f64, n: &StepNoise) -> FieldPoint {
    let lam = |x: f64, peak: f64| if peak > 0.0 { x / peak } else { 0.0 };
    let a = gamma * (r1 + n.r2);
    FieldPoint::new(
        p.omega_p + a * lam(p.omega_p, peaks.0),
        p.omega_s + a * lam(p.omega_s, peaks.1),
        p.delta1 + gamma * n.r3,
        p.delta2 + gamma * n.r4,
    )
}

/// Maxima of the two Rabi frequencies over the schedule's samples.
pub fn field_peaks(s: &Schedule) -> (f64, f64) {
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    (max(&s.omega_p), max(&s.omega_s))
}

/// Evenly spaced times from the schedule's first to last sample, with the
/// largest spacing not above `dt`.
pub fn noise_grid(s: &Schedule, dt: f64) -> Vec<f64> {
    let (t0, t1) = (s.t[0], s.t[s.t.len() - 1]);
    let n_steps = (((t1 - t0) / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n_steps as f64;
    (0..=n_steps)
        .map(|i| if i == n_steps { t1 } else { t0 + i as f64 * h })
        .collect()
}

/// Perturbed fields at the three RK4 nodes of every step.
pub fn perturb_fields(
    source: &FieldSource,
    t: &[f64],
    peaks: (f64, f64),
    gamma: f64,
    draw: &NoiseDraw,
) -> Vec<[FieldPoint; 3]> {
    t.windows(2)
        .zip(&draw.steps)
        .map(|(w, n)| {
            let at = |x: f64| perturb_point(&source.field_at(x), peaks, gamma, draw.r1, n);
            [at(w[0]), at(0.5 * (w[0] + w[1])), at(w[1])]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyRealization {
    pub index: u64,
    pub r1: f64,
    pub final_populations: [f64; 3],
    pub norm_drift: f64,
}

/// One realization from `|1⟩`. Returns the population series on `t`.
pub fn run_realization(
    source: &FieldSource,
    t: &[f64],
    peaks: (f64, f64),
    gamma: f64,
    draw: &NoiseDraw,
    index: u64,
) -> Result<(NoisyRealization, Vec<[f64; 3]>)> {
    if draw.steps.len() + 1 != t.len() {
        return Err(invalid("draw", "one noise sample per step required"));
    }
    let fields = perturb_fields(source, t, peaks, gamma, draw);
    let dt = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let traj = evolve(t, &QuantumState::ground(), dt, |i, _, _| fields[i].map(|p| p.matrix()))?;
    let pops: Vec<[f64; 3]> = traj.states.iter().map(QuantumState::populations).collect();
    let final_populations = *pops.last().expect("grid has >= 2 samples");
    Ok((
        NoisyRealization {
            index,
            r1: draw.r1,
            final_populations,
            norm_drift: traj.norm_drift,
        },
        pops,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub config: NoiseConfig,
    pub t: Vec<f64>,
    /// Populations averaged over realizations at every time in `t`.
    pub mean_populations: Vec<[f64; 3]>,
    pub mean_p3: f64,
    /// Standard error of the mean final `P₃`.
    pub stderr_p3: f64,
    pub max_norm_drift: f64,
    pub realizations: Vec<NoisyRealization>,
}

/// Runs `cfg.n_realizations` noisy propagations of `s` from `|1⟩`.
/// Realizations run in parallel; averages are accumulated in index order.
pub fn monte_carlo(s: &Schedule, cfg: &NoiseConfig) -> Result<MonteCarloResult> {
    cfg.validate()?;
    let source = s.source();
    let t = noise_grid(s, cfg.dt);
    let peaks = field_peaks(s);
    let n_steps = t.len() - 1;

    let runs: Vec<(NoisyRealization, Vec<[f64; 3]>)> = (0..cfg.n_realizations as u64)
        .into_par_iter()
        .map(|k| {
            let draw = NoiseDraw::sample(&mut realization_rng(cfg.seed, k), n_steps);
            run_realization(source, &t, peaks, cfg.gamma, &draw, k)
        })
        .collect::<Result<_>>()?;

    let n = runs.len() as f64;
    let mut mean_populations = vec![[0.0; 3]; t.len()];
    for (_, pops) in &runs {
        for (acc, p) in mean_populations.iter_mut().zip(pops) {
            for j in 0..3 {
                acc[j] += p[j];
            }
        }
    }
    for acc in &mut mean_populations {
        for x in acc.iter_mut() {
            *x /= n;
        }
    }

    let realizations: Vec<NoisyRealization> = runs.into_iter().map(|(r, _)| r).collect();
    let p3: Vec<f64> = realizations.iter().map(|r| r.final_populations[2]).collect();
    let mean_p3 = p3.iter().sum::<f64>() / n;
    let stderr_p3 = if p3.len() > 1 {
        let var = p3.iter().map(|x| (x - mean_p3).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let max_norm_drift = realizations.iter().map(|r| r.norm_drift).fold(0.0, f64::max);

    Ok(MonteCarloResult {
        config: *cfg,
        t,
        mean_populations,
        mean_p3,
        stderr_p3,
        max_norm_drift,
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{make_parallel_schedule, DesignParams};
    use crate::propagate::propagate;

    fn fig1() -> Schedule {
        make_parallel_schedule(&DesignParams::new(5.8)).unwrap()
    }

    fn cfg(gamma: f64, n: usize) -> NoiseConfig {
        NoiseConfig {
            gamma,
            n_realizations: n,
            seed: 11,
            ..NoiseConfig::default()
        }
    }

    #[test]
    fn draws_pass_kolmogorov_smirnov() {
        let mut rng = realization_rng(3, 0);
        let n = 100_000;
        let mut x: Vec<f64> = (0..n).map(|_| centered_uniform(&mut rng) + 0.5).collect();
        x.sort_by(f64::total_cmp);
        let d = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let lo = v - i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64 - v;
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        // Asymptotic critical value at the 1% level.
        assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
        assert!(x[0] >= 0.0 && x[n - 1] < 1.0);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: Vec<f64> = (0..4).map({
            let mut r = realization_rng(5, 1);
            move |_| centered_uniform(&mut r)
        }).collect();
        let b: Vec<f64> = (0..4).map({
            let mut r = realization_rng(5, 1);
            move |_| centered_uniform(&mut r)
        }).collect();
        let c = centered_uniform(&mut realization_rng(5, 2));
        assert_eq!(a, b);
        assert_ne!(a[0], c);
    }

    #[test]
    fn zero_gamma_leaves_fields_unchanged() {
        let s = fig1();
        let t = noise_grid(&s, 0.01);
        let draw = NoiseDraw::sample(&mut realization_rng(1, 0), t.len() - 1);
        let fields = perturb_fields(s.source(), &t, field_peaks(&s), 0.0, &draw);
        for (w, f) in t.windows(2).zip(&fields) {
            assert_eq!(f[0], s.source().field_at(w[0]));
            assert_eq!(f[2], s.source().field_at(w[1]));
        }
    }

    #[test]
    fn perturbation_follows_envelope() {
        let p = FieldPoint::new(2.0, 1.0, 0.3, 0.4);
        let n = StepNoise {
            r2: 0.25,
            r3: -0.5,
            r4: 0.1,
        };
        let q = perturb_point(&p, (4.0, 1.0), 0.5, 0.25, &n);
        assert!((q.omega_p - (2.0 + 0.5 * 0.5 * 0.5)).abs() < 1e-15);
        assert!((q.omega_s - (1.0 + 0.5 * 0.5)).abs() < 1e-15);
        assert!((q.delta1 - 0.05).abs() < 1e-15);
        assert!((q.delta2 - 0.45).abs() < 1e-15);
    }

    #[test]
    fn zero_gamma_matches_deterministic_run() {
        let s = fig1();
        let c = cfg(0.0, 3);
        let mc = monte_carlo(&s, &c).unwrap();
        let grid = crate::design::TimeGrid::new(4.0, mc.t.len());
        assert_eq!(grid.points(), mc.t);
        let det = Schedule::from_source(s.source().clone(), &grid).unwrap();
        let r = propagate(&det, &QuantumState::ground(), grid.spacing()).unwrap();
        assert!((mc.mean_p3 - r.p3()).abs() < 1e-12);
        assert!(mc.stderr_p3 < 1e-15);
    }

    #[test]
    fn independent_of_thread_count() {
        let s = fig1();
        let c = cfg(0.5, 16);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(&s, &c).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
    }

    #[test]
    fn norm_is_preserved_under_noise() {
        let mc = monte_carlo(&fig1(), &cfg(0.5, 8)).unwrap();
        assert!(mc.max_norm_drift <= 1e-6, "{}", mc.max_norm_drift);
        let last = mc.mean_populations.last().unwrap();
        assert!((last.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mean_transfer_degrades_with_gamma() {
        let s = fig1();
        let means: Vec<f64> = [0.0, 0.25, 0.5]
            .iter()
            .map(|&g| monte_carlo(&s, &cfg(g, 100)).unwrap().mean_p3)
            .collect();
        assert!(means[0] >= means[1] && means[1] >= means[2], "{means:?}");
    }

    #[test]
    fn rejects_bad_config() {
        let s = fig1();
        assert!(monte_carlo(&s, &cfg(-1.0, 4)).is_err());
        assert!(monte_carlo(&s, &cfg(0.5, 0)).is_err());
    }
}
