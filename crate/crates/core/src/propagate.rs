//! Fixed-step fourth-order Runge-Kutta integration of `i dφ/dt = H(t) φ`.
//!
//! The state is never renormalized; the norm drift over a run is reported
//! as a convergence diagnostic.

use num_complex::Complex64;
use std::io::{self, Write};

use crate::design::{sci, Schedule};
use crate::error::{Error, Result};
use crate::lambda::{align_eigenvectors, eigensystem, Matrix3, QuantumState};

/// Default step for deterministic runs, in units of T.
pub const DEFAULT_DT: f64 = 1e-3;

/// How far an initial state may be from unit norm.
pub const NORM_TOLERANCE: f64 = 1e-10;

pub type CMatrix3 = [[Complex64; 3]; 3];

/// Anything that can act as a Hamiltonian on a three-level state.
pub trait Generator {
    fn apply(&self, v: &[Complex64; 3]) -> [Complex64; 3];
}

impl Generator for Matrix3 {
    #[inline]
    fn apply(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let row = |r: &[f64; 3]| v[0] * r[0] + v[1] * r[1] + v[2] * r[2];
        [row(&self[0]), row(&self[1]), row(&self[2])]
    }
}

impl Generator for CMatrix3 {
    #[inline]
    fn apply(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let row = |r: &[Complex64; 3]| v[0] * r[0] + v[1] * r[1] + v[2] * r[2];
        [row(&self[0]), row(&self[1]), row(&self[2])]
    }
}

/// One RK4 step of length `h`, with the Hamiltonian sampled at the start,
/// midpoint and end of the step.
#[inline]
pub fn rk4_step<G: Generator>(psi: &[Complex64; 3], h: f64, hams: &[G; 3]) -> [Complex64; 3] {
    let mi = Complex64::new(0.0, -1.0);
    let deriv = |g: &G, v: &[Complex64; 3]| g.apply(v).map(|x| x * mi);
    let axpy = |a: &[Complex64; 3], s: f64, b: &[Complex64; 3]| {
        [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s]
    };
    let k1 = deriv(&hams[0], psi);
    let k2 = deriv(&hams[1], &axpy(psi, 0.5 * h, &k1));
    let k3 = deriv(&hams[1], &axpy(psi, 0.5 * h, &k2));
    let k4 = deriv(&hams[2], &axpy(psi, h, &k3));
    let w = h / 6.0;
    std::array::from_fn(|k| psi[k] + (k1[k] + (k2[k] + k3[k]) * 2.0 + k4[k]) * w)
}

/// Raw trajectory sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<QuantumState>,
    /// `max |1 − ‖φ‖²|` over all samples.
    pub norm_drift: f64,
}

/// Integrates across the grid `t` (ascending or descending). Each interval
/// is split into `ceil(|Δt|/dt)` equal RK4 steps; `hams(interval, a, b)`
/// returns the Hamiltonian at `a`, `(a+b)/2` and `b` for the step `a → b`.
///
/// `dt` must not exceed the smallest grid interval.
pub fn evolve<G, F>(t: &[f64], initial: &QuantumState, dt: f64, mut hams: F) -> Result<Trajectory>
where
    G: Generator,
    F: FnMut(usize, f64, f64) -> [G; 3],
{
    initial.validate(NORM_TOLERANCE)?;
    let spacing = t
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    if !(dt > 0.0 && dt.is_finite()) || dt > spacing * (1.0 + 1e-9) {
        return Err(Error::InvalidStep { dt, spacing });
    }

    let mut psi = initial.amplitudes;
    let mut states = Vec::with_capacity(t.len());
    states.push(*initial);
    let mut drift = (1.0 - initial.norm_sqr()).abs();
    for (i, w) in t.windows(2).enumerate() {
        let span = w[1] - w[0];
        let n_sub = ((span.abs() / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / n_sub as f64;
        for k in 0..n_sub {
            let a = w[0] + k as f64 * h;
            let b = if k + 1 == n_sub { w[1] } else { a + h };
            psi = rk4_step(&psi, b - a, &hams(i, a, b));
        }
        let state = QuantumState { amplitudes: psi };
        drift = drift.max((1.0 - state.norm_sqr()).abs());
        states.push(state);
    }
    Ok(Trajectory {
        t: t.to_vec(),
        states,
        norm_drift: drift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub t: Vec<f64>,
    /// Bare populations `[P₁, P₂, P₃]` per sample.
    pub populations: Vec<[f64; 3]>,
    /// `|⟨ψ_k|φ⟩|²` for `k = −, 0, +` per sample.
    pub adiabatic_populations: Vec<[f64; 3]>,
    pub states: Vec<QuantumState>,
    pub final_state: QuantumState,
    pub norm_drift: f64,
    /// Raised when the instantaneous spectrum came close to a degeneracy,
    /// making the adiabatic labels unreliable around that sample.
    pub continuity_warning: bool,
}

impl PropagationResult {
    pub fn final_populations(&self) -> [f64; 3] {
        self.final_state.populations()
    }

    pub fn p3(&self) -> f64 {
        self.final_state.populations()[2]
    }

    /// `max_t P₂(t)`.
    pub fn max_upper_population(&self) -> f64 {
        self.populations.iter().map(|p| p[1]).fold(0.0, f64::max)
    }

    /// CSV with header `t,p1,p2,p3,ad_minus,ad_0,ad_plus`.
    pub fn write_csv<W: Write>(&self, mut w: W, preamble: &[String]) -> io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "t,p1,p2,p3,ad_minus,ad_0,ad_plus")?;
        for (i, t) in self.t.iter().enumerate() {
            let p = self.populations[i];
            let a = self.adiabatic_populations[i];
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                sci(*t),
                sci(p[0]),
                sci(p[1]),
                sci(p[2]),
                sci(a[0]),
                sci(a[1]),
                sci(a[2])
            )?;
        }
        Ok(())
    }
}

/// Integrates over the schedule's grid, taking field values between samples
/// from the schedule's source.
pub fn propagate(s: &Schedule, initial: &QuantumState, dt: f64) -> Result<PropagationResult> {
    let source = s.source();
    let traj = evolve(&s.t, initial, dt, |_, a, b| {
        [
            source.field_at(a).matrix(),
            source.field_at(0.5 * (a + b)).matrix(),
            source.field_at(b).matrix(),
        ]
    })?;
    let adiabatic = adiabatic_projection(&traj.states, s)?;
    Ok(PropagationResult {
        populations: traj.states.iter().map(QuantumState::populations).collect(),
        adiabatic_populations: adiabatic.populations,
        final_state: *traj.states.last().expect("grid has >= 2 samples"),
        norm_drift: traj.norm_drift,
        continuity_warning: adiabatic.near_degenerate,
        states: traj.states,
        t: traj.t,
    })
}

/// Final `P₃` of a run from `|1⟩`, without the per-sample bookkeeping.
pub fn final_p3(s: &Schedule, dt: f64) -> Result<f64> {
    let source = s.source();
    let traj = evolve(&s.t, &QuantumState::ground(), dt, |_, a, b| {
        [
            source.field_at(a).matrix(),
            source.field_at(0.5 * (a + b)).matrix(),
            source.field_at(b).matrix(),
        ]
    })?;
    Ok(traj.states.last().expect("grid has >= 2 samples").populations()[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticProjection {
    pub populations: Vec<[f64; 3]>,
    pub near_degenerate: bool,
}

/// Populations of the instantaneous eigenstates, with eigenvector signs kept
/// continuous along the grid.
pub fn adiabatic_projection(states: &[QuantumState], s: &Schedule) -> Result<AdiabaticProjection> {
    if states.len() != s.len() {
        return Err(crate::error::invalid(
            "states",
            format!("{} states for {} schedule samples", states.len(), s.len()),
        ));
    }
    let mut populations = Vec::with_capacity(s.len());
    let mut near_degenerate = false;
    let mut prev = None;
    for (i, state) in states.iter().enumerate() {
        let h = crate::lambda::build_hamiltonian(&s.point(i))?;
        let mut es = eigensystem(&h);
        if let Some(p) = &prev {
            es = align_eigenvectors(p, &es);
        }
        near_degenerate |= es.near_degenerate;
        populations.push(es.vectors.map(|v| state.overlap_sqr(&v)));
        prev = Some(es);
    }
    Ok(AdiabaticProjection {
        populations,
        near_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{make_parallel_schedule, DesignParams, FieldSource, StirapParams, TimeGrid};
    use crate::lambda::{dot, FieldPoint};
    use std::f64::consts::PI;

    fn fig1() -> Schedule {
        make_parallel_schedule(&DesignParams::new(5.8)).unwrap()
    }

    #[test]
    fn zero_field_leaves_ground_state() {
        let s = Schedule::custom(
            vec![-1.0, 0.0, 1.0],
            vec![FieldPoint::new(0.0, 0.0, 2.0, -1.0); 3],
        )
        .unwrap();
        let r = propagate(&s, &QuantumState::ground(), 1e-3).unwrap();
        for p in &r.populations {
            assert_eq!(p[0], 1.0);
        }
    }

    #[test]
    fn resonant_pi_pulse_inverts_pump_transition() {
        // A pump-only Gaussian of area π (Stokes held off).
        let omega_max = PI.sqrt();
        let base = FieldSource::Stirap(StirapParams { omega_max, tau: 0.0 });
        let pump_only = FieldSource::Shifted {
            base: Box::new(base),
            pump_shift: 0.0,
            stokes_shift: 1e6,
            scale: 1.0,
        };
        let s = Schedule::from_source(pump_only, &TimeGrid::new(7.0, 1401)).unwrap();
        let r = propagate(&s, &QuantumState::ground(), 1e-3).unwrap();
        let p2 = r.final_populations()[1];
        assert!((p2 - 1.0).abs() < 1e-6, "P2 = {p2}");
    }

    #[test]
    fn rejects_bad_step_and_state() {
        let s = fig1();
        assert!(matches!(
            propagate(&s, &QuantumState::ground(), 0.01),
            Err(Error::InvalidStep { .. })
        ));
        assert!(matches!(
            propagate(&s, &QuantumState::ground(), -1e-3),
            Err(Error::InvalidStep { .. })
        ));
        let two = QuantumState::new(1.0.into(), 1.0.into(), 0.0.into());
        assert!(matches!(
            propagate(&s, &two, 1e-3),
            Err(Error::InvalidState { .. })
        ));
    }

    #[test]
    fn fig1_run() {
        let s = fig1();
        let r = propagate(&s, &QuantumState::ground(), DEFAULT_DT).unwrap();
        assert!((r.p3() - 0.995).abs() < 0.003, "P3 = {}", r.p3());
        assert!(r.norm_drift <= 1e-8, "drift {}", r.norm_drift);
        for p in &r.populations {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(r.max_upper_population() > 0.05);
        assert!(!r.continuity_warning);

        // |1⟩ starts in ψ₀ and ψ₀ ends on |3⟩.
        let ad = &r.adiabatic_populations;
        assert!(ad[0][1] > 1.0 - 1e-6);
        assert!((ad[ad.len() - 1][1] - r.p3()).abs() < 1e-4);
        // Frozen from an independent adaptive DOP853 run (rtol 1e-11):
        // transient nonadiabatic leakage peaks at ~11%.
        let min_ad0 = ad.iter().map(|a| a[1]).fold(1.0, f64::min);
        assert!((min_ad0 - 0.889_688).abs() < 1e-4, "min ψ0 population {min_ad0}");
    }

    #[test]
    fn aligned_eigenvectors_are_continuous_on_dense_grid() {
        let s = make_parallel_schedule(&DesignParams::new(5.8).with_grid(4.0, 3000)).unwrap();
        let mut prev = eigensystem(&crate::lambda::build_hamiltonian(&s.point(0)).unwrap());
        for i in 1..s.len() {
            let es = align_eigenvectors(
                &prev,
                &eigensystem(&crate::lambda::build_hamiltonian(&s.point(i)).unwrap()),
            );
            for k in 0..3 {
                assert!(dot(&prev.vectors[k], &es.vectors[k]) > 0.0);
            }
            prev = es;
        }
    }

    #[test]
    fn fourth_order_convergence() {
        // Coarse grid so dt can be varied through the sub-step count.
        let s = make_parallel_schedule(&DesignParams::new(5.8).with_grid(4.0, 81)).unwrap();
        let h = 0.1;
        let run = |dt: f64| propagate(&s, &QuantumState::ground(), dt).unwrap().final_state;
        let reference = run(h / 64.0);
        let err = |dt: f64| {
            let f = run(dt);
            (0..3)
                .map(|k| (f.amplitudes[k] - reference.amplitudes[k]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let e1 = err(h / 2.0);
        let e2 = err(h / 4.0);
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order} ({e1:e} -> {e2:e})");
    }

    #[test]
    fn flow_is_unitary() {
        let s = fig1();
        let cols: Vec<QuantumState> = (0..3)
            .map(|k| propagate(&s, &QuantumState::basis(k), DEFAULT_DT).unwrap().final_state)
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let g = cols[i].inner(&cols[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).norm() < 1e-8, "<{i}|{j}> = {g}");
            }
        }
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let s = fig1();
        let fwd = propagate(&s, &QuantumState::ground(), DEFAULT_DT).unwrap();
        let mirrored = s.time_mirrored().unwrap();
        let back = propagate(&mirrored, &fwd.final_state.conj(), DEFAULT_DT).unwrap();
        let returned = back.final_state.conj();
        let err = (returned.inner(&QuantumState::ground()) - 1.0).norm();
        assert!(err < 1e-7, "error {err}");
    }

    #[test]
    fn descending_grid_runs_backwards() {
        let s = fig1();
        let fwd = propagate(&s, &QuantumState::ground(), DEFAULT_DT).unwrap();
        let src = s.source().clone();
        let t_rev: Vec<f64> = s.t.iter().rev().copied().collect();
        let back = evolve(&t_rev, &fwd.final_state, DEFAULT_DT, |_, a, b| {
            [
                src.field_at(a).matrix(),
                src.field_at(0.5 * (a + b)).matrix(),
                src.field_at(b).matrix(),
            ]
        })
        .unwrap();
        let last = back.states.last().unwrap();
        assert!((last.populations()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn projection_length_mismatch_is_an_error() {
        let s = fig1();
        assert!(adiabatic_projection(&[QuantumState::ground()], &s).is_err());
    }

    #[test]
    fn population_csv_header() {
        let s = make_parallel_schedule(&DesignParams::new(5.8).with_grid(4.0, 5)).unwrap();
        let r = propagate(&s, &QuantumState::ground(), 1e-3).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,p1,p2,p3,ad_minus,ad_0,ad_plus\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
