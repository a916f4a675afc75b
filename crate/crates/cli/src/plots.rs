//! Matplotlib scripts written next to the data. Each reads the CSV files
//! in its own directory and saves a PNG beside them.

use crate::config::RunConfig;

const MARK: &str = "@CONFIG@";

pub fn render(template: &str, cfg: &RunConfig) -> String {
    template.replace(MARK, &cfg.provenance())
}

macro_rules! prelude {
    () => {
        r##"#!/usr/bin/env python3
# config: @CONFIG@
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name)) as f:
        rows = [line for line in f if not line.startswith("#")]
    reader = csv.DictReader(rows)
    cols = {k: [] for k in reader.fieldnames}
    for row in reader:
        for k, v in row.items():
            cols[k].append(v)
    out = {}
    for k, v in cols.items():
        try:
            out[k] = np.array(v, dtype=float)
        except ValueError:
            out[k] = np.array(v)
    return out


def save(fig, name):
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name), dpi=150)
"##
    };
}

pub const DESIGN: &str = concat!(
    prelude!(),
    r##"
s = load("schedule.csv")
fig, (a, b) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
a.plot(s["t"], s["omega_p"], label=r"$\Omega_P$")
a.plot(s["t"], s["omega_s"], label=r"$\Omega_S$")
a.plot(s["t"], s["delta1"], "--", label=r"$\Delta$")
a.plot(s["t"], s["delta2"], ":", label=r"$\delta$")
a.set_ylabel("frequency (1/T)")
a.legend()
for k, lab in [("w_minus", r"$\omega_-$"), ("w_0", r"$\omega_0$"), ("w_plus", r"$\omega_+$")]:
    b.plot(s["t"], s[k], label=lab)
b.set_xlabel("t / T")
b.set_ylabel("eigenvalues (1/T)")
b.legend()
save(fig, "design.png")
"##
);

pub const PROPAGATE: &str = concat!(
    prelude!(),
    r##"
s = load("schedule.csv")
p = load("populations.csv")
fig, (a, b, c) = plt.subplots(3, 1, sharex=True, figsize=(6, 8))
a.plot(s["t"], s["omega_p"], label=r"$\Omega_P$")
a.plot(s["t"], s["omega_s"], label=r"$\Omega_S$")
a.plot(s["t"], s["delta1"], "--", label=r"$\Delta$")
a.plot(s["t"], s["delta2"], ":", label=r"$\delta$")
a.set_ylabel("frequency (1/T)")
a.legend()
for k, lab in [("w_minus", r"$\omega_-$"), ("w_0", r"$\omega_0$"), ("w_plus", r"$\omega_+$")]:
    b.plot(s["t"], s[k], label=lab)
b.set_ylabel("eigenvalues (1/T)")
b.legend()
for k in ["p1", "p2", "p3"]:
    c.plot(p["t"], p[k], label=k.upper())
c.set_xlabel("t / T")
c.set_ylabel("population")
c.legend()
save(fig, "propagate.png")
"##
);

pub const SWEEP: &str = concat!(
    prelude!(),
    r##"
d = load("sweep.csv")
fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4.5))
for tag in dict.fromkeys(d["strategy"]):
    m = d["strategy"] == tag
    dev = np.maximum(d["deviation"][m], 1e-16)
    a.semilogy(d["area_over_pi"][m], dev, label=tag)
    b.semilogy(np.log10(d["fluence_T"][m]), dev, label=tag)
a.set_xlabel(r"area / $\pi$")
b.set_xlabel(r"$\log_{10}$ fluence (1/T)")
for ax in (a, b):
    ax.set_ylabel(r"$1 - P_3$")
    ax.legend(fontsize=8)
save(fig, "sweep.png")
"##
);

pub const NOISE: &str = concat!(
    prelude!(),
    r##"
p = load("noise_populations.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for k, c in [("p1", "C0"), ("p2", "C1"), ("p3", "C2")]:
    ax.plot(p["t"], p[k + "_clean"], c, lw=1, ls="--")
    ax.plot(p["t"], p[k], c, lw=2, label=k.upper() + " averaged")
ax.set_xlabel("t / T")
ax.set_ylabel("population")
ax.legend()
save(fig, "noise.png")
"##
);

pub const SHAPE: &str = concat!(
    prelude!(),
    r##"
fig, axes = plt.subplots(2, 2, figsize=(11, 7))
for col, ch in enumerate(["pump", "stokes"]):
    sp = load("spectrum_%s.csv" % ch)
    px = load("pixels_%s.csv" % ch)
    ax = axes[0][col]
    ax.plot(sp["omega_rel"], sp["amplitude"] / sp["amplitude"].max(), label="target |E|")
    ax.step(px["omega_lo"], px["amplitude"] / max(px["amplitude"].max(), 1e-300), where="post", label="mask |M|")
    ax2 = ax.twinx()
    ax2.plot(sp["omega_rel"], sp["phase"], "k:", lw=1)
    ax2.set_ylabel("phase (rad)")
    ax.set_xlabel(r"$\omega - \omega_c$ (rad/fs)")
    ax.set_title(ch)
    ax.legend(fontsize=8)
f = load("fields_shaped.csv")
ax = axes[1][0]
for ch in ["pump", "stokes"]:
    ax.plot(f["t_fs"], f[ch + "_target"], lw=1, label=ch + " target")
    ax.plot(f["t_fs"], f[ch + "_shaped"], "--", lw=1, label=ch + " shaped")
ax.set_xlabel("t (fs)")
ax.set_ylabel("Rabi frequency (1/T)")
ax.legend(fontsize=8)
ax = axes[1][1]
ax.plot(f["t_fs"], f["freq_target"], label="target")
ax.plot(f["t_fs"], f["freq_shaped"], "--", label="shaped")
ax.set_xlabel("t (fs)")
ax.set_ylabel("instantaneous frequency (1/T)")
ax.legend(fontsize=8)
save(fig, "shape.png")
"##
);
