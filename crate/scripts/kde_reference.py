#!/usr/bin/env python3
"""Generate high-precision Gaussian KDE log-density references.

Writes crates/core/tests/data/kde_reference.json: 20 random models (samples,
bandwidth) with query points and log densities computed at 60 significant
digits. Floats are written with Python's shortest round-trip repr so the Rust
side reads the exact same doubles.

    python3 scripts/kde_reference.py
"""

import json
import random
from pathlib import Path

import mpmath as mp

mp.mp.dps = 60
OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/data/kde_reference.json"


def log_density(samples, h, x):
    x, h = mp.mpf(x), mp.mpf(h)
    total = mp.fsum(mp.exp(-((x - mp.mpf(s)) / h) ** 2 / 2) for s in samples)
    return mp.log(total) - mp.log(len(samples) * h * mp.sqrt(2 * mp.pi))


def model(rng, index):
    m = rng.choice([1, 2, 3, 5, 10, 50, 200, 1000])
    centre = rng.uniform(0.1, 50.0)
    spread = rng.uniform(0.05, 10.0)
    samples = [abs(rng.gauss(centre, spread)) for _ in range(m)]
    h = spread * rng.uniform(0.01, 1.0) * max(m, 2) ** -0.2
    lo, hi = min(samples), max(samples)
    queries = [lo - 20 * h, hi + 20 * h, lo - 5 * h, hi + 3 * h, samples[0], samples[-1] + 0.5 * h]
    queries += [rng.uniform(lo - h, hi + h) for _ in range(6)]
    return {
        "name": f"model{index:02}",
        "bandwidth": h,
        "samples": samples,
        "queries": queries,
        "log_density": [float(log_density(samples, h, x)) for x in queries],
    }


def main():
    rng = random.Random(20240601)
    models = [model(rng, i) for i in range(20)]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"digits": mp.mp.dps, "models": models}) + "\n")
    print(f"wrote {OUT} ({len(models)} models)")


if __name__ == "__main__":
    main()
