"""Fast invariant checks bundled with the package (``hybridbf selftest``)."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .beamforming import decompose_unit_modulus
from .cvnn import backward, chain_specs, forward, init_network, mae_loss
from .hdnn import adnn_forward, realize_adnn
from .numerics import RngStream, complex_gaussian, water_fill

TOLERANCES = {
    "decomposition_roundtrip": 1e-10,
    "gradient_check": 1e-5,
    "waterfill_kkt": 1e-10,
    "adnn_equivalence": 1e-9,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: error {self.error:.3e} (tolerance {self.tolerance:.1e}, {self.seconds:.2f} s)"


def check_decomposition(rng: RngStream, trials: int = 200) -> float:
    worst = 0.0
    for _ in range(trials):
        m, n = rng.gen.integers(1, 33, size=2)
        a = complex_gaussian((m, n), rng)
        a[rng.gen.random((m, n)) < 0.1] = 0.0
        if not np.any(a):
            a[0, 0] = 1.0
        dec = decompose_unit_modulus(a)
        err = np.linalg.norm(a - dec.reconstruct()) / np.linalg.norm(a)
        unit = max(np.abs(np.abs(dec.r1) - 1).max(), np.abs(np.abs(dec.r2) - 1).max())
        worst = max(worst, err, unit)
    return worst


def check_gradient(rng: RngStream, step: float = 1e-6) -> float:
    """Relative error between backprop and central differences on an MAE loss."""
    net = init_network(chain_specs([3, 5, 4, 2], "cprelu"), rng)
    for layer in net.layers:
        layer.bias += 0.1 * complex_gaussian(layer.bias.shape, rng)
    x = complex_gaussian((16, 3), rng)
    target = complex_gaussian((16, 2), rng)

    def loss():
        return mae_loss(forward(net, x)[0], target)[0]

    y, cache = forward(net, x)
    grads = backward(net, cache, mae_loss(y, target)[1])
    analytic, numeric = [], []
    for p, g in zip(net.params(), grads):
        flat = p.reshape(-1)
        parts = (1.0, 1j) if np.iscomplexobj(p) else (1.0,)
        for k in range(flat.size):
            orig = flat[k]
            for unit in parts:
                flat[k] = orig + step * unit
                up = loss()
                flat[k] = orig - step * unit
                down = loss()
                flat[k] = orig
                numeric.append((up - down) / (2 * step))
                gk = g.reshape(-1)[k]
                analytic.append(gk.real if unit == 1.0 else gk.imag)
    analytic, numeric = np.array(analytic), np.array(numeric)
    return float(np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric))


def check_waterfill(rng: RngStream, trials: int = 500) -> float:
    """Largest KKT violation: budget, equal water level, inactive streams above it."""
    worst = 0.0
    for _ in range(trials):
        k = int(rng.gen.integers(1, 9))
        g = rng.gen.exponential(size=k) * 10 ** rng.gen.uniform(-2, 2)
        budget = float(10 ** rng.gen.uniform(-1, 2))
        p = water_fill(g, budget)
        active = p > 0
        level = p[active] + 1 / g[active]
        mu = level.mean()
        viol = [abs(p.sum() - budget) / budget, np.ptp(level) / mu, float(np.min(p))]
        if np.any(~active):
            viol.append(max(0.0, mu - np.min(1 / g[~active])) / mu)
        worst = max(worst, abs(min(viol[2], 0.0)), viol[0], viol[1], *viol[3:])
    return worst


def check_adnn(rng: RngStream, trials: int = 20) -> float:
    worst = 0.0
    for _ in range(trials):
        widths = list(rng.gen.integers(1, 17, size=int(rng.gen.integers(2, 5))))
        act = ("crelu", "cprelu")[int(rng.gen.integers(2))]
        net = init_network(chain_specs(widths, act, act), rng, slope=float(rng.gen.uniform(0.05, 1)))
        for layer in net.layers:
            layer.bias += complex_gaussian(layer.bias.shape, rng)
        x = complex_gaussian((50, widths[0]), rng)
        real = realize_adnn(net)
        ref = real.cumulative_scale * forward(net, x)[0]
        err = np.linalg.norm(adnn_forward(real, x) - ref) / max(np.linalg.norm(ref), 1e-300)
        worst = max(worst, err)
    return worst


CHECKS = {
    "decomposition_roundtrip": check_decomposition,
    "gradient_check": check_gradient,
    "waterfill_kkt": check_waterfill,
    "adnn_equivalence": check_adnn,
}


def run_selftest(seed: int = 0, corrupt: str | None = None) -> list[CheckResult]:
    """Run every check; ``corrupt`` names a check whose tolerance is made
    unattainable (used to verify that failures are reported)."""
    if corrupt is not None and corrupt not in CHECKS:
        raise ValueError(f"unknown check {corrupt!r}; choose from {sorted(CHECKS)}")
    root = RngStream(seed)
    results = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        tol = -1.0 if name == corrupt else TOLERANCES[name]
        t0 = time.perf_counter()
        err = fn(root.child(i))
        results.append(CheckResult(name, float(err), tol, time.perf_counter() - t0))
    return results
