"""Central-difference gradient oracle for split-complex parameters."""

import numpy as np

from hybridbf.cvnn import forward


def _pattern(net, x):
    _, cache = forward(net, x)
    return [np.signbit(np.concatenate([z.real.ravel(), z.imag.ravel()])) for _, z in cache]


def numeric_gradients(net, loss_fn, x, step=1e-6):
    """Finite-difference gradients aligned with ``net.params()``.

    Returns ``(grads, valid)``: entries whose +/- perturbations change any
    activation sign pattern (a kink lies in between) are marked invalid.
    """
    grads, valid = [], []
    for p in net.params():
        flat = p.reshape(-1)
        g = np.zeros(p.shape, dtype=p.dtype)
        ok = np.ones(p.shape + ((2,) if np.iscomplexobj(p) else (1,)), dtype=bool)
        gf, okf = g.reshape(-1), ok.reshape(flat.size, -1)
        units = (1.0, 1j) if np.iscomplexobj(p) else (1.0,)
        for k in range(flat.size):
            orig = flat[k]
            for u_i, unit in enumerate(units):
                flat[k] = orig + step * unit
                up, pat_up = loss_fn(), _pattern(net, x)
                flat[k] = orig - step * unit
                down, pat_down = loss_fn(), _pattern(net, x)
                flat[k] = orig
                d = (up - down) / (2 * step)
                gf[k] += d * unit
                okf[k, u_i] = all(np.array_equal(a, b) for a, b in zip(pat_up, pat_down))
        grads.append(g)
        valid.append(ok)
    return grads, valid


def components(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1)
    return a[..., None]


def max_relative_error(analytic, numeric, valid, abs_floor=1e-8):
    """Worst ``|a - n| / max(|a|, |n|)`` over valid components with error above ``abs_floor``."""
    worst = 0.0
    for a, n, ok in zip(analytic, numeric, valid):
        ca, cn = components(a), components(n)
        err = np.abs(ca - cn)
        scale = np.maximum(np.maximum(np.abs(ca), np.abs(cn)), 1e-300)
        rel = np.where(err <= abs_floor, 0.0, err / scale)
        if np.any(ok):
            worst = max(worst, float(rel[ok].max()))
    return worst
