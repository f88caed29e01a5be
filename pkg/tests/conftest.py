"""Shared test utilities: finite-difference oracle with a relu-kink guard."""

import numpy as np
import pytest

FD_H = 1e-4

# PASS/FAIL lines recorded by the acceptance tests; echoed after the run
# so they stay visible even though pytest captures test output
acceptance_verdicts = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in acceptance_verdicts:
            terminalreporter.write_line(line)


# central differences are invalid when a relu preactivation sits within
# the perturbation reach of zero; draws that close to a kink are redrawn
KINK_MARGIN = 5e-3


def min_preact_margin(tapes):
    """Smallest |preactivation| across the relu layers of the given tapes."""
    margin = np.inf
    for tape in tapes:
        for z in tape.preacts[:-1]:  # last layer is linear in all our nets
            if z.size:
                margin = min(margin, float(np.min(np.abs(z))))
    return margin


def finite_diff_grads(loss_fn, arrays, h=FD_H):
    """Central-difference gradient of loss_fn() w.r.t. each array, in place."""
    grads = []
    for p in arrays:
        g = np.zeros_like(p)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for k in range(flat_p.size):
            orig = flat_p[k]
            flat_p[k] = orig + h
            lp = loss_fn()
            flat_p[k] = orig - h
            lm = loss_fn()
            flat_p[k] = orig
            flat_g[k] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads


def assert_grads_close(analytic, numeric, rtol=1e-4, atol=1e-7):
    for a, n in zip(analytic, numeric):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1.0)
        np.testing.assert_allclose(a, n, rtol=0, atol=atol + rtol * scale.max())
        bad = np.abs(a - n) > atol + rtol * scale
        assert not bad.any(), f"gradient mismatch at {np.argwhere(bad)[:5]}"
