"""Mutual information and symmetric-information-rate estimation.

All entropy arithmetic is done in natural log and converted to bits
(and base-q units) only when a report is assembled.  Forward state
recursions renormalize at every step and accumulate the log scale
factors, so likelihoods of long words never underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fsc import (
    EnumerationLimitError,
    FscSpec,
    output_law,
    simulate,
    stationary,
    symbol_digits,
    uniform_phi,
)
from .transforms import Dmc

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateReport:
    """An information rate in bits per channel use.

    ``qits`` restates the value in logarithm base-q units where q is the
    input alphabet size; ``horizon`` is the block size b or sample
    length n the value was computed at; ``stderr`` is set for Monte
    Carlo estimates aggregated across seeds.
    """

    bits: float
    qits: float
    horizon: int | None = None
    stderr: float | None = None


def _report(nats: float, q: int, horizon: int | None, stderr_bits: float | None = None) -> RateReport:
    bits = nats / LN2
    qits = bits if q == 2 else nats / math.log(q)
    return RateReport(bits=bits, qits=qits, horizon=horizon, stderr=stderr_bits)


def _mi_uniform_nats(cond: np.ndarray) -> float:
    """I(X; Y) in nats for uniform X given rows cond[x] = P(y | x)."""
    nx = cond.shape[0]
    p_out = cond.mean(axis=0)
    mask = cond > 0
    ratio = np.divide(cond, p_out[None, :], out=np.ones_like(cond), where=mask)
    terms = np.where(mask, cond * np.log(ratio), 0.0)
    return max(0.0, float(terms.sum() / nx))


def mi_uniform_dmc(w: Dmc) -> RateReport:
    """Exact uniform-input mutual information of a DMC."""
    return _report(_mi_uniform_nats(w.W), q=w.inputs, horizon=None)


def exact_block_mi(spec: FscSpec, b: int) -> RateReport:
    """(1/b) I(X^b; Y^b) for iid uniform inputs and stationary start.

    Enumerates the conditional laws by its own forward recursion, which
    keeps this an independent route from the stationary-average DMC.
    """
    if spec.qx**b * spec.qy**b > 10**6:
        raise EnumerationLimitError(
            f"qx^b * qy^b = {spec.qx ** b * spec.qy ** b} exceeds the 1e6 guard"
        )
    pi = stationary(uniform_phi(spec))
    rows = np.array(
        [output_law(spec, symbol_digits(x, spec.qx, b), pi) for x in range(spec.qx**b)]
    )
    return _report(_mi_uniform_nats(rows) / b, q=spec.qx, horizon=b)


def exact_mi_n(spec: FscSpec, n: int, init) -> RateReport:
    """(1/n) I(X^n; Y^n) by exhaustive enumeration from a given start."""
    if spec.qx**n * spec.qy**n > 10**6:
        raise EnumerationLimitError(
            f"qx^n * qy^n = {spec.qx ** n * spec.qy ** n} exceeds the 1e6 guard"
        )
    rows = np.array(
        [output_law(spec, symbol_digits(x, spec.qx, n), init) for x in range(spec.qx**n)]
    )
    return _report(_mi_uniform_nats(rows) / n, q=spec.qx, horizon=n)


def _log_forward(init: np.ndarray, steps) -> float:
    """log of sum_s (init * prod of step matrices)[s], renormalized stepwise."""
    alpha = init.astype(np.float64).copy()
    log_scale = 0.0
    for mat in steps:
        alpha = alpha @ mat
        norm = alpha.sum()
        if norm <= 0.0:
            raise ArithmeticError(
                "forward recursion hit a zero-probability observation"
            )
        log_scale += math.log(norm)
        alpha /= norm
    return log_scale


def sir_estimate(spec: FscSpec, n: int, rng: np.random.Generator) -> RateReport:
    """Single-path estimate of the symmetric information rate.

    Transmits n iid uniform symbols from the stationary start and
    returns (1/n)[log p(y|x) - log p(y)] in bits per use; p(y) uses the
    exact uniform-input-averaged state recursion.
    """
    pi = stationary(uniform_phi(spec))
    x = rng.integers(0, spec.qx, size=n)
    y, _ = simulate(spec, x, pi, rng)
    if spec.ns == 1:
        cond = spec.kernel[0, x, y, 0]
        avg = spec.kernel.mean(axis=1)[0, y, 0]
        if np.any(cond <= 0.0) or np.any(avg <= 0.0):
            raise ArithmeticError("zero-probability observation in SIR estimate")
        nats = float(np.log(cond).sum() - np.log(avg).sum())
    else:
        cond_steps = (spec.kernel[:, xi, yi, :] for xi, yi in zip(x, y))
        log_cond = _log_forward(pi, cond_steps)
        avg_kernel = spec.kernel.mean(axis=1)  # (s, y, s')
        out_steps = (avg_kernel[:, yi, :] for yi in y)
        log_out = _log_forward(pi, out_steps)
        nats = log_cond - log_out
    return _report(nats / n, q=spec.qx, horizon=n)


def sir_estimate_seeds(spec: FscSpec, n: int, seeds) -> list[RateReport]:
    """One estimate per seed, each from its own generator."""
    return [sir_estimate(spec, n, np.random.default_rng(s)) for s in seeds]


def combine_estimates(reports) -> RateReport:
    """Mean and standard error across independent estimates."""
    if not reports:
        raise ValueError("no estimates to combine")
    bits = np.array([r.bits for r in reports])
    qits = np.array([r.qits for r in reports])
    stderr = float(bits.std(ddof=1) / math.sqrt(bits.size)) if bits.size > 1 else None
    return RateReport(
        bits=float(bits.mean()),
        qits=float(qits.mean()),
        horizon=reports[0].horizon,
        stderr=stderr,
    )
