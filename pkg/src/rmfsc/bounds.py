"""Numerical certification of the contraction and coupling inequalities.

Each check computes an exact quantity by enumeration, evaluates the
claimed dominating bound(s), and reports the margin (bound - exact).
Where a coupling bound and a positivity-certificate bound both apply,
the margin also enforces their ordering: exact <= coupling <= certificate.

The proofs introduce a contraction constant only qualitatively, so no
standalone rho is materialized; the checks certify the two computable
dominating quantities the coupling argument actually delivers, with the
floor-form exponent floor(t/k) rather than a cosmetic pure power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fsc import (
    EnumerationLimitError,
    FscSpec,
    MixingCertificate,
    mixing_certificate,
    stationary,
    symbol_digits,
    uniform_phi,
)
from .transforms import dmc_product_law, induced_block_law, stationary_avg_dmc

MARGIN_TOL = -1e-10


def total_variation(p, q) -> float:
    """TV distance between two distributions on a common finite set."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass(frozen=True)
class BoundRow:
    """One grid point: exact value vs the bound(s) claimed to dominate."""

    params: dict
    exact: float
    coupling: float | None
    certificate: float | None

    @property
    def margin(self) -> float:
        gaps = []
        tighter = self.exact
        for bound in (self.coupling, self.certificate):
            if bound is not None:
                gaps.append(bound - tighter)
                tighter = bound
        return min(gaps)

    @property
    def passed(self) -> bool:
        return self.margin >= MARGIN_TOL


@dataclass(frozen=True)
class BoundCheckReport:
    name: str
    rows: tuple[BoundRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def worst_margin(self) -> float:
        return min(row.margin for row in self.rows)


def doeblin_check(
    p, alpha: float, trials: int, rng: np.random.Generator
) -> BoundCheckReport:
    """One-step contraction under uniform minorization.

    Verifies ||xP - yP||_1 <= (1 - d*alpha) ||x - y||_1 on all basis
    pairs plus ``trials`` random simplex pairs.
    """
    p = np.asarray(p, dtype=np.float64)
    d = p.shape[0]
    if p.min() < alpha:
        raise ValueError(
            f"minorization hypothesis fails: min entry {p.min():.12g} < alpha={alpha:.12g}"
        )
    factor = 1.0 - d * alpha
    rows = []

    def add(tag: str, x: np.ndarray, y: np.ndarray) -> None:
        exact = float(np.abs(x @ p - y @ p).sum())
        bound = factor * float(np.abs(x - y).sum())
        rows.append(
            BoundRow(params={"pair": tag}, exact=exact, coupling=None, certificate=bound)
        )

    eye = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            add(f"basis-{i}-{j}", eye[i], eye[j])
    xs = rng.dirichlet(np.ones(d), size=trials)
    ys = rng.dirichlet(np.ones(d), size=trials)
    for t in range(trials):
        add(f"random-{t}", xs[t], ys[t])
    return BoundCheckReport(name="doeblin_contraction", rows=tuple(rows))


def mixing_decay(
    phi, t_max: int, cert: MixingCertificate | None = None
) -> BoundCheckReport:
    """Worst-case TV to stationarity vs the certificate decay, t = 0..t_max."""
    phi = np.asarray(phi, dtype=np.float64)
    cert = cert or mixing_certificate(phi)
    pi = stationary(phi)
    rows = []
    power = np.eye(phi.shape[0])
    for t in range(t_max + 1):
        exact = max(total_variation(power[s], pi) for s in range(phi.shape[0]))
        rows.append(
            BoundRow(
                params={"t": t},
                exact=exact,
                coupling=None,
                certificate=cert.bound(t),
            )
        )
        power = power @ phi
    return BoundCheckReport(name="mixing_decay", rows=tuple(rows))


def decimated_chain_tv(phi, big_t: int, n: int) -> BoundCheckReport:
    """Joint law of the T-decimated chain vs independent stationary marginals.

    Builds both length-n joint tensors exactly and compares their TV
    distance to (n-1) times the certificate decay at T steps.
    """
    phi = np.asarray(phi, dtype=np.float64)
    d = phi.shape[0]
    if d**n > 10**6:
        raise EnumerationLimitError(f"joint state space {d}^{n} exceeds the 1e6 guard")
    if big_t < 1 or n < 1:
        raise ValueError("need T >= 1 and n >= 1")
    cert = mixing_certificate(phi)
    pi = stationary(phi)
    q_t = np.linalg.matrix_power(phi, big_t)
    joint = pi.copy()
    product = pi.copy()
    for _ in range(n - 1):
        joint = joint[..., :, None] * q_t
        product = np.multiply.outer(product, pi)
    exact = total_variation(joint.reshape(-1), product.reshape(-1))
    bound = (n - 1) * cert.bound(big_t)
    row = BoundRow(
        params={"T": big_t, "n": n}, exact=exact, coupling=None, certificate=bound
    )
    return BoundCheckReport(name="decimated_chain_tv", rows=(row,))


def blocked_decimated_tv(
    spec: FscSpec,
    b: int,
    d: int,
    n: int,
    x_mode: str = "all",
    sample_k: int = 16,
    rng: np.random.Generator | None = None,
) -> BoundCheckReport:
    """Induced block law vs the product of stationary block-channel rows.

    For each tested input word: exact TV, then the per-transition
    coupling bound (n-1) max_s TV(e_s Phi^{b(d-1)}, pi), then the
    certificate bound (n-1)(1 - ns*alpha)^floor(b(d-1)/k), asserted in
    that order.
    """
    phi = uniform_phi(spec)
    cert = mixing_certificate(phi)
    pi = stationary(phi)
    t_steps = b * (d - 1)
    hop = np.linalg.matrix_power(phi, t_steps)
    coupling_core = max(total_variation(hop[s], pi) for s in range(spec.ns))
    coupling = (n - 1) * coupling_core
    certificate = (n - 1) * cert.bound(t_steps)
    wbar = stationary_avg_dmc(spec, b)

    n_words = (spec.qx**b) ** n
    if x_mode == "all":
        words = range(n_words)
    elif x_mode == "sample":
        if rng is None:
            raise ValueError("sampling input words needs an rng")
        words = sorted(int(v) for v in rng.integers(0, n_words, size=sample_k))
    else:
        raise ValueError(f"unknown x_mode {x_mode!r}")

    rows = []
    for word in words:
        x_blocks = symbol_digits(word, spec.qx**b, n)
        exact = total_variation(
            induced_block_law(spec, b, d, n, x_blocks),
            dmc_product_law(wbar, x_blocks),
        )
        rows.append(
            BoundRow(
                params={"b": b, "d": d, "n": n, "x": word},
                exact=exact,
                coupling=coupling,
                certificate=certificate,
            )
        )
    return BoundCheckReport(name="blocked_decimated_tv", rows=tuple(rows))
