"""Exact MAP decoding at enumeration scale and the end-to-end protocol:
encode, block, scramble, transmit, decode each interleave against the
stationary block channel, recombine, and count errors.

Decoders break posterior ties toward the smallest symbol value, so
decisions are deterministic and independent of any seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fsc as fsc_mod
from .fsc import EnumerationLimitError, FscSpec, stationary, uniform_phi
from .rmcode import RmCode, rate
from .seeding import derive_rng
from .transforms import (
    Dmc,
    Scrambler,
    agl_action,
    sample_scrambler,
    scramble,
    stationary_avg_dmc,
)

MAX_CODEBOOK_DIM = 20
POSTERIOR_TOL = 1e-9


@dataclass(frozen=True)
class DecodeResult:
    """Per-position symbol posteriors and the hard MAP decisions."""

    posteriors: np.ndarray  # (n, q)
    decisions: np.ndarray  # (n,)

    def errors_against(self, truth) -> tuple[int, int]:
        """(symbol errors, bit errors) against the transmitted symbols."""
        truth = np.asarray(truth, dtype=np.int64)
        diff = self.decisions ^ truth
        sym = int(np.count_nonzero(diff))
        bits = int(sum(int(v).bit_count() for v in diff))
        return sym, bits


def _posterior_result(codebook: np.ndarray, weights: np.ndarray, q: int) -> DecodeResult:
    total = weights.sum()
    if total <= 0.0:
        raise ArithmeticError("all codewords have zero likelihood")
    n = codebook.shape[1]
    post = np.zeros((n, q))
    for j in range(n):
        post[j] = np.bincount(codebook[:, j], weights=weights, minlength=q)
    post /= total
    if np.max(np.abs(post.sum(axis=1) - 1.0)) > POSTERIOR_TOL:
        raise ArithmeticError("posteriors failed to normalize")
    return DecodeResult(posteriors=post, decisions=post.argmax(axis=1))


def map_decode_memoryless(codebook, w: Dmc, y) -> DecodeResult:
    """Symbol-MAP over an explicit codebook on a memoryless channel."""
    codebook = np.asarray(codebook, dtype=np.int64)
    if codebook.size == 0:
        raise ValueError("empty codebook")
    y = np.asarray(y, dtype=np.int64)
    lik = np.prod(w.W[codebook, y[None, :]], axis=1)
    return _posterior_result(codebook, lik, w.inputs)


def fsc_likelihood(spec: FscSpec, x, y, init) -> float:
    """log P(y | x, S0 ~ init), natural log; -inf for impossible y."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape != y.shape:
        raise ValueError("input and output lengths differ")
    alpha = np.asarray(init, dtype=np.float64).copy()
    log_scale = 0.0
    for xi, yi in zip(x, y):
        alpha = alpha @ spec.kernel[:, xi, yi, :]
        norm = alpha.sum()
        if norm <= 0.0:
            return -math.inf
        log_scale += math.log(norm)
        alpha /= norm
    return log_scale


def map_decode_fsc(codebook, spec: FscSpec, y, init) -> DecodeResult:
    """Exact symbol-MAP under the true state-coupled law."""
    codebook = np.asarray(codebook, dtype=np.int64)
    if codebook.size == 0:
        raise ValueError("empty codebook")
    loglik = np.array([fsc_likelihood(spec, cw, y, init) for cw in codebook])
    peak = loglik.max()
    if peak == -math.inf:
        raise ArithmeticError("all codewords have zero likelihood")
    weights = np.exp(loglik - peak)
    return _posterior_result(codebook, weights, spec.qx)


# ---------------------------------------------------------------------------
# End-to-end protocol


@dataclass(frozen=True)
class ProtocolParams:
    """Parameters of one protocol experiment.

    b = 2^h bits per block, d = 2^g interleaves; each phase decodes the
    punctured code on 2^(m-h-g) protected blocks.
    """

    r: int
    m: int
    h: int
    g: int
    channel: FscSpec
    trials: int
    seed: int

    def __post_init__(self):
        if self.h < 0 or self.g < 0 or self.h + self.g > self.m:
            raise ValueError("need h, g >= 0 and h + g <= m")
        if self.channel.qx != 2:
            raise ValueError("protocol requires a binary-input channel")
        if self.trials < 1:
            raise ValueError("at least one trial")
        punct = RmCode(min(self.r, self.m - self.g), self.m - self.g)
        if punct.dimension > MAX_CODEBOOK_DIM:
            raise ValueError(
                f"punctured code dimension {punct.dimension} exceeds the "
                f"exact-enumeration guard {MAX_CODEBOOK_DIM}"
            )


@dataclass(frozen=True)
class PhaseOutcome:
    z: int
    symbol_errors: int
    bit_errors: int


@dataclass(frozen=True)
class TrialResult:
    trial: int
    phases: tuple[PhaseOutcome, ...]
    bit_errors: int
    codeword_bits: np.ndarray = field(repr=False)
    sent_bits: np.ndarray = field(repr=False)
    received: np.ndarray = field(repr=False)
    scrambler: Scrambler = field(repr=False)
    phase_decisions: tuple[np.ndarray, ...] = field(repr=False)


@dataclass(frozen=True)
class ProtocolSummary:
    params: ProtocolParams
    ber: float
    stderr: float
    ser_per_phase: dict[int, float]
    ber_per_phase: dict[int, float]
    trial_records: tuple[tuple[int, PhaseOutcome], ...] = ()


class ProtocolContext:
    """Everything reusable across trials: codebooks and the block channel."""

    def __init__(self, params: ProtocolParams):
        self.params = params
        p = params
        self.code = RmCode(p.r, p.m)
        self.b = 1 << p.h
        self.d = 1 << p.g
        self.n_sub = 1 << (p.m - p.h - p.g)
        self.total_blocks = 1 << (p.m - p.h)
        self.punct = RmCode(min(p.r, p.m - p.g), p.m - p.g)
        cw_bits = self.punct.codewords()
        self.bit_weights = (1 << np.arange(self.b)).astype(np.int64)
        self.cw_syms = (
            cw_bits.reshape(-1, self.n_sub, self.b).astype(np.int64) @ self.bit_weights
        )
        self.pi = stationary(uniform_phi(p.channel))
        self.wbar = stationary_avg_dmc(p.channel, self.b)
        with np.errstate(divide="ignore"):
            self.logw = np.log(self.wbar.W)
        self.y_weights = (p.channel.qy ** np.arange(self.b)).astype(np.int64)
        self.popcount = np.array(
            [int(v).bit_count() for v in range(1 << self.b)], dtype=np.int64
        )

    def phase_block_indices(self, z: int) -> np.ndarray:
        return z + self.d * np.arange(self.n_sub)

    def decode_phase(self, perms: np.ndarray, y_syms: np.ndarray) -> DecodeResult:
        """Decode one interleave with the scramblers revealed.

        ``perms[i, a]`` is the channel input symbol produced by block i's
        scrambler on candidate symbol a; the decoder scores candidates
        under the product of stationary block-channel rows.
        """
        cols = self.logw[perms, y_syms[:, None]]  # (n_sub, q) log-likelihood columns
        loglik = cols[np.arange(self.n_sub)[None, :], self.cw_syms].sum(axis=1)
        peak = loglik.max()
        if peak == -math.inf:
            raise ArithmeticError("no candidate explains the received blocks")
        return _posterior_result(self.cw_syms, np.exp(loglik - peak), 1 << self.b)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Per-trial stream; the counter scheme makes parallel and serial
    execution agree."""
    return derive_rng(seed, trial)


def run_protocol_trial(ctx: ProtocolContext, trial: int) -> TrialResult:
    p = ctx.params
    rng = trial_rng(p.seed, trial)
    message = rng.integers(0, 2, size=ctx.code.dimension, dtype=np.uint8)
    cw = ctx.code.encode_message(message)
    blocks = cw.bits.reshape(ctx.total_blocks, ctx.b)
    scr = sample_scrambler(ctx.total_blocks, ctx.b, rng)
    sent = scramble(scr, blocks).reshape(-1)
    y, _ = fsc_mod.simulate(p.channel, sent, ctx.pi, rng)
    y_syms = y.reshape(ctx.total_blocks, ctx.b) @ ctx.y_weights
    true_syms_all = blocks.astype(np.int64) @ ctx.bit_weights

    phases = []
    decisions = []
    total_bit_errors = 0
    for z in range(ctx.d):
        idx = ctx.phase_block_indices(z)
        perms = scr.subset(idx).input_permutations()
        result = ctx.decode_phase(perms, y_syms[idx])
        truth = true_syms_all[idx]
        diff = result.decisions ^ truth
        sym_err = int(np.count_nonzero(diff))
        bit_err = int(ctx.popcount[diff].sum())
        phases.append(PhaseOutcome(z=z, symbol_errors=sym_err, bit_errors=bit_err))
        decisions.append(result.decisions)
        total_bit_errors += bit_err
    return TrialResult(
        trial=trial,
        phases=tuple(phases),
        bit_errors=total_bit_errors,
        codeword_bits=cw.bits,
        sent_bits=sent,
        received=y,
        scrambler=scr,
        phase_decisions=tuple(decisions),
    )


def _trial_batch(params: ProtocolParams, trials: list[int]):
    ctx = ProtocolContext(params)
    out = []
    for t in trials:
        res = run_protocol_trial(ctx, t)
        out.append((t, res.phases, res.bit_errors))
    return out


def run_protocol(params: ProtocolParams, jobs: int = 1) -> ProtocolSummary:
    """Monte Carlo over independent trials; deterministic in (params, seed).

    Trials own disjoint RNG streams, so ``jobs`` only changes the
    schedule, never the numbers.
    """
    trial_ids = list(range(params.trials))
    if jobs > 1 and params.trials > 1:
        chunks = [trial_ids[i::jobs] for i in range(jobs)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = pool.map(_trial_batch, [params] * len(chunks), chunks)
            flat = [item for part in parts for item in part]
        flat.sort(key=lambda item: item[0])
    else:
        flat = _trial_batch(params, trial_ids)

    n_bits = 1 << params.m
    d = 1 << params.g
    n_sub = 1 << (params.m - params.h - params.g)
    block_bits = 1 << params.h
    trial_ber = np.array([bit_errors / n_bits for _, _, bit_errors in flat])
    sym_err = {z: 0 for z in range(d)}
    bit_err = {z: 0 for z in range(d)}
    trial_records = []
    for t, phases, _ in flat:
        for ph in phases:
            sym_err[ph.z] += ph.symbol_errors
            bit_err[ph.z] += ph.bit_errors
            trial_records.append((t, ph))
    denom_sym = params.trials * n_sub
    denom_bit = params.trials * n_sub * block_bits
    stderr = (
        float(trial_ber.std(ddof=1) / math.sqrt(params.trials))
        if params.trials > 1
        else 0.0
    )
    return ProtocolSummary(
        params=params,
        ber=float(trial_ber.mean()),
        stderr=stderr,
        ser_per_phase={z: sym_err[z] / denom_sym for z in range(d)},
        ber_per_phase={z: bit_err[z] / denom_bit for z in range(d)},
        trial_records=tuple(trial_records),
    )


# ---------------------------------------------------------------------------
# Subcode symbol-error monotonicity (blocked RM inside interleaved RM)


@dataclass(frozen=True)
class MonotonicityResult:
    ser_blocked: float
    ser_interleaved: float
    rate_gap: float
    per_position_blocked: np.ndarray
    per_position_interleaved: np.ndarray


def _lumped_augmented_channel(w: Dmc, b: int) -> np.ndarray:
    """Collapse the scramble-augmented outputs into likelihood classes.

    Outputs (phi, y) with identical likelihood profiles a -> W(y|phi(a))
    are exchangeable for MAP decoding, so they are merged with their
    probability mass; this keeps the exact SER computation small.
    """
    action = agl_action(b)
    rows = w.W[action, :].transpose(0, 2, 1).reshape(-1, w.inputs)
    profiles, counts = np.unique(rows, axis=0, return_counts=True)
    return profiles * (counts[:, None] / action.shape[0])


def _exact_map_ser(channel: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """Per-position symbol-MAP error for a uniform codeword, exactly.

    ``channel[k, a]`` is the probability of output class k on input a;
    the full output-class product space is enumerated.
    """
    n_cw, n_pos = codebook.shape
    k = channel.shape[0]
    q = channel.shape[1]
    if k**n_pos > 2 * 10**6 or k**n_pos * n_cw > 2 * 10**8:
        raise EnumerationLimitError("output-class enumeration exceeds the guard")
    t = np.ones((1, n_cw))
    for j in range(n_pos):
        t = (t[:, None, :] * channel[:, codebook[:, j]][None, :, :]).reshape(-1, n_cw)
    ser = np.empty(n_pos)
    for i in range(n_pos):
        onehot = np.zeros((n_cw, q))
        onehot[np.arange(n_cw), codebook[:, i]] = 1.0
        per_symbol = t @ onehot
        ser[i] = 1.0 - per_symbol.max(axis=1).sum() / n_cw
    return ser


def subcode_monotonicity_experiment(r: int, m: int, h: int, w: Dmc) -> MonotonicityResult:
    """Exact SER of the blocked RM code vs its interleaved supercode.

    Both codes are decoded on the scramble-augmented version of the
    block channel ``w``; the experiment also reports the rate gap
    between the two codes.
    """
    b = 1 << h
    if w.inputs != 1 << b:
        raise ValueError(f"channel must have 2^{b} inputs for h={h}")
    n_pos = 1 << (m - h)
    base = RmCode(r, m)
    row_code = RmCode(min(r, m - h), m - h)
    if base.dimension > MAX_CODEBOOK_DIM or b * row_code.dimension > MAX_CODEBOOK_DIM:
        raise EnumerationLimitError("codebooks too large for exact enumeration")

    weights = (1 << np.arange(b)).astype(np.int64)
    blocked = (
        base.codewords().reshape(-1, n_pos, b).astype(np.int64) @ weights
    )
    rows = row_code.codewords().astype(np.int64)
    n_rows = rows.shape[0]
    combos = np.stack(
        np.unravel_index(np.arange(n_rows**b), (n_rows,) * b), axis=1
    )
    interleaved = np.zeros((n_rows**b, n_pos), dtype=np.int64)
    for j in range(b):
        interleaved += rows[combos[:, j]] << j

    channel = _lumped_augmented_channel(w, b)
    ser_b = _exact_map_ser(channel, blocked)
    ser_i = _exact_map_ser(channel, interleaved)
    return MonotonicityResult(
        ser_blocked=float(ser_b.max()),
        ser_interleaved=float(ser_i.max()),
        rate_gap=rate(row_code) - rate(base),
        per_position_blocked=ser_b,
        per_position_interleaved=ser_i,
    )
