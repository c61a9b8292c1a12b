"""Channel transforms: blocking, decimation, stationary averaging, random
affine scrambling, and the scrambler-augmented block channel.

Block alphabets follow the package-wide little-endian convention: the
symbol (x_0, ..., x_{b-1}), x_0 sent first, is the integer with the x_i
as base-q digits, x_0 least significant.  This keeps block indices of
channels and of Reed-Muller block symbols directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gf2
from .fsc import (
    EnumerationLimitError,
    FscSpec,
    ROW_SUM_TOL,
    stationary,
    symbol_digits,
    uniform_phi,
)

AGL_MAX_B = 3


@dataclass(frozen=True)
class Dmc:
    """Discrete memoryless channel as a row-stochastic matrix W[x, y]."""

    W: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.W, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("DMC matrix must be two-dimensional")
        if np.any(w < 0):
            raise ValueError("DMC entries must be nonnegative")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("DMC rows must sum to 1")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "W", w)

    @property
    def inputs(self) -> int:
        return self.W.shape[0]

    @property
    def outputs(self) -> int:
        return self.W.shape[1]


def dmc_product_law(w: Dmc, x_word) -> np.ndarray:
    """Law of a memoryless word channel: tensor product of the rows of W.

    Output words are indexed little-endian, first symbol least
    significant, matching the block conventions elsewhere.
    """
    x_word = np.asarray(x_word, dtype=np.int64)
    law = np.ones(1)
    for x in x_word:
        law = np.kron(w.W[x], law)
    return law


def _composed_block_kernel(spec: FscSpec, b: int) -> np.ndarray:
    """Kernel of b chained uses: indexed (s, X^b, Y^b, s') little-endian."""
    if b < 1:
        raise ValueError("block size must be >= 1")
    if spec.qx**b > 10**5 or spec.qy**b > 10**5:
        raise EnumerationLimitError(
            f"blocked alphabets qx^b={spec.qx ** b}, qy^b={spec.qy ** b} "
            "exceed the 1e5 guard"
        )
    if spec.qx**b * spec.qy**b * spec.ns**2 > 10**8:
        raise EnumerationLimitError("blocked kernel too large to materialize")
    block = spec.kernel
    for i in range(1, b):
        # new digit (x or y) is more significant than the accumulated prefix
        block = np.einsum("sabt,txyv->sxaybv", block, spec.kernel).reshape(
            spec.ns, spec.qx ** (i + 1), spec.qy ** (i + 1), spec.ns
        )
    return block


def block_fsc(spec: FscSpec, b: int) -> FscSpec:
    """Group b consecutive uses into one super-symbol channel."""
    if b == 1:
        return spec
    return FscSpec(
        qx=spec.qx**b, qy=spec.qy**b, ns=spec.ns, kernel=_composed_block_kernel(spec, b)
    )


def decimate_fsc(spec: FscSpec, d: int) -> FscSpec:
    """Insert d-1 uniform-input state transitions after each use.

    The output marginal P(y | x, s) is untouched; only the next-state
    coordinate is pushed through the uniform transition matrix.
    """
    if d < 1:
        raise ValueError("decimation factor must be >= 1")
    if d == 1:
        return spec
    hop = np.linalg.matrix_power(uniform_phi(spec), d - 1)
    kernel = np.einsum("sxyt,tu->sxyu", spec.kernel, hop)
    return FscSpec(qx=spec.qx, qy=spec.qy, ns=spec.ns, kernel=kernel)


def stationary_avg_dmc(spec: FscSpec, b: int) -> Dmc:
    """Stationary average block channel: states marginalized under pi."""
    pi = stationary(uniform_phi(spec))
    block = _composed_block_kernel(spec, b)
    return Dmc(W=np.einsum("s,sxyt->xy", pi, block))


def _block_input_tensor(spec: FscSpec, digits) -> np.ndarray:
    """State-to-state tensor for one input block: M[s, Y^b, s']."""
    m = spec.kernel[:, digits[0]]  # (s, y, s')
    for i, x in enumerate(digits[1:], start=1):
        step = spec.kernel[:, x]
        m = np.einsum("sat,tyv->syav", m, step).reshape(
            spec.ns, spec.qy ** (i + 1), spec.ns
        )
    return m


def blocked_decimated_kernel(spec: FscSpec, b: int, d: int, x_block: int) -> np.ndarray:
    """One-block kernel of the blocked-then-decimated channel for one input.

    Returns M[s, Y^b, s'] built by carrying the state through the full
    b*d-step composition, without materializing the whole block alphabet.
    """
    digits = symbol_digits(x_block, spec.qx, b)
    m = _block_input_tensor(spec, digits)
    if d > 1:
        hop = np.linalg.matrix_power(uniform_phi(spec), b * (d - 1))
        m = np.einsum("syt,tu->syu", m, hop)
    return m


def induced_block_law(spec: FscSpec, b: int, d: int, n: int, x) -> np.ndarray:
    """Exact law of n protected blocks under blocking b and decimation d.

    ``x`` lists the n input-block symbols.  The initial state is the
    stationary distribution; the result is indexed by the output block
    word (little-endian over blocks, little-endian within a block, so
    it equals the plain Y^{bn} word index).
    """
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (n,):
        raise ValueError(f"expected {n} input blocks")
    if spec.qy ** (b * n) > 10**6:
        raise EnumerationLimitError(
            f"qy^(b*n) = {spec.qy ** (b * n)} exceeds the 1e6 guard"
        )
    pi = stationary(uniform_phi(spec))
    tensors = {int(v): blocked_decimated_kernel(spec, b, d, int(v)) for v in set(x.tolist())}
    alpha = pi.reshape(1, spec.ns)
    for xi in x:
        alpha = np.einsum("ps,sYt->Ypt", alpha, tensors[int(xi)])
        alpha = alpha.reshape(-1, spec.ns)
    law = alpha.sum(axis=1)
    if abs(law.sum() - 1.0) > 1e-10:
        raise ArithmeticError(f"induced law sums to {law.sum():.15g}")
    return law


# ---------------------------------------------------------------------------
# Random block scramblers


@dataclass(frozen=True)
class Scrambler:
    """Per-block affine bijections x -> A_i x + beta_i on GF(2)^b."""

    mats: np.ndarray  # (n, b, b)
    offsets: np.ndarray  # (n, b)

    def __post_init__(self):
        mats = gf2.asbits(self.mats).copy()
        offsets = gf2.asbits(self.offsets).copy()
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("matrices must be stacked square blocks")
        if offsets.shape != mats.shape[:2]:
            raise ValueError("offsets do not match the matrix stack")
        mats.flags.writeable = False
        offsets.flags.writeable = False
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "offsets", offsets)

    @property
    def n(self) -> int:
        return self.mats.shape[0]

    @property
    def b(self) -> int:
        return self.mats.shape[1]

    def subset(self, idx) -> "Scrambler":
        return Scrambler(mats=self.mats[idx], offsets=self.offsets[idx])

    def input_permutations(self) -> np.ndarray:
        """perm[i, v] = block-symbol index of the i-th map applied to v."""
        vecs = gf2.all_vectors(self.b)
        weights = 1 << np.arange(self.b, dtype=np.int64)
        imgs = (np.einsum("nij,vj->nvi", self.mats.astype(np.int64), vecs) & 1) ^ self.offsets[
            :, None, :
        ]
        return (imgs & 1) @ weights


def sample_scrambler(n: int, b: int, rng: np.random.Generator) -> Scrambler:
    """n independent uniform affine bijections of GF(2)^b."""
    mats = np.stack([gf2.sample_invertible(b, rng) for _ in range(n)])
    offsets = rng.integers(0, 2, size=(n, b), dtype=np.uint8)
    return Scrambler(mats=mats, offsets=offsets)


def scramble(s: Scrambler, blocks) -> np.ndarray:
    """Apply z_i = A_i x_i + beta_i blockwise."""
    x = gf2.asbits(blocks)
    if x.shape != (s.n, s.b):
        raise ValueError(f"expected blocks of shape {(s.n, s.b)}, got {x.shape}")
    out = np.einsum("nij,nj->ni", s.mats.astype(np.int64), x.astype(np.int64))
    return ((out & 1) ^ s.offsets).astype(np.uint8)


def descramble(s: Scrambler, blocks) -> np.ndarray:
    """Exact inverse of scramble."""
    z = gf2.asbits(blocks)
    if z.shape != (s.n, s.b):
        raise ValueError(f"expected blocks of shape {(s.n, s.b)}, got {z.shape}")
    shifted = (z ^ s.offsets).astype(np.int64)
    invs = np.stack([gf2.invert(m) for m in s.mats]).astype(np.int64)
    out = np.einsum("nij,nj->ni", invs, shifted)
    return (out & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# The affine general linear group AGL(b, 2) and the augmented block channel


@lru_cache(maxsize=None)
def agl_elements(b: int) -> tuple:
    """All affine bijections of GF(2)^b as (A, beta) pairs.

    Ordered by (matrix integer, offset integer) with row-major LSB-first
    matrix packing; deterministic so indices are stable across runs.
    """
    if not 1 <= b <= AGL_MAX_B:
        raise EnumerationLimitError(f"AGL enumeration supports b <= {AGL_MAX_B}")
    elems = []
    for mat_bits in gf2.all_vectors(b * b):
        mat = mat_bits.reshape(b, b)
        if gf2.rank(mat) != b:
            continue
        for beta in gf2.all_vectors(b):
            a = mat.copy()
            a.flags.writeable = False
            off = beta.copy()
            off.flags.writeable = False
            elems.append((a, off))
    return tuple(elems)


@lru_cache(maxsize=None)
def agl_action(b: int) -> np.ndarray:
    """action[e, v] = index of element e applied to block symbol v."""
    elems = agl_elements(b)
    vecs = gf2.all_vectors(b)
    weights = 1 << np.arange(b, dtype=np.int64)
    rows = []
    for a, beta in elems:
        imgs = (gf2.matmul(vecs, a.T) ^ beta) & 1
        rows.append(imgs @ weights)
    out = np.array(rows, dtype=np.int64)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _agl_index(b: int) -> dict:
    return {
        (a.tobytes(), beta.tobytes()): i for i, (a, beta) in enumerate(agl_elements(b))
    }


@lru_cache(maxsize=None)
def agl_compose(b: int) -> np.ndarray:
    """comp[i, j] = index of element_i following element_j."""
    elems = agl_elements(b)
    index = _agl_index(b)
    n = len(elems)
    comp = np.empty((n, n), dtype=np.int64)
    for i, (a_i, b_i) in enumerate(elems):
        for j, (a_j, b_j) in enumerate(elems):
            mat = gf2.matmul(a_i, a_j)
            off = (gf2.matmul(a_i, b_j) ^ b_i) & 1
            comp[i, j] = index[(mat.tobytes(), off.tobytes())]
    comp.flags.writeable = False
    return comp


@lru_cache(maxsize=None)
def agl_inverse(b: int) -> np.ndarray:
    """inv[i] = index of the inverse of element i."""
    elems = agl_elements(b)
    index = _agl_index(b)
    out = np.empty(len(elems), dtype=np.int64)
    for i, (a, beta) in enumerate(elems):
        a_inv = gf2.invert(a)
        out[i] = index[(a_inv.tobytes(), gf2.matmul(a_inv, beta).tobytes())]
    out.flags.writeable = False
    return out


def augmented_block_dmc(w: Dmc) -> Dmc:
    """Symmetrize a block DMC by a uniform revealed affine scramble.

    The output alphabet becomes (phi, y) with index phi*outputs + y and
    law (1/|AGL|) W(y | phi(x)).  Every affine map psi then lifts to the
    output permutation (phi, y) -> (phi o psi^{-1}, y) fixing the law.
    """
    b = int(w.inputs).bit_length() - 1
    if 1 << b != w.inputs:
        raise ValueError("augmented channel needs a GF(2)^b input alphabet")
    action = agl_action(b)
    n_elem = action.shape[0]
    wt = w.W[action, :] / n_elem  # (phi, x, y)
    wt = wt.transpose(1, 0, 2).reshape(w.inputs, n_elem * w.outputs)
    return Dmc(W=wt)


def agl_output_permutation(b: int, psi: int, outputs: int) -> np.ndarray:
    """Output relabeling sigma_psi of the augmented channel.

    Maps output index phi*outputs + y to (phi o psi^{-1})*outputs + y.
    """
    comp = agl_compose(b)
    psi_inv = int(agl_inverse(b)[psi])
    phi_new = comp[:, psi_inv]  # phi -> phi o psi^{-1}
    ys = np.arange(outputs)
    return (phi_new[:, None] * outputs + ys[None, :]).reshape(-1)
