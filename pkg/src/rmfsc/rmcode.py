"""Reed-Muller code algebra on the evaluation-point index space.

Coordinates of a length-2^m code are identified with points of F_2^m
through the LSB-first bijection ``theta``: coordinate ``ell`` holds the
evaluation of the message polynomial at the binary expansion of ``ell``
(bit 0 = least significant).  Everything downstream (decimation,
interleaving, blocking) is index arithmetic on that identification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from . import gf2


def theta(m: int, ell: int) -> np.ndarray:
    """LSB-first binary expansion of a coordinate index (length m)."""
    if not 0 <= ell < (1 << m):
        raise ValueError(f"index {ell} out of range for m={m}")
    return np.array([(ell >> j) & 1 for j in range(m)], dtype=np.uint8)


def theta_inv(bits) -> int:
    """Inverse of theta: LSB-first bit vector back to the integer index."""
    v = gf2.asbits(bits)
    return int(v @ (1 << np.arange(v.size, dtype=np.int64)))


def all_points(m: int) -> np.ndarray:
    """All of F_2^m as a (2^m, m) matrix, row ell = theta(m, ell)."""
    return gf2.all_vectors(m)


def monomials(r: int, m: int) -> list[tuple[int, ...]]:
    """Index sets of the multilinear monomials of degree <= r.

    Canonical order: by (degree, lexicographic), starting with the
    empty set (the constant monomial).
    """
    _check_rm_params(r, m)
    out: list[tuple[int, ...]] = []
    for deg in range(r + 1):
        out.extend(itertools.combinations(range(m), deg))
    return out


def dimension(r: int, m: int) -> int:
    """Number of monomials of degree <= r in m variables."""
    _check_rm_params(r, m)
    return sum(comb(m, i) for i in range(r + 1))


def _check_rm_params(r: int, m: int) -> None:
    if m < 0 or not 0 <= r <= m:
        raise ValueError(f"invalid Reed-Muller parameters r={r}, m={m}")


@lru_cache(maxsize=None)
def _generator_matrix(r: int, m: int) -> np.ndarray:
    """Generator matrix with one row per canonical monomial."""
    pts = all_points(m)
    rows = []
    for mono in monomials(r, m):
        row = np.ones(1 << m, dtype=np.uint8)
        for j in mono:
            row &= pts[:, j]
        rows.append(row)
    g = np.array(rows, dtype=np.uint8)
    g.flags.writeable = False
    return g


@lru_cache(maxsize=None)
def _reduced_generator(r: int, m: int) -> tuple[np.ndarray, tuple[int, ...]]:
    ech, pivots = gf2.row_echelon(_generator_matrix(r, m))
    ech.flags.writeable = False
    return ech, tuple(pivots)


@dataclass(frozen=True)
class RmCode:
    """The Reed-Muller code RM(r, m): degree-<=r multilinear evaluations."""

    r: int
    m: int

    def __post_init__(self):
        _check_rm_params(self.r, self.m)

    @property
    def length(self) -> int:
        return 1 << self.m

    @property
    def dimension(self) -> int:
        return dimension(self.r, self.m)

    @property
    def generator_matrix(self) -> np.ndarray:
        return _generator_matrix(self.r, self.m)

    def rate(self) -> float:
        """Dimension over length (bits per code bit)."""
        return self.dimension / self.length

    def encode(self, coeffs) -> "Codeword":
        """Evaluate the polynomial given by a monomial->bit coefficient map.

        ``coeffs`` maps monomial index sets (any iterable of distinct
        variable indices) to bits; unlisted monomials are zero.
        """
        bits = np.zeros(self.length, dtype=np.uint8)
        gen = self.generator_matrix
        order = {mono: i for i, mono in enumerate(monomials(self.r, self.m))}
        for mono, a in coeffs.items():
            key = tuple(sorted(mono))
            if len(set(key)) != len(key) or any(not 0 <= j < self.m for j in key):
                raise ValueError(f"bad monomial {mono!r} for m={self.m}")
            if key not in order:
                raise ValueError(f"monomial {mono!r} exceeds degree bound r={self.r}")
            if a & 1:
                bits ^= gen[order[key]]
        return Codeword(bits=bits, code=self)

    def encode_message(self, message) -> "Codeword":
        """Encode a length-``dimension`` bit vector in canonical monomial order."""
        msg = gf2.asbits(message)
        if msg.shape != (self.dimension,):
            raise ValueError(f"message must have {self.dimension} bits")
        return Codeword(bits=gf2.matmul(msg, self.generator_matrix), code=self)

    def contains(self, v) -> bool:
        """Row-span membership, checked by reduction against the generator."""
        vec = gf2.asbits(v)
        if vec.shape != (self.length,):
            raise ValueError(f"expected a vector of length {self.length}")
        ech, pivots = _reduced_generator(self.r, self.m)
        return not gf2.reduce_against(ech, list(pivots), vec).any()

    def codewords(self) -> np.ndarray:
        """All 2^dimension codewords, one per row (small codes only)."""
        if self.dimension > 20:
            raise ValueError("codebook too large to enumerate")
        msgs = all_points(self.dimension)
        return gf2.matmul(msgs, self.generator_matrix)


def is_member(code: RmCode, v) -> bool:
    return code.contains(v)


def rate(code: RmCode) -> float:
    return code.rate()


@dataclass(frozen=True)
class Codeword:
    """A codeword together with the code it belongs to."""

    bits: np.ndarray
    code: RmCode

    def __post_init__(self):
        bits = gf2.asbits(self.bits)
        if bits.shape != (self.code.length,):
            raise ValueError("codeword length does not match the code")
        bits = bits.copy()
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)


def encode(code: RmCode, coeffs) -> Codeword:
    return code.encode(coeffs)


def decimate(c: Codeword, g: int) -> Codeword:
    """Keep every 2^g-th bit; lands in RM(min(r, m-g), m-g).

    Restricting the evaluation set to the points whose g least
    significant coordinates are zero keeps a polynomial of the same
    degree in the remaining m-g variables, clamped to the full space
    when the degree bound exceeds m-g.
    """
    r, m = c.code.r, c.code.m
    if not 0 <= g <= m:
        raise ValueError(f"decimation exponent g={g} out of range for m={m}")
    new_m = m - g
    target = RmCode(min(r, new_m), new_m)
    return Codeword(bits=c.bits[:: 1 << g][: 1 << new_m], code=target)


@dataclass(frozen=True)
class InterleaveView:
    """One interleave of a codeword: the blocks with middle index fixed to z.

    ``blocks[w]`` holds the bits at evaluation points (u, z, w) for u in
    binary order; concatenating the blocks in binary order of w gives a
    codeword of RM(r, m-g) under that code's own index map.
    """

    h: int
    g: int
    z: np.ndarray
    blocks: np.ndarray  # (2^(m-h-g), 2^h) bits
    parent: Codeword = field(repr=False)

    def concatenated(self) -> Codeword:
        r, m = self.parent.code.r, self.parent.code.m
        new_m = m - self.g
        target = RmCode(min(r, new_m), new_m)
        return Codeword(bits=self.blocks.reshape(-1), code=target)

    def coordinate_indices(self) -> np.ndarray:
        """Parent coordinate index of each (w, u) entry, shaped like blocks."""
        m = self.parent.code.m
        return _restricted_indices(m, self.h, self.g, theta_inv(self.z))


def _restricted_indices(m: int, h: int, g: int, z_val: int) -> np.ndarray:
    u = np.arange(1 << h)
    w = np.arange(1 << (m - h - g))
    return u[None, :] + (z_val << h) + (w[:, None] << (h + g))


def interleave_restrict(c: Codeword, h: int, g: int, z) -> InterleaveView:
    """Restrict to the evaluation points (u, z, w) with z fixed."""
    m = c.code.m
    z_bits = gf2.asbits(z)
    if h < 0 or g < 0 or h + g > m:
        raise ValueError(f"need h + g <= m, got h={h}, g={g}, m={m}")
    if z_bits.shape != (g,):
        raise ValueError(f"phase z must have length g={g}")
    idx = _restricted_indices(m, h, g, theta_inv(z_bits))
    return InterleaveView(h=h, g=g, z=z_bits.copy(), blocks=c.bits[idx], parent=c)


def apply_affine_automorphism(c: Codeword, a, beta) -> Codeword:
    """Permute coordinates by the affine map v -> A v + beta on F_2^m.

    Output bit ell is the input bit at index theta_inv(A theta(ell) + beta);
    invertible affine maps permute the evaluation points and fix the code.
    """
    m = c.code.m
    a_mat = gf2.asbits(a)
    b_vec = gf2.asbits(beta)
    if a_mat.shape != (m, m) or b_vec.shape != (m,):
        raise ValueError("affine map has wrong dimensions")
    if gf2.rank(a_mat) != m:
        raise gf2.SingularMatrixError("affine automorphism needs invertible A")
    pts = all_points(m)
    src_pts = (gf2.matmul(pts, a_mat.T) ^ b_vec) & 1
    src_idx = src_pts @ (1 << np.arange(m, dtype=np.int64))
    return Codeword(bits=c.bits[src_idx], code=c.code)


def blocked_symbols(c: Codeword, h: int) -> np.ndarray:
    """Group the codeword into 2^(m-h) consecutive blocks of 2^h bits.

    Row w holds the bits at evaluation points (u, w), u in binary order,
    i.e. the plain reshape of the bit vector.
    """
    m = c.code.m
    if not 0 <= h <= m:
        raise ValueError(f"block exponent h={h} out of range for m={m}")
    return c.bits.reshape(1 << (m - h), 1 << h)


def irm_member(blocks, r: int, m: int, h: int) -> bool:
    """Membership in the interleaved code: every bit-row is in RM(r, m-h).

    ``blocks`` is a (2^(m-h), 2^h) array of block symbols; bit-row j is
    the j-th bit of every symbol.  The degree bound is clamped to the
    full space when r >= m-h.
    """
    arr = gf2.asbits(blocks)
    if arr.shape != (1 << (m - h), 1 << h):
        raise ValueError(
            f"expected {(1 << (m - h), 1 << h)} block array, got {arr.shape}"
        )
    row_code = RmCode(min(r, m - h), m - h)
    return all(row_code.contains(arr[:, j]) for j in range(1 << h))
