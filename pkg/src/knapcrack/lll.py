"""Lattice-reduction attack on knapsack blocks, in exact rational arithmetic.

Two embeddings of a subset-sum instance are supported: the classic one whose
short vectors carry 0/1 solution coordinates, and the stronger variant whose
final row of halves centers the solution at +-1/2 coordinates. Reduction is
a from-scratch LLL over Fractions; no floating point touches the lattice.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from fractions import Fraction

from .mh import Ciphertext, PublicKey, encrypt_block


@dataclass
class LatticeBasis:
    """Row basis with exact rational entries."""

    rows: list

    def __post_init__(self):
        if not self.rows:
            raise ValueError("empty basis")
        width = len(self.rows[0])
        if any(len(r) != width for r in self.rows):
            raise ValueError("rows must share one length")
        self.rows = [[Fraction(x) for x in row] for row in self.rows]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])


@dataclass
class ReductionParams:
    lovasz_delta: Fraction = Fraction(3, 4)

    def __post_init__(self):
        self.lovasz_delta = Fraction(self.lovasz_delta)
        if not Fraction(1, 4) < self.lovasz_delta <= 1:
            raise ValueError("lovasz_delta must lie in (1/4, 1]")


@dataclass
class LatticeAttackOutcome:
    solved: bool
    candidate: list | None
    reduced_basis: LatticeBasis
    elapsed: float
    basis_kind: str


def _round_half_up(x: Fraction) -> int:
    """Nearest integer to an exact rational; halves round up."""
    return (2 * x.numerator + x.denominator) // (2 * x.denominator)


def _gso(rows):
    """Gram-Schmidt coefficients mu and squared norms B from integer rows.

    Works off inner products only, so no orthogonal vectors are materialized.
    Raises ValueError on linearly dependent rows.
    """
    d = len(rows)
    mu = [[Fraction(0)] * d for _ in range(d)]
    B = [Fraction(0)] * d
    # inner products of the raw rows
    dot = [[sum(a * b for a, b in zip(rows[i], rows[j])) for j in range(i + 1)] for i in range(d)]
    for i in range(d):
        for j in range(i):
            num = Fraction(dot[i][j])
            for l in range(j):
                num -= mu[j][l] * mu[i][l] * B[l]
            mu[i][j] = num / B[j]
        B[i] = Fraction(dot[i][i])
        for l in range(i):
            B[i] -= mu[i][l] * mu[i][l] * B[l]
        if B[i] == 0:
            raise ValueError("rows are linearly dependent")
    return mu, B


def lll_reduce(basis: LatticeBasis, params: ReductionParams | None = None) -> LatticeBasis:
    """Reduce a basis of the same lattice: size-reduced and Lovasz-conditioned.

    The returned rows satisfy |mu_ij| <= 1/2 for j < i and
    B_k >= (delta - mu_{k,k-1}^2) B_{k-1} for every k, both checked in exact
    rationals by the caller's tests rather than trusted floating point.
    """
    if params is None:
        params = ReductionParams()
    delta = params.lovasz_delta

    # scale to an integer matrix; uniform scaling leaves both conditions invariant
    denom = 1
    for row in basis.rows:
        for x in row:
            denom = denom * x.denominator // math.gcd(denom, x.denominator)
    rows = [[int(x * denom) for x in row] for row in basis.rows]

    d = len(rows)
    mu, B = _gso(rows)

    def size_reduce(k: int, l: int) -> None:
        r = _round_half_up(mu[k][l])
        if r:
            rows[k] = [a - r * b for a, b in zip(rows[k], rows[l])]
            for j in range(l):
                mu[k][j] -= r * mu[l][j]
            mu[k][l] -= r

    k = 1
    while k < d:
        size_reduce(k, k - 1)
        if B[k] < (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            # swap rows k-1 and k, updating the GSO data in place
            m = mu[k][k - 1]
            bnew = B[k] + m * m * B[k - 1]
            mu[k][k - 1] = m * B[k - 1] / bnew
            B[k] = B[k - 1] * B[k] / bnew
            B[k - 1] = bnew
            rows[k - 1], rows[k] = rows[k], rows[k - 1]
            for j in range(k - 1):
                mu[k - 1][j], mu[k][j] = mu[k][j], mu[k - 1][j]
            for i in range(k + 1, d):
                t = mu[i][k]
                mu[i][k] = mu[i][k - 1] - m * t
                mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
            k = max(k - 1, 1)
        else:
            for l in range(k - 2, -1, -1):
                size_reduce(k, l)
            k += 1

    inv = Fraction(1, denom)
    return LatticeBasis(rows=[[x * inv for x in row] for row in rows])


def scaling_factor(n: int) -> int:
    """Smallest integer exceeding sqrt(n)/2 + 1, applied to the weight column."""
    return math.floor(math.sqrt(n) / 2 + 1) + 1


def build_lo_basis(pk: PublicKey, c: int) -> LatticeBasis:
    """(n+1)-dimensional embedding whose short vectors carry 0/1 coordinates.

    Row i is the i-th unit vector with N*b_i appended; the last row is all
    zeros with N*c appended. A solution x appears as the lattice vector
    (x_1 .. x_n, 0).
    """
    n = len(pk.b)
    if n < 1:
        raise ValueError("empty public key")
    scale = scaling_factor(n)
    rows = []
    for i, w in enumerate(pk.b):
        row = [0] * (n + 1)
        row[i] = 1
        row[n] = scale * w
        rows.append(row)
    rows.append([0] * n + [scale * c])
    return LatticeBasis(rows=rows)


def build_cjloss_basis(pk: PublicKey, c: int) -> LatticeBasis:
    """Variant with a final row of halves; solutions map to +-1/2 coordinates.

    The solution vector has squared norm n/4 regardless of how unbalanced the
    plaintext is, which is what makes this embedding stronger at high density.
    """
    n = len(pk.b)
    if n < 1:
        raise ValueError("empty public key")
    scale = scaling_factor(n)
    half = Fraction(1, 2)
    rows = []
    for i, w in enumerate(pk.b):
        row = [Fraction(0)] * (n + 1)
        row[i] = Fraction(1)
        row[n] = Fraction(scale * w)
        rows.append(row)
    rows.append([half] * n + [Fraction(scale * c)])
    return LatticeBasis(rows=rows)


LO = "lo"
CJLOSS = "cjloss"


def _decode_row(row, kind: str) -> list | None:
    if row[-1] != 0:
        return None
    if kind == LO:
        if all(x == 0 or x == 1 for x in row[:-1]):
            return [int(x) for x in row[:-1]]
        return None
    half = Fraction(1, 2)
    if all(x == half or x == -half for x in row[:-1]):
        return [1 if x == half else 0 for x in row[:-1]]
    return None


def extract_solution(reduced: LatticeBasis, pk: PublicKey, c: int, basis_kind: str):
    """Scan reduced rows (and negations) for a decodable, verified solution.

    Returns the plaintext block bits, or None when no row re-encrypts to c.
    The re-encryption check is mandatory: decodable patterns can occur by
    accident.
    """
    for row in reduced.rows:
        for signed in (row, [-x for x in row]):
            bits = _decode_row(signed, basis_kind)
            if bits is not None and encrypt_block(pk, bits) == c:
                return bits
    return None


def attack_block(pk: PublicKey, c: int, params: ReductionParams | None = None) -> LatticeAttackOutcome:
    """Try the halves embedding first, then the 0/1 one; stop at the first hit."""
    start = time.perf_counter()
    if c == 0:
        # the empty subset is the unique solution; no lattice needed
        bits = [0] * len(pk.b)
        basis = build_lo_basis(pk, c)
        return LatticeAttackOutcome(True, bits, basis, time.perf_counter() - start, LO)
    last_reduced = None
    for kind, builder in ((CJLOSS, build_cjloss_basis), (LO, build_lo_basis)):
        reduced = lll_reduce(builder(pk, c), params)
        last_reduced = reduced
        bits = extract_solution(reduced, pk, c, kind)
        if bits is not None:
            return LatticeAttackOutcome(True, bits, reduced, time.perf_counter() - start, kind)
    return LatticeAttackOutcome(False, None, last_reduced, time.perf_counter() - start, LO)


def attack_lll(pk: PublicKey, ct: Ciphertext, params: ReductionParams | None = None) -> list:
    """One outcome per ciphertext block; fully deterministic."""
    return [attack_block(pk, c, params) for c in ct.c]
