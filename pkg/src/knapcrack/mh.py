"""Merkle-Hellman knapsack cipher: keys, block encryption, trapdoor decryption.

All values are plain Python integers, so arbitrary precision comes for free.
A plaintext block is a sequence of n bits (ints in {0, 1}); a ciphertext is
one subset-sum value per block.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

# Growth range used when the caller does not steer key density explicitly.
# Each superincreasing term exceeds the running total by a draw from this range,
# so a wider range lowers the density of the derived public key.
DEFAULT_GROWTH = (1, 1024)


class DecryptionError(Exception):
    """Ciphertext value is not reachable under the given private key."""


def mod_inverse(w: int, m: int) -> int:
    """Inverse of w modulo m, in [1, m-1], via the extended Euclidean algorithm.

    Raises ValueError when gcd(w, m) != 1 (invalid key material).
    """
    if m <= 1:
        raise ValueError("modulus must exceed 1")
    r0, r1 = w % m, m
    s0, s1 = 1, 0
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if r0 != 1:
        raise ValueError(f"{w} is not invertible modulo {m} (gcd {r0})")
    return s0 % m


def is_superincreasing(seq) -> bool:
    """True when every element strictly exceeds the sum of all elements before it."""
    if not seq:
        return False
    total = 0
    for a in seq:
        if a <= total:
            return False
        total += a
    return True


def gen_superincreasing(n: int, rng: random.Random, growth=DEFAULT_GROWTH) -> list[int]:
    """Sample n superincreasing weights, deterministic for a fixed rng state.

    Each term is the running total plus a uniform draw from `growth`, which
    guarantees the superincreasing property by construction.
    """
    if n < 1:
        raise ValueError("need at least one element")
    lo, hi = growth
    if lo < 1 or hi < lo:
        raise ValueError("growth range must have a positive lower bound")
    seq: list[int] = []
    total = 0
    for _ in range(n):
        nxt = total + rng.randint(lo, hi)
        seq.append(nxt)
        total += nxt
    return seq


@dataclass
class PrivateKey:
    """Trapdoor: superincreasing weights a, modulus m, multiplier w, permutation delta.

    delta is a 0-based permutation of range(n); the i-th public weight is
    derived from a[delta[i]].
    """

    a: list[int]
    m: int
    w: int
    delta: list[int]

    def __post_init__(self):
        if not is_superincreasing(self.a):
            raise ValueError("private weights must be superincreasing")
        if self.m <= sum(self.a):
            raise ValueError("modulus must exceed the sum of the private weights")
        if not 1 <= self.w < self.m:
            raise ValueError("multiplier out of range")
        if sorted(self.delta) != list(range(len(self.a))):
            raise ValueError("delta is not a permutation of range(n)")
        self.w_inv = mod_inverse(self.w, self.m)  # also rejects gcd(w, m) != 1

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass
class PublicKey:
    """Hard knapsack weights b_i, published for encryption."""

    b: list[int]

    def __post_init__(self):
        if any(x < 0 for x in self.b):
            raise ValueError("public weights must be non-negative")

    def __len__(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return len(self.b)


@dataclass
class Ciphertext:
    """One subset-sum value per block, plus the unpadded message bit length."""

    n: int
    c: list[int]
    message_bits: int

    @property
    def k(self) -> int:
        return len(self.c)


@dataclass
class InstanceProfile:
    n: int
    density: float
    ones_proportion: float


def keygen(n: int, rng: random.Random, growth=DEFAULT_GROWTH) -> tuple[PrivateKey, PublicKey]:
    """Generate a fresh key pair; deterministic for a fixed seed.

    The multiplier is drawn uniformly and redrawn until coprime with the
    modulus; the permutation comes from the rng's Fisher-Yates shuffle.
    """
    a = gen_superincreasing(n, rng, growth)
    m = sum(a) + rng.randint(*growth)
    if m <= 3:
        w = 1
    else:
        while True:
            w = rng.randint(2, m - 1)
            if math.gcd(w, m) == 1:
                break
    delta = list(range(n))
    rng.shuffle(delta)
    sk = PrivateKey(a=a, m=m, w=w, delta=delta)
    pk = PublicKey(b=[(a[delta[i]] * w) % m for i in range(n)])
    return sk, pk


def encrypt_block(pk: PublicKey, bits) -> int:
    """Subset sum of the public weights selected by the block's 1-bits."""
    if len(bits) != len(pk.b):
        raise ValueError(f"block length {len(bits)} != key length {len(pk.b)}")
    total = 0
    for w, x in zip(pk.b, bits):
        if x:
            total += w
    return total


def bytes_to_bits(data: bytes) -> list[int]:
    """MSB-first bit expansion, 8 bits per byte."""
    bits: list[int] = []
    for byte in data:
        bits.extend((byte >> i) & 1 for i in range(7, -1, -1))
    return bits


def bits_to_bytes(bits) -> bytes:
    if len(bits) % 8:
        raise ValueError("bit length must be a multiple of 8")
    out = bytearray()
    for i in range(0, len(bits), 8):
        byte = 0
        for b in bits[i : i + 8]:
            byte = (byte << 1) | int(b)
        out.append(byte)
    return bytes(out)


def pad_bits(bits, n: int) -> list[int]:
    """Zero-pad at the tail so the length is a multiple of n."""
    bits = list(bits)
    rem = len(bits) % n
    if rem:
        bits.extend([0] * (n - rem))
    return bits


def encrypt_message(pk: PublicKey, message: bytes) -> Ciphertext:
    """Split the message into n-bit blocks (zero-padded tail) and encrypt each."""
    n = len(pk.b)
    raw = bytes_to_bits(message)
    bits = pad_bits(raw, n) if raw else []
    c = [encrypt_block(pk, bits[i : i + n]) for i in range(0, len(bits), n)]
    return Ciphertext(n=n, c=c, message_bits=len(raw))


def decrypt_block(sk: PrivateKey, c: int) -> list[int]:
    """Invert the trapdoor, greedily solve the easy knapsack, undo the permutation.

    Raises DecryptionError when the greedy scan leaves a nonzero residue,
    which signals a value not generated under this key.
    """
    if c < 0:
        raise ValueError("ciphertext value must be non-negative")
    d = (sk.w_inv * c) % sk.m
    e = [0] * len(sk.a)
    for i in range(len(sk.a) - 1, -1, -1):
        if d >= sk.a[i]:
            e[i] = 1
            d -= sk.a[i]
    if d:
        raise DecryptionError(f"residue {d} after greedy solve; wrong key or corrupt value")
    return [e[j] for j in sk.delta]


def decrypt_message(sk: PrivateKey, ct: Ciphertext) -> bytes:
    """Decrypt every block and strip the tail padding recorded in the ciphertext."""
    bits: list[int] = []
    for c in ct.c:
        bits.extend(decrypt_block(sk, c))
    return bits_to_bytes(bits[: ct.message_bits])


def int_log2(x: int) -> float:
    """log2 of a positive integer: exact bit length plus a fractional correction.

    Safe for integers far beyond float range.
    """
    if x <= 0:
        raise ValueError("log2 undefined for non-positive values")
    nbits = x.bit_length()
    if nbits <= 53:
        return math.log2(x)
    return math.log2(x >> (nbits - 53)) + (nbits - 53)


def key_density(pk: PublicKey) -> float:
    """n / log2(max b_i); low values mark lattice-vulnerable instances."""
    top = max(pk.b)
    if top < 2:
        raise ValueError("density undefined: largest public weight below 2")
    return len(pk.b) / int_log2(top)


def ones_proportion(bits) -> float:
    return sum(1 for b in bits if b) / len(bits)


def profile(pk: PublicKey, bits) -> InstanceProfile:
    """Density of the key and ones-proportion of one plaintext block."""
    if len(bits) != len(pk.b):
        raise ValueError("block length does not match key length")
    return InstanceProfile(
        n=len(pk.b),
        density=key_density(pk),
        ones_proportion=ones_proportion(bits),
    )


# ---------------------------------------------------------------------------
# File formats. Large integers are stored as decimal strings because JSON
# numbers lose precision past 2^53.


def key_to_dict(sk: PrivateKey | None, pk: PublicKey) -> dict:
    doc = {"n": len(pk.b), "b": [str(x) for x in pk.b]}
    if sk is not None:
        doc.update(
            a=[str(x) for x in sk.a],
            m=str(sk.m),
            w=str(sk.w),
            delta=list(sk.delta),
        )
    return doc


def key_from_dict(doc: dict) -> tuple[PrivateKey | None, PublicKey]:
    pk = PublicKey(b=[int(x) for x in doc["b"]])
    sk = None
    if "a" in doc:
        sk = PrivateKey(
            a=[int(x) for x in doc["a"]],
            m=int(doc["m"]),
            w=int(doc["w"]),
            delta=[int(x) for x in doc["delta"]],
        )
    return sk, pk


def save_key(path, sk: PrivateKey | None, pk: PublicKey) -> None:
    with open(path, "w") as fh:
        json.dump(key_to_dict(sk, pk), fh, indent=2)
        fh.write("\n")


def load_key(path) -> tuple[PrivateKey | None, PublicKey]:
    with open(path) as fh:
        return key_from_dict(json.load(fh))


def ciphertext_to_dict(ct: Ciphertext) -> dict:
    return {
        "n": ct.n,
        "k": ct.k,
        "c": [str(x) for x in ct.c],
        "message_bits": ct.message_bits,
    }


def ciphertext_from_dict(doc: dict) -> Ciphertext:
    ct = Ciphertext(
        n=int(doc["n"]),
        c=[int(x) for x in doc["c"]],
        message_bits=int(doc["message_bits"]),
    )
    if "k" in doc and int(doc["k"]) != ct.k:
        raise ValueError("ciphertext block count disagrees with declared k")
    return ct


def save_ciphertext(path, ct: Ciphertext) -> None:
    with open(path, "w") as fh:
        json.dump(ciphertext_to_dict(ct), fh, indent=2)
        fh.write("\n")


def load_ciphertext(path) -> Ciphertext:
    with open(path) as fh:
        return ciphertext_from_dict(json.load(fh))
