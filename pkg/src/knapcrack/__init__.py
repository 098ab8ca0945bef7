"""Merkle-Hellman knapsack cryptanalysis workbench.

The cipher itself lives in `mh`; `ga` and `pga` implement the island-model
genetic attack, `lll` the exact-arithmetic lattice baseline, and `bench` the
seeded experiment harness behind the `knapcrack` CLI.
"""

from .ga import Chromosome, FitnessContext, GAParams, Population
from .lll import LatticeBasis, ReductionParams, attack_lll, lll_reduce
from .mh import (
    Ciphertext,
    DecryptionError,
    PrivateKey,
    PublicKey,
    decrypt_block,
    decrypt_message,
    encrypt_block,
    encrypt_message,
    keygen,
    profile,
)
from .pga import AttackConfig, AttackReport, resemblance_ratio, run_attack, sensitivity_probe

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackReport",
    "Chromosome",
    "Ciphertext",
    "DecryptionError",
    "FitnessContext",
    "GAParams",
    "LatticeBasis",
    "Population",
    "PrivateKey",
    "PublicKey",
    "ReductionParams",
    "attack_lll",
    "decrypt_block",
    "decrypt_message",
    "encrypt_block",
    "encrypt_message",
    "keygen",
    "lll_reduce",
    "profile",
    "resemblance_ratio",
    "run_attack",
    "sensitivity_probe",
]
