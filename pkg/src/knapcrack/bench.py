"""Benchmark harness: seeded instance generation, attack campaigns, CSV/JSON output.

Campaign outputs are split into deterministic files (seeds, successes,
generation counts, ratios) and *_timing files holding wall-clock statistics.
Rerunning a campaign with the same spec and master seed reproduces the
deterministic files byte for byte when attacks use the sequential scheduler;
timing files are explicitly outside that guarantee.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from . import config as cfgmod
from .ga import GAParams
from .lll import ReductionParams, attack_lll
from .mh import (
    Ciphertext,
    PrivateKey,
    PublicKey,
    bits_to_bytes,
    bytes_to_bits,
    ciphertext_from_dict,
    ciphertext_to_dict,
    encrypt_block,
    encrypt_message,
    key_density,
    key_from_dict,
    key_to_dict,
    keygen,
)
from .pga import AttackConfig, run_attack

DENSITY_BUCKETS = [(0.6, 0.7), (0.7, 0.8), (0.8, 0.9), (0.9, 1.0)]

PRINTABLE_LO, PRINTABLE_HI = 0x20, 0x7E


@dataclass
class ExperimentSpec:
    key_lengths: list = field(default_factory=lambda: [16, 24, 32])
    block_counts: list = field(default_factory=lambda: [1, 2])
    trials_per_cell: int = 20
    parameter_grid: dict = field(default_factory=dict)
    time_limit: float = 1800.0
    master_seed: int = 0

    def __post_init__(self):
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be at least 1")
        for n in self.key_lengths:
            if n <= 0 or n % 8:
                raise ValueError("key lengths must be positive multiples of 8")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class CellStats:
    trials: int
    success_count: int
    gen_min: int | None = None
    gen_max: int | None = None
    gen_median: int | None = None
    gen_avg: float | None = None
    time_min: float | None = None
    time_max: float | None = None
    time_median: float | None = None
    time_avg: float | None = None


def stats(samples):
    """(min, max, median, average); median is the lower middle for even counts."""
    if not samples:
        raise ValueError("no samples")
    ordered = sorted(samples)
    median = ordered[(len(ordered) - 1) // 2]
    return ordered[0], ordered[-1], median, sum(samples) / len(samples)


def random_printable(nbytes: int, rng: random.Random) -> bytes:
    return bytes(rng.randint(PRINTABLE_LO, PRINTABLE_HI) for _ in range(nbytes))


def growth_for_density(n: int, target: float):
    """Growth range whose keys land near the requested density."""
    extra_bits = max(n * (1.0 / target - 1.0), 0.3)
    hi = max(2, round(2**extra_bits))
    return (1, hi)


@dataclass
class Instance:
    """One benchmark problem: keys, ground truth and its ciphertext."""

    sk: PrivateKey | None
    pk: PublicKey
    ct: Ciphertext
    truth_bits: list
    density: float
    ones_proportion: float
    seed: int

    @property
    def message(self) -> bytes | None:
        if len(self.truth_bits) % 8:
            return None
        return bits_to_bytes(self.truth_bits)

    def to_json_bytes(self) -> bytes:
        doc = {
            "key": key_to_dict(self.sk, self.pk),
            "ciphertext": ciphertext_to_dict(self.ct),
            "truth_bits": "".join(map(str, self.truth_bits)),
            "seed": self.seed,
        }
        return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()

    @classmethod
    def from_json_bytes(cls, blob: bytes) -> "Instance":
        doc = json.loads(blob.decode())
        sk, pk = key_from_dict(doc["key"])
        ct = ciphertext_from_dict(doc["ciphertext"])
        truth = [int(ch) for ch in doc["truth_bits"]]
        return cls(
            sk=sk,
            pk=pk,
            ct=ct,
            truth_bits=truth,
            density=key_density(pk),
            ones_proportion=sum(truth) / len(truth) if truth else 0.0,
            seed=int(doc["seed"]),
        )


def gen_instance(n: int, k: int, rng: random.Random, density_target=None, p_target=None,
                 growth=None, max_key_tries: int = 500, seed: int = 0) -> Instance:
    """Sample a (keys, plaintext, ciphertext) problem, optionally steered.

    density_target is a half-open [lo, hi) interval enforced by rejection on
    fresh keys; p_target is a closed [lo, hi] interval on each block's
    ones-proportion, met by drawing an admissible ones count directly.
    Without p_target the plaintext is printable ASCII when n*k is a whole
    number of bytes, uniform bits otherwise.
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be at least 1")

    if density_target is None:
        sk, pk = keygen(n, rng, growth or (1, 1024))
        density = key_density(pk)
    else:
        lo, hi = density_target
        tries = 0
        closest = None
        while True:
            tries += 1
            g = growth or growth_for_density(n, (lo + hi) / 2)
            sk, pk = keygen(n, rng, g)
            density = key_density(pk)
            if lo <= density < hi:
                break
            if closest is None or abs(density - (lo + hi) / 2) < abs(closest - (lo + hi) / 2):
                closest = density
            if tries >= max_key_tries:
                raise ValueError(
                    f"no key with density in [{lo}, {hi}) after {tries} tries at n={n}; "
                    f"closest achieved {closest:.4f}"
                )

    if p_target is None:
        if (n * k) % 8 == 0:
            message = random_printable(n * k // 8, rng)
            ct = encrypt_message(pk, message)
            truth = bytes_to_bits(message)
        else:
            truth = [rng.getrandbits(1) for _ in range(n * k)]
            ct = _encrypt_bits(pk, truth, n)
    else:
        lo, hi = p_target
        counts = [c for c in range(n + 1) if lo <= c / n <= hi]
        if not counts:
            raise ValueError(f"no admissible ones count for p in [{lo}, {hi}] at n={n}")
        truth = []
        for _ in range(k):
            ones = rng.choice(counts)
            block = [0] * n
            for pos in rng.sample(range(n), ones):
                block[pos] = 1
            truth.extend(block)
        ct = _encrypt_bits(pk, truth, n)

    return Instance(
        sk=sk,
        pk=pk,
        ct=ct,
        truth_bits=truth,
        density=density,
        ones_proportion=sum(truth) / len(truth),
        seed=seed,
    )


def _encrypt_bits(pk: PublicKey, bits, n: int) -> Ciphertext:
    c = [encrypt_block(pk, bits[i : i + n]) for i in range(0, len(bits), n)]
    return Ciphertext(n=n, c=c, message_bits=len(bits))


def derive_seed(master: int, *parts: int) -> int:
    """Deterministic per-trial seed from the master seed and cell coordinates."""
    s = master
    for p in parts:
        s = s * 1_000_003 + p + 1
    return s


def verified_success(pk: PublicKey, ct: Ciphertext, report) -> bool:
    """An attack succeeds only if every block's candidate re-encrypts exactly."""
    if len(report.per_block) != ct.k:
        return False
    return all(encrypt_block(pk, r.bits) == c for r, c in zip(report.per_block, ct.c))


# ---------------------------------------------------------------------------
# output helpers


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, header, rows):
    docs = [dict(zip(header, row)) for row in rows]
    with open(path, "w") as fh:
        json.dump(docs, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit(out_dir, name, header, rows, fmt="both"):
    os.makedirs(out_dir, exist_ok=True)
    if fmt in ("both", "csv"):
        _write_csv(os.path.join(out_dir, name + ".csv"), header, rows)
    if fmt in ("both", "json"):
        _write_json(os.path.join(out_dir, name + ".json"), header, rows)


def _run_tasks(task_fn, tasks, workers: int):
    if workers <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks, chunksize=1))


# ---------------------------------------------------------------------------
# campaign: generation/time statistics over an (n, k) grid


def _table1_trial(task):
    n, k, trial, seed, cfg, sequential = task
    rng = random.Random(seed)
    inst = gen_instance(n, k, rng, seed=seed)
    report = run_attack(inst.ct, inst.pk, cfg, master_seed=seed,
                        truth_bits=inst.truth_bits, sequential=sequential)
    success = verified_success(inst.pk, inst.ct, report)
    return {
        "n": n,
        "k": k,
        "trial": trial,
        "seed": seed,
        "success": success,
        "generations": max(r.generations for r in report.per_block),
        "elapsed": report.total_elapsed,
        "resemblance": report.resemblance,
    }


def run_table1_campaign(spec: ExperimentSpec, cfg: AttackConfig, out_dir,
                        sequential: bool = True, workers: int = 1, fmt: str = "both"):
    """Per-(n, k) cell statistics over seeded attacks, plus raw per-trial logs."""
    combos = cfgmod.grid_combos(spec.parameter_grid)
    summaries = {}
    for combo_index, combo in enumerate(combos):
        combo_cfg = replace(cfg, ga=cfgmod.apply_ga_overrides(cfg.ga, combo)) if combo else cfg
        combo_dir = out_dir if len(combos) == 1 else os.path.join(out_dir, cfgmod.combo_slug(combo))
        tasks = []
        for n in spec.key_lengths:
            for k in spec.block_counts:
                for trial in range(spec.trials_per_cell):
                    seed = derive_seed(spec.master_seed, combo_index, n, k, trial)
                    tasks.append((n, k, trial, seed, combo_cfg, sequential))
        rows = _run_tasks(_table1_trial, tasks, workers)
        rows.sort(key=lambda r: (r["n"], r["k"], r["trial"]))
        summaries[cfgmod.combo_slug(combo)] = _emit_table1(rows, spec, combo_dir, fmt)
    return summaries if len(combos) > 1 else next(iter(summaries.values()))


def _emit_table1(rows, spec, out_dir, fmt):
    cells = {}
    for r in rows:
        cells.setdefault((r["n"], r["k"]), []).append(r)

    agg_rows, timing_rows, cell_stats = [], [], {}
    for (n, k), bucket in sorted(cells.items()):
        wins = [r for r in bucket if r["success"]]
        cs = CellStats(trials=len(bucket), success_count=len(wins))
        if wins:
            cs.gen_min, cs.gen_max, cs.gen_median, cs.gen_avg = stats([r["generations"] for r in wins])
            cs.time_min, cs.time_max, cs.time_median, cs.time_avg = stats([r["elapsed"] for r in wins])
        cell_stats[(n, k)] = cs
        agg_rows.append([n, k, cs.trials, cs.success_count,
                         cs.gen_min, cs.gen_max, cs.gen_median, cs.gen_avg])
        timing_rows.append([n, k, cs.time_min, cs.time_max, cs.time_median, cs.time_avg])

    emit(out_dir, "table1",
         ["n", "k", "trials", "successes", "gen_min", "gen_max", "gen_median", "gen_avg"],
         agg_rows, fmt)
    emit(out_dir, "table1_trials",
         ["n", "k", "trial", "seed", "success", "generations"],
         [[r["n"], r["k"], r["trial"], r["seed"], int(r["success"]), r["generations"]] for r in rows],
         fmt)
    emit(out_dir, "table1_failures",
         ["n", "k", "trial", "seed", "generations"],
         [[r["n"], r["k"], r["trial"], r["seed"], r["generations"]] for r in rows if not r["success"]],
         fmt)
    emit(out_dir, "table1_timing",
         ["n", "k", "time_min_s", "time_max_s", "time_median_s", "time_avg_s"],
         timing_rows, fmt)
    return cell_stats


# ---------------------------------------------------------------------------
# paired campaigns: both attacks consume byte-identical instance files


def _paired_trial(task):
    (bucket, n, k, index, seed, cfg, reduction_delta, sequential, inst_path) = task
    rng = random.Random(seed)
    inst = gen_instance(n, k, rng, density_target=bucket, seed=seed)

    with open(inst_path, "wb") as fh:
        fh.write(inst.to_json_bytes())

    # each attack re-reads the instance from disk; the hashes must agree
    with open(inst_path, "rb") as fh:
        blob_pga = fh.read()
    with open(inst_path, "rb") as fh:
        blob_lll = fh.read()
    h_pga = hashlib.sha256(blob_pga).hexdigest()
    h_lll = hashlib.sha256(blob_lll).hexdigest()
    if h_pga != h_lll:
        raise RuntimeError("paired attacks saw different instance bytes")

    pga_inst = Instance.from_json_bytes(blob_pga)
    report = run_attack(pga_inst.ct, pga_inst.pk, cfg, master_seed=seed,
                        truth_bits=pga_inst.truth_bits, sequential=sequential)
    pga_ok = verified_success(pga_inst.pk, pga_inst.ct, report)

    lll_inst = Instance.from_json_bytes(blob_lll)
    outcomes = attack_lll(lll_inst.pk, lll_inst.ct, ReductionParams(reduction_delta))
    lll_ok = all(o.solved and encrypt_block(lll_inst.pk, o.candidate) == c
                 for o, c in zip(outcomes, lll_inst.ct.c))

    return {
        "bucket": bucket,
        "n": n,
        "k": k,
        "index": index,
        "seed": seed,
        "density": inst.density,
        "ones_p": inst.ones_proportion,
        "sha256": h_pga,
        "pga": pga_ok,
        "lll": lll_ok,
        "pga_time": report.total_elapsed,
        "lll_time": sum(o.elapsed for o in outcomes),
        "pga_generations": max(r.generations for r in report.per_block),
    }


def _paired_tasks(plan, spec, cfg, reduction_delta, sequential, out_dir):
    inst_dir = os.path.join(out_dir, "instances")
    os.makedirs(inst_dir, exist_ok=True)
    tasks = []
    for bucket, n, k, index in plan:
        tag = round(bucket[0] * 10)
        seed = derive_seed(spec.master_seed, tag, n, k, index)
        path = os.path.join(inst_dir, f"inst_n{n}_k{k}_d{tag}_{index}.json")
        tasks.append((bucket, n, k, index, seed, cfg, reduction_delta, sequential, path))
    return tasks


def run_density_campaign(spec: ExperimentSpec, cfg: AttackConfig, out_dir,
                         reduction_delta="3/4", sequential: bool = True,
                         workers: int = 1, fmt: str = "both", block_count: int = 1):
    """Paired success ratios per density bucket, both attacks on identical instances."""
    plan = []
    for bucket in DENSITY_BUCKETS:
        for n in spec.key_lengths:
            for index in range(spec.trials_per_cell):
                plan.append((bucket, n, block_count, index))
    rows = _run_tasks(_paired_trial, _paired_tasks(plan, spec, cfg, reduction_delta, sequential, out_dir), workers)
    rows.sort(key=lambda r: (r["bucket"], r["n"], r["index"]))

    agg, timing = [], []
    for bucket in DENSITY_BUCKETS:
        sub = [r for r in rows if r["bucket"] == bucket]
        if not sub:
            agg.append([bucket[0], bucket[1], 0, None, None, None, None])
            timing.append([bucket[0], bucket[1], None, None])
            continue
        pga_solved = sum(r["pga"] for r in sub)
        lll_solved = sum(r["lll"] for r in sub)
        agg.append([bucket[0], bucket[1], len(sub), pga_solved, lll_solved,
                    pga_solved / len(sub), lll_solved / len(sub)])
        timing.append([bucket[0], bucket[1],
                       sum(r["pga_time"] for r in sub) / len(sub),
                       sum(r["lll_time"] for r in sub) / len(sub)])

    emit(out_dir, "density",
         ["bucket_lo", "bucket_hi", "instances", "pga_solved", "lll_solved", "pga_ratio", "lll_ratio"],
         agg, fmt)
    emit(out_dir, "density_trials",
         ["bucket_lo", "bucket_hi", "n", "k", "index", "seed", "density", "ones_p",
          "instance_sha256", "pga_success", "lll_success", "pga_generations"],
         [[r["bucket"][0], r["bucket"][1], r["n"], r["k"], r["index"], r["seed"],
           f"{r['density']:.6f}", f"{r['ones_p']:.6f}", r["sha256"],
           int(r["pga"]), int(r["lll"]), r["pga_generations"]] for r in rows],
         fmt)
    emit(out_dir, "density_timing",
         ["bucket_lo", "bucket_hi", "pga_time_avg_s", "lll_time_avg_s"],
         timing, fmt)
    return agg


@dataclass
class ComparisonRecord:
    n: int
    density: float
    ones_proportion: float
    pga_solved: bool
    lll_solved: bool


def run_comparison(spec: ExperimentSpec, cfg: AttackConfig, out_dir,
                   total_instances: int | None = None, reduction_delta="3/4",
                   sequential: bool = True, workers: int = 1, fmt: str = "both",
                   block_count: int = 1):
    """Head-to-head records over mixed densities, plus overall success ratios.

    Instances are spread round-robin over (key length, density bucket) pairs
    so any total count is hit exactly.
    """
    total = total_instances if total_instances is not None else spec.trials_per_cell
    combos = [(n, bucket) for n in spec.key_lengths for bucket in DENSITY_BUCKETS]
    plan = []
    for i in range(total):
        n, bucket = combos[i % len(combos)]
        plan.append((bucket, n, block_count, i))
    rows = _run_tasks(_paired_trial, _paired_tasks(plan, spec, cfg, reduction_delta, sequential, out_dir), workers)
    rows.sort(key=lambda r: r["index"])

    records = [ComparisonRecord(r["n"], r["density"], r["ones_p"], r["pga"], r["lll"]) for r in rows]
    pga_ratio = sum(r.pga_solved for r in records) / len(records)
    lll_ratio = sum(r.lll_solved for r in records) / len(records)

    emit(out_dir, "compare",
         ["index", "seed", "n", "density", "ones_p", "instance_sha256", "pga_solved", "lll_solved"],
         [[r["index"], r["seed"], r["n"], f"{r['density']:.6f}", f"{r['ones_p']:.6f}",
           r["sha256"], int(r["pga"]), int(r["lll"])] for r in rows],
         fmt)
    emit(out_dir, "compare_summary",
         ["instances", "pga_solved", "lll_solved", "pga_ratio", "lll_ratio"],
         [[len(records), sum(r.pga_solved for r in records), sum(r.lll_solved for r in records),
           pga_ratio, lll_ratio]],
         fmt)
    emit(out_dir, "compare_timing",
         ["index", "n", "pga_time_s", "lll_time_s"],
         [[r["index"], r["n"], r["pga_time"], r["lll_time"]] for r in rows],
         fmt)
    return records, pga_ratio, lll_ratio
