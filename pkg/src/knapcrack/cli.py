"""Command-line workbench.

Subcommands: keygen, encrypt, decrypt, attack-pga, attack-lll, bench-table1,
bench-density, bench-compare, sensitivity-probe.

Exit codes: 0 success, 1 attack failed (budget exhausted or undecodable),
2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import bench, config as cfgmod
from .ga import GAParams
from .lll import ReductionParams, attack_lll
from .mh import (
    DecryptionError,
    decrypt_message,
    encrypt_block,
    encrypt_message,
    keygen,
    load_ciphertext,
    load_key,
    save_ciphertext,
    save_key,
)
from .pga import run_attack, sensitivity_probe, truth_bits_for

EXIT_OK = 0
EXIT_ATTACK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

DESK_PRESET = {"key_lengths": [16, 24, 32], "block_counts": [1, 2], "trials_per_cell": 20,
               "time_limit": 300.0}
FULL_PRESET = {"key_lengths": list(range(24, 113, 8)), "block_counts": [1, 2],
               "trials_per_cell": 100, "time_limit": 1800.0}


def _common_flags(p):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--config", help="key=value config file with [ga]/[attack]/[bench] sections")
    p.add_argument("--out", default=".", help="output directory")


def _ga_flags(p):
    p.add_argument("--pop-size", type=int, dest="pop_size")
    p.add_argument("--pc", type=float, help="crossover (mating) probability")
    p.add_argument("--pm", type=float, help="mutation probability")
    p.add_argument("--ps", type=float, help="probability of roulette-wheel selection")
    p.add_argument("--heuristic-iters", type=int, dest="heuristic_iters")
    p.add_argument("--heuristic-fraction", dest="heuristic_fraction",
                   help="population share improved per generation, e.g. 1/3")
    p.add_argument("--init-oversample", type=int, dest="init_oversample")
    p.add_argument("--max-generations", type=int, dest="max_generations")


def _attack_flags(p):
    p.add_argument("--migration-period", type=int, dest="migration_period")
    p.add_argument("--no-migration", action="store_true")
    p.add_argument("--time-limit", type=float, dest="time_limit", help="seconds per attack")
    p.add_argument("--generations", type=int, help="generation budget per block")
    p.add_argument("--inbox-capacity", type=int, dest="inbox_capacity")
    p.add_argument("--sequential", action="store_true",
                   help="deterministic round-robin scheduler (reproducibility reference)")
    p.add_argument("--threaded", action="store_true", help="one thread per block")


def _bench_flags(p):
    p.add_argument("--n", help="comma-separated key lengths, e.g. 24,32")
    p.add_argument("--blocks", help="comma-separated block counts, e.g. 1,2")
    p.add_argument("--trials", type=int, help="trials per cell (or total for bench-compare)")
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")
    p.add_argument("--workers", type=int, default=1, help="parallel instances (process pool)")


def _sections(args):
    if args.config:
        return cfgmod.read_config(args.config)
    return {}


def _ga_from(args, sections) -> GAParams:
    return cfgmod.build_ga_params(
        sections.get("ga"),
        pop_size=args.pop_size, pc=args.pc, pm=args.pm, ps=args.ps,
        heuristic_iters=args.heuristic_iters, heuristic_fraction=args.heuristic_fraction,
        init_oversample=args.init_oversample, max_generations=args.max_generations,
    )


def _attack_from(args, sections):
    ga = _ga_from(args, sections)
    cfg = cfgmod.build_attack_config(
        ga, sections.get("attack"),
        migration_period=args.migration_period, time_limit=args.time_limit,
        generations=args.generations, inbox_capacity=args.inbox_capacity,
    )
    if args.no_migration:
        cfg.migration_enabled = False
    return cfg


def _sequential(args, default=True) -> bool:
    if args.threaded and args.sequential:
        raise ValueError("--sequential and --threaded are mutually exclusive")
    if args.threaded:
        return False
    if args.sequential:
        return True
    return default


def _spec_from(args, sections, preset=None) -> bench.ExperimentSpec:
    fields = dict(preset or {})
    fields.update(cfgmod.bench_fields(
        sections.get("bench"),
        key_lengths=args.n, block_counts=args.blocks,
        trials_per_cell=args.trials, time_limit=args.time_limit,
    ))
    fields["master_seed"] = args.seed
    return bench.ExperimentSpec(**fields)


# ---------------------------------------------------------------------------


def cmd_keygen(args) -> int:
    rng = random.Random(args.seed)
    growth = tuple(int(x) for x in args.growth.split(",")) if args.growth else (1, 1024)
    sk, pk = keygen(args.n, rng, growth)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "key.json")
    save_key(path, sk, pk)
    print(f"wrote {path} (n={args.n})")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    _, pk = load_key(args.key)
    if args.message is not None:
        message = args.message.encode()
    elif args.message_file:
        with open(args.message_file, "rb") as fh:
            message = fh.read()
    else:
        raise ValueError("supply --message or --message-file")
    ct = encrypt_message(pk, message)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "ciphertext.json")
    save_ciphertext(path, ct)
    print(f"wrote {path} (k={ct.k} blocks)")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    sk, _ = load_key(args.key)
    if sk is None:
        raise ValueError("key file holds no private half")
    ct = load_ciphertext(args.ciphertext)
    try:
        message = decrypt_message(sk, ct)
    except DecryptionError as exc:
        print(f"decryption failed: {exc}", file=sys.stderr)
        return EXIT_ATTACK_FAILED
    sys.stdout.buffer.write(message)
    sys.stdout.buffer.write(b"\n")
    return EXIT_OK


def cmd_attack_pga(args) -> int:
    sections = _sections(args)
    cfg = _attack_from(args, sections)
    _, pk = load_key(args.key)
    ct = load_ciphertext(args.ciphertext)
    truth = None
    if args.truth:
        with open(args.truth, "rb") as fh:
            truth = fh.read()
    report = run_attack(ct, pk, cfg, master_seed=args.seed, truth=truth,
                        sequential=_sequential(args, default=False))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "pga_report.json")
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in report.per_block:
        state = "solved" if r.solved else f"best fitness {r.best_fitness}"
        print(f"block {r.block}: {state} after {r.generations} generations")
    print(f"wrote {path}")
    return EXIT_OK if report.all_solved else EXIT_ATTACK_FAILED


def cmd_attack_lll(args) -> int:
    _, pk = load_key(args.key)
    ct = load_ciphertext(args.ciphertext)
    outcomes = attack_lll(pk, ct, ReductionParams(args.lovasz_delta))
    solved_all = all(o.solved for o in outcomes)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "lll_report.json")
    doc = {
        "all_solved": solved_all,
        "lovasz_delta": str(ReductionParams(args.lovasz_delta).lovasz_delta),
        "blocks": [
            {
                "block": i,
                "solved": o.solved,
                "basis": o.basis_kind,
                "bits": "".join(map(str, o.candidate)) if o.candidate else None,
                "elapsed_s": o.elapsed,
            }
            for i, o in enumerate(outcomes)
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for entry in doc["blocks"]:
        state = f"solved via {entry['basis']}" if entry["solved"] else "unsolved"
        print(f"block {entry['block']}: {state}")
    print(f"wrote {path}")
    return EXIT_OK if solved_all else EXIT_ATTACK_FAILED


def cmd_bench_table1(args) -> int:
    sections = _sections(args)
    cfg = _attack_from(args, sections)
    preset = FULL_PRESET if args.preset == "full" else DESK_PRESET
    spec = _spec_from(args, sections, preset)
    cfg.wall_clock_budget = spec.time_limit
    bench.run_table1_campaign(spec, cfg, args.out, sequential=_sequential(args),
                              workers=args.workers, fmt=args.format)
    print(f"wrote table1 outputs under {args.out}")
    return EXIT_OK


def cmd_bench_density(args) -> int:
    sections = _sections(args)
    cfg = _attack_from(args, sections)
    preset = {"key_lengths": [24, 32], "block_counts": [1], "trials_per_cell": 10,
              "time_limit": 300.0}
    spec = _spec_from(args, sections, preset)
    cfg.wall_clock_budget = spec.time_limit
    bench.run_density_campaign(spec, cfg, args.out, reduction_delta=args.lovasz_delta,
                               sequential=_sequential(args), workers=args.workers,
                               fmt=args.format)
    print(f"wrote density outputs under {args.out}")
    return EXIT_OK


def cmd_bench_compare(args) -> int:
    sections = _sections(args)
    cfg = _attack_from(args, sections)
    preset = {"key_lengths": [24, 32, 40], "block_counts": [1], "trials_per_cell": 40,
              "time_limit": 300.0}
    spec = _spec_from(args, sections, preset)
    cfg.wall_clock_budget = spec.time_limit
    _, pga_ratio, lll_ratio = bench.run_comparison(
        spec, cfg, args.out, total_instances=spec.trials_per_cell,
        reduction_delta=args.lovasz_delta, sequential=_sequential(args),
        workers=args.workers, fmt=args.format)
    print(f"pga success ratio {pga_ratio:.3f} vs lll {lll_ratio:.3f}")
    print(f"wrote comparison outputs under {args.out}")
    return EXIT_OK


def cmd_sensitivity_probe(args) -> int:
    rng = random.Random(args.seed)
    if args.key and args.message is not None:
        _, pk = load_key(args.key)
        ct = encrypt_message(pk, args.message.encode())
        bits = truth_bits_for(ct, args.message.encode())
        n = ct.n
        blocks = [bits[i : i + n] for i in range(0, len(bits), n)]
    else:
        n = args.n or 32
        k = args.blocks_count or 3
        inst = bench.gen_instance(n, k, rng, seed=args.seed)
        pk = inst.pk
        blocks = [inst.truth_bits[i : i + n] for i in range(0, len(inst.truth_bits), n)]
    report = sensitivity_probe(pk, blocks, rng, samples_per_block=args.samples)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="knapcrack",
                                  description="Merkle-Hellman cryptanalysis workbench")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key pair")
    _common_flags(p)
    p.add_argument("--n", type=int, required=True, help="key length in bits")
    p.add_argument("--growth", help="superincreasing growth range, e.g. 1,1024")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", help="encrypt a message under a public key")
    _common_flags(p)
    p.add_argument("--key", required=True)
    p.add_argument("--message")
    p.add_argument("--message-file", dest="message_file")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt with the private trapdoor")
    _common_flags(p)
    p.add_argument("--key", required=True)
    p.add_argument("--ciphertext", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("attack-pga", help="island-model genetic attack")
    _common_flags(p)
    _ga_flags(p)
    _attack_flags(p)
    p.add_argument("--key", required=True, help="key file; only the public half is read")
    p.add_argument("--ciphertext", required=True)
    p.add_argument("--truth", help="ground-truth plaintext file, for resemblance scoring")
    p.set_defaults(func=cmd_attack_pga)

    p = sub.add_parser("attack-lll", help="lattice-reduction attack")
    _common_flags(p)
    p.add_argument("--key", required=True)
    p.add_argument("--ciphertext", required=True)
    p.add_argument("--lovasz-delta", dest="lovasz_delta", default="3/4")
    p.set_defaults(func=cmd_attack_lll)

    p = sub.add_parser("bench-table1", help="generation/time statistics over an (n, k) grid")
    _common_flags(p)
    _ga_flags(p)
    _attack_flags(p)
    _bench_flags(p)
    p.add_argument("--preset", choices=["desk", "full"], default="desk")
    p.set_defaults(func=cmd_bench_table1)

    p = sub.add_parser("bench-density", help="paired success ratios per density bucket")
    _common_flags(p)
    _ga_flags(p)
    _attack_flags(p)
    _bench_flags(p)
    p.add_argument("--lovasz-delta", dest="lovasz_delta", default="3/4")
    p.set_defaults(func=cmd_bench_density)

    p = sub.add_parser("bench-compare", help="PGA vs LLL over mixed densities")
    _common_flags(p)
    _ga_flags(p)
    _attack_flags(p)
    _bench_flags(p)
    p.add_argument("--lovasz-delta", dest="lovasz_delta", default="3/4")
    p.set_defaults(func=cmd_bench_compare)

    p = sub.add_parser("sensitivity-probe", help="cross-block adaptability diagnostic")
    _common_flags(p)
    p.add_argument("--key")
    p.add_argument("--message")
    p.add_argument("--n", type=int)
    p.add_argument("--blocks", type=int, dest="blocks_count")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_sensitivity_probe)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
