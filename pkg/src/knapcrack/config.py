"""Flat key=value configuration: [ga], [attack] and [bench] sections.

CLI flags override file values, which override the built-in defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from fractions import Fraction
from itertools import product

from .ga import GAParams
from .pga import AttackConfig


def _parse_bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in str(text).replace(" ", "").split(",") if part]


# config/flag key -> (GAParams field, parser)
GA_KEYS = {
    "pop_size": ("pop_size", int),
    "pc": ("crossover_rate", float),
    "pm": ("mutation_rate", float),
    "ps": ("roulette_prob", float),
    "heuristic_iters": ("heuristic_iters", int),
    "heuristic_fraction": ("heuristic_fraction", Fraction),
    "init_oversample": ("init_oversample", int),
    "max_generations": ("max_generations", int),
}

ATTACK_KEYS = {
    "migration_enabled": ("migration_enabled", _parse_bool),
    "migration_period": ("migration_period", int),
    "time_limit": ("wall_clock_budget", float),
    "generations": ("generation_budget", int),
    "inbox_capacity": ("inbox_capacity", int),
}

BENCH_KEYS = {
    "key_lengths": ("key_lengths", _parse_int_list),
    "block_counts": ("block_counts", _parse_int_list),
    "trials_per_cell": ("trials_per_cell", int),
    "time_limit": ("time_limit", float),
    "master_seed": ("master_seed", int),
}


def read_config(path) -> dict:
    """Sections of key=value pairs as plain string dicts."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return {section: dict(parser.items(section)) for section in parser.sections()}


def _merge(keymap: dict, section: dict, overrides: dict) -> dict:
    """Field overrides from a config section and already-typed CLI values."""
    fields = {}
    for key, (field_name, parse) in keymap.items():
        if key in section:
            fields[field_name] = parse(section[key])
    for key, value in overrides.items():
        if value is None:
            continue
        field_name, parse = keymap[key]
        fields[field_name] = parse(value) if isinstance(value, str) else value
    return fields


def build_ga_params(section: dict | None = None, **overrides) -> GAParams:
    return GAParams(**_merge(GA_KEYS, section or {}, overrides))


def build_attack_config(ga: GAParams, section: dict | None = None, **overrides) -> AttackConfig:
    return AttackConfig(ga=ga, **_merge(ATTACK_KEYS, section or {}, overrides))


def bench_fields(section: dict | None = None, **overrides) -> dict:
    return _merge(BENCH_KEYS, section or {}, overrides)


def grid_combos(parameter_grid: dict) -> list[dict]:
    """Cartesian product of a {ga_key: [values...]} sweep; [{}] when empty."""
    if not parameter_grid:
        return [{}]
    keys = sorted(parameter_grid)
    for key in keys:
        if key not in GA_KEYS:
            raise ValueError(f"unknown grid parameter {key!r}")
    return [dict(zip(keys, values)) for values in product(*(parameter_grid[k] for k in keys))]


def apply_ga_overrides(ga: GAParams, combo: dict) -> GAParams:
    fields = {}
    for key, value in combo.items():
        field_name, parse = GA_KEYS[key]
        fields[field_name] = parse(value) if isinstance(value, str) else value
    return replace(ga, **fields)


def combo_slug(combo: dict) -> str:
    if not combo:
        return "default"
    return ",".join(f"{k}={combo[k]}" for k in sorted(combo))
