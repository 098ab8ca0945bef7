"""Island-model attack engine: one GA worker per ciphertext block, plus migration.

Every block shares the same public weights, so a chromosome's subset sum is
valid in every island; only the target value differs. That makes the
cross-block fitness needed by the migration condition an O(1) lookup.

Workers may run on threads or under a single-threaded round-robin scheduler.
The sequential scheduler is the reproducibility reference: equal seeds give
identical reports.
"""

from __future__ import annotations

import random
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .ga import (
    Chromosome,
    FitnessContext,
    GAParams,
    expand_population,
    init_population,
    select_next,
    subset_sum,
)
from .mh import Ciphertext, PublicKey, bytes_to_bits, pad_bits


@dataclass
class AttackConfig:
    ga: GAParams = field(default_factory=GAParams)
    migration_enabled: bool = True
    migration_period: int = 5          # generations between migration checkpoints
    wall_clock_budget: float = 300.0   # seconds
    generation_budget: int = 50_000    # per block
    inbox_capacity: int = 64           # bounded mailbox; overflow drops oldest
    restart_stagnation: int = 250      # reseed an island after this many stale generations; 0 disables

    def __post_init__(self):
        if self.migration_period < 1:
            raise ValueError("migration_period must be at least 1")
        if self.wall_clock_budget <= 0 or self.generation_budget <= 0:
            raise ValueError("budgets must be positive")
        if self.restart_stagnation < 0:
            raise ValueError("restart_stagnation must be non-negative")


@dataclass
class MigrationMessage:
    chromosome: Chromosome
    source_block: int
    dest_block: int
    source_generation: int

    def __post_init__(self):
        if self.source_block == self.dest_block:
            raise ValueError("a chromosome cannot migrate to its own block")


@dataclass
class PopulationSnapshot:
    """Point-in-time view of one island, published at generation boundaries."""

    block_index: int
    best_fitness: int
    generation: int


class MigrationBus:
    """Full-mesh mailboxes plus the latest published snapshot per island.

    Sends never block: a full inbox evicts its oldest message, and evictions
    are counted. Snapshot slots hold immutable objects, so readers may see a
    slightly stale view but never a torn one.
    """

    def __init__(self, k: int, inbox_capacity: int = 64):
        self.k = k
        self.inbox_capacity = inbox_capacity
        self._inboxes = [deque() for _ in range(k)]
        self._locks = [threading.Lock() for _ in range(k)]
        self._snapshots: list[PopulationSnapshot | None] = [None] * k
        self.dropped = [0] * k

    def publish(self, snap: PopulationSnapshot) -> None:
        self._snapshots[snap.block_index] = snap

    def snapshot(self, block: int) -> PopulationSnapshot | None:
        return self._snapshots[block]

    def send(self, msg: MigrationMessage) -> None:
        with self._locks[msg.dest_block]:
            box = self._inboxes[msg.dest_block]
            if len(box) >= self.inbox_capacity:
                box.popleft()
                self.dropped[msg.dest_block] += 1
            box.append(msg)

    def drain(self, block: int) -> list:
        with self._locks[block]:
            msgs = list(self._inboxes[block])
            self._inboxes[block].clear()
        return msgs


def block_fitness(target: int, ch: Chromosome) -> int:
    """Fitness of an evaluated chromosome under another block's target value."""
    return abs(target - ch.subset_sum)


def migration_candidates(members, source_block: int, peers) -> list:
    """Messages for every chromosome that beats an entire peer snapshot.

    `peers` holds (snapshot, target_value) pairs for the other islands. A
    chromosome emigrates to peer j only when its fitness under j's target is
    strictly below every member of j's snapshot, i.e. below the snapshot's
    best. One chromosome may emigrate to several peers as independent copies.
    """
    out = []
    for snap, target in peers:
        if snap is None:
            continue
        threshold = snap.best_fitness
        for ch in members:
            f = block_fitness(target, ch)
            if f < threshold:
                out.append(
                    MigrationMessage(
                        chromosome=Chromosome(ch.bits, ch.subset_sum, None),
                        source_block=source_block,
                        dest_block=snap.block_index,
                        source_generation=snap.generation,
                    )
                )
    return out


def integrate_migrants(members, messages, ctx: FitnessContext) -> int:
    """Replace the current worst member with each received migrant, in order.

    Migrants are re-evaluated under the recipient's context. The population
    size never changes; returns the number of integrated migrants.
    """
    for msg in messages:
        ch = msg.chromosome
        s = ch.subset_sum if ch.subset_sum is not None else subset_sum(ctx.weights, ch.bits)
        migrant = Chromosome(ch.bits, s, abs(ctx.target - s))
        worst = max(range(len(members)), key=lambda i: members[i].fitness)
        members[worst] = migrant
    return len(messages)


@dataclass
class BlockResult:
    block: int
    seed: int
    solved: bool
    bits: tuple
    best_fitness: int
    generations: int
    restarts: int
    elapsed: float


class BlockWorker:
    """One island GA bound to a single ciphertext block."""

    def __init__(self, block_index: int, ctx: FitnessContext, cfg: AttackConfig, seed: int,
                 peer_targets=()):
        self.block_index = block_index
        self.ctx = ctx
        self.cfg = cfg
        self.seed = seed
        self.rng = random.Random(seed)
        self.peer_targets = list(peer_targets)  # (block_index, target) for the other islands
        self.population = init_population(ctx, cfg.ga, self.rng)
        self.generation = 0
        self.best = min(self.population.members, key=lambda ch: ch.fitness)
        self.sent = 0
        self.accepted = 0
        self.restarts = 0
        self.elapsed = 0.0
        self.error: BaseException | None = None
        self._stale = 0

    @property
    def solved(self) -> bool:
        return self.best.fitness == 0

    def finished(self, deadline: float, stop: threading.Event) -> bool:
        return (
            self.solved
            or self.generation >= self.cfg.generation_budget
            or time.monotonic() >= deadline
            or stop.is_set()
        )

    def current_snapshot(self) -> PopulationSnapshot:
        return PopulationSnapshot(
            block_index=self.block_index,
            best_fitness=min(ch.fitness for ch in self.population.members),
            generation=self.generation,
        )

    def _track_best(self, members) -> None:
        cand = min(members, key=lambda ch: ch.fitness)
        if cand.fitness < self.best.fitness:
            self.best = cand
            self._stale = 0

    def step(self, bus: MigrationBus) -> None:
        """Run one generation, exchanging migrants before the selection step."""
        t0 = time.perf_counter()
        cfg = self.cfg
        if cfg.restart_stagnation and self._stale >= cfg.restart_stagnation:
            # the island has gone stale; reseed it and keep the budget running
            self.population = init_population(self.ctx, cfg.ga, self.rng)
            self.restarts += 1
            self._stale = 0
            self._track_best(self.population.members)
        self._stale += 1
        members = expand_population(self.population, self.ctx, cfg.ga, self.rng)
        self._track_best(members)

        if cfg.migration_enabled and bus.k > 1 and (self.generation + 1) % cfg.migration_period == 0:
            target_of = dict(self.peer_targets)
            peers = [(bus.snapshot(j), target) for j, target in self.peer_targets]
            snap_of = {snap.block_index: snap for snap, _ in peers if snap is not None}
            for msg in migration_candidates(members, self.block_index, peers):
                # dominance over the snapshot the decision was made against
                assert block_fitness(target_of[msg.dest_block], msg.chromosome) < snap_of[msg.dest_block].best_fitness
                bus.send(msg)
                self.sent += 1
            inbox = bus.drain(self.block_index)
            self.accepted += integrate_migrants(members, inbox, self.ctx)
            self._track_best(members)

        self.population = select_next(members, self.population.capacity, self.ctx, cfg.ga, self.rng)
        assert len(self.population.members) == self.population.capacity
        self.generation += 1
        self._track_best(self.population.members)
        bus.publish(self.current_snapshot())
        self.elapsed += time.perf_counter() - t0

    def run(self, bus: MigrationBus, deadline: float, stop: threading.Event) -> None:
        try:
            while not self.finished(deadline, stop):
                self.step(bus)
        except BaseException as exc:  # surfaced by the orchestrator at join
            self.error = exc

    def result(self) -> BlockResult:
        return BlockResult(
            block=self.block_index,
            seed=self.seed,
            solved=self.solved,
            bits=self.best.bits,
            best_fitness=self.best.fitness,
            generations=self.generation,
            restarts=self.restarts,
            elapsed=self.elapsed,
        )


@dataclass
class AttackReport:
    per_block: list
    resemblance: float | None
    total_elapsed: float
    migrations_sent: int
    migrations_accepted: int
    migrations_dropped: int
    master_seed: int
    sequential: bool
    params: dict

    @property
    def all_solved(self) -> bool:
        return all(r.solved for r in self.per_block)

    def plaintext_bits(self) -> list[int]:
        """Best candidate bits for every block, solved or not, concatenated."""
        bits: list[int] = []
        for r in self.per_block:
            bits.extend(r.bits)
        return bits

    def to_dict(self) -> dict:
        return {
            "all_solved": self.all_solved,
            "resemblance": self.resemblance,
            "total_elapsed_s": self.total_elapsed,
            "migrations": {
                "sent": self.migrations_sent,
                "accepted": self.migrations_accepted,
                "dropped": self.migrations_dropped,
            },
            "master_seed": self.master_seed,
            "sequential": self.sequential,
            "params": self.params,
            "blocks": [
                {
                    "block": r.block,
                    "seed": r.seed,
                    "solved": r.solved,
                    "bits": "".join(map(str, r.bits)),
                    "best_fitness": str(r.best_fitness),
                    "generations": r.generations,
                    "restarts": r.restarts,
                    "elapsed_s": r.elapsed,
                }
                for r in self.per_block
            ],
        }


def block_seed(master_seed: int, block_index: int) -> int:
    """Counter-based split so block 0's stream does not depend on k."""
    return master_seed * (2**32) + block_index


def config_echo(cfg: AttackConfig) -> dict:
    ga = cfg.ga
    return {
        "pop_size": ga.pop_size,
        "pc": ga.crossover_rate,
        "pm": ga.mutation_rate,
        "ps": ga.roulette_prob,
        "heuristic_iters": ga.heuristic_iters,
        "heuristic_fraction": str(ga.heuristic_fraction),
        "init_oversample": ga.init_oversample,
        "migration_enabled": cfg.migration_enabled,
        "migration_period": cfg.migration_period,
        "wall_clock_budget": cfg.wall_clock_budget,
        "generation_budget": cfg.generation_budget,
        "restart_stagnation": cfg.restart_stagnation,
    }


def resemblance_ratio(found, truth) -> float:
    """Fraction of bit positions where the candidate matches the ground truth."""
    if len(found) != len(truth):
        raise ValueError("bit strings must have equal length")
    if not found:
        raise ValueError("empty bit strings")
    return sum(1 for a, b in zip(found, truth) if a == b) / len(found)


def truth_bits_for(ct: Ciphertext, truth: bytes) -> list[int]:
    """Expand a ground-truth message to the padded k*n bit layout of the attack."""
    bits = bytes_to_bits(truth)[: ct.message_bits]
    bits = pad_bits(bits, ct.n) if bits else []
    want = ct.k * ct.n
    if len(bits) != want:
        raise ValueError(f"ground truth has {len(bits)} bits, ciphertext expects {want}")
    return bits


def run_attack(ct: Ciphertext, pk: PublicKey, cfg: AttackConfig, master_seed: int,
               truth: bytes | None = None, truth_bits=None, sequential: bool = True) -> AttackReport:
    """Attack every block concurrently and assemble the report.

    Ground truth, when supplied, is only used for resemblance scoring. With
    `sequential=True` the workers are stepped round-robin on one thread and
    the report is a deterministic function of (inputs, master_seed).
    """
    start = time.monotonic()
    echo = config_echo(cfg)
    k = ct.k
    if k == 0:
        return AttackReport([], None, 0.0, 0, 0, 0, master_seed, sequential, echo)

    targets = list(ct.c)
    workers = []
    for i in range(k):
        ctx = FitnessContext(pk, targets[i])
        peers = [(j, targets[j]) for j in range(k) if j != i]
        workers.append(BlockWorker(i, ctx, cfg, block_seed(master_seed, i), peers))

    bus = MigrationBus(k, cfg.inbox_capacity)
    for w in workers:
        bus.publish(w.current_snapshot())

    stop = threading.Event()
    deadline = start + cfg.wall_clock_budget
    if sequential or k == 1:
        pending = list(workers)
        while pending:
            for w in pending:
                if not w.finished(deadline, stop):
                    w.step(bus)
            pending = [w for w in pending if not w.finished(deadline, stop)]
    else:
        threads = [threading.Thread(target=w.run, args=(bus, deadline, stop)) for w in workers]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        stop.set()
        for w in workers:
            if w.error is not None:
                raise w.error

    results = [w.result() for w in workers]
    resem = None
    if truth is not None and truth_bits is None:
        truth_bits = truth_bits_for(ct, truth)
    if truth_bits is not None:
        found = []
        for r in results:
            found.extend(r.bits)
        resem = resemblance_ratio(found, truth_bits)

    return AttackReport(
        per_block=results,
        resemblance=resem,
        total_elapsed=time.monotonic() - start,
        migrations_sent=sum(w.sent for w in workers),
        migrations_accepted=sum(w.accepted for w in workers),
        migrations_dropped=sum(bus.dropped),
        master_seed=master_seed,
        sequential=sequential or k == 1,
        params=echo,
    )


def phi(ctx: FitnessContext, ch: Chromosome) -> float:
    """Target over subset sum: 1.0 at an exact solution, inf when the sum is zero.

    Collapses colossal block values onto a scale comparable across blocks.
    float(Fraction(...)) rounds correctly even for values beyond float range.
    """
    s = ch.subset_sum
    if s is None:
        s = subset_sum(ctx.weights, ch.bits)
    if s == 0:
        return float("inf")
    return float(Fraction(ctx.target, s))


@dataclass
class ProbeReport:
    blocks: int
    samples: int
    witnesses: int
    per_block: list

    @property
    def witness_rate(self) -> float:
        return self.witnesses / self.samples if self.samples else 0.0

    def to_dict(self) -> dict:
        return {
            "blocks": self.blocks,
            "samples": self.samples,
            "witnesses": self.witnesses,
            "witness_rate": self.witness_rate,
            "per_block": self.per_block,
        }


def sensitivity_probe(pk: PublicKey, blocks, rng: random.Random,
                      samples_per_block: int = 1000, flips=(1, 3)) -> ProbeReport:
    """Measure how often a lightly perturbed solution adapts better to another block.

    For each true block i, perturb it with `flips` random bit complements and
    count samples where some other block j judges the perturbed chromosome
    closer to its own optimum on the normalized scale, i.e.
    |phi_j(m) - 1| < |phi_i(m) - 1|. The comparison is done on the equivalent
    exact integers |c_j - S| < |c_i - S|, so float ties cannot blur it.
    Diagnostic only; attacks never consult this.
    """
    if len(blocks) < 2:
        raise ValueError("need at least two blocks with known plaintexts")
    n = len(pk.b)
    weights = list(pk.b)
    targets = []
    sums = []
    for bits in blocks:
        if len(bits) != n:
            raise ValueError("block length does not match key length")
        s = subset_sum(weights, bits)
        sums.append(s)
        targets.append(s)  # true block: ciphertext equals its subset sum

    witnesses = 0
    per_block = []
    total = 0
    for i, bits in enumerate(blocks):
        hits = 0
        others = [targets[j] for j in range(len(blocks)) if j != i]
        for _ in range(samples_per_block):
            total += 1
            nflips = rng.randint(flips[0], flips[1])
            s = sums[i]
            if nflips:
                for pos in rng.sample(range(n), nflips):
                    s += -weights[pos] if bits[pos] else weights[pos]
            if s == 0:
                continue
            own = abs(targets[i] - s)
            if any(abs(c - s) < own for c in others):
                hits += 1
        per_block.append(hits)
        witnesses += hits
    return ProbeReport(blocks=len(blocks), samples=total, witnesses=witnesses, per_block=per_block)
