"""Single-island genetic algorithm for one ciphertext block.

The block subproblem is: find bits x minimizing |c - sum(b_j * x_j)| for the
public weights b and block value c. Fitness is exact integer arithmetic; the
subset sum is cached on each chromosome so bit flips re-evaluate in O(1).
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate, compress

from .mh import PublicKey


@dataclass
class Chromosome:
    """Fixed-length candidate block with cached subset sum and fitness.

    The caches belong to the fitness context the chromosome was last evaluated
    under; code that moves a chromosome between blocks must rebuild them.
    local_opt records a proven one-flip local optimum, letting the improving
    heuristic skip members it cannot better.
    """

    bits: tuple
    subset_sum: int | None = None
    fitness: int | None = None
    local_opt: bool = False


@dataclass
class Population:
    members: list
    capacity: int


@dataclass
class GAParams:
    """Knobs for one island; defaults follow the recommended operating point."""

    pop_size: int = 100
    crossover_rate: float = 0.8       # probability a member enters the mating pool
    mutation_rate: float = 0.05       # per-chromosome single-bit flip probability
    roulette_prob: float = 0.3        # probability a generation selects by roulette wheel
    heuristic_iters: int = 300        # bit-flip attempts per improved chromosome
    heuristic_fraction: Fraction = Fraction(1, 3)   # share of the population improved
    init_oversample: int = 10         # random draws per retained initial member
    max_generations: int = 50_000

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.init_oversample < 1:
            raise ValueError("init_oversample must be at least 1")
        for name in ("crossover_rate", "mutation_rate", "roulette_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        self.heuristic_fraction = Fraction(self.heuristic_fraction)
        if not 0 <= self.heuristic_fraction <= 1:
            raise ValueError("heuristic_fraction must lie in [0, 1]")


@dataclass
class FitnessContext:
    """Public weights plus the target block value c."""

    public_key: PublicKey
    target: int
    weights: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.weights = tuple(self.public_key.b)


def subset_sum(weights, bits) -> int:
    return sum(compress(weights, bits))


def raw_fitness(ctx: FitnessContext, bits) -> int:
    """|target - subset sum| without touching any chromosome cache."""
    return abs(ctx.target - subset_sum(ctx.weights, bits))


def fitness(ctx: FitnessContext, ch: Chromosome) -> int:
    """Exact |c - sum(b_j x_j)|, cached on the chromosome."""
    if ch.fitness is not None:
        return ch.fitness
    if len(ch.bits) != len(ctx.weights):
        raise ValueError("chromosome length does not match key length")
    ch.subset_sum = subset_sum(ctx.weights, ch.bits)
    ch.fitness = abs(ctx.target - ch.subset_sum)
    return ch.fitness


def random_chromosome(n: int, rng: random.Random) -> Chromosome:
    word = rng.getrandbits(n)
    return Chromosome(tuple((word >> i) & 1 for i in range(n)))


def init_population(ctx: FitnessContext, params: GAParams, rng: random.Random) -> Population:
    """Oversample random bitstrings and retain the best-fitted pop_size of them."""
    n = len(ctx.weights)
    raw = [random_chromosome(n, rng) for _ in range(params.init_oversample * params.pop_size)]
    for ch in raw:
        fitness(ctx, ch)
    order = sorted(range(len(raw)), key=lambda i: raw[i].fitness)[: params.pop_size]
    order.sort()
    return Population(members=[raw[i] for i in order], capacity=params.pop_size)


def crossover_one_point(p1: Chromosome, p2: Chromosome, cut: int) -> tuple[Chromosome, Chromosome]:
    """Swap the suffixes after position `cut` (1-based; valid cuts are 2..n-1)."""
    n = len(p1.bits)
    if len(p2.bits) != n:
        raise ValueError("parents must have equal length")
    if not 2 <= cut <= n - 1:
        raise ValueError(f"cut {cut} outside 2..{n - 1}")
    c1 = Chromosome(p1.bits[:cut] + p2.bits[cut:])
    c2 = Chromosome(p2.bits[:cut] + p1.bits[cut:])
    return c1, c2


def crossover_two_point(p1: Chromosome, p2: Chromosome, cut1: int, cut2: int) -> tuple[Chromosome, Chromosome]:
    """Swap the middle segment, genes cut1+1 .. cut2 (1-based cut boundaries)."""
    n = len(p1.bits)
    if len(p2.bits) != n:
        raise ValueError("parents must have equal length")
    if not 1 <= cut1 < cut2 <= n:
        raise ValueError(f"cuts ({cut1}, {cut2}) violate 1 <= cut1 < cut2 <= {n}")
    c1 = Chromosome(p1.bits[:cut1] + p2.bits[cut1:cut2] + p1.bits[cut2:])
    c2 = Chromosome(p2.bits[:cut1] + p1.bits[cut1:cut2] + p2.bits[cut2:])
    return c1, c2


def crossover_uniform(p1: Chromosome, p2: Chromosome, rng: random.Random, mask=None) -> Chromosome:
    """One child; each gene comes from p1 or p2 with equal probability.

    A fixed boolean mask (True selects p1) may be supplied instead of the rng
    draw, which keeps the operator testable.
    """
    n = len(p1.bits)
    if len(p2.bits) != n:
        raise ValueError("parents must have equal length")
    if mask is None:
        word = rng.getrandbits(n)
        mask = [(word >> i) & 1 for i in range(n)]
    return Chromosome(tuple(a if take else b for a, b, take in zip(p1.bits, p2.bits, mask)))


def flip_gene(ch: Chromosome, pos: int) -> Chromosome:
    """Complement the single gene at `pos` (0-based); caches are invalidated."""
    bits = list(ch.bits)
    bits[pos] ^= 1
    return Chromosome(tuple(bits))


def mutate(ch: Chromosome, params: GAParams, rng: random.Random) -> Chromosome:
    """With probability mutation_rate, flip one uniformly chosen gene."""
    if rng.random() >= params.mutation_rate:
        return ch
    return flip_gene(ch, rng.randrange(len(ch.bits)))


def improve(ctx: FitnessContext, ch: Chromosome, iters: int, rng: random.Random) -> Chromosome:
    """Randomized first-improvement hill climbing, at most `iters` flip attempts.

    Positions are visited in fresh random permutations; a flip is kept only
    when it strictly lowers the fitness, so the result is never worse than the
    input. A full clean sweep proves a one-flip local optimum, which ends the
    search early and marks the chromosome so later calls can skip it.
    """
    if iters <= 0 or ch.local_opt:
        return ch
    f = fitness(ctx, ch)
    if f == 0:
        ch.local_opt = True
        return ch
    weights = ctx.weights
    target = ctx.target
    n = len(weights)
    bits = list(ch.bits)
    # delta[j] is the subset-sum change a flip at j would cause right now
    delta = [-w if x else w for w, x in zip(weights, bits)]
    s = ch.subset_sum
    order = list(range(n))
    rng.shuffle(order)
    remaining = iters
    proven = False
    sweep = 0
    while remaining > 0 and not proven:
        # one shuffle per call; later sweeps walk the same permutation from a
        # rotated start, which is cheaper than reshuffling and just as blind
        offset = sweep % n
        sweep += 1
        kept = False
        full_sweep = True
        for idx in range(n):
            if remaining == 0:
                full_sweep = False
                break
            remaining -= 1
            j = order[idx - offset]
            s2 = s + delta[j]
            f2 = target - s2
            if f2 < 0:
                f2 = -f2
            if f2 < f:
                s, f = s2, f2
                bits[j] ^= 1
                delta[j] = -delta[j]
                kept = True
                if f == 0:
                    proven = True
                    break
        # only a complete sweep with no kept flip certifies a local optimum
        if full_sweep and not kept:
            proven = True
    if f == ch.fitness:
        ch.local_opt = ch.local_opt or proven
        return ch
    return Chromosome(tuple(bits), subset_sum=s, fitness=f, local_opt=proven)


def selection_probabilities(fitness_values) -> list[float]:
    """Minimization-to-probability transform: p_i = (f_max - f_i + 1) / total.

    Lower fitness means higher probability. The weights are exact integers of
    arbitrary size; int/int true division rounds each ratio correctly, so the
    result matches float(Fraction(g_i, total)) bit for bit.
    """
    fmax = max(fitness_values)
    g = [fmax - f + 1 for f in fitness_values]
    total = sum(g)
    return [gi / total for gi in g]


def roulette_select(pop: Population, probs, count: int, rng: random.Random) -> list:
    """`count` independent spins over the cumulative probability intervals."""
    cum = list(accumulate(probs))
    last = len(pop.members) - 1
    return [pop.members[min(bisect_right(cum, rng.random()), last)] for _ in range(count)]


def sus_select(pop: Population, probs, count: int, rng: random.Random) -> list:
    """Stochastic universal selection: one offset, `count` equally spaced pointers."""
    cum = list(accumulate(probs))
    last = len(pop.members) - 1
    offset = rng.random() / count
    chosen = []
    idx = 0
    for i in range(count):
        point = offset + i / count
        while idx < last and cum[idx] <= point:
            idx += 1
        chosen.append(pop.members[idx])
    return chosen


def elitist_select(pop: Population, capacity: int) -> Population:
    """Keep the `capacity` lowest-fitness members, preserving input order on ties."""
    if len(pop.members) < capacity:
        raise ValueError("population smaller than requested capacity")
    order = sorted(range(len(pop.members)), key=lambda i: pop.members[i].fitness)[:capacity]
    order.sort()
    return Population(members=[pop.members[i] for i in order], capacity=capacity)


def expand_population(pop: Population, ctx: FitnessContext, params: GAParams, rng: random.Random) -> list:
    """Mating, crossover, mutation and local improvement; returns the enlarged member list.

    Every mated pair produces five offspring: two from the one-point operator,
    two from the two-point operator, one from the uniform operator. The
    improving heuristic then rewrites a random fraction of the enlarged
    population in place, keeping only strict improvements.
    """
    members = list(pop.members)
    n = len(ctx.weights)

    pool = [ch for ch in members if rng.random() < params.crossover_rate]
    rng.shuffle(pool)
    if len(pool) % 2:
        pool.pop()
    children = []
    for i in range(0, len(pool), 2):
        p1, p2 = pool[i], pool[i + 1]
        if n >= 3:
            children.extend(crossover_one_point(p1, p2, rng.randint(2, n - 1)))
        if n >= 2:
            cut1 = rng.randint(1, n - 1)
            children.extend(crossover_two_point(p1, p2, cut1, rng.randint(cut1 + 1, n)))
        children.append(crossover_uniform(p1, p2, rng))
    members.extend(children)

    # mutants join the pool next to their originals, so a lucky flip competes
    # without erasing an archived candidate
    mutants = []
    for ch in members:
        mutant = mutate(ch, params, rng)
        if mutant is not ch:
            mutants.append(mutant)
    members.extend(mutants)
    for ch in members:
        fitness(ctx, ch)

    count = int(len(members) * params.heuristic_fraction)
    for idx in rng.sample(range(len(members)), count):
        members[idx] = improve(ctx, members[idx], params.heuristic_iters, rng)
    return members


def dedup_members(members, capacity: int, ctx: FitnessContext, rng: random.Random) -> list:
    """Collapse duplicate bitstrings (stable first occurrence) before selection.

    Selecting over literal copies collapses the population onto clones of the
    incumbent best within a few generations, after which crossover is inert;
    deduplication keeps selection acting on an archive of distinct candidates.
    Random evaluated immigrants top the pool back up to capacity when fewer
    distinct candidates remain.
    """
    seen = set()
    uniq = []
    for ch in members:
        if ch.bits not in seen:
            seen.add(ch.bits)
            uniq.append(ch)
    n = len(ctx.weights)
    attempts = 0
    while len(uniq) < capacity and attempts < 20 * capacity:
        attempts += 1
        ch = random_chromosome(n, rng)
        if ch.bits not in seen:
            seen.add(ch.bits)
            fitness(ctx, ch)
            uniq.append(ch)
    while len(uniq) < capacity:  # degenerate n where 2^n < capacity
        uniq.append(members[len(uniq) % len(members)])
    return uniq


def select_next(members, capacity: int, ctx: FitnessContext, params: GAParams,
                rng: random.Random) -> Population:
    """Restore capacity with the operator drawn by roulette_prob.

    A draw below roulette_prob picks the roulette wheel; otherwise the elitist
    operator keeps the best members, which is the dominant case at the
    recommended setting. Duplicates are collapsed first so the survivors stay
    a genuine archive of distinct candidates.
    """
    uniq = dedup_members(members, capacity, ctx, rng)
    pool = Population(members=uniq, capacity=capacity)
    if rng.random() < params.roulette_prob:
        probs = selection_probabilities([ch.fitness for ch in uniq])
        return Population(members=roulette_select(pool, probs, capacity, rng), capacity=capacity)
    return elitist_select(pool, capacity)


def ga_generation(pop: Population, ctx: FitnessContext, params: GAParams, rng: random.Random) -> Population:
    """One full generation: expand, then select back down to capacity."""
    members = expand_population(pop, ctx, params, rng)
    return select_next(members, pop.capacity, ctx, params, rng)
