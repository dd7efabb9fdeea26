"""Stuck-at fault campaigns over dual-rail netlists.

Every trial is a pure function of ``(master_seed, trial_index)``: its random
stream is splitmix64 seeded with ``seed ^ (index * 0x9E3779B97F4A7C15)``.
A trial draws, in order, the input vector (one 64-bit word per 64 inputs,
low bits first; skipped for exhaustive input sweeps), then the fault pattern,
then one polarity bit per fault site in mixed-polarity campaigns.  Bounded
draws are ``word % n``.

Trials are simulated many at a time on boolean numpy arrays and the counts
are merged at the end, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import __version__
from .dualrail import Outcome, classify
from .netlist import DualRailNetlist, input_bits, netlist_hash, simulate, simulate_batch

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
POLARITIES = ("sa0", "sa1", "mixed")
MODES = ("random", "burst")
INPUT_POLICIES = ("random", "exhaustive")
BATCH = 4096


class SplitMix64:
    def __init__(self, state: int):
        self.state = state & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


def trial_rng(master_seed: int, trial_index: int) -> SplitMix64:
    return SplitMix64((master_seed & MASK64) ^ ((trial_index * GOLDEN) & MASK64))


class VectorSplitMix64:
    """splitmix64 over an array of independent trial streams."""

    _G = np.uint64(GOLDEN)
    _M1 = np.uint64(0xBF58476D1CE4E5B9)
    _M2 = np.uint64(0x94D049BB133111EB)

    def __init__(self, master_seed: int, trial_indices: np.ndarray):
        idx = np.asarray(trial_indices, dtype=np.uint64)
        self.state = np.uint64(master_seed & MASK64) ^ (idx * self._G)

    def next(self) -> np.ndarray:
        self.state = self.state + self._G
        z = self.state
        z = (z ^ (z >> np.uint64(30))) * self._M1
        z = (z ^ (z >> np.uint64(27))) * self._M2
        return z ^ (z >> np.uint64(31))

    def below(self, n: int) -> np.ndarray:
        return (self.next() % np.uint64(n)).astype(np.int64)


class FaultPattern(NamedTuple):
    sites: tuple[int, ...]
    polarities: tuple[int, ...]

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.sites, self.polarities))


def sample_sites(rng: SplitMix64, site_count: int, k: int, mode: str) -> tuple[int, ...]:
    if not 1 <= k <= site_count:
        raise ValueError(f"fault size {k} outside 1..{site_count}")
    if mode == "burst":
        start = rng.below(site_count - k + 1)
        return tuple(range(start, start + k))
    if mode != "random":
        raise ValueError(f"unknown fault mode {mode!r}")
    # partial Fisher-Yates over 0..S-1 with a sparse swap table
    swapped: dict[int, int] = {}
    chosen = []
    for j in range(k):
        r = j + rng.below(site_count - j)
        chosen.append(swapped.get(r, r))
        swapped[r] = swapped.get(j, j)
    return tuple(chosen)


def sample_pattern(rng: SplitMix64, sites: Sequence | int, k: int, mode: str, polarity: str = "sa0") -> FaultPattern:
    site_count = sites if isinstance(sites, int) else len(sites)
    chosen = sample_sites(rng, site_count, k, mode)
    if polarity == "mixed":
        pols = tuple(rng.next() & 1 for _ in chosen)
    else:
        pols = (POLARITIES.index(polarity),) * k
    return FaultPattern(chosen, pols)


def _vector_sites(rng: VectorSplitMix64, site_count: int, k: int, mode: str) -> np.ndarray:
    """Vectorized twin of :func:`sample_sites`; returns an int array (B, k)."""
    B = rng.state.shape[0]
    if mode == "burst":
        start = rng.below(site_count - k + 1)
        return start[:, None] + np.arange(k)[None, :]
    chosen = np.empty((B, k), dtype=np.int64)
    pos = np.full((B, k), -1, dtype=np.int64)
    val = np.empty((B, k), dtype=np.int64)

    def lookup(p: np.ndarray, upto: int) -> np.ndarray:
        out = p.copy()
        for m in range(upto):  # later writes win
            hit = pos[:, m] == p
            out[hit] = val[hit, m]
        return out

    jcol = np.empty(B, dtype=np.int64)
    for j in range(k):
        r = j + rng.below(site_count - j)
        chosen[:, j] = lookup(r, j)
        jcol.fill(j)
        val[:, j] = lookup(jcol, j)
        pos[:, j] = r
    return chosen


def draw_trial(d: DualRailNetlist, cfg: "CampaignConfig", k: int, stratum_start: int, trial_index: int) -> tuple[int, FaultPattern]:
    """Scalar replay of the input vector and fault pattern of one campaign trial."""
    n_in = len(d.source.inputs)
    rng = trial_rng(cfg.seed, trial_index)
    if cfg.input_policy == "random":
        vec = sum(rng.next() << (64 * w) for w in range(max(1, math.ceil(n_in / 64))))
        vec &= (1 << n_in) - 1
    else:
        vec = (trial_index - stratum_start) % (1 << min(n_in, 63))
    return vec, sample_pattern(rng, d.site_count, k, cfg.mode, cfg.polarity)


def run_trial(d: DualRailNetlist, pattern: FaultPattern | Sequence[tuple[int, int]], inputs: Sequence[int] | int) -> Outcome:
    """Simulate one trial gate by gate and classify it."""
    if isinstance(inputs, int):
        inputs = [(inputs >> i) & 1 for i in range(len(d.source.inputs))]
    faults = pattern.pairs() if isinstance(pattern, FaultPattern) else list(pattern)
    good = simulate(d, inputs)
    bad = simulate(d, inputs, faults)
    return classify(good, bad)


# --------------------------------------------------------------------------
# reports


@dataclass
class Stratum:
    polarity: str
    mode: str
    fault_size: int
    trials: int = 0
    masked: int = 0
    detected: int = 0
    sdc: int = 0

    @property
    def fc(self) -> float:
        return (self.trials - self.sdc) / self.trials if self.trials else 1.0

    def add(self, masked: int, detected: int, sdc: int) -> None:
        self.masked += masked
        self.detected += detected
        self.sdc += sdc
        self.trials += masked + detected + sdc


@dataclass
class CoverageReport:
    strata: list[Stratum]
    metadata: dict = field(default_factory=dict)

    @property
    def total(self) -> Stratum:
        pols = {s.polarity for s in self.strata}
        modes = {s.mode for s in self.strata}
        agg = Stratum(pols.pop() if len(pols) == 1 else "both", modes.pop() if len(modes) == 1 else "mixed", 0)
        for s in self.strata:
            agg.add(s.masked, s.detected, s.sdc)
        return agg

    @property
    def fc(self) -> float:
        return self.total.fc

    @property
    def sdc(self) -> int:
        return self.total.sdc


def fault_coverage(total: int, undetected: int) -> float:
    if total <= 0:
        raise ValueError("fault coverage needs at least one fault")
    return (total - undetected) / total


# --------------------------------------------------------------------------
# campaigns


@dataclass(frozen=True)
class CampaignConfig:
    """``trials`` is the campaign total, split evenly over ``sizes``; the
    first ``trials % len(sizes)`` sizes receive one extra trial."""

    polarity: str = "sa0"
    mode: str = "random"
    sizes: tuple[int, ...] = tuple(range(1, 15))
    trials: int = 400_000
    seed: int = 1
    input_policy: str = "random"

    def validate(self, site_count: int | None = None) -> None:
        if self.polarity not in POLARITIES:
            raise ValueError(f"polarity must be one of {POLARITIES}, got {self.polarity!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.input_policy not in INPUT_POLICIES:
            raise ValueError(f"input policy must be one of {INPUT_POLICIES}, got {self.input_policy!r}")
        if not self.sizes:
            raise ValueError("at least one fault size is required")
        if self.trials < len(self.sizes):
            raise ValueError(f"need at least one trial per fault size ({len(self.sizes)}), got {self.trials}")
        if any(k < 1 for k in self.sizes):
            raise ValueError("fault sizes must be >= 1")
        if site_count is not None and max(self.sizes) > site_count:
            raise ValueError(f"fault size {max(self.sizes)} exceeds site count {site_count}")

    def allocation(self) -> list[tuple[int, int, int]]:
        """(fault size, first global trial index, trial count) per stratum."""
        base, extra = divmod(self.trials, len(self.sizes))
        out, start = [], 0
        for i, k in enumerate(self.sizes):
            n = base + (i < extra)
            out.append((k, start, n))
            start += n
        return out


class TrialRecord(NamedTuple):
    trial: int
    fault_size: int
    input: int
    sites: tuple[int, ...]
    polarities: tuple[int, ...]
    outcome: Outcome


def reference_outputs(d: DualRailNetlist) -> np.ndarray | None:
    """Fault-free hi rails for every input vector (2^n, n_out), or None above 20 inputs."""
    n = len(d.source.inputs)
    if n > 20:
        return None
    vectors = np.arange(1 << n, dtype=np.uint64)
    hi, _ = simulate_batch(d, input_bits(vectors, n))
    return np.ascontiguousarray(hi.T)


def _classify_batch(d, bits, vec_index, ref, sa0, sa1):
    hi, lo = simulate_batch(d, bits, sa0, sa1)
    if ref is not None:
        want = ref[vec_index].T
    else:
        want, _ = simulate_batch(d, bits)
    detected = (hi == lo).any(axis=0)
    wrong = (hi != want).any(axis=0)
    sdc = ~detected & wrong
    masked = ~detected & ~wrong
    return masked, detected, sdc


def _masks(site_count: int, sites: np.ndarray, pol: np.ndarray | None, polarity: str):
    B, k = sites.shape
    cols = np.repeat(np.arange(B), k)
    flat = sites.ravel()
    out = ({}, {})
    if polarity == "mixed":
        groups = [(0, pol.ravel() == 0), (1, pol.ravel() == 1)]
    else:
        groups = [(POLARITIES.index(polarity), slice(None))]
    for p, sel in groups:
        force = np.zeros((site_count, B), dtype=bool)
        force[flat[sel], cols[sel]] = True
        for s in np.flatnonzero(force.any(axis=1)):
            out[p][int(s)] = force[s]
    return out


def _run_chunk(d: DualRailNetlist, cfg: CampaignConfig, k: int, stratum_start: int, start: int, stop: int, ref, keep: bool):
    n_in = len(d.source.inputs)
    S = d.site_count
    idx = np.arange(start, stop, dtype=np.uint64)
    rng = VectorSplitMix64(cfg.seed, idx)
    words = max(1, math.ceil(n_in / 64))
    if cfg.input_policy == "random":
        vecs = np.stack([rng.next() for _ in range(words)], axis=1) if n_in else np.zeros((len(idx), 1), np.uint64)
        if n_in < 64:
            vecs[:, 0] &= np.uint64((1 << n_in) - 1)
    else:
        span = 1 << min(n_in, 63)
        vecs = ((idx - np.uint64(stratum_start)) % np.uint64(span))[:, None]
    sites = _vector_sites(rng, S, k, cfg.mode)
    pol = None
    if cfg.polarity == "mixed":
        pol = np.stack([(rng.next() & np.uint64(1)).astype(np.int64) for _ in range(k)], axis=1)
    sa0, sa1 = _masks(S, sites, pol, cfg.polarity)
    bits = input_bits(vecs, n_in)
    vec_index = vecs[:, 0].astype(np.int64) if ref is not None else None
    masked, detected, sdc = _classify_batch(d, bits, vec_index, ref, sa0, sa1)
    counts = (int(masked.sum()), int(detected.sum()), int(sdc.sum()))
    records = []
    if keep:
        outcome = np.where(sdc, 2, np.where(detected, 1, 0))
        classes = (Outcome.MASKED, Outcome.DETECTED, Outcome.SDC)
        fixed = POLARITIES.index(cfg.polarity) if cfg.polarity != "mixed" else None
        for i in range(len(idx)):
            vec = sum(int(w) << (64 * j) for j, w in enumerate(vecs[i]))
            pols = tuple(int(p) for p in pol[i]) if pol is not None else (fixed,) * k
            records.append(TrialRecord(start + i, k, vec, tuple(int(s) for s in sites[i]), pols, classes[outcome[i]]))
    return k, counts, records


def _run_chunk_star(args):
    return _run_chunk(*args)


def _execute(jobs: list, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_run_chunk_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk_star, jobs))


def run_campaign(
    d: DualRailNetlist,
    cfg: CampaignConfig,
    workers: int = 1,
    keep_trials: bool = False,
    chunk: int = BATCH,
) -> tuple[CoverageReport, list[TrialRecord]]:
    """Run a random/burst campaign; returns the report and (optionally) per-trial records."""
    cfg.validate(d.site_count)
    ref = reference_outputs(d)
    jobs = []
    for k, start, n in cfg.allocation():
        for lo in range(start, start + n, chunk):
            jobs.append((d, cfg, k, start, lo, min(lo + chunk, start + n), ref, keep_trials))
    strata = {k: Stratum(cfg.polarity, cfg.mode, k) for k in cfg.sizes}
    records: list[TrialRecord] = []
    for k, counts, recs in _execute(jobs, workers):
        strata[k].add(*counts)
        records.extend(recs)
    records.sort(key=lambda r: r.trial)
    meta = {
        "seed": cfg.seed,
        "polarity": cfg.polarity,
        "mode": cfg.mode,
        "input_policy": cfg.input_policy,
        "trials": cfg.trials,
        "fault_sizes": list(cfg.sizes),
        "netlist_hash": netlist_hash(d.source),
        "site_count": d.site_count,
        "tool_version": __version__,
    }
    return CoverageReport([strata[k] for k in cfg.sizes], meta), records


class Counterexample(NamedTuple):
    site: str
    polarity: int
    input: int


def exhaustive_single_fault(
    d: DualRailNetlist,
    input_budget: int | None = None,
    seed: int = 0,
) -> tuple[CoverageReport, list[Counterexample]]:
    """Every site x both polarities x every input vector (or ``input_budget`` seeded vectors)."""
    n_in = len(d.source.inputs)
    if n_in <= 20:
        vectors = np.arange(1 << n_in, dtype=np.uint64)
    else:
        if not input_budget:
            raise ValueError(f"{n_in} inputs is too many for an exhaustive sweep; pass input_budget")
        rng = VectorSplitMix64(seed, np.arange(input_budget, dtype=np.uint64))
        vectors = np.stack([rng.next() for _ in range(math.ceil(n_in / 64))], axis=1)
        if n_in % 64:
            vectors[:, -1] &= np.uint64((1 << (n_in % 64)) - 1)
    V = vectors.shape[0]
    ref = reference_outputs(d)
    base_bits = input_bits(vectors, n_in)
    group = max(1, BATCH // V)
    sites = d.fault_sites()
    strata = [Stratum("sa0", "exhaustive", 1), Stratum("sa1", "exhaustive", 1)]
    found: list[Counterexample] = []
    for pol in (0, 1):
        for g0 in range(0, len(sites), group):
            members = list(range(g0, min(g0 + group, len(sites))))
            B = len(members) * V
            bits = np.tile(base_bits, (1, len(members)))
            masks = {}
            for j, s in enumerate(members):
                m = np.zeros(B, dtype=bool)
                m[j * V : (j + 1) * V] = True
                masks[s] = m
            vec_index = np.tile(vectors.astype(np.int64), len(members)) if ref is not None else None
            sa0, sa1 = (masks, None) if pol == 0 else (None, masks)
            masked, detected, sdc = _classify_batch(d, bits, vec_index, ref, sa0, sa1)
            strata[pol].add(int(masked.sum()), int(detected.sum()), int(sdc.sum()))
            for col in np.flatnonzero(sdc):
                j, v = divmod(int(col), V)
                vec = vectors[v]
                vec = int(vec) if np.ndim(vec) == 0 else sum(int(w) << (64 * i) for i, w in enumerate(vec))
                found.append(Counterexample(sites[members[j]].id, pol, vec))
    meta = {
        "seed": seed,
        "polarity": "both",
        "mode": "exhaustive",
        "input_policy": "exhaustive" if n_in <= 20 else "random",
        "inputs_per_site": V,
        "netlist_hash": netlist_hash(d.source),
        "site_count": d.site_count,
        "tool_version": __version__,
    }
    return CoverageReport(strata, meta), found
