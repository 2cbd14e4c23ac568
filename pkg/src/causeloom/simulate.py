"""Sampling from the smoothed reactive process, and synthetic ground truth.

simulate() draws one sequence by Ogata thinning.  The majorant at time t is
the softplus of a per-entity bound built from the per-basis future maxima of
every live past event (a kernel whose center is still ahead may rise back to
its peak, so the current intensity alone is not a valid bound for Gaussian
bases).  Candidates are proposed from the majorant, accepted with probability
total/majorant, and attributed proportionally to the per-entity intensities.

The generator below plants known structure (pairwise couplings and combined
causes) and emits a corpus together with the ground truth used to plant it,
so recovery can be scored without trusting the pipeline under test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import Corpus, Entity, Event, EventSequence
from .rpp import BasisKernels, RppParams, smoothed


def simulate(
    params: RppParams,
    kernels: BasisKernels,
    horizon: float,
    seed: int,
    smoothing: float = 1e-4,
    exogenous: dict[int, np.ndarray] | None = None,
    max_events: int = 200_000,
) -> EventSequence:
    """Draw one sequence on [0, horizon]; deterministic per seed.

    Entities listed in ``exogenous`` are not sampled: their given event times
    enter the history (and so drive the others) as the clock passes them.
    """
    params.validate()
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    U = params.num_entities
    rng = np.random.default_rng(seed)
    net = params.net()
    pos_net = np.clip(net, 0.0, None)  # only impelling mass can raise the bound

    exo: list[tuple[float, int]] = []
    if exogenous:
        for ent, times in exogenous.items():
            exo.extend((float(t), int(ent)) for t in np.asarray(times, dtype=float))
        exo.sort()
    exo_idx = 0
    sampled = [u for u in range(U) if not (exogenous and u in exogenous)]

    hist_times: list[float] = []
    hist_ents: list[int] = []
    window_start = 0  # events before this index are past the kernel cutoff
    out: list[Event] = []
    t = 0.0

    def _per_source(values: np.ndarray) -> np.ndarray:
        per_src = np.zeros((U, kernels.count))
        np.add.at(per_src, np.array(hist_ents[window_start:], dtype=np.int64), values)
        return per_src

    def raw_bounds(now: float) -> np.ndarray:
        nonlocal window_start
        while window_start < len(hist_times) and now - hist_times[window_start] > kernels.cutoff:
            window_start += 1
        if window_start == len(hist_times):
            return params.mu.copy()
        sups = kernels.future_max(now - np.array(hist_times[window_start:]))
        return params.mu + np.einsum("uvm,vm->u", pos_net, _per_source(sups))

    def raw_intensities(now: float) -> np.ndarray:
        if window_start == len(hist_times):
            return params.mu.copy()
        vals = kernels.evaluate(now - np.array(hist_times[window_start:]))
        return params.mu + np.einsum("uvm,vm->u", net, _per_source(vals))

    while t < horizon and len(out) < max_events:
        majorant = float(np.sum(smoothed(raw_bounds(t), smoothing)[sampled])) if sampled else 0.0
        next_exo = exo[exo_idx][0] if exo_idx < len(exo) else np.inf
        if majorant <= 0:
            t_cand = np.inf
        else:
            t_cand = t + rng.exponential(1.0 / majorant)
        if next_exo <= min(t_cand, horizon):
            # the bound only holds while history is frozen; absorb the
            # exogenous event and restart the clock there (memorylessness)
            exo_t, exo_u = exo[exo_idx]
            exo_idx += 1
            hist_times.append(exo_t)
            hist_ents.append(exo_u)
            out.append(Event(exo_u, exo_t))
            t = exo_t
            continue
        if t_cand >= horizon:
            break
        t = t_cand
        lam = smoothed(raw_intensities(t), smoothing)
        lam_sampled = lam[sampled]
        total = float(np.sum(lam_sampled))
        if rng.random() * majorant <= total:
            pick = rng.random() * total
            acc = np.cumsum(lam_sampled)
            u = sampled[int(np.searchsorted(acc, pick))]
            hist_times.append(t)
            hist_ents.append(u)
            out.append(Event(u, t))

    out.sort(key=lambda e: e.time)
    return EventSequence(id=f"sim-{seed}", events=out, horizon=float(horizon))


@dataclass
class PlantedEdge:
    cause: str
    effect: str
    weight: float  # signed; negative plants inhibition


@dataclass
class PlantedCombo:
    members: tuple[str, ...]
    effect: str
    weight: float = 0.8


@dataclass
class GeneratorConfig:
    entities: list[str] = field(default_factory=list)
    base_rate: float = 0.5
    effect_rate: float = 0.05
    edges: list[PlantedEdge] = field(default_factory=list)
    combos: list[PlantedCombo] = field(default_factory=list)
    window: float = 1.0
    horizon: float = 40.0
    sequences: int = 30
    seed: int = 0
    kernels: BasisKernels | None = None


def _joint_times(times_by_member: list[np.ndarray], window: float) -> np.ndarray:
    """Greedy left-to-right joint occurrences; one hit per completed window."""
    merged = sorted(
        (float(t), i) for i, times in enumerate(times_by_member) for t in times
    )
    pending: dict[int, float] = {}
    hits = []
    for t, member in merged:
        pending[member] = t
        if len(pending) == len(times_by_member) and t - min(pending.values()) <= window:
            hits.append(t)
            pending.clear()
    return np.array(hits)


def synthesize(config: GeneratorConfig) -> tuple[Corpus, dict]:
    """Build a corpus with planted pairwise edges and combined causes.

    Background entities run as a reactive process with the planted pairwise
    couplings.  Each combined cause drives its effect through an exogenous
    pseudo-entity whose events are the joint occurrences of the members, so
    only the joint pattern (never a member alone) carries the influence.
    Returns the corpus and a manifest holding the exact planted truth.
    """
    names = list(config.entities)
    for edge in config.edges:
        for n in (edge.cause, edge.effect):
            if n not in names:
                names.append(n)
    for combo in config.combos:
        for n in (*combo.members, combo.effect):
            if n not in names:
                names.append(n)
    if len(names) < 2:
        raise ValueError("generator needs at least two entities")

    idx = {n: i for i, n in enumerate(names)}
    combo_effects = {idx[c.effect] for c in config.combos}
    U = len(names)
    kernels = config.kernels or BasisKernels(
        centers=np.linspace(0.0, config.window * 2.0, 3),
        sigma=config.window * 2.0 / 3.0,
        cutoff=config.window * 2.0,
    )
    M = kernels.count

    base = RppParams.zeros(U, M)
    for i, n in enumerate(names):
        base.mu[i] = config.effect_rate if i in combo_effects else config.base_rate
    for edge in config.edges:
        u, v = idx[edge.cause], idx[edge.effect]
        share = abs(edge.weight) / M
        if edge.weight >= 0:
            base.a[v, u, :] = share
        else:
            base.b[v, u, :] = -share
    base.clamp()

    # pass 1 simulates everything but the combo effects; pass 2 adds each
    # effect driven by the joint-occurrence pseudo-entity
    background = [u for u in range(U) if u not in combo_effects]
    root = np.random.default_rng(config.seed)
    seeds = root.integers(0, 2**31 - 1, size=(config.sequences, 1 + len(config.combos)))

    sequences = []
    for c in range(config.sequences):
        bg_params = RppParams(
            mu=np.where(np.isin(np.arange(U), background), base.mu, 0.0),
            a=base.a.copy(),
            b=base.b.copy(),
        )
        bg_params.a[list(combo_effects), :, :] = 0.0
        bg_params.b[list(combo_effects), :, :] = 0.0
        seq = simulate(bg_params, kernels, config.horizon, int(seeds[c, 0]))
        events = list(seq.events)

        by_entity: dict[int, list[float]] = {}
        for ev in events:
            by_entity.setdefault(ev.entity, []).append(ev.time)

        for k, combo in enumerate(config.combos):
            member_times = [np.array(by_entity.get(idx[m], []), dtype=float) for m in combo.members]
            joints = _joint_times(member_times, config.window)
            drive = RppParams.zeros(2, M)
            drive.mu[1] = base.mu[idx[combo.effect]]
            drive.a[1, 0, :] = abs(combo.weight) / M
            drive.clamp()
            driven = simulate(
                drive,
                kernels,
                config.horizon,
                int(seeds[c, 1 + k]),
                exogenous={0: joints},
            )
            events.extend(Event(idx[combo.effect], ev.time) for ev in driven.events if ev.entity == 1)

        events.sort(key=lambda e: e.time)
        sequences.append(EventSequence(id=f"s{c}", events=events, horizon=config.horizon))

    corpus = Corpus([Entity(i, n) for i, n in enumerate(names)], sequences)
    corpus.validate()
    manifest = {
        "entities": names,
        "true_mu": base.mu.tolist(),
        "true_A": base.a.tolist(),
        "true_B": base.b.tolist(),
        "planted_combos": [
            {"causes": sorted(c.members), "effect": c.effect, "weight": c.weight, "window": config.window}
            for c in config.combos
        ],
        "seed": config.seed,
        "horizon": config.horizon,
        "sequences": config.sequences,
    }
    return corpus, manifest
