"""Reactive point process core: intensity, likelihood, fitting, causal strengths.

The conditional intensity of entity u is

    lam_u(t) = mu_u + sum over past events (v, t') of
               sum_m (a[u,v,m] + b[u,v,m]) * kappa_m(t - t')

with Gaussian basis kernels kappa_m truncated at a support cutoff.  Impelling
coefficients a live in [0, 1], inhibiting coefficients b in [-1, 0], so the
net per-basis coefficient a + b carries the sign of the influence.  Negative
sums are made usable by softplus smoothing with scale s:

    smoothed(x) = s * ln(1 + exp(x / s))

which is positive everywhere and within s*ln(2) of max(0, x).

The log likelihood of a corpus sums, per sequence, the log smoothed intensity
at each event minus the integral of the smoothed intensity over the horizon;
the integral is Monte Carlo estimated on N uniform points per sequence, drawn
once per optimizer run from the config seed (common random numbers, so every
evaluation inside a fit sees the same objective surface).

Fitting is projected gradient descent with backtracking line search; after
every step mu is clamped to be nonnegative and a, b to their boxes.  The
kernel responses at event and sample points do not depend on the parameters,
so they are computed once per fit and reused by every objective and gradient
evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import Corpus


@dataclass(frozen=True)
class BasisKernels:
    """Shared Gaussian basis bank.

    Attributes:
        centers: strictly increasing kernel centers, the first at 0.
        sigma: common kernel width.
        cutoff: support bound; responses beyond it are treated as zero.
    """

    centers: np.ndarray
    sigma: float
    cutoff: float

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        object.__setattr__(self, "centers", c)
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("centers must be a nonempty vector")
        if np.any(np.diff(c) <= 0):
            raise ValueError("centers must be strictly increasing")
        if self.sigma <= 0 or self.cutoff <= 0:
            raise ValueError("sigma and cutoff must be positive")

    @property
    def count(self) -> int:
        return len(self.centers)

    def evaluate(self, dt) -> np.ndarray:
        """Responses for lags dt; shape (len(dt), M).  Zero outside (0, cutoff]."""
        dt = np.atleast_1d(np.asarray(dt, dtype=float))
        vals = np.exp(-((dt[:, None] - self.centers[None, :]) ** 2) / (2.0 * self.sigma**2))
        live = (dt > 0) & (dt <= self.cutoff)
        vals[~live] = 0.0
        return vals

    def future_max(self, age) -> np.ndarray:
        """Per-basis supremum of the response over all lags >= age.

        A kernel whose center is still ahead can rise back to 1; one already
        past its center only decays.  Used for thinning majorants.
        """
        age = np.atleast_1d(np.asarray(age, dtype=float))
        expired = age > self.cutoff
        sup = np.where(
            age[:, None] <= self.centers[None, :],
            1.0,
            np.exp(-((age[:, None] - self.centers[None, :]) ** 2) / (2.0 * self.sigma**2)),
        )
        sup[expired] = 0.0
        return sup

    @classmethod
    def default_for(cls, corpus: Corpus, count: int = 3, span_multiplier: float = 10.0) -> "BasisKernels":
        """Kernel bank spanning ten times the corpus median inter-event gap."""
        gaps = []
        for seq in corpus.sequences:
            times = seq.times()
            if len(times) > 1:
                d = np.diff(times)
                gaps.extend(d[d > 0])
        span = span_multiplier * float(np.median(gaps)) if gaps else corpus.max_horizon()
        if span <= 0:
            span = 1.0
        centers = np.linspace(0.0, span, count)
        sigma = span / count
        return cls(centers=centers, sigma=sigma, cutoff=span)

    def to_json(self) -> dict:
        return {"centers": [float(c) for c in self.centers], "sigma": self.sigma, "cutoff": self.cutoff}

    @classmethod
    def from_json(cls, blob: dict) -> "BasisKernels":
        return cls(np.array(blob["centers"], dtype=float), float(blob["sigma"]), float(blob["cutoff"]))


@dataclass
class RppParams:
    """Model parameters: base rates and signed coupling tensors.

    a[u, v, m] scales how past events of v impel entity u through basis m;
    b[u, v, m] (nonpositive) is the inhibiting counterpart.
    """

    mu: np.ndarray  # (U,)
    a: np.ndarray  # (U, U, M) in [0, 1]
    b: np.ndarray  # (U, U, M) in [-1, 0]

    @classmethod
    def zeros(cls, num_entities: int, num_kernels: int) -> "RppParams":
        return cls(
            mu=np.zeros(num_entities),
            a=np.zeros((num_entities, num_entities, num_kernels)),
            b=np.zeros((num_entities, num_entities, num_kernels)),
        )

    @property
    def num_entities(self) -> int:
        return len(self.mu)

    @property
    def num_kernels(self) -> int:
        return self.a.shape[2]

    def net(self) -> np.ndarray:
        return self.a + self.b

    def copy(self) -> "RppParams":
        return RppParams(self.mu.copy(), self.a.copy(), self.b.copy())

    def clamp(self) -> "RppParams":
        np.clip(self.mu, 0.0, None, out=self.mu)
        np.clip(self.a, 0.0, 1.0, out=self.a)
        np.clip(self.b, -1.0, 0.0, out=self.b)
        return self

    def validate(self) -> None:
        U, M = self.num_entities, self.num_kernels
        if self.mu.shape != (U,) or self.a.shape != (U, U, M) or self.b.shape != (U, U, M):
            raise ValueError("parameter shapes disagree")
        if np.any(self.mu < 0) or np.any(self.a < 0) or np.any(self.a > 1):
            raise ValueError("parameters out of bounds")
        if np.any(self.b > 0) or np.any(self.b < -1):
            raise ValueError("parameters out of bounds")

    def to_json(self, kernels: BasisKernels) -> dict:
        return {
            "U": self.num_entities,
            "M": self.num_kernels,
            "mu": self.mu.tolist(),
            "A": self.a.tolist(),
            "B": self.b.tolist(),
            "kernels": kernels.to_json(),
        }

    @classmethod
    def from_json(cls, blob: dict) -> tuple["RppParams", BasisKernels]:
        params = cls(
            mu=np.array(blob["mu"], dtype=float),
            a=np.array(blob["A"], dtype=float),
            b=np.array(blob["B"], dtype=float),
        )
        params.validate()
        if params.num_entities != blob["U"] or params.num_kernels != blob["M"]:
            raise ValueError("declared U/M disagree with tensors")
        return params, BasisKernels.from_json(blob["kernels"])


@dataclass
class FitConfig:
    """Optimizer and objective settings.

    smoothing is the softplus scale; ridge and lasso weigh the squared and
    absolute penalties on both coupling tensors.  mc_samples is the number of
    integration points per sequence.  sign_tolerance is the dead zone used
    when net per-basis coefficients are voted into a signed strength.
    """

    smoothing: float = 0.01
    ridge: float = 0.1
    lasso: float = 0.01
    mc_samples: int = 1000
    max_iterations: int = 200
    initial_step: float = 0.1
    backtrack: float = 0.5
    max_backtracks: int = 40
    tolerance: float = 1e-6
    seed: int = 0
    sign_tolerance: float = 1e-6

    def validate(self) -> None:
        if self.smoothing <= 0:
            raise ValueError("smoothing must be positive")
        if self.ridge < 0 or self.lasso < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.mc_samples < 1 or self.max_iterations < 0:
            raise ValueError("invalid optimizer budget")
        if not 0 < self.backtrack < 1 or self.initial_step <= 0:
            raise ValueError("invalid line search settings")
        if self.sign_tolerance < 0:
            raise ValueError("sign_tolerance must be nonnegative")


def smoothed(x, scale: float):
    """Softplus with scale: scale * ln(1 + exp(x / scale)), overflow safe."""
    x = np.asarray(x, dtype=float)
    return scale * np.logaddexp(0.0, x / scale)


def log_smoothed(x, scale: float):
    """ln(smoothed(x, scale)), finite for all finite x.

    For x/scale far below zero the softplus underflows to 0 in float64 but its
    log is simply x/scale; the analytic branch keeps the likelihood finite.
    """
    z = np.asarray(x, dtype=float) / scale
    deep = z < -33.0
    safe = np.where(deep, 1.0, np.logaddexp(0.0, z))
    return np.log(scale) + np.where(deep, z, np.log(safe))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def intensity(params: RppParams, kernels: BasisKernels, history, u: int, t: float) -> float:
    """Raw (unsmoothed) intensity of entity u at time t given past events.

    history is an iterable of (entity, time) pairs or Event objects; events at
    exactly t are excluded, events older than the kernel cutoff contribute
    nothing.
    """
    if not 0 <= u < params.num_entities:
        raise ValueError(f"unknown entity id {u}")
    total = float(params.mu[u])
    net = params.net()
    for ev in history:
        v, te = (ev.entity, ev.time) if hasattr(ev, "entity") else (ev[0], ev[1])
        dt = t - te
        if dt <= 0 or dt > kernels.cutoff:
            continue
        total += float(net[u, v] @ kernels.evaluate(dt)[0])
    return total


def integration_points(corpus: Corpus, config: FitConfig) -> list[np.ndarray]:
    """Uniform MC points per sequence, fixed by the config seed."""
    rng = np.random.default_rng(config.seed)
    return [np.sort(rng.uniform(0.0, seq.horizon, config.mc_samples)) for seq in corpus.sequences]


def _responses_at(times: np.ndarray, ents: np.ndarray, queries: np.ndarray, U: int, kernels: BasisKernels) -> np.ndarray:
    """K[p, v, m] = summed basis responses at query point p to past events of v.

    times must be sorted ascending; only events with 0 < t_p - t_e <= cutoff
    contribute.  This is the one O(points x window) pass per fit.
    """
    P, M = len(queries), kernels.count
    K = np.zeros((P, U, M))
    if len(times) == 0 or P == 0:
        return K
    lo = np.searchsorted(times, queries - kernels.cutoff, side="left")
    hi = np.searchsorted(times, queries, side="left")  # strictly earlier events only
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return K
    qidx = np.repeat(np.arange(P), counts)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    eidx = np.arange(total) - np.repeat(starts, counts) + np.repeat(lo, counts)
    dt = queries[qidx] - times[eidx]
    vals = np.exp(-((dt[:, None] - kernels.centers[None, :]) ** 2) / (2.0 * kernels.sigma**2))
    flat = qidx * U + ents[eidx]
    out = K.reshape(P * U, M)
    for m in range(M):
        out[:, m] = np.bincount(flat, weights=vals[:, m], minlength=P * U)
    return K


@dataclass
class _SequenceFeatures:
    event_ids: np.ndarray  # (n,)
    at_events: np.ndarray  # (n, U, M)
    at_samples: np.ndarray  # (N, U, M)
    horizon: float


@dataclass
class FeatureCache:
    """Per-sequence kernel responses; parameter independent, built once per fit."""

    sequences: list[_SequenceFeatures]
    num_entities: int
    num_events: int


def feature_cache(corpus: Corpus, kernels: BasisKernels, config: FitConfig, points: list[np.ndarray] | None = None) -> FeatureCache:
    points = points if points is not None else integration_points(corpus, config)
    U = corpus.num_entities
    feats = []
    total = 0
    for seq, pts in zip(corpus.sequences, points):
        times, ents = seq.times(), seq.entities()
        feats.append(
            _SequenceFeatures(
                event_ids=ents,
                at_events=_responses_at(times, ents, times, U, kernels),
                at_samples=_responses_at(times, ents, pts, U, kernels),
                horizon=seq.horizon,
            )
        )
        total += len(ents)
    return FeatureCache(feats, U, total)


def log_likelihood(params: RppParams, corpus: Corpus, kernels: BasisKernels, config: FitConfig, cache: FeatureCache | None = None) -> float:
    """Smoothed log likelihood of the corpus under the parameters.

    Deterministic for a fixed config seed: the MC integration points are a
    pure function of the seed and the horizons.
    """
    cache = cache or feature_cache(corpus, kernels, config)
    s = config.smoothing
    net = params.net()
    total = 0.0
    for f in cache.sequences:
        if len(f.event_ids) > 0:
            own = net[f.event_ids]  # (n, U, M)
            lam_ev = params.mu[f.event_ids] + np.einsum("nvm,nvm->n", own, f.at_events)
            total += float(np.sum(log_smoothed(lam_ev, s)))
        lam_mc = params.mu[None, :] + np.einsum("uvm,pvm->pu", net, f.at_samples)
        total -= float(f.horizon / lam_mc.shape[0] * np.sum(smoothed(lam_mc, s)))
    return total


def objective(params: RppParams, corpus: Corpus, kernels: BasisKernels, config: FitConfig, cache: FeatureCache | None = None) -> float:
    """Penalized negative log likelihood (the quantity the optimizer descends)."""
    cache = cache or feature_cache(corpus, kernels, config)
    penalty = config.ridge * (np.sum(params.a**2) + np.sum(params.b**2))
    penalty += config.lasso * (np.sum(np.abs(params.a)) + np.sum(np.abs(params.b)))
    return -log_likelihood(params, corpus, kernels, config, cache) + float(penalty)


def gradient(params: RppParams, corpus: Corpus, kernels: BasisKernels, config: FitConfig, cache: FeatureCache | None = None) -> RppParams:
    """Analytic objective gradient, packed in an RppParams shell.

    The absolute-penalty subgradient at exactly zero is taken as zero, so
    coefficients that are already sparse feel no pull from the penalty.
    """
    cache = cache or feature_cache(corpus, kernels, config)
    s = config.smoothing
    U = params.num_entities
    net = params.net()
    g_mu = np.zeros(U)
    g_net = np.zeros_like(net)
    for f in cache.sequences:
        if len(f.event_ids) > 0:
            own = net[f.event_ids]
            raw_ev = params.mu[f.event_ids] + np.einsum("nvm,nvm->n", own, f.at_events)
            # d log smoothed / d raw; tends to 1/s where the softplus underflows
            z = raw_ev / s
            deep = z < -33.0
            denom = np.where(deep, 1.0, smoothed(raw_ev, s))
            coef = np.where(deep, 1.0 / s, _sigmoid(z) / denom)
            g_mu += np.bincount(f.event_ids, weights=coef, minlength=U)
            np.add.at(g_net, f.event_ids, coef[:, None, None] * f.at_events)
        raw_mc = params.mu[None, :] + np.einsum("uvm,pvm->pu", net, f.at_samples)
        w = _sigmoid(raw_mc / s) * (f.horizon / raw_mc.shape[0])
        g_mu -= w.sum(axis=0)
        g_net -= np.einsum("pu,pvm->uvm", w, f.at_samples)
    # descend the negated likelihood, then add the penalty pulls
    g_a = -g_net + 2.0 * config.ridge * params.a + config.lasso * np.sign(params.a)
    g_b = -g_net + 2.0 * config.ridge * params.b + config.lasso * np.sign(params.b)
    return RppParams(mu=-g_mu, a=g_a, b=g_b)


@dataclass
class FitResult:
    params: RppParams
    objectives: list[float] = field(default_factory=list)
    converged: bool = False


def _initial_params(corpus: Corpus, kernels: BasisKernels, mu_start: np.ndarray | None) -> RppParams:
    U = corpus.num_entities
    params = RppParams.zeros(U, kernels.count)
    if mu_start is not None:
        params.mu = np.asarray(mu_start, dtype=float).copy()
    else:
        total_time = sum(s.horizon for s in corpus.sequences)
        params.mu = corpus.entity_counts() / max(total_time, 1e-12)
    return params.clamp()


def fit_detailed(corpus: Corpus, kernels: BasisKernels, config: FitConfig | None = None, mu_start: np.ndarray | None = None) -> FitResult:
    """Projected gradient descent with backtracking; objective never increases.

    Returns the best-seen parameters.  Stops at the iteration budget, when no
    backtracked step improves the objective, or when the improvement falls
    below the tolerance.
    """
    config = config or FitConfig()
    config.validate()
    if corpus.total_events() == 0:
        raise ValueError("nothing to fit")
    cache = feature_cache(corpus, kernels, config)
    params = _initial_params(corpus, kernels, mu_start)
    current = objective(params, corpus, kernels, config, cache)
    trace = [current]
    step = config.initial_step
    converged = False
    for _ in range(config.max_iterations):
        grad = gradient(params, corpus, kernels, config, cache)
        accepted = False
        trial = step
        for _ in range(config.max_backtracks):
            candidate = RppParams(
                mu=params.mu - trial * grad.mu,
                a=params.a - trial * grad.a,
                b=params.b - trial * grad.b,
            ).clamp()
            value = objective(candidate, corpus, kernels, config, cache)
            if value < current:
                accepted = True
                break
            trial *= config.backtrack
        if not accepted:
            converged = True
            break
        improvement = current - value
        params, current = candidate, value
        trace.append(current)
        step = min(config.initial_step, trial * 2.0)  # reuse the scale that worked
        if improvement < config.tolerance:
            converged = True
            break
    return FitResult(params=params, objectives=trace, converged=converged)


def fit(corpus: Corpus, kernels: BasisKernels, config: FitConfig | None = None, mu_start: np.ndarray | None = None) -> RppParams:
    return fit_detailed(corpus, kernels, config, mu_start).params


def causal_strength(params: RppParams, cause: int, effect: int, sign_tolerance: float = 1e-6) -> float:
    """Signed influence of one entity on another, voted across the basis bank.

    Each basis casts its net coefficient a + b into the positive, negative, or
    near-zero camp (the dead zone is +-sign_tolerance).  The largest camp wins
    and the strength is the mean net coefficient of the winners; camp-size
    ties go to the camp with the larger mean magnitude, and to zero when that
    is tied too.
    """
    U = params.num_entities
    for idx in (cause, effect):
        if not 0 <= idx < U:
            raise ValueError(f"unknown entity id {idx}")
    net = params.a[effect, cause] + params.b[effect, cause]
    positive = net[net > sign_tolerance]
    negative = net[net < -sign_tolerance]
    near_zero = len(net) - len(positive) - len(negative)

    camps = [
        (len(positive), float(np.mean(np.abs(positive))) if len(positive) else 0.0, float(np.mean(positive)) if len(positive) else 0.0),
        (len(negative), float(np.mean(np.abs(negative))) if len(negative) else 0.0, float(np.mean(negative)) if len(negative) else 0.0),
        (near_zero, 0.0, 0.0),
    ]
    best_size = max(c[0] for c in camps)
    contenders = [c for c in camps if c[0] == best_size]
    if len(contenders) == 1:
        return contenders[0][2]
    best_mag = max(c[1] for c in contenders)
    strongest = [c for c in contenders if c[1] == best_mag]
    if len(strongest) == 1:
        return strongest[0][2]
    return 0.0  # unresolved tie: abstain


def strength_matrix(params: RppParams, sign_tolerance: float = 1e-6) -> np.ndarray:
    """strengths[cause, effect] for every ordered pair, self-influence included."""
    U = params.num_entities
    out = np.zeros((U, U))
    for u in range(U):
        for v in range(U):
            out[u, v] = causal_strength(params, u, v, sign_tolerance)
    return out


@dataclass
class CausalGraph:
    """Thresholded one-to-one influence graph.

    edges maps (cause, effect) id pairs to signed strengths with magnitude at
    least the threshold; names aligns ids to entity names.
    """

    names: list[str]
    edges: dict[tuple[int, int], float]
    threshold: float

    @property
    def num_entities(self) -> int:
        return len(self.names)

    def individual_causes(self, effect: int) -> set[int]:
        return {u for (u, v) in self.edges if v == effect and u != effect}

    def to_json(self) -> dict:
        return {
            "nodes": list(self.names),
            "edges": [[u, v, s] for (u, v), s in sorted(self.edges.items())],
            "threshold": self.threshold,
        }

    @classmethod
    def from_json(cls, blob: dict) -> "CausalGraph":
        return cls(
            names=list(blob["nodes"]),
            edges={(int(u), int(v)): float(s) for u, v, s in blob["edges"]},
            threshold=float(blob["threshold"]),
        )


def build_causal_graph(params: RppParams, threshold: float, sign_tolerance: float = 1e-6, names: list[str] | None = None) -> CausalGraph:
    """Keep every ordered pair whose voted strength clears the threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    strengths = strength_matrix(params, sign_tolerance)
    edges = {
        (u, v): float(strengths[u, v])
        for u in range(params.num_entities)
        for v in range(params.num_entities)
        if abs(strengths[u, v]) >= threshold
    }
    names = names if names is not None else [f"e{u}" for u in range(params.num_entities)]
    return CausalGraph(names=names, edges=edges, threshold=threshold)
