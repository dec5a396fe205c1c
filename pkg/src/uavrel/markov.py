"""Continuous-time Markov and semi-Markov machinery.

Two model kinds share one type:

* ``exponential`` models carry a generator matrix of rates (1/hour);
  transient probabilities come from uniformization.
* ``general`` models carry an embedded jump matrix plus one sojourn
  distribution per transition (the semi-Markov kernel); transient
  probabilities come from a time-domain solution of the Markov renewal
  equations by trapezoidal Stieltjes convolution.

Everything is in hours. Models are immutable once built.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.linalg import expm
from scipy.special import gamma as gamma_fn

from .errors import (
    AbsorbingStartWarning,
    GridTooCoarseWarning,
    ReliabilityError,
)

#: Poisson tail mass left out of a uniformization sum.
UNIFORMIZATION_TOL = 1e-10
# Largest Poisson mean handled in one uniformization chunk; longer spans are
# split (Chapman-Kolmogorov) to keep the series short and well conditioned.
_MAX_CHUNK_MEAN = 200.0


# ---------------------------------------------------------------------------
# Sojourn distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ReliabilityError("NEGATIVE_RATE", f"exponential rate must be > 0, got {self.rate}")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)

    def mean(self):
        return 1.0 / self.rate

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def time_scale(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Deterministic:
    delay: float

    def __post_init__(self):
        if not self.delay > 0:
            raise ReliabilityError("NEGATIVE_RATE", f"deterministic delay must be > 0, got {self.delay}")

    def cdf(self, t):
        return np.where(np.asarray(t, dtype=float) >= self.delay, 1.0, 0.0)

    def mean(self):
        return self.delay

    def sample(self, rng, size):
        return np.full(size, self.delay)

    @property
    def time_scale(self):
        return self.delay


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ReliabilityError(
                "NEGATIVE_RATE", f"weibull shape and scale must be > 0, got {self.shape}, {self.scale}"
            )

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return -np.expm1(-((t / self.scale) ** self.shape))

    def mean(self):
        return self.scale * gamma_fn(1.0 + 1.0 / self.shape)

    def sample(self, rng, size):
        return self.scale * rng.weibull(self.shape, size)

    @property
    def time_scale(self):
        return self.scale


Sojourn = Exponential | Deterministic | Weibull


@dataclass(frozen=True)
class KernelEntry:
    """One semi-Markov transition: embedded jump probability and sojourn law."""

    probability: float
    sojourn: Sojourn


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MarkovModel:
    """Labelled-state absorbing process.

    Build instances with :func:`build_markov_model`; the constructor does
    not validate.
    """

    states: tuple[str, ...]
    kind: str
    absorbing: frozenset[int]
    generator: np.ndarray | None = None
    jump_probs: np.ndarray | None = None
    sojourns: Mapping[tuple[int, int], Sojourn] = field(default_factory=dict)

    @property
    def n_states(self):
        return len(self.states)

    @property
    def operational(self):
        return frozenset(range(self.n_states)) - self.absorbing

    def index(self, state):
        """Resolve a label or an integer index to an index."""
        if isinstance(state, (int, np.integer)):
            if not 0 <= state < self.n_states:
                raise ReliabilityError("UNKNOWN_STATE", f"state index {state} out of range")
            return int(state)
        try:
            return self.states.index(state)
        except ValueError:
            raise ReliabilityError("UNKNOWN_STATE", f"no state named {state!r}") from None

    def point_mass(self, state, time=0.0):
        probs = np.zeros(self.n_states)
        probs[self.index(state)] = 1.0
        return StateDistribution(time, probs)

    def failure_probability(self, dist):
        """Total probability of the absorbing states in ``dist``."""
        return float(sum(dist.probs[i] for i in self.absorbing))

    def as_semi_markov(self):
        """Kernel form of an exponential model (competing exponentials).

        The jump out of state i goes to j with probability q_ij/q_i after an
        Exp(q_i) sojourn, whatever j is.
        """
        if self.kind == "general":
            return self
        G = self.generator
        n = self.n_states
        P = np.zeros((n, n))
        sojourns = {}
        for i in range(n):
            out = -G[i, i]
            if out <= 0:
                P[i, i] = 1.0
                continue
            for j in range(n):
                if j != i and G[i, j] > 0:
                    P[i, j] = G[i, j] / out
                    sojourns[(i, j)] = Exponential(out)
        return MarkovModel(self.states, "general", self.absorbing, None, _frozen(P), sojourns)


@dataclass(frozen=True)
class StateDistribution:
    time: float
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1:
            raise ReliabilityError("BAD_DISTRIBUTION", "probability vector must be one-dimensional")
        if self.time < 0:
            raise ReliabilityError("BAD_DISTRIBUTION", f"time must be >= 0, got {self.time}")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ReliabilityError("BAD_DISTRIBUTION", f"entries must lie in [0, 1]: {p}")
        if abs(p.sum() - 1.0) > 1e-6:
            raise ReliabilityError("BAD_DISTRIBUTION", f"entries sum to {p.sum():.12g}, not 1")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class CanonicalDecomposition:
    """Transient-first reordering of a transition or rate matrix.

    ``Q`` is transient-to-transient, ``R`` transient-to-absorbing.  The two
    absorbing-row blocks are kept so :meth:`reassemble` is exact for both
    stochastic (identity block) and generator (zero block) inputs.
    """

    permutation: tuple[int, ...]
    n_transient: int
    Q: np.ndarray
    R: np.ndarray
    absorbing_to_transient: np.ndarray
    absorbing_block: np.ndarray

    def reassemble(self):
        top = np.hstack([self.Q, self.R])
        bottom = np.hstack([self.absorbing_to_transient, self.absorbing_block])
        canonical = np.vstack([top, bottom])
        inv = np.argsort(self.permutation)
        return canonical[np.ix_(inv, inv)]


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _iter_transitions(transitions):
    if isinstance(transitions, Mapping):
        for (src, dst), value in transitions.items():
            yield src, dst, value
    else:
        for item in transitions:
            src, dst, *rest = item
            yield src, dst, rest[0] if len(rest) == 1 else KernelEntry(*rest)


def build_markov_model(states: Sequence[str], transitions, absorbing) -> MarkovModel:
    """Validate and assemble a :class:`MarkovModel`.

    Parameters
    ----------
    states : sequence of str
        Ordered state labels.
    transitions : mapping or iterable
        ``{(src, dst): value}`` or ``(src, dst, value)`` triples.  A float
        value is a rate (exponential model); a :class:`KernelEntry` (or a
        ``(src, dst, probability, sojourn)`` quadruple) makes a general
        semi-Markov model.  Kinds may not be mixed.
    absorbing : iterable
        Labels (or indices) of the failure states.
    """
    states = tuple(states)
    if len(states) < 2:
        raise ReliabilityError("TOO_FEW_STATES", "a model needs at least two states")
    seen = set()
    for s in states:
        if s in seen:
            raise ReliabilityError("DUPLICATE_STATE", f"state {s!r} declared twice")
        seen.add(s)
    lookup = {s: i for i, s in enumerate(states)}

    def resolve(s):
        if isinstance(s, (int, np.integer)) and not isinstance(s, bool) and 0 <= s < len(states):
            return int(s)
        if s in lookup:
            return lookup[s]
        raise ReliabilityError("UNKNOWN_STATE", f"transition references undeclared state {s!r}")

    absorbing_idx = frozenset(resolve(s) for s in absorbing)
    if not absorbing_idx:
        raise ReliabilityError("NONE_ABSORBING", "at least one absorbing state is required")

    items = [(resolve(a), resolve(b), v) for a, b, v in _iter_transitions(transitions)]
    kinds = {"general" if isinstance(v, KernelEntry) else "exponential" for _, _, v in items}
    if len(kinds) > 1:
        raise ReliabilityError("MIXED_KIND", "rates and kernel entries cannot be mixed in one model")
    kind = kinds.pop() if kinds else "exponential"

    n = len(states)
    adjacency = [set() for _ in range(n)]
    pairs = set()
    for i, j, _ in items:
        if (i, j) in pairs:
            raise ReliabilityError("DUPLICATE_TRANSITION", f"{states[i]} -> {states[j]} given twice")
        pairs.add((i, j))
        if i in absorbing_idx:
            raise ReliabilityError(
                "ABSORBING_HAS_EXIT", f"absorbing state {states[i]!r} has an outgoing transition"
            )
        adjacency[i].add(j)

    if kind == "exponential":
        G = np.zeros((n, n))
        for i, j, rate in items:
            rate = float(rate)
            if i == j:
                raise ReliabilityError("SELF_LOOP", f"rate self-loop on {states[i]!r}")
            if not rate > 0:
                raise ReliabilityError(
                    "NEGATIVE_RATE", f"rate {states[i]} -> {states[j]} must be > 0, got {rate}"
                )
            G[i, j] = rate
        np.fill_diagonal(G, -G.sum(axis=1))
        model = MarkovModel(states, kind, absorbing_idx, generator=_frozen(G))
    else:
        P = np.zeros((n, n))
        sojourns = {}
        for i, j, entry in items:
            if not 0 < entry.probability <= 1:
                raise ReliabilityError(
                    "BAD_KERNEL", f"jump probability {states[i]} -> {states[j]} must be in (0, 1]"
                )
            P[i, j] = entry.probability
            sojourns[(i, j)] = entry.sojourn
        for i in range(n):
            if i in absorbing_idx:
                P[i, i] = 1.0
            elif abs(P[i].sum() - 1.0) > 1e-12:
                raise ReliabilityError(
                    "BAD_KERNEL", f"jump probabilities out of {states[i]!r} sum to {P[i].sum():.15g}"
                )
        model = MarkovModel(states, kind, absorbing_idx, jump_probs=_frozen(P), sojourns=sojourns)

    for start in range(n):
        if start in absorbing_idx:
            continue
        if not _reaches(adjacency, start, absorbing_idx):
            raise ReliabilityError(
                "UNREACHABLE_ABSORBING", f"no failure state reachable from {states[start]!r}"
            )
    return model


def _reaches(adjacency, start, targets):
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        if i in targets:
            return True
        for j in adjacency[i] - seen:
            seen.add(j)
            queue.append(j)
    return False


def _as_distribution(model, p0):
    if isinstance(p0, StateDistribution):
        dist = p0
    elif isinstance(p0, (str, int, np.integer)):
        dist = model.point_mass(p0)
    else:
        dist = StateDistribution(0.0, np.asarray(p0, dtype=float))
    if dist.probs.shape != (model.n_states,):
        raise ReliabilityError(
            "BAD_DISTRIBUTION", f"expected {model.n_states} probabilities, got {dist.probs.shape}"
        )
    return dist


# ---------------------------------------------------------------------------
# Transient analysis
# ---------------------------------------------------------------------------


def _uniformized_step(v, P, mu, tol):
    # Right truncation point K satisfies Poisson(mu).sf(K) <= tol.
    K = int(stats.poisson.isf(tol, mu)) + 1 if mu > 0 else 0
    weights = stats.poisson.pmf(np.arange(K + 1), mu)
    acc = weights[0] * v
    term = v
    for k in range(1, K + 1):
        term = term @ P
        acc = acc + weights[k] * term
    # Lump the discarded tail onto the last term: mass is conserved and, since
    # absorbed mass only grows along v P^k, the result stays a lower bound.
    return acc + max(0.0, 1.0 - float(weights.sum())) * term


def transient_distribution(model: MarkovModel, p0, t: float) -> StateDistribution:
    """State probabilities after ``t`` hours, by uniformization.

    The generator is uniformized at its largest exit rate L and the
    Poisson(L t) series is truncated so the discarded tail mass is at most
    ``UNIFORMIZATION_TOL`` (1e-10) in total; long spans are split into
    chunks sharing that budget.  ``p0`` may be a :class:`StateDistribution`,
    a probability vector, or a single state label.
    """
    if model.kind != "exponential":
        raise ReliabilityError("WRONG_KIND", "general-sojourn models need solve_markov_renewal")
    if t < 0:
        raise ReliabilityError("NEGATIVE_TIME", f"t must be >= 0, got {t}")
    dist = _as_distribution(model, p0)
    G = model.generator
    L = float(np.max(-np.diag(G)))
    if t == 0 or L == 0:
        return StateDistribution(dist.time + t, dist.probs)
    P = np.eye(model.n_states) + G / L
    total = L * t
    n_chunks = max(1, math.ceil(total / _MAX_CHUNK_MEAN))
    mu = total / n_chunks
    v = dist.probs.copy()
    for _ in range(n_chunks):
        v = _uniformized_step(v, P, mu, UNIFORMIZATION_TOL / n_chunks)
    return StateDistribution(dist.time + t, np.clip(v, 0.0, 1.0))


def transient_curve(model: MarkovModel, p0, times) -> np.ndarray:
    """Probability vectors at each of ``times`` (rows), exponential kind.

    Uniform grids starting at 0 are stepped with one matrix exponential;
    other grids fall back to :func:`transient_distribution` per point.
    """
    times = np.asarray(times, dtype=float)
    dist = _as_distribution(model, p0)
    out = np.empty((len(times), model.n_states))
    if len(times) == 0:
        return out
    steps = np.diff(times)
    if times[0] == 0 and len(times) > 1 and np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        step = expm(model.generator * steps[0])
        v = dist.probs
        out[0] = v
        for k in range(1, len(times)):
            v = v @ step
            out[k] = v
        return np.clip(out, 0.0, 1.0)
    for k, t in enumerate(times):
        out[k] = transient_distribution(model, dist, float(t)).probs
    return out


def _kernel_on_grid(model, grid):
    n = model.n_states
    Q = np.zeros((len(grid), n, n))
    for (i, j), dist in model.sojourns.items():
        Q[:, i, j] = model.jump_probs[i, j] * dist.cdf(grid)
    return Q


def solve_markov_renewal(model: MarkovModel, p0, grid, on_coarse="warn") -> list[StateDistribution]:
    """Solve the Markov renewal equations on a uniform time grid.

    Discretizes

        P(t) = diag(1 - G(t)) + integral_0^t dQ(x) P(t - x)

    with the trapezoidal Stieltjes rule: the increment of the kernel over
    each cell multiplies the average of P at the cell's two ends.  The
    first cell involves the unknown P(t_n) and is solved implicitly.  Rows
    of P sum to one exactly in exact arithmetic, so each returned
    distribution conserves probability.

    Parameters
    ----------
    model : MarkovModel
        Either kind; exponential models are converted to kernel form.
    p0 : StateDistribution, vector, or state label
    grid : array_like
        Uniform times starting at 0, or ``(horizon, step)``.
    on_coarse : {"warn", "raise", "ignore"}
        Response when the step exceeds a tenth of the shortest sojourn
        time scale.
    """
    smp = model.as_semi_markov()
    grid = _uniform_grid(grid)
    step = grid[1] - grid[0] if len(grid) > 1 else 0.0
    scales = [d.time_scale for d in smp.sojourns.values()]
    if scales and step > min(scales) / 10:
        msg = f"grid step {step:g} h exceeds a tenth of the shortest sojourn scale {min(scales):g} h"
        if on_coarse == "raise":
            raise ReliabilityError("GRID_TOO_COARSE", msg)
        if on_coarse == "warn":
            warnings.warn(msg, GridTooCoarseWarning, stacklevel=2)
    dist = _as_distribution(model, p0)
    n = smp.n_states
    N = len(grid) - 1
    Qg = _kernel_on_grid(smp, grid)
    hold = 1.0 - Qg.sum(axis=2)  # survival of the sojourn, per state
    dQ = np.diff(Qg, axis=0, prepend=Qg[:1])  # dQ[m] = Q(t_m) - Q(t_{m-1})
    # dQ laid out as (i, m, k) so a block of cells is one matrix product.
    dQ_imk = np.ascontiguousarray(dQ.transpose(1, 0, 2))
    P = np.empty((N + 1, n, n))
    P[0] = np.diag(hold[0]) + 0.0
    avg = np.empty((N, n, n))  # avg[k] = (P[k] + P[k+1]) / 2
    eye = np.eye(n)
    for k in range(1, N + 1):
        rhs = np.diag(hold[k]) + 0.5 * dQ[1] @ P[k - 1]
        if k >= 2:
            # sum_{m=2}^{k} dQ[m] @ avg[k-m]
            left = dQ_imk[:, 2 : k + 1, :].reshape(n, -1)
            right = avg[k - 2 :: -1].reshape(-1, n)
            rhs = rhs + left @ right
        P[k] = np.linalg.solve(eye - 0.5 * dQ[1], rhs)
        avg[k - 1] = 0.5 * (P[k - 1] + P[k])
    probs = np.einsum("i,nij->nj", dist.probs, P)
    probs = np.clip(probs, 0.0, 1.0)
    return [StateDistribution(dist.time + float(t), probs[k]) for k, t in enumerate(grid)]


def _uniform_grid(grid):
    if isinstance(grid, tuple) and len(grid) == 2:
        horizon, step = map(float, grid)
        if not step > 0:
            raise ReliabilityError("BAD_GRID", "grid step must be > 0")
        n = max(1, int(round(horizon / step)))
        return np.linspace(0.0, n * step, n + 1)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or grid[0] != 0:
        raise ReliabilityError("BAD_GRID", "grid must be a 1-D array starting at 0 with >= 2 points")
    steps = np.diff(grid)
    if not steps[0] > 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ReliabilityError("BAD_GRID", "grid must be uniform with a positive step")
    return grid


# ---------------------------------------------------------------------------
# Absorption analysis
# ---------------------------------------------------------------------------


def canonical_form(matrix, absorbing_set) -> CanonicalDecomposition:
    """Reorder ``matrix`` so transient states come first.

    Relative order inside the transient and absorbing groups is preserved,
    so an input that is already canonical gets the identity permutation.
    """
    M = np.asarray(matrix, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ReliabilityError("BAD_MATRIX", f"matrix must be square, got {M.shape}")
    absorbing = sorted({int(i) for i in absorbing_set})
    if not absorbing:
        raise ReliabilityError("NONE_ABSORBING", "absorbing set is empty")
    if any(not 0 <= i < n for i in absorbing):
        raise ReliabilityError("UNKNOWN_STATE", f"absorbing index out of range: {absorbing}")
    if len(absorbing) == n:
        raise ReliabilityError("ALL_ABSORBING", "every state is absorbing")
    transient = [i for i in range(n) if i not in absorbing]
    perm = tuple(transient + absorbing)
    C = M[np.ix_(perm, perm)]
    t = len(transient)
    return CanonicalDecomposition(
        permutation=perm,
        n_transient=t,
        Q=C[:t, :t].copy(),
        R=C[:t, t:].copy(),
        absorbing_to_transient=C[t:, :t].copy(),
        absorbing_block=C[t:, t:].copy(),
    )


def fundamental_matrix(Q) -> np.ndarray:
    """N = (I - Q)^-1: expected visits to each transient state."""
    Q = np.asarray(Q, dtype=float)
    try:
        return np.linalg.inv(np.eye(len(Q)) - Q)
    except np.linalg.LinAlgError:
        raise ReliabilityError("SINGULAR_SYSTEM", "I - Q is singular; absorption unreachable") from None


def mean_sojourns(model: MarkovModel) -> np.ndarray:
    """Expected holding time in each state (0 for absorbing states)."""
    if model.kind == "exponential":
        out = -np.diag(model.generator)
        means = np.zeros(model.n_states)
        means[out > 0] = 1.0 / out[out > 0]
        return means
    means = np.zeros(model.n_states)
    for (i, j), dist in model.sojourns.items():
        means[i] += model.jump_probs[i, j] * dist.mean()
    return means


def mttf_vector(model: MarkovModel) -> dict[str, float]:
    """Expected time to absorption from every operational state."""
    if model.kind == "exponential":
        cf = canonical_form(model.generator, model.absorbing)
        try:
            times = np.linalg.solve(-cf.Q, np.ones(cf.n_transient))
        except np.linalg.LinAlgError:
            raise ReliabilityError("SINGULAR_SYSTEM", "rate system is singular") from None
    else:
        cf = canonical_form(model.jump_probs, model.absorbing)
        N = fundamental_matrix(cf.Q)
        times = N @ mean_sojourns(model)[list(cf.permutation[: cf.n_transient])]
    if not np.all(np.isfinite(times)) or np.any(times <= 0):
        raise ReliabilityError("SINGULAR_SYSTEM", "absorption time is not finite and positive")
    return {model.states[i]: float(times[k]) for k, i in enumerate(cf.permutation[: cf.n_transient])}


def mttf_from_state(model: MarkovModel, start_state) -> float:
    """Expected hours until an absorbing state is hit from ``start_state``.

    Exponential models solve ``-Q_TT m = 1`` on the rate matrix; general
    models use the embedded chain's fundamental matrix weighted by mean
    sojourns, ``N s``.  Starting in an absorbing state returns 0 with an
    :class:`AbsorbingStartWarning`.
    """
    i = model.index(start_state)
    if i in model.absorbing:
        warnings.warn(
            f"{model.states[i]!r} is absorbing; MTTF is 0 by convention",
            AbsorbingStartWarning,
            stacklevel=2,
        )
        return 0.0
    return mttf_vector(model)[model.states[i]]


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationResult:
    absorption_times: np.ndarray
    times: np.ndarray
    occupancy: np.ndarray  # shape (len(times), n_states), fractions of paths

    @property
    def mean_absorption_time(self):
        return float(np.mean(self.absorption_times))

    @property
    def standard_error(self):
        x = self.absorption_times
        return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.inf


def simulate_paths(model: MarkovModel, p0, horizon, n_paths, seed, times=None) -> SimulationResult:
    """Simulate ``n_paths`` independent trajectories up to ``horizon`` hours.

    Absorption times beyond the horizon are reported as ``inf``; pass
    ``horizon=math.inf`` to sample the full absorption-time law.  Occupancy
    fractions are recorded at each of ``times`` (default: the horizon, when
    finite).  Output is a deterministic function of ``seed``.
    """
    if n_paths < 1:
        raise ReliabilityError("BAD_ARGUMENT", "n_paths must be >= 1")
    dist = _as_distribution(model, p0)
    if times is None:
        times = [] if math.isinf(horizon) else [horizon]
    times = np.asarray(times, dtype=float)
    if np.any(times > horizon) or np.any(times < 0):
        raise ReliabilityError("BAD_ARGUMENT", "occupancy times must lie in [0, horizon]")
    rng = np.random.default_rng(seed)
    n = model.n_states
    smp = model.as_semi_markov()
    cum_jump = np.cumsum(smp.jump_probs, axis=1)
    is_absorbing = np.zeros(n, dtype=bool)
    is_absorbing[list(model.absorbing)] = True
    exp_rates = -np.diag(model.generator) if model.kind == "exponential" else None

    state = rng.choice(n, size=n_paths, p=dist.probs / dist.probs.sum())
    clock = np.zeros(n_paths)
    absorbed_at = np.full(n_paths, math.inf)
    occupancy = np.zeros((len(times), n))
    alive = np.ones(n_paths, dtype=bool)

    while True:
        newly = alive & is_absorbing[state]
        if np.any(newly):
            absorbed_at[newly] = clock[newly]
            for q, tau in enumerate(times):
                hit = newly & (clock <= tau)
                np.add.at(occupancy[q], state[hit], 1)
            alive &= ~newly
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        s = state[idx]
        u = rng.random(idx.size)
        nxt = np.minimum((u[:, None] >= cum_jump[s]).sum(axis=1), n - 1)
        if exp_rates is not None:
            hold = rng.exponential(1.0, idx.size) / exp_rates[s]
        else:
            hold = np.empty(idx.size)
            pair_codes = s * n + nxt
            for code in np.unique(pair_codes):
                sel = pair_codes == code
                hold[sel] = smp.sojourns[divmod(int(code), n)].sample(rng, int(sel.sum()))
        start, end = clock[idx], clock[idx] + hold
        for q, tau in enumerate(times):
            here = (start <= tau) & (tau < end)
            np.add.at(occupancy[q], s[here], 1)
        clock[idx] = end
        state[idx] = nxt
        gone = end > horizon
        if np.any(gone):
            alive[idx[gone]] = False
    absorbed_at[absorbed_at > horizon] = math.inf
    return SimulationResult(absorbed_at, times, occupancy / n_paths)
