"""Parameter and structure learning for interval-network class models.

Tables are latent: the likelihood of the per-table action distributions is
collapsed out, and a Gibbs sweep reseats every node of every instance in
order.  The conditional for one node multiplies a Dirichlet-multinomial
likelihood factor (corpus-wide table/action counts with the node removed) by
a sequential seating factor that conditions on the occupancy of that
instance's *earlier* nodes only — so occupied tables always form a contiguous
prefix of the table budget within an instance.

The concentration parameters are refit by multiplicative fixed-point updates
driven by digamma sums over a window of count samples recorded one per
training instance per sweep — per-table occupancy vectors (minus each
instance's deterministic first seat) for the seating strengths, per-table
action counts for the dish priors.  Refits wait until the sample window is
complete, then run once per remaining sweep over the fixed window, so the
returned hyperparameters approach the maximum-likelihood stationary point of
the recorded samples.  Relation distributions are estimated afterwards by a
deterministic scan that replays, for every structure link, the constraint
under which its relation was chosen.  Structure itself is picked per link by
a decomposable BIC comparison, which makes the per-link decision globally
optimal.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .algebra import RelationSet
from .errors import ConfigInvalid, DomainError, EmptyCorpus
from .generate import ClassModel, _draw, crp_table_distribution
from .network import (
    NULL_ACTION,
    Instance,
    IntervalNetwork,
    StructureMask,
    instance_to_network,
    pad_nulls,
    scan_link_constraints,
)

__all__ = [
    "TrainConfig",
    "SamplerState",
    "GibbsResult",
    "digamma",
    "gibbs_conditional",
    "run_gibbs",
    "update_hyperparams",
    "estimate_theta",
    "estimate_phi",
    "collect_link_counts",
    "BicFamilyCounts",
    "bic_family_score",
    "learn_structure",
    "train_class_model",
]

NULL_RELATION_CODE = 7  # relation variables take 7 real values plus null

_STRUCTURE_MODES = ("learned", "chain", "full")


# ---------------------------------------------------------------------------
# special functions


def digamma(x):
    """Digamma, accurate to |error| < 1e-10 for positive arguments.

    Small arguments are shifted upward with psi(y) = psi(y+1) - 1/y until
    y >= 6, where the asymptotic expansion (Bernoulli tail through y**-14,
    truncation error ~1e-13 at y = 6) takes over.  Accepts scalars or arrays;
    raises :class:`~ibgn.errors.DomainError` off the positive axis.
    """
    scalar = np.ndim(x) == 0
    y = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if y.size and (np.any(~np.isfinite(y)) or np.any(y <= 0.0)):
        raise DomainError("digamma requires finite, strictly positive arguments")
    acc = np.zeros_like(y)
    while True:
        small = y < 6.0
        if not small.any():
            break
        acc[small] -= 1.0 / y[small]
        y[small] += 1.0
    inv = 1.0 / y
    inv2 = inv * inv
    tail = 1.0 / 12 - inv2 * (
        1.0 / 120
        - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))
    )
    result = acc + np.log(y) - 0.5 * inv - inv2 * tail
    return float(result[0]) if scalar else result.reshape(np.shape(x))


# ---------------------------------------------------------------------------
# configuration and sampler state


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one class-model fit."""

    iterations: int = 2000
    burn_in: int = 500
    avg_window: int = 1000
    structure: str = "learned"
    rho: float = 1e-5
    seed: int = 0
    alpha_init: float = 1.0
    beta_init: float = 0.5
    clamp_lo: float = 1e-6
    clamp_hi: float = 1e6

    def validate(self) -> None:
        if self.structure not in _STRUCTURE_MODES:
            raise ConfigInvalid(f"structure must be one of {_STRUCTURE_MODES}")
        if self.iterations < 1 or self.burn_in < 0 or self.avg_window < 1:
            raise ConfigInvalid("iterations/burn_in/avg_window out of range")
        if self.iterations < self.burn_in + self.avg_window:
            raise ConfigInvalid(
                f"iterations ({self.iterations}) must cover burn_in + avg_window "
                f"({self.burn_in} + {self.avg_window})"
            )
        if self.rho <= 0 or self.alpha_init <= 0 or self.beta_init <= 0:
            raise ConfigInvalid("rho, alpha_init and beta_init must be positive")
        if not 0 < self.clamp_lo <= self.clamp_hi:
            raise ConfigInvalid("clamp bounds must satisfy 0 < lo <= hi")


@dataclass(eq=False)
class SamplerState:
    """Mutable state of the collapsed sampler over one class's corpus."""

    actions: List[List[int]]  # per instance, 0-based action columns
    assignments: List[List[int]]  # per instance, table index per node (-1 = unseated)
    action_counts: np.ndarray  # (ell, M) corpus-wide table/action counts
    row_totals: np.ndarray  # (ell,) row sums of action_counts
    occupancy: np.ndarray  # (D, ell) per-instance table occupancy
    table_totals: np.ndarray  # (ell,) corpus-wide table occupancy
    alpha: np.ndarray  # (ell,)
    beta: np.ndarray  # (ell, M)
    beta_rows: np.ndarray  # (ell,)
    iteration: int = 0
    hist_table: Optional[np.ndarray] = None  # (window, ell, cap) per-sweep histograms of per-instance occupancy
    hist_alpha: Optional[np.ndarray] = None  # (window, ell, cap) same but excluding each instance's first seat
    hist_action: Optional[np.ndarray] = None  # (window, ell, M, cap) per-sweep histograms of per-instance action counts
    length_hist: Optional[np.ndarray] = None  # (cap,) histogram of instance lengths minus the first seat
    hist_len: int = 0
    hist_next: int = 0

    @property
    def ell(self) -> int:
        return len(self.alpha)

    @property
    def vocab_size(self) -> int:
        return self.action_counts.shape[1]


@dataclass
class GibbsResult:
    averaged_na: np.ndarray  # (ell, M) window-averaged table/action counts
    averaged_nt: np.ndarray  # (D, ell) window-averaged per-instance occupancy
    alpha: np.ndarray
    beta: np.ndarray
    state: SamplerState


# ---------------------------------------------------------------------------
# collapsed Gibbs


def gibbs_conditional(state: SamplerState, d: int, n: int) -> np.ndarray:
    """Seating distribution for node ``n`` of instance ``d`` (normalized).

    The node must currently be unseated (its count removed — the "minus one
    node" state).  Entry ``z`` of the result is table ``z``; when the budget
    is not yet exhausted by this instance's earlier nodes, the final entry is
    the next fresh table.  Each table's weight is its likelihood factor
    ``(count_za + beta_za) / (count_z. + beta_z.)`` times its seating factor
    — earlier-node occupancy (or alpha, for the fresh table) over
    ``position + alpha_z - 1``.
    """
    a = state.actions[d][n]
    prefix = state.assignments[d][:n]
    occupied = 0
    for t in prefix:
        if t >= occupied:
            occupied = t + 1
    counts = [0.0] * occupied
    for t in prefix:
        counts[t] += 1.0
    if 0.0 in counts:
        raise RuntimeError("earlier-node occupancy must form a contiguous table prefix")

    na = state.action_counts
    rows = state.row_totals
    beta = state.beta
    brows = state.beta_rows
    alpha = state.alpha
    position = n + 1
    weights = []
    for z in range(occupied):
        like = (na[z, a] + beta[z, a]) / (rows[z] + brows[z])
        weights.append(like * counts[z] / (position + alpha[z] - 1.0))
    if occupied < state.ell:
        z = occupied
        like = (na[z, a] + beta[z, a]) / (rows[z] + brows[z])
        weights.append(like * alpha[z] / (position + alpha[z] - 1.0))
    probs = np.asarray(weights, dtype=float)
    return probs / probs.sum()


def _unseat(state: SamplerState, d: int, n: int) -> None:
    z = state.assignments[d][n]
    a = state.actions[d][n]
    state.assignments[d][n] = -1
    state.action_counts[z, a] -= 1.0
    state.row_totals[z] -= 1.0
    state.occupancy[d, z] -= 1.0
    state.table_totals[z] -= 1.0


def _seat(state: SamplerState, d: int, n: int, z: int) -> None:
    a = state.actions[d][n]
    state.assignments[d][n] = z
    state.action_counts[z, a] += 1.0
    state.row_totals[z] += 1.0
    state.occupancy[d, z] += 1.0
    state.table_totals[z] += 1.0


def update_hyperparams(state: SamplerState, config: TrainConfig) -> Tuple[np.ndarray, np.ndarray]:
    """One multiplicative fixed-point step for alpha and beta.

    Each recorded sample contributes ``psi(count + param) - psi(param)`` to
    its side of the ratio.  The samples are per-instance count vectors, one
    per instance per recorded sweep, kept as per-sweep count histograms: for
    alpha, each instance's table occupancy vector excluding its first seat
    (which is deterministic under the canonical table labeling and carries
    no information about the strengths) against a denominator term of
    ``psi(instance_length - 1 + sum(alpha)) - psi(sum(alpha))`` per sample;
    for each beta row, each instance's action counts at that table against
    the instance's node count at that table.  A parameter whose denominator
    sum is zero (no counts ever recorded) is left unchanged; results are
    clamped to the configured bounds.  The new values are written into the
    state and returned.
    """
    size = state.hist_len
    if size == 0 or state.hist_table is None or state.hist_action is None:
        raise ValueError("no count samples recorded yet")
    table_hist = state.hist_table[:size]
    alpha_hist = state.hist_alpha[:size] if state.hist_alpha is not None else table_hist
    action_hist = state.hist_action[:size]
    alpha = state.alpha
    beta = state.beta
    lo, hi = config.clamp_lo, config.clamp_hi

    hist_sum = table_hist.sum(axis=0)  # (ell, cap) occupancy-count histogram over the window
    alpha_sum_hist = alpha_hist.sum(axis=0)  # (ell, cap) with first seats excluded
    cap = hist_sum.shape[1]
    support = np.arange(1, cap, dtype=float)
    if float(alpha_sum_hist.sum()) == 0.0:
        new_alpha = alpha.copy()
    else:
        if state.length_hist is None:
            raise ValueError("no instance-length histogram recorded")
        alpha_sum = float(alpha.sum())
        num = (
            alpha_sum_hist[:, 1:]
            * (digamma(support[None, :] + alpha[:, None]) - digamma(alpha)[:, None])
        ).sum(axis=1)
        bins = np.nonzero(state.length_hist)[0]
        den = size * float(
            (
                state.length_hist[bins]
                * (digamma(bins.astype(float) + alpha_sum) - digamma(alpha_sum))
            ).sum()
        )
        new_alpha = np.clip(alpha * num / den, lo, hi) if den > 0.0 else alpha.copy()

    beta_rows = beta.sum(axis=1)
    action_sum = action_hist.sum(axis=0)  # (ell, M, cap) action-count histogram over the window
    cap_a = action_sum.shape[2]
    support_a = np.arange(1, cap_a, dtype=float)
    bnum = (
        action_sum[:, :, 1:]
        * (digamma(support_a[None, None, :] + beta[:, :, None]) - digamma(beta)[:, :, None])
    ).sum(axis=2)
    bden = (
        hist_sum[:, 1:]
        * (digamma(support[None, :] + beta_rows[:, None]) - digamma(beta_rows)[:, None])
    ).sum(axis=1)
    safe = np.where(bden > 0.0, bden, 1.0)
    new_beta = np.where(bden[:, None] > 0.0, np.clip(beta * bnum / safe[:, None], lo, hi), beta)

    state.alpha = new_alpha
    state.beta = new_beta
    state.beta_rows = new_beta.sum(axis=1)
    return new_alpha, new_beta


def run_gibbs(
    instances: Sequence[Instance],
    vocab_size: int,
    config: TrainConfig,
    rng: np.random.Generator,
    ell: Optional[int] = None,
) -> GibbsResult:
    """Fit table assignments and hyperparameters on one class's instances.

    Nulls never enter the sampler.  Assignments are initialized by a
    sequential draw from the seating prior; every sweep then reseats each
    node of each instance in order.  Counts are snapshotted and averaged
    over the ``avg_window`` sweeps following burn-in; those snapshots are
    the refit sample history.  While the history is still being assembled
    the per-sweep refit is the documented no-op (the chain anneals at the
    initial hyperparameters), and every sweep after the window completes
    applies one fixed-point step over the collected samples, so the
    returned hyperparameters approach the stationary point of the window.
    Fixed seed, config and corpus give bit-identical results.
    """
    config.validate()
    if not instances:
        raise EmptyCorpus("cannot run the sampler on an empty corpus")
    actions = [
        [iv.action - 1 for iv in inst.intervals if not iv.is_null] for inst in instances
    ]
    for inst_actions in actions:
        for a in inst_actions:
            if not 0 <= a < vocab_size:
                raise ValueError(f"action id {a + 1} outside vocabulary of size {vocab_size}")
    longest = max((len(a) for a in actions), default=0)
    if longest == 0:
        raise EmptyCorpus("every instance is empty")
    if ell is None:
        ell = longest

    num_instances = len(actions)
    cap = longest + 1
    state = SamplerState(
        actions=actions,
        assignments=[[-1] * len(a) for a in actions],
        action_counts=np.zeros((ell, vocab_size)),
        row_totals=np.zeros(ell),
        occupancy=np.zeros((num_instances, ell)),
        table_totals=np.zeros(ell),
        alpha=np.full(ell, float(config.alpha_init)),
        beta=np.full((ell, vocab_size), float(config.beta_init)),
        beta_rows=np.full(ell, float(config.beta_init) * vocab_size),
        hist_table=np.zeros((config.avg_window, ell, cap)),
        hist_alpha=np.zeros((config.avg_window, ell, cap)),
        hist_action=np.zeros((config.avg_window, ell, vocab_size, cap)),
        length_hist=np.bincount([len(a) - 1 for a in actions], minlength=cap).astype(float),
    )
    # static per-node (instance, action) indices for the per-sweep count histograms
    node_instance = np.asarray(
        [d for d, inst_actions in enumerate(actions) for _ in inst_actions], dtype=np.int64
    )
    node_action = np.asarray(
        [a for inst_actions in actions for a in inst_actions], dtype=np.int64
    )
    cells = ell * vocab_size

    # sequential prior draw
    for d in range(num_instances):
        seated: List[float] = []
        for n in range(len(actions[d])):
            probs = crp_table_distribution(seated, n + 1, state.alpha)
            z = _draw(probs, rng)
            if z == len(seated):
                seated.append(1.0)
            else:
                seated[z] += 1.0
            _seat(state, d, n, z)

    window = config.avg_window
    avg_na = np.zeros_like(state.action_counts)
    avg_nt = np.zeros_like(state.occupancy)
    averaged = 0
    for sweep in range(1, config.iterations + 1):
        for d in range(num_instances):
            for n in range(len(actions[d])):
                _unseat(state, d, n)
                probs = gibbs_conditional(state, d, n)
                _seat(state, d, n, _draw(probs, rng))
        state.iteration = sweep
        if sweep <= config.burn_in:
            continue
        if sweep <= config.burn_in + window:
            occ = state.occupancy.astype(np.int64)
            occ_rest = occ.copy()
            first_seats = np.asarray([assigned[0] for assigned in state.assignments], dtype=np.int64)
            occ_rest[np.arange(num_instances), first_seats] -= 1
            for z in range(ell):
                state.hist_table[state.hist_next, z] = np.bincount(occ[:, z], minlength=cap)
                state.hist_alpha[state.hist_next, z] = np.bincount(occ_rest[:, z], minlength=cap)
            node_table = np.asarray(
                [t for assigned in state.assignments for t in assigned], dtype=np.int64
            )
            per_instance = np.bincount(
                node_instance * cells + node_table * vocab_size + node_action,
                minlength=num_instances * cells,
            ).reshape(num_instances, ell, vocab_size)
            for z in range(ell):
                for i in range(vocab_size):
                    state.hist_action[state.hist_next, z, i] = np.bincount(
                        per_instance[:, z, i], minlength=cap
                    )
            state.hist_next = (state.hist_next + 1) % window
            state.hist_len = min(state.hist_len + 1, window)
            avg_na += state.action_counts
            avg_nt += state.occupancy
            averaged += 1
        else:
            update_hyperparams(state, config)

    return GibbsResult(
        averaged_na=avg_na / averaged,
        averaged_nt=avg_nt / averaged,
        alpha=state.alpha.copy(),
        beta=state.beta.copy(),
        state=state,
    )


# ---------------------------------------------------------------------------
# point estimates


def estimate_theta(averaged_na: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Posterior-mean action distributions: (counts + beta) row-normalized."""
    smoothed = np.asarray(averaged_na, dtype=float) + np.asarray(beta, dtype=float)
    return smoothed / smoothed.sum(axis=1, keepdims=True)


def collect_link_counts(
    instances: Sequence[Instance], mask: StructureMask
) -> Dict[Tuple[int, int, int], np.ndarray]:
    """Observed relation counts per (action, action, constraint) key.

    Replays the constraint resolution on every instance and tallies which
    member of the active constraint the observed relation was.  The observed
    relation always lies inside the constraint for timestamp-derived data;
    this is checked and a violation means corrupted input.
    """
    counts: Dict[Tuple[int, int, int], np.ndarray] = {}
    for inst in instances:
        net = instance_to_network(inst)
        for n_prime, n, constraint, relation in scan_link_constraints(net, mask):
            if relation not in constraint:
                raise RuntimeError(
                    f"observed relation {relation.symbol} escaped its constraint "
                    f"{{{constraint.text()}}} on pair ({n_prime}, {n})"
                )
            key = (net.actions[n_prime], net.actions[n], constraint.bits)
            vec = counts.get(key)
            if vec is None:
                vec = np.zeros(len(constraint))
                counts[key] = vec
            vec[constraint.index_of(relation)] += 1.0
    return counts


def estimate_phi(
    link_counts: Mapping[Tuple[int, int, int], np.ndarray], rho: float
) -> Dict[Tuple[int, int, int], np.ndarray]:
    """Smoothed relation distributions over each key's constraint members.

    Every member gets ``(count + rho) / (total + rho * size)``; a singleton
    constraint therefore gets probability exactly 1.
    """
    phi: Dict[Tuple[int, int, int], np.ndarray] = {}
    for key, vec in link_counts.items():
        vec = np.asarray(vec, dtype=float)
        phi[key] = (vec + rho) / (vec.sum() + rho * len(vec))
    return phi


# ---------------------------------------------------------------------------
# structure learning


@dataclass(frozen=True)
class BicFamilyCounts:
    """Sufficient statistics of one pair's relation variable.

    Relation codes are 0..6 for the forward relations and 7 for null; parent
    configurations are the two node actions (0 = null).
    """

    joint: Mapping[Tuple[Tuple[int, int], int], int]
    marginal: Mapping[int, int]
    dataset_size: int
    vocab_size: int


def _family_counts(
    networks: Sequence[IntervalNetwork], i: int, j: int, vocab_size: int
) -> BicFamilyCounts:
    joint: Counter = Counter()
    marginal: Counter = Counter()
    for net in networks:
        parents = (net.actions[i], net.actions[j])
        relation = net.relations.get((i, j))
        code = NULL_RELATION_CODE if relation is None else relation.value
        joint[(parents, code)] += 1
        marginal[code] += 1
    return BicFamilyCounts(
        joint=dict(joint), marginal=dict(marginal),
        dataset_size=len(networks), vocab_size=vocab_size,
    )


def bic_family_score(counts: BicFamilyCounts, with_parents: bool) -> float:
    """BIC score of one relation variable, with or without its action parents.

    Log-likelihood of the observed relation values (0 log 0 = 0) minus the
    complexity penalty ``log(D)/2 * 7 * num_parent_configurations`` — the
    relation variable contributes 7 free probabilities per configuration, and
    the actions range over the vocabulary plus null.
    """
    size = counts.dataset_size
    if size <= 0:
        raise EmptyCorpus("BIC needs at least one instance")
    penalty_unit = math.log(size) / 2.0 * 7.0
    if with_parents:
        parent_totals: Counter = Counter()
        for (parents, _code), n in counts.joint.items():
            parent_totals[parents] += n
        loglik = sum(
            n * math.log(n / parent_totals[parents])
            for (parents, _code), n in counts.joint.items()
            if n > 0
        )
        return loglik - penalty_unit * (counts.vocab_size + 1) ** 2
    loglik = sum(n * math.log(n / size) for n in counts.marginal.values() if n > 0)
    return loglik - penalty_unit


def learn_structure(instances: Sequence[Instance], vocab_size: int) -> StructureMask:
    """Pick the structure mask maximizing the BIC-scored network.

    The score decomposes over pairs, so each pair is linked exactly when
    conditioning its relation on the two actions scores strictly better than
    leaving it marginal — which is simultaneously the global argmax over all
    masks.  All instances are padded to the longest length with nulls first.
    """
    if not instances:
        raise EmptyCorpus("cannot learn structure from an empty corpus")
    k_star = max(len(inst) for inst in instances)
    if k_star == 0:
        raise EmptyCorpus("every instance is empty")
    networks = [instance_to_network(pad_nulls(inst, k_star)) for inst in instances]
    links = []
    for i in range(k_star):
        for j in range(i + 1, k_star):
            counts = _family_counts(networks, i, j, vocab_size)
            if bic_family_score(counts, True) > bic_family_score(counts, False):
                links.append((i, j))
    return StructureMask.of(links)


# ---------------------------------------------------------------------------
# end-to-end per-class training


def train_class_model(
    instances: Sequence[Instance],
    vocab: Sequence[str],
    config: TrainConfig,
    rng: np.random.Generator,
) -> ClassModel:
    """Fit one class's full generative model from its labeled instances."""
    config.validate()
    if not instances:
        raise EmptyCorpus("cannot train on an empty corpus")
    instances = [inst for inst in instances if inst.observed_length > 0]
    if not instances:
        raise EmptyCorpus("every instance is empty")
    k_star = max(inst.observed_length for inst in instances)
    if config.structure == "chain":
        mask = StructureMask.chain(k_star)
    elif config.structure == "full":
        mask = StructureMask.full(k_star)
    else:
        mask = learn_structure(instances, len(vocab))
        mask = StructureMask.of((i, j) for i, j in mask.links if j < k_star)
    result = run_gibbs(instances, len(vocab), config, rng, ell=k_star)
    theta = estimate_theta(result.averaged_na, result.beta)
    phi = estimate_phi(collect_link_counts(instances, mask), config.rho)
    model = ClassModel(
        k_star=k_star,
        ell=k_star,
        alpha=result.alpha,
        beta=result.beta,
        theta=theta,
        structure=mask,
        phi=phi,
        action_vocab=tuple(vocab),
        size_histogram=dict(Counter(inst.observed_length for inst in instances)),
    )
    model.validate()
    # diagnostic breadcrumb for the CLI summary; not part of the model proper
    model.occupied_tables = int(np.sum(result.averaged_nt.sum(axis=0) > 0.5))
    return model
