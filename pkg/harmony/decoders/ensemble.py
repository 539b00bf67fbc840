"""
Harmonized ensembles of correlated matching decoders.

Each member decodes with a randomly perturbed copy of the projected model;
member outputs are pooled by vote, summed likelihood or most likely error.
Layered decoding runs a small voting ensemble first and escalates to a
large one only when the first pass is not unanimous.
"""
import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from harmony.core import rng
from harmony.core.config import settings
from harmony.decoders.correlated import ErrorHypothesis, ProjectedModel, decode_correlated
from harmony.models.hypergraph import Shot
from harmony.models.schemas import EnsembleConfig, PerturbationParams, Pooling

logger = logging.getLogger(__name__)


def _interval(rng_: np.random.Generator, centre: np.ndarray, alpha: float) -> np.ndarray:
    return rng_.uniform((1.0 - alpha) * centre, (1.0 + alpha) * centre)


def perturb(pm: ProjectedModel, params: PerturbationParams, member_index: int, stream: int = rng.ENSEMBLE) -> ProjectedModel:
    """
    Ensemble member `member_index`: p(1), p(2) and every implied q drawn
    uniformly from intervals around the unperturbed values.

    Draw order is fixed (p1 of X then Z edges, p2 of X then Z edges, then
    the q values in reweight-set order) so a member depends only on
    (seed, stream, member_index). Reweight-set membership never changes.
    """
    gen = rng.generator(params.seed, stream, member_index)
    floor = settings.probability_floor
    px = pm.graph_x.probabilities
    pz = pm.graph_z.probabilities

    p1x = _interval(gen, px, params.alpha1)
    p1z = _interval(gen, pz, params.alpha1)
    p2x = _interval(gen, px, params.alpha2)
    p2z = _interval(gen, pz, params.alpha2)

    keys = list(pm.reweight_sets)
    flat_q = np.array([q for key in keys for _, q in pm.reweight_sets[key]], dtype=np.float64)
    q_tilde = np.clip(_interval(gen, flat_q, params.alpha3), floor, 1.0 - floor)
    reweight_sets = {}
    pos = 0
    for key in keys:
        targets = pm.reweight_sets[key]
        reweight_sets[key] = tuple((t, float(q)) for (t, _), q in zip(targets, q_tilde[pos:pos + len(targets)]))
        pos += len(targets)

    clip = (floor, 0.5 - floor)
    return replace(
        pm,
        graph_x=pm.graph_x.with_probabilities(np.clip(p1x, *clip), pm.weight_fn),
        graph_z=pm.graph_z.with_probabilities(np.clip(p1z, *clip), pm.weight_fn),
        second_x=np.clip(p2x, *clip),
        second_z=np.clip(p2z, *clip),
        reweight_sets=reweight_sets,
    )


@dataclass(frozen=True, eq=False)
class PoolResult:
    prediction: np.ndarray
    confidence: float
    member_hypotheses: Tuple[ErrorHypothesis, ...]


def _key(h: ErrorHypothesis) -> Tuple[int, ...]:
    return tuple(int(b) for b in h.observables)


def _best_member(hypotheses: Sequence[ErrorHypothesis], allowed=None) -> int:
    """Index of the most likely member (lowest index on ties), optionally among allowed predictions."""
    best = None
    for i, h in enumerate(hypotheses):
        if allowed is not None and _key(h) not in allowed:
            continue
        if best is None or h.log_likelihood > hypotheses[best].log_likelihood:
            best = i
    return best


def default_pooling(family: Optional[str]) -> Pooling:
    """Vote on the repetition code, the configured rule on everything else."""
    return "vote" if family == "repetition" else settings.pooling


def pool(hypotheses: Sequence[ErrorHypothesis], rule: Pooling) -> PoolResult:
    """
    Reduce member hypotheses to one prediction keyed on the full observable vector.

    A tied vote falls back to most_likely_error over all members, which may
    pick a prediction outside the tied set. Confidence is always the share of
    members behind the most voted prediction.
    """
    if not hypotheses:
        raise ValueError("cannot pool an empty ensemble")
    votes = Counter(_key(h) for h in hypotheses)
    top = max(votes.values())
    confidence = top / len(hypotheses)

    if rule == "vote":
        tied = [k for k, c in votes.items() if c == top]
        choice = tied[0] if len(tied) == 1 else _key(hypotheses[_best_member(hypotheses)])
    elif rule == "sum_likelihood":
        ll = np.array([h.log_likelihood for h in hypotheses])
        weights = np.exp(ll - ll.max())
        totals: Dict[Tuple[int, ...], float] = {}
        for h, w in zip(hypotheses, weights):
            totals[_key(h)] = totals.get(_key(h), 0.0) + float(w)
        best_total = max(totals.values())
        tied = {k for k, s in totals.items() if s == best_total}
        choice = _key(hypotheses[_best_member(hypotheses, tied)])
    elif rule == "most_likely_error":
        choice = _key(hypotheses[_best_member(hypotheses)])
    else:
        raise ValueError(f"unknown pooling rule '{rule}'")

    return PoolResult(np.array(choice, dtype=np.uint8), confidence, tuple(hypotheses))


class HarmonyEnsemble:
    """Members are perturbed once and reused for every shot."""

    def __init__(self, pm: ProjectedModel, cfg: EnsembleConfig, stream: int = rng.ENSEMBLE):
        self.cfg = cfg
        self.members: List[ProjectedModel] = [perturb(pm, cfg.params, k, stream) for k in range(cfg.size)]

    def hypotheses(self, shot: Shot) -> List[ErrorHypothesis]:
        return [decode_correlated(member, shot) for member in self.members]

    def decode(self, shot: Shot, pooling: Optional[Pooling] = None) -> PoolResult:
        return pool(self.hypotheses(shot), pooling or self.cfg.pooling)


def decode_ensemble(pm: ProjectedModel, shot: Shot, cfg: EnsembleConfig) -> PoolResult:
    return HarmonyEnsemble(pm, cfg).decode(shot)


@dataclass(frozen=True, eq=False)
class LayeredResult:
    prediction: np.ndarray
    triggered: bool
    instances_used: int
    confidence: float


class LayeredDecoder:
    """Unanimous first-pass vote is final; any dissent escalates to the second ensemble."""

    def __init__(
        self,
        pm: ProjectedModel,
        n1: int,
        n2: int,
        pooling2: Pooling = "most_likely_error",
        params: Optional[PerturbationParams] = None,
    ):
        if n1 < 1 or n2 < n1:
            raise ValueError(f"layered decoding needs 1 <= n1 <= n2, got n1={n1}, n2={n2}")
        params = params or PerturbationParams()
        self.n1, self.n2 = n1, n2
        self.first = HarmonyEnsemble(pm, EnsembleConfig(size=n1, pooling="vote", params=params), rng.LAYERED_FIRST)
        self.second = HarmonyEnsemble(
            pm, EnsembleConfig(size=n2, pooling=pooling2, params=params), rng.LAYERED_SECOND
        )

    def decode(self, shot: Shot) -> LayeredResult:
        first = self.first.decode(shot)
        if first.confidence == 1.0:
            return LayeredResult(first.prediction, False, self.n1, first.confidence)
        second = self.second.decode(shot)
        logger.debug(f"Layered decoder escalated at first-pass confidence {first.confidence:.2f}")
        return LayeredResult(second.prediction, True, self.n1 + self.n2, second.confidence)


def decode_layered(
    pm: ProjectedModel,
    shot: Shot,
    n1: int,
    n2: int,
    pooling2: Pooling = "most_likely_error",
    params: Optional[PerturbationParams] = None,
) -> LayeredResult:
    return LayeredDecoder(pm, n1, n2, pooling2, params).decode(shot)
