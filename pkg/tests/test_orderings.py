"""
Monte Carlo orderings between decoders on paired shots.

Every decoder in a trial sees the same seeded shot stream. A 100-member
ensemble is decoded once per shot; smaller ensembles and other pooling
rules are read off the same member hypotheses, since an ensemble of size N
is exactly the first N members of a larger one with the same parameters.
Orderings hold within two combined standard errors.
"""
import math
import os
from collections import Counter
from dataclasses import dataclass
from typing import Dict

import numpy as np
import pytest

from harmony.bench.runner import run_comparison
from harmony.bench.sampling import shot_stream
from harmony.codes.generators import generate
from harmony.core.config import settings
from harmony.decoders.correlated import decode_correlated, decode_uncorrelated, project
from harmony.decoders.ensemble import HarmonyEnsemble, pool
from harmony.decoders.tnml import TnmlDecoder
from harmony.models.schemas import CodeSpec, DecoderSpec, EnsembleConfig, PerturbationParams

pytestmark = pytest.mark.slow

SURFACE = CodeSpec(family="rotated_surface", distance=3, rounds=3, p=0.04)
REPETITION = CodeSpec(family="repetition", distance=3, rounds=3, p=0.05)
ENSEMBLE_SIZES = (1, 3, 10, 30, 100)


@dataclass
class Trial:
    shots: int
    failures: Dict[str, int]

    def rate(self, name: str) -> float:
        return self.failures[name] / self.shots

    def sigma(self, *names: str) -> float:
        return math.sqrt(sum(self.rate(n) * (1.0 - self.rate(n)) for n in names) / self.shots)

    def at_most(self, a: str, b: str) -> bool:
        return self.rate(a) <= self.rate(b) + 2.0 * self.sigma(a, b)

    def closes_half_gap(self, middle: str, worse: str, better: str) -> bool:
        """`middle` recovers at least half of the distance from `worse` down to `better`."""
        target = self.rate(worse) - 0.5 * (self.rate(worse) - self.rate(better))
        return self.rate(middle) <= target + 2.0 * self.sigma(middle, worse, better)


def _workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


@pytest.fixture(scope="module")
def surface_trial() -> Trial:
    h = generate(SURFACE)
    pm = project(h)
    ensemble = HarmonyEnsemble(pm, EnsembleConfig(size=100, params=PerturbationParams(seed=17)))
    ml = TnmlDecoder(h, chi=16, exact=False)
    shots = 600
    failures: Counter = Counter()
    for shot in shot_stream(h, 23, 0, shots):
        hyps = ensemble.hypotheses(shot)
        predictions = {
            "uncorrelated": decode_uncorrelated(pm, shot).observables,
            "correlated": decode_correlated(pm, shot).observables,
            "tnml": ml.decode(shot),
            "vote": pool(hyps, "vote").prediction,
            "sum_likelihood": pool(hyps, "sum_likelihood").prediction,
        }
        for n in ENSEMBLE_SIZES:
            predictions[f"mle{n}"] = pool(hyps[:n], "most_likely_error").prediction
        for name, prediction in predictions.items():
            failures[name] += int(not np.array_equal(prediction, shot.true_observables))
    return Trial(shots, dict(failures))


@pytest.fixture(scope="module")
def repetition_trial() -> Trial:
    h = generate(REPETITION)
    pm = project(h)
    ensemble = HarmonyEnsemble(pm, EnsembleConfig(size=100, params=PerturbationParams(seed=29)))
    ml = TnmlDecoder(h, exact=True)
    shots = 2000
    failures: Counter = Counter()
    for shot in shot_stream(h, 41, 0, shots):
        hyps = ensemble.hypotheses(shot)
        predictions = {
            "mwpm": decode_uncorrelated(pm, shot).observables,
            "exact_ml": ml.decode(shot),
            "vote": pool(hyps, "vote").prediction,
            "mle": pool(hyps, "most_likely_error").prediction,
            "mle50": pool(hyps[:50], "most_likely_error").prediction,
        }
        for name, prediction in predictions.items():
            failures[name] += int(not np.array_equal(prediction, shot.true_observables))
    return Trial(shots, dict(failures))


class TestRepetitionOrderings:
    def test_exact_ml_beats_matching(self, repetition_trial):
        """Maximum likelihood is never worse than matching"""
        assert repetition_trial.at_most("exact_ml", "mwpm")

    def test_vote_ensemble_between_ml_and_matching(self, repetition_trial):
        """exact_ml <= vote ensemble <= mwpm"""
        assert repetition_trial.at_most("exact_ml", "vote")
        assert repetition_trial.at_most("vote", "mwpm")

    def test_vote_ensemble_closes_gap(self, repetition_trial):
        assert repetition_trial.closes_half_gap("vote", "mwpm", "exact_ml")

    def test_vote_not_worse_than_most_likely_error(self, repetition_trial):
        """Voting is the better pooling rule on the repetition code"""
        assert repetition_trial.at_most("vote", "mle")

    def test_most_likely_error_tracks_matching(self, repetition_trial):
        """Without hyperedges, most-likely-error pooling at N = 50 behaves like plain matching"""
        diff = abs(repetition_trial.rate("mle50") - repetition_trial.rate("mwpm"))
        assert diff <= 2.0 * repetition_trial.sigma("mle50", "mwpm")

    def test_distance_five(self, monkeypatch):
        """d = 5: converged contraction <= vote ensemble <= matching on paired shots"""
        monkeypatch.setattr(settings, "chunk_size", 250)
        code = CodeSpec(family="repetition", distance=5, rounds=5, p=0.05)
        decoders = [
            DecoderSpec(kind="tnml", chi=32),
            DecoderSpec(kind="ensemble", ensemble=EnsembleConfig(size=100, pooling="vote",
                                                                 params=PerturbationParams(seed=3))),
            DecoderSpec(kind="mwpm"),
        ]
        ml, ens, mwpm = run_comparison(generate(code), decoders, 1000, seed=43, rounds=5, threads=_workers())
        trial = Trial(1000, {"ml": ml.failures, "ensemble": ens.failures, "mwpm": mwpm.failures})
        assert trial.at_most("ml", "ensemble")
        assert trial.at_most("ensemble", "mwpm")
        assert trial.closes_half_gap("ensemble", "mwpm", "ml")


class TestSurfaceOrderings:
    def test_decoder_hierarchy(self, surface_trial):
        """tnml <= most-likely-error ensemble <= correlated <= uncorrelated"""
        assert surface_trial.at_most("tnml", "mle100")
        assert surface_trial.at_most("mle100", "correlated")
        assert surface_trial.at_most("correlated", "uncorrelated")

    def test_ensemble_closes_gap_to_tnml(self, surface_trial):
        assert surface_trial.closes_half_gap("mle100", "correlated", "tnml")

    def test_three_members_beat_correlated(self, surface_trial):
        assert surface_trial.at_most("mle3", "correlated")

    def test_larger_ensembles_do_not_hurt(self, surface_trial):
        """LER is non-increasing along N = 1, 3, 10, 30, 100"""
        for small, large in zip(ENSEMBLE_SIZES, ENSEMBLE_SIZES[1:]):
            assert surface_trial.at_most(f"mle{large}", f"mle{small}")

    def test_pooling_rules(self, surface_trial):
        """Summed likelihood and most likely error are indistinguishable at N = 100, both no worse than voting"""
        diff = abs(surface_trial.rate("sum_likelihood") - surface_trial.rate("mle100"))
        assert diff <= 2.0 * surface_trial.sigma("sum_likelihood", "mle100")
        assert surface_trial.at_most("mle100", "vote")
        assert surface_trial.at_most("sum_likelihood", "vote")


class TestLayeredSaturation:
    @pytest.fixture(scope="class")
    def layered(self):
        n1_values = (1, 2, 4, 8)
        params = PerturbationParams(seed=37)
        decoders = [DecoderSpec(kind="correlated")] + [
            DecoderSpec(kind="layered", n1=n1, n2=100, ensemble=EnsembleConfig(params=params)) for n1 in n1_values
        ]
        with pytest.MonkeyPatch.context() as mp:
            mp.setattr(settings, "chunk_size", 100)
            estimates = run_comparison(generate(SURFACE), decoders, 500, seed=47, rounds=3, threads=_workers())
        return estimates[0], dict(zip(n1_values, estimates[1:]))

    def test_improvement_saturates_by_four(self, layered):
        """Most of the gain over correlated matching is already there at n1 = 4"""
        baseline, by_n1 = layered
        four, eight = by_n1[4], by_n1[8]
        gain4 = baseline.ler_per_shot - four.ler_per_shot
        gain8 = baseline.ler_per_shot - eight.ler_per_shot
        assert gain4 >= 0.9 * gain8 - 2.0 * math.hypot(four.stderr, eight.stderr)

    def test_trigger_rate_grows_with_n1(self, layered):
        """More first-pass members give more chances of a dissenting vote"""
        _, by_n1 = layered
        assert by_n1[1].trigger_rate == 0.0
        ordered = sorted(by_n1)
        for small, large in zip(ordered, ordered[1:]):
            a, b = by_n1[small].trigger_rate, by_n1[large].trigger_rate
            sigma = math.sqrt((a * (1 - a) + b * (1 - b)) / by_n1[small].shots)
            assert b >= a - 2.0 * sigma

    def test_instance_accounting(self, layered):
        """Mean instances per shot is n1 plus the trigger rate times n2"""
        _, by_n1 = layered
        for n1, est in by_n1.items():
            assert est.mean_instances <= n1 + est.trigger_rate * 100 + 1e-9
