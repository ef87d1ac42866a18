"""
End-to-end property checks over seeded random corpora.

These run the default Jacobi solver over a few hundred Choi matrices and are
marked slow; deselect with ``-m "not slow"``.
"""

import numpy as np
import pytest

from choi_ladder.certification import (
    certify_channel,
    certify_cp,
    certify_subchannel,
    crosscheck_dual_cp,
    subchannel_trace_matrix,
)
from choi_ladder.constructions import (
    builtin_oracle,
    random_dilation,
    random_kraus_map,
    traceout_channel,
)
from choi_ladder.linalg import hermitian_eig
from choi_ladder.maps import KrausMap, KrausOracle, choi_from_kraus, kraus_from_choi, kraus_sum
from choi_ladder.truncation import (
    geometric_decay_operator,
    operator_norm,
    residual_schedule,
    schatten_norm,
    svd_tail_norm,
)

pytestmark = [pytest.mark.slow, pytest.mark.integration]

CORPUS_SEED = 1729


@pytest.fixture(scope="module")
def kraus_corpus():
    """200 random Kraus maps with dimensions up to 8 and at most 5 operators."""
    rng = np.random.default_rng(CORPUS_SEED)
    corpus = []
    for _ in range(200):
        dim_in, dim_out = (int(d) for d in rng.integers(1, 9, size=2))
        count = int(rng.integers(1, 6))
        corpus.append(random_kraus_map(dim_in, dim_out, count, rng))
    return corpus


@pytest.fixture(scope="module")
def dilation_corpus():
    """50 random dilations with dim_K, dim_H up to 4 and arbitrary projection rank."""
    rng = np.random.default_rng(CORPUS_SEED + 1)
    corpus = []
    for _ in range(50):
        dim_k, dim_h = (int(d) for d in rng.integers(1, 5, size=2))
        q_rank = int(rng.integers(0, dim_k + 1))
        corpus.append(random_dilation(dim_k, dim_h, rng, q_rank=q_rank))
    return corpus


class TestTransposeRejection:
    def test_every_level_has_witness(self):
        oracle = builtin_oracle("transpose", {}, (4, 4))

        report = certify_cp(oracle, [2, 3, 4])

        assert report.verdicts.cp.passed is False
        for row in report.levels:
            assert row.choi_psd is False
            assert row.choi_min_eigenvalue == pytest.approx(-1.0, abs=1e-9)


class TestKrausCorpus:
    """CP necessity, Kraus round trip and duality over the random corpus."""

    def test_all_pass_cp(self, kraus_corpus):
        for K in kraus_corpus:
            report = certify_cp(KrausOracle(K))

            assert report.passed is True, report.model_dump()
            assert report.schedule[-1] == max(K.dim_in, K.dim_out)
            assert min(row.choi_min_eigenvalue for row in report.levels) >= -1e-9

    def test_kraus_round_trip(self, kraus_corpus):
        for K in kraus_corpus:
            C = choi_from_kraus(K)

            rebuilt = choi_from_kraus(kraus_from_choi(C))

            assert np.max(np.abs(rebuilt.matrix - C.matrix)) <= 1e-9

    def test_extracted_count_is_choi_rank(self, kraus_corpus):
        for K in kraus_corpus[:50]:
            extracted = kraus_from_choi(choi_from_kraus(K))
            assert len(extracted) <= min(len(K), K.dim_in * K.dim_out)

    def test_dual_crosscheck(self, kraus_corpus):
        for index, K in enumerate(kraus_corpus):
            assert crosscheck_dual_cp(K, tol=1e-9, samples=10, seed=index) is True


class TestSubchannelCharacterization:
    def test_coshift(self):
        oracle = builtin_oracle("coshift-subchannel", {}, (6, 6))

        sub = certify_subchannel(oracle, [2, 4, 6])
        channel = certify_channel(oracle, [2, 4, 6])

        assert sub.passed is True
        np.testing.assert_allclose(
            subchannel_trace_matrix(oracle, 6), np.diag([0, 1, 1, 1, 1, 1]), atol=1e-12
        )
        assert channel.verdicts.channel is False
        assert channel.levels[0].trace_preservation_max_dev == pytest.approx(1.0)

    def test_doubled_identity(self):
        K = KrausMap.from_operators([np.sqrt(2) * np.eye(4)])

        report = certify_subchannel(KrausOracle(K), [2, 4])

        assert report.verdicts.subchannel is False
        assert report.levels[-1].subchannel_max_excess == pytest.approx(1.0, abs=1e-9)


class TestTraceoutCorpus:
    def test_outputs_are_subchannels(self, dilation_corpus):
        for spec in dilation_corpus:
            K = traceout_channel(spec)

            assert certify_subchannel(KrausOracle(K), tol=1e-8).passed is True

            total = kraus_sum(K)
            rank = round(np.trace(spec.projection).real)
            if rank == spec.dim_k:
                assert operator_norm(total - np.eye(spec.dim_k)) <= 1e-8
            else:
                assert hermitian_eig(total).max_eigenvalue <= 1 + 1e-8


class TestSchattenSuite:
    @pytest.mark.parametrize("p", [1, 2, "inf"])
    def test_tail_formula(self, p):
        rng = np.random.default_rng(CORPUS_SEED + 2)
        for _ in range(100):
            rows, cols = (int(d) for d in rng.integers(1, 9, size=2))
            g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
            m = int(rng.integers(0, min(rows, cols) + 1))

            assert svd_tail_norm(g, p, m) >= 0.0

    def test_geometric_residuals(self):
        table = residual_schedule(geometric_decay_operator(48), 1, [2, 4, 8])

        np.testing.assert_allclose(
            [row.residual for row in table.rows], [2.0**-2, 2.0**-4, 2.0**-8], atol=1e-12
        )

    @pytest.mark.parametrize("p", [1, 2, 3.5, "inf"])
    def test_ideal_bound(self, p):
        rng = np.random.default_rng(CORPUS_SEED + 3)
        for _ in range(100):
            d = int(rng.integers(1, 7))
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))

            bound = operator_norm(a) * schatten_norm(g, p)

            assert schatten_norm(a @ g, p) <= bound * (1 + 1e-9)
            assert schatten_norm(g @ a, p) <= bound * (1 + 1e-9)
