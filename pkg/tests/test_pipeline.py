import numpy as np

import toasted
from conftest import onehot_posteriors
from finemerge import BeamParams, MergeParams, ServiceHypothesis, finemerge, local_decode, train_trigram
from finemerge.pipeline import revise_with_service

LM = train_trigram(["everyone toasted the bread", "everyone posted the letter", "the bread"])
BEAM = BeamParams(width=32, alpha=2.0, beta=0.5)
PARAMS = MergeParams(psi=toasted.PSI, omega=toasted.OMEGA_T, gamma=toasted.GAMMA)


class TestFinemerge:
    def test_recovers_toasted(self):
        P = toasted.sentence_posteriors()
        svc = ServiceHypothesis("everyone posted the", (0.9, 1.0, 0.9))
        res = finemerge(P, svc, PARAMS, BEAM, LM)
        assert not res.fallback
        assert res.transcript == "everyone toasted the"

    def test_local_alone_does_not(self):
        assert local_decode(toasted.sentence_posteriors(), None, BeamParams(alpha=0.0)) != "everyone toasted the"

    def test_zero_weights_equal_local(self):
        rng = np.random.default_rng(0)
        P = toasted.sentence_posteriors()
        svc = ServiceHypothesis("everyone posted the")
        for _ in range(3):
            psi = float(rng.uniform(1e-6, 0.5))
            res = finemerge(P, svc, MergeParams(psi, 0.0, 0.0), BEAM, LM)
            assert res.transcript == local_decode(P, LM, BEAM)
            np.testing.assert_array_equal(res.revised.probs, P.probs)

    def test_agreeing_onehot(self):
        P = onehot_posteriors("the_ bre_ad")
        svc = ServiceHypothesis("the bread")
        assert finemerge(P, svc, MergeParams(), BEAM, LM).transcript == "the bread"

    def test_empty_service_falls_back(self):
        P = onehot_posteriors("the")
        res = finemerge(P, ServiceHypothesis(""), MergeParams(), BEAM, LM)
        assert res.fallback and "empty" in res.reason
        assert res.transcript == "the"

    def test_too_long_service_falls_back(self):
        P = onehot_posteriors("the")
        res = finemerge(P, ServiceHypothesis("the bread"), MergeParams(), BEAM, LM)
        assert res.fallback and res.alignment is None
        assert res.transcript == local_decode(P, LM, BEAM)

    def test_unnormalized_service_text(self):
        P = toasted.sentence_posteriors()
        svc = ServiceHypothesis("everyone posted the")
        raw = ServiceHypothesis.from_raw("Everyone POSTED the!", [0.9, 1.0, 0.9])
        a, _, _ = revise_with_service(P, svc, PARAMS)
        b, _, _ = revise_with_service(P, raw, PARAMS)
        assert raw.transcript == svc.transcript
        np.testing.assert_array_equal(a.probs, b.probs)

    def test_precomputed_alignment_reused(self):
        P = toasted.sentence_posteriors()
        svc = ServiceHypothesis("everyone posted the")
        first = finemerge(P, svc, PARAMS, BEAM, LM)
        again = finemerge(P, svc, PARAMS, BEAM, LM, alignment=first.alignment)
        assert again.transcript == first.transcript and again.score == first.score
