import numpy as np
import pytest

from wernerlab.analysis import fidelity
from wernerlab.errors import (
    EmptyDataError,
    OutOfRangeError,
    SingularSystemError,
    UnknownLabelError,
    UnphysicalStateError,
)
from wernerlab.polarimetry import (
    AnalyzerSetting,
    CoincidenceRecord,
    SourceConfig,
    born_probability,
    simulate_counts,
    tomographic_settings,
)
from wernerlab.qlinalg import min_eigenvalue
from wernerlab.states import bell_state, pure_to_density, werner_phi_minus
from wernerlab.tomography import (
    LinearInversion,
    MaximumLikelihood,
    bootstrap_errors,
    linear_reconstruct,
    mle_reconstruct,
    single_qubit_reconstruct,
)

from conftest import random_density

SCHEDULE = tomographic_settings()


def exact_records(rho, rate=1e6, duration=1.0, accidentals=0.0):
    cfg = SourceConfig(pair_rate=rate, accidental_rate=accidentals, duration=duration, seed=0)
    return simulate_counts(rho, SCHEDULE, cfg, exact=True)


# ------------------------------------------------------------ linear path

def test_linear_inversion_roundtrip_random_states(rng):
    for _ in range(5):
        rho = random_density(rng)
        est = LinearInversion().fit(exact_records(rho))
        np.testing.assert_allclose(est.matrix_, rho, atol=2e-6)
        assert est.matrix_.trace().real == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(est.matrix_, est.matrix_.conj().T, atol=1e-12)


def test_linear_inversion_werner_spectrum():
    rho = werner_phi_minus(0.801)
    rec = linear_reconstruct(exact_records(rho))
    np.testing.assert_allclose(rec.matrix, rho, atol=2e-6)
    assert rec.min_eigenvalue == pytest.approx((1 - 0.801) / 4, abs=1e-5)


def test_linear_inversion_predict_gives_probabilities():
    rho = werner_phi_minus(0.5)
    est = LinearInversion().fit(exact_records(rho))
    probs = est.predict(SCHEDULE)
    expected = [born_probability(rho, s) for s in SCHEDULE]
    np.testing.assert_allclose(probs, expected, atol=1e-5)


def test_linear_inversion_wrong_record_count():
    rho = werner_phi_minus(0.5)
    recs = exact_records(rho)
    with pytest.raises(SingularSystemError):
        LinearInversion().fit(recs[:15])
    with pytest.raises(SingularSystemError):
        LinearInversion().fit([])


def test_linear_inversion_missing_normalization_block():
    # replace the HH/HV/VV/VH block with repeated diagonal settings
    recs = exact_records(werner_phi_minus(0.5))
    broken = [
        CoincidenceRecord(AnalyzerSetting("D", "D"), r.duration, r.count) for r in recs
    ]
    with pytest.raises((EmptyDataError, SingularSystemError)):
        LinearInversion().fit(broken)


def test_linear_inversion_duplicate_settings_singular():
    recs = exact_records(werner_phi_minus(0.5))
    dup = list(recs[:4]) + [recs[4]] * 12
    with pytest.raises(SingularSystemError):
        LinearInversion().fit(dup)


def test_linear_inversion_negative_eigenvalue_on_noisy_pure_state():
    rho = pure_to_density(bell_state("phi-minus"))
    recs = simulate_counts(rho, SCHEDULE, SourceConfig(seed=0))
    rec = linear_reconstruct(recs)
    assert rec.min_eigenvalue < 0


def test_linear_estimator_params():
    est = LinearInversion(cond_limit=5e9)
    assert est.get_params() == {"cond_limit": 5e9}
    est.set_params(cond_limit=1e10)
    assert est.cond_limit == 1e10
    with pytest.raises(ValueError):
        est.set_params(bogus=1)
    assert "LinearInversion" in repr(est)


# --------------------------------------------------------------- MLE path

def test_mle_exact_data_recovers_state():
    for x in (0.0, 0.405, 0.801):
        rho = werner_phi_minus(x)
        result = mle_reconstruct(exact_records(rho))
        assert result.converged
        assert fidelity(result.rho, rho) > 1 - 1e-9
        np.testing.assert_allclose(result.rho, rho, atol=1e-5)
        assert result.cost < 1e-9


def test_mle_repairs_unphysical_linear_estimate():
    rho = pure_to_density(bell_state("phi-minus"))
    recs = simulate_counts(rho, SCHEDULE, SourceConfig(seed=0))
    assert linear_reconstruct(recs).min_eigenvalue < 0
    result = mle_reconstruct(recs)
    assert min_eigenvalue(result.rho) >= -1e-9
    assert result.rho.trace().real == pytest.approx(1.0, abs=1e-10)
    assert result.cost > 0
    assert fidelity(result.rho, rho) > 0.98


def test_mle_estimator_attributes_and_history():
    recs = simulate_counts(
        pure_to_density(bell_state("phi-minus")), SCHEDULE, SourceConfig(seed=0)
    )
    est = MaximumLikelihood().fit(recs)
    assert est.converged_
    assert est.iterations_ > 0
    assert est.n_evaluations_ > est.iterations_
    hist = np.asarray(est.cost_history_)
    assert np.all(np.diff(hist) <= 1e-12)  # best-so-far cost never rises
    assert hist[-1] == pytest.approx(est.cost_, abs=1e-15)
    probs = est.predict(SCHEDULE)
    assert np.all(probs >= -1e-12)
    assert probs.shape == (16,)


def test_mle_count_scaling_invariance():
    """Scaling every count (and the duration) leaves the estimate unchanged."""
    rho = werner_phi_minus(0.801)
    recs = simulate_counts(rho, SCHEDULE, SourceConfig(seed=5))
    scaled = [
        CoincidenceRecord(r.setting, r.duration * 10, r.count * 10) for r in recs
    ]
    a = mle_reconstruct(recs)
    b = mle_reconstruct(scaled)
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-6)


def test_mle_poisson_objective():
    rho = werner_phi_minus(0.801)
    recs = simulate_counts(rho, SCHEDULE, SourceConfig(seed=2))
    gauss = mle_reconstruct(recs)
    pois = mle_reconstruct(recs, objective="poisson")
    assert min_eigenvalue(pois.rho) >= -1e-9
    assert fidelity(gauss.rho, pois.rho) > 0.999
    with pytest.raises(UnknownLabelError):
        mle_reconstruct(recs, objective="huber")


def test_mle_seed_matrix_accepted():
    rho = werner_phi_minus(0.801)
    recs = simulate_counts(rho, SCHEDULE, SourceConfig(seed=1))
    seeded = mle_reconstruct(recs, seed_matrix=rho)
    unseeded = mle_reconstruct(recs)
    # different starting points land on physically equivalent optima
    assert seeded.converged
    assert min_eigenvalue(seeded.rho) >= -1e-9
    assert fidelity(seeded.rho, unseeded.rho) > 0.999


def test_mle_deterministic():
    recs = simulate_counts(
        pure_to_density(bell_state("phi-minus")), SCHEDULE, SourceConfig(seed=0)
    )
    a = mle_reconstruct(recs)
    b = mle_reconstruct(recs)
    assert np.array_equal(a.rho, b.rho)
    assert a.cost == b.cost


def test_mle_estimator_params_roundtrip():
    est = MaximumLikelihood(objective="poisson", ftol=1e-8)
    params = est.get_params()
    assert params["objective"] == "poisson"
    assert params["ftol"] == 1e-8
    clone = MaximumLikelihood(**params)
    assert clone.get_params() == params


# ------------------------------------------------------------ single qubit

def _single_records(counts, duration=1.0):
    return [
        CoincidenceRecord(AnalyzerSetting(label), duration, c)
        for label, c in counts.items()
    ]


def test_single_qubit_reconstruct_example():
    rho = single_qubit_reconstruct(
        _single_records({"H": 500, "V": 500, "D": 750, "R": 500})
    )
    np.testing.assert_allclose(rho, [[0.5, 0.25], [0.25, 0.5]], atol=1e-12)


def test_single_qubit_reconstruct_circular():
    # pure |R>: P(H) = P(V) = P(D) = 1/2, P(R) = 1
    rho = single_qubit_reconstruct(
        _single_records({"H": 500, "V": 500, "D": 500, "R": 1000})
    )
    np.testing.assert_allclose(rho, [[0.5, 0.5j], [-0.5j, 0.5]], atol=1e-12)


def test_single_qubit_reconstruct_rescales_slight_excess():
    # sampling noise can push the Bloch vector slightly outside the sphere
    rho = single_qubit_reconstruct(
        _single_records({"H": 1010, "V": 990, "D": 2000, "R": 1000})
    )
    w = np.linalg.eigvalsh(rho)
    assert w.min() >= -1e-12
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)


def test_single_qubit_reconstruct_error_paths():
    with pytest.raises(UnphysicalStateError):
        single_qubit_reconstruct(
            _single_records({"H": 1500, "V": 500, "D": 2000, "R": 1000})
        )
    with pytest.raises(UnknownLabelError):
        single_qubit_reconstruct(_single_records({"H": 1, "V": 1, "D": 1}))
    bad = _single_records({"H": 1, "V": 1, "D": 1})
    bad.append(CoincidenceRecord(AnalyzerSetting("R", "H"), 1.0, 1))
    with pytest.raises(UnknownLabelError):
        single_qubit_reconstruct(bad)
    with pytest.raises(EmptyDataError):
        single_qubit_reconstruct(
            _single_records({"H": 0, "V": 0, "D": 0, "R": 0})
        )


# ---------------------------------------------------------------- bootstrap

def test_bootstrap_identity_resampler_gives_zero_spread():
    recs = simulate_counts(
        werner_phi_minus(0.801), SCHEDULE, SourceConfig(seed=0)
    )
    errs = bootstrap_errors(recs, n_replicas=3, resampler=lambda rng, c: c)
    for key in ("x", "fidelity", "linear_entropy", "tangle", "chsh_s"):
        assert errs[key] == pytest.approx(0.0, abs=1e-12)


def test_bootstrap_errors_reasonable_scale():
    recs = simulate_counts(
        werner_phi_minus(0.801), SCHEDULE, SourceConfig(seed=0)
    )
    errs = bootstrap_errors(recs, n_replicas=12, seed=1)
    assert 0.001 < errs["x"] < 0.05
    assert 0.001 < errs["fidelity"] < 0.05
    assert errs["tangle"] > 0
    # deterministic for a fixed seed
    again = bootstrap_errors(recs, n_replicas=12, seed=1)
    assert errs == again
    assert bootstrap_errors(recs, n_replicas=12, seed=2) != errs


def test_bootstrap_needs_replicas():
    recs = simulate_counts(
        werner_phi_minus(0.801), SCHEDULE, SourceConfig(seed=0)
    )
    with pytest.raises(OutOfRangeError):
        bootstrap_errors(recs, n_replicas=1)
