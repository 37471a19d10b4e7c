"""Projective measurement synthesis: algebra, attainment, sampling."""

import numpy as np
import pytest

from qcrb import analysis, errors, matkernel, measurement, model
from qcrb.model import FisherData, TangentFrame


def qubit_frame():
    # phi(t) = (cos t/2, sin t/2) at t = 0: lift (0,1), JS = 1
    phi = np.array([1.0, 0.0], dtype=complex)
    lifts = np.array([[0.0], [1.0]], dtype=complex)
    return TangentFrame(theta=np.array([0.0]), phi=phi, lifts=lifts)


def test_qubit_hand_construction():
    # x = (0,1): projectors onto (1,+-1)/sqrt2, outcomes +-1, variance 1
    frame = qubit_frame()
    x = np.array([[0.0], [1.0]], dtype=complex)
    ev = measurement.EstimationVectors(X=x, phi=frame.phi)
    pvm = measurement.pvm_from_vectors(ev)
    assert pvm.m == 1 and pvm.dim == 2 and len(pvm.outcomes) == 2
    offsets = sorted(float(o[0]) for o, _ in pvm.outcomes)
    assert abs(offsets[0] + 1.0) <= 1e-12 and abs(offsets[1] - 1.0) <= 1e-12
    for offset, proj in pvm.outcomes:
        sign = 1.0 if offset[0] > 0 else -1.0
        vec = np.array([1.0, sign]) / np.sqrt(2.0)
        assert np.abs(proj - np.outer(vec, vec)).max() <= 1e-12
    v, unbiased = measurement.covariance_of_pvm(pvm, frame)
    assert unbiased
    assert abs(v[0, 0] - 1.0) <= 1e-12


def test_outcome_scaling():
    frame = qubit_frame()
    c = 1.7
    x = np.array([[0.0], [c]], dtype=complex)
    pvm = measurement.pvm_from_vectors(measurement.EstimationVectors(X=x, phi=frame.phi))
    v, _ = measurement.covariance_of_pvm(pvm, frame)
    assert abs(v[0, 0] - c * c) <= 1e-12
    offs = sorted(abs(float(o[0])) for o, _ in pvm.outcomes)
    assert abs(offs[-1] - c) <= 1e-12


def test_pvm_rejects_nonorthogonal_x():
    phi = np.array([1.0, 0.0], dtype=complex)
    x = np.array([[0.5], [1.0]], dtype=complex)  # <phi|x> != 0
    with pytest.raises(errors.DomainError):
        measurement.pvm_from_vectors(measurement.EstimationVectors(X=x, phi=phi))


def test_pvm_rejects_noncommuting_x():
    mdl = model.catalog_shifted_number(0, [0.0, 0.0])
    fr = model.tangent_frame(mdl, mdl.theta0)
    # the raw lifts have Im X*X = Jt != 0
    ev = measurement.EstimationVectors(X=fr.lifts, phi=fr.phi)
    with pytest.raises(errors.NotCommuting):
        measurement.pvm_from_vectors(ev)


def test_quasi_classical_pvm_attains_inverse_fisher():
    mdl = model.catalog_spin_rotation(1.0, 0.0, [0.7, 1.1])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    ev = measurement.optimal_vectors_quasi_classical(fr, fd)
    pvm = measurement.pvm_from_vectors(ev)
    res = measurement.pvm_algebra_residuals(pvm)
    assert max(res.values()) <= 1e-9
    v, unbiased = measurement.covariance_of_pvm(pvm, fr)
    assert unbiased
    assert np.abs(v - matkernel.inv_psd(fd.JS)).max() <= 1e-8
    # reconstruction identity: sum_k offset_k E_k phi = x^i
    recon = measurement.reconstruction_residual(pvm, ev)
    assert recon <= 1e-8


def test_quasi_classical_requires_vanishing_jt():
    mdl = model.catalog_shifted_number(0, [0.0, 0.0])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    with pytest.raises(errors.NotQuasiClassical):
        measurement.optimal_vectors_quasi_classical(fr, fd)


def test_naimark_frame_reproduces_gram():
    mdl = model.catalog_shifted_number(0, [0.2, -0.4])
    fd = model.fisher_data(model.tangent_frame(mdl, mdl.theta0))
    nf = measurement.naimark_frame(fd)
    assert nf.dim == 5
    assert abs(nf.phi[0] - 1.0) <= 1e-12
    assert np.abs(nf.lifts.conj().T @ nf.lifts - fd.gram).max() <= 1e-10
    assert np.abs(nf.lifts.conj().T @ nf.phi).max() <= 1e-12


def test_coherent_pvm_attains_bound():
    mdl = model.catalog_shifted_number(0, [0.2, -0.4])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    for g in (np.eye(2), np.array([[2.0, 0.4], [0.4, 1.0]])):
        rep = analysis.cr_bound_coherent(fd, g)
        nf = measurement.naimark_frame(fd, theta=mdl.theta0)
        ev = measurement.optimal_vectors_coherent(nf, fd, g)
        pvm = measurement.pvm_from_vectors(ev)
        assert max(measurement.pvm_algebra_residuals(pvm).values()) <= 1e-9
        v, unbiased = measurement.covariance_of_pvm(pvm, nf)
        assert unbiased
        assert abs(np.sum(g * v) - rep.value) <= 1e-8
        assert np.abs(v - rep.V_opt).max() <= 1e-8


def test_coherent_pvm_squeezed_model():
    mdl = model.catalog_squeezed([0.3, -0.2, 0.4, 0.7])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    g = np.diag([1.0, 2.0, 1.0, 3.0])
    rep = analysis.cr_bound_coherent(fd, g)
    nf = measurement.naimark_frame(fd, theta=mdl.theta0)
    ev = measurement.optimal_vectors_coherent(nf, fd, g)
    pvm = measurement.pvm_from_vectors(ev)
    assert max(measurement.pvm_algebra_residuals(pvm).values()) <= 1e-9
    v, unbiased = measurement.covariance_of_pvm(pvm, nf)
    assert unbiased
    assert abs(np.sum(g * v) - rep.value) <= 1e-7


def test_lemma_ordering_on_constructed_pvm():
    # V >= Re X*X >= JS^{-1} up to eigen dust
    mdl = model.catalog_shifted_number(0, [0.2, -0.4])
    fd = model.fisher_data(model.tangent_frame(mdl, mdl.theta0))
    nf = measurement.naimark_frame(fd)
    ev = measurement.optimal_vectors_coherent(nf, fd, np.eye(2))
    pvm = measurement.pvm_from_vectors(ev)
    v, _ = measurement.covariance_of_pvm(pvm, nf)
    rexx = (ev.X.conj().T @ ev.X).real
    jsinv = matkernel.inv_psd(fd.JS)
    assert matkernel.psd_geq(v + 1e-9 * np.eye(2), rexx)
    assert matkernel.psd_geq(rexx + 1e-9 * np.eye(2), jsinv)


def test_remainder_projector_completes():
    mdl = model.catalog_spin_rotation(2.0, 0.0, [0.8, 0.5])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    ev = measurement.optimal_vectors_quasi_classical(fr, fd)
    pvm = measurement.pvm_from_vectors(ev)
    # dim 5 state space, 3-dimensional measurement span, so a remainder shows up
    assert pvm.dim == 5
    total = sum(proj for _, proj in pvm.outcomes)
    assert np.abs(total - np.eye(5)).max() <= 1e-9
    assert max(measurement.pvm_algebra_residuals(pvm).values()) <= 1e-9
    v, unbiased = measurement.covariance_of_pvm(pvm, fr)
    assert unbiased
    assert np.abs(v - matkernel.inv_psd(fd.JS)).max() <= 1e-8


def test_inflate_covariance():
    frame = qubit_frame()
    x = np.array([[0.0], [1.0]], dtype=complex)
    pvm = measurement.pvm_from_vectors(measurement.EstimationVectors(X=x, phi=frame.phi))
    v, _ = measurement.covariance_of_pvm(pvm, frame)
    infl = measurement.inflate_covariance(pvm, np.array([[0.5]]))
    vi = measurement.analytic_covariance(infl, frame)
    assert abs(vi[0, 0] - 1.5) <= 1e-12
    same = measurement.inflate_covariance(pvm, np.zeros((1, 1)))
    assert np.abs(measurement.analytic_covariance(same, frame) - v).max() <= 1e-12
    with pytest.raises(errors.DomainError):
        measurement.inflate_covariance(pvm, np.array([[-0.1]]))


def test_inflation_preserves_mean():
    mdl = model.catalog_shifted_number(0, [0.2, -0.4])
    fd = model.fisher_data(model.tangent_frame(mdl, mdl.theta0))
    nf = measurement.naimark_frame(fd, theta=mdl.theta0)
    ev = measurement.optimal_vectors_coherent(nf, fd, np.eye(2))
    pvm = measurement.pvm_from_vectors(ev)
    v0 = np.array([[1.0, 0.0], [0.0, 2.0]])
    infl = measurement.inflate_covariance(pvm, v0)
    assert abs(infl.shifts.mean(axis=0)).max() <= 1e-12
    v, _ = measurement.covariance_of_pvm(pvm, nf)
    vi = measurement.analytic_covariance(infl, nf)
    assert np.abs(vi - (v + v0)).max() <= 1e-12


def test_sampling_deterministic_and_consistent():
    mdl = model.catalog_spin_rotation(1.0, 0.0, [0.7, 1.1])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    ev = measurement.optimal_vectors_quasi_classical(fr, fd)
    pvm = measurement.pvm_from_vectors(ev)
    a = measurement.sample_outcomes(pvm, fr, 5000, 42)
    b = measurement.sample_outcomes(pvm, fr, 5000, 42)
    assert np.array_equal(a.samples, b.samples)
    c = measurement.sample_outcomes(pvm, fr, 5000, 43)
    assert not np.array_equal(a.samples, c.samples)
    se = np.sqrt(np.diag(a.analytic_cov) / a.count)
    assert np.abs(a.mean - fr.theta).max() <= 4.0 * se.max()


def test_sampling_single_outcome_identity():
    phi = np.array([1.0, 0.0], dtype=complex)
    pvm = measurement.Pvm(m=1, dim=2,
                          outcomes=[(np.zeros(1), np.eye(2, dtype=complex))])
    frame = qubit_frame()
    r = measurement.sample_outcomes(pvm, frame, 100, 0)
    assert np.abs(r.samples - frame.theta[0]).max() == 0.0
    assert abs(r.cov[0, 0]) <= 1e-15


def test_bad_probability():
    # projector corrupted so <phi|E|phi> goes negative
    phi = np.array([1.0, 0.0], dtype=complex)
    bad = [(np.zeros(1), -0.2 * np.eye(2, dtype=complex)),
           (np.zeros(1), 1.2 * np.eye(2, dtype=complex))]
    pvm = measurement.Pvm(m=1, dim=2, outcomes=bad)
    with pytest.raises(errors.BadProbability):
        measurement.outcome_probabilities(pvm, phi)


def test_marginal_vectors_variance():
    mdl = model.catalog_spin_rotation(1.5, 0.5, [0.9, 0.3])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    jsinv = matkernel.inv_psd(fd.JS)
    for i in (0, 1):
        ev = measurement.marginal_vectors(fr, fd, i)
        pvm = measurement.pvm_from_vectors(ev)
        v, unbiased = measurement.covariance_of_pvm(pvm, fr)
        assert abs(v[0, 0] - jsinv[i, i]) <= (1e-10 if i == 0 else 1.0)
        if i == 0:
            assert unbiased


def test_exclusiveness_extraction_check():
    mdl = model.catalog_shifted_number(0, [0.2, -0.4])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    ev = measurement.marginal_vectors(fr, fd, 0)
    pvm = measurement.pvm_from_vectors(ev)
    stat = measurement.exclusiveness_extraction_check(pvm, fr, 1)
    assert stat <= 1e-8
    # a detuned measurement misses the marginal bound
    bad = measurement.pvm_from_vectors(
        measurement.EstimationVectors(X=1.1 * ev.X, phi=ev.phi))
    with pytest.raises(errors.PreconditionNotMet):
        measurement.exclusiveness_extraction_check(bad, fr, 1)


def test_pvm_json_roundtrip():
    mdl = model.catalog_spin_rotation(1.0, 0.0, [0.7, 1.1])
    fr = model.tangent_frame(mdl, mdl.theta0)
    fd = model.fisher_data(fr)
    ev = measurement.optimal_vectors_quasi_classical(fr, fd)
    pvm = measurement.pvm_from_vectors(ev)
    obj = measurement.pvm_to_obj(pvm, theta=fr.theta)
    back = measurement.pvm_from_obj(obj, pvm.m, theta=fr.theta)
    assert back.dim == pvm.dim and len(back.outcomes) == len(pvm.outcomes)
    for (oa, pa), (ob, pb) in zip(pvm.outcomes, back.outcomes):
        assert np.abs(oa - ob).max() <= 1e-15
        assert np.abs(pa - pb).max() <= 1e-15
    with pytest.raises(errors.SchemaError):
        measurement.pvm_from_obj([{"outcome": [0.0]}], 1)
