#!/usr/bin/env python3
"""
Lemma Verifier Tests
====================
f on the critical line, the Hessian anchor, the certificates, and the
bisection driver (the full-domain runs are slow and gated).

Usage:
    pytest test_lemma_verifier.py
    BW_RUN_SLOW=1 pytest test_lemma_verifier.py -k full
"""

import os
import logging
from fractions import Fraction

import numpy as np
import pytest

from errors import DomainError
from interval_core import Box, Interval
from lemma_verifier import (
    BASIS, IDENTITY_BASIS, REFERENCE, LemmaPoint, VerifyConfig, check_basis_containment,
    check_lemma_conclusion, certify_norm, certify_quadratic, eval_f, eval_ftilde_jet,
    float_hessian, float_hessian_tilde, full_hessian, hessian_minor, spot_check_gradient, verify,
)
from taylor_ad import IntervalMatrix

SLOW = os.getenv('BW_RUN_SLOW') == '1'

ANCHOR = np.array([
    [12, -6, 0, 0, 0],
    [-6, 12, 0, 0, 0],
    [0, 0, 24, -12, -12],
    [0, 0, -12, 24, -12],
    [0, 0, -12, -12, 24],
], dtype=float)

SMALL_DOMAIN = [(2.0, 2.01), (2.0, 2.01), (-0.01, 0.01), (-0.01, 0.01), (0.0, 0.01)]


@pytest.mark.parametrize('t', [0.0, 1 / 24, 1 / 12, 1 / 8, 1 / 6])
def test_f_vanishes_on_critical_line(t):
    assert abs(eval_f([2.0, 2.0, t, t, t])) <= 1e-12


def test_f_interval_encloses_point_values():
    box = Box.from_bounds([(2.0, 2.1), (2.05, 2.1), (0.0, 0.1), (0.02, 0.05), (0.1, 0.15)])
    enclosure = eval_f(box)
    rng = np.random.default_rng(30)
    for x in rng.uniform(box.lo, box.hi, size=(200, 5)):
        assert enclosure.contains(eval_f(x))


def test_f_rejects_wrong_arity():
    with pytest.raises(DomainError):
        eval_f([2.0, 2.0, 0.0])


def test_f_lower_bound_at_random_points():
    rng = np.random.default_rng(31)
    for x in rng.uniform([2, 2, 0, 0, 0], [2 + 1 / 6, 2 + 1 / 6, 1 / 6, 1 / 6, 1 / 6], size=(2000, 5)):
        p = LemmaPoint(*x)
        assert p.in_domain()
        assert eval_f(p) >= p.distance_sq_to_critical() - 1e-9


def test_hessian_anchor_is_exact():
    H = full_hessian(Box.point([2.0, 2.0, 0.0, 0.0, 0.0]), basis=IDENTITY_BASIS)
    assert H.contains_point(ANCHOR)
    assert H.max_width() <= 1e-9
    eig = np.linalg.eigvalsh(H.mid())
    assert np.allclose(eig, [0, 6, 18, 36, 36], atol=1e-9)
    assert np.allclose(float_hessian([2, 2, 0, 0, 0]), ANCHOR, atol=1e-9)


def test_minor_eigenvalues_at_center():
    H = hessian_minor(Box.point([2.0, 2.0, 0.0, 0.0, 0.0]))
    assert H.shape == (4, 4)
    eig = np.linalg.eigvalsh(H.mid())
    assert np.allclose(eig, [6, 18, 36, 36], atol=1e-9)
    S = BASIS.S_float
    assert H.contains_point((S.T @ ANCHOR @ S)[:4, :4], slack=1e-9)


def test_ftilde_jet_at_center():
    jet = eval_ftilde_jet(Box.point([2.0, 2.0, 0.0, 0.0, 0.0]))
    assert jet.constant.contains(0.0)
    assert all(g.contains(0.0) for g in jet.gradient())


def test_minor_encloses_float_hessians():
    box = Box.from_bounds([(2.05, 2.07), (2.1, 2.12), (-0.05, -0.03), (0.01, 0.03), (0.1, 0.12)])
    H = hessian_minor(box)
    rng = np.random.default_rng(32)
    for y in rng.uniform(box.lo, box.hi, size=(50, 5)):
        assert H.contains_point(float_hessian_tilde(y)[:4, :4], slack=1e-9)


def test_child_enclosures_not_wider_than_parent():
    box = Box.from_bounds([(2.0, 2.04), (2.0, 2.04), (-0.04, 0.0), (0.0, 0.04), (0.0, 0.04)])
    parent = hessian_minor(box)
    for child in box.bisect(0):
        assert hessian_minor(child).max_width() <= parent.max_width() + 1e-12


def test_full_domain_needs_subdivision():
    H = hessian_minor(Box.from_bounds(VerifyConfig().domain))
    passed, _ = certify_quadratic(H, 0, Box.from_bounds([(-1.0, 1.0)] * 3))
    assert not passed


def test_certificates_on_point_matrices():
    full_v = Box.from_bounds([(-1.0, 1.0)] * 3)
    zero_v = Box.point([0.0, 0.0, 0.0])
    two = IntervalMatrix.point(2 * np.eye(4))
    assert certify_quadratic(two, 1, full_v)[0]
    assert certify_norm(two, 1, full_v)[0]
    assert not certify_quadratic(IntervalMatrix.point(np.eye(4)), 0, zero_v)[0]
    assert not certify_norm(IntervalMatrix.point(np.diag([0.0, 1.0, 1.0, 1.0])), 0, zero_v)[0]
    with pytest.raises(DomainError):
        certify_quadratic(two, 4, full_v)


def test_certificate_at_center_axes():
    H = hessian_minor(Box.point([2.0, 2.0, 0.0, 0.0, 0.0]))
    zero_v = Box.point([0.0, 0.0, 0.0])
    for face in range(4):
        assert certify_quadratic(H, face, zero_v)[0]
        assert certify_norm(H, face, zero_v)[0]


def test_certified_leaf_agrees_with_float_samples():
    wbox = Box.from_bounds([(2.03, 2.04), (2.05, 2.06), (0.0, 0.01), (0.02, 0.03), (0.1, 0.11)])
    vbox = Box.from_bounds([(-0.1, 0.1)] * 3)
    H = hessian_minor(wbox)
    passed, margin = certify_quadratic(H, 2, vbox)
    assert passed and margin > 0
    rng = np.random.default_rng(33)
    for _ in range(100):
        y = rng.uniform(wbox.lo, wbox.hi)
        free = rng.uniform(-0.1, 0.1, size=3)
        v = np.array([free[0], free[1], 1.0, free[2]])
        Hf = float_hessian_tilde(y)[:4, :4]
        assert v @ Hf @ v >= 2 * v @ v - 1e-9


def test_basis_containment():
    result = check_basis_containment()
    assert result['ok']
    assert BASIS.check_orthogonal()
    image = BASIS.apply_transpose([Interval(2.0, 2.0), Interval(2.0, 2.0),
                                   Interval.from_fraction(Fraction(1, 6))] + [Interval(0.0, 0.0)] * 2)
    assert image[0] == Interval(2.0, 2.0)
    assert -0.14 <= image[2].lo and image[2].hi <= 0.14
    assert 0.0 <= image[4].lo and image[4].hi <= 0.3


def test_gradient_spot_check():
    result = spot_check_gradient()
    assert result['ok']
    assert result['generic_point']['fd_gradient_norm'] > 1e-3
    assert len(result['critical_line']) == 5


def test_lemma_conclusion_numeric_form():
    result = check_lemma_conclusion(samples=10_000, seed=34)
    assert result['ok']
    assert result['violations'] == 0


def test_verify_small_domain_and_worker_independence():
    cfg = VerifyConfig(degree=4, domain=list(SMALL_DOMAIN))
    report = verify('norm', cfg)
    assert report.verified
    assert report.subsets_processed >= 4
    assert report.frontier_size == 0
    parallel = verify('norm', VerifyConfig(degree=4, domain=list(SMALL_DOMAIN), workers=2))
    assert parallel.subsets_processed == report.subsets_processed
    assert parallel.tasks_evaluated == report.tasks_evaluated
    data = report.to_json()
    assert data['reference_subsets'] == REFERENCE['norm']['subsets']
    assert data['log_format_version'] == 1


def test_generation_progress_is_logged(caplog):
    with caplog.at_level(logging.INFO, logger='lemma_verifier'):
        verify('norm', VerifyConfig(degree=4, domain=list(SMALL_DOMAIN)))
    lines = [r.getMessage() for r in caplog.records if r.getMessage().startswith('Generation')]
    assert lines
    assert all('needs about' in line for line in lines)
    assert lines[0].startswith('Generation 0: 4 tasks')


def test_verify_budget_exhausted():
    report = verify('quadratic', VerifyConfig(max_subsets=10, degree=4))
    assert report.status == 'BUDGET_EXCEEDED'
    assert report.tasks_evaluated == 10
    assert 0 < len(report.frontier) <= 20


def test_verify_negative_control_outside_domain():
    domain = [(2.0, 2.5), (2.0, 2.5), (-0.5, 0.5), (-0.5, 0.5), (0.0, 0.9)]
    report = verify('quadratic', VerifyConfig(max_subsets=60, degree=4, domain=domain))
    assert report.status in ('FAILED', 'BUDGET_EXCEEDED')


def test_verify_config_validation():
    with pytest.raises(DomainError):
        VerifyConfig(mode='exact').validate()
    with pytest.raises(DomainError):
        VerifyConfig(degree=7).validate()
    with pytest.raises(DomainError):
        VerifyConfig(max_subsets=0).validate()
    with pytest.raises(DomainError):
        verify('cubic')


@pytest.mark.skipif(not SLOW, reason='set BW_RUN_SLOW=1 for the full-domain certification')
@pytest.mark.parametrize('ineq', ['norm', 'quadratic'])
def test_full_domain_verified(ineq):
    report = verify(ineq, VerifyConfig(workers=os.cpu_count() or 1))
    assert report.verified
    assert 100 <= report.subsets_processed <= 1_000_000
