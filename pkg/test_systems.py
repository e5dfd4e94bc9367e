# -*- coding: utf-8 -*-
import numpy as np

from lsvreg.config import GlobalConfig
from lsvreg.exceptions import (ConditionFailed, DimensionMismatch,
                               InconsistencyError, NotASolution)
from lsvreg.polyhedra import PolyhedralSet
from lsvreg.regularity import Status, check_metric_regularity
from lsvreg.setmaps import NormalConeMap, single_valued
from lsvreg.smoothmaps import PolyMap
from lsvreg.systems import (ConstraintSystem, VariationalSystem, _normal_coderivative,
                            _vs_blocks, alpha_sweep, compile_constraint_system,
                            compile_variational_system, compiled_coderivative,
                            cs_metric2_regularity_polyhedral,
                            cs_metric2_regularity_unconstrained,
                            cs_metric_regularity, vs_metric2_regularity,
                            vs_metric_regularity, vs_T_coderivative)

R_PLUS = PolyhedralSet.from_rows(1, A=[[-1.0]], b=[0.0])
R_MINUS = PolyhedralSet.from_rows(1, A=[[1.0]], b=[0.0])
IDENTITY_T = single_valued(PolyMap.from_text(1, ['x1']))


def system(phi, omega=None):
    omega = PolyhedralSet.whole(1) if omega is None else omega
    return ConstraintSystem(PolyMap.from_text(2, [phi]), omega, IDENTITY_T)


def test_constraint_system_basics():
    cs = system('x1 - x2')
    assert (cs.k, cs.l, cs.p, cs.q) == (1, 1, 1, 1)
    assert cs.unconstrained
    x, sigma = cs.check_solution([0.0], [0.0])
    assert x.tolist() == [0.0] and sigma.tolist() == [0.0]
    try:
        cs.check_solution([2.0], [2.0])
        raise AssertionError("0 is not in T(2)")
    except NotASolution:
        pass
    for point in (([1.0], [0.0]), ([-1.0], [-1.0])):
        try:
            system('x1 - x2', R_PLUS).check_solution(*point)
            raise AssertionError(f'{point} is not a solution')
        except NotASolution as err:
            assert not err
    try:
        ConstraintSystem(PolyMap.from_text(3, ['x1']), R_PLUS, IDENTITY_T)
        raise AssertionError('Phi has one variable too many')
    except DimensionMismatch:
        pass
    again = ConstraintSystem.from_payload(cs.to_payload())
    assert again.phi.to_text() == cs.phi.to_text()
    G, P = compile_constraint_system(cs)
    assert G.out_dim == cs.k + cs.p + cs.q
    assert P.in_dim == cs.k + cs.l and P.out_dim == G.out_dim
    K = compiled_coderivative(cs, [0.0], [0.0])
    assert K.arg_dim == cs.k + cs.p + cs.q


def test_constraint_system_regularity():
    verdict = cs_metric_regularity(system('x1 - x2'), [0.0], [0.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['details']['(c)'] is True
    assert verdict['details']['compiled'] == Status.CertifiedYes
    verdict = cs_metric_regularity(system('x1^2'), [0.0], [0.0])
    assert verdict['status'] == Status.CertifiedNo
    assert verdict['witness']['z_nu'] is not None
    verdict = cs_metric2_regularity_polyhedral(system('x1 - x2'), [0.0], [0.0],
                                               [1.0, 1.0])
    assert verdict['status'] == Status.SufficientConditionHolds
    verdict = cs_metric2_regularity_unconstrained(system('x1^2'), [0.0],
                                                  [0.0], [1.0, 0.0])
    assert verdict['status'] == Status.SufficientConditionHolds
    verdict = cs_metric2_regularity_polyhedral(system('x1^2', R_PLUS), [0.0],
                                               [0.0], [1.0, 0.0])
    assert verdict['status'] == Status.SufficientConditionFails


def test_unconstrained_refusals():
    try:
        cs_metric2_regularity_unconstrained(system('x1 - x2'), [0.0], [0.0],
                                            [1.0, 1.0])
        raise AssertionError('rge nabla_sigma Phi meets rge D*T')
    except ConditionFailed as err:
        assert err.condition == 'separation'
    try:
        cs_metric2_regularity_unconstrained(system('x1^2', R_PLUS), [0.0],
                                            [0.0], [1.0, 0.0])
        raise AssertionError('Omega is not the whole line')
    except ConditionFailed as err:
        assert err.condition == 'unconstrained'


def test_dual_criteria_agree_on_random_systems():
    """Phi = a x + b sigma + c x^2 with Omega in {R, R_+} and T the identity
    or N_{R_+}: the criteria with D*T and with rge D*T agree, and so do the
    compiled forms; disagreement raises InconsistencyError."""
    rng = GlobalConfig.init_rng(12)
    mappings = (IDENTITY_T, NormalConeMap(R_PLUS))
    omegas = (PolyhedralSet.whole(1), R_PLUS)
    for _ in range(30):
        a, b, c = (float(v) for v in rng.integers(-1, 2, size=3))
        phi = PolyMap(2, [([a, b, c], [[1, 0], [0, 1], [2, 0]])])
        cs = ConstraintSystem(phi, omegas[rng.integers(2)],
                              mappings[rng.integers(2)])
        try:
            first = cs_metric_regularity(cs, [0.0], [0.0])
            second = cs_metric2_regularity_polyhedral(cs, [0.0], [0.0],
                                                      [1.0, 0.0])
        except InconsistencyError as err:
            raise AssertionError(f'{(a, b, c)}: {err}')
        assert first['details']['(b)'] == first['details']['(c)']
        assert second['details']['(a)'] == second['details']['(b)']
        # metric regularity implies the second-order condition
        if first['status'] == Status.CertifiedYes:
            assert second['status'] == Status.SufficientConditionHolds


def kkt(f):
    """min with gradient f subject to x <= 0."""
    return VariationalSystem.kkt(PolyMap.from_text(1, [f]),
                                 PolyMap.from_text(1, ['x1']), 1)


def test_variational_system_basics():
    vs = kkt('x1 - 1')
    assert (vs.k, vs.s, vs.q) == (1, 1, 1)
    assert np.allclose(vs.matrix([0.0]), [[1.0]])
    assert vs.C0.equals(R_MINUS)
    vs.check_solution([0.0], [1.0], [0.0])
    try:
        vs.check_solution([1.0], [0.0], [1.0])
        raise AssertionError('zeta = 1 is outside C0')
    except NotASolution:
        pass
    again = VariationalSystem.from_payload(vs.to_payload())
    assert again.M.to_text() == vs.M.to_text()
    cs = compile_variational_system(vs)
    assert (cs.k, cs.l, cs.p, cs.q) == (1, 2, 2, 1)
    assert cs.t_regular_granted
    K = vs_T_coderivative(vs, [1.0], [0.0])
    assert K.arg_dim == 1 and K.val_dim == 2
    alphas = alpha_sweep(2, count=3)
    assert len(alphas) == 8 and not np.any(alphas[0])


def test_kkt_regularity():
    strict = kkt('x1 - 1')
    verdict = vs_metric_regularity(strict, [0.0], [1.0], [0.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['details']['compiled'] == Status.CertifiedYes
    verdict = vs_metric2_regularity(strict, [0.0], [1.0], [0.0], [1.0, 0.0])
    assert verdict['status'] == Status.SufficientConditionHolds
    assert verdict['details']['alpha_terms_vanish']
    degenerate = kkt('0')
    verdict = vs_metric_regularity(degenerate, [0.0], [0.0], [0.0])
    assert verdict['status'] == Status.CertifiedNo
    assert verdict['details']['compiled'] == Status.CertifiedNo
    # the witness solves 0 in H z + nabla g chi with chi in D*N(M^T z)
    z = np.asarray(verdict['witness']['z'])
    assert abs(np.linalg.norm(z) - 1.0) < 1e-9
    H, B, Mt, _ = _vs_blocks(degenerate, np.zeros(1), np.zeros(1))
    chi = np.linalg.lstsq(B, -H @ z, rcond=None)[0]
    KN = _normal_coderivative(degenerate, np.zeros(1), np.zeros(1))
    assert KN.contains(Mt @ z, chi)
    verdict = vs_metric2_regularity(degenerate, [0.0], [0.0], [0.0],
                                    [1.0, 0.0])
    assert verdict['status'] == Status.SufficientConditionFails


def test_multiplier_mapping_is_regular():
    """T(lambda, zeta) = -lambda + N_C0(zeta) is metrically regular at every
    solution of the variational system."""
    for f, solution in (('x1 - 1', ([0.0], [1.0], [0.0])),
                        ('0', ([0.0], [0.0], [0.0])),
                        ('x1 + 1', ([-1.0], [0.0], [-1.0]))):
        vs = kkt(f)
        x, lam, zeta = vs.check_solution(*solution)
        cs = compile_variational_system(vs)
        verdict = check_metric_regularity(cs.T, np.hstack([lam, zeta]),
                                          np.zeros(vs.q))
        assert verdict['status'] == Status.CertifiedYes, f


if __name__ == "__main__":
    for case in (
            test_constraint_system_basics,
            test_constraint_system_regularity,
            test_unconstrained_refusals,
            test_dual_criteria_agree_on_random_systems,
            test_variational_system_basics,
            test_kkt_regularity,
            test_multiplier_mapping_is_regular,
    ):
        case()
        print(case.__name__, 'ok')
