import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from hubquench import (ChainSpec, PotentialShape, QuenchSpec, avg_work_functional,
                       build_fock_basis, characteristic_function, density_response,
                       entropy_distribution, exact_quench_point, fdr_residual,
                       gibbs, diagonalize, sirr_functional, theta2_exact,
                       thermal_state, w2_commuting, work_distribution)
from hubquench.exact import DensityProfile, gibbs_diagonal
from hubquench.lattice import hamiltonian_from_potential
from hubquench.quench import second_moment_diagonal, second_moment_trace

from conftest import linear_dimer


def dimer_quench(interaction, v0, dv0=0.05, beta=1.0):
    return QuenchSpec(linear_dimer(interaction, v0), dv0, beta)


def solved(quench):
    basis, spectral0, eq0 = thermal_state(quench.spec0, quench.beta)
    ham_final = hamiltonian_from_potential(quench.spec_final.potential(),
                                           quench.spec0.interaction,
                                           quench.spec0.hopping, basis)
    return basis, spectral0, eq0, diagonalize(ham_final)


def test_identity_quench_single_outcome():
    quench = dimer_quench(3.0, 2.0, dv0=0.0)
    basis, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)
    peak = np.argmax(dist.p)
    assert dist.p[peak] > 1.0 - 1e-12
    assert abs(dist.w[peak]) < 1e-12
    assert dist.p.sum() == pytest.approx(1.0, abs=1e-10)


def test_uniform_quench_is_rigid_shift():
    spec = ChainSpec.half_filled(4, 2.0, PotentialShape.uniform(), 0.4)
    quench = QuenchSpec(spec, 0.05, 1.0)
    basis, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)
    peak = np.argmax(dist.p)
    assert dist.p[peak] > 1.0 - 1e-12
    assert_allclose(dist.w[peak], spec.n_particles * 0.05, atol=1e-10)
    assert dist.variance() < 1e-12
    assert abs(dist.delta_f - spec.n_particles * 0.05) < 1e-10


def test_dimension_mismatch_rejected():
    q2 = dimer_quench(1.0, 1.0)
    _, spectral2, eq2, _ = solved(q2)
    spec3 = ChainSpec(3, 1.0, 1.0, PotentialShape.linear(), 1.0, 1, 1)
    _, spectral3, _ = thermal_state(spec3, 1.0)
    with pytest.raises(ValueError):
        work_distribution(spectral2, spectral3, eq2)


def test_first_moment_equals_trace_identity():
    quench = dimer_quench(3.0, 2.0)
    basis, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)
    # Tr{dH rho_0} with the diagonal quench operator
    rho = gibbs_diagonal(eq0)
    delta_diag = basis.site_occupations() @ quench.delta_v()
    assert abs(dist.mean() - rho @ delta_diag) < 1e-10
    assert abs(dist.mean() - avg_work_functional(eq0.densities, quench)) < 1e-10


def test_jarzynski_residual_small():
    dist_args = solved(dimer_quench(3.0, 2.0))
    dist = work_distribution(dist_args[1], dist_args[3], dist_args[2])
    assert dist.jarzynski_residual() < 1e-9


def test_characteristic_function_basics():
    quench = dimer_quench(2.0, 1.0)
    _, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)
    nu = np.linspace(-20.0, 20.0, 41)
    chi = characteristic_function(dist, nu)
    assert chi[20] == pytest.approx(1.0 + 0.0j, abs=1e-14)
    assert np.all(np.abs(chi) <= 1.0 + 1e-12)


def test_characteristic_function_moment_by_richardson():
    quench = dimer_quench(3.0, 2.0)
    _, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)

    def central(step):
        chi = characteristic_function(dist, [step, -step])
        return float((-1j * (chi[0] - chi[1]) / (2 * step)).real)

    step = 0.2
    coarse = abs(central(step) - dist.mean())
    fine = abs(central(step / 2) - dist.mean())
    assert coarse / fine == pytest.approx(4.0, rel=0.25)


def test_entropy_distribution_mean_and_positivity():
    quench = dimer_quench(3.0, 2.0)
    _, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)
    ent = entropy_distribution(dist)
    assert_allclose(ent.mean(), quench.beta * (dist.mean() - dist.delta_f),
                    atol=1e-12)
    assert ent.mean() >= -1e-12


def test_entropy_distribution_trivial_cases():
    identity = dimer_quench(2.0, 1.0, dv0=0.0)
    _, s0, eq0, sf = solved(identity)
    ent = entropy_distribution(work_distribution(s0, sf, eq0))
    peak = np.argmax(ent.p)
    assert abs(ent.s[peak]) < 1e-12

    uniform = QuenchSpec(ChainSpec.half_filled(2, 1.0, PotentialShape.uniform(),
                                               0.3), 0.07, 1.0)
    _, s0, eq0, sf = solved(uniform)
    ent = entropy_distribution(work_distribution(s0, sf, eq0))
    assert abs(ent.mean()) < 1e-10


def test_avg_work_functional_closed_cases():
    uniform = QuenchSpec(ChainSpec.half_filled(4, 1.0, PotentialShape.uniform(),
                                               0.0), 0.05, 1.0)
    assert_allclose(avg_work_functional(DensityProfile(np.ones(4)), uniform),
                    4 * 0.05, rtol=1e-14)

    # deep Mott on a linear chain: homogeneous density, no work at all
    mott = QuenchSpec(ChainSpec.half_filled(6, 1.0, PotentialShape.linear(),
                                            0.0), 0.05, 1.0)
    assert abs(avg_work_functional(DensityProfile(np.ones(6)), mott)) < 1e-12

    # band-insulator estimate: doubly occupied second half of a 16-site chain
    # (the saturated profile behind the -(L^2-4) dv0 / (2(L-1)) bound)
    band = QuenchSpec(ChainSpec.half_filled(16, 0.0, PotentialShape.linear(),
                                            5.0), 0.05, 1.0)
    profile = np.zeros(16)
    profile[7:] = 2.0
    assert_allclose(avg_work_functional(DensityProfile(profile), band),
                    -(16 ** 2 - 4) * 0.05 / (2 * 15), rtol=1e-12)

    with pytest.raises(ValueError):
        avg_work_functional(DensityProfile(np.ones(3)), band)


def test_sirr_functional_uniform_and_sign():
    spec = ChainSpec.half_filled(2, 3.0, PotentialShape.uniform(), 0.5)
    quench = QuenchSpec(spec, 0.05, 1.0)
    resp = density_response(spec, 1.0)
    assert abs(sirr_functional(resp, quench)) < 1e-8

    quench = dimer_quench(3.0, 2.0)
    resp = density_response(quench.spec0, 1.0)
    assert sirr_functional(resp, quench) >= -1e-10


def test_w2_commuting_uniform_shift():
    spec = ChainSpec.half_filled(4, 2.0, PotentialShape.uniform(), 0.2)
    quench = QuenchSpec(spec, 0.05, 1.0)
    resp = density_response(spec, 1.0)
    _, _, eq = thermal_state(spec, 1.0)
    value = w2_commuting(eq.densities, resp, quench)
    assert_allclose(value, (spec.n_particles * 0.05) ** 2, atol=1e-10)


def test_w2_commuting_classical_fdr_identity():
    quench = dimer_quench(3.0, 2.0)
    resp = density_response(quench.spec0, 1.0)
    _, _, eq = thermal_state(quench.spec0, 1.0)
    w2c = w2_commuting(eq.densities, resp, quench)
    mean = avg_work_functional(eq.densities, quench)
    s_irr = sirr_functional(resp, quench)
    assert_allclose(w2c, mean ** 2 + 2 * s_irr / quench.beta ** 2, rtol=1e-12)


def test_second_moment_routes_agree_and_theta2_splits():
    quench = dimer_quench(3.0, 2.0)
    basis, spectral0, eq0, spectral_f = solved(quench)
    trace = second_moment_trace(spectral0, spectral_f, eq0)
    diagonal = second_moment_diagonal(eq0, basis, quench.delta_v())
    dist = work_distribution(spectral0, spectral_f, eq0)
    assert_allclose(trace, diagonal, rtol=1e-12)
    assert_allclose(trace, dist.moment(2), rtol=1e-10)

    # the static correlator Tr{n_i n_j rho} disagrees with the commuting-case
    # functional exactly by the non-commuting remainder
    resp = density_response(quench.spec0, quench.beta)
    _, _, eq = thermal_state(quench.spec0, quench.beta)
    w2c = w2_commuting(eq.densities, resp, quench)
    theta2 = theta2_exact(spectral0, spectral_f, eq0, w2c)
    assert_allclose(trace - w2c, theta2, rtol=1e-12)
    assert abs(theta2) > 1e-5  # genuinely non-commuting quench


def test_theta2_zero_for_commuting_quenches():
    # uniform shape: dH proportional to total number, commutes with H
    spec = ChainSpec.half_filled(2, 3.0, PotentialShape.uniform(), 0.5)
    quench = QuenchSpec(spec, 0.05, 1.0)
    basis, spectral0, eq0, spectral_f = solved(quench)
    resp = density_response(spec, 1.0)
    w2c = w2_commuting(eq0.densities, resp, quench)
    assert abs(theta2_exact(spectral0, spectral_f, eq0, w2c)) < 1e-12

    # zero hopping: everything is diagonal in the configuration basis
    basis = build_fock_basis(2, 1, 1)
    v = np.array([2.0, -2.0])
    ham0 = hamiltonian_from_potential(v, 3.0, 0.0, basis)
    ham_f = hamiltonian_from_potential(v * 1.025, 3.0, 0.0, basis)
    spectral0 = diagonalize(ham0)
    eq0 = gibbs(spectral0, 1.0, basis)
    spectral_f = diagonalize(ham_f)
    trace = second_moment_trace(spectral0, spectral_f, eq0)
    diagonal = second_moment_diagonal(eq0, basis, v * 0.025)
    assert_allclose(trace, diagonal, atol=1e-14)


def test_theta2_golden_values():
    # frozen from the trace-minus-functional evaluation of this quench
    golden = {0.25: 9.321776860604647e-05,
              1.0: 8.833982735207179e-04,
              4.0: 2.099197951354480e-03}
    for beta, expected in golden.items():
        result = exact_quench_point(dimer_quench(3.0, 2.0, beta=beta))
        assert_allclose(result.report.theta2, expected, rtol=1e-6)


def test_fdr_residual_identity_quench():
    report = exact_quench_point(dimer_quench(3.0, 2.0, dv0=0.0)).report
    assert abs(fdr_residual(report)) < 1e-12
    assert abs(report.fdr_residual) < 1e-12


def test_fdr_residual_cubic_scaling():
    residuals = [abs(exact_quench_point(dimer_quench(3.0, 2.0, dv0=d)).report
                     .fdr_residual) for d in (0.05, 0.025)]
    assert residuals[0] / residuals[1] == pytest.approx(8.0, rel=0.2)


def test_merge_tolerance_groups_degenerate_gaps():
    quench = dimer_quench(0.0, 0.0, dv0=0.05)
    _, spectral0, eq0, spectral_f = solved(quench)
    merged = work_distribution(spectral0, spectral_f, eq0)
    raw = work_distribution(spectral0, spectral_f, eq0, merge_tol=0.0)
    assert merged.w.size < raw.w.size
    assert_allclose(merged.p.sum(), raw.p.sum(), atol=1e-14)


def test_extracted_work_sign_convention():
    report = exact_quench_point(dimer_quench(0.0, 5.0)).report
    assert report.extracted_work == -report.mean_w
    assert report.extracted_work > 0


@settings(max_examples=25, deadline=None)
@given(interaction=st.floats(0.0, 10.0), v0=st.floats(0.0, 5.0),
       dv0=st.floats(-0.2, 0.2), beta=st.floats(0.2, 5.0))
def test_distribution_invariants(interaction, v0, dv0, beta):
    quench = dimer_quench(interaction, v0, dv0=dv0, beta=beta)
    basis, spectral0, eq0, spectral_f = solved(quench)
    dist = work_distribution(spectral0, spectral_f, eq0)
    assert abs(dist.p.sum() - 1.0) < 1e-10
    assert np.all(dist.p >= -1e-15)
    assert dist.jarzynski_residual() < 1e-9
    assert dist.variance() >= -1e-12
    ent = entropy_distribution(dist)
    assert ent.mean() >= -1e-12
    assert_allclose(ent.mean(), beta * (dist.mean() - dist.delta_f), atol=1e-12)
