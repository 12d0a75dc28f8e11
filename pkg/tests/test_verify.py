import numpy as np
import pytest

from afmech.affinity import OmegaAffinity
from afmech.diagnostics import diagnostics_table, uniform_prefix
from afmech.integrate import IntegratorConfig, integrate
from afmech.verify import SUITES, random_omega, run_suite, sflow_instance


@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes(suite):
    checks = run_suite(suite, seed=0)
    assert checks
    failed = [c.name for c in checks if not c.passed]
    assert not failed


def test_suites_are_deterministic():
    a = [c.to_dict() for c in run_suite("lemmas", seed=5)]
    b = [c.to_dict() for c in run_suite("lemmas", seed=5)]
    assert a == b


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_random_omega_kinds():
    rng = np.random.default_rng(0)
    for m in range(1, 9):
        sym = random_omega(rng, m, symmetric=True)
        OmegaAffinity(sym, symmetric=True)
        assert np.all(sym >= 0)
        gen = random_omega(rng, m)
        assert np.allclose(gen.sum(axis=1), 1)
    singular = [random_omega(rng, 6, rank_deficient=True) for _ in range(20)]
    assert all(np.linalg.matrix_rank(om) < 6 for om in singular)


def test_uniform_prefix():
    assert uniform_prefix([0.0, 0.1, 0.2, 0.3]) == 4
    assert uniform_prefix([0.0, 0.1, 0.2, 0.25]) == 3
    assert uniform_prefix([0.0, 1.0]) == 2


def test_diagnostics_table_columns():
    om, S0 = sflow_instance(size=3)
    tr = integrate(om, S0, IntegratorConfig(h=0.05, t_end=0.32))
    table = diagnostics_table(om, tr.times, tr.states)
    assert list(table) == ["t", "energy", "G", "J", "speed_g", "el_residual", "condition_norm", "h0_speed"]
    assert np.all(np.isfinite(table["el_residual"][:-1])) and np.isnan(table["el_residual"][-1])
    assert np.allclose(table["speed_g"] ** 2, -2 * table["G"], rtol=1e-12)


def test_sampled_rank_matches_sigma_for_omega():
    from afmech.labeling import mane_analysis
    from afmech.verify import sampled_tangent_ranks

    rng = np.random.default_rng(3)
    for trial in range(10):
        m, n = int(rng.integers(2, 7)), int(rng.integers(2, 5))
        F = OmegaAffinity(random_omega(rng, m, rank_deficient=trial % 2 == 0))
        expected = m * (n - 1) - mane_analysis(F, n).dim_sigma
        assert sampled_tangent_ranks(F, m, n, rng, samples=3) == [expected] * 3
