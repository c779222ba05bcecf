import pytest

from abpoles.harness.criteria import structural, structural_checks


@pytest.fixture(scope="module")
def checks():
    return structural_checks()


@pytest.mark.parametrize("name", ["rotation_orthogonality", "constraint_orthogonality", "quarter_turn_symmetry",
                                  "profile_jump_closure", "theta_gradient"])
def test_identity_holds(checks, name):
    assert checks[name] < 1e-6


def test_seed_independent():
    other = structural_checks(seed=5, n_points=100)
    assert max(other.values()) < 1e-6


def test_criterion_line():
    c = structural()
    assert c.passed
    assert c.line().startswith("[PASS] criterion 9")
