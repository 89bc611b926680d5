"""Shared fixtures: the reference gap solution is solved once per session."""

import pytest

from bcsgl import gap_solver as gs


@pytest.fixture(scope="session")
def ref_spec() -> gs.PotentialSpec:
    return gs.reference_well()


@pytest.fixture(scope="session")
def ref_grid(ref_spec) -> gs.MomentumGrid:
    return gs.MomentumGrid.default_for(ref_spec)


@pytest.fixture(scope="session")
def gap_sol_raw(ref_spec, ref_grid) -> gs.GapSolution:
    """Unnormalized reference solution on the default grid."""
    return gs.find_tc(ref_spec, ref_grid)


@pytest.fixture(scope="session")
def gap_sol(gap_sol_raw) -> gs.GapSolution:
    """Reference solution normalized with D = 1."""
    return gs.normalize(gap_sol_raw, 1.0)


@pytest.fixture(scope="session")
def gap_sol_fine(ref_spec, ref_grid, gap_sol_raw) -> gs.GapSolution:
    """Same problem at doubled resolution (bracketed near the coarse T_c)."""
    hint = (gap_sol_raw.T_c * 0.999, gap_sol_raw.T_c * 1.001)
    return gs.normalize(
        gs.find_tc(ref_spec, ref_grid.refined(2), bracket_hint=hint), 1.0
    )


@pytest.fixture(scope="session")
def gl_coef(gap_sol):
    """GL coefficients of the normalized reference solution."""
    from bcsgl.gl_coeffs import compute_coefficients

    return compute_coefficients(gap_sol)


@pytest.fixture(scope="session")
def gl_min_state(gl_coef):
    """GL minimizer for the cosine external potential, no vector field."""
    from bcsgl.gl_minimizer import TorusField, minimize

    return minimize(
        TorusField.zero(0), TorusField.cosine(0.5, 1), gl_coef, n_max=32
    )
