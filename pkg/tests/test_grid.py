import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adiabatica.errors import BindingError, GridError
from adiabatica.grid import (
    central_weights,
    deriv1,
    deriv2,
    derivative_matrix,
    fd_weights,
    inner,
    integrate,
    make_grid,
    norm,
    normalize,
)


def test_rejects_too_few_points():
    with pytest.raises(GridError):
        make_grid(-1, 1, 5)


def test_rejects_reversed_bounds():
    with pytest.raises(GridError):
        make_grid(1, 1, 16)
    with pytest.raises(GridError):
        make_grid(2, 1, 16)


def test_rejects_unknown_order_and_boundary():
    with pytest.raises(GridError):
        make_grid(0, 1, 16, order=6)
    with pytest.raises(GridError):
        make_grid(0, 1, 16, boundary="neumann")


def test_dirichlet_spacing():
    g = make_grid(0, 1, 11, "dirichlet")
    assert g.h == pytest.approx(0.1)
    assert g.x[5] == pytest.approx(0.5)


def test_periodic_spacing():
    g = make_grid(0, 1, 10, "periodic")
    assert g.h == pytest.approx(0.1)
    assert g.x[9] == pytest.approx(0.9)


def test_central_weights_match_textbook():
    assert central_weights(1, 2) == (-0.5, 0.0, 0.5)
    assert central_weights(2, 2) == (1.0, -2.0, 1.0)
    assert np.allclose(central_weights(1, 4), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])
    assert np.allclose(central_weights(2, 4), [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])


def test_fornberg_one_sided_first_derivative():
    # classic second-order forward stencil (-3, 4, -1)/2
    assert np.allclose(fd_weights(0.0, [0, 1, 2], 1), [-1.5, 2.0, -0.5])


@pytest.mark.parametrize("order", [2, 4])
def test_constant_field_has_zero_derivatives(order):
    g = make_grid(-2, 3, 40, order=order)
    f = np.full(g.n, 3.7)
    assert np.max(np.abs(deriv1(f, g))) < 1e-12
    assert np.max(np.abs(deriv2(f, g))) < 1e-10


@pytest.mark.parametrize("order", [2, 4])
def test_linear_field(order):
    g = make_grid(0, 1, 21, order=order)
    d = deriv1(g.x, g)
    # one-sided edge stencils are exact on linear data as well
    assert np.allclose(d, 1.0, atol=1e-12)


def test_periodic_sine_second_derivative():
    g = make_grid(0, 2 * np.pi, 256, "periodic")
    err = np.max(np.abs(deriv2(np.sin(g.x), g) + np.sin(g.x)))
    assert err <= 1e-3


@pytest.mark.parametrize("order,lo,hi", [(2, 3.0, 5.0), (4, 12.0, 20.0)])
def test_convergence_order(order, lo, hi):
    errs = []
    for n in (64, 128):
        g = make_grid(0, 2 * np.pi, n, "periodic", order)
        f = np.exp(np.sin(g.x))
        exact = (np.cos(g.x) ** 2 - np.sin(g.x)) * f
        errs.append(np.max(np.abs(deriv2(f, g) - exact)))
    assert lo <= errs[0] / errs[1] <= hi


@pytest.mark.parametrize("order", [2, 4])
@pytest.mark.parametrize("boundary", ["periodic", "dirichlet"])
def test_operator_matrix_symmetry(order, boundary):
    g = make_grid(0, 1, 24, boundary, order)
    D1 = derivative_matrix(g, 1).toarray()
    D2 = derivative_matrix(g, 2).toarray()
    assert np.array_equal(D1, -D1.T)
    assert np.array_equal(D2, D2.T)


def test_unit_integral():
    g = make_grid(0, 1, 33)
    assert integrate(np.ones(g.n), g) == pytest.approx(1.0, abs=1e-14)


def test_gaussian_integral():
    g = make_grid(-8, 8, 512)
    assert abs(integrate(np.exp(-g.x**2) / np.sqrt(np.pi), g) - 1.0) <= 1e-8


def test_inner_conjugates_first_argument():
    g = make_grid(0, 2 * np.pi, 64, "periodic")
    a = np.exp(1j * g.x)
    assert inner(a, 1j * a, g) == pytest.approx(2j * np.pi)
    assert inner(1j * a, a, g) == pytest.approx(-2j * np.pi)


def test_normalized_state_has_unit_inner_product():
    g = make_grid(-5, 5, 101)
    psi = normalize(np.exp(-g.x**2 + 0.3j * g.x), g)
    assert inner(psi, psi, g) == pytest.approx(1.0, abs=1e-14)
    assert norm(psi, g) == pytest.approx(1.0, abs=1e-14)


def test_binding_mismatch():
    g = make_grid(0, 1, 16)
    with pytest.raises(BindingError):
        deriv1(np.zeros(15), g)


@settings(max_examples=40, deadline=None)
@given(
    coeffs=st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    order=st.sampled_from([2, 4]),
)
def test_periodic_derivative_integrates_to_zero(coeffs, order):
    g = make_grid(0, 2 * np.pi, 64, "periodic", order)
    a, b, c = coeffs
    f = a * np.sin(g.x) + b * np.cos(2 * g.x) + c * np.sin(3 * g.x) ** 2
    assert abs(integrate(deriv1(f, g), g)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(n=st.integers(8, 80), order=st.sampled_from([2, 4]))
def test_periodic_matrices_exactly_antisymmetric(n, order):
    g = make_grid(-1, 1, n, "periodic", order)
    D1 = derivative_matrix(g, 1).toarray()
    assert np.array_equal(D1, -D1.T)
