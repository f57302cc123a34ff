"""
Unit tests for reference solutions and the classical contrast solver.
"""

import math

import pytest

from errors import DivergenceError, OracleFailure
from models import ReducedProblem
from oracle import (
    BUILTIN_PROBLEMS,
    INTEGRANDS,
    builtin_mesh,
    builtin_reference,
    classical_step_solver,
    get_integrand,
    integrand_problem,
    invert_integral,
)


class TestBuiltinProblems:
    """Test the built-in problem registry."""

    def test_linear_reference(self):
        problem, reference = builtin_reference("linear")
        assert reference.y_of_x(1.0) == pytest.approx(math.e - 1, rel=1e-15)
        assert reference.y_of_x(0.0) == 0.0
        assert problem.p(1.0) == 0.5
        assert reference.valid_until == math.inf

    def test_riccati_reference(self):
        problem, reference = builtin_reference("riccati")
        assert reference.y_of_x(1.6) == pytest.approx(2.5)
        assert reference.y_of_x(0.0) == 0.5
        assert problem.extension_limit == 2.0
        assert problem.name == "riccati"

    def test_unknown_problem(self):
        with pytest.raises(ValueError, match="Unknown problem"):
            builtin_reference("logistic")
        with pytest.raises(ValueError):
            builtin_mesh("logistic")

    def test_meshes(self):
        linear = builtin_mesh("linear")
        riccati = builtin_mesh("riccati")
        assert len(linear) == 20
        assert len(riccati) == 32
        assert linear[-1] == pytest.approx(1.0)
        assert riccati[-1] == pytest.approx(1.6)
        assert riccati[0] == pytest.approx(0.05)

    def test_every_entry_has_a_mesh_inside_its_extension(self):
        for name, entry in BUILTIN_PROBLEMS.items():
            assert builtin_mesh(name)[-1] < entry["valid_until"], name


class TestIntegrands:
    """Test the inline integrand registry."""

    def test_lookup(self):
        assert get_integrand("inv_square")["p"](2.0) == 0.25
        with pytest.raises(ValueError, match="Unknown integrand"):
            get_integrand("cubic")

    def test_inline_problem(self):
        problem, reference = integrand_problem("inv_square", 0.5, 1.5)
        assert problem.b == 1.5
        assert problem.extension_limit == 2.0
        assert reference.y_of_x(1.5) == pytest.approx(2.0)
        assert reference.y_of_x(0.0) == 0.5
        assert reference.valid_until == 2.0

    def test_outside_domain(self):
        with pytest.raises(ValueError):
            integrand_problem("inv_linear", -1.0, 1.0)
        with pytest.raises(ValueError):
            integrand_problem("inv_square", 0.0, 1.0)

    @pytest.mark.parametrize("name, y0, b", [("inv_linear", 0.3, 0.7), ("inv_square", 0.8, 1.0), ("exp_shift", 0.2, 0.9)])
    def test_inverse_matches_antiderivative(self, name, y0, b):
        entry = INTEGRANDS[name]
        Y = entry["inverse"](y0, b)
        P = entry["antiderivative"]
        assert P(Y) - P(y0) == pytest.approx(b, abs=1e-12)


class TestInvertIntegral:
    """Test the quadrature-and-root-finding inverter."""

    def test_log_integral(self):
        assert abs(invert_integral(lambda y: 1.0 / (1.0 + y), 0.0, 1.0) - (math.e - 1)) < 1e-10

    def test_inverse_square(self):
        assert abs(invert_integral(lambda y: 1.0 / (y * y), 0.5, 1.5) - 2.0) < 1e-10

    def test_constant(self):
        assert abs(invert_integral(lambda y: 1.0, 0.0, 3.0) - 3.0) < 1e-10

    def test_zero_target(self):
        assert invert_integral(lambda y: 1.0, 0.25, 0.0) == 0.25

    def test_negative_target(self):
        with pytest.raises(ValueError):
            invert_integral(lambda y: 1.0, 0.0, -1.0)

    def test_beyond_extension_limit(self):
        """The integral of 1/y^2 from 0.5 never reaches 2.1."""
        with pytest.raises(OracleFailure):
            invert_integral(lambda y: 1.0 / (y * y), 0.5, 2.1)

    def test_agrees_with_closed_form_on_mesh(self):
        _, reference = builtin_reference("riccati")
        for x in builtin_mesh("riccati"):
            assert abs(invert_integral(lambda y: 1.0 / (y * y), 0.5, x) - reference.y_of_x(x)) < 1e-10

    def test_agrees_with_exp_shift_root(self):
        entry = INTEGRANDS["exp_shift"]
        for b in (0.1, 0.5, 2.0):
            assert abs(invert_integral(entry["p"], 0.0, b) - entry["inverse"](0.0, b)) < 1e-10


class TestClassicalStepSolver:
    """Test the fixed-step Runge-Kutta contrast solver."""

    def setup_method(self):
        self.linear = ReducedProblem(p=lambda y: 1.0 / (1.0 + y), y0=0.0, b_reduced=1.0)
        self.riccati = ReducedProblem(p=lambda y: 1.0 / (y * y), y0=0.5, b_reduced=1.6)

    def test_linear_accuracy(self):
        assert abs(classical_step_solver(self.linear, 100) - (math.e - 1)) < 1e-8

    def test_single_step_riccati(self):
        """One step across the steep part of 1/(2 - x) misses by far more than 1e-4."""
        y = classical_step_solver(self.riccati, 1)
        assert y == pytest.approx(2.0907, abs=1e-4)
        assert abs(y - 2.5) > 1e-4

    def test_fourth_order_convergence(self):
        coarse = abs(classical_step_solver(self.linear, 20) - math.expm1(1.0))
        fine = abs(classical_step_solver(self.linear, 40) - math.expm1(1.0))
        assert 12 < coarse / fine < 20

    def test_explicit_endpoint(self):
        assert abs(classical_step_solver(self.linear, 100, b=0.5) - math.expm1(0.5)) < 1e-9

    def test_divergence(self):
        rp = ReducedProblem(p=lambda y: 1.0 if y < 0.5 else 0.0, y0=0.0, b_reduced=1.0)
        with pytest.raises(DivergenceError):
            classical_step_solver(rp, 10)

    def test_invalid_steps(self):
        with pytest.raises(ValueError):
            classical_step_solver(self.linear, 0)
