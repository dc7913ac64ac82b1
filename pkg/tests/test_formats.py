import math
import unittest

import numpy as np
import pytest

from conftest import EXAMPLE_A, EXAMPLE_Y, SYSTEM_M
from tropreg.errors import ParseError
from tropreg.formats import (
    format_evidence,
    format_float,
    format_matrix,
    format_orbit,
    format_report,
    parse_evidence,
    parse_float,
    parse_matrices,
    parse_matrix,
    parse_orbit,
    parse_report,
    parse_vector,
)
from tropreg.maxplus import NEG_INF
from tropreg.solvers import RegressionProblem, brute_force_solve, multistart_newton
from tropreg.sysid import ingest, simulate


class TestFloats(unittest.TestCase):
    def test_format(self):
        self.assertEqual(format_float(NEG_INF), "-inf")
        self.assertEqual(format_float(math.inf), "inf")
        self.assertEqual(format_float(0.1), "0.1")
        self.assertEqual(format_float(2), "2.0")

    def test_parse(self):
        self.assertEqual(parse_float("-inf"), NEG_INF)
        self.assertEqual(parse_float("1e-3"), 0.001)
        for token in ("nan", "abc", "infinity", "1,5"):
            with self.assertRaises(ParseError):
                parse_float(token, 3, 7)

    def test_error_position(self):
        with self.assertRaises(ParseError) as ctx:
            parse_float("x", 3, 7)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (3, 7))
        self.assertTrue(str(ctx.exception).startswith("line 3, column 7: "))


class TestMatrix(unittest.TestCase):
    def test_round_trip_is_bit_exact(self):
        A = np.array([[0.1, NEG_INF, 1 / 3], [-2.5e-17, 7.0, 1e300]])
        B = parse_matrix(format_matrix(A))
        self.assertEqual(B.tobytes(), A.tobytes())
        self.assertFalse(B.flags.writeable)

    def test_header_line(self):
        self.assertEqual(format_matrix(EXAMPLE_A).splitlines()[0], "maxplus 3 2")
        self.assertEqual(format_matrix(EXAMPLE_Y).splitlines()[0], "maxplus 3 1")

    def test_blank_lines_are_skipped(self):
        A = parse_matrix("\nmaxplus 1 2\n\n0 -inf\n\n")
        np.testing.assert_array_equal(A, [[0.0, NEG_INF]])

    def test_parse_errors(self):
        cases = {
            "matrix 1 1\n0\n": (1, 1),
            "maxplus 1 x\n0\n": (1, 11),
            "maxplus 2 2\n0 0\n0\n": (3, 1),
            "maxplus 1 2\n0 zero\n": (2, 3),
            "maxplus 1 1\ninf\n": (1, 1),
            "maxplus 1 1\nnan\n": (2, 1),
            "maxplus 2 1\n0\n": (3, 1),
            "maxplus 1 1\n0\n1\n": (3, 1),
        }
        for text, position in cases.items():
            with self.assertRaises(ParseError, msg=text) as ctx:
                parse_matrix(text)
            self.assertEqual((ctx.exception.line, ctx.exception.column), position, text)

    def test_vector_shapes(self):
        np.testing.assert_array_equal(parse_vector(format_matrix([1.0, 2.0])), [1.0, 2.0])
        np.testing.assert_array_equal(parse_vector("maxplus 1 2\n1 2\n"), [1.0, 2.0])
        with self.assertRaises(ParseError):
            parse_vector(format_matrix(np.zeros((2, 2))))

    def test_consecutive_blocks(self):
        text = format_matrix(EXAMPLE_A) + format_matrix(EXAMPLE_Y) + "setcover n=2\n"
        A, y = parse_matrices(text)
        np.testing.assert_array_equal(A, EXAMPLE_A)
        np.testing.assert_array_equal(y, np.reshape(EXAMPLE_Y, (3, 1)))


class TestOrbit(unittest.TestCase):
    def test_round_trip(self):
        orbit = simulate(SYSTEM_M, np.zeros(4), 10, 1.0, seed=7)
        text = format_orbit(orbit)
        self.assertEqual(text.splitlines()[0], "orbit 4 10 1.0 7")
        parsed = parse_orbit(text)
        np.testing.assert_array_equal(parsed.states, orbit.states)
        self.assertEqual((parsed.sigma, parsed.seed, parsed.source), (1.0, 7, orbit.source))

    def test_ingested_orbit_has_no_seed(self):
        orbit = ingest([[0.0, 1.0], [2.0, 3.0]])
        text = format_orbit(orbit)
        self.assertTrue(text.startswith("orbit 2 1 0.0 none"))
        parsed = parse_orbit(text)
        self.assertIsNone(parsed.seed)
        self.assertEqual(parsed.source, orbit.source)

    def test_states_must_be_finite(self):
        with self.assertRaises(ParseError):
            parse_orbit("orbit 1 1 0.0 none\n0 -inf\n")


def test_evidence_round_trip():
    S = np.array([[3, 0], [1, 12]])
    text = format_evidence(S)
    assert text.splitlines()[0] == "evidence 2 2"
    np.testing.assert_array_equal(parse_evidence(text), S)
    with pytest.raises(ParseError):
        parse_evidence("evidence 1 1\n-1\n")


@pytest.mark.parametrize("solver", ["brute", "newton"])
def test_report_round_trip(solver):
    prob = RegressionProblem(EXAMPLE_A, EXAMPLE_Y)
    if solver == "brute":
        report = brute_force_solve(prob)
    else:
        report = multistart_newton(prob, seed=4, n_starts=3)._replace(seed=4)
    parsed = parse_report(format_report(report))
    assert parsed.solver == report.solver
    assert parsed.seed == report.seed
    assert parsed.verdict == report.verdict
    assert parsed.residual_2norm == report.residual_2norm
    assert parsed.residual_infnorm == report.residual_infnorm
    np.testing.assert_array_equal(parsed.solution, report.solution)
    assert parsed.trace == tuple(report.trace)
    assert parsed.counters == dict(report.counters)


def test_report_needs_summary():
    report = brute_force_solve(RegressionProblem(EXAMPLE_A, EXAMPLE_Y))
    text = format_report(report)
    with pytest.raises(ParseError):
        parse_report(text.split("# summary")[0])
    with pytest.raises(ParseError):
        parse_report(text.replace("solver=brute\n", ""))
