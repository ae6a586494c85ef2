"""Scenario parsing, serialization round-trips, and builtin constructions."""

import json
import math

import numpy as np
import pytest

from contextuality import (
    builtin_abc,
    builtin_chsh,
    commutes,
    parse_scenario,
    serialize_scenario,
    validate_density,
)
from contextuality.errors import (
    BadTrace,
    NotHermitian,
    NotPositive,
    OutOfRange,
    ParseError,
    ValidationError,
)


def correlator(s, label_x, label_y):
    """Trace oracle: E(X, Y) = Tr(rho X Y) for commuting +-1 observables."""
    x = s.matrix(label_x)
    y = s.matrix(label_y)
    return float(np.trace(s.rho.matrix @ x @ y).real)


class TestBuiltinAbc:
    def test_uniform_state(self):
        s = builtin_abc(1 / 3)
        np.testing.assert_allclose(s.rho.matrix, np.eye(3) / 3, atol=1e-15)
        assert s.labels == ("A", "B", "C")
        assert s.dim == 3

    def test_boundaries(self):
        np.testing.assert_allclose(builtin_abc(1.0).rho.matrix, np.diag([1.0, 0, 0]))
        np.testing.assert_allclose(builtin_abc(0.0).rho.matrix, np.diag([0, 0.5, 0.5]))

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            builtin_abc(1.2)
        with pytest.raises(OutOfRange):
            builtin_abc(-0.1)

    @pytest.mark.parametrize("p", [0.0, 0.25, 1 / 3, 0.8, 1.0])
    def test_commutation_pattern(self, p):
        s = builtin_abc(p)
        a, b, c = (s.matrix(lab) for lab in "ABC")
        assert commutes(a, b)
        assert commutes(a, c)
        assert not commutes(b, c)


class TestBuiltinChsh:
    def test_singlet_correlators(self):
        s = builtin_chsh("singlet")
        # singlet: E(theta_a, theta_b) = -cos(theta_a - theta_b)
        assert correlator(s, "A", "B") == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert correlator(s, "A", "B'") == pytest.approx(-1 / math.sqrt(2), abs=1e-12)
        assert correlator(s, "A'", "B") == pytest.approx(-1 / math.sqrt(2), abs=1e-12)
        assert correlator(s, "A'", "B'") == pytest.approx(-1 / math.sqrt(2), abs=1e-12)

    def test_product_state_correlator(self):
        s = builtin_chsh("product00")
        assert correlator(s, "A", "B") == pytest.approx(math.cos(0) * math.cos(3 * math.pi / 4),
                                                        abs=1e-12)

    def test_commutation_pattern(self):
        s = builtin_chsh("singlet")
        for x in ("A", "A'"):
            for y in ("B", "B'"):
                assert commutes(s.matrix(x), s.matrix(y))
        assert not commutes(s.matrix("A"), s.matrix("A'"))
        assert not commutes(s.matrix("B"), s.matrix("B'"))

    def test_degenerate_angles_collapse(self):
        s = builtin_chsh("singlet", angles=(0.0, 0.0, 0.0, 0.0))
        np.testing.assert_allclose(s.matrix("A"), s.matrix("A'"))
        np.testing.assert_allclose(s.matrix("B"), s.matrix("B'"))

    def test_bad_state(self):
        with pytest.raises(OutOfRange):
            builtin_chsh("werner")


class TestValidateDensity:
    def test_abc_family(self):
        for p in (0.0, 0.4, 1.0):
            r = (1 - p) / 2
            validate_density(np.diag([p, r, r]).astype(complex))

    def test_pure_state(self):
        validate_density(np.diag([1.0, 0.0, 0.0]).astype(complex))

    def test_not_positive(self):
        with pytest.raises(NotPositive):
            validate_density(np.diag([1.5, -0.5, 0.0]).astype(complex))

    def test_bad_trace(self):
        with pytest.raises(BadTrace):
            validate_density(np.diag([0.45, 0.45, 0.0]).astype(complex))

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            validate_density(np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex))


class TestParseSerialize:
    def test_round_trip(self):
        s = builtin_abc(1 / 3)
        text = serialize_scenario(s)
        back = parse_scenario(text)
        assert back.name == s.name
        assert back.labels == s.labels
        for (_, m1), (_, m2) in zip(s.observables, back.observables):
            assert np.abs(m1 - m2).max() <= 1e-12
        assert np.abs(s.rho.matrix - back.rho.matrix).max() <= 1e-12

    def test_round_trip_chsh(self):
        s = builtin_chsh("singlet")
        back = parse_scenario(serialize_scenario(s))
        for (_, m1), (_, m2) in zip(s.observables, back.observables):
            assert np.abs(m1 - m2).max() <= 1e-12

    def test_malformed_json(self):
        with pytest.raises(ParseError) as exc:
            parse_scenario('{"name": "x", ')
        assert exc.value.line is not None

    def test_bad_rho_trace(self):
        doc = json.loads(serialize_scenario(builtin_abc(0.5)))
        doc["rho"][0][0] = [0.4, 0.0]
        with pytest.raises(ValidationError) as exc:
            parse_scenario(json.dumps(doc))
        assert exc.value.label == "rho"

    def test_non_hermitian_observable(self):
        doc = {
            "name": "bad", "dim": 2,
            "observables": [{"label": "X", "matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}],
            "rho": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]],
        }
        with pytest.raises(ValidationError) as exc:
            parse_scenario(json.dumps(doc))
        assert exc.value.label == "X"

    def test_duplicate_label(self):
        doc = json.loads(serialize_scenario(builtin_abc(0.5)))
        doc["observables"][1]["label"] = "A"
        with pytest.raises(ValidationError) as exc:
            parse_scenario(json.dumps(doc))
        assert "duplicate" in str(exc.value)

    def test_unknown_key_rejected(self):
        doc = json.loads(serialize_scenario(builtin_abc(0.5)))
        doc["comment"] = "hi"
        with pytest.raises(ValidationError) as exc:
            parse_scenario(json.dumps(doc))
        assert exc.value.label == "comment"

    def test_dimension_mismatch(self):
        doc = json.loads(serialize_scenario(builtin_abc(0.5)))
        doc["dim"] = 4
        with pytest.raises(ValidationError):
            parse_scenario(json.dumps(doc))

    def test_bytes_accepted(self):
        s = builtin_abc(0.25)
        back = parse_scenario(serialize_scenario(s).encode("utf-8"))
        assert back.dim == 3
