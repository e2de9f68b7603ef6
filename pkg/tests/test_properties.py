import math

import numpy as np
import pytest

from ppest.exceptions import BadParam, SpecMismatch
from ppest.properties import BUILTIN_PROPERTIES, PropertySpec, builtin_spec


class TestBuiltins:
    def test_entropy_extension(self):
        spec = builtin_spec("entropy", 4)
        assert spec.functions[0](np.array([0.0]))[0] == 0.0
        assert spec.bound == pytest.approx(1 / math.e)

    def test_power_sum(self):
        spec = builtin_spec("power_sum", 3, a=0.75)
        assert spec.functions[0](np.array([1.0]))[0] == 1.0
        assert spec.functions[0](np.array([0.0]))[0] == 0.0

    def test_distance_to_uniformity(self):
        spec = builtin_spec("distance-to-uniformity", 4)
        assert spec.functions[0](np.array([0.25]))[0] == 0.0
        assert spec.evaluate(np.array([1.0, 0, 0, 0])) == pytest.approx(1.5)

    def test_support_size(self):
        spec = builtin_spec("support_size", 5)
        assert spec.evaluate(np.array([0.5, 0.5, 0, 0, 0])) == pytest.approx(0.4)

    def test_support_coverage(self):
        spec = builtin_spec("support_coverage", 2, m=3)
        # (1 - (1-p)^m)/m summed
        assert spec.evaluate(np.array([0.5, 0.5])) == pytest.approx(2 * (1 - 0.5**3) / 3)

    def test_l1_distance_groups_functions(self):
        q = np.array([0.5, 0.25, 0.25])
        spec = builtin_spec("l1_distance", 3, q=q)
        assert len(spec.functions) == 2
        assert spec.evaluate(np.array([0.25, 0.5, 0.25])) == pytest.approx(0.5)

    def test_entropy_of_two_thirds_family(self):
        k = 11
        p = np.full(k, 1 / (3 * (k - 1)))
        p[-1] = 2 / 3
        expected = math.log(30) / 3 + 2 / 3 * math.log(1.5)
        assert builtin_spec("entropy", k).evaluate(p) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(1.4040, abs=1e-4)

    @pytest.mark.parametrize(
        "name,kw",
        [("power_sum", dict(a=0.4)), ("power_sum", dict(a=1.0)), ("support_coverage", dict(m=0)),
         ("l1_distance", {}), ("l1_distance", dict(q=[0.5, 0.6])), ("nope", {})],
    )
    def test_bad_params(self, name, kw):
        with pytest.raises(BadParam):
            builtin_spec(name, 2, **kw)

    def test_bad_k(self):
        with pytest.raises(BadParam):
            builtin_spec("entropy", 0)

    @pytest.mark.parametrize("name", BUILTIN_PROPERTIES)
    def test_bounded(self, name):
        kw = {"q": np.full(4, 0.25)} if name == "l1_distance" else {}
        spec = builtin_spec(name, 4, **kw)
        x = np.linspace(0, 1, 1001)
        for f in spec.functions:
            assert np.all(np.abs(f(x)) <= spec.bound + 1e-12)


class TestSpec:
    def test_mismatched_distribution(self):
        with pytest.raises(SpecMismatch):
            builtin_spec("entropy", 3).evaluate(np.array([0.5, 0.5]))

    def test_not_probability(self):
        with pytest.raises(SpecMismatch):
            builtin_spec("entropy", 2).evaluate(np.array([0.5, 0.6]))

    def test_assignment_shape(self):
        with pytest.raises(SpecMismatch):
            PropertySpec("x", 3, (np.abs,), assignment=np.array([0, 0]))
        with pytest.raises(SpecMismatch):
            PropertySpec("x", 2, (np.abs,), assignment=np.array([0, 1]))
