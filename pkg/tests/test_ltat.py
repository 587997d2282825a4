"""Throughput/power bookkeeping formula tests."""

import numpy as np
import pytest

from harqlab.ltat import (OptConstraints, PowerPolicy, avg_power, avg_rounds,
                          ltat_from_blers)
from harqlab.mc import BlerCurve


def curve(values):
    return BlerCurve(values=np.asarray(values), method="trap")


class TestLtatFromBlers:
    def test_perfect_channel(self):
        assert ltat_from_blers(5.0, curve([0.0, 0.0])) == 5.0

    def test_total_failure(self):
        assert ltat_from_blers(5.0, curve([1.0, 1.0])) == 0.0

    def test_worked_example(self):
        assert ltat_from_blers(5.0, curve([0.5, 0.25])) == pytest.approx(2.5)


class TestAvgPower:
    def test_single_round(self):
        assert avg_power([7.0], curve([0.3])) == 7.0

    def test_every_round_used(self):
        assert avg_power([2.0, 3.0, 4.0], curve([1.0, 1.0, 1.0])) == 9.0

    def test_worked_example(self):
        assert avg_power([2.0, 4.0], curve([0.5, 0.1])) == pytest.approx(4.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            avg_power([2.0], curve([0.5, 0.1]))


class TestAvgRounds:
    def test_single_round(self):
        assert avg_rounds(curve([0.2])) == 1.0

    def test_always_failing(self):
        assert avg_rounds(curve([1.0, 1.0, 1.0])) == 3.0

    def test_worked_example(self):
        assert avg_rounds(curve([0.5, 0.25, 0.1])) == pytest.approx(1.75)

    def test_equals_unit_policy_power(self):
        c = curve([0.7, 0.4, 0.2, 0.05])
        assert avg_rounds(c) == pytest.approx(avg_power(np.ones(4), c))


class TestTypes:
    def test_power_policy_validation(self):
        p = PowerPolicy(powers=(1.0, 2.0))
        assert len(p) == 2
        assert np.array_equal(p.as_array, [1.0, 2.0])
        with pytest.raises(ValueError):
            PowerPolicy(powers=())
        with pytest.raises(ValueError):
            PowerPolicy(powers=(1.0, 0.0))

    def test_constraints_validation(self):
        OptConstraints(max_avg_power=10.0, max_bler=0.01)
        with pytest.raises(ValueError):
            OptConstraints(max_avg_power=0.0, max_bler=0.01)
        with pytest.raises(ValueError):
            OptConstraints(max_avg_power=1.0, max_bler=1.0)
