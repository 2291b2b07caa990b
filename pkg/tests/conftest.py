import numpy as np
import pytest


class ScriptedStream:
    """Test double for RngStream driven by queues of predetermined draws.

    ``units`` feeds random()/uniform() (values in [0, 1] mapped linearly for
    uniform); ``ints`` feeds integers(); ``cauchy_values`` are returned
    verbatim by cauchy().
    """

    def __init__(self, units=(), ints=(), cauchy_values=(), normal_values=()):
        self.units = [float(u) for u in units]
        self.ints = [int(i) for i in ints]
        self.cauchy_values = [float(v) for v in cauchy_values]
        self.normal_values = [float(v) for v in normal_values]
        self.consumed = 0

    def _pop_units(self, k):
        if k > len(self.units):
            raise AssertionError(f"scripted stream exhausted: wanted {k} more unit draws")
        out = np.array([self.units.pop(0) for _ in range(k)])
        self.consumed += k
        return out

    def random(self, size=None):
        if size is None:
            return float(self._pop_units(1)[0])
        return self._pop_units(int(size))

    def uniform(self, low, high, size=None):
        low = np.asarray(low, dtype=float)
        high = np.asarray(high, dtype=float)
        if size is None:
            shape = np.broadcast(low, high).shape
        else:
            shape = (int(size),)
        k = int(np.prod(shape)) if shape else 1
        u = self._pop_units(k).reshape(shape)
        out = low + (high - low) * u
        return float(out) if shape == () else out

    def integers(self, low, high=None, size=None):
        assert size is None, "scripted integers are scalar"
        if not self.ints:
            raise AssertionError("scripted stream exhausted: no integer draws left")
        return self.ints.pop(0)

    def cauchy(self, loc=0.0, scale=1.0, size=None):
        assert size is None
        if not self.cauchy_values:
            raise AssertionError("scripted stream exhausted: no cauchy draws left")
        return self.cauchy_values.pop(0)

    def normal(self, loc=0.0, scale=1.0, size=None):
        assert size is None
        if not self.normal_values:
            raise AssertionError("scripted stream exhausted: no normal draws left")
        return self.normal_values.pop(0)

    def beta(self, a, b, size=None):
        raise AssertionError("scripted stream has no beta draws")


@pytest.fixture
def scripted():
    return ScriptedStream
