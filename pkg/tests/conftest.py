import numpy as np
import pytest

from cpmfit import _kernels


@pytest.fixture(params=sorted(_kernels.available_backends()))
def backend(request):
    """Run the test once per available kernel backend."""
    with _kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20210814)


def make_instance(rng, n=60, p=2, link="logit", censored=False):
    """A small random dataset and its encoding, for derivative checks."""
    import cpmfit

    x1 = (rng.random(n) < 0.5).astype(float)
    rest = rng.standard_normal((n, p - 1)) if p > 1 else np.zeros((n, 0))
    z = np.column_stack([x1, rest]) if p else np.zeros((n, 0))
    y = np.exp(0.8 * x1 + rng.standard_normal(n))
    bounds = (np.exp(-0.7), np.exp(0.9)) if censored else None
    ds = cpmfit.censor_transform(y, z if p else None, bounds)
    return cpmfit.encode_ordinal(ds)
