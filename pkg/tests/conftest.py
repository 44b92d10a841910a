import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def assert_gradients_close(grad, fd, rtol=1e-5, floor=1e-10):
    """Entry-wise relative comparison with an absolute floor.

    Entries whose absolute disagreement is below ``floor`` pass outright;
    everything else must agree to ``rtol`` relative.
    """
    grad = np.asarray(grad)
    fd = np.asarray(fd)
    diff = np.abs(grad - fd)
    rel = diff / np.maximum(np.abs(fd), 1e-300)
    ok = (diff < floor) | (rel < rtol)
    assert ok.all(), (
        f"worst rel {rel[~ok].max():.3e} (abs {diff[~ok].max():.3e}) "
        f"at {int(np.argmax(~ok))}")
