"""Shared fixtures: puts the repository (and utils/) on sys.path and builds small links."""

import logging
import os
import sys
from types import SimpleNamespace

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.abspath(__file__))
for path in (ROOT, os.path.join(ROOT, "utils")):
    if path not in sys.path:
        sys.path.insert(0, path)

from channel import PowerDelayProfile, apply_channel, exponential_corr, resolve_pdp, sample_time_channel  # noqa: E402
from numerics import build_dft_submatrix  # noqa: E402
from waveform import build_tx_symbol, default_pilots, reserved_for  # noqa: E402


#Tap 0 far above the others; keeps the multi-user initial points reliable at small N_r
STRONG4 = PowerDelayProfile("strong4", (0, 1, 2, 3), (1.0, 0.05, 0.02, 0.01))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def build_link(n=256, n_r=16, m=64, pdp="ped4", n_users=1, snr_db=float("inf"), corr=0.0, seed=7, delays=(0, 1, 2, 3)):
    """Draw one link: grids with default rotational pilots, channels, and the received matrix."""
    rng = np.random.default_rng(seed)
    f = build_dft_submatrix(n, delays)
    specs = default_pilots(n, m, n_users)
    pdp = resolve_pdp(pdp)
    grids = [build_tx_symbol(rng, n, m, specs[u], reserved_for(specs, u)) for u in range(n_users)]
    spatial = exponential_corr(n_r, corr)
    channels = [sample_time_channel(pdp, spatial, rng) for _ in range(n_users)]
    y = apply_channel(grids, channels, f, snr_db, rng)
    return SimpleNamespace(f=f, specs=specs, grids=grids, channels=channels, y=y, m=m, n=n, n_r=n_r)


@pytest.fixture
def make_link():
    return build_link


@pytest.fixture
def quiet_logging():
    yield
    logger = logging.getLogger("blindmimo")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.propagate = True


@pytest.fixture
def strong_pdp():
    return STRONG4
