"""Random waveform generators shared by the tests."""

import numpy as np
from hypothesis import strategies as st

from gateforge.waveform import SegmentedWaveform


def random_segmented(rng, n_seg=None, tau_g=None):
    n_seg = n_seg or int(rng.integers(2, 11))
    tau_g = tau_g or float(rng.uniform(2.0, 15.0))
    widths = rng.uniform(0.3, 1.0, n_seg)
    return SegmentedWaveform(
        float(rng.uniform(0.3, 3.0)),
        widths / widths.sum() * tau_g,
        rng.uniform(0.0, 3.0, n_seg),
        rng.uniform(-np.pi, np.pi, n_seg),
    )


@st.composite
def segmented_waveforms(draw, max_seg=6):
    n = draw(st.integers(1, max_seg))
    floats = st.floats(0.2, 1.0)
    widths = np.array(draw(st.lists(floats, min_size=n, max_size=n)))
    amps = draw(st.lists(st.floats(0.0, 3.0), min_size=n, max_size=n))
    phases = draw(st.lists(st.floats(-np.pi, np.pi), min_size=n, max_size=n))
    mu = draw(st.floats(0.2, 3.0))
    tau = draw(st.floats(1.0, 12.0))
    return SegmentedWaveform(mu, widths / widths.sum() * tau, amps, phases)
