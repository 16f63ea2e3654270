"""Designing a complementary filter pair from a spectrum.

Run with ``python demos/filter_design.py``. The script generates the
double-mass signal, reads its two dominant frequencies off the magnitude
spectrum, places a cutoff between them and checks that the resulting pair
splits the signal into two bands that add back up to the input.
"""

import numpy as np

from cfdyn import filters as flt
from cfdyn.spectrum import magnitude_spectrum, suggest_cutoff
from cfdyn.systems import gen_double_mass

y = gen_double_mass()
spec = magnitude_spectrum(y)
cutoff = suggest_cutoff(spec)
print(f"strongest spectral line: {spec.peak_frequency():.3f} Hz")
print(f"suggested cutoff between the two lines: {cutoff:.3f} Hz")

# A perfect complement: the highpass is defined as 1 - lowpass, so the two
# legs of the joint recurrence reproduce the input exactly.
pair = flt.make_pair(order=2, cutoff_hz=cutoff, sample_rate_hz=y.sample_rate_hz, perfect=True)
fused = flt.complementary_combine(pair, y, y, init="hold_input")
print(f"perfect pair, H(y) + L(y) vs y: max error {np.abs(fused.samples - y.samples).max():.2e}")

# The shared-cutoff Butterworth pair only sums to one in power; its legs are
# applied zero-phase when a signal is split for training.
shared = flt.make_pair(order=3, cutoff_hz=0.4, sample_rate_hz=y.sample_rate_hz, perfect=False)
high, low = flt.filtfilt(shared.high, y), flt.filtfilt(shared.low, y)
for name, band in (("high", high), ("low", low)):
    peak = magnitude_spectrum(band).peak_frequency()
    print(f"{name} band after zero-phase filtering peaks at {peak:.3f} Hz")
