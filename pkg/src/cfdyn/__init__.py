"""Complementary filters for learning dynamical systems from trajectories.

Modules
-------
signal      time series container, noise, RMSE, CSV I/O
filters     Butterworth design, complementary pairs, IIR and zero-phase filtering
resample    integer-ratio down/upsampling
spectrum    magnitude spectra and cutoff suggestion
neural      GRU and Euler-MLP models with hand-written BPTT, Adam, checkpoints
systems     double-mass and Van der Pol data generators
learn       split and hybrid training schemes plus baselines
experiment  config files, seeded runs and artifacts
cli         the ``cfdyn`` command
"""

__version__ = "0.1.0"
