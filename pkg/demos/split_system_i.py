"""Learning the double-mass system with two band-limited GRUs.

Run with ``python demos/split_system_i.py [epochs]`` (default 300, about a
minute). The noisy training interval is split into a high and a low band;
the low band is decimated by two, one GRU is fitted per band, and the
prediction over 1000 steps is the sum of both rollouts. A single full-band
GRU with the same number of hidden units is trained for comparison with a
reduced epoch budget so the demo stays short.
"""

import sys

from cfdyn.learn import SplitConfig, TrainSpec, predict_baseline, predict_split_components, train_baseline, train_split
from cfdyn.signal import NoiseSpec, add_noise, rmse
from cfdyn.systems import gen_double_mass

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 300

truth = gen_double_mass()
observed = add_noise(truth, NoiseSpec(variance=0.1, seed=0))
train = observed[:250]

cfg = SplitConfig(train=TrainSpec(subtraj_len=150, warmup=30, epochs=epochs), seed=0)
trained = train_split(cfg, train)
parts = predict_split_components(trained, train, horizon=1000)
target = truth[30:1000]
print(f"split model:  RMSE {rmse(parts.total, target):.3f}  ({trained.runtime_s:.0f} s)")
print(f"  high band rollout std {parts.high.samples.std():.3f}, low band rollout std {parts.low.samples.std():.3f}")

base = train_baseline("gru", cfg.baseline_config(epochs=epochs), train)
print(f"single GRU:   RMSE {rmse(predict_baseline(base, train, 1000), target):.3f}  ({base.runtime_s:.0f} s)")
