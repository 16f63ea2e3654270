"""Fusing a learned high band with a simplified simulator.

Run with ``python demos/hybrid_vdp.py [epochs]`` (default 200). The truth is
a forced Van-der-Pol oscillator; the simulator ignores the forcing and uses
a different damping. An Euler-stepped MLP is trained through the
complementary recurrence so that only its high band reaches the output,
while the simulator supplies the low band.
"""

import sys
from dataclasses import replace

from cfdyn.experiment import build_data, load_config, run_seed
from cfdyn.signal import rmse

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 200

cfg = load_config("vdp_hybrid_mlp_smoke")
cfg = replace(cfg, method=replace(cfg.method, train=replace(cfg.method.train, epochs=epochs)))
data = build_data(cfg)
result = run_seed(cfg, cfg.seeds[0], data)["ours"]

R, N = cfg.method.train.warmup, cfg.data.horizon
truth = data.truth[R:N]
print(f"simulator alone:        RMSE {rmse(data.simulator[R:N], truth):.3f}")
print(f"filtered hybrid model:  RMSE {rmse(result.prediction, truth):.3f}  ({result.runtime_s:.0f} s)")
print(f"raw network rollout:    RMSE {rmse(result.components['rollout'], truth):.3f}")
