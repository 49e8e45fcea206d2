"""
Characterizing the LIF neuron
=============================

A leaky integrate-and-fire neuron driven by a constant current fires a
fixed number of spikes inside a 60 ms window.  Sweeping the current upward
in 1 pA steps finds the ten currents where that count first reaches
0, 1, ..., 9.  Those ten spike trains become the digit alphabet.
"""

import numpy as np

from spikestego import lif

# %%
# The defaults: 250 pF membrane, 10 ms time constant, 2 ms refractory
# period, threshold 20 mV above rest with reset to 10 mV, integrated on a
# 0.1 ms grid.
params = lif.LifParams()
print(params)
print("membrane resistance:", params.resistance, "GOhm")

# %%
# Below about 500 pA the steady-state voltage never reaches threshold.
for current in (400.0, 500.0, 505.0, 700.0):
    train = lif.simulate(params, current)
    print(f"{current:6.1f} pA -> {len(train)} spikes at {train.times_ms}")

# %%
# The sweep.  ``levels`` holds, for count 0, the highest current that stayed
# silent and, for every later count, the first current that produced it.
char = lif.characterize(params, i_start=370.0, di=1.0)
print(f"{len(char.swept)} currents swept")
for current, count in char.levels:
    print(f"  {count} spikes from {current:.0f} pA")

# %%
# Spike counts never drop as the current grows, and refractoriness keeps
# spikes at least 2 ms apart.
counts = np.array([n for _, n in char.swept])
assert np.all(np.diff(counts) >= 0)

# %%
# The digit patterns, quantized to whole milliseconds.  These are what the
# codebook is built from.
for digit, train in lif.digit_patterns(char).items():
    print(digit, train.times_ms)
