"""Single leaky integrate-and-fire neuron under constant current.

The membrane obeys

    tau_m * dV/dt = -(V - e_l) + R * I,    R = tau_m / c_m

and is advanced on a fixed grid with the exact exponential propagator, so a
constant drive never accumulates integration drift.  Threshold crossings are
checked at grid points only; a spike resets V to ``v_reset`` and clamps it
there for ``t_ref`` before integration resumes.

Units follow the usual neuroscience convention: pF, ms, mV, pA (and so
R = tau_m / c_m comes out in GOhm, making R * I a voltage in mV).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

from .errors import CharacterizationError, InvalidParamsError

# spike times are multiples of dt carried as floats; flooring them to whole
# milliseconds must not be fooled by 59.999999999 vs 60
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class LifParams:
    c_m: float = 250.0
    tau_m: float = 10.0
    t_ref: float = 2.0
    e_l: float = 0.0
    v_th: float = 20.0
    v_reset: float = 10.0
    v_m0: float = -70.0
    dt: float = 0.1
    t_sim: float = 60.0
    # accepted for configuration parity with the reference simulator; a pure
    # DC drive never touches the synapses
    tau_syn_ex: float = 0.5
    tau_syn_in: float = 0.5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise InvalidParamsError(f"{name} must be finite, got {value!r}")
        for name in ("c_m", "tau_m", "dt", "t_sim"):
            if getattr(self, name) <= 0:
                raise InvalidParamsError(f"{name} must be > 0")
        if self.t_ref < 0:
            raise InvalidParamsError("t_ref must be >= 0")
        if not self.v_reset < self.v_th:
            raise InvalidParamsError("v_reset must be below v_th")
        steps = self.t_sim / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise InvalidParamsError("t_sim must be a whole number of dt steps")

    @property
    def resistance(self) -> float:
        return self.tau_m / self.c_m

    @property
    def n_steps(self) -> int:
        return int(round(self.t_sim / self.dt))

    @property
    def refractory_steps(self) -> int:
        return int(math.ceil(self.t_ref / self.dt - 1e-9))


@dataclass(frozen=True)
class SpikeTrain:
    times_ms: tuple
    window_ms: float

    def __len__(self):
        return len(self.times_ms)

    def __iter__(self):
        return iter(self.times_ms)

    def quantized(self) -> "SpikeTrain":
        """Floor every spike time to a whole millisecond."""
        steps = [int(math.floor(t + _FLOOR_EPS)) for t in self.times_ms]
        if len(set(steps)) != len(steps):
            raise CharacterizationError(
                f"spike times {self.times_ms} collide after flooring to ms"
            )
        return SpikeTrain(tuple(steps), self.window_ms)


def simulate(params: LifParams, i_dc: float) -> SpikeTrain:
    """Run one neuron for ``params.t_sim`` ms at constant current ``i_dc`` pA.

    Returned spike times are exact grid times (multiples of ``dt``).
    """
    if not math.isfinite(i_dc) or i_dc < 0:
        raise InvalidParamsError(f"i_dc must be a finite non-negative current, got {i_dc!r}")
    dt = params.dt
    decay = math.exp(-dt / params.tau_m)
    # tau_m * i / c_m rather than resistance * i keeps 500 pA -> exactly 20 mV
    v_inf = params.e_l + params.tau_m * i_dc / params.c_m
    v_th, v_reset = params.v_th, params.v_reset
    n_ref = params.refractory_steps

    v = params.v_m0
    clamped = 0
    times = []
    for k in range(params.n_steps):
        if clamped:
            clamped -= 1
            continue
        v = v_inf + (v - v_inf) * decay
        if v >= v_th:
            times.append(round((k + 1) * dt, 9))
            v = v_reset
            clamped = n_ref
    return SpikeTrain(tuple(times), params.t_sim)


@dataclass(frozen=True)
class CharacterizationResult:
    """Outcome of a current sweep.

    ``levels`` holds ``(current, spike_count)`` pairs: for count 0 the highest
    current that stayed silent, for every other count the first current that
    produced it.  ``swept`` is the full ``(current, count)`` trace.
    """

    levels: tuple
    swept: tuple
    params: LifParams = field(default_factory=LifParams)

    def current_for(self, count: int) -> float:
        for current, n in self.levels:
            if n == count:
                return current
        raise KeyError(count)


def characterize(
    params: LifParams | None = None,
    i_start: float = 370.0,
    di: float = 1.0,
    target_levels: int = 10,
    max_steps: int = 5000,
) -> CharacterizationResult:
    """Sweep the drive upward until ``target_levels`` spike counts are seen.

    Mirrors the classic characterization loop: the zero-spike slot is
    overwritten by each new silent current, and a new level is appended only
    when the count exceeds the largest seen so far.
    """
    params = params or LifParams()
    if not di > 0:
        raise InvalidParamsError("di must be > 0")
    if target_levels < 1:
        raise InvalidParamsError("target_levels must be >= 1")

    zero_current = None
    levels = []
    swept = []
    top = 0
    for k in range(max_steps):
        if 1 + len(levels) >= target_levels:
            break
        current = i_start + k * di
        n = len(simulate(params, current))
        swept.append((current, n))
        if n == 0:
            if zero_current is None or current > zero_current:
                zero_current = current
        elif n > top:
            if n >= target_levels or n != top + 1:
                expected = list(range(top + 1, min(n, target_levels)))
                raise CharacterizationError(
                    f"spike count jumped from {top} to {n} at {current} pA; "
                    f"counts {expected} never observed (try a smaller di or lower i_start)"
                )
            levels.append((current, n))
            top = n
    else:
        if 1 + len(levels) < target_levels:
            raise CharacterizationError(
                f"only {1 + len(levels)} of {target_levels} levels after {max_steps} steps"
            )

    if zero_current is None:
        zero_current = i_start - di
        warnings.warn(
            f"no silent current observed from {i_start} pA; "
            f"reporting {zero_current} pA as the zero-spike level",
            stacklevel=2,
        )
    return CharacterizationResult(
        levels=((zero_current, 0), *levels), swept=tuple(swept), params=params
    )


def digit_patterns(char: CharacterizationResult, params: LifParams | None = None) -> dict:
    """Millisecond spike patterns for digits ``0..len(levels)-1``."""
    params = params or char.params
    patterns = {}
    for current, count in char.levels:
        train = SpikeTrain((), params.t_sim) if count == 0 else simulate(params, current)
        train = train.quantized()
        if len(train) != count:
            raise CharacterizationError(
                f"level current {current} pA gave {len(train)} spikes, expected {count}"
            )
        patterns[count] = train
    return patterns


def save_sweep_csv(char: CharacterizationResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["current_pA", "spike_count"])
        writer.writerows(char.swept)


def save_levels_json(char: CharacterizationResult, path) -> None:
    doc = {
        "params": asdict(char.params),
        "levels": [{"current_pA": c, "spike_count": n} for c, n in char.levels],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_levels_json(path) -> CharacterizationResult:
    """Read a level table written by :func:`save_levels_json` (no sweep trace)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
        params = LifParams(**doc.get("params", {}))
        levels = tuple((float(d["current_pA"]), int(d["spike_count"])) for d in doc["levels"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CharacterizationError(f"cannot read level table {path}: {exc}") from exc
    return CharacterizationResult(levels=levels, swept=(), params=params)
