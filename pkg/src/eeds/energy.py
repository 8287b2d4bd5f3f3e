"""First-order radio model: electronics cost per bit plus a d^2 amplifier term."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadioParams:
    e_elec: float = 50e-9  # J/bit
    eps_amp: float = 100e-12  # J/bit/m^2
    e_da: float = 5e-9  # J/bit/signal
    packet_bits: int = 2000

    def __post_init__(self) -> None:
        for name in ("e_elec", "eps_amp", "e_da", "packet_bits"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def _check(**values) -> None:
    for name, v in values.items():
        if np.any(np.asarray(v) < 0):
            raise ValueError(f"{name} must be non-negative")


def tx_cost(p: RadioParams, bits, d):
    """Energy to transmit ``bits`` over ``d`` metres. Broadcasts over arrays of ``d``."""
    _check(bits=bits, d=d)
    cost = p.e_elec * bits + p.eps_amp * bits * np.square(d)
    return float(cost) if np.ndim(cost) == 0 else cost


def rx_cost(p: RadioParams, bits):
    _check(bits=bits)
    return p.e_elec * bits


def aggregation_cost(p: RadioParams, bits, signals):
    """Fusing ``signals`` packets of ``bits`` each; the head's own reading counts."""
    _check(bits=bits)
    if np.any(np.asarray(signals) < 1):
        raise ValueError("aggregation needs at least one signal")
    return p.e_da * bits * signals
