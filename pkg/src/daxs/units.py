"""Gate-voltage virtualization and energy-axis calibration.

Plunger gate voltages (mV) map to dot chemical potentials (ueV) through
lever arms, and the potentials define the detuning and common-mode axes

    eps   = mu2 - mu1
    delta = (mu1 + mu2) / 2

reported in GHz. The lever-arm matrix uses the convention alpha_n^m = lever
arm from gate n to dot m, with gate 2 = P_L, gate 3 = P_R, dot 2 = left dot,
dot 3 = right dot (field a<gate><dot>).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

# Planck relation: E/h for 1 meV, stored to 6 significant figures.
GHZ_PER_MEV = 241.799
GHZ_PER_UEV = GHZ_PER_MEV / 1000.0


def mev_to_ghz(mev: float) -> float:
    return mev * GHZ_PER_MEV


def ghz_to_mev(ghz: float) -> float:
    return ghz / GHZ_PER_MEV


@dataclass(frozen=True)
class LeverArms:
    """Lever arms in ueV per mV: diagonal a22, a33 and cross terms a32, a23."""

    a22: float
    a33: float
    a32: float = 0.0
    a23: float = 0.0

    def __post_init__(self):
        for name in ("a22", "a33", "a32", "a23"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"lever arm {name} must be finite")
        if self.a22 <= 0 or self.a33 <= 0:
            raise ValueError("diagonal lever arms a22, a33 must be > 0")
        if self.a32 < 0 or self.a23 < 0:
            raise ValueError("cross lever arms must be >= 0")
        if self.a32 / self.a22 >= 1 or self.a23 / self.a33 >= 1:
            raise ValueError("cross/diagonal lever-arm ratios must be < 1")

    def to_dict(self) -> dict:
        return {"a22": self.a22, "a32": self.a32, "a23": self.a23, "a33": self.a33,
                "unit": "ueV_per_mV"}

    @classmethod
    def from_dict(cls, doc: dict) -> "LeverArms":
        unit = doc.get("unit", "ueV_per_mV")
        if unit != "ueV_per_mV":
            raise ValueError(f"unsupported lever-arm unit {unit!r}")
        return cls(a22=float(doc["a22"]), a33=float(doc["a33"]),
                   a32=float(doc.get("a32", 0.0)), a23=float(doc.get("a23", 0.0)))

    @classmethod
    def from_json(cls, text: str) -> "LeverArms":
        return cls.from_dict(json.loads(text))


def virtualize(pl: float, pr: float, arms: LeverArms) -> tuple[float, float]:
    """Virtual plunger voltages cancelling cross-capacitance (mV)."""
    plv = pl + (arms.a32 / arms.a22) * pr
    prv = pr + (arms.a23 / arms.a33) * pl
    return plv, prv


def devirtualize(plv: float, prv: float, arms: LeverArms) -> tuple[float, float]:
    """Invert :func:`virtualize`; the cross-ratio determinant is < 1 so the
    2x2 system is always solvable."""
    r_l = arms.a32 / arms.a22
    r_r = arms.a23 / arms.a33
    det = 1.0 - r_l * r_r
    pl = (plv - r_l * prv) / det
    pr = (prv - r_r * plv) / det
    return pl, pr


def to_energy_axes(plv: float, prv: float, arms: LeverArms) -> tuple[float, float]:
    """(eps, delta) in GHz from virtual plunger voltages."""
    mu1 = arms.a22 * plv * GHZ_PER_UEV
    mu2 = arms.a33 * prv * GHZ_PER_UEV
    return mu2 - mu1, (mu1 + mu2) / 2


def from_energy_axes(eps: float, delta: float, arms: LeverArms) -> tuple[float, float]:
    """Virtual plunger voltages (mV) realizing the given (eps, delta) in GHz."""
    mu1 = delta - eps / 2
    mu2 = delta + eps / 2
    plv = mu1 / (arms.a22 * GHZ_PER_UEV)
    prv = mu2 / (arms.a33 * GHZ_PER_UEV)
    return plv, prv
