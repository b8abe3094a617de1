"""Bjontegaard delta rate between two rate-distortion curves.

The classic cubic-fit variant: log10(rate) is fitted as a third-order
polynomial of PSNR by least squares for each curve, both fits are
integrated exactly over the overlapping PSNR interval, and the mean
log-rate difference is turned into a percentage.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from collections.abc import Sequence

import numpy as np
from numpy.polynomial import Polynomial

FIT_DESCRIPTION = "cubic least-squares fit of log10(rate) vs PSNR, exact integral over PSNR overlap"


class BdRateError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RdCurve:
    rates: tuple[float, ...]
    psnrs: tuple[float, ...]
    label: str = ""
    channel: str = ""

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        psnrs = tuple(float(p) for p in self.psnrs)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "psnrs", psnrs)
        if len(rates) != len(psnrs):
            raise BdRateError(f"curve {self.label!r}: {len(rates)} rates but {len(psnrs)} PSNRs")
        if len(rates) < 4:
            raise BdRateError(f"curve {self.label!r}: need at least 4 points, got {len(rates)}")
        if any(not r > 0 or not math.isfinite(r) for r in rates):
            raise BdRateError(f"curve {self.label!r}: rates must be finite and positive")
        if any(not math.isfinite(p) for p in psnrs):
            raise BdRateError(f"curve {self.label!r}: PSNR values must be finite")
        if len(set(psnrs)) != len(psnrs):
            raise BdRateError(f"curve {self.label!r}: PSNR values must be distinct")

    @classmethod
    def from_points(cls, points: Sequence[tuple[float, float]], label: str = "", channel: str = ""):
        return cls(tuple(p[0] for p in points), tuple(p[1] for p in points), label, channel)

    def is_monotone(self) -> bool:
        """True when rate strictly increases with PSNR."""
        order = np.argsort(self.psnrs)
        rates = np.asarray(self.rates)[order]
        return bool(np.all(np.diff(rates) > 0))


@dataclasses.dataclass(frozen=True)
class BdRateResult:
    percent: float
    psnr_low: float
    psnr_high: float
    warnings: tuple[str, ...] = ()


def _fit(curve: RdCurve) -> Polynomial:
    return Polynomial.fit(curve.psnrs, np.log10(curve.rates), 3)


def bd_rate_detail(anchor: RdCurve, test: RdCurve) -> BdRateResult:
    notes = []
    for name, curve in (("anchor", anchor), ("test", test)):
        if not curve.is_monotone():
            msg = f"{name} curve {curve.label!r} is not monotone in rate vs PSNR"
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
            notes.append(msg)

    lo = max(min(anchor.psnrs), min(test.psnrs))
    hi = min(max(anchor.psnrs), max(test.psnrs))
    if not hi > lo:
        raise BdRateError(
            f"PSNR ranges do not overlap: anchor [{min(anchor.psnrs)}, {max(anchor.psnrs)}], "
            f"test [{min(test.psnrs)}, {max(test.psnrs)}]"
        )

    ia = _fit(anchor).integ()
    it = _fit(test).integ()
    mean_diff = float(((it(hi) - it(lo)) - (ia(hi) - ia(lo))) / (hi - lo))
    return BdRateResult((10.0 ** mean_diff - 1.0) * 100.0, lo, hi, tuple(notes))


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average rate change of ``test`` against ``anchor`` at equal PSNR, in percent.

    Negative means the test curve needs less rate.
    """
    return bd_rate_detail(anchor, test).percent
