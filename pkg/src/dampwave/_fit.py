"""Log-log regression used by every decay / growth experiment."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares fit ``log y = slope * log x + intercept``.

    ``max_dev`` is the largest absolute residual in log space, so a pure
    power law gives ``max_dev`` at roundoff level.
    """

    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    window: tuple
    max_dev: float
    extra: dict = field(default_factory=dict)

    def record(self):
        """JSON-ready summary."""
        out = {
            "slope": float(self.slope),
            "intercept": float(self.intercept),
            "window": [float(self.window[0]), float(self.window[1])],
            "max_dev": float(self.max_dev),
        }
        for k, v in self.extra.items():
            out[k] = v
        return out


def loglog_fit(x, y, window=None, **extra):
    """Fit a power law to positive data, optionally restricted to ``window``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError("abscissa and ordinate differ in length")
    if window is None:
        window = (float(x.min()), float(x.max()))
    lo, hi = window
    sel = (x >= lo * (1 - 1e-12)) & (x <= hi * (1 + 1e-12))
    if sel.sum() < 2:
        raise ValidationError(f"fit window {window} holds fewer than 2 points")
    xs, ys = x[sel], y[sel]
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValidationError("log-log fit needs positive finite data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    dev = np.max(np.abs(ly - (slope * lx + intercept)))
    return ExponentFit(xs, ys, float(slope), float(intercept),
                       (float(xs.min()), float(xs.max())), float(dev), dict(extra))
