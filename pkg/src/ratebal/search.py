"""One-dimensional bracketed minimization."""
from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
                   max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    Golden-section bracketing down to width ``tol`` followed by one parabolic
    step through the final three points. The returned point is the best of
    everything evaluated, endpoints included, so the result is never worse
    than either end of the bracket.
    """
    best_x, best_f = lo, f(lo)
    fh = f(hi)
    if fh < best_f:
        best_x, best_f = hi, fh
    if not hi > lo:
        return best_x, best_f

    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)

    xm, fm = (x1, f1) if f1 <= f2 else (x2, f2)
    if fm < best_f:
        best_x, best_f = xm, fm

    # parabola through (x1, f1), (x2, f2) and the bracket midpoint
    xc = 0.5 * (lo + hi)
    fc = f(xc)
    if fc < best_f:
        best_x, best_f = xc, fc
    pts = sorted([(x1, f1), (xc, fc), (x2, f2)])
    (xa, fa), (xb, fb), (xd, fd) = pts
    den = (xb - xa) * (fb - fd) - (xb - xd) * (fb - fa)
    if den != 0.0:
        xp = xb - 0.5 * ((xb - xa) ** 2 * (fb - fd) - (xb - xd) ** 2 * (fb - fa)) / den
        if lo <= xp <= hi:
            fp = f(xp)
            if fp < best_f:
                best_x, best_f = xp, fp
    return best_x, best_f
