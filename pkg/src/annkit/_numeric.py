"""Scalar level-set bisection used by the WIVP solver and the shift carry."""

from .errors import NoConvergence


def bisect_level(f, lo, hi, target, tol, max_iter=200, exact=False):
    """Find ``x`` between ``lo`` and ``hi`` with ``|f(x) - target| <= tol``.

    ``f(lo) - target`` and ``f(hi) - target`` must have opposite signs (or
    one of them is already within ``tol``).  The bracket is halved until the
    residual is small enough or the endpoints become adjacent floats.  With
    ``exact=True`` halving continues past ``tol`` looking for a zero residual;
    ``tol`` is then only the acceptance threshold.
    """
    stop = 0.0 if exact else tol
    g_lo = f(lo) - target
    g_hi = f(hi) - target
    if abs(g_lo) <= stop:
        return lo
    if abs(g_hi) <= stop:
        return hi
    if (g_lo > 0) == (g_hi > 0):
        if min(abs(g_lo), abs(g_hi)) <= tol:
            return lo if abs(g_lo) <= abs(g_hi) else hi
        raise NoConvergence(f"target {target!r} is not bracketed by [{lo!r}, {hi!r}]")
    # orient so that the residual is negative at lo
    if g_lo > 0:
        lo, hi, g_lo, g_hi = hi, lo, g_hi, g_lo
    for _ in range(max_iter):
        mid = lo + (hi - lo) / 2.0
        if mid == lo or mid == hi:
            break
        g_mid = f(mid) - target
        if abs(g_mid) <= stop:
            return mid
        if g_mid < 0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    best, residual = (lo, g_lo) if abs(g_lo) <= abs(g_hi) else (hi, g_hi)
    if abs(residual) <= tol:
        return best
    raise NoConvergence(
        f"bisection stalled at x={best!r} with residual {residual!r} > {tol!r}"
    )
