"""Pure-Python/numpy kernels; reference semantics for ``_kernels.pyx``.

Proposition integrands are written in the axisymmetric outer variables
``(rho, mu)``: ``rho`` is the length of the outer frequency and ``mu`` the
cosine of its angle with ``xi_1``.  The azimuthal ``2 pi`` and the
``|xi_1|^2`` numerator are included, so integrating over
``rho in [0, inf)``, ``mu in [-1, 1]`` gives the case contribution.
"""

from __future__ import annotations

import math

import numpy as np

TINY = 1e-300


def _log1p_ratio(x: float) -> float:
    """``log1p(x) / x`` with the removable singularity at 0 filled in."""
    if abs(x) < 1e-8:
        return 1.0 - 0.5 * x
    return math.log1p(x) / x


def prop_case1(mu: float, rho: float, tau: float, xnorm: float) -> float:
    """Plane-measure case ``|xi'_2| > |xi_2|``; outer variable ``xi_2``."""
    p2 = xnorm * xnorm + rho * rho - 2.0 * xnorm * rho * mu
    if p2 <= 0.0:
        return 0.0
    p = math.sqrt(p2)
    lam = (tau + p2 + rho * rho) / (2.0 * p)
    h = (p2 - tau - rho * rho) / (2.0 * p)
    r02 = rho * rho - lam * lam
    if r02 < 0.0:
        r02 = 0.0
    den = r02 + h * h
    if den < TINY:
        den = TINY
    d = tau + rho * rho
    y = d / den
    if abs(y) < 0.5:
        ratio = _log1p_ratio(y)
    else:
        # den + d == max(rho^2, lam^2); avoids cancellation near -1
        top = max(rho * rho if r02 > 0.0 else lam * lam, TINY)
        ratio = math.log(top / den) / y
    inner = math.pi * ratio / den
    return math.pi * xnorm * xnorm * inner / p


def prop_case2(mu: float, rho: float, tau: float, xnorm: float, restrict: float = 1.0) -> float:
    """Sphere-measure case ``|xi'_2| < |xi_2|``; outer variable ``xi'_2``.

    With ``restrict == 0`` the cap condition is dropped and the result is the
    whole delta-restricted integral resolved on spheres.
    """
    q2 = xnorm * xnorm + rho * rho - 2.0 * xnorm * rho * mu
    r2 = 0.5 * (rho * rho - tau - 0.5 * q2)
    if r2 <= 0.0 or q2 < 0.0:
        return 0.0
    q = math.sqrt(q2)
    r = math.sqrt(r2)
    pref = 2.0 * math.pi * xnorm * xnorm
    if q < 1e-300:
        if restrict and r <= rho:
            return 0.0
        return pref * math.pi / (r * r * r)
    a = 0.25 * q2 + r2
    b = q * r
    gap = abs(0.5 * q - r)
    if gap < TINY:
        gap = TINY
    l1 = 2.0 * math.log1p(2.0 * min(0.5 * q, r) / gap)
    if restrict:
        m0 = (rho * rho - a) / b
        # a - b*m0 == 2a - rho^2 == -tau, so the cap is empty unless tau < 0
        if m0 >= 1.0 or tau >= 0.0:
            return 0.0
        if m0 <= -1.0:
            lm = -l1
        else:
            lm = math.log(rho * rho / -tau)
    else:
        lm = -l1
    return pref * math.pi * (l1 - lm) / (4.0 * a * q)


def prop_case1_vec(rho, mu, tau: float, xnorm: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    mu = np.asarray(mu, dtype=float)
    out = np.empty(np.broadcast(rho, mu).shape)
    for idx, (r, m) in enumerate(np.broadcast(rho, mu)):
        out.flat[idx] = prop_case1(m, r, tau, xnorm)
    return out


def prop_case2_vec(rho, mu, tau: float, xnorm: float, restrict: float = 1.0) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    mu = np.asarray(mu, dtype=float)
    out = np.empty(np.broadcast(rho, mu).shape)
    for idx, (r, m) in enumerate(np.broadcast(rho, mu)):
        out.flat[idx] = prop_case2(m, r, tau, xnorm, restrict)
    return out


def chart_sum(nodes, weights, sing, exps, chart: int, pou_power: int) -> float:
    """Quadrature sum of ``prod_k |eta - s_k|^-a_k`` against ``weights``.

    For ``chart >= 0`` each node is further weighted by the partition of unity
    ``d_chart^-2p / sum_k d_k^-2p`` with ``d_k = |eta - s_k|``, which localises
    the sum around singular point ``chart``.
    """
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    sing = np.asarray(sing, dtype=float)
    exps = np.asarray(exps, dtype=float)
    dist = np.linalg.norm(nodes[:, None, :] - sing[None, :, :], axis=2)
    ok = np.all(dist > 0.0, axis=1)
    dist = dist[ok]
    f = np.exp(-(np.log(dist) * exps).sum(axis=1))
    if chart >= 0:
        ratio = (dist[:, chart : chart + 1] / dist) ** (2 * pou_power)
        f = f / ratio.sum(axis=1)
    return float(np.dot(weights[ok], f))


def reduce_maps(maps):
    """Leftmost-move reduction of each row of ``maps``.

    Returns the echelon representatives and the final time headers
    ``sigma^{-1}(2..n+1)``.
    """
    maps = np.array(maps, dtype=np.int64, copy=True)
    count, n = maps.shape
    headers = np.tile(np.arange(2, n + 2, dtype=np.int64), (count, 1))
    for row in range(count):
        mu = maps[row].tolist()
        hdr = headers[row].tolist()
        while True:
            j = -1
            for c in range(n - 1):
                if mu[c + 1] < mu[c]:
                    j = c + 2
                    break
            if j < 0:
                break
            # mu' = (j j+1) o mu o (j j+1)
            mu[j - 2], mu[j - 1] = mu[j - 1], mu[j - 2]
            for c in range(n):
                if mu[c] == j:
                    mu[c] = j + 1
                elif mu[c] == j + 1:
                    mu[c] = j
            hdr[j - 2], hdr[j - 1] = hdr[j - 1], hdr[j - 2]
        maps[row] = mu
        headers[row] = hdr
    return maps, headers
