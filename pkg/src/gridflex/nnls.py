"""Non-negative least squares by the Lawson-Hanson active-set method."""

from __future__ import annotations

import numpy as np

from gridflex.errors import DimensionError, NumericalError


def nnls(design, target, maxiter: int | None = None) -> np.ndarray:
    """
    Solve ``min ||design @ x - target||_2`` subject to ``x >= 0``.

    Parameters
    ----------
    design : array_like, shape (m, k)
        Design matrix, ``m >= k >= 1``.
    target : array_like, shape (m,)
        Right-hand side.
    maxiter : int, optional
        Cap on outer iterations (default ``3 * k``).

    Returns
    -------
    numpy.ndarray, shape (k,)
        The non-negative minimiser.

    Notes
    -----
    Columns move from the active set (pinned at zero) to the passive set when
    their negative gradient is the largest positive entry; an inner loop
    interpolates back toward feasibility whenever the unconstrained
    least-squares step on the passive set leaves the orthant.
    """
    a = np.asarray(design, dtype=float)
    b = np.asarray(target, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"design must be 2-D, got shape {a.shape}")
    m, k = a.shape
    if not m >= k >= 1:
        raise DimensionError(f"need m >= k >= 1, got design shape {a.shape}")
    if b.shape != (m,):
        raise DimensionError(f"target shape {b.shape} does not match design rows {m}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericalError("non-finite entries in NNLS input")
    if maxiter is None:
        maxiter = 3 * k

    eps = np.finfo(float).eps
    tol = 10 * eps * max(m, k) * max(1.0, np.max(np.abs(a)) * np.max(np.abs(b), initial=0.0))

    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    w = a.T @ (b - a @ x)

    # Columns whose entry was undone by round-off; skipped until x moves.
    banned = np.zeros(k, dtype=bool)
    it = 0
    while it < maxiter:
        free = np.where(~passive & ~banned, w, -np.inf)
        if not np.max(free) > tol:
            break
        it += 1
        j = int(np.argmax(free))
        passive[j] = True
        x_before = x

        while True:
            s = np.zeros(k)
            s[passive] = np.linalg.lstsq(a[:, passive], b, rcond=None)[0]
            if np.all(s[passive] > 0):
                break
            # Step from x toward s until the first passive coordinate hits zero.
            blocking = passive & (s <= 0)
            gap = x[blocking] - s[blocking]
            alpha = np.min(np.divide(x[blocking], gap, out=np.zeros_like(gap), where=gap > 0))
            x = x + alpha * (s - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                s = np.zeros(k)
                break
        x = s
        if not passive[j] and np.array_equal(x, x_before):
            banned[j] = True
            continue
        banned[:] = False
        w = a.T @ (b - a @ x)

    # Re-solve on the final passive set for an exact stationary point.
    if passive.any():
        x = np.zeros(k)
        x[passive] = np.linalg.lstsq(a[:, passive], b, rcond=None)[0]
        np.clip(x, 0.0, None, out=x)
    return x
