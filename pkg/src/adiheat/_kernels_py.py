"""Pure numpy implementation of the line-sweep kernels.

Every function works on arrays in *line layout* ``(n_lines, n_points)``:
line ``l`` holds ``length[l]`` active points, the rest is padding.  Metric
arrays are indexed by point position along the line and shared by all
lines:

``wc[k]``   cell weight (``r_k`` radially, 1 axially)
``bar[k]``  control-volume extent (``hbar`` / ``etabar``)
``wf[k]``   weight of the face between points k-1 and k (``r_{k-1/2}`` / 1)
``d[k]``    distance between points k-1 and k, mirror ghosts at both ends

Faces at the start and end of each line carry no flux, except the end
face of lines flagged in ``dirichlet``, which is closed by a ghost point
holding the face value ``T_dir``.

The work is vectorised across lines; ``workers > 1`` splits the lines
into static blocks run on a thread pool.
"""
from __future__ import annotations

import numpy as np

from .parallel import ExecPlan, parallel_for_blocks

NAME = "python"

RULE_MEAN_TEMPERATURE = 0
RULE_MEAN_VALUE = 1
IFACE_LOWER = 0
IFACE_HARMONIC = 1


def _interp_by_layer(T, layer, knots, values, counts):
    out = np.zeros_like(T)
    for m in range(counts.size):
        n = counts[m]
        if n == 0:
            continue
        sel = layer == m
        if sel.any():
            out[sel] = np.interp(T[sel], knots[m, :n], values[m, :n])
    return out


def _side_lambda(layer, Ta, Tb, lk, lv, ln, rule):
    if rule == RULE_MEAN_TEMPERATURE:
        return _interp_by_layer(0.5 * (Ta + Tb), layer, lk, lv, ln)
    return 0.5 * (_interp_by_layer(Ta, layer, lk, lv, ln) + _interp_by_layer(Tb, layer, lk, lv, ln))


def _face_conductances(T, layer, length, wf, d, dirichlet, T_dir, lk, lv, ln, rule, iface):
    """Return ``A`` of shape (n_lines, n_points + 1); ``A[:, k]`` is face k."""
    nl, npt = T.shape
    A = np.zeros((nl, npt + 1))
    if npt > 1:
        la, lb = layer[:, :-1], layer[:, 1:]
        Ta, Tb = T[:, :-1], T[:, 1:]
        lam = _side_lambda(la, Ta, Tb, lk, lv, ln, rule)
        if iface == IFACE_HARMONIC:
            other = _side_lambda(lb, Ta, Tb, lk, lv, ln, rule)
            jump = (la != lb) & (lb >= 0)
            lam = np.where(jump, 2.0 * lam * other / np.where(jump, lam + other, 1.0), lam)
        k = np.arange(1, npt)
        active = k[None, :] < length[:, None]
        A[:, 1:npt] = np.where(active, (wf[1:npt] / d[1:npt]) * lam, 0.0)
    rows = np.nonzero(dirichlet)[0]
    if rows.size:
        last = length[rows]
        lay = layer[rows, last - 1]
        lam_end = _interp_by_layer(np.full(rows.size, float(T_dir)), lay, lk, lv, ln)
        A[rows, last] = (wf[last] / d[last]) * lam_end
    return A


def _ghost_terms(A, length, dirichlet):
    """Per-line coefficient multiplying ``(T_dir - T_last)`` at a Dirichlet end."""
    g = np.zeros(A.shape[0])
    rows = np.nonzero(dirichlet)[0]
    g[rows] = 2.0 * A[rows, length[rows]]
    return g


def _operator_block(T, layer, length, wc, bar, wf, d, dirichlet, T_dir, lk, lv, ln, rule, iface):
    nl, npt = T.shape
    A = _face_conductances(T, layer, length, wf, d, dirichlet, T_dir, lk, lv, ln, rule, iface)
    flux = np.zeros((nl, npt + 1))
    if npt > 1:
        flux[:, 1:npt] = A[:, 1:npt] * (T[:, 1:] - T[:, :-1])
    rows = np.nonzero(dirichlet)[0]
    if rows.size:
        last = length[rows]
        flux[rows, last] = 2.0 * A[rows, last] * (T_dir - T[rows, last - 1])
    out = (flux[:, 1:] - flux[:, :-1]) * (1.0 / (wc * bar))
    active = np.arange(npt)[None, :] < length[:, None]
    return np.where(active, out, 0.0)


def apply_operator(T, layer, length, wc, bar, wf, d, dirichlet, T_dir, lk, lv, ln, rule, iface,
                   out, workers=1, interleave=False):
    def body(lines):
        out[lines] = _operator_block(T[lines], layer[lines], length[lines], wc, bar, wf, d,
                                     dirichlet[lines], T_dir, lk, lv, ln, rule, iface)

    _dispatch(T.shape[0], workers, interleave, body)
    return out


def thomas_batched(lower, diag, upper, rhs):
    """Solve many tridiagonal systems at once, one per row.

    ``lower[:, 0]`` and ``upper[:, -1]`` are ignored.  Returns the solution
    and a per-row flag that is True where a zero pivot occurred.
    """
    nl, n = diag.shape
    cp = np.empty_like(diag)
    dp = np.empty_like(diag)
    bad = np.zeros(nl, dtype=bool)
    den = diag[:, 0].copy()
    bad |= den == 0.0
    inv = 1.0 / np.where(den == 0.0, 1.0, den)
    cp[:, 0] = upper[:, 0] * inv
    dp[:, 0] = rhs[:, 0] * inv
    for k in range(1, n):
        den = diag[:, k] - lower[:, k] * cp[:, k - 1]
        zero = den == 0.0
        if zero.any():
            bad |= zero
            den = np.where(zero, 1.0, den)
        inv = 1.0 / den
        cp[:, k] = upper[:, k] * inv
        dp[:, k] = (rhs[:, k] - lower[:, k] * dp[:, k - 1]) * inv
    x = dp
    for k in range(n - 2, -1, -1):
        x[:, k] -= cp[:, k] * x[:, k + 1]
    return x, bad


def _sweep_block(T_iter, T_base, explicit, cap_fixed, frozen, half_tau, layer, length, wc, bar, wf, d,
                 dirichlet, T_dir, rho, cvk, cvv, cvn, lk, lv, ln, chik, chiv, chin, src_amp, rule, iface):
    nl, npt = T_iter.shape
    active = np.arange(npt)[None, :] < length[:, None]
    if frozen:
        cap = cap_fixed
        X = 0.0
    else:
        lay = np.maximum(layer, 0)
        cap = rho[lay] * _interp_by_layer(T_iter, layer, cvk, cvv, cvn)
        amp = src_amp[lay]
        X = np.where(amp != 0.0, amp * _interp_by_layer(T_iter, layer, chik, chiv, chin), 0.0)
    A = _face_conductances(T_iter, layer, length, wf, d, dirichlet, T_dir, lk, lv, ln, rule, iface)
    isc = 1.0 / (wc * bar)
    inv_ht = 1.0 / half_tau
    lower = -A[:, :-1] * isc
    upper = -A[:, 1:] * isc
    diag = cap * inv_ht + (A[:, :-1] + A[:, 1:]) * isc
    flux = np.zeros((nl, npt + 1))
    if npt > 1:
        flux[:, 1:npt] = A[:, 1:npt] * (T_iter[:, 1:] - T_iter[:, :-1])
    rows = np.nonzero(dirichlet)[0]
    if rows.size:
        last = length[rows]
        # ghost elimination doubles the end-face coupling
        diag[rows, last - 1] += A[rows, last] * isc[last - 1]
        flux[rows, last] = 2.0 * A[rows, last] * (T_dir - T_iter[rows, last - 1])
    # the unknown is the update x - T_iter, so a steady state reproduces itself exactly
    rhs = cap * inv_ht * (T_base - T_iter) + explicit + X + (flux[:, 1:] - flux[:, :-1]) * isc
    diag = np.where(active, diag, 1.0)
    lower = np.where(active, lower, 0.0)
    upper = np.where(active, upper, 0.0)
    rhs = np.where(active, rhs, 0.0)
    delta, bad = thomas_batched(lower, diag, upper, rhs)
    delta = np.where(active, delta, 0.0)
    x = T_iter + delta
    diff = np.abs(delta).max(axis=1) if npt else np.zeros(nl)
    return x, diff, bad


def sweep_iteration(T_iter, T_base, explicit, cap_fixed, frozen, half_tau, layer, length, wc, bar, wf, d,
                    dirichlet, T_dir, rho, cvk, cvv, cvn, lk, lv, ln, chik, chiv, chin, src_amp, rule, iface,
                    out, line_max, status, workers=1, interleave=False):
    """One simple-iteration solve of every line; fills ``out``, ``line_max`` and ``status``."""

    def body(lines):
        x, diff, bad = _sweep_block(
            T_iter[lines], T_base[lines], explicit[lines], cap_fixed[lines] if frozen else None, frozen,
            half_tau, layer[lines], length[lines], wc, bar, wf, d, dirichlet[lines], T_dir, rho,
            cvk, cvv, cvn, lk, lv, ln, chik, chiv, chin, src_amp, rule, iface)
        out[lines] = x
        line_max[lines] = diff
        status[lines] = bad.astype(status.dtype)

    _dispatch(T_iter.shape[0], workers, interleave, body)


def _dispatch(count, workers, interleave, body):
    if workers <= 1 or count <= 1:
        body(np.arange(count))
        return
    plan = ExecPlan(workers=workers, chunking="static-interleave" if interleave else "static-block")
    parallel_for_blocks(count, plan, body)
