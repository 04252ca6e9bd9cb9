"""Compiled inner loops: bump application, tournament tree, min search.

Grid convention: cell k of a side of G cells sits at k * dx with dx = D/G,
so cell 0 contains the origin. In d = 2 the linear index is i0 * G + i1.

The tournament tree is a flat array of size 2P (P the next power of two
>= number of cells); node 1 is the root, leaves live at P + i and padding
leaves hold +inf.
"""

import math

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def psi(kind, x):
    if x >= 1.0:
        return 0.0
    if kind == 0:
        return 1.0 - x
    if kind == 1:
        y = 1.0 - x
        return y * y * y
    if kind == 2:
        return 1.0 - x * x
    return 1.0


@njit(nogil=True, cache=True)
def tdist(a, D):
    a = abs(a) % D
    return min(a, D - a)


@njit(nogil=True, cache=True)
def tree_build(tree, values, P):
    n = values.shape[0]
    for i in range(P):
        tree[P + i] = values[i] if i < n else np.inf
    for k in range(P - 1, 0, -1):
        tree[k] = min(tree[2 * k], tree[2 * k + 1])


@njit(nogil=True, cache=True)
def tree_refresh(tree, values, P, a, b):
    """Re-read leaves a..b (inclusive, no wrap) and fix their ancestors."""
    for i in range(a, b + 1):
        tree[P + i] = values[i]
    lo = (P + a) >> 1
    hi = (P + b) >> 1
    while lo >= 1:
        for k in range(lo, hi + 1):
            tree[k] = min(tree[2 * k], tree[2 * k + 1])
        lo >>= 1
        hi >>= 1


@njit(nogil=True, cache=True)
def _refresh_wrapped(tree, values, P, lo, hi, G, offset):
    # lo..hi are unreduced indices along one side; split at the seam
    if hi - lo + 1 >= G:
        tree_refresh(tree, values, P, offset, offset + G - 1)
        return
    a = lo % G
    b = hi % G
    if a <= b:
        tree_refresh(tree, values, P, offset + a, offset + b)
    else:
        tree_refresh(tree, values, P, offset + a, offset + G - 1)
        tree_refresh(tree, values, P, offset, offset + b)


@njit(nogil=True, cache=True)
def bump_1d(values, tree, P, G, D, dx, c, z, amp, kind, track):
    # one spare cell on each side guards against rounding in ceil/floor
    lo = int(math.ceil((c - z) / dx)) - 1
    hi = int(math.floor((c + z) / dx)) + 1
    if hi - lo + 1 >= G:
        lo = 0
        hi = G - 1
    for k in range(lo, hi + 1):
        i = k % G
        v = tdist(i * dx - c, D)
        if v < z:
            values[i] += amp * psi(kind, v / z)
    if track:
        _refresh_wrapped(tree, values, P, lo, hi, G, 0)


@njit(nogil=True, cache=True)
def bump_2d(values, tree, P, G, D, dx, c0, c1, z, amp, kind, track, vec, theta):
    """Scalar bump on `values`; if `vec` is non-empty also add bump * theta to it."""
    with_vec = vec.shape[0] > 0
    lo0 = int(math.ceil((c0 - z) / dx)) - 1
    hi0 = int(math.floor((c0 + z) / dx)) + 1
    if hi0 - lo0 + 1 >= G:
        lo0 = 0
        hi0 = G - 1
    for k0 in range(lo0, hi0 + 1):
        i0 = k0 % G
        v0 = tdist(i0 * dx - c0, D)
        r = z - v0
        if r <= 0.0:
            continue
        lo1 = int(math.ceil((c1 - r) / dx)) - 1
        hi1 = int(math.floor((c1 + r) / dx)) + 1
        if hi1 - lo1 + 1 >= G:
            lo1 = 0
            hi1 = G - 1
        base = i0 * G
        for k1 in range(lo1, hi1 + 1):
            i1 = k1 % G
            v = v0 + tdist(i1 * dx - c1, D)
            if v < z:
                x = amp * psi(kind, v / z)
                values[base + i1] += x
                if with_vec:
                    vec[base + i1, 0] += x * theta[0]
                    vec[base + i1, 1] += x * theta[1]
                    vec[base + i1, 2] += x * theta[2]
        if track:
            _refresh_wrapped(tree, values, P, lo1, hi1, G, base)


@njit(nogil=True, cache=True)
def argmin_nearest(tree, P, n, G, d, D, dx, u):
    """Cell with the exact minimum value nearest to u, then lowest index.

    Returns (cell, number of cells attaining the minimum).
    """
    m = tree[1]
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[0] = 1
    best = -1
    best_dist = np.inf
    count = 0
    while top >= 0:
        k = stack[top]
        top -= 1
        if tree[k] != m:
            continue
        if k >= P:
            i = k - P
            if i >= n:
                continue
            count += 1
            if d == 1:
                dist = tdist(i * dx - u[0], D)
            else:
                dist = tdist((i // G) * dx - u[0], D) + tdist((i % G) * dx - u[1], D)
            if dist < best_dist:
                best_dist = dist
                best = i
            continue
        # right child first so the left subtree (lower indices) is visited first
        top += 1
        stack[top] = 2 * k + 1
        top += 1
        stack[top] = 2 * k
    return best, count


@njit(nogil=True, cache=True)
def run_block(values, tree, P, G, d, D, dx, kind, z, amp, pts, is_min, track,
              centers_out, ties_out):
    """Apply len(z) deposits. For the min model `pts` holds the tie-break
    points U; otherwise it holds the centers."""
    n = values.shape[0]
    empty_vec = np.empty((0, 3))
    empty_theta = np.zeros(3)
    for j in range(z.shape[0]):
        if is_min:
            cell, cnt = argmin_nearest(tree, P, n, G, d, D, dx, pts[j])
            ties_out[j] = cnt
            if d == 1:
                centers_out[j, 0] = cell * dx
            else:
                centers_out[j, 0] = (cell // G) * dx
                centers_out[j, 1] = (cell % G) * dx
        else:
            ties_out[j] = 0
            for a in range(d):
                centers_out[j, a] = pts[j, a]
        if d == 1:
            bump_1d(values, tree, P, G, D, dx, centers_out[j, 0], z[j], amp[j], kind, track)
        else:
            bump_2d(values, tree, P, G, D, dx, centers_out[j, 0], centers_out[j, 1],
                    z[j], amp[j], kind, track, empty_vec, empty_theta)


@njit(nogil=True, cache=True)
def run_block_stellar(vec, values, tree, P, G, D, dx, kind, z, amp, pts, theta, track):
    for j in range(z.shape[0]):
        bump_2d(values, tree, P, G, D, dx, pts[j, 0], pts[j, 1], z[j], amp[j], kind,
                track, vec, theta[j])
