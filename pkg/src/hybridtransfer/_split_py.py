"""Pure-numpy best-split search (fallback for the compiled kernel)."""

import numpy as np


def best_split(vals, order, g, h, min_child):
    """Scan every feature's sorted midpoints for the best second-order gain.

    ``vals[f]`` holds feature f sorted ascending and ``order[f]`` the sample
    indices in that order. Returns ``(feature, position, gain)`` where the
    split sits between ``vals[f, position]`` and ``vals[f, position + 1]``;
    feature is -1 when no split has positive gain. Ties resolve to the lowest
    feature, then the lowest position.
    """
    n = vals.shape[1]
    if n < 2:
        return -1, -1, 0.0
    # cumsum is a sequential scan, matching the compiled loop's rounding
    cg = np.cumsum(g[order], axis=1)
    ch = np.cumsum(h[order], axis=1)
    G = cg[:, -1:]
    H = ch[:, -1:]
    GL = cg[:, :-1]
    HL = ch[:, :-1]
    GR = G - GL
    HR = H - HL
    ok = (vals[:, :-1] < vals[:, 1:]) & (HL >= min_child) & (HR >= min_child)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = GL * GL / HL + GR * GR / HR - G * G / H
    gain = np.where(ok, gain, -np.inf)
    flat = int(np.argmax(gain))
    best = gain.flat[flat]
    if not best > 0.0:
        return -1, -1, 0.0
    f, k = divmod(flat, n - 1)
    return f, k, float(best)
