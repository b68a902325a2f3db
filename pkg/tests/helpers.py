"""Independent oracle implementations shared by the test modules.

Everything here is written the slow, obvious way (scalar loops, direct
formulas) and never calls the library code paths it is used to check.
"""

import numpy as np


def bilinear_oracle(img, x, y):
    """Direct four-neighbor interpolation with hard zero outside the raster."""
    c, h, w = img.shape
    if x < 0 or x > w - 1 or y < 0 or y > h - 1:
        return np.zeros(c)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    fx, fy = x - x0, y - y0
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    out = np.zeros(c)
    for ch in range(c):
        out[ch] = (
            img[ch, y0, x0] * (1 - fx) * (1 - fy)
            + img[ch, y0, x1] * fx * (1 - fy)
            + img[ch, y1, x0] * (1 - fx) * fy
            + img[ch, y1, x1] * fx * fy
        )
    return out


def resize_oracle(img, new_h, new_w):
    """Per-pixel align-corners-false resize with edge clamping."""
    c, h, w = img.shape
    out = np.zeros((c, new_h, new_w))
    for i in range(new_h):
        for j in range(new_w):
            sy = min(max((i + 0.5) * h / new_h - 0.5, 0.0), h - 1.0)
            sx = min(max((j + 0.5) * w / new_w - 0.5, 0.0), w - 1.0)
            out[:, i, j] = bilinear_oracle(img, sx, sy)
    return out


def correlate3_replicate_oracle(plane, kernel):
    """3x3 correlation of one plane with replicate padding, scalar loops."""
    h, w = plane.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(3):
                for j in range(3):
                    yy = min(max(y + i - 1, 0), h - 1)
                    xx = min(max(x + j - 1, 0), w - 1)
                    acc += kernel[i, j] * plane[yy, xx]
            out[y, x] = acc
    return out


def gaussian_kernel_oracle(sigma):
    radius = int(np.ceil(3.0 * sigma))
    taps = np.array([np.exp(-0.5 * (i / sigma) ** 2) for i in range(-radius, radius + 1)])
    return taps / taps.sum()


def blur_oracle(img, sigma):
    """Dense 2-D tabulated-kernel blur with replicate padding."""
    kernel_1d = gaussian_kernel_oracle(sigma)
    kernel_2d = np.outer(kernel_1d, kernel_1d)
    radius = len(kernel_1d) // 2
    c, h, w = img.shape
    out = np.zeros_like(img, dtype=np.float64)
    for ch in range(c):
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(-radius, radius + 1):
                    for j in range(-radius, radius + 1):
                        yy = min(max(y + i, 0), h - 1)
                        xx = min(max(x + j, 0), w - 1)
                        acc += kernel_2d[i + radius, j + radius] * img[ch, yy, xx]
                out[ch, y, x] = acc
    return out


def conv3x3_oracle(x, weight, bias, stride):
    """Nested-loop 3x3 convolution with zero padding 1."""
    cin, h, w = x.shape
    cout = weight.shape[0]
    oh = -(-h // stride)
    ow = -(-w // stride)
    out = np.zeros((cout, oh, ow))
    for co in range(cout):
        for oy in range(oh):
            for ox in range(ow):
                acc = float(bias[co])
                for ci in range(cin):
                    for i in range(3):
                        for j in range(3):
                            yy = oy * stride + i - 1
                            xx = ox * stride + j - 1
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += float(weight[co, ci, i, j]) * x[ci, yy, xx]
                out[co, oy, ox] = acc
    return out


def central_diff(fn, x, index, step=1e-4):
    """Central finite difference of a scalar function at one coordinate."""
    xp = np.array(x, dtype=np.float64)
    xm = np.array(x, dtype=np.float64)
    xp[index] += step
    xm[index] -= step
    return (fn(xp) - fn(xm)) / (2.0 * step)


def relative_error(analytic, numeric, floor=1e-8):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def tie_free_central_diffs(fn, x, count, rng, step=1e-4, kink_tol=1e-5):
    """Central differences at coordinates sampled away from L1/ReLU ties.

    A candidate coordinate is accepted only when its two one-sided
    difference quotients agree (the +-step segment contains no kink);
    the same evaluations provide the central difference, so acceptance
    never peeks at the analytic gradient. For piecewise-linear losses the
    smooth-point agreement is at fp-noise level, so the tolerance sits
    far below any kink that could corrupt a 1e-4 gradient check.
    Returns [(index, numeric)].
    """
    f0 = fn(x)
    picked = []
    seen = set()
    attempts = 0
    while len(picked) < count and attempts < 30 * count:
        attempts += 1
        flat = int(rng.integers(0, x.size))
        if flat in seen:
            continue
        seen.add(flat)
        index = np.unravel_index(flat, x.shape)
        xp = np.array(x, dtype=np.float64)
        xm = np.array(x, dtype=np.float64)
        xp[index] += step
        xm[index] -= step
        f_plus = fn(xp)
        f_minus = fn(xm)
        g_plus = (f_plus - f0) / step
        g_minus = (f0 - f_minus) / step
        if abs(g_plus - g_minus) > kink_tol * max(abs(g_plus), abs(g_minus), 1e-8):
            continue  # kink inside the stencil: this point sits at a tie
        picked.append((index, (f_plus - f_minus) / (2.0 * step)))
    if len(picked) < count:
        raise AssertionError(f"only {len(picked)}/{count} tie-free points found")
    return picked
