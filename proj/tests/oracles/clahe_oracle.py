"""Reference CLAHE written directly from the algorithm description with exact
rational arithmetic. Prints golden values that tests/test_imaging.cpp embeds.

Rules: tile i spans [i*extent//tiles, (i+1)*extent//tiles); tile centre is
start + (len-1)/2; histogram bins above the clip are cut, the excess sum is
spread once as excess//256 per bin, bins are re-capped at the clip and the
remainder dropped; map(v) = round_half_up(255 * cdf(v) / total) over the
clipped histogram; pixels blend the nearest tile maps bilinearly (edge pixels
use the nearest one or two), then round half up.
"""
from fractions import Fraction
import math


def tiles(extent, n):
    starts = [i * extent // n for i in range(n + 1)]
    centers = [Fraction(starts[i]) + Fraction(starts[i + 1] - starts[i] - 1, 2) for i in range(n)]
    return starts, centers


def blend(centers, pos):
    if pos <= centers[0]:
        return 0, 0, Fraction(0)
    if pos >= centers[-1]:
        return len(centers) - 1, len(centers) - 1, Fraction(0)
    j = max(i for i in range(len(centers)) if centers[i] <= pos)
    return j, j + 1, (pos - centers[j]) / (centers[j + 1] - centers[j])


def tile_map(values, clip):
    hist = [0] * 256
    for v in values:
        hist[v] += 1
    excess = sum(max(0, c - clip) for c in hist)
    hist = [min(c, clip) for c in hist]
    incr = excess // 256
    hist = [min(c + incr, clip) for c in hist]
    total = sum(hist)
    out, cdf = [], 0
    for c in hist:
        cdf += c
        out.append(math.floor(Fraction(255 * cdf, total) + Fraction(1, 2)))
    return out


def clahe(img, w, h, rows, cols, clip):
    xs, xc = tiles(w, cols)
    ys, yc = tiles(h, rows)
    maps = {}
    for r in range(rows):
        for c in range(cols):
            vals = [img[y * w + x] for y in range(ys[r], ys[r + 1]) for x in range(xs[c], xs[c + 1])]
            maps[r, c] = tile_map(vals, clip)
    out = []
    for y in range(h):
        r0, r1, wy = blend(yc, y)
        for x in range(w):
            c0, c1, wx = blend(xc, x)
            v = img[y * w + x]
            top = (1 - wx) * maps[r0, c0][v] + wx * maps[r0, c1][v]
            bot = (1 - wx) * maps[r1, c0][v] + wx * maps[r1, c1][v]
            out.append(math.floor((1 - wy) * top + wy * bot + Fraction(1, 2)))
    return out


def case_small():
    w = h = 8
    img = [(x * 37 + y * 91 + (x * y) % 13) % 256 for y in range(h) for x in range(w)]
    return clahe(img, w, h, 1, 2, 3)


def case_redistribute():
    w = h = 40
    img = [100 + (x * 7 + y * 3) % 20 for y in range(h) for x in range(w)]
    return clahe(img, w, h, 2, 2, 2)


if __name__ == "__main__":
    small = case_small()
    print("small:", ", ".join(str(v) for v in small))
    big = case_redistribute()
    print("redistribute sum:", sum(big))
    print("redistribute weighted:", sum((i + 1) * v for i, v in enumerate(big)))
    print("redistribute samples:", [big[i] for i in (0, 39, 420, 815, 1234, 1599)])
