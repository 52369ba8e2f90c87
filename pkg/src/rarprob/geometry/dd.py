"""Double description method on integer cones.

``extreme_rays(rows, n)`` returns generators of ``{z in R^n | h.z <= 0, h in rows}``
as a lineality basis plus extreme rays modulo that basis. The lineality space
is peeled off explicitly, so the combinatorial adjacency test stays valid on
cones that are not pointed (half-spaces, slabs, cylinders over boxes).
"""

from __future__ import annotations

from typing import Sequence

from .rational import primitive_int_vector


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def extreme_rays(rows: Sequence[Sequence[int]], n: int):
    lines = [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]
    rays: list[tuple[tuple[int, ...], int]] = []  # (vector, zero-set bitmask)
    processed = 0  # bitmask of processed row indices

    for k, h in enumerate(rows):
        if not any(h):
            continue
        bit = 1 << k
        pick = next((i for i, l in enumerate(lines) if _dot(h, l)), None)
        if pick is not None:
            l = lines.pop(pick)
            hl = _dot(h, l)
            if hl > 0:
                l = tuple(-v for v in l)
                hl = -hl
            new_lines = []
            for m in lines:
                v = _dot(h, m)
                if v:
                    m = primitive_int_vector(-hl * a + v * b for a, b in zip(m, l))
                new_lines.append(m)
            lines = new_lines
            new_rays = []
            for r, z in rays:
                v = _dot(h, r)
                if v:
                    r = primitive_int_vector(-hl * a + v * b for a, b in zip(r, l))
                new_rays.append((r, z | bit))
            new_rays.append((l, processed))
            rays = new_rays
            processed |= bit
            continue

        pos, neg, zero = [], [], []
        for r, z in rays:
            v = _dot(h, r)
            if v > 0:
                pos.append((r, z, v))
            elif v < 0:
                neg.append((r, z, v))
            else:
                zero.append((r, z | bit))
        if not pos:
            rays = [(r, z) for r, z, _ in neg] + zero
            processed |= bit
            continue
        need = n - len(lines) - 2
        all_rays = [(r, z) for r, z, _ in pos] + [(r, z) for r, z, _ in neg] + [
            (r, z & ~bit) for r, z in zero
        ]
        created = []
        for rp, zp, vp in pos:
            for rn, zn, vn in neg:
                common = zp & zn
                if need > 0 and bin(common).count("1") < need:
                    continue
                adjacent = True
                for ro, zo in all_rays:
                    if ro is rp or ro is rn:
                        continue
                    if zo & common == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vec = primitive_int_vector(vp * b - vn * a for a, b in zip(rp, rn))
                created.append((vec, common | bit))
        rays = [(r, z) for r, z, _ in neg] + zero + created
        processed |= bit

    return lines, [r for r, _ in rays]
