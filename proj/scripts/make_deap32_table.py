#!/usr/bin/env python3
"""Regenerate data/deap32.tsv and data/deap32_pns_fixtures.tsv.

The electrode grid is the common 9x9 DEAP layout (columns left->right,
rows front->back). Height comes from a dome over the 9x9x9 cuboid centred
on the brain centre (4, 4, 3): z = 3 + round(5 * sqrt(1 - d^2 / 20.25)).

Fixtures are computed here, independently of the C++ implementation,
by brute force over the cuboid.
"""
import math
import sys

LAYOUT = [
    [None, None, None, "Fp1", None, "Fp2", None, None, None],
    [None, None, None, "AF3", None, "AF4", None, None, None],
    ["F7", None, "F3", None, "Fz", None, "F4", None, "F8"],
    [None, "FC5", None, "FC1", None, "FC2", None, "FC6", None],
    ["T7", None, "C3", None, "Cz", None, "C4", None, "T8"],
    [None, "CP5", None, "CP1", None, "CP2", None, "CP6", None],
    ["P7", None, "P3", None, "Pz", None, "P4", None, "P8"],
    [None, None, None, "PO3", None, "PO4", None, None, None],
    [None, None, None, "O1", "Oz", "O2", None, None, None],
]
# DEAP channel order (Geneva layout)
ORDER = ["Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1",
         "P3", "P7", "PO3", "O1", "Oz", "Pz", "Fp2", "AF4", "Fz", "F4", "F8",
         "FC6", "FC2", "Cz", "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2"]
DIM = 9
CENTER = (4, 4, 3)


def coords():
    out = {}
    for y, row in enumerate(LAYOUT):
        for x, name in enumerate(row):
            if name is None:
                continue
            d2 = (x - 4) ** 2 + (y - 4) ** 2
            z = 3 + int(math.floor(5 * math.sqrt(max(0.0, 1 - d2 / 20.25)) + 0.5))
            out[name] = (x, y, z)
    return out


def round_away(v, c):
    # half away from the centre coordinate c
    d = v - c
    r = math.floor(abs(d) + 0.5)
    return c + (r if d >= 0 else -r)


def sign(v):
    return (v > 0) - (v < 0)


def probe(cell, occupied):
    if cell not in occupied:
        return cell
    step = tuple(cell[i] + sign(CENTER[i] - cell[i]) for i in range(3))
    if step not in occupied and all(0 <= s < DIM for s in step):
        return step
    # Chebyshev shells around the stepped cell, (dz, dy, dx) lexicographic
    for r in range(1, DIM + 1):
        for dz in range(-r, r + 1):
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if max(abs(dx), abs(dy), abs(dz)) != r:
                        continue
                    c = (step[0] + dx, step[1] + dy, step[2] + dz)
                    if all(0 <= s < DIM for s in c) and c not in occupied:
                        return c
    raise RuntimeError("cuboid exhausted")


REGIONS = [
    ("eog_h", 0, "Frontal", ["Fp1", "F3", "Fz", "AF3"]),
    ("eog_h", 1, "Occipital+Parietal", ["PO3", "O1", "Oz"]),
    ("eog_v", 0, "Frontal", ["Fp2", "F4", "Fz", "AF4"]),
    ("eog_v", 1, "Occipital+Parietal", ["PO4", "O2", "Oz"]),
    ("emg_zyg", 0, "Central(left)", ["FC1", "FC5", "CP1", "CP5"]),
    ("emg_zyg", 1, "Central(right)", ["FC2", "FC6", "CP2", "CP6"]),
    ("emg_trap", 0, "Central(left)", ["FC1", "CP1", "Cz"]),
    ("emg_trap", 1, "Central(right)", ["FC2", "CP2", "Cz"]),
    ("skin_temp", 0, "Central(Occipital)", ["CP1", "PO3", "CP2", "PO4"]),
    ("respiration", 0, "Central(Bottom)", []),
]


def main():
    c = coords()
    assert len(c) == 32 and set(c) == set(ORDER)
    with open(sys.argv[1], "w") as f:
        f.write("# deap32 montage on a 9x9x9 cuboid, brain centre (4,4,3)\n")
        f.write("# name\tx\ty\tz\n")
        for n in ORDER:
            x, y, z = c[n]
            f.write(f"{n}\t{x}\t{y}\t{z}\n")
    cns = set(c.values())
    occupied = set(cns) | {CENTER}
    rows = []
    for t, row, lobe, members in REGIONS:
        if t == "respiration":
            dpc = (CENTER[0], CENTER[1], 0)
            mp = probe(dpc, occupied)
        else:
            pts = [c[m] for m in members]
            mean = [sum(p[i] for p in pts) / len(pts) for i in range(3)]
            raw = tuple(round_away(mean[i], CENTER[i]) for i in range(3))
            dpc = probe(raw, cns | {CENTER})
            mid = tuple(round_away((dpc[i] + CENTER[i]) / 2, CENTER[i]) for i in range(3))
            mp = probe(mid, occupied)
        occupied.add(mp)
        rows.append((t, row, dpc, mp))
    with open(sys.argv[2], "w") as f:
        f.write("# type\trow\tdpc_x\tdpc_y\tdpc_z\tmp_x\tmp_y\tmp_z\n")
        for t, row, dpc, mp in rows:
            f.write(f"{t}\t{row}\t" + "\t".join(map(str, dpc + mp)) + "\n")


if __name__ == "__main__":
    main()
