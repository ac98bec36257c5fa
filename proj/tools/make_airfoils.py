#!/usr/bin/env python3
"""Generate the bundled airfoil coordinate files under data/uiuc/.

Sections are standard NACA 4- and 5-digit shapes evaluated analytically
(camber line plus vertical thickness offset), written in the two layouts
found in the UIUC database: Selig (one loop, TE -> upper -> LE -> lower)
and Lednicer (point-count header, upper and lower blocks LE -> TE).
"""

import math
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "uiuc")


def thickness(t, x, closed_te):
    a4 = -0.1036 if closed_te else -0.1015
    return 5.0 * t * (0.2969 * math.sqrt(x) - 0.1260 * x - 0.3516 * x * x
                      + 0.2843 * x ** 3 + a4 * x ** 4)


def camber4(m, p, x):
    if m == 0.0:
        return 0.0
    if x < p:
        return m / (p * p) * (2.0 * p * x - x * x)
    return m / ((1.0 - p) ** 2) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x)


def camber5(x):
    # 230-series mean line (design CL 0.3, max camber at 15% chord)
    m, k1 = 0.2025, 15.957
    if x < m:
        return k1 / 6.0 * (x ** 3 - 3.0 * m * x * x + m * m * (3.0 - m) * x)
    return k1 * m ** 3 / 6.0 * (1.0 - x)


def surfaces(camber, t, n_per_side, closed_te):
    xs = [0.5 * (1.0 - math.cos(math.pi * i / (n_per_side - 1)))
          for i in range(n_per_side)]
    up = [(x, camber(x) + thickness(t, x, closed_te)) for x in xs]
    lo = [(x, camber(x) - thickness(t, x, closed_te)) for x in xs]
    return up, lo


def write_selig(path, name, up, lo):
    with open(path, "w") as f:
        f.write(name + "\n")
        for x, y in reversed(up):
            f.write(f"{x:.6f} {y:.6f}\n")
        for x, y in lo[1:]:
            f.write(f"{x:.6f} {y:.6f}\n")


def write_lednicer(path, name, up, lo):
    with open(path, "w") as f:
        f.write(name + "\n")
        f.write(f"{len(up)}. {len(lo)}.\n\n")
        for x, y in up:
            f.write(f"{x:.6f} {y:.6f}\n")
        f.write("\n")
        for x, y in lo:
            f.write(f"{x:.6f} {y:.6f}\n")


def main():
    os.makedirs(OUT, exist_ok=True)

    def c4(m, p):
        return lambda x: camber4(m, p, x)

    specials = [
        ("naca0012", c4(0.0, 0.0), 0.12, 31, False, "selig"),
        ("naca2412", c4(0.02, 0.4), 0.12, 31, False, "selig"),
        ("naca4412", c4(0.04, 0.4), 0.12, 41, False, "selig"),
        ("naca0009", c4(0.0, 0.0), 0.09, 26, True, "selig"),
        ("naca6409", c4(0.06, 0.4), 0.09, 31, True, "selig"),
        ("naca23012", camber5, 0.12, 36, False, "selig"),
        ("naca2412 (lednicer layout)", c4(0.02, 0.4), 0.12, 31, False,
         "lednicer"),
    ]
    for name, cam, t, n, closed, layout in specials:
        up, lo = surfaces(cam, t, n, closed)
        fname = name.split()[0] + ("_led" if layout == "lednicer" else "") + ".dat"
        path = os.path.join(OUT, fname)
        if layout == "selig":
            write_selig(path, name.upper(), up, lo)
        else:
            write_lednicer(path, name.upper(), up, lo)

    # family grid for the feature-learning tests: 6 cambers x 4 positions x 2 thicknesses
    for m10 in (1, 2, 3, 4, 5, 6):
        for p10 in (3, 4, 5, 6):
            for t100 in (10, 13):
                name = f"naca{m10}{p10}{t100:02d}"
                up, lo = surfaces(c4(m10 / 100.0, p10 / 10.0), t100 / 100.0,
                                  31, False)
                write_selig(os.path.join(OUT, name + ".dat"), name.upper(),
                            up, lo)


if __name__ == "__main__":
    main()
