#!/usr/bin/env python3
"""Regenerate golden/s2.csv with a 40-digit mpmath oracle.

Independent of the library code path: tanh-sinh quadrature on the log
integral (plus the exact algebraic tail), with shift-law reduction done
on values rather than logs.  Columns: x_re, x_im, w1, w2, s2_re, s2_im.
"""

import csv
import pathlib

import mpmath as mp

mp.mp.dps = 40


def shratio_m1(u):
    # tiny u: two series terms beat any representable cancellation;
    # otherwise pay for extra working digits instead of a long series
    if abs(u) < mp.mpf("1e-8"):
        u2 = u * u
        return u2 / 6 * (1 + u2 / 20)
    with mp.workdps(mp.mp.dps + 20):
        return mp.sinh(u) / u - 1


def j_integral(x, w1, w2):
    c = 2 * x - w1 - w2
    eps = (w1 + w2 - abs(mp.re(c))) / 2
    T = 110 / eps

    def h(t):
        pc = shratio_m1(c * t / 2)
        pa = shratio_m1(w1 * t / 2)
        pb = shratio_m1(w2 * t / 2)
        q = pa + pb + pa * pb
        return c * (pc - q) / (1 + q) / (w1 * w2 * t * t)

    splits = max(200, int(40 * abs(mp.im(c))))
    val = mp.quad(h, mp.linspace(0, T, splits))
    return val - c / (w1 * w2 * T)


def s2_oracle(x, w1, w2):
    x = mp.mpc(x)
    total = w1 + w2
    ws, wo = min(w1, w2), max(w1, w2)
    factor = mp.mpc(1)
    while mp.re(x) < total / 4:
        factor *= 2 * mp.sin(mp.pi * x / wo)
        x += ws
    while mp.re(x) >= 3 * total / 4:
        x -= ws
        factor /= 2 * mp.sin(mp.pi * x / wo)
    return factor * mp.e ** j_integral(x, w1, w2)


POINTS = [
    # (x, w1, w2)
    (mp.mpf(1), 2, 3),
    (mp.mpf("0.7"), 2, 3),
    (mp.mpf("2.5"), 2, 3),
    (mp.mpf("4.2"), 2, 3),
    (mp.mpf("-1.3"), 2, 3),
    (mp.mpf("-5.8"), 2, 3),
    (mp.mpf("11.4"), 2, 3),
    (mp.mpc("0.6", "1.1"), 2, 3),
    (mp.mpc("3.9", "-2.4"), 2, 3),
    (mp.mpc("-2.2", "3.0"), 2, 3),
    (mp.mpc("7.5", "0.35"), 2, 3),
    (mp.pi, 2 * mp.pi, 2 * mp.pi),
    (mp.mpf("1.9"), 2 * mp.pi, 2 * mp.pi),
    (mp.mpc("5.0", "2.0"), 2 * mp.pi, 2 * mp.pi),
    (mp.mpc("-3.0", "-1.5"), 2 * mp.pi, 2 * mp.pi),
    (mp.mpf("16.0"), 2 * mp.pi, 2 * mp.pi),
    (mp.mpf("9.42"), 6 * mp.pi, 5 * mp.pi),
    (mp.mpc("2.0", "4.0"), 6 * mp.pi, 5 * mp.pi),
    (mp.mpc("30.1", "-2.7"), 6 * mp.pi, 5 * mp.pi),
    (mp.mpf("0.31"), 1, mp.mpf("4.7")),
    (mp.mpc("-0.9", "0.45"), 1, mp.mpf("4.7")),
]


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "golden" / "s2.csv"
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_re", "x_im", "w1", "w2", "s2_re", "s2_im"])
        for x, w1, w2 in POINTS:
            w1, w2 = mp.mpf(w1), mp.mpf(w2)
            v = s2_oracle(x, w1, w2)
            w.writerow(
                [
                    mp.nstr(mp.re(x), 22),
                    mp.nstr(mp.im(x), 22),
                    mp.nstr(w1, 22),
                    mp.nstr(w2, 22),
                    mp.nstr(mp.re(v), 22),
                    mp.nstr(mp.im(v), 22),
                ]
            )
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
