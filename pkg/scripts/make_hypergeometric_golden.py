#!/usr/bin/env python3
"""Regenerate golden/hypergeometric.json with mpmath oracles.

Everything here is transcribed from the defining displays and evaluated
with mpmath, independent of the library code path.  At the default
periods (2pi, 2pi) the double sine collapses to a Barnes-G ratio
(checked below against the strip-integral oracle from make_s2_golden),
which keeps the quadrature oracles fast; the integrals use mp.quad on
unit segments out to twice the truncation radius the library would pick.
"""

import json
import pathlib
import sys
import time

import mpmath as mp

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))
from make_s2_golden import s2_oracle  # noqa: E402

mp.mp.dps = 40

RHO = 2 * mp.pi
LAM = 2 * mp.pi
MU = mp.mpf("0.5")
LAMBDA = mp.mpf("-0.3")
BETA2 = (mp.mpf(0), mp.mpf("0.4"))


def s2_selfdual(x):
    # S2(x; 2pi, 2pi) = (2pi)^(1-u) G(u)/G(2-u), u = x/(2pi)
    u = mp.mpc(x) / (2 * mp.pi)
    return (2 * mp.pi) ** (1 - u) * mp.barnesg(u) / mp.barnesg(2 - u)


def phi_selfdual(a, Lam):
    return 1 / (s2_selfdual(1j * a - Lam * mp.pi) * s2_selfdual(-1j * a - Lam * mp.pi))


def quad_line(f, radius):
    segs = mp.linspace(-radius, radius, 2 * int(radius) + 1)
    return mp.quad(f, segs)


def main():
    t0 = time.time()
    for x in (mp.mpf("1.9"), mp.mpc("5.0", "2.0")):
        a = s2_selfdual(x)
        b = s2_oracle(x, RHO, LAM)
        assert abs(a / b - 1) < mp.mpf("1e-30"), (x, a, b)

    out = {}

    # psi(0) at (2pi, 2pi): 1/S2(pi)^2 by the strip-integral oracle
    psi0 = 1 / s2_oracle(mp.pi, RHO, LAM) ** 2
    out["psi0"] = {
        "periods": [mp.nstr(RHO, 22), mp.nstr(LAM, 22)],
        "re": mp.nstr(mp.re(psi0), 22),
        "im": mp.nstr(mp.im(psi0), 22),
    }

    # g sample: rho flavor, n=2, l=1, L=(1,0), alpha = 0.3 + 0.7i
    # one variable on site 1: exp factor against site 1, sh against site 2
    alpha = mp.mpc("0.3", "0.7")
    g = mp.e ** (-(mp.pi / RHO) * (alpha - BETA2[0] + LAMBDA * mp.pi * 1j)) * mp.sinh(
        (mp.pi / RHO) * (alpha - BETA2[1] - LAMBDA * mp.pi * 1j)
    )
    out["g_sample"] = {
        "alpha": ["0.3", "0.7"],
        "L": [1, 0],
        "re": mp.nstr(mp.re(g), 22),
        "im": mp.nstr(mp.im(g), 22),
    }

    # pairing n=1 l=1 at the defaults: the two weights are pure
    # exponentials, the site kernel is phi(.; Lambda)
    def pairing_integrand(a):
        w_rho = mp.e ** (-(mp.pi / RHO) * (a + LAMBDA * mp.pi * 1j))
        w_lam = mp.e ** (-(mp.pi / LAM) * (a + LAMBDA * mp.pi * 1j))
        return mp.e ** (MU * a) * phi_selfdual(a, LAMBDA) * w_rho * w_lam

    # library truncation: 14 decades at unit envelope rate ~ 64.5; doubled
    t = time.time()
    val = quad_line(pairing_integrand, 130)
    out["pairing_n1l1"] = {
        "re": mp.nstr(mp.re(val), 22),
        "im": mp.nstr(mp.im(val), 22),
    }
    print(f"pairing oracle {mp.nstr(val, 20)} [{time.time()-t:.0f}s]")

    # F_1 at x = 0.2: envelope rate 0.65 on the slow side -> radius 50; doubled
    t = time.time()
    f1 = quad_line(lambda a: mp.e ** (mp.mpf("0.2") * a) * phi_selfdual(a, LAMBDA), 100)
    out["f1_x02"] = {
        "x": "0.2",
        "re": mp.nstr(mp.re(f1), 22),
        "im": mp.nstr(mp.im(f1), 22),
    }
    print(f"F1 oracle {mp.nstr(f1, 20)} [{time.time()-t:.0f}s]")

    path = pathlib.Path(__file__).resolve().parent.parent / "golden" / "hypergeometric.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {path} [{time.time()-t0:.0f}s total]")


if __name__ == "__main__":
    main()
