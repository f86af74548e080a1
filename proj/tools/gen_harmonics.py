#!/usr/bin/env python3
"""Generate the truncated perturbation for the planar circular restricted problem.

The perturbing function of a massless body around a primary of unit mass, disturbed
by a secondary on a unit circular orbit with unit angular speed, is

    H1(L, G, l, g) = -(1/|x - x_J| - x . x_J),   x_J = (1, 0),

where (L, G, l, g) are Delaunay variables in the frame rotating with the secondary
(a = L^2, e = sqrt(1 - G^2/L^2), l mean anomaly, g argument of the pericentre).

The script samples H1 on a grid in (l, g), takes the discrete Fourier transform for
each point of a finite-difference stencil in (L, G) around (L0, G0), and converts the
values to Taylor coefficients of total degree <= 2. Harmonics with |k|_inf above the
cap, and coefficients below the threshold, are dropped. The largest dropped modulus is
written to the header so the truncation criterion can be checked downstream.
"""
import argparse
import sys

import numpy as np


def kepler_E(l, e):
    E = l + e * np.sin(l)
    for _ in range(50):
        E = E - (E - e * np.sin(E) - l) / (1.0 - e * np.cos(E))
    return E


def H1_grid(L, G, n):
    t = 2.0 * np.pi * np.arange(n) / n
    l, g = np.meshgrid(t, t, indexing="ij")
    a = L * L
    e = np.sqrt(max(0.0, 1.0 - (G / L) ** 2))
    E = kepler_E(l, e)
    x_orb = a * (np.cos(E) - e)
    y_orb = a * np.sqrt(1.0 - e * e) * np.sin(E)
    x = np.cos(g) * x_orb - np.sin(g) * y_orb
    y = np.sin(g) * x_orb + np.cos(g) * y_orb
    dist = np.sqrt((x - 1.0) ** 2 + y ** 2)
    return -(1.0 / dist - x)


def fourier(values):
    n = values.shape[0]
    return np.fft.fft2(values) / (n * n)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=3, help="resonance numerator (fast frequency)")
    ap.add_argument("--q", type=int, default=1, help="resonance denominator")
    ap.add_argument("--e0", type=float, default=0.1, help="eccentricity fixing G0")
    ap.add_argument("--kmax", type=int, default=6)
    ap.add_argument("--threshold", type=float, default=1e-7,
                    help="drop terms with |c| w^(a1+a2) below this, w = --ref-width")
    ap.add_argument("--ref-width", type=float, default=1e-3)
    ap.add_argument("--grid", type=int, default=128)
    ap.add_argument("--h", type=float, default=1e-3, help="finite-difference step in L and G")
    ap.add_argument("--degree-cap", type=int, default=4)
    ap.add_argument("--harmonic-cap", type=int, default=12)
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args(argv)

    L0 = (args.q / args.p) ** (1.0 / 3.0)
    G0 = L0 * np.sqrt(1.0 - args.e0 ** 2)
    h = args.h
    n = args.grid

    F = {}
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            F[(i, j)] = fourier(H1_grid(L0 + i * h, G0 + j * h, n))

    # Taylor coefficients of total degree <= 2 by central differences.
    taylor = {
        (0, 0): F[(0, 0)],
        (1, 0): (F[(1, 0)] - F[(-1, 0)]) / (2 * h),
        (0, 1): (F[(0, 1)] - F[(0, -1)]) / (2 * h),
        (2, 0): (F[(1, 0)] - 2 * F[(0, 0)] + F[(-1, 0)]) / (2 * h * h),
        (0, 2): (F[(0, 1)] - 2 * F[(0, 0)] + F[(0, -1)]) / (2 * h * h),
        (1, 1): (F[(1, 1)] - F[(1, -1)] - F[(-1, 1)] + F[(-1, -1)]) / (4 * h * h),
    }

    kept = []
    dropped = {}
    for (a1, a2), C in sorted(taylor.items()):
        weight = args.ref_width ** (a1 + a2)
        for k1 in range(-(n // 2) + 1, n // 2):
            for k2 in range(-(n // 2) + 1, n // 2):
                c = C[k1 % n, k2 % n]
                mag = abs(c) * weight
                if max(abs(k1), abs(k2)) > args.kmax or mag < args.threshold:
                    dropped[a1 + a2] = max(dropped.get(a1 + a2, 0.0), mag)
                    continue
                kept.append((k1, k2, a1, a2, c))

    out = sys.stdout if args.output == "-" else open(args.output, "w")
    with out:
        out.write("# Truncated perturbation of the planar circular restricted problem.\n")
        out.write("# H1 = -(1/|x - x_J| - x.x_J), Delaunay variables in the frame co-rotating with\n")
        out.write("# the secondary; units G m0 = 1, a_J = 1, omega_g = 1.\n")
        out.write(f"# resonance {args.p}:{args.q}, L0 = ({args.q}/{args.p})^(1/3), G0 = L0 sqrt(1 - e0^2), e0 = {args.e0}\n")
        out.write(f"# Fourier grid {n}x{n}, finite-difference step {h}, |k|_inf <= {args.kmax}\n")
        out.write(f"# threshold {args.threshold:.3e} on |c| w^(a1+a2), w = {args.ref_width}; kept {len(kept)} terms\n")
        for d in sorted(dropped):
            out.write(f"# largest discarded weighted modulus, degree {d}: {dropped[d]:.6e}\n")
        out.write(f"discarded_max {max(dropped.values(), default=0.0):.6e}\n")
        out.write(f"base_point {L0:.17g} {G0:.17g}\n")
        out.write(f"degree_cap {args.degree_cap}\n")
        out.write(f"harmonic_cap {args.harmonic_cap}\n")
        for k1, k2, a1, a2, c in kept:
            out.write(f"{k1} {k2} {a1} {a2} {c.real:.17g} {c.imag:.17g}\n")


if __name__ == "__main__":
    main()
