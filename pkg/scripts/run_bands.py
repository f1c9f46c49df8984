"""Band structure of the dielectric-sphere crystal along Gamma-X-M-Gamma.

Writes bands.csv (s, k, band index, omega) into --out and prints a few
summary numbers.  Increase --cutoff for publication-quality bands; the
default keeps the run under a minute on a laptop.
"""

import argparse
import csv
import pathlib
import time

import numpy as np

from pce import lattice as lat
from pce import material as mat
from pce import planewave as pw
from pce import spectrum as sp


def sphere_crystal(eps_in=13.0, fill=0.25):
    radius = (fill * 3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)
    prims = [
        mat.GeometryPrimitive(kind="background", eps=1.0, mu=1.0),
        mat.GeometryPrimitive(kind="sphere", eps=eps_in, mu=1.0,
                              center=np.array([0.5, 0.5, 0.5]), radius=radius),
    ]
    return prims


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cutoff", type=float, default=3.0,
                    help="plane-wave cutoff in units of |e*_1| (default 3)")
    ap.add_argument("--eps", type=float, default=13.0)
    ap.add_argument("--n-bands", type=int, default=8)
    ap.add_argument("--samples", type=int, default=16, help="samples per segment")
    ap.add_argument("--out", default="bands_out")
    args = ap.parse_args()

    lattice = lat.Lattice(np.eye(3))
    dual = lat.dual_basis(lattice)
    scale = np.linalg.norm(dual.basis[0])
    modes = lat.cutoff_modes(dual, args.cutoff * scale)
    basis = pw.FiberBasis(modes)
    print(f"{len(modes)} modes, matrix dimension {basis.n}")

    w = mat.coefficients_from_primitives(sphere_crystal(eps_in=args.eps),
                                         lattice, modes)
    gram = pw.assemble_gram(w, basis)
    pw.check_definiteness(gram)

    vertices = np.array([[0, 0, 0], [0.5, 0, 0], [0.5, 0.5, 0], [0, 0, 0]])
    path = lat.kpath(vertices @ dual.basis, args.samples)

    t0 = time.monotonic()
    specs = [sp.solve_fiber(pw.fiber_problem(k, w, basis, gram=gram))
             for k in path.samples]
    print(f"{len(path.samples)} fiber solves in {time.monotonic() - t0:.1f}s")

    bs = sp.label_bands(specs, dual, n_max=args.n_bands)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bands.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "k1", "k2", "k3", "n", "omega"])
        for i, (s, k) in enumerate(zip(path.arclengths(), path.samples)):
            for n in sorted(bs.bands):
                wr.writerow([f"{s:.17g}", *(f"{x:.17g}" for x in k), n,
                             f"{bs.bands[n][i]:.17g}"])
    first = bs.bands[1]
    print(f"band 1 range: [{first.min():.4f}, {first.max():.4f}]")
    print(f"wrote {out / 'bands.csv'}")


if __name__ == "__main__":
    main()
