"""Ground-band dispersion study for the dielectric-sphere crystal.

Computes the predicted group velocities of the four linearly dispersing
ground bands from the 6x6 perturbation matrix, then checks them against
finite-k eigenvalues at a decreasing sequence of offsets t.  The relative
error should shrink roughly like t.
"""

import argparse

import numpy as np

from pce import groundstate as gs
from pce import lattice as lat
from pce import material as mat
from pce import planewave as pw


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cutoff", type=float, default=3.0,
                    help="plane-wave cutoff in units of |e*_1| (default 3)")
    ap.add_argument("--eps", type=float, default=13.0)
    ap.add_argument("--direction", type=float, nargs=3, default=[1.0, 0.0, 0.0])
    ap.add_argument("--t", type=float, nargs="+", default=[1e-1, 3e-2, 1e-2],
                    help="offsets along the direction, units of |e*_1|")
    args = ap.parse_args()

    lattice = lat.Lattice(np.eye(3))
    dual = lat.dual_basis(lattice)
    scale = np.linalg.norm(dual.basis[0])
    modes = lat.cutoff_modes(dual, args.cutoff * scale)
    basis = pw.FiberBasis(modes)

    radius = (0.25 * 3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)
    prims = [
        mat.GeometryPrimitive(kind="background", eps=1.0, mu=1.0),
        mat.GeometryPrimitive(kind="sphere", eps=args.eps, mu=1.0,
                              center=np.array([0.5, 0.5, 0.5]), radius=radius),
    ]
    w = mat.coefficients_from_primitives(prims, lattice, modes)
    gram = pw.assemble_gram(w, basis)
    pw.check_definiteness(gram)

    k_hat = np.asarray(args.direction, dtype=float)
    k_hat /= np.linalg.norm(k_hat)
    report = gs.slope_validation(w, basis, k_hat,
                                 [t * scale for t in sorted(args.t, reverse=True)],
                                 gram=gram)
    print(f"predicted slopes along {k_hat}: "
          + " ".join(f"{s:+.6f}" for s in report["slopes"]))
    print(f"{'t/|e*_1|':>10} {'max rel err':>12}")
    for row in report["validation"]:
        print(f"{row['t'] / scale:10.4g} {max(row['rel_err']):12.4g}")


if __name__ == "__main__":
    main()
