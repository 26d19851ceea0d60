"""Sliver spectra as the cut offset shrinks: largest eigenvalue of the
stabilization alone, extreme nonzero eigenvalues of Kc + S, and the condition
number of the reduced global matrix, patch vs original stabilization."""
import argparse

import numpy as np

from polyvem.geometry import assign_patches
from polyvem.mesh import gen_cut_cartesian
from polyvem.system import apply_dirichlet, assemble
from polyvem.vemcore import local_operators


def sliver_spectrum(mesh, patch, kind):
    ops = local_operators(mesh, patch, kind)
    A = ops.S.copy()
    k = ops.Kc.shape[0]
    A[:k, :k] += ops.Kc
    lam = np.linalg.eigvalsh(A)
    nz = lam[lam > 1e-12 * lam[-1]]
    return np.linalg.eigvalsh(ops.S)[-1], nz[0], nz[-1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3])
    args = ap.parse_args()
    print("eps,kind,S_lam_max,A_loc_lam_min_nonzero,A_loc_lam_max,global_cond")
    for eps in args.eps:
        mesh = gen_cut_cartesian(args.n, eps)
        pa = assign_patches(mesh)
        s = next(iter(mesh.slivers))
        for kind in ("patch", "original"):
            smax, lo, hi = sliver_spectrum(mesh, pa.patches[s], kind)
            red = apply_dirichlet(assemble(mesh, pa.patches, kind))
            lam = np.linalg.eigvalsh(red.A.toarray())
            print(f"{eps:.0e},{kind},{smax:.4e},{lo:.4e},{hi:.4e},{lam[-1] / lam[0]:.4e}")


if __name__ == "__main__":
    main()
