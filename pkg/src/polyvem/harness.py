"""Manufactured solutions, interpolation, error norms and convergence studies."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, asdict

import numpy as np

from .geometry import GeometryConfig, assign_patches
from .mesh import FAMILIES, Mesh, MeshFamily
from .quadrature import edge_average, polygon_rule
from .system import SparseSystem, Solution, solve
from .vemcore import cell_geometry, cell_projector

PI = math.pi


class StabilizationMismatch(AssertionError):
    pass


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    u: object
    grad_u: object     # returns (ux, uy)
    f: object          # -Laplace(u)

    @property
    def g(self):
        return self.u

    @property
    def linear(self) -> bool:
        return self.name == "linear"


def _zeros(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


CASES = {
    "sinsin": ManufacturedCase(
        "sinsin",
        lambda x, y: np.sin(PI * x) * np.sin(PI * y),
        lambda x, y: (PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y)),
        lambda x, y: 2 * PI ** 2 * np.sin(PI * x) * np.sin(PI * y),
    ),
    "linear": ManufacturedCase(
        "linear",
        lambda x, y: 1 + 2 * np.asarray(x, dtype=float) - 3 * np.asarray(y, dtype=float),
        lambda x, y: (2 + _zeros(x, y), -3 + _zeros(x, y)),
        _zeros,
    ),
    # harmonic, nonzero boundary data
    "expsin": ManufacturedCase(
        "expsin",
        lambda x, y: np.exp(x) * np.sin(y),
        lambda x, y: (np.exp(x) * np.sin(y), np.exp(x) * np.cos(y)),
        _zeros,
    ),
}


def interpolate(mesh: Mesh, u, q: int = 4) -> np.ndarray:
    """Face averages chi_F(u) of every face (q-point Gauss)."""
    out = np.empty(mesh.n_faces)
    for f in range(mesh.n_faces):
        a, b = mesh.vertices[mesh.faces[f]]
        out[f] = edge_average(u, a, b, q)
    return out


def energy_error(system: SparseSystem, chi_I, chi_h) -> float:
    """sqrt((chi_I - chi_h)^T A (chi_I - chi_h)); equals |||u - u_h||| since
    the interpolant has zero error in the mesh-dependent norm."""
    kind = getattr(chi_h, "stab_kind", None)
    if kind is not None and kind != system.stab_kind:
        raise StabilizationMismatch(
            f"solution computed with {kind!r} stabilization, norm uses {system.stab_kind!r}")
    if isinstance(chi_h, Solution):
        chi_h = chi_h.dofs
    e = np.asarray(chi_I, dtype=float) - np.asarray(chi_h, dtype=float)
    if e.shape != (system.n,):
        raise ValueError(f"dimension mismatch: {e.shape} vs {system.n}")
    val = float(e @ (system.A @ e))
    return math.sqrt(max(val, 0.0))


def broken_h1_error(mesh: Mesh, grad_u, chi_h) -> float:
    """sqrt(sum_K ||grad u - grad Pi_K u_h||_K^2)."""
    chi_h = np.asarray(getattr(chi_h, "dofs", chi_h), dtype=float)
    total = 0.0
    for c in range(mesh.n_cells):
        geo = cell_geometry(mesh, c)
        coef = cell_projector(geo) @ chi_h[geo.faces]
        gx, gy = coef[1] / geo.diameter, coef[2] / geo.diameter
        pts, w = polygon_rule(mesh.cell_coords(c))
        ux, uy = grad_u(pts[:, 0], pts[:, 1])
        total += float(w @ ((ux - gx) ** 2 + (uy - gy) ** 2))
    return math.sqrt(total)


@dataclass
class ConvergenceRow:
    level: int
    h: float
    ndof: int
    energy_err: float
    eoc_energy: float | None
    h1proj_err: float
    eoc_h1: float | None
    stab_kind: str
    family: str
    case: str


CSV_FIELDS = ["level", "h", "ndof", "energy_err", "eoc_energy", "h1proj_err", "eoc_h1",
              "stab_kind", "family", "case"]


def eoc(e_prev: float, e_cur: float) -> float:
    return math.log2(e_prev / e_cur)


@dataclass
class RunResult:
    mesh: Mesh
    solution: Solution
    chi_I: np.ndarray
    energy_err: float
    h1proj_err: float
    patches: list


def run_case(mesh: Mesh, case: ManufacturedCase, kind: str = "patch", cfg: GeometryConfig | None = None,
             rtol: float = 1e-11, threads: int = 1) -> RunResult:
    """Classify, patch, assemble, solve and measure one mesh."""
    pa = assign_patches(mesh, cfg)
    sol = solve(mesh, pa.patches, kind, case.f, case.g, rtol=rtol, threads=threads)
    chi_I = interpolate(mesh, case.u)
    return RunResult(mesh, sol, chi_I, energy_error(sol.system, chi_I, sol),
                     broken_h1_error(mesh, case.grad_u, sol), pa.patches)


def convergence_study(family, levels, case, kind: str = "patch", cfg: GeometryConfig | None = None,
                      rtol: float = 1e-11, threads: int = 1) -> list[ConvergenceRow]:
    """One row per level n (cells per side); EOC against the previous level."""
    if isinstance(family, str):
        family = FAMILIES[family]
    if isinstance(case, str):
        case = CASES[case]
    levels = list(levels)
    if len(levels) < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    rows: list[ConvergenceRow] = []
    for n in levels:
        r = run_case(family.mesh(n), case, kind, cfg, rtol, threads)
        e_en, e_h1 = r.energy_err, r.h1proj_err
        eo_en = eo_h1 = None
        if rows and not case.linear:
            eo_en = eoc(rows[-1].energy_err, e_en)
            eo_h1 = eoc(rows[-1].h1proj_err, e_h1)
        rows.append(ConvergenceRow(n, r.mesh.h, r.mesh.n_faces, e_en, eo_en, e_h1, eo_h1,
                                   kind, family.name, case.name))
    return rows


def robustness_study(n: int, eps_values, case="sinsin", kinds=("patch", "original"),
                     cfg: GeometryConfig | None = None, rtol: float = 1e-11) -> list[ConvergenceRow]:
    """Fixed n, cut offset eps varied; family column records eps.  No EOC."""
    if isinstance(case, str):
        case = CASES[case]
    rows = []
    for kind in kinds:
        for i, eps in enumerate(eps_values):
            fam = MeshFamily(f"cut_eps={eps:.0e}", kind="cut", eps=eps)
            r = run_case(fam.mesh(n), case, kind, cfg, rtol)
            rows.append(ConvergenceRow(n, r.mesh.h, r.mesh.n_faces, r.energy_err, None,
                                       r.h1proj_err, None, kind, fam.name, case.name))
    return rows


def _fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, float):
        return f"{v:.10e}"
    return str(v)


def rows_to_csv(rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[k]) for k in CSV_FIELDS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def mean_eoc(rows, key: str = "eoc_energy") -> float:
    vals = [getattr(r, key) for r in rows if getattr(r, key) is not None]
    return float(np.mean(vals)) if vals else float("nan")
