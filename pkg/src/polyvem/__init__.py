"""Lowest-order nonconforming virtual element method on polygonal meshes,
with extended-patch stabilization for anisotropic cells."""

from .geometry import GeometryConfig, assign_patches, classify, find_patch
from .mesh import Mesh, build_mesh, gen_cut_cartesian, gen_fixture, gen_uniform_quad
from .system import assemble, solve

__version__ = "0.1.0"
