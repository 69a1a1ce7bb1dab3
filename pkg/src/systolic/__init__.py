"""Critical points of the systole function on cube-dual tesselated surfaces."""

from systolic.surface import (
    Square,
    Systole,
    SurfaceModel,
    SurfaceParams,
    build_surface,
    incidence_matrices,
    intersects,
    min_intersections,
    systole_squares,
)

__all__ = [
    "Square",
    "Systole",
    "SurfaceModel",
    "SurfaceParams",
    "build_surface",
    "incidence_matrices",
    "intersects",
    "min_intersections",
    "systole_squares",
]

__version__ = "0.1.0"
