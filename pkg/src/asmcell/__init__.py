"""asmcell: compile a neutral CAD-derived design into an executable robotic
assembly process and run it in a kinematic digital twin.

Pipeline stages: design loading -> liaison graph -> sequence enumeration ->
geometric feasibility -> tooling enrichment -> cell matching (BOP) ->
control-code generation -> simulated execution with structured feedback.
"""

from .geometry import Aabb, Pose, TriMesh, aabb_overlaps, bbox_diagonal, mesh_aabb, pose_compose, pose_inverse, solids_overlap_volume, transform_mesh

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "Pose",
    "TriMesh",
    "aabb_overlaps",
    "bbox_diagonal",
    "mesh_aabb",
    "pose_compose",
    "pose_inverse",
    "solids_overlap_volume",
    "transform_mesh",
    "__version__",
]
