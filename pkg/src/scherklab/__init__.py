"""Numerics for minimal surfaces in metric semidirect products R^2 x_A R."""

from .config import RunConfig, RunManifest, parse_model, read_config_file
from .douglas import (
    DoublyConfig,
    FaceAreaReport,
    SinglyConfig,
    a_max_doubly,
    d_min_singly,
    doubly_face_areas,
    epsilon_max_doubly,
    singly_face_areas,
)
from .errors import (
    AExceedsBound,
    AssumptionViolated,
    DegenerateTriangle,
    InvalidConfig,
    InvalidForModel,
    InvalidPreset,
    MeshFailure,
    NoConvergence,
    NonFinite,
    NotPositiveDefinite,
    PinchDetected,
    ScherklabError,
    StepCountTooSmall,
    WeldFailure,
)
from .geometry import (
    FrameTriple,
    GroupPoint,
    KillingField,
    Matrix2,
    MetricTensor,
    ModelMatrix,
    TangentVec,
    christoffel_at,
    exp_at,
    frame_connection,
    geodesic,
    group_multiply,
    left_frame,
    metric_at,
)
from .isometry import (
    HorizontalRotationParallelX,
    HorizontalRotationParallelY,
    IsometryDescriptor,
    LeftTranslation,
    VerticalRotation,
    apply_isometry,
    verify_isometry,
)
from .meshing import ContourSpec, DomainPolygon, Triangulation, resolve_contour, triangulate
from .periodic import (
    PeriodicAssembly,
    ReflectionAxis,
    build_doubly,
    build_singly,
    periodicity_defect,
    reflect_mesh,
    seam_curvature,
)
from .plateau import (
    SequenceReport,
    SolveOptions,
    SolveReport,
    flux,
    graph_flux,
    mean_curvature_graph,
    mesh_mean_curvature,
    polish_graph,
    solve_graph,
    solve_mesh,
    solve_sequence,
)
from .surfaces import (
    GraphSurface,
    ImmersedMesh,
    graph_area,
    height_at,
    initial_graph,
    lift,
    mesh_area,
)

__version__ = "0.1.0"
