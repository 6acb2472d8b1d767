"""Meshfree handle-driven shape deformation.

Closed-form C2 blending weights over point-sampled 2D/3D domains:
k-NN graphs approximating intrinsic distance, geodesic Voronoi sizing
of compact basis supports, virtual handle insertion, harmonic transform
propagation, linear-blending deformation, a batch CLI and a live
session service.
"""

from .basis import (BezierBasis, GaussianBasis, basis_from_spec, basis_to_spec,
                    eval_bezier, eval_bezier_derivative, eval_gaussian,
                    make_bezier_basis)
from .deform import (DeformationResult, LocalMaximaReport, deform,
                     deform_progressive, mirror_permutation, scan_local_maxima)
from .distance import (DistanceField, HandleGraph, VoronoiPartition,
                       bellman_ford_reference, delaunay_graph,
                       multi_source_distances, voronoi_partition)
from .domain import (SampleDomain, SamplePoint, build_domain, insert_points,
                     load_domain, save_domain)
from .errors import MfdError
from .handles import Handle, bind_handle_specs, load_handle_file
from .transforms import HandleTransform, RigidMotion, rigid_decompose
from .virtual import (HarmonicFields, InsertionTrace, insert_virtual_handles,
                      propagate_transforms, solve_harmonic_fields)
from .weights import (WeightField, compute_weights, handle_distance_field,
                      load_weights_binary, load_weights_csv, save_weights_binary,
                      save_weights_csv, support_radii, weights_at_query)

__version__ = "0.1.0"

__all__ = [
    "BezierBasis", "GaussianBasis", "basis_from_spec", "basis_to_spec",
    "eval_bezier", "eval_bezier_derivative", "eval_gaussian", "make_bezier_basis",
    "DeformationResult", "LocalMaximaReport", "deform", "deform_progressive",
    "mirror_permutation", "scan_local_maxima",
    "DistanceField", "HandleGraph", "VoronoiPartition", "bellman_ford_reference",
    "delaunay_graph", "multi_source_distances", "voronoi_partition",
    "SampleDomain", "SamplePoint", "build_domain", "insert_points",
    "load_domain", "save_domain",
    "MfdError",
    "Handle", "bind_handle_specs", "load_handle_file",
    "HandleTransform", "RigidMotion", "rigid_decompose",
    "HarmonicFields", "InsertionTrace", "insert_virtual_handles",
    "propagate_transforms", "solve_harmonic_fields",
    "WeightField", "compute_weights", "handle_distance_field",
    "load_weights_binary", "load_weights_csv", "save_weights_binary",
    "save_weights_csv", "support_radii", "weights_at_query",
]
