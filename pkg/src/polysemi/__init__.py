"""Polynomial semigroups and random iteration: Julia sets, fibers, geometry and constructions."""

from .classify import ClassificationReport, classify_trichotomy, pairwise_relation
from .construct import (Certificate, CertificateFailed, InvalidDegreePair, annulus_pullback, attach_generator,
                        build_family, c0_bound, disk_invariance, equivalence_51, power_pair, trapping_regions_check)
from .geometry import (CurveSample, JohnEstimate, RatioProfile, fiber_curve, jordan_test, john_estimate,
                       quasicircle_ratio, trace_boundary)
from .julia import (PointCloud, backward_orbit_sample, boundary_cloud, components, external_ray, fiber_raster,
                    green_value, hat_fiber_julia, hausdorff_distance, self_similarity_residual, surrounding_compare)
from .poly import (Polynomial, compose, critical_values_finite, escape_radius, eval_poly, preimages,
                   repelling_fixed_points, roots, uniform_escape_radius)
from .raster import GridSpec, Raster
from .semigroup import (IID, GeneratorSet, Periodic, Prefix, Word, eval_word, hyperbolic_heuristic, khat_estimate,
                        postcritical_bounded_check, realize_prefix, shift)

__version__ = "0.1.0"

__all__ = ["ClassificationReport", "classify_trichotomy", "pairwise_relation", "Certificate",
           "CertificateFailed", "InvalidDegreePair", "annulus_pullback", "attach_generator", "build_family",
           "c0_bound", "disk_invariance", "equivalence_51", "power_pair", "trapping_regions_check",
           "CurveSample", "JohnEstimate", "RatioProfile", "fiber_curve", "jordan_test", "john_estimate",
           "quasicircle_ratio", "trace_boundary", "PointCloud", "backward_orbit_sample", "boundary_cloud",
           "components", "external_ray", "fiber_raster", "green_value", "hat_fiber_julia",
           "hausdorff_distance", "self_similarity_residual", "surrounding_compare", "Polynomial", "compose",
           "critical_values_finite", "escape_radius", "eval_poly", "preimages", "repelling_fixed_points",
           "roots", "uniform_escape_radius", "GridSpec", "Raster", "IID", "GeneratorSet", "Periodic",
           "Prefix", "Word", "eval_word", "hyperbolic_heuristic", "khat_estimate",
           "postcritical_bounded_check", "realize_prefix", "shift"]
