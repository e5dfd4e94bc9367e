import logging

from .cli import ProblemFile, Report, corpus, run
from .config import GlobalConfig
from .exceptions import (BasepointOffGraph, ConditionFailed, DimensionMismatch,
                         InconsistencyError, InvalidProblemError, LsvregError,
                         NonConvergent, NotPolyhedral)
from .gendiff import (DerivativeQuery, coderivative, coderivative_kernel,
                      graphical_derivative)
from .lsv import (LsvInstance, combine_bounds, lower_bound_theorem32,
                  lower_bound_theorem35, lsv_of_map, lsv_value, outer_norm,
                  reg_value, singularity_report, subderivative_estimate)
from .polyhedra import ConvexPolyhedron, PolyhedralCone, PolyhedralSet
from .regularity import (DirectionalNeighborhood, Property, RegularityVerdict,
                         Status, check_gfrerer, check_metric2_regularity,
                         check_metric_regularity, classic2_regularity,
                         curve_falsifier, m2r_equiv_gfrerer, reg_chain)
from .setmaps import (ConstantSet, EqualityManifold, GraphPolyhedral,
                      HomogeneousPiecewiseMap, Indicator, NormalConeMap,
                      Product, SmoothPlus, single_valued)
from .smoothmaps import BlackBoxMap, PolyMap
from .systems import (ConstraintSystem, VariationalSystem,
                      cs_metric2_regularity_polyhedral,
                      cs_metric2_regularity_unconstrained,
                      cs_metric_regularity, vs_metric2_regularity,
                      vs_metric_regularity)

logging.getLogger('lsvreg').addHandler(logging.NullHandler())
__all__ = [
    'GlobalConfig', 'LsvregError', 'ConditionFailed', 'DimensionMismatch',
    'BasepointOffGraph', 'NotPolyhedral', 'NonConvergent',
    'InvalidProblemError', 'InconsistencyError', 'ConvexPolyhedron',
    'PolyhedralSet', 'PolyhedralCone', 'PolyMap', 'BlackBoxMap',
    'EqualityManifold', 'GraphPolyhedral', 'Indicator', 'ConstantSet',
    'Product', 'SmoothPlus', 'NormalConeMap', 'single_valued',
    'HomogeneousPiecewiseMap', 'DerivativeQuery', 'coderivative',
    'graphical_derivative', 'coderivative_kernel', 'LsvInstance', 'lsv_of_map',
    'lsv_value', 'reg_value', 'outer_norm', 'singularity_report',
    'lower_bound_theorem32', 'lower_bound_theorem35', 'combine_bounds',
    'subderivative_estimate', 'Property', 'Status', 'RegularityVerdict',
    'DirectionalNeighborhood', 'check_metric_regularity', 'reg_chain',
    'check_metric2_regularity', 'check_gfrerer', 'm2r_equiv_gfrerer',
    'classic2_regularity', 'curve_falsifier', 'ConstraintSystem',
    'VariationalSystem', 'cs_metric_regularity',
    'cs_metric2_regularity_polyhedral', 'cs_metric2_regularity_unconstrained',
    'vs_metric_regularity', 'vs_metric2_regularity', 'ProblemFile', 'Report',
    'run', 'corpus'
]
__version__ = '0.1.0'
