# -*- coding: utf-8 -*-
from functools import partial
from json import JSONDecodeError, dumps, loads


class GlobalConfig:
    # system errors, will not be handled
    SYSTEM_ERRORS = (KeyboardInterrupt, OSError, SystemExit)
    # can be set as orjson / ujson
    JSONDecodeError = JSONDecodeError
    json_dumps = partial(dumps, sort_keys=True, ensure_ascii=False)
    json_loads = loads
    __encoding__ = 'utf-8'
    SCHEMA_VERSION = 1
    # membership and activity: |a.x - b| <= TOL_MEM * (1 + |b|)
    TOL_MEM = 1e-9
    TOL_LP = 1e-9
    # set-equality certificates
    TOL_EQ = 1e-7
    TOL_LSV = 1e-8
    TOL_SEMI = 1e-3
    # agreement of two seeded sphere searches
    TOL_SEARCH = 1e-6
    MAX_PATTERNS = 4096
    MAX_FACE_SUBSETS = 20000
    # bounds every LP so that "unbounded" never reaches the decision code
    LP_BOX = 1e6
    SEED = 0
    NUMERIC_ONLY = False
    SEMI_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    PROBE_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)
    PROBE_DIRECTIONS = 64
    CURVE_SCHEDULE = (1e-1, 1e-2, 1e-3)
    DIRECTION_BALL_SAMPLES = 16
    GRID_POINTS = 720
    MULTISTARTS = 64
    ETA_GRID = 16
    ALPHA_SWEEP = 8

    @classmethod
    def init_rng(cls, seed=None):
        """Make a deterministic generator, seeded from `SEED` by default."""
        from numpy.random import default_rng
        return default_rng(cls.SEED if seed is None else seed)
