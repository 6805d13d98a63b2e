#!/usr/bin/env python3
"""
Analysis settings for weightlab
Grid defaults, trend tolerances and the small search menus used by the criteria
"""

import os
from dataclasses import dataclass, fields, replace
from typing import Dict, Mapping, Optional

from weightlab.models import GridSpec, ParseError

try:
    from dotenv import load_dotenv
except ImportError:
    load_dotenv = None


@dataclass(frozen=True)
class AnalysisSettings:
    """Numeric knobs shared by every check; immutable so results are reproducible"""
    grid_depth: int = 40
    points_per_level: int = 8
    plane_x_min: float = -1.0
    plane_x_max: float = 16.0
    n_disc: int = 256
    n_plane: int = 512
    trend_window: int = 5
    rel_tol: float = 0.05
    abs_tol: float = 1e-9
    positivity_floor: float = 1e-6
    contraction_margin: float = 1e-3
    disc_validity_margin: float = 1e-3
    plane_validity_threshold: float = 2.0
    bisection_steps: int = 40

    # Existence quantifiers in the lemmas are searched over these menus
    SEARCH_MENUS = {
        'alpha_log2_range': (-10.0, 10.0),
        'delta': (0.25, 0.5, 0.75),
        'gamma': (2.0, 3.0, 4.0, 8.0),
        'k': tuple(range(1, 11)),
        'dilation': (2.0, 4.0, 8.0, 16.0),
        'sandwich': tuple(2.0 ** j for j in range(11)),
    }

    # Environment variable -> field
    ENV_VARS = {
        'WEIGHTLAB_GRID_DEPTH': 'grid_depth',
        'WEIGHTLAB_POINTS_PER_LEVEL': 'points_per_level',
        'WEIGHTLAB_N_DISC': 'n_disc',
        'WEIGHTLAB_N_PLANE': 'n_plane',
        'WEIGHTLAB_PLANE_X_MAX': 'plane_x_max',
    }

    def grid(self) -> GridSpec:
        return GridSpec(depth=self.grid_depth, points_per_level=self.points_per_level,
                        plane_x_min=self.plane_x_min, plane_x_max=self.plane_x_max)

    def monomial_order(self, is_disc: bool) -> int:
        return self.n_disc if is_disc else self.n_plane

    def menu(self, name: str) -> tuple:
        return self.SEARCH_MENUS[name]

    def with_overrides(self, **overrides) -> "AnalysisSettings":
        """Copy with every non-None override applied"""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ParseError(f"Unknown settings: {sorted(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "AnalysisSettings":
        """Defaults overridden by WEIGHTLAB_* variables (a .env file is loaded when available)"""
        if environ is None:
            if load_dotenv is not None:
                load_dotenv()
            environ = os.environ

        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for var, name in cls.ENV_VARS.items():
            raw = environ.get(var)
            if raw is None or raw.strip() == "":
                continue
            cast = int if types[name] in (int, 'int') else float
            try:
                values[name] = cast(raw)
            except ValueError:
                raise ParseError(f"{var} must be a number, got '{raw}'", details={'variable': var})
        return cls().with_overrides(**values)

    def to_dict(self) -> Dict[str, object]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['menus'] = {k: list(v) for k, v in self.SEARCH_MENUS.items()}
        return data


DEFAULT_SETTINGS = AnalysisSettings()
