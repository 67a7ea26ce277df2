"""Profile and report serialization: CSV samples and lossless JSON."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .warped import WarpedProfile, scalar_curvature_samples

__all__ = ["export_profile", "load_profile", "write_json_report", "profile_rows"]


def profile_rows(profile: WarpedProfile, resolution: int = 4096) -> np.ndarray:
    """Sample grid for CSV export: uniform resolution plus all breakpoints."""
    rs = np.concatenate([
        np.linspace(0.0, profile.length, resolution),
        profile.breakpoints(),
    ])
    rs.sort(kind="stable")
    return rs


def export_profile(profile: WarpedProfile, path, fmt: str = "csv",
                   resolution: int = 4096) -> Path:
    """Write the profile as CSV samples or as a lossless JSON descriptor.

    CSV columns: r, u, f, du, df, d2f, R.  Curvature entries below an
    irregular profile's scan floor are written as nan (the represented
    value is not meaningful there; the profile meta documents the zone).
    """
    path = Path(path)
    if fmt == "json":
        payload = profile.to_dict()
        path.write_text(json.dumps(payload, sort_keys=True))
        return path
    if fmt != "csv":
        raise ValueError(f"unknown export format {fmt!r}")

    rs = profile_rows(profile, resolution)
    u = profile.u(rs)
    f = profile.f(rs)
    du = profile.u.d1(rs)
    df = profile.f.d1(rs)
    d2f = profile.f.d2(rs)
    R = np.full_like(rs, math.nan)
    if profile.axis_regular:
        ok = np.ones_like(rs, dtype=bool)
    else:
        floor = float(profile.meta.get("curvature_scan_floor", 0.0))
        ok = rs >= floor
    R[ok] = scalar_curvature_samples(profile, rs[ok])

    with path.open("w") as fh:
        fh.write("r,u,f,du,df,d2f,R\n")
        for row in zip(rs, u, f, du, df, d2f, R):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return path


def load_profile(path) -> WarpedProfile:
    payload = json.loads(Path(path).read_text())
    return WarpedProfile.from_dict(payload)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_json_report(report: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n")
    return path
