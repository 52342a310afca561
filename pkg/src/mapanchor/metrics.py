"""Absolute trajectory error in centimetres and degrees.

Both trajectories must already live in the same world frame; no alignment is
applied before differencing, since the alignment itself is the quantity
under evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import se3
from .exceptions import LengthMismatch
from .se3 import Pose


@dataclass
class AteReport:
    rmse_trans_cm: float
    max_trans_cm: float
    rmse_rot_deg: float
    max_rot_deg: float
    n: int


def ate(est: list[Pose], gt: list[Pose]) -> AteReport:
    """Per-pose translation/rotation errors against ground truth, index-aligned."""
    if len(est) != len(gt):
        raise LengthMismatch(f"estimate has {len(est)} poses but ground truth has {len(gt)}")
    if len(est) == 0:
        raise LengthMismatch("cannot evaluate empty trajectories")
    trans = np.array([se3.translation_error_m(a, b) for a, b in zip(est, gt)]) * 100.0
    rot = np.array([se3.rotation_error_deg(a, b) for a, b in zip(est, gt)])
    return AteReport(
        rmse_trans_cm=float(np.sqrt(np.mean(trans**2))),
        max_trans_cm=float(trans.max()),
        rmse_rot_deg=float(np.sqrt(np.mean(rot**2))),
        max_rot_deg=float(rot.max()),
        n=len(est),
    )


def report_table(report: AteReport) -> str:
    """Aligned two-column summary table."""
    rows = [
        ("", "trans (cm)", "rot (deg)"),
        ("rmse", f"{report.rmse_trans_cm:.3f}", f"{report.rmse_rot_deg:.3f}"),
        ("max", f"{report.max_trans_cm:.3f}", f"{report.max_rot_deg:.3f}"),
    ]
    widths = [max(len(r[k]) for r in rows) for k in range(3)]
    lines = ["  ".join(cell.rjust(widths[k]) for k, cell in enumerate(row)) for row in rows]
    lines.append(f"poses: {report.n}")
    return "\n".join(lines) + "\n"


def report_lines(report: AteReport) -> str:
    """Machine-readable key=value form, 3 decimals."""
    return (
        f"ate_rmse_trans_cm={report.rmse_trans_cm:.3f}\n"
        f"ate_max_trans_cm={report.max_trans_cm:.3f}\n"
        f"ate_rmse_rot_deg={report.rmse_rot_deg:.3f}\n"
        f"ate_max_rot_deg={report.max_rot_deg:.3f}\n"
        f"ate_n={report.n}\n"
    )


def parse_report_lines(text: str) -> AteReport:
    """Inverse of report_lines at printed precision."""
    values: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if "=" in line and line.startswith("ate_"):
            key, _, val = line.partition("=")
            values[key] = val
    return AteReport(
        rmse_trans_cm=float(values["ate_rmse_trans_cm"]),
        max_trans_cm=float(values["ate_max_trans_cm"]),
        rmse_rot_deg=float(values["ate_rmse_rot_deg"]),
        max_rot_deg=float(values["ate_max_rot_deg"]),
        n=int(values["ate_n"]),
    )
