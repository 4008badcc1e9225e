"""Human observation geometry: gaze rays, table-plane hits, feature vectors.

World coordinates live in the table frame: origin at the workspace corner,
z up, so the table plane passes through the origin.  A raw frame carries
the tracked joint positions and the head rotation; a feature frame adds
the tilted gaze ray's table intersection and the flattened 28-vector the
intent model consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Downward tilt applied to the head norm before casting it at the table.
GAZE_TILT_RAD = math.radians(30.0)

# Slot layout of the 14 position features; velocities mirror it.
FEATURE_LAYOUT = ("palm", "elbow", "shoulder", "head_pos", "gaze_hit")
POSITION_DIM = 14
INPUT_DIM = 2 * POSITION_DIM


class GazeParallel(ValueError):
    """Gaze direction is (numerically) parallel to the table plane."""


class GazeAway(ValueError):
    """Gaze ray meets the table plane behind the head."""


class NonMonotonicTime(ValueError):
    """Frame timestamps must strictly increase within a trajectory."""


def _as_vec(v, dim: int) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (dim,):
        raise ValueError(f"expected shape ({dim},), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite components")
    return a


@dataclass(frozen=True)
class TablePlane:
    """Flat work surface; normalized so the plane passes through z = 0."""

    normal: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        n = _as_vec(self.normal, 3)
        norm = np.linalg.norm(n)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "point", _as_vec(self.point, 3))

    @classmethod
    def table(cls) -> "TablePlane":
        return cls(normal=np.array([0.0, 0.0, 1.0]), point=np.zeros(3))


@dataclass(frozen=True)
class RawFrame:
    """One time step of tracked human state, table frame, meters/seconds."""

    t: float
    palm: np.ndarray
    elbow: np.ndarray
    shoulder: np.ndarray
    head_pos: np.ndarray
    head_rot: np.ndarray  # 3x3, columns = head frame axes, x-axis = face norm

    def __post_init__(self):
        for name in ("palm", "elbow", "shoulder", "head_pos"):
            object.__setattr__(self, name, _as_vec(getattr(self, name), 3))
        rot = np.asarray(self.head_rot, dtype=np.float64)
        if rot.shape != (3, 3):
            raise ValueError("head_rot must be 3x3")
        if not np.allclose(rot.T @ rot, np.eye(3), atol=1e-9):
            raise ValueError("head_rot must be orthonormal")
        object.__setattr__(self, "head_rot", rot)


@dataclass(frozen=True)
class FeatureFrame:
    """RawFrame plus derived gaze features and the flattened model input."""

    raw: RawFrame
    gaze_dir: np.ndarray
    gaze_hit: np.ndarray  # (x, y) on the table plane
    positions: np.ndarray  # 14-vector
    velocities: np.ndarray  # 14-vector, zeros on the first frame
    input: np.ndarray  # 28-vector, positions then velocities


def tilt_head_norm(head_rot: np.ndarray) -> np.ndarray:
    """Head-frame x-axis pitched 30 degrees down about the head y-axis.

    Expressed in world coordinates; always unit length.
    """
    local = np.array([math.cos(GAZE_TILT_RAD), 0.0, -math.sin(GAZE_TILT_RAD)])
    return np.asarray(head_rot, dtype=np.float64) @ local


def gaze_table_intersection(
    head_pos: np.ndarray, gaze_dir: np.ndarray, plane: TablePlane
) -> np.ndarray:
    """(x, y) where the gaze ray from the head meets the table plane.

    Raises GazeParallel when the ray cannot meet the plane and GazeAway
    when the intersection lies behind the head; callers substitute the
    previous hit for such frames.
    """
    h = _as_vec(head_pos, 3)
    g = _as_vec(gaze_dir, 3)
    n = plane.normal
    denom = float(n @ g)
    if abs(denom) <= 1e-9:
        raise GazeParallel("gaze parallel to table plane")
    s = float(n @ (h - plane.point)) / denom
    if s > 0.0:  # the hit is h + u*g with u = -s, so s > 0 puts it behind
        raise GazeAway("gaze ray leaves the table plane behind the head")
    psi = h - s * g
    return psi[:2].copy()


def build_features(
    prev: FeatureFrame | None,
    raw: RawFrame,
    plane: TablePlane,
    fallback_gaze_hit: np.ndarray | None = None,
) -> FeatureFrame:
    """Assemble the model's feature frame for one raw observation.

    Velocities are finite differences against `prev` (zeros when there is
    no history).  Frames whose gaze ray misses the table reuse the previous
    hit, or `fallback_gaze_hit` (table origin if not given) at the start of
    a trajectory, so the input stays fixed-width.
    """
    if prev is not None and raw.t <= prev.raw.t:
        raise NonMonotonicTime(f"t={raw.t} does not advance past {prev.raw.t}")

    gaze_dir = tilt_head_norm(raw.head_rot)
    try:
        gaze_hit = gaze_table_intersection(raw.head_pos, gaze_dir, plane)
    except (GazeParallel, GazeAway):
        if prev is not None:
            gaze_hit = prev.gaze_hit.copy()
        elif fallback_gaze_hit is not None:
            gaze_hit = _as_vec(fallback_gaze_hit, 2)
        else:
            gaze_hit = np.zeros(2)

    positions = np.concatenate(
        [raw.palm, raw.elbow, raw.shoulder, raw.head_pos, gaze_hit]
    )
    if prev is None:
        velocities = np.zeros(POSITION_DIM)
    else:
        velocities = (positions - prev.positions) / (raw.t - prev.raw.t)
    return FeatureFrame(
        raw=raw,
        gaze_dir=gaze_dir,
        gaze_hit=gaze_hit,
        positions=positions,
        velocities=velocities,
        input=np.concatenate([positions, velocities]),
    )


def feature_sequence(
    frames, plane: TablePlane, fallback_gaze_hit: np.ndarray | None = None
) -> list[FeatureFrame]:
    """Run build_features over a whole trajectory."""
    out: list[FeatureFrame] = []
    prev = None
    for raw in frames:
        prev = build_features(prev, raw, plane, fallback_gaze_hit)
        out.append(prev)
    return out


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (non-zero) axis."""
    a = _as_vec(axis, 3)
    a = a / np.linalg.norm(a)
    kx, ky, kz = a
    k = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotation_aligning(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Smallest rotation taking unit vector src onto unit vector dst."""
    s = _as_vec(src, 3)
    d = _as_vec(dst, 3)
    s = s / np.linalg.norm(s)
    d = d / np.linalg.norm(d)
    c = float(s @ d)
    axis = np.cross(s, d)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        if c > 0.0:
            return np.eye(3)
        # antiparallel: rotate 180 degrees about any perpendicular axis
        perp = np.array([1.0, 0.0, 0.0])
        if abs(s[0]) > 0.9:
            perp = np.array([0.0, 1.0, 0.0])
        axis = np.cross(s, perp)
        return rotation_about(axis, math.pi)
    return rotation_about(axis, math.atan2(norm, c))
