"""Handle transforms: homogeneous matrices with rigid decompositions.

Rigid transforms decompose into (unit quaternion, translation) so they
can be blended on the handle graph; planar rotations embed as
quaternions about the out-of-plane axis, giving one code path for 2D
and 3D. General affine matrices are accepted by linear blending but
have no rigid decomposition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonRigid

RIGID_TOL = 1e-8
UNIT_TOL = 1e-12


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise NonRigid("zero quaternion")
    return q / n


def quat_to_matrix3(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix3_to_quat(m: np.ndarray) -> np.ndarray:
    """Shepperd's method; returns (w, x, y, z) with w >= 0."""
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(1.0 + m[i, i] - m[j, j] - m[k, k], 0.0)) * 2
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_to_rotation(q, dim: int) -> np.ndarray:
    """Linear rotation block for the given dimension.

    2D quaternions must be about the out-of-plane axis: (w, 0, 0, z).
    """
    if dim == 3:
        return quat_to_matrix3(q)
    w, x, y, z = quat_normalize(q)
    if abs(x) > 1e-9 or abs(y) > 1e-9:
        raise NonRigid("2D rotation quaternion must be about the out-of-plane axis")
    theta = 2.0 * np.arctan2(z, w)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_to_quat(r: np.ndarray) -> np.ndarray:
    dim = r.shape[0]
    if dim == 3:
        return matrix3_to_quat(r)
    theta = float(np.arctan2(r[1, 0], r[0, 0]))
    q = np.array([np.cos(theta / 2.0), 0.0, 0.0, np.sin(theta / 2.0)])
    if q[0] < 0:
        q = -q
    return q


@dataclass(frozen=True)
class HandleTransform:
    """Affine transform in homogeneous form, with an optional rigid view."""

    matrix: np.ndarray                       # (dim+1, dim+1)
    quaternion: np.ndarray | None = None     # (w, x, y, z), unit
    translation: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def is_rigid(self) -> bool:
        return self.quaternion is not None

    @property
    def linear(self) -> np.ndarray:
        d = self.dim
        return self.matrix[:d, :d]

    @property
    def offset(self) -> np.ndarray:
        d = self.dim
        return self.matrix[:d, d]

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points @ self.linear.T + self.offset

    @staticmethod
    def identity(dim: int) -> "HandleTransform":
        return HandleTransform.from_rigid(
            np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(dim))

    @staticmethod
    def from_matrix(matrix) -> "HandleTransform":
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape not in ((3, 3), (4, 4)) or not np.all(np.isfinite(m)):
            raise NonRigid(f"expected finite (3,3) or (4,4) homogeneous matrix, got {m.shape}")
        d = m.shape[0] - 1
        if not (np.allclose(m[d, :d], 0.0, atol=1e-12) and abs(m[d, d] - 1.0) <= 1e-12):
            raise NonRigid("bottom row must be (0,...,0,1)")
        try:
            q, t = rigid_decompose(m)
        except NonRigid:
            return HandleTransform(matrix=m)
        return HandleTransform(matrix=m, quaternion=q, translation=t)

    @staticmethod
    def from_rigid(quaternion, translation) -> "HandleTransform":
        q = quat_normalize(quaternion)
        t = np.asarray(translation, dtype=np.float64)
        d = t.shape[0]
        m = np.eye(d + 1)
        m[:d, :d] = quat_to_rotation(q, d)
        m[:d, d] = t
        return HandleTransform(matrix=m, quaternion=q, translation=t)


def rigid_decompose(matrix) -> tuple:
    """(unit quaternion, translation) of a rigid homogeneous matrix.

    Succeeds iff the linear part is orthogonal with determinant +1
    within RIGID_TOL; round-trip through from_rigid stays within 1e-9.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise NonRigid("non-finite matrix")
    d = m.shape[0] - 1
    if m.shape != (d + 1, d + 1) or d not in (2, 3):
        raise NonRigid(f"expected homogeneous matrix, got shape {m.shape}")
    r = m[:d, :d]
    if np.max(np.abs(r.T @ r - np.eye(d))) > RIGID_TOL:
        raise NonRigid("linear part is not orthogonal")
    if abs(np.linalg.det(r) - 1.0) > RIGID_TOL:
        raise NonRigid("linear part is not a proper rotation (det != +1)")
    return rotation_to_quat(r), m[:d, d].copy()


@dataclass(frozen=True)
class RigidMotion:
    """Rotation as explicit angle*axis plus translation.

    Unlike a matrix or quaternion this keeps full windings (a 2*pi twist
    is not the identity), which progressive deformation needs.
    """

    angle: float                 # radians, may exceed pi or wind repeatedly
    axis: np.ndarray             # unit 3-vector; out-of-plane z for 2D motion
    translation: np.ndarray

    def scaled(self, s: float) -> HandleTransform:
        half = 0.5 * self.angle * s
        q = np.array([np.cos(half), *(np.sin(half) * np.asarray(self.axis))])
        return HandleTransform.from_rigid(q, s * np.asarray(self.translation))

    def transform(self) -> HandleTransform:
        return self.scaled(1.0)

    @staticmethod
    def from_transform(tr: HandleTransform) -> "RigidMotion":
        if not tr.is_rigid:
            raise NonRigid("no rigid decomposition; cannot express as angle*axis")
        w, x, y, z = tr.quaternion
        s = float(np.linalg.norm([x, y, z]))
        angle = 2.0 * np.arctan2(s, w)
        axis = np.array([0.0, 0.0, 1.0]) if s == 0.0 else np.array([x, y, z]) / s
        return RigidMotion(angle=float(angle), axis=axis, translation=tr.translation)


def transform_from_doc(entry: dict, dim: int) -> HandleTransform:
    """One pose entry: {"matrix": row-major list} or
    {"quaternion": [w,x,y,z], "translation": [...]}."""
    if "matrix" in entry:
        flat = np.asarray(entry["matrix"], dtype=np.float64)
        side = dim + 1
        if flat.size != side * side:
            raise NonRigid(f"matrix must have {side * side} entries for dim {dim}")
        return HandleTransform.from_matrix(flat.reshape(side, side))
    if "quaternion" in entry:
        return HandleTransform.from_rigid(entry["quaternion"], entry["translation"])
    if "angle_deg" in entry:  # rotation about `axis` (default z) and `center`
        theta = np.radians(float(entry["angle_deg"]))
        axis = np.asarray(entry.get("axis", [0.0, 0.0, 1.0]), dtype=np.float64)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise NonRigid("zero rotation axis")
        axis = axis / norm
        q = np.array([np.cos(theta / 2), *(np.sin(theta / 2) * axis)])
        t = np.asarray(entry.get("translation", np.zeros(dim)), dtype=np.float64)
        center = entry.get("center")
        if center is not None:
            c = np.asarray(center, dtype=np.float64)
            rot = quat_to_rotation(q, dim)
            t = t + c - rot @ c
        return HandleTransform.from_rigid(q, t)
    raise NonRigid(f"pose entry needs 'matrix', 'quaternion' or 'angle_deg': {entry}")


def load_pose_file(path, dim: int) -> dict:
    """Pose script: JSON list of {"handle": id, ...transform...}."""
    doc = json.loads(Path(path).read_text())
    poses = {}
    for entry in doc:
        poses[int(entry["handle"])] = transform_from_doc(entry, dim)
    return poses


def motion_from_doc(entry: dict, dim: int) -> RigidMotion:
    """Pose entry as a winding-preserving rigid motion.

    angle_deg entries keep their full winding; matrix/quaternion entries
    fall back to the minimal rotation angle.
    """
    if "angle_deg" in entry:
        theta = np.radians(float(entry["angle_deg"]))
        axis = np.asarray(entry.get("axis", [0.0, 0.0, 1.0]), dtype=np.float64)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise NonRigid("zero rotation axis")
        axis = axis / norm
        t = np.asarray(entry.get("translation", np.zeros(dim)), dtype=np.float64)
        center = entry.get("center")
        if center is not None:
            c = np.asarray(center, dtype=np.float64)
            half = 0.5 * theta
            q = np.array([np.cos(half), *(np.sin(half) * axis)])
            rot = quat_to_rotation(q, dim)
            t = t + c - rot @ c
        return RigidMotion(angle=float(theta), axis=axis, translation=t)
    return RigidMotion.from_transform(transform_from_doc(entry, dim))


def load_motion_file(path, dim: int) -> dict:
    doc = json.loads(Path(path).read_text())
    return {int(e["handle"]): motion_from_doc(e, dim) for e in doc}


def transform_to_doc(hid: int, tr: HandleTransform) -> dict:
    entry: dict = {"handle": hid, "matrix": tr.matrix.ravel().tolist()}
    if tr.is_rigid:
        entry["quaternion"] = tr.quaternion.tolist()
        entry["translation"] = tr.translation.tolist()
    return entry
