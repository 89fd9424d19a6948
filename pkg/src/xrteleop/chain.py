"""Kinematic-chain model and a parser for a minimal robot-description XML subset.

Supported markup (a strict subset of the de-facto robot-description format):

    <robot name="...">
      <link name="..."/>
      <joint name="..." type="revolute|prismatic|fixed">
        <parent link="..."/>
        <child link="..."/>
        <origin xyz="x y z" rpy="r p y"/>   <!-- optional, defaults identity -->
        <axis xyz="x y z"/>                 <!-- optional, defaults 0 0 1 -->
        <limit lower="..." upper="..." velocity="..."/>  <!-- optional -->
      </joint>
    </robot>

Anything else (visual, collision, inertial, transmission, ...) is skipped and
reported through the warning channel. Branched trees are first-class: several
joints may share a parent link.
"""

from __future__ import annotations

import io
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import quat
from .errors import (
    CyclicStructure,
    DanglingReference,
    MalformedDocument,
    UnsupportedJointType,
)
from .pose import Pose

REVOLUTE = "revolute"
PRISMATIC = "prismatic"
FIXED = "fixed"
_JOINT_KINDS = (REVOLUTE, PRISMATIC, FIXED)


class ChainFormatWarning(UserWarning):
    """Warning channel for skipped/unknown markup in chain descriptions."""


@dataclass(frozen=True)
class JointSpec:
    """One joint: the transform from its parent link frame to its child link frame.

    child frame = parent frame · origin · motion(axis, q)
    """

    name: str
    kind: str
    parent_link: str
    child_link: str
    origin: Pose = field(default_factory=Pose.identity)
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    limits: tuple[float, float] = (-np.inf, np.inf)
    velocity_limit: float = np.inf

    def __post_init__(self):
        if self.kind not in _JOINT_KINDS:
            raise UnsupportedJointType(f"joint {self.name!r}: unsupported type {self.kind!r}")
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        if self.kind != FIXED:
            n = np.linalg.norm(axis)
            if n < 1e-12:
                raise ValueError(f"joint {self.name!r}: zero axis")
            axis = axis / n
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        if self.kind == FIXED:
            # no configuration variable, so limit fields carry no information
            object.__setattr__(self, "limits", (0.0, 0.0))
            object.__setattr__(self, "velocity_limit", np.inf)
        lo, hi = self.limits
        if lo > hi:
            raise ValueError(f"joint {self.name!r}: lower limit {lo} > upper {hi}")
        if self.velocity_limit < 0:
            raise ValueError(f"joint {self.name!r}: negative velocity limit")

    @property
    def actuated(self) -> bool:
        return self.kind != FIXED

    def motion(self, value: float) -> Pose:
        """Joint-variable transform in the joint frame."""
        if self.kind == REVOLUTE:
            return Pose((0.0, 0.0, 0.0), quat.from_axis_angle(self.axis, value))
        if self.kind == PRISMATIC:
            return Pose(self.axis * float(value))
        return Pose.identity()


class KinematicChain:
    """Rooted tree of joints and links; domain of configurations q and FK/Jacobians.

    Joints keep their declaration order; the configuration vector holds the
    actuated (non-fixed) joints in that same order.
    """

    def __init__(self, name: str, joints: Sequence[JointSpec], root_link: Optional[str] = None):
        self.name = name
        self.joints: tuple[JointSpec, ...] = tuple(joints)

        declared_children = {}
        for idx, j in enumerate(self.joints):
            if j.child_link in declared_children:
                raise CyclicStructure(
                    f"link {j.child_link!r} has two parent joints; parent graph is not a tree"
                )
            declared_children[j.child_link] = idx

        parents = {j.parent_link for j in self.joints}
        roots = sorted(parents - declared_children.keys())
        if self.joints:
            if len(roots) != 1:
                raise CyclicStructure(
                    f"parent graph is not a rooted tree (root candidates: {roots or 'none'})"
                )
            if root_link is not None and root_link != roots[0]:
                raise CyclicStructure(
                    f"declared root {root_link!r} does not match inferred root {roots[0]!r}"
                )
            root_link = roots[0]
        elif root_link is None:
            root_link = name
        self.root_link = root_link

        self.links: tuple[str, ...] = (root_link,) + tuple(j.child_link for j in self.joints)
        self._joint_by_child = declared_children

        # parent joint index per joint (-1 when attached to the root link)
        parent_index = []
        for j in self.joints:
            if j.parent_link == root_link:
                parent_index.append(-1)
            elif j.parent_link in declared_children:
                parent_index.append(declared_children[j.parent_link])
            else:
                raise CyclicStructure(
                    f"joint {j.name!r} hangs from {j.parent_link!r}, which is not reachable "
                    "from the root"
                )
        self.parent_index: tuple[int, ...] = tuple(parent_index)

        # cycle check: walking up from every joint must terminate at the root
        for idx in range(len(self.joints)):
            seen = set()
            k = idx
            while k >= 0:
                if k in seen:
                    raise CyclicStructure(f"cycle through joint {self.joints[k].name!r}")
                seen.add(k)
                k = self.parent_index[k]

        self._q_index: tuple[int, ...] = tuple(
            (sum(1 for jj in self.joints[:i] if jj.actuated) if j.actuated else -1)
            for i, j in enumerate(self.joints)
        )
        self.dof: int = sum(1 for j in self.joints if j.actuated)

    # --- lookups -------------------------------------------------------------

    def has_frame(self, frame: str) -> bool:
        return frame in self._joint_by_child or frame == self.root_link

    def joint_path(self, frame: str) -> list[int]:
        """Joint indices from the root down to `frame` (empty for the root link)."""
        if frame == self.root_link:
            return []
        if frame not in self._joint_by_child:
            from .errors import UnknownFrame

            raise UnknownFrame(f"chain {self.name!r} has no link {frame!r}")
        path = []
        k = self._joint_by_child[frame]
        while k >= 0:
            path.append(k)
            k = self.parent_index[k]
        path.reverse()
        return path

    def q_index(self, joint_index: int) -> int:
        """Configuration slot of a joint (-1 for fixed joints)."""
        return self._q_index[joint_index]

    @property
    def actuated_joints(self) -> tuple[JointSpec, ...]:
        return tuple(j for j in self.joints if j.actuated)

    def position_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.limits[0] for j in self.actuated_joints])
        hi = np.array([j.limits[1] for j in self.actuated_joints])
        return lo, hi

    def velocity_limits(self) -> np.ndarray:
        return np.array([j.velocity_limit for j in self.actuated_joints])

    def zero_configuration(self) -> np.ndarray:
        """All-zero configuration clamped into the position limits."""
        lo, hi = self.position_limits()
        return np.clip(np.zeros(self.dof), lo, hi)

    def approx_equal(self, other: "KinematicChain", tol: float = 1e-12) -> bool:
        if self.name != other.name or self.root_link != other.root_link:
            return False
        if len(self.joints) != len(other.joints):
            return False
        for a, b in zip(self.joints, other.joints):
            if (a.name, a.kind, a.parent_link, a.child_link) != (
                b.name,
                b.kind,
                b.parent_link,
                b.child_link,
            ):
                return False
            if not np.allclose(a.axis, b.axis, atol=tol):
                return False
            if not a.origin.approx_equal(b.origin, tol):
                return False
            if not np.allclose(a.limits, b.limits, equal_nan=True) or not np.isclose(
                a.velocity_limit, b.velocity_limit
            ):
                return False
        return True

    def __repr__(self) -> str:
        return f"KinematicChain({self.name!r}, joints={len(self.joints)}, dof={self.dof})"


# --- rpy <-> quaternion (fixed-axis XYZ convention of the description format) --


def _rpy_to_quat(r: float, p: float, y: float) -> np.ndarray:
    qx = quat.from_axis_angle(np.array([1.0, 0, 0]), r)
    qy = quat.from_axis_angle(np.array([0, 1.0, 0]), p)
    qz = quat.from_axis_angle(np.array([0, 0, 1.0]), y)
    return quat.multiply(qz, quat.multiply(qy, qx))


def _quat_to_rpy(q: np.ndarray) -> tuple[float, float, float]:
    m = quat.to_matrix(q)
    p = np.arcsin(np.clip(-m[2, 0], -1.0, 1.0))
    if abs(m[2, 0]) < 1.0 - 1e-12:
        r = np.arctan2(m[2, 1], m[2, 2])
        y = np.arctan2(m[1, 0], m[0, 0])
    else:  # pitch at ±90°: fold roll into yaw
        r = 0.0
        y = np.arctan2(-m[0, 1], m[1, 1])
    return float(r), float(p), float(y)


# --- parsing ------------------------------------------------------------------


def _floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split()
    if len(parts) != n:
        raise MalformedDocument(f"{what}: expected {n} numbers, got {text!r}")
    try:
        return [float(v) for v in parts]
    except ValueError as e:
        raise MalformedDocument(f"{what}: {e}") from None


def parse_chain(text: str) -> KinematicChain:
    """Parse a chain description document into a KinematicChain.

    Unknown elements are skipped with a :class:`ChainFormatWarning`; unknown
    joint types are an error.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise MalformedDocument(f"unparseable markup: {e}") from None
    if root.tag != "robot":
        raise MalformedDocument(f"expected <robot> document, got <{root.tag}>")

    name = root.get("name", "robot")
    links: list[str] = []
    joint_elems = []
    for child in root:
        if child.tag == "link":
            link_name = child.get("name")
            if not link_name:
                raise MalformedDocument("<link> without a name")
            links.append(link_name)
        elif child.tag == "joint":
            joint_elems.append(child)
        else:
            warnings.warn(f"skipping unsupported element <{child.tag}>", ChainFormatWarning)

    declared = set(links)
    joints: list[JointSpec] = []
    for elem in joint_elems:
        jname = elem.get("name")
        jtype = elem.get("type")
        if not jname or not jtype:
            raise MalformedDocument("<joint> requires name and type attributes")
        if jtype not in _JOINT_KINDS:
            raise UnsupportedJointType(f"joint {jname!r}: unsupported type {jtype!r}")

        parent = child_link = None
        origin = Pose.identity()
        axis = np.array([0.0, 0.0, 1.0])
        limits = (-np.inf, np.inf)
        vel_limit = np.inf
        for sub in elem:
            if sub.tag == "parent":
                parent = sub.get("link")
            elif sub.tag == "child":
                child_link = sub.get("link")
            elif sub.tag == "origin":
                xyz = _floats(sub.get("xyz", "0 0 0"), 3, f"joint {jname!r} origin xyz")
                rpy = _floats(sub.get("rpy", "0 0 0"), 3, f"joint {jname!r} origin rpy")
                origin = Pose(xyz, _rpy_to_quat(*rpy))
            elif sub.tag == "axis":
                axis = np.array(_floats(sub.get("xyz", "0 0 1"), 3, f"joint {jname!r} axis"))
            elif sub.tag == "limit":
                lo = float(sub.get("lower", "-inf"))
                hi = float(sub.get("upper", "inf"))
                limits = (lo, hi)
                vel_limit = float(sub.get("velocity", "inf"))
            else:
                warnings.warn(
                    f"joint {jname!r}: skipping unsupported element <{sub.tag}>",
                    ChainFormatWarning,
                )
        if parent is None or child_link is None:
            raise MalformedDocument(f"joint {jname!r} lacks parent/child links")
        for ref in (parent, child_link):
            if ref not in declared:
                raise DanglingReference(f"joint {jname!r} references undeclared link {ref!r}")
        if jtype == FIXED:
            limits = (0.0, 0.0)
        joints.append(
            JointSpec(
                name=jname,
                kind=jtype,
                parent_link=parent,
                child_link=child_link,
                origin=origin,
                axis=axis,
                limits=limits,
                velocity_limit=vel_limit,
            )
        )

    if joints:
        chain = KinematicChain(name, joints)
    else:
        if len(links) != 1:
            raise MalformedDocument("a chain without joints must declare exactly one link")
        chain = KinematicChain(name, (), root_link=links[0])

    dangling = declared - set(chain.links)
    for extra in sorted(dangling):
        warnings.warn(f"link {extra!r} is declared but never attached", ChainFormatWarning)
    return chain


def serialize_chain(chain: KinematicChain) -> str:
    """Emit the supported-subset document for a chain. parse ∘ serialize ≈ identity."""
    out = io.StringIO()
    out.write(f'<robot name="{chain.name}">\n')
    out.write(f'  <link name="{chain.root_link}"/>\n')
    for j in chain.joints:
        out.write(f'  <link name="{j.child_link}"/>\n')
    for j in chain.joints:
        out.write(f'  <joint name="{j.name}" type="{j.kind}">\n')
        out.write(f'    <parent link="{j.parent_link}"/>\n')
        out.write(f'    <child link="{j.child_link}"/>\n')
        xyz = " ".join(repr(float(v)) for v in j.origin.position)
        rpy = " ".join(repr(v) for v in _quat_to_rpy(j.origin.orientation))
        out.write(f'    <origin xyz="{xyz}" rpy="{rpy}"/>\n')
        if j.actuated:
            axis = " ".join(repr(float(v)) for v in j.axis)
            out.write(f'    <axis xyz="{axis}"/>\n')
            lo, hi = j.limits
            out.write(
                f'    <limit lower="{repr(float(lo))}" upper="{repr(float(hi))}" '
                f'velocity="{repr(float(j.velocity_limit))}"/>\n'
            )
        out.write("  </joint>\n")
    out.write("</robot>\n")
    return out.getvalue()


# --- JSON form (shared with the browser viewer) --------------------------------


def _finite_or_none(value: float):
    # strict JSON has no Infinity literal, so unlimited bounds become null
    return float(value) if np.isfinite(value) else None


def chain_to_dict(chain: KinematicChain) -> dict:
    """Plain-JSON form of a chain; what the viewer consumes for client-side FK."""
    return {
        "name": chain.name,
        "root_link": chain.root_link,
        "joints": [
            {
                "name": j.name,
                "kind": j.kind,
                "parent_link": j.parent_link,
                "child_link": j.child_link,
                "origin": j.origin.to_pose7(),
                "axis": [float(v) for v in j.axis],
                "limits": [_finite_or_none(j.limits[0]), _finite_or_none(j.limits[1])],
                "velocity_limit": _finite_or_none(j.velocity_limit),
            }
            for j in chain.joints
        ],
    }


def chain_from_dict(data: dict) -> KinematicChain:
    joints = [
        JointSpec(
            name=j["name"],
            kind=j["kind"],
            parent_link=j["parent_link"],
            child_link=j["child_link"],
            origin=Pose.from_pose7(j["origin"]),
            axis=np.array(j["axis"], dtype=float),
            limits=(
                -np.inf if j["limits"][0] is None else float(j["limits"][0]),
                np.inf if j["limits"][1] is None else float(j["limits"][1]),
            ),
            velocity_limit=(
                np.inf if j["velocity_limit"] is None else float(j["velocity_limit"])
            ),
        )
        for j in data["joints"]
    ]
    return KinematicChain(data["name"], joints, root_link=data.get("root_link"))
