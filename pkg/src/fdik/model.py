"""Serial-chain model, URDF-subset reader and the dynamics conditioning schemes."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import numpy as np

from .spatial import Transform, compose, rotation_to_rpy, rpy_to_rotation, skew

# link floor used by the virtual twin, relative to the end-effector values
TWIN_MASS_FLOOR = 1e-3
TWIN_INERTIA_FLOOR = 1e-6


class ModelError(ValueError):
    """Invalid or degenerate chain model."""


class URDFParseError(ModelError):
    pass


class TopologyError(ModelError):
    pass


def _frozen(a, shape):
    a = np.array(a, dtype=float).reshape(shape)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class JointSpec:
    name: str
    origin: Transform
    axis: np.ndarray
    kind: str = "revolute"
    limits: Optional[tuple] = None  # (lower, upper), reporting only

    def __post_init__(self):
        axis = _frozen(self.axis, 3)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ModelError(f"joint {self.name!r}: axis must have unit norm")
        if self.kind not in ("revolute", "continuous"):
            raise ModelError(f"joint {self.name!r}: unsupported kind {self.kind!r}")
        object.__setattr__(self, "axis", axis)


@dataclass(frozen=True, eq=False)
class LinkInertia:
    mass: float
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    name: str = ""

    def __post_init__(self):
        com = _frozen(self.com, 3)
        inertia = _frozen(self.inertia, (3, 3))
        if not self.mass >= 0.0:
            raise ModelError(f"link {self.name!r}: mass must be >= 0")
        if np.max(np.abs(inertia - inertia.T)) > 1e-12:
            raise ModelError(f"link {self.name!r}: inertia is not symmetric")
        if np.min(np.linalg.eigvalsh(inertia)) < -1e-12:
            raise ModelError(f"link {self.name!r}: inertia is not positive semi-definite")
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "inertia", inertia)


@dataclass(frozen=True, eq=False)
class ChainModel:
    joints: tuple
    links: tuple
    tip: Transform = field(default_factory=Transform)
    name: str = "chain"

    def __post_init__(self):
        joints = tuple(self.joints)
        links = tuple(self.links)
        if len(joints) < 1:
            raise ModelError("chain needs at least one joint")
        if len(joints) != len(links):
            raise ModelError(f"{len(joints)} joints but {len(links)} links")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "links", links)
        # stacked views for the numerical kernels
        object.__setattr__(self, "_origin_rot", _frozen([j.origin.rotation for j in joints], (-1, 3, 3)))
        object.__setattr__(self, "_origin_pos", _frozen([j.origin.translation for j in joints], (-1, 3)))
        object.__setattr__(self, "_axes", _frozen([j.axis for j in joints], (-1, 3)))
        skews = np.array([skew(j.axis) for j in joints])
        object.__setattr__(self, "_axis_skew", _frozen(skews, (-1, 3, 3)))
        object.__setattr__(self, "_axis_skew2", _frozen(skews @ skews, (-1, 3, 3)))
        object.__setattr__(self, "_masses", _frozen([lk.mass for lk in links], -1))
        object.__setattr__(self, "_coms", _frozen([lk.com for lk in links], (-1, 3)))
        object.__setattr__(self, "_inertias", _frozen([lk.inertia for lk in links], (-1, 3, 3)))
        # writable copies in the layout expected by the compiled kernels
        object.__setattr__(self, "arrays", tuple(np.array(a) for a in (
            self._origin_rot, self._origin_pos, self._axes, self._axis_skew, self._axis_skew2,
            self.tip.rotation, self.tip.translation, self._masses, self._coms, self._inertias)))

    @property
    def dof(self):
        return len(self.joints)

    @property
    def joint_names(self):
        return [j.name for j in self.joints]

    def total_mass(self):
        return float(np.sum(self._masses))

    def with_links(self, links):
        return replace(self, links=tuple(links))


# --------------------------------------------------------------------------
# URDF subset

def _floats(text, n, what):
    try:
        vals = [float(v) for v in text.split()]
    except (AttributeError, ValueError):
        raise URDFParseError(f"cannot parse {what}: {text!r}") from None
    if len(vals) != n:
        raise URDFParseError(f"{what} needs {n} values, got {len(vals)}")
    return np.array(vals)


def _origin(elem):
    if elem is None:
        return Transform()
    xyz = _floats(elem.get("xyz", "0 0 0"), 3, "origin xyz")
    rpy = _floats(elem.get("rpy", "0 0 0"), 3, "origin rpy")
    return Transform(rpy_to_rotation(rpy), xyz)


def _read_inertial(link_elem):
    name = link_elem.get("name", "")
    inertial = link_elem.find("inertial")
    if inertial is None:
        return LinkInertia(0.0, name=name)
    mass_elem = inertial.find("mass")
    if mass_elem is None or mass_elem.get("value") is None:
        raise URDFParseError(f"link {name!r}: inertial without mass value")
    mass = _floats(mass_elem.get("value"), 1, "mass")[0]
    frame = _origin(inertial.find("origin"))
    inertia = np.zeros((3, 3))
    tensor = inertial.find("inertia")
    if tensor is not None:
        try:
            ixx, ixy, ixz, iyy, iyz, izz = (float(tensor.get(k)) for k in
                                            ("ixx", "ixy", "ixz", "iyy", "iyz", "izz"))
        except TypeError:
            raise URDFParseError(f"link {name!r}: incomplete inertia tensor") from None
        inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    # inertia is given in the inertial frame, rotate into the link frame
    rot = frame.rotation
    return LinkInertia(mass, frame.translation, rot @ inertia @ rot.T, name=name)


def _merge_inertia(a: LinkInertia, b: LinkInertia, b_in_a: Transform) -> LinkInertia:
    """Lump link ``b`` (rigidly attached at ``b_in_a``) into link ``a``."""
    mb_com = b_in_a.rotation @ b.com + b_in_a.translation
    mb_inertia = b_in_a.rotation @ b.inertia @ b_in_a.rotation.T
    mass = a.mass + b.mass
    if mass == 0.0:
        return replace(a)
    com = (a.mass * a.com + b.mass * mb_com) / mass

    def shifted(m, inertia, c):
        d = c - com
        return inertia + m * (d @ d * np.eye(3) - np.outer(d, d))

    inertia = shifted(a.mass, a.inertia, a.com) + shifted(b.mass, mb_inertia, mb_com)
    return LinkInertia(mass, com, (inertia + inertia.T) / 2.0, name=a.name)


def load_chain(urdf_text: str, tip_link: Optional[str] = None) -> ChainModel:
    """Parse a single unbranched chain of revolute/continuous/fixed joints.

    Fixed joints are folded into the neighbouring frame offsets; links hanging
    off a fixed joint are lumped into the preceding moving link. Everything
    after the last moving joint becomes the ``tip`` offset. If ``tip_link`` is
    given the chain is cut there and branches beyond it are ignored.
    """
    try:
        root = ET.fromstring(urdf_text)
    except ET.ParseError as exc:
        raise URDFParseError(f"malformed XML: {exc}") from None
    if root.tag != "robot":
        raise URDFParseError(f"root element must be <robot>, got <{root.tag}>")

    links = {}
    for le in root.findall("link"):
        if le.get("name") is None:
            raise URDFParseError("link without name")
        links[le.get("name")] = le
    children = {}
    parents = {}
    for je in root.findall("joint"):
        name, jtype = je.get("name"), je.get("type")
        if name is None or jtype is None:
            raise URDFParseError("joint without name or type")
        if jtype not in ("revolute", "continuous", "fixed"):
            raise TopologyError(f"joint {name!r}: unsupported joint type {jtype!r}")
        p, c = je.find("parent"), je.find("child")
        if p is None or c is None or p.get("link") is None or c.get("link") is None:
            raise URDFParseError(f"joint {name!r}: missing parent or child")
        parent, child = p.get("link"), c.get("link")
        if parent not in links or child not in links:
            raise URDFParseError(f"joint {name!r}: unknown link")
        if child in parents:
            raise TopologyError(f"link {child!r} has two parents")
        parents[child] = je
        children.setdefault(parent, []).append(je)

    roots = [ln for ln in links if ln not in parents]
    if len(roots) != 1:
        raise TopologyError(f"expected a single root link, found {len(roots)}")

    # walk root -> tip
    path = []
    current = roots[0]
    while current != tip_link and children.get(current):
        kids = children[current]
        if len(kids) > 1:
            raise TopologyError(f"link {current!r} has {len(kids)} children (branching chain)")
        path.append(kids[0])
        current = kids[0].find("child").get("link")
    if tip_link is not None and current != tip_link:
        raise TopologyError(f"tip link {tip_link!r} not on the chain")

    joints = []
    link_inertias = []
    pending = Transform()  # fixed offset accumulated since the last moving joint
    for je in path:
        jtype = je.get("type")
        origin = _origin(je.find("origin"))
        child_link = links[je.find("child").get("link")]
        inertial = _read_inertial(child_link)
        if jtype == "fixed":
            offset = compose(pending, origin)
            if link_inertias:
                link_inertias[-1] = _merge_inertia(link_inertias[-1], inertial, offset)
            pending = offset
            continue
        axis_elem = je.find("axis")
        axis = _floats(axis_elem.get("xyz"), 3, "axis") if axis_elem is not None else np.array([1.0, 0, 0])
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise ModelError(f"joint {je.get('name')!r}: zero axis")
        limits = None
        lim = je.find("limit")
        if lim is not None and lim.get("lower") is not None and lim.get("upper") is not None:
            limits = (float(lim.get("lower")), float(lim.get("upper")))
        joints.append(JointSpec(je.get("name"), compose(pending, origin), axis / norm,
                                kind=jtype, limits=limits))
        link_inertias.append(inertial)
        pending = Transform()

    if not joints:
        raise TopologyError("chain has no revolute joints")
    return ChainModel(tuple(joints), tuple(link_inertias), tip=pending,
                      name=root.get("name", "chain"))


def _fmt(values):
    return " ".join(repr(float(v)) for v in values)


def to_urdf(chain: ChainModel) -> str:
    """Serialize a chain into the URDF subset read by :func:`load_chain`.

    Floats are written with ``repr`` so the round trip is exact.
    """
    lines = [f'<robot name="{chain.name}">', '  <link name="base"/>']
    parent = "base"
    for i, (j, lk) in enumerate(zip(chain.joints, chain.links)):
        child = lk.name or f"link{i + 1}"
        if child in ("base", "tip") or child == parent:
            child = f"link{i + 1}"
        lines += [
            f'  <link name="{child}">',
            "    <inertial>",
            f'      <origin xyz="{_fmt(lk.com)}" rpy="0 0 0"/>',
            f'      <mass value="{lk.mass!r}"/>',
            '      <inertia ixx="{!r}" ixy="{!r}" ixz="{!r}" iyy="{!r}" iyz="{!r}" izz="{!r}"/>'.format(
                *(float(lk.inertia[a, b]) for a, b in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)))),
            "    </inertial>",
            "  </link>",
            f'  <joint name="{j.name}" type="{j.kind}">',
            f'    <parent link="{parent}"/>',
            f'    <child link="{child}"/>',
            f'    <origin xyz="{_fmt(j.origin.translation)}" rpy="{_fmt(rotation_to_rpy(j.origin.rotation))}"/>',
            f'    <axis xyz="{_fmt(j.axis)}"/>',
        ]
        if j.limits is not None:
            lines.append(f'    <limit lower="{j.limits[0]!r}" upper="{j.limits[1]!r}" effort="0" velocity="0"/>')
        lines.append("  </joint>")
        parent = child
    lines += [
        '  <link name="tip"/>',
        '  <joint name="tip_fixed_joint" type="fixed">',
        f'    <parent link="{parent}"/>',
        '    <child link="tip"/>',
        f'    <origin xyz="{_fmt(chain.tip.translation)}" rpy="{_fmt(rotation_to_rpy(chain.tip.rotation))}"/>',
        "  </joint>",
        "</robot>",
    ]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# embedded UR10

def ur10_urdf_text() -> str:
    return resources.files("fdik.data").joinpath("ur10.urdf").read_text()


def _read_param_table(text):
    joints, links, tip = [], [], None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, name, *vals = line.split()
        vals = [float(v) for v in vals]
        if kind == "joint":
            # xyz(3) rpy(3) axis(3) lower upper
            xyz, rpy, axis, lim = vals[0:3], vals[3:6], vals[6:9], vals[9:11]
            joints.append(JointSpec(name, Transform(rpy_to_rotation(rpy), xyz),
                                    np.array(axis), limits=tuple(lim)))
        elif kind == "link":
            # mass com(3) ixx ixy ixz iyy iyz izz
            mass, com, (ixx, ixy, ixz, iyy, iyz, izz) = vals[0], vals[1:4], vals[4:10]
            inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
            links.append(LinkInertia(mass, com, inertia, name=name))
        elif kind == "tip":
            tip = Transform(rpy_to_rotation(vals[3:6]), vals[0:3])
        else:
            raise ModelError(f"unknown record {kind!r} in parameter table")
    return joints, links, tip


def builtin_ur10() -> ChainModel:
    """UR10 from the ROS-Industrial description, base_link to tool0."""
    text = resources.files("fdik.data").joinpath("ur10_params.txt").read_text()
    joints, links, tip = _read_param_table(text)
    return ChainModel(tuple(joints), tuple(links), tip=tip, name="ur10")


# --------------------------------------------------------------------------
# dynamics conditioning

def _check_conditioning_args(m, inertia):
    inertia = np.asarray(inertia, dtype=float)
    if not m > 0.0:
        raise ModelError("mass must be positive")
    if inertia.shape != (3, 3) or np.max(np.abs(inertia - inertia.T)) > 1e-12:
        raise ModelError("inertia must be a symmetric 3x3 matrix")
    if np.min(np.linalg.eigvalsh(inertia)) <= 0.0:
        raise ModelError("inertia must be positive definite")
    return inertia


def condition_virtual_twin(chain: ChainModel, m: float = 1.0, inertia=None) -> ChainModel:
    """Concentrate all mass and inertia at the end-effector.

    The last link gets mass ``m`` with its center of mass at the tip frame
    origin and rotational inertia ``inertia``; every other link keeps its com
    but gets ``1e-3 * m`` and ``1e-6 * inertia`` so H stays positive definite.
    """
    inertia = _check_conditioning_args(m, np.eye(3) if inertia is None else inertia)
    links = [replace(lk, mass=TWIN_MASS_FLOOR * m, inertia=TWIN_INERTIA_FLOOR * inertia)
             for lk in chain.links[:-1]]
    links.append(replace(chain.links[-1], mass=float(m), com=chain.tip.translation,
                         inertia=chain.tip.rotation @ inertia @ chain.tip.rotation.T))
    return chain.with_links(links)


def condition_uniform(chain: ChainModel, m: float = 1.0, inertia=None) -> ChainModel:
    """Reference model: ``m`` and ``inertia`` split equally over all links, com at each joint."""
    inertia = _check_conditioning_args(m, np.eye(3) if inertia is None else inertia)
    n = chain.dof
    links = [replace(lk, mass=m / n, com=np.zeros(3), inertia=inertia / n) for lk in chain.links]
    return chain.with_links(links)


CONDITIONINGS = {
    "twin": condition_virtual_twin,
    "uniform": condition_uniform,
}


def conditioned(chain: ChainModel, conditioning: str, m: float = 1.0, inertia=None) -> ChainModel:
    """Apply a conditioning scheme by name; ``"kinematic"`` and ``"none"`` return the chain unchanged."""
    if conditioning in ("kinematic", "none"):
        return chain
    try:
        fn = CONDITIONINGS[conditioning]
    except KeyError:
        raise ModelError(f"unknown conditioning {conditioning!r}") from None
    return fn(chain, m, inertia)
