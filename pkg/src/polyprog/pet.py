"""PET induction: polynomial systems, weight vectors and van der Corput linearization.

Every system polynomial lives in the ring ``Z[m, h_1, ..., h_D, W]`` with
variables in that order, so ``m`` is variable 0 and ``W`` is variable
``D + 1``.  ``W`` stays symbolic; it is only given a value when a
:class:`~polyprog.gowers.GowersSpec` is built.
"""

from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ArgumentError, InvariantError, ResourceError
from .gowers import GowersSpec
from .polyalg import NEG_INFINITY, MultiPoly

MAX_STEPS = 10**6
MAX_NODES = 1 << 14


def system_names(D: int) -> list[str]:
    return ["m"] + [f"h{i}" for i in range(1, D + 1)] + ["W"]


@functools.total_ordering
@dataclass(frozen=True)
class WeightVector:
    """Finitely supported vector ``(w_1, w_2, ...)`` ordered from the top index down.

    ``w < w'`` when, at the largest index where they differ, ``w`` is
    smaller.  Trailing zeros are stripped so equal vectors compare equal.
    """

    entries: tuple[int, ...] = ()

    def __post_init__(self):
        e = list(int(v) for v in self.entries)
        if any(v < 0 for v in e):
            raise ArgumentError("weight entries must be non-negative")
        while e and e[-1] == 0:
            e.pop()
        object.__setattr__(self, "entries", tuple(e))

    def __getitem__(self, i: int) -> int:
        """1-based component; zero beyond the support."""
        if i < 1:
            raise IndexError("weight components start at 1")
        return self.entries[i - 1] if i <= len(self.entries) else 0

    def __lt__(self, other: "WeightVector") -> bool:
        n = max(len(self.entries), len(other.entries))
        for i in range(n, 0, -1):
            if self[i] != other[i]:
                return self[i] < other[i]
        return False

    @property
    def is_linear(self) -> bool:
        return len(self.entries) <= 1

    def __str__(self):
        return "(" + ",".join(map(str, self.entries)) + ")"


@dataclass(frozen=True)
class Node:
    id: int
    label: str
    poly: MultiPoly
    active: bool = True


@dataclass(frozen=True)
class PolySystem:
    """Nodes with shift polynomials, a distinguished node and an active/inactive split."""

    D: int
    nodes: tuple[Node, ...]
    distinguished: int
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if not self.nodes:
            raise ArgumentError("a system needs at least one node")
        if len(set(ids)) != len(ids):
            raise ArgumentError("node ids must be unique")
        if self.distinguished not in ids:
            raise ArgumentError("distinguished node is not in the system")
        for n in self.nodes:
            if n.poly.nvars != self.D + 2:
                raise ArgumentError(f"node {n.label} polynomial must have D + 2 = {self.D + 2} variables")
        if not self.node(self.distinguished).active:
            raise ArgumentError("the distinguished node must be active")
        if self.validate:
            self.check_nondegenerate()

    # lookup
    def node(self, nid: int) -> Node:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise ArgumentError(f"no node with id {nid}")

    def by_label(self, label: str) -> Node:
        for n in self.nodes:
            if n.label == label:
                return n
        raise ArgumentError(f"no node labelled {label!r}")

    @property
    def nvars(self) -> int:
        return self.D + 2

    @property
    def active(self) -> list[Node]:
        return [n for n in self.nodes if n.active]

    def names(self) -> list[str]:
        return system_names(self.D)

    def is_linear_node(self, nid: int) -> bool:
        if nid == self.distinguished:
            return True
        return node_distance(self, nid, self.distinguished) <= 1

    @property
    def is_linear(self) -> bool:
        return all(self.is_linear_node(n.id) for n in self.active)

    def check_nondegenerate(self) -> None:
        fine = list(range(self.D + 1))  # m and the h's
        for i, a in enumerate(self.nodes):
            for b in self.nodes[i + 1:]:
                diff = a.poly - b.poly
                if not any(diff.degree_in(v) > 0 for v in fine if not diff.is_zero()):
                    raise ArgumentError(f"R_{a.label} - R_{b.label} is constant in m and the fine variables")
        lin = [n for n in self.nodes if self.is_linear_node(n.id)]
        for i, a in enumerate(lin):
            for b in lin[i + 1:]:
                if (a.poly - b.poly).degree_in(0) < 1:
                    raise ArgumentError(f"linear nodes {a.label}, {b.label} differ by an m-free polynomial")

    def describe(self) -> list[str]:
        names = self.names()
        out = []
        for n in self.nodes:
            tag = "*" if n.id == self.distinguished else ("" if n.active else " (inactive)")
            out.append(f"{n.label}{tag}: {n.poly.to_str(names)}")
        return out


def _w_times_m(P: MultiPoly) -> MultiPoly:
    """``P(W m) / W`` as a polynomial in ``(m, W)``; needs ``P(0) = 0``."""
    terms = {}
    for (k,), c in P.items():
        if k == 0:
            raise ArgumentError(f"{P} has a non-zero constant term, so P(Wm)/W is not integral")
        terms[(k, k - 1)] = c
    return MultiPoly(2, terms)


def make_system(polys: Sequence[MultiPoly], W_symbolic: bool = True, distinguished: int = 1) -> PolySystem:
    """Base system ``D = 0`` with nodes ``1..k`` all active.

    With ``W_symbolic`` the node polynomials are ``P_i(W m) / W``; otherwise
    they are ``P_i(m)`` with ``W`` absent.
    """
    if not polys:
        raise ArgumentError("need at least one polynomial")
    for P in polys:
        if P.nvars != 1:
            raise ArgumentError("family polynomials must be univariate in m")
    if len(set(polys)) != len(polys):
        raise ArgumentError("family polynomials must be distinct")
    nodes = []
    for i, P in enumerate(polys, start=1):
        R = _w_times_m(P) if W_symbolic else P.embed(2, [0])
        nodes.append(Node(i, str(i), R, True))
    if not 1 <= distinguished <= len(nodes):
        raise ArgumentError(f"distinguished node must lie in 1..{len(nodes)}")
    return PolySystem(0, tuple(nodes), distinguished)


def node_distance(sys: PolySystem, a: int, b: int) -> int:
    """``deg_m (R_a - R_b)``."""
    if a == b:
        raise ArgumentError("distance needs two distinct nodes")
    diff = sys.node(a).poly - sys.node(b).poly
    deg = diff.degree_in(0)
    if diff.is_zero() or deg == NEG_INFINITY:
        raise ArgumentError("nodes carry identical polynomials")
    return int(deg)


def _check_clock(deadline_at: float | None) -> None:
    if deadline_at is not None and time.monotonic() > deadline_at:
        raise ResourceError("deadline passed during a van der Corput step")


def weight_vector(sys: PolySystem, ref: int, deadline_at: float | None = None) -> WeightVector:
    """Count classes of active nodes at each distance ``i >= 1`` from ``ref``.

    ``b ~ c`` relative to ``ref`` when ``d(b, c) < d(ref, b)``; by the
    ultrametric inequality this is an equivalence relation on each distance
    shell.
    """
    node = sys.node(ref)
    if not node.active:
        raise ArgumentError("reference node must be active")
    shells: dict[int, list[int]] = {}
    for n in sys.active:
        if n.id == ref:
            continue
        _check_clock(deadline_at)
        dist = node_distance(sys, ref, n.id)
        if dist >= 1:
            shells.setdefault(dist, []).append(n.id)
    if not shells:
        return WeightVector(())
    counts = [0] * max(shells)
    for dist, members in shells.items():
        reps: list[int] = []
        for b in members:
            _check_clock(deadline_at)
            if not any(node_distance(sys, b, r) < dist for r in reps):
                reps.append(b)
        counts[dist - 1] = len(reps)
    return WeightVector(tuple(counts))


def translate(sys: PolySystem, R: MultiPoly) -> PolySystem:
    """Subtract ``R`` from every node polynomial; distances and weights are unchanged."""
    if R.nvars != sys.nvars:
        raise ArgumentError(f"R must live in the {sys.nvars}-variable system ring")
    nodes = tuple(Node(n.id, n.label, n.poly - R, n.active) for n in sys.nodes)
    return PolySystem(sys.D, nodes, sys.distinguished, validate=False)


@dataclass
class StepRecord:
    target: str
    translation: str
    new_vars: tuple[str, str]
    weight_before: WeightVector
    new_ref: str
    weight_after: WeightVector
    nodes_after: int


def _lift(P: MultiPoly, D: int) -> MultiPoly:
    """Embed ``Z[m, h_1..h_D, W]`` into ``Z[m, h_1..h_{D+2}, W]``."""
    return P.embed(D + 4, list(range(D + 1)) + [D + 3])


def vdc_step(sys: PolySystem, target: int,
             deadline_at: float | None = None) -> tuple[PolySystem, int, StepRecord]:
    """One van der Corput step eliminating the non-linear active node ``target``.

    Returns the new system, the new reference node and a trace record.  The
    new reference is the active node of ``A_1`` nearest to ``target`` (ties
    to the smallest id); the weight relative to it must drop.  Passing the
    monotonic-clock time ``deadline_at`` raises :class:`ResourceError`.
    """
    t_node = sys.node(target)
    if not t_node.active:
        raise ArgumentError("target must be active")
    if sys.is_linear_node(target):
        raise ArgumentError("target must be non-linear")
    before = weight_vector(sys, target, deadline_at)
    shifted = translate(sys, t_node.poly)
    D = sys.D
    A0 = [n for n in shifted.nodes if n.id == target or node_distance(shifted, target, n.id) == 0]
    A1 = [n for n in shifted.nodes if n not in A0]
    act1 = [n for n in A1 if n.active]
    new_ref = min(act1, key=lambda n: (node_distance(shifted, target, n.id), n.id))

    nv = D + 4
    m_plus_h = MultiPoly.var(nv, 0) + MultiPoly.var(nv, D + 1)
    m_plus_h2 = MultiPoly.var(nv, 0) + MultiPoly.var(nv, D + 2)
    ident = [MultiPoly.var(nv, i) for i in range(nv)]
    sub_h = [m_plus_h] + ident[1:]
    sub_h2 = [m_plus_h2] + ident[1:]

    next_id = max(n.id for n in sys.nodes) + 1
    nodes = []
    for n in A0:
        nodes.append(Node(n.id, n.label, _lift(n.poly, D), False))
    copies = []
    for n in A1:
        _check_clock(deadline_at)
        lifted = _lift(n.poly, D)
        nodes.append(Node(n.id, n.label, lifted.substitute(sub_h, nv), n.active))
        copies.append(Node(next_id, n.label + "'", lifted.substitute(sub_h2, nv), n.active))
        next_id += 1
    nodes.extend(copies)
    if len(nodes) > MAX_NODES:
        raise ResourceError(f"system grew to {len(nodes)} nodes (limit {MAX_NODES})")
    new_sys = PolySystem(D + 2, tuple(nodes), sys.distinguished)
    after = weight_vector(new_sys, new_ref.id, deadline_at)
    rec = StepRecord(t_node.label, t_node.poly.to_str(sys.names()), (f"h{D + 1}", f"h{D + 2}"),
                     before, new_ref.label, after, len(nodes))
    if not after < before:
        raise InvariantError(f"weight did not decrease: {before} -> {after}", trace=[rec])
    return new_sys, new_ref.id, rec


def next_target(sys: PolySystem) -> int | None:
    """Non-linear active node nearest the distinguished node, ties to the smallest id."""
    cands = [n for n in sys.active if not sys.is_linear_node(n.id)]
    if not cands:
        return None
    a0 = sys.distinguished
    return min(cands, key=lambda n: (node_distance(sys, a0, n.id), n.id)).id


@dataclass
class LinearizedResult:
    final_system: PolySystem
    steps: list[StepRecord]
    linear_nodes: list[str]
    b: tuple[MultiPoly, ...]
    c: tuple[MultiPoly, ...]
    qvec: tuple[MultiPoly, ...]
    gowers_spec: GowersSpec

    @property
    def d(self) -> int:
        return len(self.qvec)

    @property
    def t(self) -> int:
        return self.final_system.D

    def spec_with(self, H: int, W_value: int, sqrtM: int) -> GowersSpec:
        return GowersSpec(self.d, self.t, self.qvec, H, W_value, sqrtM)

    def qvec_strings(self) -> list[str]:
        names = [f"h{i}" for i in range(1, self.t + 1)] + ["W"]
        return [Q.to_str(names) for Q in self.qvec]


def _drop_m(P: MultiPoly) -> MultiPoly:
    if P.degree_in(0) > 0:
        raise InvariantError("coefficient still depends on m")
    return MultiPoly(P.nvars - 1, {e[1:]: c for e, c in P.items()})


def linearize(sys: PolySystem, H: int = 4, W_value: int = 1, sqrtM: int = 8,
              max_steps: int = MAX_STEPS, deadline: float | None = None) -> LinearizedResult:
    """Run van der Corput steps until every active node is linear, then read off the Gowers data.

    After normalizing the distinguished polynomial to ``0``, each linear
    active node is ``b m + c``; the ``b``'s form ``Q`` (padded with ``1``'s
    up to length 2).  The node count roughly doubles per step, so ``deadline``
    (seconds) and ``MAX_NODES`` bound the work.
    """
    start = time.monotonic()
    steps: list[StepRecord] = []
    cur = sys
    while True:
        target = next_target(cur)
        if target is None:
            break
        if len(steps) >= max_steps:
            raise ResourceError(f"linearization exceeded {max_steps} steps")
        if deadline is not None and time.monotonic() - start > deadline:
            raise ResourceError(f"linearization passed the {deadline} s deadline after {len(steps)} steps "
                                f"with {len(cur.nodes)} nodes")
        try:
            cur, _, rec = vdc_step(cur, target, None if deadline is None else start + deadline)
        except ResourceError as exc:
            if deadline is None or time.monotonic() - start <= deadline:
                raise
            raise ResourceError(f"linearization passed the {deadline} s deadline during step {len(steps) + 1} "
                                f"with {len(cur.nodes)} nodes") from exc
        steps.append(rec)
    norm = translate(cur, cur.node(cur.distinguished).poly)
    lin = [n for n in norm.active if n.id != norm.distinguished]
    bs, cs = [], []
    for n in lin:
        coeffs = n.poly.coeffs_in(0)
        bs.append(_drop_m(coeffs.get(1, MultiPoly.zero(norm.nvars))))
        cs.append(_drop_m(coeffs.get(0, MultiPoly.zero(norm.nvars))))
    if any(b.is_zero() for b in bs) or len(set(bs)) != len(bs):
        raise InvariantError("linear coefficients must be distinct and non-zero", trace=steps)
    qvec = list(bs)
    while len(qvec) < 2:
        qvec.append(MultiPoly.const(cur.D + 1, 1))
    spec = GowersSpec(len(qvec), cur.D, tuple(qvec), H, W_value, sqrtM)
    return LinearizedResult(cur, steps, [n.label for n in lin], tuple(bs), tuple(cs), tuple(qvec), spec)
