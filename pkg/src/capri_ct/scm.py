"""Causal graph over the CT acquisition variables.

Nodes: tube voltage ``v``, tube current ``t``, contrast agent ``a``, the
acquired image ``i``, the latent imaging context ``z`` and the outcome
``snr``, plus explicit exogenous noise roots ``u_i``, ``u_z``, ``u_snr``.
The structure is fixed: the acquisition parameters generate the image,
the image and parameters generate the latent context, and the parameters
plus latent context generate SNR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Set, Tuple

from .errors import UnknownNode


@dataclass(frozen=True)
class Node:
    name: str
    observed: bool = True
    exogenous: bool = False


@dataclass(frozen=True)
class MechanismSignature:
    """Functional assignment of one endogenous node.

    ``inputs`` are the node's endogenous parents, ``noise`` its exogenous
    noise parent. Together they equal the graph parents of ``output``.
    """

    output: str
    inputs: Tuple[str, ...]
    noise: str


@dataclass
class CausalGraph:
    nodes: Dict[str, Node] = field(default_factory=dict)
    edges: Set[Tuple[str, str]] = field(default_factory=set)
    mechanisms: Dict[str, MechanismSignature] = field(default_factory=dict)

    def add_node(self, name: str, observed: bool = True, exogenous: bool = False):
        self.nodes[name] = Node(name, observed=observed, exogenous=exogenous)

    def add_edge(self, src: str, dst: str):
        self._require(src)
        self._require(dst)
        self.edges.add((src, dst))

    def _require(self, name: str):
        if name not in self.nodes:
            raise UnknownNode(name)

    def parents(self, name: str) -> FrozenSet[str]:
        self._require(name)
        return frozenset(src for src, dst in self.edges if dst == name)

    def children(self, name: str) -> FrozenSet[str]:
        self._require(name)
        return frozenset(dst for src, dst in self.edges if src == name)

    def is_acyclic(self) -> bool:
        return check_acyclic(self)

    def to_dot(self) -> str:
        """DOT rendering; latent nodes drawn dashed."""
        lines = ["digraph causal {", "  rankdir=LR;"]
        for name in sorted(self.nodes):
            node = self.nodes[name]
            style = ' [style=dashed]' if not node.observed else ""
            lines.append(f'  "{name}"{style};')
        for src, dst in sorted(self.edges):
            lines.append(f'  "{src}" -> "{dst}";')
        lines.append("}")
        return "\n".join(lines)


def build_capri_dag() -> CausalGraph:
    """The fixed acquisition DAG with its mechanism signatures.

    v, t, a -> i;  i, v, t, a -> z;  v, t, a, z -> snr; each endogenous
    node also receives its own exogenous noise root. ``u_z`` is realized
    operationally by the reparameterization noise of the latent encoder;
    ``u_i`` and ``u_snr`` exist only as graph nodes (no learned mechanism
    ever samples them).
    """
    g = CausalGraph()
    for name in ("v", "t", "a"):
        g.add_node(name, observed=True)
    g.add_node("i", observed=True)
    g.add_node("z", observed=False)
    g.add_node("snr", observed=True)
    for name in ("u_i", "u_z", "u_snr"):
        g.add_node(name, observed=False, exogenous=True)

    for p in ("v", "t", "a", "u_i"):
        g.add_edge(p, "i")
    for p in ("i", "v", "t", "a", "u_z"):
        g.add_edge(p, "z")
    for p in ("v", "t", "a", "z", "u_snr"):
        g.add_edge(p, "snr")

    g.mechanisms = {
        "i": MechanismSignature("i", ("v", "t", "a"), "u_i"),
        "z": MechanismSignature("z", ("i", "v", "t", "a"), "u_z"),
        "snr": MechanismSignature("snr", ("v", "t", "a", "z"), "u_snr"),
    }
    return g


def check_acyclic(graph: CausalGraph) -> bool:
    """True iff the directed graph contains no cycle (Kahn's algorithm)."""
    indegree = {name: 0 for name in graph.nodes}
    for _, dst in graph.edges:
        indegree[dst] += 1
    queue = sorted(name for name, deg in indegree.items() if deg == 0)
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for child in sorted(graph.children(node)):
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    return seen == len(graph.nodes)


@dataclass
class IdentifiabilityResult:
    identifiable: bool
    reason: str
    adjustment_set: FrozenSet[str] = frozenset()

    def __bool__(self) -> bool:
        return self.identifiable


def backdoor_identifiable(
    graph: CausalGraph,
    treatments: Iterable[str],
    outcome: str,
) -> IdentifiabilityResult:
    """Check identifiability of P(outcome | do(treatments)) by adjustment.

    Identifiable iff every non-exogenous parent of the outcome is either
    observed or is a latent node computable from observed parents (its own
    parents, exogenous noise aside, are all observed). The adjustment set
    collects the observed non-treatment parents, substituting computable
    latents by their observed inputs.
    """
    treatments = frozenset(treatments)
    for name in sorted(treatments | {outcome}):
        if name not in graph.nodes:
            raise UnknownNode(name)

    outcome_parents = graph.parents(outcome)
    if not outcome_parents:
        return IdentifiabilityResult(
            False, f"{outcome!r} is a root node: no mechanism to intervene through"
        )

    adjustment: Set[str] = set()
    for parent in sorted(outcome_parents):
        node = graph.nodes[parent]
        if node.exogenous:
            continue
        if parent in treatments:
            continue
        if node.observed:
            adjustment.add(parent)
            continue
        # Latent parent: computable iff all of its non-exogenous parents
        # are observed. Anything else is an unblockable backdoor.
        latent_parents = [
            p for p in sorted(graph.parents(parent)) if not graph.nodes[p].exogenous
        ]
        if not latent_parents:
            return IdentifiabilityResult(
                False,
                f"latent parent {parent!r} of {outcome!r} has no observed "
                f"inputs: backdoor path cannot be blocked",
            )
        unobserved = [p for p in latent_parents if not graph.nodes[p].observed]
        if unobserved:
            return IdentifiabilityResult(
                False,
                f"latent parent {parent!r} depends on unobserved {unobserved}: "
                f"backdoor path cannot be blocked",
            )
        adjustment.update(p for p in latent_parents if p not in treatments)

    adj = frozenset(adjustment)
    return IdentifiabilityResult(
        True,
        "all parents of the outcome are observed or computable from "
        f"observed inputs; adjustment set {sorted(adj)}",
        adj,
    )
