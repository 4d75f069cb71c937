"""Department hierarchy and host placement.

Topology files are indented text trees, one department per line, with the
hosts a department contains listed as ``host <name>`` children::

    corp
      east
        host mail.us.com
        host ws1
      west
        host srv1
"""

import logging
from typing import Iterable, Optional

import networkx as nx

from lasco_engine.settings import TopologyError

logger = logging.getLogger(__name__)

_HOST_PREFIX = "host "


class Topology:
    """A tree of departments (edges point parent to child) plus host placement."""

    def __init__(self, tree: nx.DiGraph, hosts: dict[str, str]) -> None:
        if tree.number_of_nodes() == 0:
            raise TopologyError("topology has no departments")
        if not nx.is_arborescence(tree):
            raise TopologyError("departments must form a single tree")
        for host, department in hosts.items():
            if department not in tree:
                raise TopologyError(f"host {host!r} placed in unknown department {department!r}")
            if host in tree:
                raise TopologyError(f"{host!r} names both a host and a department")
        self.tree = tree
        self.hosts = dict(hosts)
        self.root = next(n for n, degree in tree.in_degree() if degree == 0)
        self._depth = nx.shortest_path_length(tree, self.root)

    @classmethod
    def single(cls, name: str, hosts: Iterable[str]) -> "Topology":
        """One department containing every host."""
        tree = nx.DiGraph()
        tree.add_node(name)
        return cls(tree, {host: name for host in hosts})

    @property
    def departments(self) -> list[str]:
        return list(self.tree.nodes)

    def parent(self, department: str) -> Optional[str]:
        return next(iter(self.tree.predecessors(department)), None)

    def children(self, department: str) -> list[str]:
        return list(self.tree.successors(department))

    def depth(self, department: str) -> int:
        return self._depth[department]

    def department_of(self, host: str) -> str:
        try:
            return self.hosts[host]
        except KeyError:
            raise TopologyError(f"unknown host {host!r}") from None

    def contained_hosts(self, department: str) -> set[str]:
        """Hosts placed directly in ``department``."""
        return {host for host, placed in self.hosts.items() if placed == department}

    def scope(self, department: str) -> set[str]:
        """Hosts anywhere in the subtree rooted at ``department``."""
        subtree = nx.descendants(self.tree, department) | {department}
        return {host for host, placed in self.hosts.items() if placed in subtree}

    def bottom_up(self) -> list[str]:
        """Departments deepest first, ties by name."""
        return sorted(self.tree.nodes, key=lambda d: (-self._depth[d], d))

    def __contains__(self, name: str) -> bool:
        return name in self.hosts or name in self.tree


def parse_topology(text: str) -> Topology:
    """Parse an indented department tree.

    Raises:
        TopologyError: On a second root, a host outside any department or a
            duplicate name.
    """
    tree = nx.DiGraph()
    hosts: dict[str, str] = {}
    stack: list[tuple[int, str]] = []

    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(line) - len(line.lstrip())
        while stack and stack[-1][0] >= indent:
            stack.pop()

        if stripped.startswith(_HOST_PREFIX):
            host = stripped[len(_HOST_PREFIX):].strip()
            if not stack:
                raise TopologyError(f"line {number}: host {host!r} is not inside a department")
            if host in hosts:
                raise TopologyError(f"line {number}: duplicate host {host!r}")
            hosts[host] = stack[-1][1]
            continue

        if " " in stripped:
            raise TopologyError(f"line {number}: department names cannot contain spaces: {stripped!r}")
        if stripped in tree:
            raise TopologyError(f"line {number}: duplicate department {stripped!r}")
        if stack:
            tree.add_edge(stack[-1][1], stripped)
        elif tree.number_of_nodes():
            raise TopologyError(f"line {number}: second root department {stripped!r}")
        else:
            tree.add_node(stripped)
        stack.append((indent, stripped))

    topology = Topology(tree, hosts)
    logger.debug("Topology: %d departments, %d hosts", tree.number_of_nodes(), len(hosts))
    return topology


def render_topology(t: Topology) -> str:
    lines: list[str] = []

    def _walk(department: str, level: int) -> None:
        pad = "  " * level
        lines.append(f"{pad}{department}")
        for host in sorted(t.contained_hosts(department)):
            lines.append(f"{pad}  {_HOST_PREFIX}{host}")
        for child in sorted(t.children(department)):
            _walk(child, level + 1)

    _walk(t.root, 0)
    return "\n".join(lines) + "\n"
