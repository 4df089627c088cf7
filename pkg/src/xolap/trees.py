"""Tree-algebra substrate: ordered labeled trees, pattern matching, grouping.

A DataTree is an ordered labeled tree of element, attribute, and text nodes
built from an XML document. A PatternTree is a structural query template whose
edges are either pc (parent-child) or ad (ancestor-descendant) and whose nodes
carry a label predicate plus optional value comparisons; matching a pattern
against a forest yields WitnessTrees, total embeddings of the pattern into a
data tree. Selection, projection, grouping, and aggregation over forests are
the four operators the OLAP layer lowers to.

Matching is naive recursive structural search with descendant enumeration for
ad edges; forests here are desk-scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .errors import EmptyGroupError
from .xmlio import parse_xml

ELEMENT = "element"
ATTRIBUTE = "attribute"
TEXT = "text"

PC = "pc"
AD = "ad"

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(eq=False)
class TreeNode:
    """One node of a DataTree. Node ids are the pre-order position in the tree."""

    __slots__ = ("node_id", "kind", "label", "value", "children")

    node_id: int
    kind: str
    label: str
    value: str | None
    children: list["TreeNode"]

    def attr(self, name: str) -> str | None:
        for child in self.children:
            if child.kind == ATTRIBUTE and child.label == name:
                return child.value
        return None

    def elements(self, tag: str | None = None):
        for child in self.children:
            if child.kind == ELEMENT and (tag is None or child.label == tag):
                yield child

    def text_content(self) -> str:
        return "".join(c.value or "" for c in self.children if c.kind == TEXT)


class DataTree:
    """An ordered labeled document tree with stable pre-order node ids.

    A DataTree may be a view sharing nodes with a larger tree (see subtree),
    in which case node ids remain those of the original document; they stay
    unique within any view.
    """

    def __init__(self, root: TreeNode):
        self.root = root
        self._parents: dict[int, TreeNode] | None = None

    @classmethod
    def from_text(cls, xml_text: str, what: str = "document") -> "DataTree":
        return cls.from_etree(parse_xml(xml_text, what))

    @classmethod
    def from_etree(cls, element) -> "DataTree":
        counter = itertools.count()

        def build(el) -> TreeNode:
            node = TreeNode(next(counter), ELEMENT, el.tag, None, [])
            for name, value in el.attrib.items():
                node.children.append(TreeNode(next(counter), ATTRIBUTE, name, value, []))
            if el.text and el.text.strip():
                node.children.append(TreeNode(next(counter), TEXT, "", el.text.strip(), []))
            for child in el:
                node.children.append(build(child))
                if child.tail and child.tail.strip():
                    node.children.append(TreeNode(next(counter), TEXT, "", child.tail.strip(), []))
            return node

        return cls(build(element))

    def nodes(self):
        """All nodes in pre-order."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def parent(self, node: TreeNode) -> TreeNode | None:
        if self._parents is None:
            parents: dict[int, TreeNode] = {}
            for n in self.nodes():
                for child in n.children:
                    parents[child.node_id] = n
            self._parents = parents
        return self._parents.get(node.node_id)

    def path_from_root(self, node: TreeNode) -> list[TreeNode]:
        path = [node]
        while path[-1] is not self.root:
            parent = self.parent(path[-1])
            if parent is None:
                break
            path.append(parent)
        return list(reversed(path))

    def subtree(self, node: TreeNode) -> "DataTree":
        """A view rooted at node, sharing node storage with this tree."""
        return DataTree(node)

    def copy(self) -> "DataTree":
        """A structural copy with fresh pre-order node ids."""
        counter = itertools.count()

        def dup(node: TreeNode) -> TreeNode:
            fresh = TreeNode(next(counter), node.kind, node.label, node.value, [])
            fresh.children = [dup(c) for c in node.children]
            return fresh

        return DataTree(dup(self.root))

    def size(self) -> int:
        return sum(1 for _ in self.nodes())


# ---------------------------------------------------------------------------
# pattern trees

@dataclass(frozen=True)
class ValueTest:
    """Compare an attribute (or the text content when target is None) to a literal.

    Numeric literals compare numerically; a node value that fails to parse as
    a number simply does not match. String literals compare as strings.
    """

    target: str | None
    op: str
    literal: str | Decimal

    def matches(self, node: TreeNode) -> bool:
        actual = node.attr(self.target) if self.target is not None else node.text_content()
        if actual is None:
            return False
        if isinstance(self.literal, Decimal):
            try:
                left: str | Decimal = Decimal(actual)
            except InvalidOperation:
                return False
        else:
            left = actual
        op = self.op
        if op == "=":
            return left == self.literal
        if op == "!=":
            return left != self.literal
        if op == "<":
            return left < self.literal
        if op == "<=":
            return left <= self.literal
        if op == ">":
            return left > self.literal
        return left >= self.literal


@dataclass(frozen=True)
class PatternNode:
    label: str | None = None  # None matches any element tag
    tests: tuple[ValueTest, ...] = ()

    def matches(self, node: TreeNode) -> bool:
        if node.kind != ELEMENT:
            return False
        if self.label is not None and node.label != self.label:
            return False
        return all(test.matches(node) for test in self.tests)


@dataclass(frozen=True)
class PatternEdge:
    parent: int
    child: int
    kind: str  # PC or AD


@dataclass(frozen=True)
class PatternTree:
    nodes: tuple[PatternNode, ...]
    edges: tuple[PatternEdge, ...] = ()
    output: int = 0

    def __post_init__(self):
        n = len(self.nodes)
        if n == 0:
            raise ValueError("pattern has no nodes")
        if not (0 <= self.output < n):
            raise ValueError("output node out of range")
        incoming = [0] * n
        for edge in self.edges:
            if edge.kind not in (PC, AD):
                raise ValueError(f"bad edge kind {edge.kind!r}")
            if not (0 <= edge.parent < n and 0 <= edge.child < n):
                raise ValueError("edge endpoint out of range")
            incoming[edge.child] += 1
        roots = [i for i, deg in enumerate(incoming) if deg == 0]
        if len(roots) != 1 or any(deg > 1 for deg in incoming):
            raise ValueError("pattern must be a single-rooted tree")
        # reachability from the root guarantees connectedness
        seen = {roots[0]}
        frontier = [roots[0]]
        while frontier:
            p = frontier.pop()
            for edge in self.edges:
                if edge.parent == p and edge.child not in seen:
                    seen.add(edge.child)
                    frontier.append(edge.child)
        if len(seen) != n:
            raise ValueError("pattern is not connected")
        object.__setattr__(self, "_root", roots[0])

    @property
    def root(self) -> int:
        return self._root  # type: ignore[attr-defined]

    def children_of(self, index: int):
        return [(e.child, e.kind) for e in self.edges if e.parent == index]

    def leaves(self) -> list[int]:
        parents = {e.parent for e in self.edges}
        return [i for i in range(len(self.nodes)) if i not in parents]


@dataclass(frozen=True)
class WitnessTree:
    """A total embedding of a pattern into one data tree."""

    pattern: PatternTree
    tree: DataTree
    bindings: tuple[TreeNode, ...]  # indexed by pattern node

    @property
    def output_node(self) -> TreeNode:
        return self.bindings[self.pattern.output]


def _descendant_elements(node: TreeNode):
    stack = list(node.children)
    while stack:
        child = stack.pop(0)
        if child.kind == ELEMENT:
            yield child
            stack = list(child.children) + stack


def _extend(pattern: PatternTree, pindex: int, dnode: TreeNode, binding: dict):
    """Yield all completions of binding with pattern node pindex bound to dnode."""
    binding = dict(binding)
    binding[pindex] = dnode
    pending = pattern.children_of(pindex)
    if not pending:
        yield binding
        return

    def recurse(i: int, acc: dict):
        if i == len(pending):
            yield acc
            return
        child_index, kind = pending[i]
        pnode = pattern.nodes[child_index]
        candidates = dnode.elements() if kind == PC else _descendant_elements(dnode)
        for cand in candidates:
            if not pnode.matches(cand):
                continue
            for sub in _extend(pattern, child_index, cand, acc):
                yield from recurse(i + 1, sub)

    yield from recurse(0, binding)


def match_pattern(pattern: PatternTree, forest) -> list[WitnessTree]:
    """Every embedding of the pattern into every tree, in document order of the
    output node's image (ties broken by the remaining bindings)."""
    witnesses = []
    for tree in forest:
        found = []
        root_pnode = pattern.nodes[pattern.root]
        for node in tree.nodes():
            if not root_pnode.matches(node):
                continue
            for binding in _extend(pattern, pattern.root, node, {}):
                found.append(tuple(binding[i] for i in range(len(pattern.nodes))))
        found = sorted(
            set(found),
            key=lambda b: (b[pattern.output].node_id, tuple(n.node_id for n in b)),
        )
        witnesses.extend(WitnessTree(pattern, tree, b) for b in found)
    return witnesses


def selection(pattern: PatternTree, forest) -> list[DataTree]:
    """For each witness, the subtree rooted at the output node's image, with
    its full content preserved (emitted as views over the source trees)."""
    return [w.tree.subtree(w.output_node) for w in match_pattern(pattern, forest)]


def projection(pattern: PatternTree, forest) -> list[DataTree]:
    """Prune matched trees down to the pattern's image.

    One output tree is emitted per distinct image of the pattern root (in
    document order). A kept element retains its attribute and text children;
    element children survive only if they are themselves bound or lie on a
    connecting path, except that images of leaf pattern nodes keep their whole
    subtree. Input trees without any witness are dropped.
    """
    out = []
    leaf_indices = set(pattern.leaves())
    for tree in forest:
        witnesses = [w for w in match_pattern(pattern, [tree])]
        by_root: dict[int, list[WitnessTree]] = {}
        roots: dict[int, TreeNode] = {}
        for w in witnesses:
            root_image = w.bindings[pattern.root]
            by_root.setdefault(root_image.node_id, []).append(w)
            roots[root_image.node_id] = root_image
        for root_id in sorted(by_root):
            keep: set[int] = set()
            keep_subtree: set[int] = set()
            for w in by_root[root_id]:
                for i, bound in enumerate(w.bindings):
                    keep.add(bound.node_id)
                    if i in leaf_indices:
                        keep_subtree.add(bound.node_id)
                for edge in pattern.edges:
                    top = w.bindings[edge.parent]
                    path = w.tree.path_from_root(w.bindings[edge.child])
                    started = False
                    for step in path:
                        if step is top:
                            started = True
                        if started:
                            keep.add(step.node_id)
            counter = itertools.count()

            def prune(node: TreeNode, whole: bool) -> TreeNode:
                fresh = TreeNode(next(counter), node.kind, node.label, node.value, [])
                for child in node.children:
                    if whole or child.node_id in keep_subtree:
                        fresh.children.append(
                            prune(child, whole or child.node_id in keep_subtree)
                        )
                    elif child.kind in (ATTRIBUTE, TEXT):
                        fresh.children.append(prune(child, False))
                    elif child.node_id in keep:
                        fresh.children.append(prune(child, False))
                return fresh

            root_node = roots[root_id]
            out.append(DataTree(prune(root_node, root_node.node_id in keep_subtree)))
    return out


# ---------------------------------------------------------------------------
# grouping and aggregation

@dataclass
class Group:
    key: tuple
    members: list[DataTree] = field(default_factory=list)


@dataclass
class GroupedForest:
    groups: list[Group]

    def total_members(self) -> int:
        return sum(len(g.members) for g in self.groups)


def group_forest(forest, key_fn) -> GroupedForest:
    """Partition a forest by key tuples, groups in first-appearance order,
    members in input order. Exceptions from key_fn propagate (a key function
    undefined on a tree signals a malformed fact)."""
    index: dict[tuple, Group] = {}
    for tree in forest:
        key = tuple(key_fn(tree))
        group = index.get(key)
        if group is None:
            group = index[key] = Group(key=key)
        group.members.append(tree)
    return GroupedForest(groups=list(index.values()))


def aggregate(grouped: GroupedForest, extractor, fn: str) -> list[tuple[tuple, int | Decimal]]:
    """Fold each group's extracted values with fn, one (key, value) per group.

    sum and count of an empty group are 0; min, max, and avg over an empty
    group raise EmptyGroupError. avg divides exact decimals.
    """
    out = []
    for group in grouped.groups:
        if fn == "count":
            out.append((group.key, len(group.members)))
            continue
        values = [extractor(tree) for tree in group.members]
        if fn == "sum":
            total: int | Decimal = 0
            for v in values:
                total += v
            out.append((group.key, total))
            continue
        if not values:
            raise EmptyGroupError(f"{fn} over empty group {group.key!r}")
        if fn == "min":
            out.append((group.key, min(values)))
        elif fn == "max":
            out.append((group.key, max(values)))
        elif fn == "avg":
            total = 0
            for v in values:
                total += v
            out.append((group.key, Decimal(total) / Decimal(len(values))))
        else:
            raise ValueError(f"unknown aggregate {fn!r}")
    return out
