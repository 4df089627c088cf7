from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from xolap.errors import EmptyGroupError
from xolap.sample import samplewh_files
from xolap.trees import (
    AD,
    PC,
    DataTree,
    Group,
    GroupedForest,
    PatternEdge,
    PatternNode,
    PatternTree,
    ValueTest,
    aggregate,
    group_forest,
    match_pattern,
    projection,
    selection,
)

FACT_TREE = DataTree.from_text(samplewh_files()["facts.xml"])


def pat(*nodes, edges=(), output=0):
    return PatternTree(nodes=tuple(nodes), edges=tuple(edges), output=output)


FACTS = pat(
    PatternNode("FactDoc"),
    PatternNode("fact"),
    edges=[PatternEdge(0, 1, AD)],
    output=1,
)

AMOUNT_GT_25 = pat(
    PatternNode("fact"),
    PatternNode("measure", tests=(ValueTest("name", "=", "amount"), ValueTest("value", ">", Decimal(25)))),
    edges=[PatternEdge(0, 1, PC)],
    output=0,
)


def test_match_counts_facts():
    witnesses = match_pattern(FACTS, [FACT_TREE])
    assert len(witnesses) == 5
    assert all(w.output_node.label == "fact" for w in witnesses)
    # document order of the output node's image
    ids = [w.output_node.node_id for w in witnesses]
    assert ids == sorted(ids)


def test_match_nothing():
    nothing = pat(PatternNode("warehouse"))
    assert match_pattern(nothing, [FACT_TREE]) == []


def test_match_value_predicate():
    witnesses = match_pattern(AMOUNT_GT_25, [FACT_TREE])
    amounts = [
        next(w.output_node.elements("measure")).attr("value") for w in witnesses
    ]
    assert amounts == ["30", "40", "50"]


def test_selection_emits_full_subtrees():
    subtrees = selection(AMOUNT_GT_25, [FACT_TREE])
    assert len(subtrees) == 3
    for tree in subtrees:
        assert tree.root.label == "fact"
        assert len(list(tree.root.elements("dimension"))) == 3


def test_selection_of_root_is_whole_tree():
    whole = pat(PatternNode("FactDoc"))
    [tree] = selection(whole, [FACT_TREE])
    assert tree.root is FACT_TREE.root


def test_selection_empty_forest():
    assert selection(FACTS, []) == []


def test_projection_prunes_to_matched_parts():
    project = pat(
        PatternNode("fact"),
        PatternNode("measure", tests=(ValueTest("name", "=", "amount"),)),
        edges=[PatternEdge(0, 1, PC)],
        output=0,
    )
    pruned = projection(project, [FACT_TREE])
    assert len(pruned) == 5
    for tree in pruned:
        assert tree.root.label == "fact"
        assert len(list(tree.root.elements())) == 1  # only the measure child survives
        measure = next(tree.root.elements("measure"))
        assert measure.attr("name") == "amount"


def test_projection_of_whole_tree_is_identity():
    whole = pat(PatternNode("FactDoc"))
    [tree] = projection(whole, [FACT_TREE])
    assert tree.size() == FACT_TREE.size()


def test_projection_empty_forest():
    assert projection(FACTS, []) == []


def test_group_forest_first_appearance_order():
    facts = selection(FACTS, [FACT_TREE])

    def month_of(tree):
        ref = next(
            el.attr("value-id")
            for el in tree.root.elements("dimension")
            if el.attr("idref") == "date"
        )
        return ["Jan" if ref in ("d1", "d2") else "Feb"]

    grouped = group_forest(facts, month_of)
    assert [g.key for g in grouped.groups] == [("Jan",), ("Feb",)]
    assert [len(g.members) for g in grouped.groups] == [3, 2]


def test_group_constant_key():
    facts = selection(FACTS, [FACT_TREE])
    grouped = group_forest(facts, lambda t: ())
    assert len(grouped.groups) == 1
    assert len(grouped.groups[0].members) == 5


def test_group_empty_forest():
    assert group_forest([], lambda t: ()).groups == []


def _amount(tree):
    for el in tree.root.elements("measure"):
        if el.attr("name") == "amount":
            return int(el.attr("value"))
    raise KeyError("amount")


def test_aggregate_sum_per_month():
    facts = selection(FACTS, [FACT_TREE])
    by_month = group_forest(
        facts,
        lambda t: ["Jan" if _ref(t, "date") in ("d1", "d2") else "Feb"],
    )
    assert aggregate(by_month, _amount, "sum") == [(("Jan",), 60), (("Feb",), 90)]


def _ref(tree, dim):
    for el in tree.root.elements("dimension"):
        if el.attr("idref") == dim:
            return el.attr("value-id")
    return None


def test_aggregate_count():
    facts = selection(FACTS, [FACT_TREE])
    grouped = group_forest(facts, lambda t: ())
    assert aggregate(grouped, _amount, "count") == [((), 5)]


def test_aggregate_avg_exact_decimal():
    facts = selection(FACTS, [FACT_TREE])
    grouped = group_forest(facts, lambda t: ())
    [(_, value)] = aggregate(grouped, _amount, "avg")
    assert value == Decimal(150) / Decimal(5)


def test_aggregate_empty_group():
    empty = GroupedForest(groups=[Group(key=("x",))])
    assert aggregate(empty, _amount, "sum") == [(("x",), 0)]
    assert aggregate(empty, _amount, "count") == [(("x",), 0)]
    for fn in ("min", "max", "avg"):
        with pytest.raises(EmptyGroupError):
            aggregate(empty, _amount, fn)


# ---------------------------------------------------------------------------
# properties

@st.composite
def small_trees(draw):
    """Random small element trees over a tiny tag alphabet."""

    def build(depth, counter):
        tag = draw(st.sampled_from("abc"))
        n_children = 0 if depth >= 3 else draw(st.integers(0, 3))
        children = "".join(build(depth + 1, counter) for _ in range(n_children))
        return f"<{tag}>{children}</{tag}>"

    return DataTree.from_text(f"<root>{build(0, 0)}</root>")


@given(small_trees(), st.sampled_from("abc"))
def test_ad_matching_is_monotone_under_subtree_addition(tree, tag):
    pattern = pat(
        PatternNode("root"),
        PatternNode(tag),
        edges=[PatternEdge(0, 1, AD)],
        output=1,
    )
    before = {w.output_node.node_id for w in match_pattern(pattern, [tree])}
    # graft one more subtree at the end of the root's children; rebuild the
    # source, append a child, reparse: ids of existing nodes are
    # stable because the graft goes after every existing node in document order
    def to_xml(node):
        inner = "".join(to_xml(c) for c in node.children)
        return f"<{node.label}>{inner}</{node.label}>"

    grown_text = to_xml(tree.root).replace(
        f"</{tree.root.label}>", f"<{tag}/></{tree.root.label}>"
    )
    grown = DataTree.from_text(grown_text)
    after = {w.output_node.node_id for w in match_pattern(pattern, [grown])}
    assert before <= after


@given(
    st.lists(
        st.tuples(st.integers(0, 3), st.integers(0, 2), st.integers(-50, 50)),
        max_size=40,
    )
)
def test_grouping_totality_and_aggregation_decomposition(rows):
    """Fine-grouped sums re-grouped coarsely equal the direct coarse grouping."""
    forest = [
        DataTree.from_text(f'<r a="{a}" b="{b}" v="{v}"/>') for a, b, v in rows
    ]
    value = lambda t: int(t.root.attr("v"))
    fine = group_forest(forest, lambda t: (t.root.attr("a"), t.root.attr("b")))
    assert fine.total_members() == len(forest)
    assert sum(len(g.members) for g in fine.groups) == len(forest)

    fine_sums = aggregate(fine, value, "sum")
    coarse_from_fine = {}
    for (a, _b), v in fine_sums:
        coarse_from_fine[a] = coarse_from_fine.get(a, 0) + v

    coarse = group_forest(forest, lambda t: (t.root.attr("a"),))
    direct = {key[0]: v for key, v in aggregate(coarse, value, "sum")}
    assert coarse_from_fine == direct


@given(small_trees(), st.sampled_from("abc"))
def test_selection_matches_witness_count(tree, tag):
    pattern = pat(
        PatternNode(None),
        PatternNode(tag),
        edges=[PatternEdge(0, 1, AD)],
        output=1,
    )
    witnesses = match_pattern(pattern, [tree])
    subtrees = selection(pattern, [tree])
    assert len(subtrees) == len(witnesses)
    for w, s in zip(witnesses, subtrees):
        assert s.root is w.output_node
