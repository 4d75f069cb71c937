"""Tests for lasco_engine.distsim.contingent: matches that owe endpoint evaluations."""

import pytest

from lasco_engine.distsim.contingent import (
    DESTINATION,
    SOURCE,
    ContingentCondition,
    combine_contingent,
    edge_contingent_match,
    empty_contingent_match,
    failed_carried,
    host_attrs,
    needs_full_state,
    node_contingent_match,
)
from lasco_engine.history.model import ObjectSnapshot, SystemEvent
from lasco_engine.lang.policy import parse_policy_file
from lasco_engine.matcher.violations import FailedPredicate
from lasco_engine.settings import MatchInvariantError

_BAD = {"id": "bad", "name": "bad", "RootKit": True}
_SERVER = {"id": "server", "name": "server", "RootKit": False}
_TARGET = {"id": "target", "name": "target", "RootKit": False}


def _make_event(event_id: str, src: str, dst: str, time: int, protocol: str) -> SystemEvent:
    return SystemEvent(event_id=event_id, src=src, dst=dst, time=time, attrs={"protocol": protocol})


@pytest.fixture
def rootkit_nfs_policy(fixtures_dir):
    return parse_policy_file((fixtures_dir / "rootkit_nfs.lasco").read_text())[0]


@pytest.fixture
def login(rootkit_nfs_policy):
    """The login edge as seen by each department, keyed by department."""
    p = rootkit_nfs_policy
    event = _make_event("c1", "bad", "server", 1, "SSH")
    edge = p.edge("n1->n2")
    return {
        "d1": edge_contingent_match(p, edge, event, _BAD, None),
        "d2": edge_contingent_match(p, edge, event, None, _SERVER),
    }


# ── Single-edge matches ──────────────────────────────────────────


class TestEdgeContingentMatch:
    def test_full_state_endpoint_becomes_contingent(self, login):
        assert login["d2"].contingents == {ContingentCondition("n1->n2", SOURCE)}
        assert login["d2"].base.ps_map.edge_map == {"n1->n2": "c1"}

    def test_name_only_endpoint_is_evaluated_on_host_name(self, login):
        assert login["d1"].contingents == frozenset()

    def test_wrong_host_name_rejects(self, rootkit_nfs_policy):
        event = _make_event("c9", "bad", "elsewhere", 1, "SSH")
        assert edge_contingent_match(rootkit_nfs_policy, rootkit_nfs_policy.edge("n1->n2"), event, _BAD, None) is None

    def test_failing_full_state_rejects(self, rootkit_nfs_policy):
        event = _make_event("c1", "bad", "server", 1, "SSH")
        clean = {**_BAD, "RootKit": False}
        assert edge_contingent_match(rootkit_nfs_policy, rootkit_nfs_policy.edge("n1->n2"), event, clean, None) is None

    def test_requirement_is_folded_where_attributes_are(self, rootkit_nfs_policy):
        event = _make_event("c2", "server", "target", 2, "NFS")
        match = edge_contingent_match(rootkit_nfs_policy, rootkit_nfs_policy.edge("n2->n3"), event, _SERVER, None)
        assert match.contingents == frozenset()
        assert match.carried["n2->n3"].operand1 is False

    def test_self_loop_needs_same_host(self):
        p = parse_policy_file("a -> a\n")[0]
        event = _make_event("e", "x", "y", 1, "SSH")
        assert edge_contingent_match(p, p.edges[0], event, None, None) is None

    def test_destination_contingent(self):
        p = parse_policy_file("b\tRootKit = true\na -> b\n")[0]
        match = edge_contingent_match(p, p.edges[0], _make_event("e", "x", "y", 1, "SSH"), None, None)
        assert match.contingents == {ContingentCondition("a->b", DESTINATION)}


class TestHostState:
    def test_needs_full_state(self, rootkit_nfs_policy):
        assert needs_full_state(rootkit_nfs_policy, "n1")
        assert not needs_full_state(rootkit_nfs_policy, "n2")
        assert not needs_full_state(rootkit_nfs_policy, "n3")

    def test_host_attrs(self):
        assert host_attrs("srv1") == {"id": "srv1", "name": "srv1"}


# ── Combination ──────────────────────────────────────────────────


class TestCombineContingent:
    def test_other_department_discharges_condition(self, login):
        combined = combine_contingent(login["d2"], login["d1"])
        assert combined.contingents == frozenset()
        assert combined.base.ps_map.edge_map == {"n1->n2": "c1"}

    def test_same_condition_on_both_sides_stays(self, login):
        combined = combine_contingent(login["d2"], login["d2"])
        assert combined.contingents == {ContingentCondition("n1->n2", SOURCE)}

    def test_policy_mismatch(self):
        with pytest.raises(ValueError, match="cannot combine"):
            combine_contingent(empty_contingent_match("a"), empty_contingent_match("b"))

    def test_one_event_cannot_serve_two_edges(self, rootkit_nfs_policy, login):
        reused = edge_contingent_match(
            rootkit_nfs_policy, rootkit_nfs_policy.edge("n2->n3"), _make_event("c1", "server", "target", 1, "NFS"), _SERVER, _TARGET,
        )
        assert reused is not None
        assert combine_contingent(login["d1"], reused) is None


class TestFailedCarried:
    def test_complete_match_reports_failed_requirement(self, rootkit_nfs_policy, login):
        mount = edge_contingent_match(
            rootkit_nfs_policy, rootkit_nfs_policy.edge("n2->n3"), _make_event("c2", "server", "target", 2, "NFS"), _SERVER, _TARGET,
        )
        complete = combine_contingent(combine_contingent(login["d1"], login["d2"]), mount)
        assert complete.is_complete(rootkit_nfs_policy)
        assert failed_carried(rootkit_nfs_policy, complete) == [FailedPredicate(element_id="n2->n3")]

    def test_upheld_requirement(self, rootkit_nfs_policy, login):
        mount = edge_contingent_match(
            rootkit_nfs_policy, rootkit_nfs_policy.edge("n2->n3"), _make_event("c2", "server", "target", 2, "SMB"), _SERVER, _TARGET,
        )
        complete = combine_contingent(login["d1"], mount)
        assert failed_carried(rootkit_nfs_policy, complete) == []

    def test_incomplete_match(self, rootkit_nfs_policy, login):
        with pytest.raises(MatchInvariantError, match="incomplete"):
            failed_carried(rootkit_nfs_policy, login["d1"])

    def test_contingent_match_is_incomplete(self, rootkit_nfs_policy, login):
        mount = edge_contingent_match(
            rootkit_nfs_policy, rootkit_nfs_policy.edge("n2->n3"), _make_event("c2", "server", "target", 2, "NFS"), _SERVER, _TARGET,
        )
        with pytest.raises(MatchInvariantError):
            failed_carried(rootkit_nfs_policy, combine_contingent(login["d2"], mount))


class TestNodeContingentMatch:
    def test_isolated_node(self):
        p = parse_policy_file("x\tRootKit = true\tFalse\n")[0]
        snapshot = ObjectSnapshot(object_id="bad", time=0, attrs={"RootKit": True})
        match = node_contingent_match(p, "x", snapshot, snapshot.attrs)
        assert match.base.ps_map.node_map == {"x": ("bad", 0)}
        assert failed_carried(p, match) == [FailedPredicate(element_id="x")]

    def test_failing_domain(self):
        p = parse_policy_file("x\tRootKit = true\n")[0]
        snapshot = ObjectSnapshot(object_id="ok", time=0, attrs={"RootKit": False})
        assert node_contingent_match(p, "x", snapshot, snapshot.attrs) is None
