import json
import math
import random
from dataclasses import replace

import pytest

from regionsearch.actions import ActionKind, ActionParams, apply_action
from regionsearch.geometry import Rect
from regionsearch.perceptor import MockEmbeddingProvider, score_scene
from regionsearch.planner import (EmptyScene, SearchConfig, SlotStatus, backpropagate, expand,
                                  init_root, run_search, select_path, uct_score)
from regionsearch.reward import evaluate
from regionsearch.trace import replay_stats

from conftest import make_scored, square
from oracles import enumerate_best

F, SH, SC = ActionKind.FOCUS, ActionKind.SHIFT, ActionKind.SCATTER


def scored_corpus(samples):
    prov = MockEmbeddingProvider()
    return [score_scene(s.scene, s.instruction, prov) for s in samples]


def test_uct_arithmetic(dense_scored):
    tree = init_root(dense_scored, SearchConfig())
    node = tree.root
    node.visit_count = 10
    slot = node.slots[F]
    slot.status, slot.visits, slot.value, slot.child_id = SlotStatus.EXPANDED, 2, 0.5, 0
    assert uct_score(node, F, 1.0) == pytest.approx(0.5 + math.sqrt(math.log(10) / 2), abs=1e-12)
    assert uct_score(node, F, 1.0) == pytest.approx(1.5729, abs=1e-4)
    assert uct_score(node, F, 0.0) == 0.5
    assert uct_score(node, SH, 1.0) == math.inf
    node.slots[SC].status = SlotStatus.UNAVAILABLE
    with pytest.raises(ValueError):
        uct_score(node, SC, 1.0)


def test_root_is_standalone_focus(dense_scored):
    cfg = SearchConfig()
    tree = init_root(dense_scored, cfg)
    root = tree.root
    assert root.region == apply_action(F, dense_scored.bounds, dense_scored, cfg.action_params).region
    assert root.depth == 0 and root.visit_count == 1
    assert root.reward == evaluate(root.region, dense_scored, cfg.reward_weights)


def test_single_element_scene():
    scored = make_scored([(100, 100, 140, 120)], [0.8])
    res = run_search(scored, SearchConfig())
    assert res.best_region == Rect(92, 92, 148, 128)
    assert res.node_count == 1  # focus is a no-op, shift/scatter have nothing outside
    pruned = {(e["action"], e["reason"]) for e in res.trace.of_kind("action_pruned")}
    assert pruned == {("focus", "no-op"), ("shift", "unavailable"), ("scatter", "unavailable")}


def test_empty_scene_rejected():
    from regionsearch.perceptor import Instruction, Scene, ScoredScene
    scored = ScoredScene(Scene(100, 100, "x", ()), Instruction("go"), ())
    with pytest.raises(EmptyScene):
        run_search(scored)


def test_fresh_root_selects_itself(dense_scored):
    tree = init_root(dense_scored, SearchConfig())
    assert select_path(tree) == [0]


def _force_child(tree, parent, action, q, visits):
    res = apply_action(action, parent.region, tree.scored, tree.config.action_params)
    child = tree.add_node(res.region, parent, action, visit_count=visits)
    slot = parent.slots[action]
    slot.status, slot.child_id, slot.visits, slot.value = SlotStatus.EXPANDED, child.node_id, visits, q
    return child


def test_select_path_hand_built_tree(dense_scored):
    tree = init_root(dense_scored, SearchConfig())
    root = tree.root
    f = _force_child(tree, root, F, q=0.6, visits=3)
    s = _force_child(tree, root, SH, q=0.5, visits=1)
    c = _force_child(tree, root, SC, q=0.55, visits=2)
    root.visit_count = 7
    # hand UCT at the root: F 0.6+sqrt(ln7/3)=1.405, Sh 0.5+sqrt(ln7)=1.895, Sc 0.55+sqrt(ln7/2)=1.536
    assert select_path(tree) == [0, s.node_id]
    # make shift a bad bet with many visits; now scatter wins: 0.55 + sqrt(ln 20 / 2) = 1.774
    root.slots[SH].visits, root.slots[SH].value = 14, 0.1
    root.visit_count = 20
    scores = {a: uct_score(root, a, 1.0) for a in (F, SH, SC)}
    assert max(scores, key=scores.get) is SC
    assert select_path(tree) == [0, c.node_id]
    # c = 0: greedy on Q
    tree.config = replace(tree.config, uct_c=0.0)
    assert select_path(tree) == [0, f.node_id]


def test_select_path_stops_at_depth_limit(dense_scored):
    cfg = SearchConfig(max_depth=1)
    tree = init_root(dense_scored, cfg)
    root = tree.root
    for a in (F, SH, SC):
        _force_child(tree, root, a, q=0.5, visits=1)
    root.visit_count = 4
    path = select_path(tree)
    assert len(path) == 2
    assert tree.nodes[path[-1]].depth == 1
    assert expand(tree, tree.nodes[path[-1]]) is None


def test_expand_availability_cascade():
    # the root keeps both neighbours, so nothing is outside it: after focus, shift and
    # scatter are both marked unavailable and expansion is exhausted
    scored = make_scored([square(100, 100), square(130, 100)], [0.9, 0.5])
    tree = init_root(scored, SearchConfig(action_params=ActionParams(focus_top_fraction=1.0)))
    child = expand(tree, tree.root)
    assert child.incoming_action is F
    assert expand(tree, tree.root) is None
    slots = tree.root.slots
    assert [slots[a].status for a in (SH, SC)] == [SlotStatus.UNAVAILABLE] * 2
    reasons = [(e["action"], e["reason"]) for e in tree.trace.of_kind("action_pruned")]
    assert reasons == [("shift", "unavailable"), ("scatter", "unavailable")]


def test_expand_skips_unavailable_focus():
    scored = make_scored([square(100, 100), square(130, 100)], [0.9, 0.5])
    tree = init_root(scored, SearchConfig())
    empty = tree.add_node(Rect(500, 500, 700, 700), tree.root, SC, visit_count=0)
    child = expand(tree, empty)
    assert empty.slots[F].status is SlotStatus.UNAVAILABLE
    assert child.incoming_action is SH


def test_expand_matches_standalone_modules(dense_scored):
    cfg = SearchConfig()
    tree = init_root(dense_scored, cfg)
    seen = set()
    while (child := expand(tree, tree.root)) is not None:
        want = apply_action(child.incoming_action, tree.root.region, dense_scored, cfg.action_params)
        assert child.region == want.region
        assert child.reward == evaluate(child.region, dense_scored, cfg.reward_weights)
        seen.add(child.incoming_action)
    assert seen == {F, SH, SC}


def test_backpropagate_running_mean(dense_scored):
    tree = init_root(dense_scored, SearchConfig())
    c1 = expand(tree, tree.root)
    backpropagate(tree, [0, c1.node_id], 0.2)
    slot = tree.root.slots[c1.incoming_action]
    assert (slot.value, slot.visits) == (0.2, 1)
    backpropagate(tree, [0, c1.node_id], 0.8)
    assert slot.value == pytest.approx(0.5) and slot.visits == 2


def test_backpropagate_three_level_ledger(dense_scored):
    tree = init_root(dense_scored, SearchConfig())
    a = expand(tree, tree.root)
    backpropagate(tree, [0, a.node_id], 0.4)
    b = expand(tree, a)
    backpropagate(tree, [0, a.node_id, b.node_id], 0.6)
    c = expand(tree, b)
    backpropagate(tree, [0, a.node_id, b.node_id, c.node_id], 0.9)
    # hand ledger: root->a saw 0.4, 0.6, 0.9; a->b saw 0.6, 0.9; b->c saw 0.9
    ra = tree.root.slots[a.incoming_action]
    ab = a.slots[b.incoming_action]
    bc = b.slots[c.incoming_action]
    assert (ra.visits, ab.visits, bc.visits) == (3, 2, 1)
    assert ra.value == pytest.approx((0.4 + 0.6 + 0.9) / 3)
    assert ab.value == pytest.approx(0.75)
    assert bc.value == pytest.approx(0.9)
    assert [tree.root.visit_count, a.visit_count, b.visit_count, c.visit_count] == [4, 3, 2, 1]


def test_budget_zero_returns_root(dense_scored):
    res = run_search(dense_scored, SearchConfig(rollout_budget=0))
    assert res.best_node_id == 0 and res.node_count == 1


def test_run_search_invariants(easy_corpus):
    cfg = SearchConfig()
    for scored in scored_corpus(easy_corpus):
        res = run_search(scored, cfg)
        assert res.node_count <= 1 + cfg.rollout_budget
        assert all(n.depth <= cfg.max_depth for n in res.nodes)
        assert res.best_reward.total >= res.nodes[0].reward.total
        created = res.trace.of_kind("node_created")
        assert res.best_reward.total == max(e["reward"]["total"] for e in created)
        for n in res.nodes:
            assert n.visit_count == 1 + sum(s.visits for s in n.slots.values()) + n.dead_end_visits
            for s in n.slots.values():
                assert 0.0 <= s.value <= 1.0
        # replay from the trace alone
        visits, edges = replay_stats(res.trace)
        for n in res.nodes:
            assert visits[n.node_id] == n.visit_count
            for s in n.slots.values():
                if s.child_id is not None:
                    vals = edges.get((n.node_id, s.child_id), [])
                    assert len(vals) == s.visits
                    if vals:
                        assert s.value == pytest.approx(sum(vals) / len(vals), abs=1e-12)


def test_exhaustive_equals_enumerator(easy_corpus):
    cfg = SearchConfig(exhaustive=True)
    for scored in scored_corpus(easy_corpus[:15]):
        res = run_search(scored, cfg)
        assert res.best_reward.total == enumerate_best(scored, cfg)
        assert all(n.depth <= cfg.max_depth for n in res.nodes)


def test_exhaustive_dominates_budgeted(easy_corpus):
    for scored in scored_corpus(easy_corpus[:15]):
        ex = run_search(scored, SearchConfig(exhaustive=True)).best_reward.total
        assert ex >= run_search(scored, SearchConfig()).best_reward.total


def test_anytime_improvement(easy_corpus):
    for scored in scored_corpus(easy_corpus[:10]):
        totals = [run_search(scored, SearchConfig(rollout_budget=b)).best_reward.total
                  for b in (0, 1, 2, 4, 8, 16)]
        assert totals == sorted(totals)


def test_trace_is_replayable_bitwise(easy_corpus):
    scored = scored_corpus(easy_corpus[:1])[0]
    a = run_search(scored, SearchConfig()).trace.to_json()
    b = run_search(scored, SearchConfig()).trace.to_json()
    assert a == b
    assert json.loads(a)["config"]["rollout_budget"] == 8


def test_seeded_tiebreak_is_reproducible(easy_corpus):
    scored = scored_corpus(easy_corpus[:1])[0]
    cfg = SearchConfig(seeded_tiebreak=123, rollout_budget=16)
    assert run_search(scored, cfg).trace.to_json() == run_search(scored, cfg).trace.to_json()


def test_action_subset_restricts_tree(easy_corpus):
    scored = scored_corpus(easy_corpus[:1])[0]
    res = run_search(scored, SearchConfig(actions=(ActionKind.FOCUS,), exhaustive=True))
    assert {n.incoming_action for n in res.nodes[1:]} <= {F}
    assert res.best_reward.total == enumerate_best(scored, SearchConfig(actions=(F,)))


def test_rescore_flag_changes_nothing(easy_corpus):
    scored = scored_corpus(easy_corpus[:1])[0]
    a = run_search(scored, SearchConfig())
    b = run_search(scored, SearchConfig(rescore_per_region=True))
    assert [e for e in a.trace.events] == [e for e in b.trace.events]


def test_random_scenes_exhaustive_oracle():
    rng = random.Random(17)
    for _ in range(20):
        n = rng.randint(1, 20)
        boxes = []
        for _ in range(n):
            x, y = rng.uniform(0, 950), rng.uniform(0, 970)
            boxes.append((x, y, x + rng.uniform(5, 50), y + rng.uniform(5, 30)))
        scored = make_scored(boxes, [rng.random() for _ in range(n)],
                             [rng.random() < 0.5 for _ in range(n)])
        cfg = SearchConfig(exhaustive=True, action_params=ActionParams())
        assert run_search(scored, cfg).best_reward.total == enumerate_best(scored, cfg)
