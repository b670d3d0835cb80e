import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regionsearch.geometry import Rect
from regionsearch.perceptor import (DEFAULT_TEMPLATE, ConfigError, FileEmbeddingProvider,
                                    Instruction, MockEmbeddingProvider, ProviderError,
                                    RemoteEmbeddingProvider, Scene, ScoringError, UiElement,
                                    build_prefixed_text, cosine, elements_in_region, rescored,
                                    score_scene)

from conftest import make_scored, square


def scene_of(descs, boxes=None, domain="web"):
    boxes = boxes or [square(100 + 150 * i, 100) for i in range(len(descs))]
    els = tuple(UiElement(i, Rect(*b), d, True) for i, (d, b) in enumerate(zip(descs, boxes)))
    return Scene(1000, 1000, "img.png", els, domain)


def test_prefix_template():
    t = "Represent the {domain} UI element: {text}"
    assert build_prefixed_text("web", "Close", t) == "Represent the web UI element: Close"
    assert build_prefixed_text("", "Close", t) == "Represent the  UI element: Close"
    assert build_prefixed_text("web", "Close", t) == build_prefixed_text("web", "Close", t)


@pytest.mark.parametrize("bad", ["{app} {text}", "{domain} {text", "{0} {text}"])
def test_prefix_template_rejects_unknown_placeholders(bad):
    with pytest.raises(ConfigError):
        build_prefixed_text("web", "x", bad)


def test_cosine_examples():
    v = [0.3, -2.0, 5.0]
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-15)
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    with pytest.raises(ValueError):
        cosine([1, 0], [1, 0, 0])
    with pytest.raises(ValueError):
        cosine([0, 0], [1, 0])


def test_identical_description_scores_one():
    scene = scene_of(["save file"])
    scored = score_scene(scene, "save file", MockEmbeddingProvider())
    assert scored.scores == (1.0,)
    assert scored.instruction.prefixed_text == "Represent the web UI element: save file"


def test_empty_description_scores_zero_and_is_not_embedded():
    seen = []

    class Spy(MockEmbeddingProvider):
        def embed(self, texts):
            seen.extend(texts)
            return super().embed(texts)

    scored = score_scene(scene_of(["save", "", "open"]), "save", Spy())
    assert scored.scores[1] == 0.0
    assert len(seen) == 3  # instruction + two described elements


def test_hand_built_embeddings():
    descs = ["alpha", "beta", "gamma"]
    p = lambda t: build_prefixed_text("web", t, DEFAULT_TEMPLATE)  # noqa: E731
    table = {p("go"): [1.0, 0.0], p("alpha"): [1.0, 1.0], p("beta"): [0.0, 2.0],
             p("gamma"): [-1.0, 0.5]}
    scored = score_scene(scene_of(descs), "go", FileEmbeddingProvider(table))
    # hand cosines: 1/sqrt2, 0, negative -> clamped 0
    assert scored.scores[0] == pytest.approx(0.70710678, abs=1e-8)
    assert scored.scores[1] == 0.0
    assert scored.scores[2] == 0.0


def test_missing_precomputed_entry_names_element():
    p = lambda t: build_prefixed_text("web", t, DEFAULT_TEMPLATE)  # noqa: E731
    table = {p("go"): [1.0, 0.0], p("alpha"): [1.0, 1.0]}
    with pytest.raises(ScoringError) as err:
        score_scene(scene_of(["alpha", "beta"]), "go", FileEmbeddingProvider(table))
    assert err.value.element_id == 1
    assert "element 1" in str(err.value)


def test_file_provider_validates_vectors(tmp_path):
    with pytest.raises(ProviderError):
        FileEmbeddingProvider({"a": [1.0, 2.0], "b": [1.0]})
    with pytest.raises(ProviderError):
        FileEmbeddingProvider({"a": [0.0, 0.0]})
    path = tmp_path / "emb.json"
    path.write_text(json.dumps({"x": [1, 2, 3]}))
    prov = FileEmbeddingProvider.from_file(path)
    assert prov.dim == 3
    np.testing.assert_array_equal(prov.embed(["x"])[0], [1.0, 2.0, 3.0])


def test_mock_is_deterministic_and_never_zero():
    mock = MockEmbeddingProvider(dim=8)
    a = mock.embed(["", "the the", "Save File", "save file"])
    b = MockEmbeddingProvider(dim=8).embed(["", "the the", "Save File", "save file"])
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
        assert np.any(x)
    np.testing.assert_array_equal(a[2], a[3])


def test_score_scene_is_bitwise_deterministic(easy_corpus):
    for s in easy_corpus[:10]:
        one = score_scene(s.scene, s.instruction, MockEmbeddingProvider())
        two = score_scene(s.scene, s.instruction, MockEmbeddingProvider())
        assert one.scores == two.scores
        assert all(0.0 <= v <= 1.0 for v in one.scores)


def test_mock_and_file_providers_are_substitutable(easy_corpus):
    from regionsearch.harness import embedding_table
    table = FileEmbeddingProvider(embedding_table(easy_corpus))
    for s in easy_corpus:
        a = score_scene(s.scene, s.instruction, MockEmbeddingProvider())
        b = score_scene(s.scene, s.instruction, table)
        assert a.scores == b.scores


def test_elements_in_region():
    centers = [(100, 100), (300, 100), (100, 300), (300, 300)]
    scored = make_scored([square(x, y) for x, y in centers], [0.2, 0.9, 0.5, 0.9])
    full = elements_in_region(scored, scored.bounds)
    assert [e.id for e, _ in full] == [1, 3, 2, 0]  # score desc, id breaks the 0.9 tie
    assert elements_in_region(scored, Rect(500, 500, 600, 600)) == []
    top = elements_in_region(scored, Rect(50, 50, 350, 150))
    assert [(e.id, s) for e, s in top] == [(1, 0.9), (0, 0.2)]


@given(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0]), min_size=1, max_size=12))
def test_elements_in_region_full_image_and_order(scores):
    boxes = [square(50 + 70 * i, 500) for i in range(len(scores))]
    scored = make_scored(boxes, scores)
    out = elements_in_region(scored, scored.bounds)
    assert len(out) == len(scores)
    keys = [(-s, e.id) for e, s in out]
    assert keys == sorted(keys)


def test_rescored_is_identity(dense_scored):
    again = rescored(dense_scored)
    assert again.scores == dense_scored.scores


def test_scene_invariants():
    with pytest.raises(ValueError):
        Scene(100, 100, "x", (UiElement(0, Rect(0, 0, 200, 10), "a", True),))
    with pytest.raises(ValueError):
        Scene(100, 100, "x", (UiElement(1, Rect(0, 0, 10, 10), "a", True),))
    with pytest.raises(ValueError):
        Instruction("   ")


class _EmbedHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.requests.append(body)
        if self.server.mode == "error":
            self.send_response(500)
            self.end_headers()
            return
        vecs = MockEmbeddingProvider(16).embed(body["texts"])
        if self.server.mode == "short":
            vecs = vecs[:-1]
        payload = json.dumps({"embeddings": [v.tolist() for v in vecs]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def embed_server():
    server = HTTPServer(("127.0.0.1", 0), _EmbedHandler)
    server.requests = []
    server.mode = "ok"
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


def test_remote_provider_round_trip(embed_server):
    url = f"http://127.0.0.1:{embed_server.server_address[1]}/embed"
    scene = scene_of(["save file", "open menu"])
    remote = score_scene(scene, "save file", RemoteEmbeddingProvider(url, timeout=5))
    local = score_scene(scene, "save file", MockEmbeddingProvider(16))
    assert remote.scores == local.scores
    assert embed_server.requests[0]["texts"][0] == "Represent the web UI element: save file"


@pytest.mark.parametrize("mode", ["error", "short"])
def test_remote_provider_failures_surface(embed_server, mode):
    embed_server.mode = mode
    url = f"http://127.0.0.1:{embed_server.server_address[1]}/embed"
    with pytest.raises(ProviderError):
        RemoteEmbeddingProvider(url, timeout=5).embed(["a", "b"])


def test_remote_provider_unreachable():
    with pytest.raises(ProviderError):
        RemoteEmbeddingProvider("http://127.0.0.1:9/none", timeout=0.5).embed(["a"])
