import pytest

from regionsearch.geometry import Rect
from regionsearch.harness import GeneratorSpec, generate_synthetic
from regionsearch.perceptor import Instruction, Scene, ScoredScene, UiElement


def make_scored(boxes, scores, interactive=None, width=1000, height=1000,
                descriptions=None, instruction="click target"):
    """ScoredScene with hand-set scores, bypassing any provider."""
    n = len(boxes)
    interactive = [True] * n if interactive is None else interactive
    descriptions = descriptions or [f"element {i}" for i in range(n)]
    elements = tuple(UiElement(i, Rect(*b), descriptions[i], interactive[i])
                     for i, b in enumerate(boxes))
    scene = Scene(width, height, "fixture.png", elements, "web")
    return ScoredScene(scene, Instruction(instruction), tuple(float(s) for s in scores))


def square(cx, cy, half=10):
    return (cx - half, cy - half, cx + half, cy + half)


@pytest.fixture
def dense_scored():
    """Hand-scored 12-element scene on a 1000x1000 canvas."""
    centers = [(100, 100), (130, 120), (160, 100), (700, 150), (720, 180), (500, 500),
               (520, 540), (900, 900), (850, 880), (300, 800), (80, 900), (600, 300)]
    scores = [0.95, 0.9, 0.85, 0.6, 0.55, 0.5, 0.45, 0.7, 0.65, 0.3, 0.2, 0.4]
    inter = [True, True, False, True, False, True, True, False, True, True, False, True]
    return make_scored([square(x, y, 15) for x, y in centers], scores, inter)


@pytest.fixture(scope="session")
def easy_corpus():
    return generate_synthetic(GeneratorSpec(n_scenes=30, max_elements=20), seed=11)


# -- acceptance reporting ---------------------------------------------------
# Tests marked ``criterion(n, title)`` get one PASS/FAIL line in the terminal
# summary; ``detail`` (from record_property) says what was measured.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[n] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        line = f"criterion {n} {title}: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
