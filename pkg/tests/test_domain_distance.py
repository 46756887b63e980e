import numpy as np
import pytest

from core.types import Image
from domain_distance import (
    DistanceModel,
    DomainScore,
    GROUPS,
    categorize_domains,
    downsample,
    fit_distance_model,
    fit_vectors,
    mean_error,
    read_scores_csv,
    reconstruction_error,
    strategy_agreement,
    write_agreement_csv,
    write_scores_csv,
)
from errors import DistanceModelError
from simulator.vehicle import ControlCommand
from simulator.world import make_world


def _scores(errors, strategy=None):
    return [DomainScore(domain=name, mean_error=e, n_samples=10, strategy=strategy)
            for name, e in errors.items()]


def test_downsample_box_averages_luma():
    pixels = np.zeros((2, 4, 3), dtype=np.uint8)
    pixels[:, 2:] = 255
    assert downsample(Image(pixels), shape=(1, 2)).tolist() == pytest.approx([0.0, 1.0])
    flat = downsample(Image.filled(80, 40, (100, 100, 100)))
    assert flat.shape == (800,)
    assert np.allclose(flat, 100 / 255)


def test_downsample_needs_a_large_enough_image():
    with pytest.raises(DistanceModelError, match="smaller"):
        downsample(Image.filled(10, 10, (0, 0, 0)))


def test_training_vectors_reconstruct_exactly():
    vectors = np.random.default_rng(0).normal(size=(5, 10))
    model = fit_vectors(vectors, k=4)
    assert model.k == 4
    assert np.allclose(model.components @ model.components.T, np.eye(4))
    assert all(model.vector_error(v) == pytest.approx(0.0, abs=1e-20) for v in vectors)


def test_zero_components_measure_distance_from_the_mean():
    vectors = np.array([[0.0, 0.0], [2.0, 2.0]])
    model = fit_vectors(vectors, k=0)
    assert model.vector_error(np.array([1.0, 1.0])) == 0.0
    assert model.vector_error(np.array([3.0, 3.0])) == pytest.approx(4.0)


def test_leading_component_follows_the_spread():
    t = np.linspace(-1.0, 1.0, 9)
    vectors = np.stack([t + 3.0, t + 3.0, np.full_like(t, 0.5)], axis=1)
    model = fit_vectors(vectors, k=1)
    assert np.allclose(model.mean, [3.0, 3.0, 0.5])
    assert np.allclose(np.abs(model.components[0]), [2 ** -0.5, 2 ** -0.5, 0.0])
    assert model.vector_error(np.array([5.0, 5.0, 0.5])) == pytest.approx(0.0, abs=1e-20)
    assert model.vector_error(np.array([3.0, 3.0, 1.5])) == pytest.approx(1.0 / 3.0)


@pytest.mark.parametrize("k", [-1, 4, 6])
def test_fit_rejects_bad_k(k):
    with pytest.raises(DistanceModelError):
        fit_vectors(np.ones((5, 3)), k=k)


def test_vector_size_must_match():
    model = fit_vectors(np.eye(3), k=1)
    with pytest.raises(DistanceModelError, match="Expected a vector of 3"):
        model.vector_error(np.ones(4))


def test_unseen_brightness_scores_higher(track):
    world = make_world(track)
    frames = []
    for i in range(60):
        world.advance(ControlCommand(0.05 * np.sin(i / 5.0)))
        if i % 3 == 0:
            frames.append(world.render().front.image)
    model = fit_distance_model(frames, k=8)
    nominal, n = mean_error(model, frames)
    darker = [Image((img.pixels // 2).astype(np.uint8)) for img in frames]
    shifted, _ = mean_error(model, darker)
    assert n == len(frames)
    assert shifted > nominal
    assert reconstruction_error(model, frames[0]) >= 0.0


def test_model_file(tmp_path):
    model = fit_vectors(np.random.default_rng(2).normal(size=(6, 800)), k=3)
    loaded = DistanceModel.load(model.save(tmp_path / "model.json"))
    assert loaded.shape == (20, 40)
    assert np.allclose(loaded.components, model.components)
    with pytest.raises(DistanceModelError, match="not found"):
        DistanceModel.load(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{}", encoding="utf-8")
    with pytest.raises(DistanceModelError, match="Invalid"):
        DistanceModel.load(tmp_path / "bad.json")


def test_empty_inputs():
    with pytest.raises(DistanceModelError):
        fit_distance_model([])
    with pytest.raises(DistanceModelError):
        mean_error(fit_vectors(np.eye(3), k=1), [])


def test_categorize_nine_domains_in_tertiles():
    names = [f"d{i}" for i in range(9)]
    groups = categorize_domains(_scores({name: float(9 - i) for i, name in enumerate(names)}))
    assert [groups[f"d{i}"] for i in (8, 7, 6)] == [GROUPS[0]] * 3
    assert [groups[f"d{i}"] for i in (5, 4, 3)] == [GROUPS[1]] * 3
    assert [groups[f"d{i}"] for i in (2, 1, 0)] == [GROUPS[2]] * 3


@pytest.mark.parametrize("n, sizes", [(3, (1, 1, 1)), (4, (2, 1, 1)), (5, (2, 2, 1)), (7, (3, 2, 2))])
def test_categorize_remainders_go_to_earlier_groups(n, sizes):
    groups = categorize_domains(_scores({f"d{i}": float(i) for i in range(n)}))
    assert tuple(list(groups.values()).count(g) for g in GROUPS) == sizes


def test_categorize_needs_three_domains():
    with pytest.raises(DistanceModelError, match="at least 3"):
        categorize_domains(_scores({"a": 1.0, "b": 2.0}))


def test_strategy_agreement():
    rows = strategy_agreement({
        "instruction": _scores({"a": 1.0, "b": 2.0, "c": 3.0}),
        "refine": _scores({"a": 0.1, "b": 0.5, "c": 0.3}),
    })
    by_domain = {row.domain: row for row in rows}
    assert by_domain["a"].consistent
    assert by_domain["b"].groups == {"instruction": "in_between", "refine": "out_of_distribution"}
    assert not by_domain["b"].consistent
    assert not by_domain["c"].consistent


def test_agreement_with_a_missing_domain():
    rows = strategy_agreement({
        "instruction": _scores({"a": 1.0, "b": 2.0, "c": 3.0}),
        "refine": _scores({"a": 1.0, "b": 2.0, "d": 3.0}),
    })
    by_domain = {row.domain: row for row in rows}
    assert not by_domain["c"].consistent
    assert by_domain["d"].groups["instruction"] == ""
    with pytest.raises(DistanceModelError):
        strategy_agreement({})


def test_scores_csv(tmp_path):
    scores = _scores({"night": 0.02, "sunny": 0.001, "forest": 0.005}, strategy="refine")
    groups = categorize_domains(scores)
    path = write_scores_csv(tmp_path / "scores.csv", scores, groups)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "domain,strategy,mean_error,n_samples,group"
    assert lines[1] == "sunny,refine,0.001000,10,in_distribution"
    loaded = read_scores_csv(path)
    assert [s.domain for s in loaded] == ["sunny", "forest", "night"]
    assert loaded[2].mean_error == pytest.approx(0.02)
    assert loaded[0].strategy == "refine"


def test_read_scores_errors(tmp_path):
    with pytest.raises(DistanceModelError, match="not found"):
        read_scores_csv(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("domain,mean_error\nnight,high\n", encoding="utf-8")
    with pytest.raises(DistanceModelError, match="Invalid scores file"):
        read_scores_csv(bad)


def test_agreement_csv(tmp_path):
    rows = strategy_agreement({"instruction": _scores({"a": 1.0, "b": 2.0, "c": 3.0})})
    text = write_agreement_csv(tmp_path / "agreement.csv", rows).read_text(encoding="utf-8")
    assert text.splitlines() == [
        "domain,instruction,consistent",
        "a,in_distribution,true",
        "b,in_between,true",
        "c,out_of_distribution,true",
    ]
