import json

import numpy as np
import pytest

from scopefleet.camera_node import SceneObject, SyntheticScene, make_random_scene, render_layer
from scopefleet.postproc import (
    EmptyStack, FocusStack, WindowLargerThanImage, edof_compose, focus_measure,
)
from scopefleet.postproc.timelapse import NoSuchWell, LayerOutOfRange, build_timelapse
from scopefleet.storage import Manifest, ManifestEvent
from scopefleet.camera_node.render import encode_png


def test_constant_image_scores_zero():
    img = np.full((64, 64), 177, dtype=np.uint8)
    assert np.allclose(focus_measure(img), 0.0)


def test_sharp_beats_blurred():
    scene = make_random_scene(5, n_objects=2)
    sharp = render_layer(scene, scene.objects[0].depth_um)
    blurred = render_layer(scene, scene.objects[0].depth_um + 600)
    assert focus_measure(sharp).mean() > focus_measure(blurred).mean()


def test_translation_equivariance_interior():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (96, 96)).astype(np.uint8)
    shifted = np.roll(img, (3, 3), axis=(0, 1))
    score = focus_measure(img, window_radius=2)
    score_shifted = focus_measure(shifted, window_radius=2)
    margin = 8
    inner = score[margin:-margin - 3, margin:-margin - 3]
    inner_shifted = score_shifted[margin + 3:-margin, margin + 3:-margin]
    assert np.allclose(inner, inner_shifted)


def test_window_larger_than_image_rejected():
    with pytest.raises(WindowLargerThanImage):
        focus_measure(np.zeros((5, 5), dtype=np.uint8), window_radius=3)


def test_rgb_converted_by_luminance():
    rgb = np.zeros((32, 32, 3), dtype=np.uint8)
    rgb[..., 1] = 200
    assert focus_measure(rgb).shape == (32, 32)


def test_empty_stack_rejected():
    with pytest.raises(EmptyStack):
        FocusStack("A1", 0, [])


def test_single_layer_stack_passes_through():
    layer = render_layer(make_random_scene(1), 0.0)
    composite, fmap = edof_compose(FocusStack("A1", 0, [layer]))
    assert np.array_equal(composite, layer)
    assert np.all(fmap.index == 0)


def test_two_objects_select_matching_layers():
    objs = (
        SceneObject(center=(160.0, 240.0), radius=30, depth_um=200.0, texture_seed=7),
        SceneObject(center=(480.0, 240.0), radius=30, depth_um=700.0, texture_seed=8),
    )
    scene = SyntheticScene(well="A1", objects=objs)
    layers = [render_layer(scene, i * 100.0) for i in range(10)]
    _, fmap = edof_compose(FocusStack("A1", 0, layers))
    yy, xx = np.mgrid[0:480, 0:640]
    for obj, expected in zip(objs, (2, 7)):
        mask = ((xx - obj.center[0]) ** 2 + (yy - obj.center[1]) ** 2
                <= (obj.radius - 2) ** 2)
        assert (fmap.index[mask] == expected).mean() >= 0.95


def test_composite_mean_score_dominates_every_layer():
    for seed in (0, 1, 2):
        scene = make_random_scene(seed, depth_grid=(100.0, 10, 35.0))
        layers = [render_layer(scene, i * 100.0) for i in range(10)]
        composite, _ = edof_compose(FocusStack("A1", 0, layers))
        comp_mean = focus_measure(composite).mean()
        for layer in layers:
            assert comp_mean >= 0.99 * focus_measure(layer).mean()


def test_moving_scene_ghosts_in_composite():
    # one object drifting fast between layer captures shows up at two spots
    # in the composite; every single layer shows exactly one blob.
    obj = SceneObject(center=(200.0, 240.0), radius=24, depth_um=0.0,
                      texture_seed=3, velocity=(12.0, 0.0))
    scene = SyntheticScene(well="A1", objects=(obj,))
    # layer k captured at t = 10k seconds: 120 px drift per layer
    layers = [render_layer(scene, i * 300.0, at_time_s=i * 10.0) for i in range(3)]
    composite, _ = edof_compose(FocusStack("A1", 0, layers))

    from scipy.ndimage import label
    def count_blobs(img):
        mask = np.abs(img.astype(float) - 32) > 25
        _, n = label(mask)
        return n

    per_layer = [count_blobs(l) for l in layers]
    assert all(n == 1 for n in per_layer)
    assert count_blobs(composite) > 1


def test_monotone_depth_recovery():
    indices = []
    for depth in np.linspace(0, 900, 10):
        scene = SyntheticScene(well="A1", objects=(
            SceneObject(center=(320.0, 240.0), radius=30, depth_um=float(depth),
                        texture_seed=9),))
        layers = [render_layer(scene, i * 100.0) for i in range(10)]
        _, fmap = edof_compose(FocusStack("A1", 0, layers))
        yy, xx = np.mgrid[0:480, 0:640]
        mask = ((xx - 320) ** 2 + (yy - 240) ** 2) <= 28 ** 2
        modal = np.bincount(fmap.index[mask].ravel()).argmax()
        indices.append(int(modal))
    assert indices == sorted(indices)
    assert indices[0] == 0 and indices[-1] == 9


# -- timelapse -----------------------------------------------------------------

def _mini_manifest_and_store(tmp_path):
    scene = make_random_scene(4, size=(64, 48))
    store = {}
    events = []
    for seq, ts in enumerate(["2026-01-01T00:00:00Z", "2026-01-01T00:15:00Z",
                              "2026-01-01T00:30:00Z"]):
        missing = (("A1", 0), ("A1", 1)) if seq == 1 else ()
        events.append(ManifestEvent(
            event_seq=seq, timestamp=ts,
            outcome="partial" if missing else "complete",
            wells=("A1",), layers=2, mode="zstack", missing=missing))
        for layer in range(2):
            if ("A1", layer) in missing:
                continue
            img = render_layer(scene, layer * 100.0, at_time_s=seq * 900.0, size=(64, 48))
            store[f"exp1/{ts}/A1/{layer}.png"] = encode_png(img)
    manifest = Manifest(experiment_id="exp1", device_id="dev", enabled_wells=("A1",),
                        layers=2, mode="zstack", events=tuple(events))
    return manifest, store


def test_timelapse_fixed_layer_fetches_exact_urls(tmp_path):
    manifest, store = _mini_manifest_and_store(tmp_path)
    requested = []

    def fetch(url):
        requested.append(url)
        return store.get(url.removeprefix("http://s/"))

    index = build_timelapse(manifest, "A1", "layer", tmp_path, "http://s", fetch, layer=0)
    assert [f["missing"] for f in index["frames"]] == [False, True, False]
    # fixed-layer mode requests exactly the derived URLs, nothing else
    assert requested == ["http://s/exp1/2026-01-01T00:00:00Z/A1/0.png",
                         "http://s/exp1/2026-01-01T00:30:00Z/A1/0.png"]
    assert (tmp_path / "frame_000001.png").exists()
    index_doc = json.loads((tmp_path / "index.json").read_text())
    assert [f["timestamp"] for f in index_doc["frames"]] == [
        "2026-01-01T00:00:00Z", "2026-01-01T00:15:00Z", "2026-01-01T00:30:00Z"]


def test_timelapse_edof_mode_counts(tmp_path):
    manifest, store = _mini_manifest_and_store(tmp_path)
    fetch = lambda url: store.get(url.removeprefix("http://s/"))
    index = build_timelapse(manifest, "A1", "edof", tmp_path, "http://s", fetch)
    assert len(index["frames"]) == 3
    assert index["frames"][1]["missing"] is True


def test_timelapse_rerun_is_byte_identical(tmp_path):
    manifest, store = _mini_manifest_and_store(tmp_path)
    fetch = lambda url: store.get(url.removeprefix("http://s/"))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    build_timelapse(manifest, "A1", "edof", out1, "http://s", fetch)
    build_timelapse(manifest, "A1", "edof", out2, "http://s", fetch)
    for f in sorted(out1.iterdir()):
        assert (out2 / f.name).read_bytes() == f.read_bytes()


def test_timelapse_errors(tmp_path):
    manifest, store = _mini_manifest_and_store(tmp_path)
    fetch = lambda url: None
    with pytest.raises(NoSuchWell):
        build_timelapse(manifest, "C4", "layer", tmp_path, "http://s", fetch)
    with pytest.raises(LayerOutOfRange):
        build_timelapse(manifest, "A1", "layer", tmp_path, "http://s", fetch, layer=9)
