import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorline.gestures.data import (
    GestureLabel,
    GestureWindow,
    HandFrame,
    default_subjects,
    generate_dataset,
    windows_by_subject,
)
from anchorline.gestures.net import (
    PARAM_SHAPES,
    ClassMissing,
    GestureNet,
    TrainConfig,
    attention_weights,
    infer,
    load_net,
    loss_and_grads,
    save_net,
    train,
)
from oracles import finite_difference_gradient


def random_batch(rng, batch=3):
    x = rng.normal(0.0, 0.5, (batch, 12, 19))
    labels = rng.integers(0, 4, batch)
    targets = np.zeros((batch, 4))
    targets[np.arange(batch), labels] = 1.0
    return x, targets


def window_from_array(arr) -> GestureWindow:
    return GestureWindow(tuple(HandFrame(i / 60.0, row) for i, row in enumerate(arr)))


def zero_net(out_bias=None) -> GestureNet:
    params = {name: np.zeros(shape) for name, shape in PARAM_SHAPES.items()}
    if out_bias is not None:
        params["out_b"] = np.asarray(out_bias, dtype=float)
    return GestureNet(params)


def assert_gradients_match(net, x, targets, rng, coords_per_param=10):
    """1e-4 relative agreement wherever the gradient is meaningfully sized;
    below the finite-difference noise floor require absolute agreement."""
    _, grads = loss_and_grads(net, x, targets)
    for name in PARAM_SHAPES:
        size = net.params[name].size
        indices = rng.choice(size, size=min(coords_per_param, size), replace=False)
        for index in indices:
            numeric = finite_difference_gradient(net, x, targets, name, int(index))
            analytic = grads[name].ravel()[int(index)]
            scale = max(abs(numeric), abs(analytic))
            if scale >= 1e-6:
                assert abs(numeric - analytic) / scale < 1e-4, (name, index)
            else:
                assert abs(numeric - analytic) < 1e-9, (name, index)


def test_gradients_match_finite_differences_on_every_layer():
    rng = np.random.default_rng(0)
    x, targets = random_batch(rng)
    net = GestureNet.init(1)
    assert_gradients_match(net, x, targets, rng)


def test_attention_rows_sum_to_one():
    rng = np.random.default_rng(2)
    x, _ = random_batch(rng, batch=5)
    net = GestureNet.init(3)
    attn = attention_weights(net, x)
    assert attn.shape == (5, 12, 12)
    assert np.abs(attn.sum(axis=-1) - 1.0).max() <= 1e-9
    assert (attn >= 0).all()


def test_zero_net_gives_half_confidence_and_background_tiebreak():
    net = zero_net()
    window = window_from_array(np.zeros((12, 19)))
    conf, label = infer(net, window)
    assert np.allclose(conf, 0.5)
    assert label == GestureLabel.BACKGROUND


def test_highest_confidence_wins():
    # zero weights collapse the net to its classifier bias
    logit = lambda p: float(np.log(p / (1 - p)))
    net = zero_net(out_bias=[logit(0.62), logit(0.3), logit(0.25), logit(0.4)])
    conf, label = infer(net, window_from_array(np.zeros((12, 19))))
    assert conf[0] == pytest.approx(0.62)
    assert label == GestureLabel.STOP


def test_tie_between_non_background_classes_takes_lowest_index():
    net = zero_net(out_bias=[0.8, 0.8, 0.1, 0.0])
    _, label = infer(net, window_from_array(np.zeros((12, 19))))
    assert label == GestureLabel.STOP


@given(st.floats(-3, 3), st.floats(0.1, 5))
@settings(max_examples=30, deadline=None)
def test_label_invariant_under_monotone_logit_transforms(shift, scale):
    rng = np.random.default_rng(9)
    net = GestureNet.init(5)
    window = window_from_array(rng.normal(0, 0.4, (12, 19)).clip(-3, 3))
    _, base_label = infer(net, window)
    transformed = net.copy()
    # strictly monotone map applied uniformly to classifier outputs
    transformed.params["out_w"] *= scale
    transformed.params["out_b"] = transformed.params["out_b"] * scale + shift
    _, new_label = infer(transformed, window)
    assert new_label == base_label


def small_dataset():
    recordings = generate_dataset(default_subjects(3, seed=0), reps=1, n_frames=24)
    return windows_by_subject(recordings)


def test_training_reduces_loss_and_reports():
    data = small_dataset()
    cfg = TrainConfig(epochs=3, learning_rate=1e-2, batch_size=16, seed=7)
    net, report = train(data, holdout="subject-2", cfg=cfg)
    assert report.final_loss < report.initial_loss
    assert report.holdout_subject == "subject-2"
    assert 0.0 <= report.holdout_accuracy <= 1.0
    assert report.n_train > report.n_holdout > 0
    assert len(report.epoch_losses) == 3
    for arr in net.params.values():
        assert np.isfinite(arr).all()


def test_training_is_bit_identical_under_fixed_seed():
    data = small_dataset()
    cfg = TrainConfig(epochs=2, learning_rate=1e-2, batch_size=16, seed=11)
    net_a, _ = train(data, holdout="subject-2", cfg=cfg)
    net_b, _ = train(data, holdout="subject-2", cfg=cfg)
    for name in PARAM_SHAPES:
        assert np.array_equal(net_a.params[name], net_b.params[name]), name


def test_class_missing_raises():
    data = small_dataset()
    filtered = {
        subject: [(w, lbl) for w, lbl in pairs if lbl != GestureLabel.POINT]
        for subject, pairs in data.items()
    }
    with pytest.raises(ClassMissing):
        train(filtered, holdout="subject-2", cfg=TrainConfig(epochs=1))


def test_too_few_subjects_rejected():
    data = small_dataset()
    only_one = {"subject-0": data["subject-0"]}
    with pytest.raises(ValueError):
        train(only_one, holdout="subject-0")
    with pytest.raises(ValueError):
        train(data, holdout="subject-99")


def test_net_save_load_round_trip(tmp_path):
    net = GestureNet.init(21)
    path = tmp_path / "net.json"
    save_net(net, path)
    loaded = load_net(path)
    for name in PARAM_SHAPES:
        assert np.array_equal(loaded.params[name], net.params[name])
