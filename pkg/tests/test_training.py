import numpy as np
import pytest

from softu.softmodel import build_soft_model
from softu.tophat import make_tophat_dataset
from softu.training import TrainConfig, TrainHistory, train_soft


def test_zero_epochs_returns_model_unchanged():
    model = build_soft_model(2, 2, seed=1)
    data = make_tophat_dataset(20, seed=1)
    trained, history = train_soft(model, data, TrainConfig(epochs=0))
    assert len(history) == 0
    for a, b in zip(model.blocks, trained.blocks):
        assert np.array_equal(a, b)
    assert trained is not model  # returned model is a copy


def test_huge_lambda_drives_unitarity_down():
    rng = np.random.default_rng(2)
    model = build_soft_model(2, 2, seed=2)
    # start visibly off the manifold with random labels: the regularizer dominates
    model.blocks = [b + 0.05 * rng.standard_normal(b.shape) for b in model.blocks]
    initial = model.max_unitarity_deviation()
    data = make_tophat_dataset(30, seed=2)
    cfg = TrainConfig(epochs=150, lam=1e6, learning_rate=0.01, lr_decay=0.97, seed=2)
    trained, _ = train_soft(model, data, cfg)
    final = trained.max_unitarity_deviation()
    assert final < initial
    assert final < 1e-3


def test_history_row_count_and_columns():
    model = build_soft_model(2, 2, seed=3)
    data = make_tophat_dataset(25, seed=3)
    trained, history = train_soft(model, data, TrainConfig(epochs=7, lam=10.0, seed=3))
    assert len(history) == 7
    assert history.epoch == list(range(7))
    for i in range(7):
        assert history.total_loss[i] == pytest.approx(history.task_loss[i] + history.unitary_loss[i])
        assert history.wall_s[i] > 0.0


def test_desk_scale_run_improves_and_stays_near_unitary():
    data = make_tophat_dataset(200, seed=5)
    model = build_soft_model(3, 4, seed=5)
    cfg = TrainConfig(epochs=60, lam=1000.0, learning_rate=0.01, batch_size=16, squared_penalty=True, seed=5)
    trained, history = train_soft(model, data, cfg)
    assert history.total_loss[-1] < history.total_loss[0]
    assert trained.max_unitarity_deviation() <= 1e-2


def test_training_deterministic_bit_identical():
    data = make_tophat_dataset(40, seed=7)
    cfg = TrainConfig(epochs=10, lam=100.0, batch_size=8, seed=7)
    _, h1 = train_soft(build_soft_model(2, 3, seed=7), data, cfg)
    _, h2 = train_soft(build_soft_model(2, 3, seed=7), data, cfg)
    assert h1.task_loss == h2.task_loss
    assert h1.unitary_loss == h2.unitary_loss


def test_non_finite_loss_abort_names_epoch():
    model = build_soft_model(2, 2, seed=9)
    model.blocks[0] = model.blocks[0] * np.nan  # corrupted checkpoint
    data = make_tophat_dataset(10, seed=9)
    with pytest.raises(RuntimeError, match="epoch 0"):
        train_soft(model, data, TrainConfig(epochs=3, lam=1.0))


def test_unitarity_threshold_warning():
    model = build_soft_model(2, 2, seed=11)
    data = make_tophat_dataset(20, seed=11)
    with pytest.warns(UserWarning, match="unitarity"):
        train_soft(model, data, TrainConfig(epochs=20, lam=0.0, unitarity_threshold=1e-6, seed=11))


def test_history_csv_roundtrip(tmp_path):
    data = make_tophat_dataset(15, seed=13)
    _, history = train_soft(build_soft_model(2, 2, seed=13), data, TrainConfig(epochs=5, lam=5.0))
    path = tmp_path / "history.csv"
    history.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "epoch,task_loss,unitary_loss,total_loss,wall_s,max_udev"
    back = TrainHistory.from_csv(path)
    assert back.task_loss == history.task_loss
    assert back.max_udev == history.max_udev


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, lam=-2.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, batch_size=0)
