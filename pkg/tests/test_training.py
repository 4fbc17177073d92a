"""
Tests for training steps, the training loop, the gradient check and ablation bookkeeping
"""

import json

import numpy as np
import pandas as pd
import pytest
import torch

from conftest import tiny_config
from sketch3d.analytics.segmentation import evaluate_split
from sketch3d.config.schema import LossConfig, RunConfig
from sketch3d.datagen.dataset import DatasetManifest, generate_dataset, load_split
from sketch3d.errors import NumericalError, StateError
from sketch3d.losses.objectives import cross_entropy_t
from sketch3d.mask23d.teacher import build_teacher, init_frozen
from sketch3d.sketch2mask.unet import init_params, load_unet
from sketch3d.training import loop as loop_module
from sketch3d.training.ablation import arm_config, run_ablation, summarize
from sketch3d.training.gradcheck import GradCheckReport, finite_diff_check, relative_error
from sketch3d.training.loop import (
    LOG_COLUMNS,
    BatchStream,
    checkpoint_steps,
    epoch_permutation,
    resolve_teacher_dir,
    train_loop,
)
from sketch3d.training.steps import (
    Batch,
    evaluate_style_loss,
    grad_total_loss,
    make_optimizer,
    parameter_snapshot,
    train_step,
)


def batch_of(samples, n=2):
    return Batch.of([(s.sketch, s.mask) for s in samples[:n]])


def test_epoch_permutation_is_a_permutation():
    order = epoch_permutation(5, 0, 17)
    assert sorted(order) == list(range(17))
    assert order == epoch_permutation(5, 0, 17)
    assert order != epoch_permutation(5, 1, 17)


def test_batch_stream_straddles_epochs():
    stream = BatchStream(5, 3, seed=2)
    first, second = stream.indices(0), stream.indices(1)
    epoch0, epoch1 = epoch_permutation(2, 0, 5), epoch_permutation(2, 1, 5)
    assert first == epoch0[:3]
    assert second == epoch0[3:] + epoch1[:1]


def test_batch_stream_random_access_matches_sequential():
    sequential = BatchStream(7, 4, seed=9)
    walked = [sequential.indices(step) for step in range(6)]
    assert BatchStream(7, 4, seed=9).indices(5) == walked[5]


@pytest.mark.parametrize(
    "steps, interval, expected",
    [(25, 10, [10, 20, 25]), (20, 10, [10, 20]), (3, 10, [3])],
)
def test_checkpoint_steps(steps, interval, expected):
    assert checkpoint_steps(steps, interval) == expected


def test_zero_weights_give_zero_gradient(teacher, samples, run_config):
    model = init_params(run_config.unet, 0)
    report, grads = grad_total_loss(
        model, teacher, batch_of(samples), LossConfig(lambda_sv=0.0, lambda_ce=0.0, lambda_dice=0.0)
    )
    assert report.l_total == 0.0
    assert all(not g.any() for g in grads.values())


def test_cross_entropy_gradient_is_linear_in_weight(teacher, samples, run_config):
    model = init_params(run_config.unet, 1)
    batch = batch_of(samples)
    _, once = grad_total_loss(model, teacher, batch, LossConfig(lambda_sv=0.0, lambda_ce=1.0, lambda_dice=0.0))
    _, twice = grad_total_loss(model, teacher, batch, LossConfig(lambda_sv=0.0, lambda_ce=2.0, lambda_dice=0.0))
    for name in once:
        assert np.allclose(twice[name], 2.0 * once[name], rtol=1e-10, atol=1e-14), name


def test_gradient_names_match_parameters(teacher, samples, run_config):
    model = init_params(run_config.unet, 0)
    _, grads = grad_total_loss(model, teacher, batch_of(samples), run_config.loss)
    assert list(grads) == [name for name, _ in model.named_parameters()]


def test_train_step_leaves_teacher_untouched(teacher, samples, run_config):
    model = init_params(run_config.unet, 0)
    optimizer = make_optimizer(model, run_config.train)
    before = parameter_snapshot(teacher)
    for _ in range(3):
        train_step(model, optimizer, teacher, batch_of(samples), run_config.loss)
    after = parameter_snapshot(teacher)
    assert all(np.array_equal(a, b) for a, b in zip(before, after))


def test_train_step_refuses_unfrozen_teacher(samples, run_config):
    unfrozen = init_frozen(run_config.teacher, frozen=False)
    model = init_params(run_config.unet, 0)
    with pytest.raises(StateError):
        train_step(model, make_optimizer(model, run_config.train), unfrozen, batch_of(samples), run_config.loss)


def test_train_step_changes_unet(teacher, samples, run_config):
    model = init_params(run_config.unet, 0)
    before = parameter_snapshot(model)
    report = train_step(model, make_optimizer(model, run_config.train), teacher, batch_of(samples), run_config.loss)
    assert report.l_total > 0
    assert any(not np.array_equal(a, b) for a, b in zip(before, parameter_snapshot(model)))


class Scalar(torch.nn.Module):
    def __init__(self, value):
        super().__init__()
        self.w = torch.nn.Parameter(torch.tensor([value], dtype=torch.float64))


@pytest.mark.parametrize("grad", [3.0, -0.25])
def test_adam_first_step_moves_by_learning_rate(run_config, grad):
    module = Scalar(1.0)
    optimizer = make_optimizer(module, run_config.train)
    module.w.grad = torch.tensor([grad], dtype=torch.float64)
    optimizer.step()
    expected = 1.0 - np.sign(grad) * run_config.train.learning_rate
    assert float(module.w) == pytest.approx(expected, abs=1e-10)


def test_adam_zero_gradient_keeps_parameter(run_config):
    module = Scalar(0.5)
    optimizer = make_optimizer(module, run_config.train)
    for _ in range(3):
        module.w.grad = torch.zeros(1, dtype=torch.float64)
        optimizer.step()
    assert float(module.w) == 0.5


def test_train_loop_is_deterministic(teacher, samples, run_config):
    a = train_loop(samples, run_config, teacher)
    b = train_loop(samples, run_config, teacher)
    pd.testing.assert_frame_equal(a.history, b.history)
    for pa, pb in zip(parameter_snapshot(a.model), parameter_snapshot(b.model)):
        assert np.array_equal(pa, pb)


def test_train_loop_writes_log_and_checkpoints(tmp_path, teacher, samples, run_config):
    result = train_loop(samples, run_config, teacher, out_dir=tmp_path / "run")
    log = pd.read_csv(tmp_path / "run" / "train_log.csv")
    assert list(log.columns) == LOG_COLUMNS
    assert log.step.tolist() == [1, 2, 3, 4]
    assert [p.name for p in result.checkpoints] == ["step_000002", "step_000004"]

    model, manifest = load_unet(result.checkpoints[-1])
    assert manifest["step"] == 4
    assert resolve_teacher_dir(result.checkpoints[-1], manifest) == (tmp_path / "run" / "teacher").resolve()
    assert json.loads((tmp_path / "run" / "teacher" / "manifest.json").read_text())["frozen"] is True
    for a, b in zip(parameter_snapshot(model), parameter_snapshot(result.model)):
        assert np.allclose(a, b, rtol=1e-6, atol=1e-7)


def test_augmentation_switch_changes_the_run(teacher, samples):
    plain = train_loop(samples, tiny_config(augment=False), teacher)
    augmented = train_loop(samples, tiny_config(augment=True), teacher)
    assert not plain.history.equals(augmented.history)


def test_evaluate_style_loss_is_nonnegative(teacher, samples, run_config):
    model = init_params(run_config.unet, 0)
    pairs = [(s.sketch, s.mask) for s in samples]
    assert evaluate_style_loss(model, teacher, pairs) >= 0.0
    assert evaluate_style_loss(model, teacher, pairs, chunk=1) == pytest.approx(
        evaluate_style_loss(model, teacher, pairs), rel=1e-12
    )


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1.0, 1.0 + 1e-6) == pytest.approx(1e-6, rel=1e-3)


def test_finite_difference_check_passes():
    report = finite_diff_check(seed=0)
    assert report.passed, report.summary()
    assert report.rows.tensor.is_unique
    assert (report.rows.entries > 0).all()


def test_finite_difference_check_catches_wrong_cross_entropy_gradient():
    report = finite_diff_check(seed=0, ce_fn=lambda y, yhat: 1.5 * cross_entropy_t(y, yhat))
    assert not report.passed
    assert "head.weight" in report.failed
    assert "FAIL" in report.summary()


def test_arm_config_variants(run_config):
    assert arm_config(run_config, "no_sv", 3).loss.lambda_sv == 0.0
    assert arm_config(run_config, "no_augment", 3).train.augment is False
    full = arm_config(run_config, "full", 3)
    assert full.train.seed == 3 and full.loss == run_config.loss
    with pytest.raises(ValueError):
        arm_config(run_config, "no_dice", 0)


def test_summarize_direction_checks():
    table = pd.DataFrame(
        [
            {"arm": "full", "seed": 0, "miou": 0.8, "map": 0.85, "l_sv": 0.1},
            {"arm": "full", "seed": 1, "miou": 0.7, "map": 0.83, "l_sv": 0.2},
            {"arm": "no_sv", "seed": 0, "miou": 0.8, "map": 0.86, "l_sv": 0.5},
            {"arm": "no_sv", "seed": 1, "miou": 0.75, "map": 0.84, "l_sv": 0.6},
        ]
    )
    summary = summarize(table)
    assert summary["sv_lower_every_seed"] is True
    assert summary["map_noninferior"] is True
    assert summary["medians"]["full"]["miou"] == pytest.approx(0.75)


def test_run_ablation_table(teacher, samples, run_config):
    result = run_ablation(run_config, samples[:4], samples[4:], teacher, seeds=(0,), arms=("full", "no_sv"))
    assert result.table.arm.tolist() == ["full", "no_sv"]
    assert result.table.final_l_total.notna().all()
    assert "sv_lower_every_seed" in result.summary


@pytest.mark.filterwarnings("error::UserWarning")
def test_loss_report_is_plain_floats(teacher, samples, run_config):
    report, _ = grad_total_loss(init_params(run_config.unet, 0), teacher, batch_of(samples), run_config.loss)
    assert all(type(value) is float for value in (report.l_sv, report.l_ce, report.l_dice, report.l_total))


def test_unchecked_tensor_fails_the_report():
    rows = pd.DataFrame(
        [
            {"tensor": "enc.0.weight", "entries": 4, "max_rel_error": 1e-9},
            {"tensor": "head.bias", "entries": 0, "max_rel_error": 0.0},
        ]
    )
    report = GradCheckReport(rows=rows)
    assert not report.passed
    assert report.failed == ["head.bias"]
    assert "FAIL (head.bias)" in report.summary()


def test_log_rows_survive_a_failed_step(tmp_path, teacher, samples, monkeypatch):
    config = tiny_config(steps=6, checkpoint_interval=6, log_interval=2)
    real_step = loop_module.train_step
    calls = []

    def failing_step(*args, **kwargs):
        calls.append(1)
        if len(calls) == 5:
            raise NumericalError("Loss term is not finite: nan", where="l_ce")
        return real_step(*args, **kwargs)

    monkeypatch.setattr(loop_module, "train_step", failing_step)
    with pytest.raises(NumericalError, match="step 5"):
        train_loop(samples, config, teacher, out_dir=tmp_path / "run")
    log = pd.read_csv(tmp_path / "run" / "train_log.csv")
    assert log.step.tolist() == [1, 2, 3, 4]
    assert not (tmp_path / "run" / "checkpoints").exists()


# Desk-scale acceptance runs: 64x64 faces, 256 train / 32 test
ABLATION_STEPS = 1000
ABLATION_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="module")
def desk_data(tmp_path_factory):
    config = RunConfig()
    root = tmp_path_factory.mktemp("desk") / "data"
    generate_dataset(DatasetManifest.from_config(config.data.model_copy(update={"root": str(root)})), allow_empty=True)
    train, test = load_split(root, "train"), load_split(root, "test")
    teacher, _ = build_teacher(config.teacher, config.render, [s.mask for s in train])
    return config, train, test, teacher


@pytest.fixture(scope="module")
def desk_ablation(desk_data):
    config, train, test, teacher = desk_data
    config = config.model_copy(update={"train": config.train.model_copy(update={"steps": ABLATION_STEPS})})
    return run_ablation(config, train, test, teacher, seeds=ABLATION_SEEDS, arms=("full", "no_sv"))


def run_files(run_dir):
    return {str(p.relative_to(run_dir)): p.read_bytes() for p in sorted(run_dir.rglob("*")) if p.is_file()}


@pytest.mark.slow
def test_end_to_end_training_run(tmp_path, desk_data):
    config, train, test, teacher = desk_data
    assert (len(train), len(test)) == (256, 32)
    assert config.train.steps == 2000

    first = train_loop(train, config, teacher, out_dir=tmp_path / "a")
    assert first.final_report.l_total < 0.5 * first.initial_report.l_total
    assert evaluate_split(first.model, test)["miou"] >= 0.70

    train_loop(train, config, teacher, out_dir=tmp_path / "b")
    a, b = run_files(tmp_path / "a"), run_files(tmp_path / "b")
    assert sorted(a) == sorted(b)
    assert "checkpoints/step_002000/manifest.json" in a
    for name in a:
        assert a[name] == b[name], name


@pytest.mark.slow
def test_style_loss_ablation_direction(desk_ablation):
    table = desk_ablation.table
    assert sorted(table.seed[table.arm == "full"]) == list(ABLATION_SEEDS)
    assert desk_ablation.summary["sv_lower_every_seed"], table.to_string()
    assert desk_ablation.summary["map_noninferior"], table.to_string()


@pytest.mark.slow
def test_median_loss_halves_across_seeds(desk_ablation):
    full = desk_ablation.table[desk_ablation.table.arm == "full"]
    assert len(full) == len(ABLATION_SEEDS)
    assert full.final_l_total.median() < 0.5 * full.initial_l_total.median()
