import json

import pytest

from causalflow.__version__ import __version__
from causalflow.cli import cli
from causalflow.cli.cli import error_line, run
from causalflow.models.training_errors import CheckpointIntegrityError
from causalflow.services import experiment_service
from tests.conftest import TINY_OVERRIDES


def tiny_flags(out):
    flags = ["--out", str(out)]
    for item in TINY_OVERRIDES:
        flags += ["--set", item]
    return flags


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == __version__


def test_a_command_is_required(capsys):
    assert run([]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("error kind=ConfigurationError status=2 msg=")


@pytest.mark.parametrize(
    "argv",
    [
        ["plan", "--width", "5", "--height", "5", "--no-such-flag"],
        ["plan", "--height", "5"],
        ["plan", "--width", "wide", "--height", "5"],
        ["mask-dump", "--m", "2"],
        ["no-such-command"],
    ],
)
def test_usage_errors_are_one_line(capsys, argv):
    assert run(argv) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    err = captured.err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("error kind=ConfigurationError status=2 msg=")
    assert json.loads(err[0].split("msg=", 1)[1])


def test_plan_with_full_scale_constants(capsys):
    assert run(["plan", "--width", "700", "--height", "500", "--paper-constants"]) == 0
    assert capsys.readouterr().out.strip() == "k=0 budget=256 grid=0x0"
    assert run(["plan", "--width", "1536", "--height", "768", "--full-scale"]) == 0
    assert capsys.readouterr().out.strip() == "k=2 budget=544 grid=1x2"
    assert run(["plan", "--width", "700", "--height", "500", "--full-scale"]) == 0
    assert capsys.readouterr().out.strip().startswith("k=0 budget=256")


def test_plan_with_configured_planner(capsys, tmp_path):
    assert run(["plan", "--width", "24", "--height", "24"] + tiny_flags(tmp_path)) == 0
    assert capsys.readouterr().out.strip() == "k=4 budget=52 grid=2x2"


def test_mask_dump(capsys):
    assert run(["mask-dump", "--m", "2", "--n", "2"]) == 0
    assert capsys.readouterr().out.split() == ["1100", "1100", "1110", "1111"]


def test_errors_become_one_line_and_an_exit_status(capsys):
    assert run(["mask-dump", "--m", "0", "--n", "2"]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error kind=ConfigurationError status=2 msg=")
    assert json.loads(err.split("msg=", 1)[1])


def test_bad_override_exit_status(capsys):
    assert run(["plan", "--width", "5", "--height", "5", "--set", "encoder.nope=1"]) == 2
    assert "kind=ConfigurationError" in capsys.readouterr().err


def test_error_line_quotes_the_message():
    line = error_line(CheckpointIntegrityError('bad "file"'))
    assert line == 'error kind=CheckpointIntegrityError status=4 msg="bad \\"file\\""'


def test_unexpected_errors_exit_with_one(capsys, mocker):
    mocker.patch.object(cli.plan_cmd.planner_service, "plan", side_effect=RuntimeError("surprise"))
    assert run(["plan", "--width", "5", "--height", "5", "--full-scale"]) == 1
    assert 'error kind=RuntimeError status=1 msg="surprise"' in capsys.readouterr().err


def test_missing_checkpoint(capsys, tmp_path):
    assert run(["eval", "--checkpoint", str(tmp_path / "none.ckpt")] + tiny_flags(tmp_path)) == 4


def test_gen_data_train_eval(capsys, tmp_path, mocker):
    out = tmp_path / "run"
    flags = tiny_flags(out)

    assert run(["gen-data"] + flags) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("samples=24 counts=")
    assert (out / "data" / "000023.pgm").is_file()

    data = ["--data", str(out / "data")]
    assert run(["train", "--stage", "1", "--until", "2"] + data + flags) == 0
    assert capsys.readouterr().out.startswith("stage=1 step=2 ")
    stage1 = str(out / "stage1.ckpt")
    assert run(["train", "--stage", "1", "--checkpoint", stage1, "--resume"] + data + flags) == 0
    assert capsys.readouterr().out.startswith("stage=1 step=3 ")
    assert run(["train", "--stage", "2", "--checkpoint", stage1] + data + flags) == 0
    assert capsys.readouterr().out.startswith("stage=2 step=3 ")

    assert run(["eval", "--checkpoint", str(out / "stage2.ckpt")] + data + flags) == 0
    summary = capsys.readouterr().out.strip()
    assert summary.startswith("count=6 ")
    assert "max_visual_tokens=52" in summary
    assert (out / "report.jsonl").is_file()

    echo = mocker.patch.object(
        experiment_service.pipeline_service.ModelRecognizer,
        "__call__",
        autospec=True,
        side_effect=lambda self, sample, generation: (list(sample.target), 52),
    )
    assert run(["eval", "--checkpoint", str(out / "stage2.ckpt")] + data + flags) == 0
    assert "mean_ed=0.000000 exact_match=1.000000" in capsys.readouterr().out
    assert echo.call_count == 6


def test_repeated_runs_are_byte_identical(capsys, tmp_path):
    artifacts = []
    for name in ("a", "b"):
        out = tmp_path / name
        flags = tiny_flags(out)
        assert run(["gen-data"] + flags) == 0
        data = ["--data", str(out / "data")]
        assert run(["train", "--stage", "1", "--until", "2"] + data + flags) == 0
        assert run(["eval", "--checkpoint", str(out / "stage1.ckpt")] + data + flags) == 0
        artifacts.append(((out / "stage1.ckpt").read_bytes(), (out / "report.jsonl").read_text()))
    capsys.readouterr()
    assert artifacts[0][0] == artifacts[1][0]
    assert artifacts[0][1] == artifacts[1][1]


def test_resume_needs_a_matching_stage(capsys, tmp_path):
    out = tmp_path / "run"
    flags = tiny_flags(out)
    assert run(["train", "--stage", "1", "--until", "1"] + flags) == 0
    assert run(["train", "--stage", "2", "--checkpoint", str(out / "stage1.ckpt"), "--resume"] + flags) == 2


def test_grad_check_reports_each_group(capsys, tmp_path, mocker):
    mocker.patch.object(
        experiment_service, "grad_check_suite", return_value={"tokenizer": 1e-9, "encoder": 2e-8, "decoder": 3e-7}
    )
    assert run(["grad-check"] + tiny_flags(tmp_path)) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "group=tokenizer max_rel_error=1.000e-09"
    assert out[-1] == "max_rel_error=3.000e-07"


def test_grad_check_failure_exit_status(capsys, tmp_path, mocker):
    mocker.patch.object(experiment_service, "grad_check_suite", return_value={"encoder": 0.5})
    assert run(["grad-check"] + tiny_flags(tmp_path)) == 3
    assert "kind=NumericsError" in capsys.readouterr().err
