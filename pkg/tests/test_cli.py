import numpy as np
import pytest

from biomatch.cli import cli_dispatch
from biomatch.learner import Linear, NeuralNetwork, save_model
from biomatch.utils.io import parse_record, write_probe


@pytest.fixture
def deployment(tmp_path):
    model = tmp_path / "model.bmnn"
    save_model(NeuralNetwork((Linear(np.eye(4), np.zeros(4)),), (4,)), model)
    config = tmp_path / "biomatch.conf"
    config.write_text(
        "\n".join(
            [
                "# deployment under test",
                f"model.path={model}",
                f"state.dir={tmp_path / 'state'}",
                "space.kind=euclidean",
                "space.dim=4",
                "threshold=0.5",
                "lambda=64",
                "capacity=10",
                "seed=5",
            ]
        )
        + "\n"
    )
    return tmp_path, str(config)


def probe(tmp_path, name, values):
    path = tmp_path / name
    write_probe(values, path)
    return str(path)


def run(capsys, *argv):
    code = cli_dispatch(list(argv))
    captured = capsys.readouterr()
    lines = [line for line in captured.out.splitlines() if line.strip()]
    return code, lines, captured.err


def test_verification_round(deployment, capsys):
    tmp_path, config = deployment
    near = probe(tmp_path, "near.txt", [1.0, 2.0, 3.0, 4.0])
    far = probe(tmp_path, "far.txt", [9.0, 9.0, 9.0, 9.0])

    code, lines, _ = run(capsys, "init", "--config", config)
    assert code == 0
    assert parse_record(lines[0])["status"] == "initialized"

    code, lines, _ = run(capsys, "enroll", "--input", near, "--config", config)
    assert code == 0
    enrolled = parse_record(lines[0])
    identifier = enrolled["id"]
    assert len(identifier) == 16
    assert enrolled["gallery_size"] == "1"

    code, lines, _ = run(capsys, "verify", "--id", identifier, "--input", near, "--config", config)
    assert code == 0
    assert parse_record(lines[0]) == {
        "decision": "accept",
        "id": identifier,
        "score": "0.0",
        "threshold": "0.5",
        "reason": "match",
    }

    code, lines, _ = run(capsys, "verify", "--id", identifier, "--input", far, "--config", config)
    assert code == 1
    assert parse_record(lines[0])["reason"] == "no_match"

    code, lines, _ = run(capsys, "verify", "--id", "ff" * 8, "--input", near, "--config", config)
    assert code == 1
    assert parse_record(lines[0])["reason"] == "unknown_id"
    assert parse_record(lines[0])["score"] == "none"

    code, lines, _ = run(capsys, "identify", "--input", near, "--config", config)
    assert code == 0
    assert parse_record(lines[0])["outcome"] == "identified"
    assert parse_record(lines[0])["id"] == identifier

    code, lines, _ = run(capsys, "identify", "--input", far, "--config", config)
    assert code == 1
    assert parse_record(lines[0])["outcome"] == "no_match"

    transcript = (tmp_path / "state" / "transcript.log").read_text().splitlines()
    assert [int(line.split(",")[0]) for line in transcript] == list(range(12))


def test_state_survives_between_invocations(deployment, capsys):
    tmp_path, config = deployment
    first = probe(tmp_path, "a.txt", [0.0, 0.0, 0.0, 0.0])
    second = probe(tmp_path, "b.txt", [5.0, 0.0, 0.0, 0.0])
    run(capsys, "init", "--config", config)
    _, lines, _ = run(capsys, "enroll", "--input", first, "--config", config)
    id_a = parse_record(lines[0])["id"]
    _, lines, _ = run(capsys, "enroll", "--input", second, "--config", config)
    id_b = parse_record(lines[0])["id"]
    assert id_a != id_b
    _, lines, _ = run(capsys, "identify", "--input", second, "--config", config)
    assert parse_record(lines[0])["id"] == id_b


def test_issued_ids_follow_the_seed(tmp_path, capsys):
    ids = []
    for name in ("one", "two"):
        root = tmp_path / name
        root.mkdir()
        model = root / "model.bmnn"
        save_model(NeuralNetwork((Linear(np.eye(2), np.zeros(2)),), (2,)), model)
        config = root / "biomatch.conf"
        config.write_text(f"model.path={model}\nstate.dir={root / 'state'}\nspace.dim=2\nseed=9\n")
        run(capsys, "init", "--config", str(config))
        _, lines, _ = run(capsys, "enroll", "--input", probe(root, "x.txt", [1.0, 2.0]), "--config", str(config))
        ids.append(parse_record(lines[0])["id"])
    assert ids[0] == ids[1]


def test_init_twice_needs_force(deployment, capsys):
    _, config = deployment
    assert run(capsys, "init", "--config", config)[0] == 0
    code, _, err = run(capsys, "init", "--config", config)
    assert code == 3
    assert "AlreadyInitialized" in err
    assert run(capsys, "init", "--force", "--config", config)[0] == 0


def test_enroll_before_init(deployment, capsys):
    tmp_path, config = deployment
    code, _, err = run(capsys, "enroll", "--input", probe(tmp_path, "x.txt", [1, 2, 3, 4]), "--config", config)
    assert code == 3
    assert "NotInitialized" in err


def test_probe_with_wrong_dimension(deployment, capsys):
    tmp_path, config = deployment
    run(capsys, "init", "--config", config)
    code, lines, _ = run(capsys, "enroll", "--input", probe(tmp_path, "x.txt", [1, 2, 3]), "--config", config)
    assert code == 3
    assert lines == []


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--input", "x.txt"],
        ["enroll"],
        ["no-such-command"],
        ["identify", "--input", "x.txt", "--bogus"],
        ["verify", "--id", "not-hex", "--input", "x.txt"],
    ],
)
def test_usage_errors(argv, capsys):
    code, lines, err = run(capsys, *argv)
    assert code == 2
    assert lines == []
    assert err


def test_config_from_environment(deployment, capsys, monkeypatch):
    tmp_path, config = deployment
    monkeypatch.setenv("BIOMATCH_CONFIG", config)
    assert run(capsys, "init")[0] == 0
    code, lines, _ = run(capsys, "enroll", "--input", probe(tmp_path, "x.txt", [1, 1, 1, 1]))
    assert code == 0
    assert (tmp_path / "state" / "gallery.bmdb").exists()


def test_unknown_config_key(tmp_path, capsys):
    config = tmp_path / "bad.conf"
    config.write_text("space.colour=blue\n")
    code, _, err = run(capsys, "init", "--config", str(config))
    assert code == 3
    assert "space.colour" in err


@pytest.fixture
def experiment_config(tmp_path):
    config = tmp_path / "experiment.conf"
    config.write_text(
        "\n".join(
            [
                "seed=2",
                "data.classes=4",
                "data.samples=4",
                "data.dim=6",
                "score.probes=2",
                "model.hidden=8",
                "train.epochs=10",
                f"output.dir={tmp_path / 'out'}",
            ]
        )
        + "\n"
    )
    return tmp_path, str(config)


def test_evaluate_and_report(experiment_config, capsys):
    tmp_path, config = experiment_config
    code, lines, _ = run(capsys, "evaluate", "--config", config)
    assert code == 0
    summary = parse_record(lines[0])
    assert 0.0 <= float(summary["eer"]) <= 1.0
    assert (tmp_path / "out" / "roc.csv").exists()

    code, lines, _ = run(capsys, "report", "--config", config)
    assert code == 0
    assert parse_record(lines[-1]) == {"consistent": "true", "mismatches": "0"}
    assert {"eer", "threshold", "config.data.classes"} <= {next(iter(parse_record(line))) for line in lines}

    report = tmp_path / "out" / "report.txt"
    report.write_text(report.read_text().replace("genuine_count: 8", "genuine_count: 9"))
    code, lines, _ = run(capsys, "report", str(report))
    assert code == 1
    assert parse_record(lines[-1])["consistent"] == "false"


def test_gen_data_then_train(experiment_config, capsys):
    tmp_path, config = experiment_config
    data = tmp_path / "data.csv"
    code, lines, _ = run(capsys, "gen-data", "--output", str(data), "--config", config)
    assert code == 0
    assert parse_record(lines[0])["samples"] == "16"

    model = tmp_path / "model.bmnn"
    code, lines, _ = run(
        capsys, "train", "--data", str(data), "--output", str(model), "--check-gradients", "--config", config
    )
    assert code == 0
    trained = parse_record(lines[0])
    assert float(trained["gradient_error"]) < 1e-4
    assert trained["embedding_dim"] == "4"
    assert model.exists()
