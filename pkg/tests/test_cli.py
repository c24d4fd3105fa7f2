import numpy as np
import pytest

from amem import io
from amem.cli import (EXIT_DATA, EXIT_NONCONV, EXIT_OK, EXIT_USAGE, UsageError, build_config, build_parser, main,
                      read_config_file)

RING = ["--dataset", "ring:3", "--dims", "16", "--lr", "1e-2", "--plateau", "100", "--max-epochs", "20000"]


@pytest.fixture(scope="module")
def ring_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ring")
    assert main(["train", *RING, "--out", str(out)]) == EXIT_OK
    return out


def _cfg(argv):
    return build_config(build_parser().parse_args(argv))


# --- config assembly ---


def test_defaults_file_then_flags(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nlr = 0.5\nnonlin = swish\nunit_norm = yes\n")
    cfg = _cfg(["train", "--config", str(f)])
    assert cfg.lr == 0.5 and cfg.nonlin == "swish" and cfg.unit_norm is True
    assert cfg.optimizer == "adam"  # untouched default
    cfg = _cfg(["train", "--config", str(f), "--lr", "0.25"])
    assert cfg.lr == 0.25 and cfg.nonlin == "swish"


def test_config_file_errors(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("learning_rate = 1\n")
    with pytest.raises(UsageError, match="unknown key"):
        read_config_file(f)
    f.write_text("lr 1\n")
    with pytest.raises(UsageError, match="key=value"):
        read_config_file(f)
    f.write_text("max_epochs = lots\n")
    with pytest.raises(UsageError, match="bad value"):
        read_config_file(f)
    assert main(["train", "--config", str(f)]) == EXIT_USAGE


def test_unknown_flag_is_a_usage_exit():
    with pytest.raises(SystemExit) as e:
        main(["train", "--learning-rate", "1"])
    assert e.value.code == 2


# --- subcommands ---


def test_train_outputs(ring_run):
    assert io.load_net(ring_run / "net.amem").dims == [2, 16, 2]
    summary = (ring_run / "summary.csv").read_text().splitlines()
    assert summary[0] == "final_loss,epochs,converged"
    assert float(summary[1].split(",")[0]) <= 1e-8


def test_train_is_byte_deterministic(ring_run, tmp_path):
    assert main(["train", *RING, "--out", str(tmp_path)]) == EXIT_OK
    for name in ("net.amem", "train.csv", "summary.csv"):
        assert (tmp_path / name).read_bytes() == (ring_run / name).read_bytes(), name


def test_train_nonconvergence_exit(tmp_path):
    assert main(["train", "--dataset", "ring:3", "--dims", "4", "--max-epochs", "5", "--out", str(tmp_path)]) \
        == EXIT_NONCONV
    assert (tmp_path / "net.amem").exists()


def test_verify(ring_run, tmp_path):
    assert main(["verify", "--checkpoint", str(ring_run / "net.amem"), "--dataset", "ring:3",
                 "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "verify.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[0].startswith("index,length,verdict")


def test_basin_outputs_are_deterministic(ring_run, tmp_path):
    argv = ["basin", "--checkpoint", str(ring_run / "net.amem"), "--dataset", "ring:3", "--resolution", "20",
            "--field-resolution", "4"]
    assert main([*argv, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*argv, "--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("basin.ppm", "basin.csv", "field.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    assert (tmp_path / "a" / "basin.ppm").read_bytes().startswith(b"P6\n20 20\n255\n")


def test_iterate_from_file_and_example(ring_run, tmp_path):
    ck = str(ring_run / "net.amem")
    start = tmp_path / "x.txt"
    np.savetxt(start, [0.8, 0.01])
    assert main(["iterate", "--checkpoint", ck, "--dataset", "ring:3", "--input", str(start),
                 "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "iterate.csv").read_text().startswith("outcome,index,iters")
    assert main(["iterate", "--checkpoint", ck, "--dataset", "ring:3", "--index", "7"]) == EXIT_USAGE
    np.savetxt(start, [1.0, 2.0, 3.0])
    assert main(["iterate", "--checkpoint", ck, "--dataset", "ring:3", "--input", str(start)]) == EXIT_DATA


def test_iterate_max_iter_exit(tmp_path):
    net_dir = tmp_path / "id"
    net_dir.mkdir()
    from amem.net import Net, Nonlin

    theta = 1.0  # irrational rotation: never settles
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    io.save_net(Net([2, 2], [rot], Nonlin("identity")), net_dir / "rot.amem")
    x = tmp_path / "x.txt"
    np.savetxt(x, [0.3, 0.0])
    assert main(["iterate", "--checkpoint", str(net_dir / "rot.amem"), "--dataset", "ring:3", "--input", str(x),
                 "--max-iter", "50", "--out", str(tmp_path)]) == EXIT_NONCONV


def test_recover_and_spurious(ring_run, tmp_path):
    ck = str(ring_run / "net.amem")
    assert main(["recover", "--checkpoint", ck, "--dataset", "ring:3", "--corruptions", "none,gaussian:0.01",
                 "--trials", "2", "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "recover.csv").read_text().splitlines()) == 3
    assert main(["spurious", "--checkpoint", ck, "--dataset", "ring:3", "--pool", "uniform:10,gaussian:10",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "spurious.csv").read_text().startswith("hits,norm,")
    assert main(["spurious", "--checkpoint", ck, "--dataset", "ring:3", "--pool", "laplace:5"]) == EXIT_USAGE


def test_theory_values_and_no_root(tmp_path):
    assert main(["theory", "--nonlin", "exp2", "--k", "1", "--out", str(tmp_path)]) == EXIT_OK
    row = (tmp_path / "theory.csv").read_text().splitlines()[1].split(",")
    assert float(row[6]) == pytest.approx(0.60108393659852146961, abs=1e-9)
    assert main(["theory", "--nonlin", "sigmoid", "--k", "1", "--u0", "-1", "--out", str(tmp_path)]) \
        == EXIT_NONCONV


def test_theory_train_check(tmp_path):
    assert main(["theory", "--nonlin", "sigmoid", "--k", "2", "--train-check", "--lr", "0.05",
                 "--out", str(tmp_path)]) == EXIT_OK
    row = (tmp_path / "theory.csv").read_text().splitlines()[1].split(",")
    assert float(row[7]) == pytest.approx(float(row[6]), abs=1e-2)


def test_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("AMEM_THREADS", "1")
    assert main(["sweep", *RING[:2], "--depths", "2", "--sweep-widths", "8", "--lr", "1e-2", "--plateau", "100",
                 "--max-epochs", "20000", "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("depth,width,objective") and len(rows) == 2


def test_data_and_usage_errors(ring_run, tmp_path):
    ck = str(ring_run / "net.amem")
    assert main(["verify", "--checkpoint", str(tmp_path / "missing"), "--dataset", "ring:3"]) == EXIT_DATA
    assert main(["verify", "--checkpoint", ck, "--dataset", "unit:2:5"]) == EXIT_DATA
    assert main(["verify", "--dataset", "ring:3"]) == EXIT_USAGE
    assert main(["verify", "--checkpoint", ck, "--dataset", "ring:3", "--objective", "wat"]) == EXIT_USAGE
    assert main(["train", "--dataset", "spiral:3", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["train", "--dataset", "mnist:5", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["train", "--dataset", "ring:3", "--init", "fan_in:x", "--out", str(tmp_path)]) == EXIT_USAGE
    bad = tmp_path / "bad.amem"
    bad.write_bytes(b"nope")
    assert main(["verify", "--checkpoint", str(bad), "--dataset", "ring:3"]) == EXIT_DATA


def test_mnist_training(mnist_paths, tmp_path):
    images, labels = mnist_paths
    assert main(["train", "--dataset", "mnist:2", "--images", str(images), "--labels", str(labels),
                 "--dims", "16", "--lr", "1e-2", "--plateau", "100", "--max-epochs", "20000",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert main(["iterate", "--checkpoint", str(tmp_path / "net.amem"), "--dataset", "mnist:2",
                 "--images", str(images), "--labels", str(labels), "--corruption", "uniform_pixels:0.1",
                 "--out", str(tmp_path)]) in (EXIT_OK, EXIT_NONCONV)
    assert (tmp_path / "start.pgm").read_bytes().startswith(b"P5\n28 28\n255\n")
