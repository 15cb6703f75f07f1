"""Command line apps: wiring, file outputs and exit codes."""

import struct
import subprocess
import sys

import numpy as np

from flexsolve import DivergenceError, GridDims, build_gradient, vectorize
import flexsolve.solver
from flexsolve.cli import main
from flexsolve.io import PgmImage, read_pgm, write_pgm

from conftest import noisy_blocks, ramp_frames, three_regions


def write_img(path, arr, maxval=255):
    write_pgm(PgmImage.from_array(arr, maxval), path)


def tv_energy(f, alpha):
    dims = GridDims(f.shape)
    g = build_gradient(dims).apply(vectorize(f, dims)).reshape(2, -1)
    return 0.5 * 0.0 + alpha * np.sqrt((g * g).sum(axis=0)).sum()


class TestRof:
    def test_denoises_and_reduces_energy(self, tmp_path, capsys):
        f = noisy_blocks(16)
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        write_img(src, f)
        code = main(["rof", str(src), str(dst), "--max-iters", "3000"])
        assert code == 0
        out = read_pgm(dst).as_array()
        fq = read_pgm(src).as_array()
        alpha = 0.08
        e_in = tv_energy(fq, alpha)
        e_out = 0.5 * ((out - fq) ** 2).sum() + tv_energy(out, alpha)
        assert e_out < e_in
        log = capsys.readouterr().out
        assert "iter " in log
        assert "scaled residual" in log

    def test_tiny_alpha_reproduces_input(self, tmp_path):
        f = noisy_blocks(12)
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        write_img(src, f)
        code = main(
            ["rof", str(src), str(dst), "--alpha", "1e-8", "--max-iters", "4000"]
        )
        assert code == 0
        out = read_pgm(dst).as_array()
        fq = read_pgm(src).as_array()
        assert np.max(np.abs(out - fq)) < 1.0 / 255.0

    def test_constant_input_round_trips_exactly(self, tmp_path):
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        write_img(src, np.full((10, 10), 0.5))
        code = main(["rof", str(src), str(dst), "--max-iters", "2000"])
        assert code == 0
        assert src.read_bytes() == dst.read_bytes()

    def test_preserves_input_maxval(self, tmp_path, rng):
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        write_img(src, rng.uniform(0.0, 1.0, size=(6, 6)), maxval=1023)
        assert main(["rof", str(src), str(dst), "--max-iters", "200"]) == 0
        assert read_pgm(dst).maxval == 1023

    def test_missing_input_gives_two(self, tmp_path):
        code = main(["rof", str(tmp_path / "absent.pgm"), str(tmp_path / "o.pgm")])
        assert code == 2

    def test_malformed_input_gives_two(self, tmp_path):
        src = tmp_path / "bad.pgm"
        src.write_bytes(b"P5\n2 2\n255\n\x00")
        assert main(["rof", str(src), str(tmp_path / "o.pgm")]) == 2

    def test_bad_stop_config_gives_two(self, tmp_path):
        src = tmp_path / "in.pgm"
        write_img(src, np.full((4, 4), 0.5))
        code = main(["rof", str(src), str(tmp_path / "o.pgm"), "--max-iters", "0"])
        assert code == 2

    def test_divergence_gives_three(self, tmp_path, monkeypatch):
        src = tmp_path / "in.pgm"
        write_img(src, np.full((4, 4), 0.5))

        def blow_up(problem, cfg=None, callback=None):
            raise DivergenceError(7)

        monkeypatch.setattr(flexsolve.solver, "run", blow_up)
        assert main(["rof", str(src), str(tmp_path / "o.pgm")]) == 3


class TestFlow:
    def test_identical_frames_give_zero_field(self, tmp_path):
        f = noisy_blocks(10)
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        dst = tmp_path / "out.flo"
        write_img(a, f)
        write_img(b, f)
        code = main(["flow", str(a), str(b), str(dst), "--max-iters", "500"])
        assert code == 0
        raw = dst.read_bytes()
        assert raw[:4] == b"PIEH"
        w, h = struct.unpack_from("<ii", raw, 4)
        assert (w, h) == (10, 10)
        vals = struct.unpack_from(f"<{2 * w * h}f", raw, 12)
        assert all(v == 0.0 for v in vals)

    def test_vertical_motion_lands_in_v_channel(self, tmp_path):
        f1, f2 = ramp_frames(12)
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        dst = tmp_path / "out.flo"
        write_img(a, f1, maxval=65535)
        write_img(b, f2, maxval=65535)
        code = main(
            ["flow", str(a), str(b), str(dst), "--max-iters", "6000", "--tol", "1e-7"]
        )
        assert code == 0
        raw = dst.read_bytes()
        w, h = struct.unpack_from("<ii", raw, 4)
        vals = np.array(struct.unpack_from(f"<{2 * w * h}f", raw, 12)).reshape(h, w, 2)
        u, v = vals[:, :, 0], vals[:, :, 1]
        # content moves down one row, so the vertical channel carries it
        assert np.abs(v.mean() - 1.0) < 0.45
        assert np.abs(u).mean() < 0.25
        assert np.abs(v).mean() > np.abs(u).mean()

    def test_csv_fallback(self, tmp_path):
        f = noisy_blocks(6)
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        dst = tmp_path / "out.csv"
        write_img(a, f)
        write_img(b, f)
        code = main(["flow", str(a), str(b), str(dst), "--csv", "--max-iters", "200"])
        assert code == 0
        lines = dst.read_text().splitlines()
        assert len(lines) == 36
        assert all(line == "0.0,0.0" for line in lines)

    def test_size_mismatch_gives_two(self, tmp_path):
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        write_img(a, np.zeros((4, 4)) + 0.5)
        write_img(b, np.zeros((5, 4)) + 0.5)
        assert main(["flow", str(a), str(b), str(tmp_path / "o.flo")]) == 2


class TestSegment:
    def test_writes_masks_and_label_map(self, tmp_path):
        # width-4 bands at 12x12 tie the merge-vs-keep energies exactly, so
        # use a size where the true labeling wins with a clear margin
        f, labels, truth = three_regions(16)
        src = tmp_path / "in.pgm"
        write_img(src, f)
        prefix = tmp_path / "seg"
        code = main(
            [
                "segment",
                str(src),
                "3",
                str(prefix),
                "--labels",
                "0,0.5,1",
                "--max-iters",
                "2000",
            ]
        )
        assert code == 0
        masks = [read_pgm(f"{prefix}_mask{i}.pgm").as_array() for i in range(3)]
        level = read_pgm(f"{prefix}_labels.pgm").as_array()
        assert level.shape == (16, 16)
        argmax = np.argmax(np.stack(masks), axis=0)
        assert (argmax == truth).mean() > 0.9

    def test_label_count_mismatch_gives_two(self, tmp_path):
        src = tmp_path / "in.pgm"
        write_img(src, np.full((6, 6), 0.5))
        code = main(["segment", str(src), "3", str(tmp_path / "s"), "--labels", "0,1"])
        assert code == 2

    def test_random_labels_need_seed(self, tmp_path):
        src = tmp_path / "in.pgm"
        write_img(src, np.full((6, 6), 0.5))
        assert main(["segment", str(src), "2", str(tmp_path / "s")]) == 2

    def test_seeded_runs_are_reproducible(self, tmp_path, capsys):
        f = noisy_blocks(8)
        src = tmp_path / "in.pgm"
        write_img(src, f)
        outputs = []
        logs = []
        for tag in ("x", "y"):
            prefix = tmp_path / f"seg_{tag}"
            code = main(
                [
                    "segment",
                    str(src),
                    "2",
                    str(prefix),
                    "--seed",
                    "42",
                    "--max-iters",
                    "300",
                ]
            )
            assert code == 0
            logs.append(capsys.readouterr().out)
            outputs.append(
                tuple(
                    open(f"{prefix}_mask{i}.pgm", "rb").read() for i in range(2)
                )
                + (open(f"{prefix}_labels.pgm", "rb").read(),)
            )
        assert outputs[0] == outputs[1]
        assert logs[0] == logs[1]

    def test_nonpositive_label_count_gives_two(self, tmp_path):
        src = tmp_path / "in.pgm"
        write_img(src, np.full((4, 4), 0.5))
        assert main(["segment", str(src), "0", str(tmp_path / "s"), "--seed", "1"]) == 2


class TestParser:
    def test_no_arguments_is_usage_error(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_unknown_command_is_usage_error(self, capsys):
        assert main(["sharpen", "a", "b"]) == 2
        capsys.readouterr()

    def test_shared_flags_parse(self, tmp_path):
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        write_img(src, np.full((4, 4), 0.5))
        code = main(
            [
                "rof",
                str(src),
                str(dst),
                "--max-iters",
                "50",
                "--check-every",
                "10",
                "--tol",
                "0",
            ]
        )
        assert code == 0

    def test_module_entry_point(self, tmp_path):
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        write_img(src, np.full((5, 5), 0.5))
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "flexsolve.cli",
                "rof",
                str(src),
                str(dst),
                "--max-iters",
                "200",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert dst.exists()
