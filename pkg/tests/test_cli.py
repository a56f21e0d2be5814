import pytest

from gomoku_agent.cli import main
from gomoku_agent.persistence import load_checkpoint


def _selfplay_args(tmp_path, games=2, seed=1, extra=()):
    return [
        "selfplay", "--games", str(games), "--seed", str(seed),
        "--size", "9", "--workers", "1",
        "--store", str(tmp_path / "t.log"),
        "--checkpoint", str(tmp_path / "c.bin"),
        *extra,
    ]


class TestSelfplayCommand:
    def test_smoke(self, tmp_path, capsys):
        code = main(_selfplay_args(tmp_path))
        assert code == 0
        assert (tmp_path / "t.log").stat().st_size > 0
        assert (tmp_path / "c.bin").exists()
        out = capsys.readouterr().out
        assert "games 2" in out
        assert "transitions" in out

    def test_negative_games_usage_error(self, tmp_path, capsys):
        code = main(_selfplay_args(tmp_path, games=-1))
        assert code == 1
        err = capsys.readouterr().err
        assert "--games" in err

    def test_identical_invocations_byte_identical_stores(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir()
        b.mkdir()
        assert main(_selfplay_args(a, games=3, seed=7)) == 0
        assert main(_selfplay_args(b, games=3, seed=7)) == 0
        assert (a / "t.log").read_bytes() == (b / "t.log").read_bytes()
        assert (a / "c.bin").read_bytes() == (b / "c.bin").read_bytes()

    def test_resume_via_cli(self, tmp_path):
        full, part = tmp_path / "full", tmp_path / "part"
        full.mkdir()
        part.mkdir()
        assert main(_selfplay_args(full, games=4, seed=3)) == 0
        assert main(_selfplay_args(part, games=2, seed=3)) == 0
        assert main(_selfplay_args(part, games=4, seed=3)) == 0
        assert (full / "t.log").read_bytes() == (part / "t.log").read_bytes()


class TestEvalCommand:
    def test_eval_untrained(self, tmp_path, capsys):
        code = main(["eval", "--games", "2", "--seed", "0", "--size", "9",
                     "--workers", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "mean_survival_steps" in out
        steps_line = [l for l in out.splitlines() if l.startswith("survival_steps")][0]
        assert len(steps_line.split()) == 3  # two per-game values

    def test_eval_with_checkpoint(self, tmp_path, capsys):
        main(_selfplay_args(tmp_path, games=1))
        code = main(["eval", "--games", "1", "--seed", "0", "--size", "9",
                     "--workers", "1", "--checkpoint", str(tmp_path / "c.bin")])
        assert code == 0
        assert "mean_survival_steps" in capsys.readouterr().out


class TestReplayCommand:
    def test_prints_frames(self, tmp_path, capsys):
        main(_selfplay_args(tmp_path, games=1))
        code = main(["replay", "--game", "1", "--store", str(tmp_path / "t.log")])
        assert code == 0
        out = capsys.readouterr().out
        assert "move 0: black" in out
        assert "X" in out and "O" in out  # rendered stones

    def test_unknown_game_runtime_error(self, tmp_path, capsys):
        main(_selfplay_args(tmp_path, games=1))
        code = main(["replay", "--game", "9", "--store", str(tmp_path / "t.log")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_missing_game_flag_usage_error(self, tmp_path, capsys):
        code = main(["replay", "--store", str(tmp_path / "t.log")])
        assert code == 1


class TestTrainCommand:
    def test_offline_retraining(self, tmp_path, capsys):
        main(_selfplay_args(tmp_path, games=3))
        before = load_checkpoint(tmp_path / "c.bin")
        code = main(["train", "--steps", "5", "--seed", "0",
                     "--store", str(tmp_path / "t.log"),
                     "--checkpoint", str(tmp_path / "c.bin")])
        assert code == 0
        out = capsys.readouterr().out
        assert "trained_steps 5" in out
        after = load_checkpoint(tmp_path / "c.bin")
        assert after.train_steps == before.train_steps + 5

    def test_empty_store_is_runtime_error(self, tmp_path):
        (tmp_path / "empty.log").write_text("")
        code = main(["train", "--store", str(tmp_path / "empty.log"),
                     "--checkpoint", str(tmp_path / "c.bin")])
        assert code == 2


class TestUsage:
    def test_no_command(self, capsys):
        assert main([]) == 1
        assert "selfplay" in capsys.readouterr().err

    def test_unknown_flag(self, tmp_path, capsys):
        code = main(["selfplay", "--nonsense", "1"])
        assert code == 1

    @pytest.mark.parametrize("cmd", ["selfplay", "eval", "serve", "replay", "train"])
    def test_help_lists_flags(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--" in out
        assert "default" in out.lower()


class TestConfigFile:
    def test_config_supplies_defaults_flags_win(self, tmp_path, capsys):
        config = tmp_path / "run.conf"
        config.write_text(
            f"games = 5\nseed = 9\nsize = 9\nworkers = 1\n"
            f"store = {tmp_path / 'conf.log'}\ncheckpoint = {tmp_path / 'conf.bin'}\n"
        )
        code = main(["selfplay", "--config", str(config), "--games", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "games 1" in out  # explicit flag beat the config's 5
        assert (tmp_path / "conf.log").exists()  # config supplied the path

    def test_unknown_config_key(self, tmp_path, capsys):
        config = tmp_path / "bad.conf"
        config.write_text("mystery = 4\n")
        assert main(["selfplay", "--config", str(config)]) == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["selfplay", "--config", str(tmp_path / "absent.conf")]) == 1
