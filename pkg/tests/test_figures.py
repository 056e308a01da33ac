from callcheck import analytics, figures
from callcheck.simgen import generate_dataset

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_stats_figures_written(tmp_path):
    records = [s.record for s in generate_dataset(n=40, complexity_range=(0.5, 2.8), seed=17)]
    summary = analytics.summarize_sessions(records, trials=100, seed=0)
    paths = figures.render_stats_figures(records, summary, tmp_path / "figs")
    assert [p.name for p in paths] == [
        "complexity_vs_score.png",
        "complexity_vs_disputes.png",
        "complexity_histogram.png",
    ]
    for path in paths:
        data = path.read_bytes()
        assert data.startswith(PNG_MAGIC)
        assert len(data) > 1000


def test_figures_handle_undefined_correlations(tmp_path):
    records = [analytics.SessionRecord("only", 1.2, 0.5, False, 12)]
    summary = analytics.summarize_sessions(records)
    paths = figures.render_stats_figures(records, summary, tmp_path)
    assert all(p.exists() for p in paths)


def test_cli_stats_figures_flag(tmp_path, capsys):
    from callcheck.cli import main

    out = tmp_path / "sim"
    assert main(["simulate", "--n", "30", "--seed", "3", "--out-dir", str(out)]) == 0
    figs = tmp_path / "figs"
    code = main(
        [
            "stats",
            "--dataset", str(out / "dataset.csv"),
            "--format", "json",
            "--out", str(tmp_path / "summary.json"),
            "--figures", str(figs),
        ]
    )
    assert code == 0
    assert (figs / "complexity_vs_score.png").read_bytes().startswith(PNG_MAGIC)
    assert "figure:" in capsys.readouterr().out
