import numpy as np
import pytest

from saetrade.ingest import align_features
from saetrade.synthetic import SyntheticSpec, make_synthetic
from saetrade.walkforward import FracDiffSettings

FAST_FD = FracDiffSettings(tau=1e-3)


@pytest.fixture
def synthetic_frame():
    def build(n_bars=900, seed=0, extra=None):
        bars, feats = make_synthetic(SyntheticSpec(n_bars=n_bars), seed)
        if extra:
            feats = {**feats, **extra(bars)}
        return bars, align_features(bars, feats)
    return build


@pytest.fixture
def write_run_config(tmp_path):
    """Synthetic data on disk plus a fast config file; returns the config path."""
    from saetrade.synthetic import write_synthetic

    def build(approach=4, seed=0, n_bars=1500, extra=""):
        data = tmp_path / f"data{seed}"
        paths = write_synthetic(data, SyntheticSpec(n_bars=n_bars), seed)
        feats = {k: v for k, v in paths.items() if k != "bars"}
        text = "\n".join([
            f"run.approach = {approach}",
            f"data.bars = [{paths['bars']!r}]".replace("'", '"'),
            "data.features = " + str(feats).replace("'", '"'),
            "data.include_close = false",
            "label.lam = 0.003",
            "label.n = 10",
            "fracdiff.tau = 0.001",
            "walkforward.period = 300",
            "sae.batch_size = 16",
            "sae.epochs = 20",
            "metrics.market = \"crypto\"",
            extra,
        ])
        cfg = tmp_path / f"run{approach}_{seed}.cfg"
        cfg.write_text(text + "\n")
        return cfg
    return build


def flat_close(n):
    return np.full(n, 100.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record and print a one-line verdict for an acceptance criterion."""
    def record(number, name, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
