import numpy as np
import pytest

from sparsemud import (
    BatchConfig,
    compare_asymptotic_empirical,
    run_batch,
    sweep_phase_diagram,
)
from sparsemud.experiments import (
    _as_grid,
    run_one,
    thread_count,
    write_compare_csv,
    write_sweep_csv,
)


def test_grid_parsing():
    assert _as_grid(1.5) == [1.5]
    assert _as_grid([1.0, 2.0]) == [1.0, 2.0]
    assert _as_grid((1.0, 2.0, 0.25)) == [1.0, 1.25, 1.5, 1.75, 2.0]
    # 0.05 steps must not accumulate float drift
    grid = _as_grid((1.0, 2.0, 0.05))
    assert len(grid) == 21
    assert grid[7] == 1.35


def test_thread_count_env_cap(monkeypatch):
    monkeypatch.setenv("SPARSEMUD_THREADS", "1")
    assert thread_count() == 1
    monkeypatch.setenv("SPARSEMUD_THREADS", "0")
    assert thread_count() == 1


def test_run_one_reproducible():
    a = run_one("regular", 500, 2.0, 3.0, 0.0, run_seed=9)
    b = run_one("regular", 500, 2.0, 3.0, 0.0, run_seed=9)
    assert np.array_equal(a.estimate.values, b.estimate.values)
    assert (a.x_D, a.x_C, a.ber) == (b.x_D, b.x_C, b.ber)
    with pytest.raises(ValueError):
        run_one("diagonal", 10, 1.0, 2.0, 0.0, run_seed=0)


def test_low_load_regular_is_trivial_phase():
    cfg = BatchConfig(ensemble="regular", K=1000, beta=1.0, C=3.0, samples=200)
    row = run_batch(cfg)[0]
    assert row.xd_med == 1.0
    assert row.xc_med == 1.0
    assert row.ber_med == 0.0


def test_high_load_regular_shows_all_regimes():
    cfg = BatchConfig(ensemble="regular", K=1000, beta=2.0, C=3.0, samples=100)
    row = run_batch(cfg)[0]
    assert row.xd_med < row.xc_med < 1.0
    assert row.ber_med > 0.0
    assert row.frac_guess == 1.0
    assert row.frac_contra > 0.9


def test_quartile_ordering_and_fractions():
    cfg = BatchConfig(ensemble="regular", K=500, beta=(1.4, 2.0, 0.2), C=3.0,
                      samples=11, base_seed=5)
    for row in run_batch(cfg):
        assert row.xd_q1 <= row.xd_med <= row.xd_q3
        assert row.xc_q1 <= row.xc_med <= row.xc_q3
        assert row.ber_q1 <= row.ber_med <= row.ber_q3
        assert 0.0 <= row.frac_guess <= 1.0
        assert 0.0 <= row.frac_contra <= 1.0
        assert row.samples == 11


def test_seed_contract_matches_run_one():
    # row seeds are base_seed XOR (point_index * samples + sample_index)
    base, samples = 40, 5
    cfg = BatchConfig(ensemble="regular", K=300, beta=[1.8, 2.0], C=3.0,
                      samples=samples, base_seed=base)
    rows = run_batch(cfg)
    for point, row in enumerate(rows):
        xs = sorted(run_one("regular", 300, row.beta, 3.0, 0.0,
                            base ^ (point * samples + i)).x_D
                    for i in range(samples))
        assert row.xd_med == xs[samples // 2]


def test_batch_cost_guard():
    cfg = BatchConfig(ensemble="regular", K=10_000, beta=2.0, C=3.0,
                      samples=100, max_cost=1e5)
    with pytest.raises(ValueError):
        run_batch(cfg)


def test_erasure_plumbing():
    cfg = BatchConfig(ensemble="regular", K=500, beta=1.0, C=3.0,
                      erasure=0.3, samples=15)
    row = run_batch(cfg)[0]
    assert row.xd_med < 1.0  # some users always lose all chips
    assert row.ber_med > 0.0


def test_sweep_onsets():
    cfg = BatchConfig(ensemble="regular", K=1000, beta=(1.4, 1.9, 0.1), C=3.0,
                      samples=9, base_seed=3)
    res = sweep_phase_diagram(cfg)
    assert len(res.rows) == 6
    assert 3.0 in res.onset_xd
    assert res.onset_xd[3.0] <= res.onset_xc[3.0]
    assert abs(res.onset_ber[3.0] - res.onset_xc[3.0]) <= 0.1 + 1e-9


def test_sweep_csv_round_trip(tmp_path):
    cfg = BatchConfig(ensemble="regular", K=300, beta=[1.5, 2.0], C=3.0,
                      samples=5, base_seed=7)
    res = sweep_phase_diagram(cfg)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(res.rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ("C,beta,K,samples,xd_med,xd_q1,xd_q3,"
                        "xc_med,xc_q1,xc_q3,ber_med,ber_q1,ber_q3,"
                        "frac_guess,frac_contra")
    assert len(lines) == 3
    assert lines[1].startswith("3,1.5,300,5,")


def test_batch_reproducible_byte_identical(tmp_path):
    cfg = BatchConfig(ensemble="regular", K=400, beta=(1.5, 2.0, 0.25), C=3.0,
                      samples=7, base_seed=11)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_sweep_csv(run_batch(cfg), a)
    write_sweep_csv(run_batch(cfg), b)
    assert a.read_bytes() == b.read_bytes()


def test_compare_report(tmp_path):
    # K=2000 medians sit ~0.03 below the asymptote, hence the loose bound
    rep = compare_asymptotic_empirical(3.0, [1.5, 2.0], K=2000, samples=9,
                                       base_seed=3, dx=1e-3, gap_bound=0.05)
    assert rep.passed
    assert rep.rows[0].ode_xd == 1.0 and rep.rows[0].xd_med == 1.0
    assert rep.rows[1].ode_xd < 1.0
    assert rep.rows[1].gap == pytest.approx(
        abs(rep.rows[1].ode_xd - rep.rows[1].xd_med))
    path = tmp_path / "cmp.csv"
    write_compare_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "C,beta,K,samples,ode_xd,xd_med,xd_q1,xd_q3,gap"
    assert len(lines) == 3


def test_compare_rejects_fractional_c():
    with pytest.raises(ValueError):
        compare_asymptotic_empirical(2.5, [1.5], K=100, samples=3)
