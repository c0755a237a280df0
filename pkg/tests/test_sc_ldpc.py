import numpy as np
import pytest

from unicodec.core import ConstructionError, DomainError, bpsk_awgn_llr, ebn0_to_sigma
from unicodec.ldpc.decode import BpConfig, decode_bp
from unicodec.ldpc.matrix import syndrome
from unicodec.sc_ldpc import (WindowConfig, build_coupled_chain, chain_from_dict, chain_to_dict,
                              decode_windowed, default_spreading, load_chain, regular_base,
                              save_chain)


@pytest.fixture(scope="module")
def small():
    return build_coupled_chain(regular_base(4, 8), w=3, L_chain=10, Z=40, seed=1)


def positions(chain):
    H = chain.H
    return H.edge_row // (chain.mb * chain.Z), H.edge_col // (chain.n_position)


def noisy(chain, frames, ebn0_db, seed):
    rng = np.random.default_rng(seed)
    cw = np.zeros((frames, chain.H.N), np.uint8)
    return bpsk_awgn_llr(cw, ebn0_to_sigma(ebn0_db, 0.5), rng)


def test_default_spreading_is_balanced():
    sp = default_spreading(regular_base(4, 8), 3)
    assert np.array_equal(sp.sum(0), regular_base(4, 8))
    assert np.all(sp.sum(axis=1).T == [2, 1, 1])   # per column
    assert np.all(sp.sum(axis=2).T == [4, 2, 2])   # per row


def test_band_diagonal(small):
    s, t = positions(small)
    assert np.all((s - t >= 0) & (s - t <= small.w - 1))


def test_degrees(small):
    H = small.H
    assert np.all(H.vn_degrees == 4)
    s = np.arange(H.M) // (small.mb * small.Z)
    interior = (s >= small.w - 1) & (s <= small.L - 1)
    assert np.all(H.cn_degrees[interior] == 8)
    assert np.all(H.cn_degrees[~interior] < 8)
    assert H.shape == ((10 + 2) * 4 * 40, 10 * 8 * 40)


def test_rate_loss_shrinks_with_length():
    rates = [build_coupled_chain(w=3, L_chain=L, Z=8).rate for L in (4, 10, 40, 160)]
    assert all(r < 0.5 for r in rates)
    assert np.all(np.diff(rates) > 0)
    assert rates[-1] == pytest.approx(1 - 162 * 4 / (160 * 8))
    assert 0.5 - rates[-1] < 0.01


def test_fig_scale_chain():
    chain = build_coupled_chain(w=3, L_chain=10, Z=800, seed=0)
    assert chain.n_position == 6400 and chain.H.N == 64000
    assert chain.rate == pytest.approx(0.4)
    assert chain.design_rate == 0.5


def test_w1_is_block_diagonal():
    chain = build_coupled_chain(w=1, L_chain=4, Z=10, seed=3)
    s, t = positions(chain)
    assert np.array_equal(s, t)
    assert np.all(chain.H.cn_degrees == 8) and np.all(chain.H.vn_degrees == 4)


def test_construction_errors():
    with pytest.raises(ConstructionError):
        build_coupled_chain(np.array([[2, 1]]), w=1, L_chain=4, Z=4)
    with pytest.raises(ConstructionError):
        build_coupled_chain(w=3, L_chain=2, Z=4)
    with pytest.raises(ConstructionError):
        build_coupled_chain(w=0, L_chain=4, Z=4)
    with pytest.raises(ConstructionError):
        build_coupled_chain(w=2, L_chain=4, Z=4, spreading=np.zeros((2, 4, 8)))


def test_seeded_and_serializable(small, tmp_path):
    again = build_coupled_chain(regular_base(4, 8), w=3, L_chain=10, Z=40, seed=1)
    assert again.H == small.H
    assert build_coupled_chain(regular_base(4, 8), w=3, L_chain=10, Z=40, seed=2).H != small.H
    save_chain(small, tmp_path / "c.json")
    assert load_chain(tmp_path / "c.json").H == small.H
    d = chain_to_dict(small)
    d["extra"] = 1
    with pytest.raises(DomainError):
        chain_from_dict(d)


@pytest.mark.parametrize("schedule", ["layered", "flooding"])
@pytest.mark.parametrize("D", [1, 3, 10])
def test_noiseless_decodes(small, schedule, D):
    # the second frame carries no information; ties decide zero
    llr = np.stack([np.full(small.H.N, 8.0), np.zeros(small.H.N)])
    out = decode_windowed(small, llr, WindowConfig(window_size=D, schedule=schedule))
    assert not out.codeword.any()


def test_noiseless_nonzero_codeword():
    chain = build_coupled_chain(w=3, L_chain=5, Z=6, seed=4)
    from unicodec.ldpc.matrix import GenericEncoder
    enc = GenericEncoder(chain.H)
    cw = enc.encode(np.random.default_rng(0).integers(0, 2, (4, enc.k), dtype=np.uint8))
    assert not syndrome(chain.H, cw).any() and cw.any()
    out = decode_windowed(chain, 8.0 * (1 - 2.0 * cw), WindowConfig(window_size=3))
    assert np.array_equal(out.codeword, cw)


@pytest.mark.parametrize("schedule", ["layered", "flooding"])
def test_commits_are_final_and_causal(small, schedule):
    llr = noisy(small, 20, 1.2, 5)
    wcfg = WindowConfig(window_size=3, schedule=schedule)
    seen = {}
    out = decode_windowed(small, llr, wcfg, on_commit=lambda t, b: seen.setdefault(t, b))
    assert sorted(seen) == list(range(small.L))
    npos = small.n_position
    for t, bits in seen.items():
        assert np.array_equal(out.codeword[:, t * npos:(t + 1) * npos], bits)
    # LLRs beyond the last window that saw position t cannot influence it
    D, t = 3, 2
    pert = llr.copy()
    pert[:, (t + D) * npos:] = np.random.default_rng(6).normal(0, 5, pert[:, (t + D) * npos:].shape)
    out2 = decode_windowed(small, pert, wcfg)
    assert np.array_equal(out2.codeword[:, :(t + 1) * npos], out.codeword[:, :(t + 1) * npos])
    assert not np.array_equal(out2.codeword, out.codeword)


def test_full_window_matches_flooding_bp(small):
    llr = noisy(small, 40, 1.0, 7)
    K = 6
    win = decode_windowed(small, llr, WindowConfig(window_size=small.L, iterations_per_step=K,
                                                   schedule="flooding", warmup=False))
    bp = decode_bp(small.H, llr, BpConfig(schedule="flooding", max_iterations=K, early_stop=False))
    npos = small.n_position
    # the first commit happens after exactly K full-chain flooding iterations
    assert np.array_equal(win.codeword[:, :npos], (bp.posterior[:, :npos] < 0).astype(np.uint8))


def test_full_window_fer_close_to_flooding(small):
    llr = noisy(small, 100, 1.3, 8)
    K = 30
    win = decode_windowed(small, llr, WindowConfig(window_size=small.L, iterations_per_step=K,
                                                   schedule="flooding", warmup=False))
    bp = decode_bp(small.H, llr, BpConfig(schedule="flooding", max_iterations=K))
    fe_w = win.codeword.any(1).sum()
    fe_b = bp.codeword.any(1).sum()
    assert abs(fe_w - fe_b) <= 2 * np.sqrt(max(fe_w, fe_b, 1)) + 2


def test_fer_non_increasing_in_window_size(small):
    for snr in (1.4, 1.6, 1.8):
        llr = noisy(small, 150, snr, 9)
        fer = [decode_windowed(small, llr, WindowConfig(window_size=D)).codeword.any(1).mean()
               for D in (3, 5, 8)]
        tol = 2 * np.sqrt(max(fer) * (1 - max(fer)) / 150) + 1e-9
        assert fer[1] <= fer[0] + tol and fer[2] <= fer[1] + tol


def test_window_errors(small):
    with pytest.raises(DomainError):
        decode_windowed(small, np.zeros(small.H.N), WindowConfig(window_size=11))
    with pytest.raises(DomainError):
        decode_windowed(small, np.zeros(10))
    for bad in (dict(window_size=0), dict(iterations_per_step=0), dict(kernel="x"),
                dict(schedule="x")):
        with pytest.raises(DomainError):
            WindowConfig(**bad)
