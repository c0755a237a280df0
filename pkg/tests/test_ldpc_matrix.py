import numpy as np
import pytest
from hypothesis import given, strategies as st

from unicodec.core import ConstructionError, DomainError
from unicodec.ldpc.matrix import (AlistParseError, GenericEncoder, ParityCheckMatrix,
                                  dvbs2_code, dvbs2_matrix, expand_base_graph, gf2_rank,
                                  is_staircase, load_alist, load_base_graph, make_encoder,
                                  nr5g_bg2_code, nr_bg2_shifts, parse_alist, parse_base_graph,
                                  recover_base_graph, syndrome, tanner_graph, write_alist,
                                  write_base_graph)

HAMMING_ALIST = """7 3
3 4
1 1 1 2 2 2 3
4 4 4
1 0 0
2 0 0
3 0 0
1 2 0
1 3 0
2 3 0
1 2 3
1 4 5 7
2 4 6 7
3 5 6 7
"""

HAMMING = np.array([[1, 0, 0, 1, 1, 0, 1],
                    [0, 1, 0, 1, 0, 1, 1],
                    [0, 0, 1, 0, 1, 1, 1]], dtype=np.uint8)


@pytest.fixture(scope="module")
def dvb12():
    return dvbs2_code("1_2")


@pytest.fixture(scope="module")
def dvb89():
    return dvbs2_code("8_9")


def test_parse_hamming_alist():
    H = parse_alist(HAMMING_ALIST)
    assert H.shape == (3, 7) and H.n_edges == 12
    assert np.array_equal(H.to_dense(), HAMMING)
    assert H.vn_degrees.tolist() == [1, 1, 1, 2, 2, 2, 3]
    assert H.cn_degrees.tolist() == [4, 4, 4]


def test_alist_round_trip(tmp_path):
    H = parse_alist(HAMMING_ALIST)
    write_alist(H, tmp_path / "h.alist")
    assert load_alist(tmp_path / "h.alist") == H
    G = expand_base_graph(nr_bg2_shifts(22)[:4, :14], 22)
    write_alist(G, tmp_path / "g.alist")
    assert load_alist(tmp_path / "g.alist") == G


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("7 3\n3 4\n1 1 1 1 2 2\n", 3),
    ("7 3\n3 4\n1 1 1 2 2 2 3\n4 4 4\n1 0 0\nx 0 0\n", 6),
    (HAMMING_ALIST.replace("1 2 3\n1 4 5 7", "1 2 4\n1 4 5 7"), 11),
    (HAMMING_ALIST.replace("3 5 6 7", "3 5 6 6"), 14),
    (HAMMING_ALIST.rsplit("\n", 2)[0] + "\n", 14),
])
def test_alist_errors_report_line(text, line):
    with pytest.raises(AlistParseError) as e:
        parse_alist(text)
    assert e.value.line == line
    assert f"line {line}" in str(e.value)


def test_parity_check_matrix_validation():
    with pytest.raises(DomainError):
        ParityCheckMatrix([0, 0], [1, 1], (2, 2))
    with pytest.raises(DomainError):
        ParityCheckMatrix([0], [5], (2, 2))
    with pytest.raises(DomainError):
        ParityCheckMatrix([0], [0], (2, 2), layers=[[0]])


def test_expand_examples():
    H = expand_base_graph([[0, -1], [1, 2]], 3)
    ref = np.zeros((6, 6), dtype=np.uint8)
    I = np.eye(3, dtype=np.uint8)
    ref[:3, :3] = I
    ref[3:, :3] = np.roll(I, 1, axis=1)
    ref[3:, 3:] = np.roll(I, 2, axis=1)
    assert np.array_equal(H.to_dense(), ref)
    assert [l.tolist() for l in H.layers] == [[0, 1, 2], [3, 4, 5]]
    with pytest.raises(DomainError):
        expand_base_graph([[3]], 3)
    with pytest.raises(DomainError):
        expand_base_graph([[0]], 0)


@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_base_graph_recover_round_trip(Z, seed):
    rng = np.random.default_rng(seed)
    base = rng.integers(-1, Z, (3, 5))
    assert np.array_equal(recover_base_graph(expand_base_graph(base, Z), Z), base)


def test_recover_rejects_non_circulant():
    with pytest.raises(DomainError):
        recover_base_graph(ParityCheckMatrix.from_dense(np.ones((2, 2))), 2)


def test_base_graph_file_round_trip(tmp_path):
    base = nr_bg2_shifts(22)
    write_base_graph(base, 22, tmp_path / "b.txt")
    back, Z = load_base_graph(tmp_path / "b.txt")
    assert Z == 22 and np.array_equal(back, base)
    with pytest.raises(AlistParseError) as e:
        parse_base_graph("4\n1 2\n0 7\n")
    assert e.value.line == 3


def test_nr_bg2_structure():
    base = nr_bg2_shifts(22)
    assert base.shape == (42, 52)
    # identity extension below the 4-row core
    assert np.all(base[np.arange(4, 42), np.arange(14, 52)] == 0)
    assert np.all(base[:4, 14:] == -1)
    assert (base >= 0).sum() == 197
    assert np.all(base < 22)
    with pytest.raises(DomainError):
        nr_bg2_shifts(17)


def test_nr5g_code_dimensions():
    code = nr5g_bg2_code(128, 256)
    assert code.k == 128 and code.n == 256
    assert code.H.qc.Z == 22
    null_dim = code.H.N - gf2_rank(code.H.to_dense())
    assert null_dim >= code.k + code.known_zero.size
    assert np.intersect1d(code.tx_pos, np.arange(44)).size == 0
    assert np.intersect1d(code.tx_pos, code.known_zero).size == 0


def test_dvbs2_degree_profile(dvb12, dvb89):
    H = dvb12.H
    assert H.shape == (32400, 64800)
    dv = H.vn_degrees
    assert np.bincount(dv[:32400]).tolist() == [0, 0, 0, 19440, 0, 0, 0, 0, 12960]
    assert np.bincount(dv[32400:]).tolist() == [0, 1, 32399]
    assert np.bincount(H.cn_degrees).tolist()[6:] == [1, 32399]
    G = dvb89.H
    assert G.shape == (7200, 64800)
    assert np.bincount(G.vn_degrees[:57600]).tolist() == [0, 0, 0, 50400, 7200]
    assert np.bincount(G.cn_degrees).tolist()[26:] == [1, 7199]
    assert is_staircase(H) and is_staircase(G)


def test_dvbs2_layers_are_conflict_free(dvb12):
    H = dvb12.H
    for layer in H.layers:
        cols = H.edge_col[np.isin(H.edge_row, layer)]
        assert np.unique(cols).size == cols.size


def test_syndrome_matches_dense():
    rng = np.random.default_rng(0)
    Hd = (rng.random((20, 50)) < 0.2).astype(np.uint8)
    H = ParityCheckMatrix.from_dense(Hd)
    w = rng.integers(0, 2, (30, 50), dtype=np.uint8)
    assert np.array_equal(syndrome(H, w), (w.astype(int) @ Hd.T) % 2)
    assert np.array_equal(syndrome(H, w[0]), (Hd.astype(int) @ w[0]) % 2)
    with pytest.raises(DomainError):
        syndrome(H, np.zeros(49))


def test_tanner_graph_matches_alist():
    H = parse_alist(HAMMING_ALIST)
    g = tanner_graph(H)
    assert g.n_edges == 12
    assert g.vn_degrees.tolist() == [1, 1, 1, 2, 2, 2, 3]
    assert sorted(zip(g.edge_cn.tolist(), g.edge_vn.tolist())) == sorted(zip(*np.nonzero(HAMMING)))


@pytest.mark.parametrize("name", ["5g", "dvb12", "dvb89", "generic"])
def test_encoding_satisfies_checks(name, dvb12, dvb89):
    rng = np.random.default_rng(1)
    if name == "generic":
        Hd = (rng.random((30, 60)) < 0.1).astype(np.uint8)
        H = ParityCheckMatrix.from_dense(Hd)
        enc = make_encoder(H)
        assert isinstance(enc, GenericEncoder)
        assert enc.k == 60 - gf2_rank(Hd)
        cw = enc.encode(rng.integers(0, 2, (1000, enc.k), dtype=np.uint8))
        assert not syndrome(H, cw).any()
        return
    code = {"5g": lambda: nr5g_bg2_code(128, 256), "dvb12": lambda: dvb12,
            "dvb89": lambda: dvb89}[name]()
    frames = 1000 if name == "5g" else 100
    msg = rng.integers(0, 2, (frames, code.k), dtype=np.uint8)
    cw = code.full_codeword(msg)
    assert not syndrome(code.H, cw).any()
    assert np.array_equal(cw[:, code.message_pos], msg)
    assert not cw[:, code.known_zero].any()
    assert np.array_equal(code.encode(msg), cw[:, code.tx_pos])


def test_receive_places_llrs():
    code = nr5g_bg2_code(128, 256)
    full = code.receive(np.arange(1.0, 257.0))
    assert full.shape == (code.H.N,)
    assert np.array_equal(full[code.tx_pos], np.arange(1.0, 257.0))
    assert np.all(full[code.known_zero] > 1e20)
    assert np.all(full[:44] == 0)


def test_encoder_limits():
    with pytest.raises(ConstructionError):
        make_encoder(ParityCheckMatrix([0], [0], (1, 30000)))
    assert dvbs2_matrix("8_9").N == 64800
