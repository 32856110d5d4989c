import random
import string
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofqr.errors import NonAsciiByte, PayloadTooLong, StructureInvalid, FormatInfoInvalid
from ofqr.qr import decode, encode, encode_symbol, penalty_score
from ofqr.qr import symbol
from ofqr.qr.codec import build_symbol, data_codewords, read_codewords
from ofqr.qr.rs import rs_encode

FIXTURE = Path(__file__).parent / "fixtures" / "qr_0123456789.txt"
PRINTABLE = "".join(chr(c) for c in range(0x20, 0x7F))


def golden_grid():
    rows = [ln for ln in FIXTURE.read_text().splitlines() if not ln.startswith("#")]
    return np.array([[ch == "1" for ch in row] for row in rows])


def random_payload(r, lo=1, hi=14):
    return "".join(r.choice(PRINTABLE) for _ in range(r.randint(lo, hi)))


def test_golden_grid():
    assert np.array_equal(encode("0123456789"), golden_grid())


def test_quiet_zone_light():
    g = encode("0123456789")
    assert g.shape == (29, 29)
    inner = np.zeros_like(g)
    inner[4:-4, 4:-4] = True
    assert not g[~inner].any()


def test_structural_invariants():
    core = encode_symbol("Hello QR")[0]
    expected_finder = np.ones((7, 7), bool)
    expected_finder[1:6, 1:6] = False
    expected_finder[2:5, 2:5] = True
    for r, c in symbol.FINDER_ORIGINS:
        assert np.array_equal(core[r : r + 7, c : c + 7], expected_finder)
    alt = np.arange(8, 13) % 2 == 0
    assert np.array_equal(core[6, 8:13], alt)
    assert np.array_equal(core[8:13, 6], alt)
    assert core[13, 8]


def test_deterministic():
    assert np.array_equal(encode("abcdefghij"), encode("abcdefghij"))


def test_data_codewords_layout():
    cw = data_codewords("AB")
    # 0100 | 00000010 | 01000001 | 01000010 | 0000 terminator
    assert cw[:4] == bytes([0x40, 0x24, 0x14, 0x20])
    assert cw[4:] == bytes([0xEC, 0x11] * 6)


def test_payload_errors():
    with pytest.raises(PayloadTooLong):
        encode("x" * 15)
    with pytest.raises(PayloadTooLong):
        encode("")
    with pytest.raises(NonAsciiByte):
        encode("tab\there")
    with pytest.raises(NonAsciiByte):
        encode("café")


def test_max_length_payload_roundtrip():
    assert decode(encode("~" * 14)) == "~" * 14


def test_roundtrip_1000():
    r = random.Random(0)
    for _ in range(1000):
        p = random_payload(r)
        text, corrections = decode(encode(p), return_corrections=True)
        assert text == p
        assert corrections == 0


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet=PRINTABLE, min_size=1, max_size=14))
def test_roundtrip_property(p):
    assert decode(encode(p)) == p


def _cells_by_codeword():
    cells = {}
    for k, (r, c) in enumerate(symbol.DATA_CELLS):
        cells.setdefault(k // 8, []).append((r, c))
    return cells


def test_flipped_modules_within_five_codewords():
    r = random.Random(1)
    by_cw = _cells_by_codeword()
    for _ in range(200):
        p = random_payload(r)
        g = encode(p)
        for cw in r.sample(range(26), 5):
            rr, cc = r.choice(by_cw[cw])
            g[rr + 4, cc + 4] ^= True
        assert decode(g) == p


def test_whole_codewords_corrupted():
    r = random.Random(2)
    by_cw = _cells_by_codeword()
    for _ in range(200):
        p = random_payload(r)
        g = encode(p)
        for cw in r.sample(range(26), 5):
            for rr, cc in by_cw[cw]:
                g[rr + 4, cc + 4] = r.random() < 0.5
        text, n = decode(g, return_corrections=True)
        assert text == p and n <= 5


def test_all_light_structure_invalid():
    with pytest.raises(StructureInvalid):
        decode(np.zeros((29, 29), bool))


def _far_format_word():
    """A 15-bit word more than 3 bits from every level-M format word."""
    m_words = [symbol.format_bits(m) for m in range(8)]
    for w in range(1 << 15):
        if min(bin(w ^ v).count("1") for v in m_words) > 3:
            return w
    raise AssertionError("no far word")


def _write_copy(g, copy, word):
    for i, (rr, cc) in enumerate(copy):
        g[rr + 4, cc + 4] = bool(word >> i & 1)


def test_format_info_uses_either_copy():
    first, second = symbol.format_positions()
    for copy in (first, second):
        g = encode("copy test")
        _write_copy(g, copy, _far_format_word())
        assert decode(g) == "copy test"


def test_format_info_corrects_three_bits():
    g = encode("bch")
    first, second = symbol.format_positions()
    for rr, cc in first[:3] + second[5:8]:
        g[rr + 4, cc + 4] ^= True
    assert decode(g) == "bch"


def test_both_format_copies_destroyed():
    g = encode("copy test")
    first, second = symbol.format_positions()
    word = _far_format_word()
    _write_copy(g, first, word)
    _write_copy(g, second, word)
    with pytest.raises(FormatInfoInvalid):
        decode(g)


def test_format_bits_known_value():
    # level M, mask 0 -> 101010000010010 from the standard format table
    assert symbol.format_bits(0) == 0b101010000010010


def test_codewords_read_back():
    data = data_codewords("readback")
    cw = data + rs_encode(data)
    for mask in range(8):
        got, m = read_codewords(build_symbol(cw, mask))
        assert got == cw and m == mask


def test_mask_is_min_penalty_lowest_id():
    data = data_codewords("0123456789")
    cw = data + rs_encode(data)
    scores = [penalty_score(build_symbol(cw, m)) for m in range(8)]
    assert encode_symbol("0123456789")[1] == int(np.argmin(scores))


def test_penalty_checkerboard_no_runs_or_blocks():
    r, c = np.indices((21, 21))
    board = (r + c) % 2 == 0
    # rules 1-3 vanish; 221/441 dark -> rule 4 contributes 0
    assert penalty_score(board) == 0


def test_penalty_all_dark():
    g = np.ones((21, 21), bool)
    # rule 1: 42 lines of run 21 -> 42 * (3 + 16); rule 2: 400 blocks * 3;
    # rule 3: none; rule 4: 10 * floor(|100 - 50| / 5) = 100
    assert penalty_score(g) == 42 * 19 + 400 * 3 + 0 + 100


def test_penalty_rule3_single_pattern():
    g = np.zeros((21, 21), bool)
    g[0, :7] = [1, 0, 1, 1, 1, 0, 1]
    # direct evaluation of each rule as the oracle
    rule1 = 0
    for line in list(g) + list(g.T):
        run = 1
        for k in range(1, 21):
            if line[k] == line[k - 1]:
                run += 1
            else:
                rule1 += run - 2 if run >= 5 else 0
                run = 1
        rule1 += run - 2 if run >= 5 else 0
    blocks = sum(
        len({g[i, j], g[i + 1, j], g[i, j + 1], g[i + 1, j + 1]}) == 1
        for i in range(20) for j in range(20)
    )
    rule4 = 10 * (abs(20 * int(g.sum()) - 4410) // 441)
    assert penalty_score(g) == rule1 + 3 * blocks + 40 * 1 + rule4


def test_penalty_matches_reference_library():
    qrcode = pytest.importorskip("qrcode")
    from qrcode.util import MODE_8BIT_BYTE, QRData, lost_point

    r = random.Random(7)
    for _ in range(50):
        p = "".join(r.choice(string.ascii_letters + string.digits) for _ in range(10))
        grid, mask = encode_symbol(p)
        q = qrcode.QRCode(version=1, error_correction=qrcode.constants.ERROR_CORRECT_M,
                          border=0, mask_pattern=mask)
        q.add_data(QRData(p.encode(), mode=MODE_8BIT_BYTE))
        q.make(fit=False)
        ref = np.array(q.get_matrix(), bool)
        assert np.array_equal(ref, grid)
        assert lost_point(ref.tolist()) == penalty_score(grid)
