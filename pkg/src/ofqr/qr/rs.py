"""Reed-Solomon RS(26, 16) over GF(256) as used by QR version 1, level M.

Field polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D), primitive element 2,
generator roots alpha^0 .. alpha^9. Codewords are stored most significant
coefficient first, the same order the bytes appear in the symbol.
"""

from __future__ import annotations

from ofqr.errors import Uncorrectable, WrongLength

PRIM = 0x11D
N_DATA = 16
N_ECC = 10
N_TOTAL = N_DATA + N_ECC

EXP = [0] * 512
LOG = [0] * 256
_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= PRIM
for _i in range(255, 512):
    EXP[_i] = EXP[_i - 255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return EXP[(LOG[a] - LOG[b]) % 255]


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0
    return EXP[(LOG[a] * n) % 255]


def gf_inv(a: int) -> int:
    return gf_div(1, a)


def poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] ^= gf_mul(a, b)
    return out


def poly_eval(p: list[int], x: int) -> int:
    """Horner evaluation; ``p[0]`` is the highest-degree coefficient."""
    y = 0
    for c in p:
        y = gf_mul(y, x) ^ c
    return y


def generator_poly(nsym: int = N_ECC) -> list[int]:
    g = [1]
    for i in range(nsym):
        g = poly_mul(g, [1, EXP[i]])
    return g


GENERATOR = generator_poly()


def rs_encode(data: bytes | list[int]) -> bytes:
    """Return the 10 ECC bytes for 16 data bytes."""
    data = list(data)
    if len(data) != N_DATA:
        raise WrongLength(f"expected {N_DATA} data bytes, got {len(data)}")
    rem = data + [0] * N_ECC
    for i in range(N_DATA):
        coef = rem[i]
        if coef:
            for j in range(1, len(GENERATOR)):
                rem[i + j] ^= gf_mul(GENERATOR[j], coef)
    return bytes(rem[N_DATA:])


def syndromes(codeword: list[int]) -> list[int]:
    return [poly_eval(codeword, EXP[i]) for i in range(N_ECC)]


def _berlekamp_massey(synd: list[int]) -> list[int]:
    """Error locator polynomial, lowest-degree coefficient first."""
    c = [1]
    b = [1]
    big_l = 0
    m = 1
    last = 1
    for n, s in enumerate(synd):
        d = s
        for i in range(1, big_l + 1):
            if i < len(c):
                d ^= gf_mul(c[i], synd[n - i])
        if d == 0:
            m += 1
            continue
        coef = gf_div(d, last)
        shifted = [0] * m + [gf_mul(coef, v) for v in b]
        t = list(c)
        if len(shifted) > len(c):
            c = c + [0] * (len(shifted) - len(c))
        for i, v in enumerate(shifted):
            c[i] ^= v
        if 2 * big_l <= n:
            big_l = n + 1 - big_l
            b = t
            last = d
            m = 1
        else:
            m += 1
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    if len(c) - 1 != big_l:
        raise Uncorrectable("locator degree inconsistent with syndromes")
    return c


def rs_decode(codeword: bytes | list[int]) -> tuple[bytes, int]:
    """Correct up to 5 byte errors with Berlekamp-Massey, Chien and Forney.

    Returns the 16 corrected data bytes and the number of corrected
    positions. Raises :class:`Uncorrectable` when the syndromes cannot be
    explained by at most 5 errors.
    """
    msg = list(codeword)
    if len(msg) != N_TOTAL:
        raise WrongLength(f"expected {N_TOTAL} codeword bytes, got {len(msg)}")
    synd = syndromes(msg)
    if not any(synd):
        return bytes(msg[:N_DATA]), 0

    locator = _berlekamp_massey(synd)
    n_err = len(locator) - 1
    if n_err > N_ECC // 2:
        raise Uncorrectable(f"{n_err} errors exceed the correction capacity")

    # Chien search: position k (from the message end) is an error iff
    # locator(alpha^-k) == 0.
    n = len(msg)
    positions = []
    for k in range(n):
        x_inv = EXP[(255 - k) % 255]
        val = 0
        for coef in reversed(locator):
            val = gf_mul(val, x_inv) ^ coef
        if val == 0:
            positions.append(k)
    if len(positions) != n_err:
        raise Uncorrectable("error locator roots fall outside the codeword")

    # Forney: omega = S(x) * locator(x) mod x^(2t), magnitudes from
    # omega(X^-1) / locator'(X^-1) (first root alpha^0, so no extra X factor).
    omega = [0] * N_ECC
    for i in range(N_ECC):
        acc = 0
        for j in range(min(i, n_err) + 1):
            acc ^= gf_mul(locator[j], synd[i - j])
        omega[i] = acc
    for k in positions:
        x = EXP[k]
        x_inv = gf_inv(x)
        num = 0
        for i in reversed(range(N_ECC)):
            num = gf_mul(num, x_inv) ^ omega[i]
        den = 0
        # formal derivative keeps odd-power terms only
        for i in range(1, n_err + 1, 2):
            den ^= gf_mul(locator[i], gf_pow(x_inv, i - 1))
        if den == 0:
            raise Uncorrectable("zero derivative in Forney step")
        magnitude = gf_mul(x, gf_div(num, den))
        msg[n - 1 - k] ^= magnitude

    if any(syndromes(msg)):
        raise Uncorrectable("residual syndromes after correction")
    return bytes(msg[:N_DATA]), n_err
