"""QR version-1 (level M) codec and image-to-grid sampling."""

from ofqr.qr.codec import decode, encode, encode_symbol
from ofqr.qr.rs import rs_decode, rs_encode
from ofqr.qr.sampling import otsu_threshold, sample_grid
from ofqr.qr.symbol import penalty_score

__all__ = [
    "decode",
    "encode",
    "encode_symbol",
    "otsu_threshold",
    "penalty_score",
    "rs_decode",
    "rs_encode",
    "sample_grid",
]
