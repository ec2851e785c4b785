"""
BAP header codec.

Three octets, most significant bit first:

    octet 0: flag(1) | reserved(3) | address[9:6]
    octet 1: address[5:0] | path_id[9:8]
    octet 2: path_id[7:0]
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import BapDecodeError, BapEncodeError

HEADER_LEN = 3
FIELD_MAX = 0x3FF


@dataclass(frozen=True)
class BapHeader:
    bap_address: int
    path_id: int
    flag: int = 0
    reserved: int = 0

    def encode(self) -> bytes:
        return bap_encode(self)


def _check(name: str, value: int, bits: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < (1 << bits):
        raise BapEncodeError(
            f"{name} must be an integer in [0, {(1 << bits) - 1}], got {value!r}",
            detail={"field": name},
        )


def bap_encode(header: BapHeader) -> bytes:
    _check("flag", header.flag, 1)
    _check("reserved", header.reserved, 3)
    _check("bap_address", header.bap_address, 10)
    _check("path_id", header.path_id, 10)
    word = (header.flag << 23) | (header.reserved << 20) | (header.bap_address << 10) | header.path_id
    return word.to_bytes(HEADER_LEN, "big")


def bap_decode(data: bytes) -> BapHeader:
    if len(data) != HEADER_LEN:
        raise BapDecodeError(
            f"BAP header is {HEADER_LEN} octets, got {len(data)}", detail={"length": len(data)}
        )
    word = int.from_bytes(bytes(data), "big")
    return BapHeader(
        bap_address=(word >> 10) & FIELD_MAX,
        path_id=word & FIELD_MAX,
        flag=(word >> 23) & 0x1,
        reserved=(word >> 20) & 0x7,
    )
