"""Keccak-256 and event-signature hashing.

hashlib ships NIST SHA-3 (0x06 domain padding), which is not the Keccak-256
variant used for EVM event topics (0x01 padding), so the permutation is
implemented here. Pure python is plenty for hashing short signature strings.
"""

_MASK = (1 << 64) - 1

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# rotation offsets indexed [x][y]
_ROTATION = (
    (0, 36, 3, 41, 18),
    (1, 44, 10, 45, 2),
    (62, 6, 43, 15, 61),
    (28, 55, 25, 21, 56),
    (27, 20, 39, 8, 14),
)

_RATE = 136  # bytes, for 256-bit output


def _rotl(value: int, shift: int) -> int:
    return ((value << shift) | (value >> (64 - shift))) & _MASK


def _keccak_f(state: list[list[int]]) -> None:
    for rc in _ROUND_CONSTANTS:
        c = [state[x][0] ^ state[x][1] ^ state[x][2] ^ state[x][3] ^ state[x][4]
             for x in range(5)]
        d = [c[(x - 1) % 5] ^ _rotl(c[(x + 1) % 5], 1) for x in range(5)]
        for x in range(5):
            for y in range(5):
                state[x][y] ^= d[x]
        b = [[0] * 5 for _ in range(5)]
        for x in range(5):
            for y in range(5):
                b[y][(2 * x + 3 * y) % 5] = _rotl(state[x][y], _ROTATION[x][y])
        for x in range(5):
            for y in range(5):
                state[x][y] = b[x][y] ^ ((~b[(x + 1) % 5][y]) & b[(x + 2) % 5][y])
        state[0][0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Keccak-256 digest of ``data`` (the EVM's hash, not NIST SHA3-256)."""
    padded = bytearray(data)
    padded.append(0x01)
    while len(padded) % _RATE:
        padded.append(0x00)
    padded[-1] |= 0x80

    state = [[0] * 5 for _ in range(5)]
    for offset in range(0, len(padded), _RATE):
        for i in range(_RATE // 8):
            lane = int.from_bytes(padded[offset + i * 8:offset + (i + 1) * 8], "little")
            state[i % 5][i // 5] ^= lane
        _keccak_f(state)

    squeezed = bytearray()
    for i in range(4):
        squeezed += state[i % 5][i // 5].to_bytes(8, "little")
    return bytes(squeezed)


_TYPE_ALIASES = {"uint": "uint256", "int": "int256", "fixed": "fixed128x18",
                 "ufixed": "ufixed128x18"}


def canonical_signature(declaration: str) -> str:
    """Reduce an event declaration to its canonical signature string.

    Accepts either the bare form ``Transfer(address,address,uint256)`` or a
    solidity-style declaration with parameter names and ``indexed`` keywords,
    e.g. ``Transfer(address indexed from, address indexed to, uint256 value)``.
    Shorthand types (uint, int) are widened to their canonical names, with any
    array suffix preserved.
    """
    head, _, rest = declaration.partition("(")
    name = head.strip()
    body = rest.rstrip()
    if not name or not body.endswith(")"):
        raise ValueError(f"not an event declaration: {declaration!r}")
    body = body[:-1].strip()
    if not body:
        return f"{name}()"
    types = []
    for param in body.split(","):
        tokens = param.strip().split()
        if not tokens:
            raise ValueError(f"empty parameter in declaration: {declaration!r}")
        type_name = tokens[0]
        base, bracket, suffix = type_name.partition("[")
        base = _TYPE_ALIASES.get(base, base)
        types.append(base + bracket + suffix)
    return f"{name}({','.join(types)})"


def event_topic(declaration: str) -> bytes:
    """32-byte topic0 hash for an event declaration."""
    return keccak256(canonical_signature(declaration).encode("ascii"))
