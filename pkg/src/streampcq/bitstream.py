"""Partial G-PCC bitstream parser.

TLV demultiplexing plus bit-level header decoding driven by a declarative
syntax schema.  Only header prefixes are decoded; entropy-coded payload
bodies are never touched, which is what makes feature extraction cheap
enough to run at any network node.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import (
    BitstreamExhausted,
    EmptyInput,
    MissingField,
    TruncatedUnit,
    UnrepresentableField,
    ZeroPointCount,
)

__all__ = [
    "TlvUnit",
    "FieldSpec",
    "TargetSpec",
    "SyntaxSchema",
    "BitstreamFeatures",
    "BitReader",
    "BitWriter",
    "default_schema",
    "read_tlv_units",
    "write_tlv_units",
    "parse_header",
    "extract_features",
    "synthesize_bitstream",
    "compute_tbpp",
]


# ---------------------------------------------------------------------------
# Schema


@dataclass(frozen=True)
class TlvUnit:
    unit_type: int
    payload: bytes


@dataclass(frozen=True)
class FieldSpec:
    """One header field: fixed-width unsigned u(n), or Exp-Golomb ue/se."""

    name: str
    kind: str          # 'u' | 'ue' | 'se'
    width: int = 0     # bit width, only for kind == 'u'

    def __post_init__(self):
        if self.kind not in ("u", "ue", "se"):
            raise ValueError(f"unsupported descriptor kind {self.kind!r}")
        if self.kind == "u" and self.width <= 0:
            raise ValueError("u(n) descriptor needs a positive width")


@dataclass(frozen=True)
class TargetSpec:
    """Where a feature lives: which unit class, which field, optional divisor."""

    unit_class: str
    field: str
    divisor: int = 1


@dataclass(frozen=True)
class SyntaxSchema:
    type_bytes: int = 1
    length_bytes: int = 4
    length_endian: str = "big"   # 'big' | 'little'
    unit_codes: dict = field(default_factory=dict)    # class name -> code
    field_paths: dict = field(default_factory=dict)   # class name -> [FieldSpec]
    targets: dict = field(default_factory=dict)       # feature -> TargetSpec

    def code_for(self, unit_class: str) -> int:
        return self.unit_codes[unit_class]

    def class_for(self, code: int):
        for name, c in self.unit_codes.items():
            if c == code:
                return name
        return None

    def header_bits(self, unit_class: str) -> int:
        """Upper bound on bits a header path may consume (ue/se unbounded;
        use a generous per-field cap of 65 bits for instrumentation)."""
        path = self.field_paths.get(unit_class, [])
        return sum(f.width if f.kind == "u" else 65 for f in path)

    # -- serialization --

    def to_dict(self) -> dict:
        return {
            "framing": {
                "type_bytes": self.type_bytes,
                "length_bytes": self.length_bytes,
                "length_endian": self.length_endian,
            },
            "unit_codes": dict(self.unit_codes),
            "field_paths": {
                cls: [
                    {"name": f.name, "kind": f.kind, **({"width": f.width} if f.kind == "u" else {})}
                    for f in path
                ]
                for cls, path in self.field_paths.items()
            },
            "targets": {
                feat: {"unit_class": t.unit_class, "field": t.field, "divisor": t.divisor}
                for feat, t in self.targets.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntaxSchema":
        framing = d.get("framing", {})
        return cls(
            type_bytes=framing.get("type_bytes", 1),
            length_bytes=framing.get("length_bytes", 4),
            length_endian=framing.get("length_endian", "big"),
            unit_codes=dict(d.get("unit_codes", {})),
            field_paths={
                name: [FieldSpec(f["name"], f["kind"], f.get("width", 0)) for f in path]
                for name, path in d.get("field_paths", {}).items()
            },
            targets={
                feat: TargetSpec(t["unit_class"], t["field"], t.get("divisor", 1))
                for feat, t in d.get("targets", {}).items()
            },
        )

    @classmethod
    def load(cls, path) -> "SyntaxSchema":
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            import tomllib

            return cls.from_dict(tomllib.loads(text.decode()))
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def default_schema() -> SyntaxSchema:
    """Embedded default targeting a TMC13 v20-style layout.

    The geometry scale is carried as an integer numerator over a divisor of
    8 so the usual scales 1, 0.5, 0.25 and 0.125 are exactly representable.
    """
    return SyntaxSchema(
        type_bytes=1,
        length_bytes=4,
        length_endian="big",
        unit_codes={
            "sequence_params": 1,
            "geometry_params": 2,
            "attribute_params": 3,
            "geometry_data": 4,
            "attribute_data": 5,
        },
        field_paths={
            "sequence_params": [
                FieldSpec("profile_idc", "u", 8),
                FieldSpec("level_idc", "u", 8),
                FieldSpec("geom_scale_num", "ue"),
            ],
            "attribute_params": [
                FieldSpec("attr_label", "u", 8),
                FieldSpec("attr_initial_qp", "ue"),
            ],
            "geometry_data": [
                FieldSpec("slice_id", "ue"),
                FieldSpec("slice_point_count", "ue"),
            ],
        },
        targets={
            "pqs": TargetSpec("sequence_params", "geom_scale_num", divisor=8),
            "qp": TargetSpec("attribute_params", "attr_initial_qp"),
            "point_count": TargetSpec("geometry_data", "slice_point_count"),
        },
    )


# ---------------------------------------------------------------------------
# Bit-level reader / writer (MSB first)


class BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0  # bit position

    @property
    def bits_consumed(self) -> int:
        return self.pos

    @property
    def bits_left(self) -> int:
        return 8 * len(self.data) - self.pos

    def read_bits(self, n: int, field=None) -> int:
        if n > self.bits_left:
            raise BitstreamExhausted(field)
        val = 0
        pos = self.pos
        for _ in range(n):
            byte = self.data[pos >> 3]
            val = (val << 1) | ((byte >> (7 - (pos & 7))) & 1)
            pos += 1
        self.pos = pos
        return val

    def read_ue(self, field=None) -> int:
        zeros = 0
        while True:
            bit = self.read_bits(1, field)
            if bit:
                break
            zeros += 1
        if zeros == 0:
            return 0
        suffix = self.read_bits(zeros, field)
        return (1 << zeros) - 1 + suffix

    def read_se(self, field=None) -> int:
        k = self.read_ue(field)
        # codeNum k -> (-1)^(k+1) * ceil(k/2)
        mag = (k + 1) // 2
        return mag if k % 2 == 1 else -mag


class BitWriter:
    def __init__(self):
        self._bits = []

    def write_bits(self, value: int, n: int):
        if value < 0 or value >= (1 << n):
            raise UnrepresentableField(f"{value} does not fit in u({n})")
        for i in range(n - 1, -1, -1):
            self._bits.append((value >> i) & 1)

    def write_ue(self, value: int):
        if value < 0:
            raise UnrepresentableField(f"ue(v) cannot encode {value}")
        k = value + 1
        nbits = k.bit_length()
        self.write_bits(0, nbits - 1)
        self.write_bits(k, nbits)

    def write_se(self, value: int):
        k = 2 * value - 1 if value > 0 else -2 * value
        self.write_ue(k)

    def getvalue(self, fill_bit: int = 0) -> bytes:
        bits = list(self._bits)
        while len(bits) % 8:
            bits.append(fill_bit)
        out = bytearray()
        for i in range(0, len(bits), 8):
            b = 0
            for bit in bits[i : i + 8]:
                b = (b << 1) | bit
            out.append(b)
        return bytes(out)


# ---------------------------------------------------------------------------
# TLV framing


def read_tlv_units(data: bytes, schema: SyntaxSchema) -> list:
    if not data:
        raise EmptyInput("empty bitstream")
    units = []
    off = 0
    hdr = schema.type_bytes + schema.length_bytes
    while off < len(data):
        if off + hdr > len(data):
            raise TruncatedUnit(f"incomplete TLV header at byte {off}")
        utype = int.from_bytes(data[off : off + schema.type_bytes], "big")
        length = int.from_bytes(
            data[off + schema.type_bytes : off + hdr], schema.length_endian
        )
        off += hdr
        if off + length > len(data):
            raise TruncatedUnit(
                f"unit type {utype} declares {length} bytes, only {len(data) - off} remain"
            )
        units.append(TlvUnit(utype, data[off : off + length]))
        off += length
    return units


def write_tlv_units(units, schema: SyntaxSchema) -> bytes:
    out = bytearray()
    for u in units:
        if u.unit_type < 0 or u.unit_type >= (1 << (8 * schema.type_bytes)):
            raise UnrepresentableField(f"unit type {u.unit_type} out of range")
        if len(u.payload) >= (1 << (8 * schema.length_bytes)):
            raise UnrepresentableField("payload too long for length field")
        out += u.unit_type.to_bytes(schema.type_bytes, "big")
        out += len(u.payload).to_bytes(schema.length_bytes, schema.length_endian)
        out += u.payload
    return bytes(out)


# ---------------------------------------------------------------------------
# Header decoding


def parse_header(payload: bytes, path, reader: BitReader | None = None) -> dict:
    """Decode the fields of `path` from the start of `payload`.

    Headers are prefixes: any unread payload tail is deliberately ignored.
    Pass a pre-built reader to observe bits consumed (instrumentation).
    """
    if not path:
        raise ValueError("empty field path")
    r = reader if reader is not None else BitReader(payload)
    out = {}
    for f in path:
        if f.kind == "u":
            out[f.name] = r.read_bits(f.width, f.name)
        elif f.kind == "ue":
            out[f.name] = r.read_ue(f.name)
        else:
            out[f.name] = r.read_se(f.name)
    return out


# ---------------------------------------------------------------------------
# Features


@dataclass(frozen=True)
class BitstreamFeatures:
    pqs: float
    qp: int
    texture_bits: int
    point_count: int
    tbpp: float
    point_count_source: str = "slice-header"  # slice-header | sidecar | decoded-cloud

    def validate(self):
        if self.pqs <= 0:
            raise ValueError("pqs must be positive")
        if self.point_count <= 0:
            raise ZeroPointCount("point_count must be positive")
        if self.tbpp != self.texture_bits / self.point_count:
            raise ValueError("tbpp inconsistent with texture_bits/point_count")

    @classmethod
    def from_counts(cls, pqs, qp, texture_bits, point_count, source="slice-header"):
        return cls(
            pqs=pqs,
            qp=qp,
            texture_bits=texture_bits,
            point_count=point_count,
            tbpp=compute_tbpp(texture_bits, point_count),
            point_count_source=source,
        )


def compute_tbpp(texture_bits: int, point_count: int) -> float:
    if point_count == 0:
        raise ZeroPointCount("cannot compute bits per point for an empty cloud")
    return texture_bits / point_count


def extract_features(
    data: bytes,
    schema: SyntaxSchema | None = None,
    sidecar: dict | None = None,
    decoded_point_count: int | None = None,
    trace: list | None = None,
) -> BitstreamFeatures:
    """Pull (PQS, QP, texture bits, point count, TBPP) out of a bitstream.

    Only declared header prefixes are bit-decoded; attribute and geometry
    payload bodies contribute length information alone.  `sidecar` supplies
    fallbacks for any target the schema cannot locate.  `trace`, when given,
    collects (unit_class, bits_consumed, payload_bits) per parsed unit.
    """
    schema = schema or default_schema()
    sidecar = sidecar or {}
    units = read_tlv_units(data, schema)

    first_of: dict = {}
    texture_bits = 0
    saw_attr_data = False
    attr_code = schema.unit_codes.get("attribute_data")
    for u in units:
        cls = schema.class_for(u.unit_type)
        if cls is not None and cls not in first_of:
            first_of[cls] = u
        if u.unit_type == attr_code:
            saw_attr_data = True
            texture_bits += 8 * len(u.payload)

    def header_value(feature: str):
        t = schema.targets.get(feature)
        if t is None:
            return None
        unit = first_of.get(t.unit_class)
        path = schema.field_paths.get(t.unit_class)
        if unit is None or not path:
            return None
        reader = BitReader(unit.payload)
        fields = parse_header(unit.payload, path, reader=reader)
        if trace is not None:
            trace.append((t.unit_class, reader.bits_consumed, 8 * len(unit.payload)))
        return fields.get(t.field)

    # pqs
    raw = header_value("pqs")
    if raw is not None:
        pqs = float(Fraction(raw, schema.targets["pqs"].divisor))
    elif "pqs" in sidecar:
        pqs = float(sidecar["pqs"])
    else:
        raise MissingField("pqs")

    # qp
    qp = header_value("qp")
    if qp is None:
        if "qp" in sidecar:
            qp = int(sidecar["qp"])
        else:
            raise MissingField("qp")

    # texture bits
    if not saw_attr_data:
        if "texture_bits" in sidecar:
            texture_bits = int(sidecar["texture_bits"])
        else:
            raise MissingField("texture_bits")

    # point count: slice header > sidecar > decoded cloud
    pc = header_value("point_count")
    if pc is not None:
        source = "slice-header"
    elif "point_count" in sidecar:
        pc, source = int(sidecar["point_count"]), "sidecar"
    elif decoded_point_count is not None:
        pc, source = int(decoded_point_count), "decoded-cloud"
    else:
        raise MissingField("point_count")
    if pc == 0:
        raise ZeroPointCount("stream declares zero points")

    return BitstreamFeatures.from_counts(pqs, qp, texture_bits, pc, source)


# ---------------------------------------------------------------------------
# Synthetic writer (test fixtures)


def synthesize_bitstream(
    features: BitstreamFeatures,
    schema: SyntaxSchema | None = None,
    payload_fill: int = 0xAB,
) -> bytes:
    """Write a minimal bitstream whose extracted features equal `features`.

    Attribute payload bodies are filler bytes; round-trips through
    extract_features exactly for any valid feature tuple whose texture_bits
    is a whole number of bytes.
    """
    schema = schema or default_schema()
    features.validate()
    if features.texture_bits % 8:
        raise UnrepresentableField("texture_bits must be a multiple of 8")

    pqs_frac = Fraction(features.pqs).limit_denominator(1 << 20)
    divisor = schema.targets["pqs"].divisor
    num = pqs_frac * divisor
    if num.denominator != 1 or num.numerator <= 0:
        raise UnrepresentableField(
            f"pqs {features.pqs} not representable over divisor {divisor}"
        )

    target_values = {
        "pqs": int(num),
        "qp": int(features.qp),
        "point_count": int(features.point_count),
    }
    field_value: dict = {}
    for feat, t in schema.targets.items():
        if feat in target_values:
            field_value[(t.unit_class, t.field)] = target_values[feat]

    def build_header(unit_class: str) -> bytes:
        w = BitWriter()
        for f in schema.field_paths.get(unit_class, []):
            v = field_value.get((unit_class, f.name), 0)
            if f.kind == "u":
                w.write_bits(v, f.width)
            elif f.kind == "ue":
                w.write_ue(v)
            else:
                w.write_se(v)
        return w.getvalue()

    units = [
        TlvUnit(schema.code_for("sequence_params"), build_header("sequence_params")),
        TlvUnit(schema.code_for("geometry_params"), build_header("geometry_params") or b"\x00"),
        TlvUnit(schema.code_for("attribute_params"), build_header("attribute_params")),
        TlvUnit(
            schema.code_for("geometry_data"),
            build_header("geometry_data") + bytes([payload_fill]) * 4,
        ),
    ]

    nbytes = features.texture_bits // 8
    attr_code = schema.code_for("attribute_data")
    if nbytes >= 2:  # split across two units so extraction sums lengths
        units.append(TlvUnit(attr_code, bytes([payload_fill]) * (nbytes // 2)))
        units.append(TlvUnit(attr_code, bytes([payload_fill]) * (nbytes - nbytes // 2)))
    else:
        units.append(TlvUnit(attr_code, bytes([payload_fill]) * nbytes))

    return write_tlv_units(units, schema)
