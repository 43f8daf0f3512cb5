"""Binary model files for trained part networks.

Layout (all integers little-endian):

    magic      4 bytes  b"SNNW"
    version    uint16   currently 1
    part id    uint16 length + UTF-8 bytes
    spec       uint32 length + canonical JSON (sorted keys)
    meta       uint32 length + canonical JSON (training_meta)
    n_params   uint64   total float32 count
    params     n_params float32 values, declaration order

Round-trips are bit-exact: parameters are stored as raw float32 exactly as
the network holds them.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .partnet import PartNetworkSpec, TrainedPartNetwork, build_network

MAGIC = b"SNNW"
FORMAT_VERSION = 1


class ModelFileError(Exception):
    """Base for everything wrong with a model file."""


class BadMagicError(ModelFileError):
    """The file does not start with the model magic: not a model file."""


class VersionMismatchError(ModelFileError):
    """The file's format version is not supported by this code."""


class TruncatedModelError(ModelFileError):
    """The file ends before all declared content was read."""


class PartMismatchError(ModelFileError):
    """A model was loaded into an ensemble slot for a different part."""


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def save_model(net, path):
    """Write a TrainedPartNetwork to ``path`` in the SNNW format."""
    params = [p for _, _, p in net.network.param_entries()]
    n_total = sum(p.size for p in params)
    part_bytes = net.part.encode("utf-8")
    spec_bytes = _canonical_json(net.spec.to_dict())
    meta_bytes = _canonical_json(net.training_meta)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<H", len(part_bytes)))
        fh.write(part_bytes)
        fh.write(struct.pack("<I", len(spec_bytes)))
        fh.write(spec_bytes)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<Q", n_total))
        for p in params:
            fh.write(np.ascontiguousarray(
                p, dtype="<f4").tobytes())
    return path


class _Reader:
    def __init__(self, data, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise TruncatedModelError(
                f"{self.path}: truncated while reading {what} "
                f"(need {n} bytes at offset {self.pos}, "
                f"have {len(self.data) - self.pos})")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size, what))[0]


def load_model(path):
    """Read a model file back into a TrainedPartNetwork."""
    path = Path(path)
    data = path.read_bytes()
    r = _Reader(data, path)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"{path}: not a model file (magic {magic!r})")
    version = r.unpack("<H", "version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}")
    part = r.take(r.unpack("<H", "part id length"), "part id").decode("utf-8")
    spec_json = r.take(r.unpack("<I", "spec length"), "spec")
    meta_json = r.take(r.unpack("<I", "meta length"), "meta")
    spec = PartNetworkSpec.from_dict(json.loads(spec_json))
    meta = json.loads(meta_json)
    n_total = r.unpack("<Q", "parameter count")
    raw = r.take(4 * n_total, "parameters")
    if r.pos != len(data):
        raise TruncatedModelError(
            f"{path}: {len(data) - r.pos} unexpected trailing bytes")
    values = np.frombuffer(raw, dtype="<f4")

    net = build_network(part, spec=spec, seed=0)
    declared = sum(p.size for _, _, p in net.network.param_entries())
    if declared != n_total:
        raise ModelFileError(
            f"{path}: file holds {n_total} parameters, spec implies "
            f"{declared}")
    offset = 0
    for layer in net.network.layers:
        for name, p in layer.param_items():
            chunk = values[offset:offset + p.size]
            layer.params[name] = chunk.reshape(p.shape).astype(
                np.float32, copy=True)
            offset += p.size
    return TrainedPartNetwork(part=part, spec=spec, network=net.network,
                              training_meta=meta)


def load_model_for_part(path, expected_part):
    """Load a model and reject it if it belongs to another part."""
    net = load_model(path)
    if net.part != expected_part:
        raise PartMismatchError(
            f"{path}: model is for part {net.part!r}, slot expects "
            f"{expected_part!r}")
    return net


def load_ensemble(models_dir, parts, suffix=".snnw"):
    """Load ``<models_dir>/<part><suffix>`` for every part, slot-checked."""
    models_dir = Path(models_dir)
    nets = {}
    for part in parts:
        path = models_dir / f"{part}{suffix}"
        if not path.exists():
            raise FileNotFoundError(f"no model file for part {part!r}: {path}")
        nets[part] = load_model_for_part(path, part)
    return nets
