"""
Binary checkpoint, little-endian:

    magic      4s   b"TNAN"
    version    u8
    hp_len     u32  length of the hyper-parameter JSON
    hp         hp_len bytes of UTF-8 JSON
    n_records  u32
    records    name_len u16, name, rank u8, dims u32 * rank, float64 payload
    crc        u32  CRC-32 of everything before it
"""
import logging
import struct

import numpy as np
from crcmod import crcmod

from src.custom_exception import (CheckpointChecksumError, CheckpointError, CheckpointShapeError,
                                  CheckpointVersionError)
from src.model.hyper_params import HyperParams
from src.model.tnanet import Tnanet, init_params

MAGIC = b"TNAN"
VERSION = 1
EXTENSION = '.tnanet'


class CheckpointUtils:

    @staticmethod
    def checksum(data: bytes) -> int:
        crc32_func = crcmod.mkCrcFun(0x104C11DB7, rev=True, initCrc=0x00000000, xorOut=0xFFFFFFFF)
        return crc32_func(data)

    @staticmethod
    def pack_tensor(name: str, value: np.ndarray) -> bytes:
        encoded = name.encode('utf-8')
        value = np.ascontiguousarray(value, dtype='<f8')
        header = struct.pack('<H', len(encoded)) + encoded + struct.pack('<B', value.ndim)
        header += struct.pack(f'<{value.ndim}I', *value.shape)
        return header + value.tobytes()

    @staticmethod
    def unpack_tensor(data: bytes, offset: int):
        (name_len,) = struct.unpack_from('<H', data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode('utf-8')
        offset += name_len
        (rank,) = struct.unpack_from('<B', data, offset)
        offset += 1
        dims = struct.unpack_from(f'<{rank}I', data, offset)
        offset += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        value = np.frombuffer(data, dtype='<f8', count=count, offset=offset).reshape(dims).astype(np.float64)
        return name, value, offset + 8 * count


def save_checkpoint(model: Tnanet) -> bytes:
    hp_bytes = model.hp.to_json().encode('utf-8')
    tensors = model.params.tensors()
    body = MAGIC + struct.pack('<BI', VERSION, len(hp_bytes)) + hp_bytes + struct.pack('<I', len(tensors))
    body += b''.join(CheckpointUtils.pack_tensor(name, value) for name, value in tensors)
    return body + struct.pack('<I', CheckpointUtils.checksum(body))


def load_checkpoint(data: bytes) -> Tnanet:
    if len(data) < len(MAGIC) + 1 + 4 + 4 + 4:
        raise CheckpointChecksumError(f"checkpoint truncated to {len(data)} bytes")
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a TNANet checkpoint (bad magic)")
    body, (crc,) = data[:-4], struct.unpack('<I', data[-4:])
    if CheckpointUtils.checksum(body) != crc:
        raise CheckpointChecksumError("checkpoint checksum mismatch (file truncated or corrupted)")
    version, hp_len = struct.unpack_from('<BI', body, len(MAGIC))
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version} is not supported (expected {VERSION})")
    offset = len(MAGIC) + 5
    try:
        hp = HyperParams.from_json(body[offset:offset + hp_len].decode('utf-8'))
    except (TypeError, ValueError) as e:
        raise CheckpointError(f"checkpoint hyper-parameters are unreadable: {format(e)}")
    offset += hp_len
    (n_records,) = struct.unpack_from('<I', body, offset)
    offset += 4
    expected = init_params(hp, np.random.default_rng(0))
    params = expected.copy()
    seen = set()
    try:
        for _ in range(n_records):
            name, value, offset = CheckpointUtils.unpack_tensor(body, offset)
            if name not in expected:
                raise CheckpointShapeError(f"unexpected tensor '{name}' in checkpoint")
            if value.shape != expected[name].shape:
                raise CheckpointShapeError(f"tensor '{name}' has shape {value.shape}, "
                                           f"hyper-parameters require {expected[name].shape}")
            params[name][...] = value
            seen.add(name)
    except (struct.error, ValueError) as e:
        raise CheckpointShapeError(f"malformed tensor record: {format(e)}")
    missing = [name for name, _ in expected.tensors() if name not in seen]
    if missing:
        raise CheckpointShapeError(f"checkpoint is missing tensors: {', '.join(missing)}")
    if offset != len(body):
        raise CheckpointShapeError(f"{len(body) - offset} unexpected trailing bytes")
    logging.debug(f"load_checkpoint: {n_records} tensors, hp {hp.to_json()}")
    return Tnanet(hp, params)


def write_checkpoint(path, model: Tnanet):
    with open(path, 'wb') as file:
        file.write(save_checkpoint(model))


def read_checkpoint(path) -> Tnanet:
    with open(path, 'rb') as file:
        return load_checkpoint(file.read())
