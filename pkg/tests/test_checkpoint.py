import struct

import numpy as np
import pytest

from src.custom_exception import (CheckpointChecksumError, CheckpointError, CheckpointShapeError,
                                  CheckpointVersionError)
from src.model.checkpoint import (MAGIC, VERSION, CheckpointUtils, load_checkpoint, read_checkpoint,
                                  save_checkpoint, write_checkpoint)
from src.model.hyper_params import HyperParams
from src.model.tnanet import Tnanet, forward
from tests.helpers import small_hp


def with_crc(body):
    return body + struct.pack('<I', CheckpointUtils.checksum(body))


@pytest.fixture
def model(rng):
    model = Tnanet(small_hp(feature_names=['hr', 'sdnn', 'rmssd']), seed=4)
    for name, value in model.params.tensors():
        value[...] = rng.normal(size=value.shape)
    return model


class TestCheckpoint:

    def test_round_trip_is_bitwise(self, model):
        loaded = load_checkpoint(save_checkpoint(model))
        assert loaded.hp == model.hp
        assert [name for name, _ in loaded.params.tensors()] == [name for name, _ in model.params.tensors()]
        for name, value in model.params.tensors():
            assert loaded.params[name].tobytes() == value.tobytes()

    def test_file_round_trip(self, model, tmp_path):
        path = tmp_path / 'stage1_fold0.tnanet'
        write_checkpoint(path, model)
        assert path.read_bytes()[:4] == MAGIC
        assert save_checkpoint(read_checkpoint(path)) == path.read_bytes()

    @pytest.mark.parametrize('keep', [10, -1, -100])
    def test_truncated(self, model, keep):
        with pytest.raises(CheckpointChecksumError):
            load_checkpoint(save_checkpoint(model)[:keep])

    def test_flipped_byte(self, model):
        data = bytearray(save_checkpoint(model))
        data[len(data) // 2] ^= 0xFF
        with pytest.raises(CheckpointChecksumError):
            load_checkpoint(bytes(data))

    def test_bad_magic(self, model):
        with pytest.raises(CheckpointError):
            load_checkpoint(b'XXXX' + save_checkpoint(model)[4:])

    def test_version_mismatch(self, model):
        body = bytearray(save_checkpoint(model)[:-4])
        body[4] = VERSION + 1
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(with_crc(bytes(body)))

    def test_shape_inconsistent_with_hyper_params(self, model):
        hp_bytes = model.hp.to_json().encode('utf-8')
        tensors = model.params.tensors()
        body = MAGIC + struct.pack('<BI', VERSION, len(hp_bytes)) + hp_bytes + struct.pack('<I', len(tensors))
        for name, value in tensors:
            if name == 'linear_b':
                value = np.zeros(3)
            body += CheckpointUtils.pack_tensor(name, value)
        with pytest.raises(CheckpointShapeError, match='linear_b'):
            load_checkpoint(with_crc(body))

    def test_missing_tensor(self, model):
        hp_bytes = model.hp.to_json().encode('utf-8')
        tensors = [(name, value) for name, value in model.params.tensors() if name != 'bn2.running_var']
        body = MAGIC + struct.pack('<BI', VERSION, len(hp_bytes)) + hp_bytes + struct.pack('<I', len(tensors))
        body += b''.join(CheckpointUtils.pack_tensor(name, value) for name, value in tensors)
        with pytest.raises(CheckpointShapeError, match='bn2.running_var'):
            load_checkpoint(with_crc(body))

    def test_six_channel_model_runs(self, rng):
        hp = HyperParams.create(6, 40, filters=8)
        data = save_checkpoint(Tnanet(hp, seed=2))
        loaded = load_checkpoint(data)
        assert loaded.hp.n_channels == 6
        _, p = forward(loaded, rng.uniform(size=(6, 40)))
        assert p.p0 + p.p1 == pytest.approx(1.0)

    def test_checksum_is_crc32(self):
        assert CheckpointUtils.checksum(b'123456789') == 0xCBF43926
