import numpy as np
import pytest

from celldyn.conditioning import (
    MODEL_DIM,
    TENSOR_SHAPES,
    MlpWeights,
    WeightsFormatError,
    embed_phenotype,
    gelu,
    load_weights,
    prepend_token,
    random_weights,
    read_embeddings,
    save_weights,
    write_embeddings,
    zero_weights,
)
from oracles import scalar_gelu, scalar_mlp


def test_output_dim():
    w = random_weights(0)
    assert embed_phenotype([0.1, 0.2, 0.3, 0.4], w).shape == (MODEL_DIM,)
    assert embed_phenotype(np.zeros((3, 4)), w).shape == (3, MODEL_DIM)


def test_zero_weights_give_zero():
    out = embed_phenotype([0.5, 0.5, 0.5, 0.5], zero_weights())
    assert out.shape == (4096,) and not out.any()


def test_gelu_matches_scalar():
    xs = np.linspace(-6, 6, 101)
    assert np.allclose(gelu(xs), [scalar_gelu(x) for x in xs], rtol=0, atol=1e-15)
    assert gelu(0.0) == 0.0


def test_matches_scalar_oracle():
    rng = np.random.default_rng(42)
    for seed in range(50):
        w = random_weights(seed)
        p = rng.random(4)
        fast = embed_phenotype(p, w)
        slow = np.array(scalar_mlp(p, w))
        assert np.max(np.abs(fast - slow)) <= 1e-12


def test_random_weights_deterministic_and_bounded():
    a, b = random_weights(7), random_weights(7)
    assert a == b and a != random_weights(8)
    assert np.abs(a.W1).max() <= 0.5 and np.abs(a.W3).max() <= 1 / np.sqrt(512)


def test_shape_errors_name_tensor():
    t = zero_weights().tensors()
    t["W2"] = np.zeros((512, 255), np.float32)
    with pytest.raises(WeightsFormatError, match="W2"):
        MlpWeights(**t)


def test_bad_input_shape():
    with pytest.raises(ValueError):
        embed_phenotype([1, 2, 3], zero_weights())


def test_out_of_range_warns():
    with pytest.warns(UserWarning):
        embed_phenotype([1.5, 0, 0, 0], zero_weights())


def test_prepend():
    rng = np.random.default_rng(0)
    tokens = rng.random((7, MODEL_DIM)).astype(np.float32)
    p = rng.random(MODEL_DIM).astype(np.float32)
    out = prepend_token(tokens, p)
    assert out.shape == (8, MODEL_DIM)
    assert np.array_equal(out[0], p)
    assert out[1:].tobytes() == tokens.tobytes()


def test_prepend_shape_checks():
    with pytest.raises(ValueError):
        prepend_token(np.zeros((2, 10)), np.zeros(MODEL_DIM))
    with pytest.raises(ValueError):
        prepend_token(np.zeros((2, MODEL_DIM)), np.zeros(10))


def test_weights_round_trip(tmp_path):
    w = random_weights(3)
    save_weights(w, tmp_path / "w.pemb")
    back = load_weights(tmp_path / "w.pemb")
    assert back == w
    raw = (tmp_path / "w.pemb").read_bytes()
    assert raw[:4] == b"PEMB"
    assert len(raw) == 12 + 6 * 16 + 4 * sum(int(np.prod(s)) for s in TENSOR_SHAPES.values())


@pytest.mark.parametrize("cut", [3, 20, 200, -4])
def test_truncated_weights(tmp_path, cut):
    save_weights(zero_weights(), tmp_path / "w.pemb")
    raw = (tmp_path / "w.pemb").read_bytes()
    (tmp_path / "w.pemb").write_bytes(raw[:cut])
    with pytest.raises(WeightsFormatError):
        load_weights(tmp_path / "w.pemb")


def test_wrong_tensor_shape_in_file(tmp_path):
    save_weights(zero_weights(), tmp_path / "w.pemb")
    raw = bytearray((tmp_path / "w.pemb").read_bytes())
    raw[12 + 8] = 5  # dim0 of W1
    (tmp_path / "w.pemb").write_bytes(bytes(raw))
    with pytest.raises(WeightsFormatError, match="W1"):
        load_weights(tmp_path / "w.pemb")


def test_embeddings_file(tmp_path):
    emb = embed_phenotype(np.full((2, 4), 0.3), random_weights(1))
    side = write_embeddings(emb, tmp_path / "e.f32", ["a", "b"])
    assert side.name == "e.f32.json"
    assert (tmp_path / "e.f32").stat().st_size == 2 * 4096 * 4
    assert np.array_equal(read_embeddings(tmp_path / "e.f32"), emb.astype(np.float32))
