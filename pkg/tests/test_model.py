import numpy as np
import pytest

from capic.datasets import PairedDataset
from capic.errors import ContractViolationError
from capic.model import fit_ca_nn_model, load_model, model_from_doc, model_to_doc, save_model
from capic.neural import MlpConfig, TrainConfig


@pytest.fixture(scope="module")
def tiny_model():
    rng = np.random.default_rng(91)
    x = rng.normal(size=(2, 300))
    y = 0.7 * x + 0.3 * rng.normal(size=(2, 300))
    data = PairedDataset(x=x, y=y, provenance={"source": "unit-test"})
    model, history = fit_ca_nn_model(
        data,
        MlpConfig((2, 8, 2), activation="tanh", init_seed=1),
        MlpConfig((2, 8, 2), activation="tanh", init_seed=2),
        TrainConfig(epochs=40, optimizer="adam", lr=0.01, seed=3),
    )
    return data, model, history


class TestFitModel:
    def test_whitening_identities_on_training_set(self, tiny_model):
        data, model, _ = tiny_model
        f = model.principal_f(data.x)
        g = model.principal_g(data.y)
        n = data.n
        np.testing.assert_allclose(f @ f.T / n, np.eye(2), atol=1e-6)
        np.testing.assert_allclose(g @ g.T / n, np.eye(2), atol=1e-6)
        cross = f @ g.T / n
        np.testing.assert_allclose(np.diag(cross), model.raw_diagonal, atol=1e-12)

    def test_metadata_captures_kinds(self, tiny_model):
        _, model, _ = tiny_model
        assert model.metadata["x_kind"] == "continuous"
        assert model.d == 2


class TestSerialization:
    def test_round_trip_through_disk(self, tiny_model, tmp_path):
        data, model, _ = tiny_model
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        probe = np.linspace(-1, 1, 10).reshape(2, 5)
        np.testing.assert_array_equal(model.principal_f(probe), loaded.principal_f(probe))
        np.testing.assert_array_equal(model.pic_diagonal, loaded.pic_diagonal)
        assert loaded.f_params.config.layer_widths == (2, 8, 2)

    def test_doc_round_trip_exact(self, tiny_model):
        _, model, _ = tiny_model
        doc = model_to_doc(model)
        again = model_to_doc(model_from_doc(doc))
        assert doc == again

    def test_version_checked(self, tiny_model):
        _, model, _ = tiny_model
        doc = model_to_doc(model)
        doc["format_version"] = 99
        with pytest.raises(ContractViolationError):
            model_from_doc(doc)
