import pytest

import models
from records import LikelihoodRecord, write_records


@pytest.fixture
def iso16():
    return models.IsotropicGaussian(mean=0.0, sigma=1.0, d=16)


@pytest.fixture
def write_logliks(tmp_path):
    """Grava um CSV id,loglik a partir de uma lista de floats."""

    def _write(name, values, prefix="x"):
        path = tmp_path / name
        write_records(path, [LikelihoodRecord(f"{prefix}{i}", float(v)) for i, v in enumerate(values)])
        return path

    return _write
