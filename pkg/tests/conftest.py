import numpy as np
import pytest

from ppmxplain.encoding import FeatureDescriptor, FeatureMatrix


def build_matrix(values, labels, columns=None) -> FeatureMatrix:
    """Feature matrix straight from arrays, for model/explain tests."""
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if columns is None:
        columns = [f"f{j}" for j in range(values.shape[1])]
    descriptors = [
        FeatureDescriptor(column_name=c, source=c, transform="static-numeric")
        for c in columns
    ]
    return FeatureMatrix(
        columns=list(columns),
        descriptors=descriptors,
        values=values,
        labels=labels,
        row_ids=[f"r{i}" for i in range(len(labels))],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
