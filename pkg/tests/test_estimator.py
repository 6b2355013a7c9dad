import csv

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from semole.chem import is_valid, parse_smiles
from semole.train.estimator import SeMole

from conftest import DATA

SMALL = dict(hidden=16, z_dim=8, depth=2, epochs=3, pretrain_epochs=1, ramp_epochs=1)


@pytest.fixture(scope="module")
def desk60():
    with open(DATA / "desk.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))[:60]
    return [r["smiles"] for r in rows], np.array([float(r["logp"]) for r in rows])


@pytest.fixture(scope="module")
def fitted(desk60):
    X, y = desk60
    y = y.copy()
    y[::2] = np.nan
    return SeMole(**SMALL).fit(X, y)


def test_params_round_trip_and_clone():
    est = SeMole(hidden=32, random_state=4)
    params = est.get_params()
    assert params["hidden"] == 32 and params["random_state"] == 4
    est.set_params(lr=0.01)
    assert est.lr == 0.01
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        SeMole().predict(["CCO"])
    with pytest.raises(NotFittedError):
        SeMole().sample(1)


@pytest.mark.parametrize("X,y", [(["CCO", "CC"], [1.0]), ([], []), (["CCO", "CC"], [1.0, np.inf]),
                                 (["CCO", "CC"], [np.nan, np.nan]), (["CCO", "C1CC"], [1.0, 2.0]),
                                 ("CCO", [1.0]), ([3, "CC"], [1.0, 2.0])])
def test_fit_validation(X, y):
    with pytest.raises(ValueError):
        SeMole(**SMALL).fit(X, y)


def test_fit_predict_transform(fitted, desk60):
    X, _ = desk60
    assert len(fitted.history_) == SMALL["epochs"]
    pred = fitted.predict(X[:5])
    assert pred.shape == (5,) and np.isfinite(pred).all()
    z = fitted.transform(X[:5])
    assert z.shape == (5, 2 * SMALL["z_dim"]) and np.isfinite(z).all()
    assert np.array_equal(pred, fitted.predict(X[:5]))


def test_out_of_vocabulary_is_nan(fitted):
    pred = fitted.predict(["C[Si](C)(C)C", "CCO"])
    assert np.isnan(pred[0]) and np.isfinite(pred[1])
    assert np.isnan(fitted.transform(["C[Si](C)(C)C"])).all()


def test_sample_valid_and_reproducible(fitted):
    a = fitted.sample(4, random_state=2, max_attempts=40)
    assert a == fitted.sample(4, random_state=2, max_attempts=40)
    assert len(a) <= 4
    for s in a:
        assert is_valid(parse_smiles(s))
    fitted.sample(2, target=1.5, random_state=0, max_attempts=20)
