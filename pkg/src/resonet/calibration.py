"""Linear voltage-to-coupling calibration.

The parametric coupling is proportional to the product of the dc bias and
the ac pump amplitude, ``C/2pi = alpha * V_dc * V_ac``, with no intercept.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from ._validation import check_scalar
from .exceptions import DegenerateFit
from .model import TWO_PI


class VoltageCalibration(RegressorMixin, BaseEstimator):
    """Zero-intercept fit of coupling strength against ``V_dc * V_ac``.

    ``X`` has two columns, ``(v_dc, v_ac)`` in volts; ``y`` is the coupling
    in rad/s. ``alpha`` may be given directly (Hz per V^2) to build an
    already-calibrated instance without calling ``fit``.
    """

    def __init__(self, alpha=None):
        self.alpha = alpha

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"X must have columns (v_dc, v_ac), got {X.shape[1]} columns")
        product = X[:, 0] * X[:, 1]
        denom = float(product @ product)
        if denom == 0.0:
            raise DegenerateFit("every calibration point has v_dc * v_ac == 0")
        y_hz = y / TWO_PI
        self.alpha_ = float(product @ y_hz) / denom
        self.residual_ = float(np.sqrt(np.mean((y_hz - self.alpha_ * product) ** 2)))
        self.n_features_in_ = 2
        return self

    @property
    def coefficient(self):
        """Hz per V^2, fitted value if available."""
        if hasattr(self, "alpha_"):
            return self.alpha_
        if self.alpha is None:
            raise NotFittedError("VoltageCalibration needs fit() or an explicit alpha")
        return check_scalar(self.alpha, "alpha", min_val=0.0, include_min=False)

    def predict(self, X):
        X = check_array(X, dtype=float)
        return TWO_PI * self.coefficient * X[:, 0] * X[:, 1]

    def coupling(self, v_dc, v_ac):
        return TWO_PI * self.coefficient * v_dc * v_ac

    def voltage_for(self, v_dc, coupling):
        v_dc = check_scalar(v_dc, "v_dc", min_val=0.0, include_min=False)
        return (coupling / TWO_PI) / (self.coefficient * v_dc)


def fit_calibration(points):
    """Fit from ``(v_dc, v_ac, coupling_rad_s)`` triples."""
    arr = np.asarray(points, dtype=float).reshape(-1, 3)
    return VoltageCalibration().fit(arr[:, :2], arr[:, 2])


def coupling_from_voltage(cal, v_dc, v_ac):
    v_dc = check_scalar(v_dc, "v_dc", min_val=0.0)
    v_ac = check_scalar(v_ac, "v_ac", min_val=0.0)
    return cal.coupling(v_dc, v_ac)


def voltage_for_coupling(cal, v_dc, coupling):
    coupling = check_scalar(coupling, "coupling", min_val=0.0)
    return cal.voltage_for(v_dc, coupling)
