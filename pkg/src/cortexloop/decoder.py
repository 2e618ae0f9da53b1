"""Linear velocity decoder: calibrate from training signals, predict in real time.

Two independent penalized least-squares problems share one design matrix:
the horizontal and vertical velocity targets each get their own coefficient
vector in the feature layout documented in signals.embed_block. The intercept
column (index 0) is never penalized, so any DC offset is absorbed exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy.linalg import lstsq
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import (
    ConfigurationError,
    DataError,
    EmptyTrainingError,
    SingularFitError,
    UndefinedCorrelationError,
)
from .signals import SignalConfig, embed_block

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class FitReport:
    """Goodness-of-fit of decoded velocities against observed ones."""

    pearson_r_x: float
    pearson_r_y: float
    rmse_x: float
    rmse_y: float
    n_rows: int
    ridge_lambda: float

    def __post_init__(self):
        for name in ("pearson_r_x", "pearson_r_y"):
            r = getattr(self, name)
            if not -1.0 <= r <= 1.0:
                raise DataError(f"{name}={r} outside [-1, 1]")
        if self.rmse_x < 0 or self.rmse_y < 0:
            raise DataError("rmse must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingSet:
    """Design matrix plus observed velocities, one row per warmed-up sample."""

    features: np.ndarray   # (n_rows, feature_length), column 0 all ones
    u: np.ndarray          # (n_rows,) observed horizontal velocity
    v: np.ndarray          # (n_rows,) observed vertical velocity
    trial_ids: list[int]
    cfg: SignalConfig | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        n = self.features.shape[0]
        if self.u.shape != (n,) or self.v.shape != (n,):
            raise ConfigurationError(
                f"targets must match {n} feature rows: u {self.u.shape}, v {self.v.shape}"
            )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def feature_length(self) -> int:
        return self.features.shape[1]

    @property
    def well_posed(self) -> bool:
        """Soft guard: at least 10 rows per coefficient (waivable with ridge)."""
        return self.n_rows >= 10 * self.feature_length


@dataclass(frozen=True)
class DecoderModel:
    """Frozen decoder: per-axis coefficient vectors plus the config they bind to."""

    axis_x: np.ndarray
    axis_y: np.ndarray
    cfg: SignalConfig
    fit_report: FitReport

    def __post_init__(self):
        object.__setattr__(self, "axis_x", np.asarray(self.axis_x, dtype=float))
        object.__setattr__(self, "axis_y", np.asarray(self.axis_y, dtype=float))
        p = self.cfg.feature_length
        if self.axis_x.shape != (p,) or self.axis_y.shape != (p,):
            raise ConfigurationError(
                f"coefficient vectors must have length {p}, got "
                f"{self.axis_x.shape} and {self.axis_y.shape}"
            )
        if not (np.isfinite(self.axis_x).all() and np.isfinite(self.axis_y).all()):
            raise DataError("model coefficients must be finite")

    def check_config(self, cfg: SignalConfig) -> None:
        if cfg != self.cfg:
            raise ConfigurationError(
                "prediction with a SignalConfig different from the one the model "
                "was fitted with"
            )

    def predict(self, features: np.ndarray) -> tuple[float, float]:
        """Dot the feature vector against both axes."""
        features = np.asarray(features, dtype=float)
        if features.shape != self.axis_x.shape:
            raise ConfigurationError(
                f"feature vector length {features.shape} does not match model "
                f"length {self.axis_x.shape}"
            )
        return float(features @ self.axis_x), float(features @ self.axis_y)

    def predict_rows(self, features: np.ndarray) -> np.ndarray:
        """Vectorized predict over (n, p) feature rows; returns (n, 2)."""
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.axis_x.shape[0]:
            raise ConfigurationError(
                f"feature rows must be (n, {self.axis_x.shape[0]}), got {features.shape}"
            )
        return features @ np.column_stack([self.axis_x, self.axis_y])


def _solve_penalized(X: np.ndarray, Y: np.ndarray, ridge_lambda: float) -> np.ndarray:
    """Least squares via orthogonal decomposition of the (ridge-augmented) system.

    The penalty skips column 0 (intercept). Rank deficiency with no ridge is an
    error rather than a silent minimum-norm answer.
    """
    n, p = X.shape
    if ridge_lambda < 0:
        raise ConfigurationError(f"ridge_lambda must be nonnegative, got {ridge_lambda}")
    if ridge_lambda > 0:
        aug = np.sqrt(ridge_lambda) * np.eye(p)[1:]
        X = np.vstack([X, aug])
        Y = np.vstack([Y, np.zeros((p - 1, Y.shape[1]))])
    theta, _, rank, _ = lstsq(X, Y)
    if ridge_lambda == 0 and rank < p:
        raise SingularFitError(
            f"design matrix rank {rank} < {p} features; pass ridge_lambda > 0 "
            "to regularize"
        )
    return theta


def fit_decoder(ts: TrainingSet, ridge_lambda: float = 0.0) -> DecoderModel:
    """Fit both axes on a training set and attach the in-sample fit report."""
    raise_if_not_finite(ts)
    if ridge_lambda == 0 and ts.n_rows < ts.feature_length:
        raise SingularFitError(
            f"{ts.n_rows} rows < {ts.feature_length} features is underdetermined; "
            "pass ridge_lambda > 0"
        )
    theta = _solve_penalized(ts.features, np.column_stack([ts.u, ts.v]), ridge_lambda)
    cfg = _infer_config(ts)
    model = DecoderModel(
        axis_x=theta[:, 0],
        axis_y=theta[:, 1],
        cfg=cfg,
        fit_report=_report(theta, ts, ridge_lambda),
    )
    return model


def raise_if_not_finite(ts: TrainingSet) -> None:
    if not np.isfinite(ts.features).all():
        raise DataError("training features contain non-finite values")
    if not (np.isfinite(ts.u).all() and np.isfinite(ts.v).all()):
        raise DataError("training targets contain non-finite values")


def _infer_config(ts: TrainingSet) -> SignalConfig:
    if ts.cfg is None:
        raise ConfigurationError(
            "training set has no SignalConfig attached; set ts.cfg before fitting"
        )
    if ts.cfg.feature_length != ts.feature_length:
        raise ConfigurationError(
            f"training set config expects {ts.cfg.feature_length} features, "
            f"rows have {ts.feature_length}"
        )
    return ts.cfg


def pearson_r(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0.0:
        raise ZeroDivisionError("zero-variance series")
    return float(np.clip((da * db).sum() / denom, -1.0, 1.0))


def _report(theta: np.ndarray, ts: TrainingSet, ridge_lambda: float) -> FitReport:
    pred = ts.features @ theta
    rmse_x = float(np.sqrt(np.mean((pred[:, 0] - ts.u) ** 2)))
    rmse_y = float(np.sqrt(np.mean((pred[:, 1] - ts.v) ** 2)))
    try:
        r_x = pearson_r(pred[:, 0], ts.u)
        r_y = pearson_r(pred[:, 1], ts.v)
    except ZeroDivisionError:
        raise UndefinedCorrelationError(
            "observed or decoded series has zero variance; correlation undefined",
            rmse_x=rmse_x,
            rmse_y=rmse_y,
        )
    return FitReport(
        pearson_r_x=r_x,
        pearson_r_y=r_y,
        rmse_x=rmse_x,
        rmse_y=rmse_y,
        n_rows=ts.n_rows,
        ridge_lambda=ridge_lambda,
    )


def evaluate_decoder(model: DecoderModel, ts: TrainingSet) -> FitReport:
    """Pearson r and RMSE per axis of model predictions over a training set."""
    if ts.n_rows == 0:
        raise EmptyTrainingError("cannot evaluate on an empty training set")
    theta = np.column_stack([model.axis_x, model.axis_y])
    return _report(theta, ts, model.fit_report.ridge_lambda)


def assemble_training_set(recording, cfg: SignalConfig | None = None) -> TrainingSet:
    """Build the calibration design matrix from a recording's training trials.

    One row per warmed-up sample inside each phase-1 trial; inter-trial rest
    is excluded and the lag window never crosses a trial boundary. Targets are
    the synchronized reference velocities.
    """
    rec_cfg = recording.signal_config()
    if cfg is None:
        cfg = rec_cfg
    elif cfg != rec_cfg:
        raise ConfigurationError(
            f"requested config {cfg} does not match recording config {rec_cfg}"
        )
    spans = training_trial_spans(recording.events())
    if not spans:
        raise EmptyTrainingError("recording has no training trials")
    signals = recording.signal_array()
    reference = recording.reference()
    feats, us, vs, trial_ids = [], [], [], []
    warmup = cfg.lag_count * cfg.lag_stride
    for trial_id, (t0, t1) in enumerate(spans):
        if t1 > signals.shape[0]:
            raise ConfigurationError(
                f"trial span [{t0}, {t1}) exceeds recorded signal length {signals.shape[0]}"
            )
        feats.append(embed_block(signals[t0:t1], cfg))
        targets = [reference[t] for t in range(t0 + warmup, t1)]
        us.extend(t[0] for t in targets)
        vs.extend(t[1] for t in targets)
        trial_ids.append(trial_id)
    return TrainingSet(
        features=np.vstack(feats),
        u=np.array(us),
        v=np.array(vs),
        trial_ids=trial_ids,
        cfg=cfg,
    )


def training_trial_spans(events: list[dict]) -> list[tuple[int, int]]:
    """Extract [start, end) sample spans of phase-1 trials from an event log."""
    spans = []
    open_start: int | None = None
    for event in events:
        phase = event.get("phase", "")
        if not phase.startswith("training"):
            continue
        if event["type"] == "trial_start":
            open_start = int(event["t"])
        elif event["type"] == "trial_end" and open_start is not None:
            spans.append((open_start, int(event["t"])))
            open_start = None
    return spans


# --- sklearn-style estimator surface ----------------------------------------


class LagEmbedder(TransformerMixin, BaseEstimator):
    """Turn a (T, N) signal block into lagged decoder features.

    transform() drops the first K*stride cold samples; align_targets() slices
    a per-sample target series the same way so rows and targets line up.
    """

    def __init__(self, config: SignalConfig | None = None):
        self.config = config

    def fit(self, X, y=None):
        cfg = self.config if self.config is not None else SignalConfig()
        X = check_array(X)
        if X.shape[1] != cfg.n_channels:
            raise ConfigurationError(
                f"expected {cfg.n_channels} channels, got {X.shape[1]}"
            )
        self.config_ = cfg
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "config_")
        X = check_array(X)
        return embed_block(X, self.config_)

    def align_targets(self, y: np.ndarray) -> np.ndarray:
        """Drop the cold-start rows from a per-sample target series."""
        check_is_fitted(self, "config_")
        y = np.asarray(y)
        return y[self.config_.lag_count * self.config_.lag_stride :]


class VelocityDecoder(RegressorMixin, BaseEstimator):
    """Two-axis linear regression on lagged features, sklearn-compatible.

    X must already include the intercept column of ones at index 0 (the
    documented feature layout); consequently fit_intercept knobs do not exist
    and the ridge penalty skips that column.
    """

    def __init__(self, ridge_lambda: float = 0.0):
        self.ridge_lambda = ridge_lambda

    def fit(self, X, y):
        X = check_array(X)
        y = check_array(y)
        if y.ndim != 2 or y.shape[1] != 2:
            raise ConfigurationError(f"y must be (n, 2) velocities, got {y.shape}")
        if y.shape[0] != X.shape[0]:
            raise ConfigurationError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]}"
            )
        if self.ridge_lambda == 0 and X.shape[0] < X.shape[1]:
            raise SingularFitError(
                f"{X.shape[0]} rows < {X.shape[1]} features is underdetermined; "
                "set ridge_lambda > 0"
            )
        self.coef_ = _solve_penalized(X, y, self.ridge_lambda)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ConfigurationError(
                f"X has {X.shape[1]} features, model expects {self.n_features_in_}"
            )
        return X @ self.coef_

    def to_model(self, cfg: SignalConfig, fit_report: FitReport) -> DecoderModel:
        check_is_fitted(self, "coef_")
        return DecoderModel(
            axis_x=self.coef_[:, 0], axis_y=self.coef_[:, 1], cfg=cfg, fit_report=fit_report
        )


# --- model file --------------------------------------------------------------


def save_model(model: DecoderModel, path: Path | str) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": model.cfg.to_dict(),
        "axis_x": [float(c) for c in model.axis_x],
        "axis_y": [float(c) for c in model.axis_y],
        "fit_report": model.fit_report.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path: Path | str) -> DecoderModel:
    doc = json.loads(Path(path).read_text())
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported model format_version {version!r}; this build reads "
            f"version {MODEL_FORMAT_VERSION}"
        )
    return DecoderModel(
        axis_x=np.array(doc["axis_x"], dtype=float),
        axis_y=np.array(doc["axis_y"], dtype=float),
        cfg=SignalConfig.from_dict(doc["config"]),
        fit_report=FitReport(**doc["fit_report"]),
    )
