import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from core.exceptions import ConfigError
from core.seeding import make_rng
from core.types import Dataset, DatasetMeta

logger = logging.getLogger(__name__)

LOGISTIC = "logistic"
PROPENSITY_BOUNDS = (0.02, 0.98)


@dataclass(frozen=True)
class EffectSpec:
    """Coefficients of one outcome function of the features.

    `coef=None` means "draw coefficients from the run seed"; see
    SyntheticConfig.resolve().
    """

    coef: tuple = None
    intercept: float = 0.0
    nonlinear: bool = False

    def linear(self, X):
        return self.intercept + X @ np.asarray(self.coef, dtype=float)

    def to_document(self):
        return {
            'coef': None if self.coef is None else list(self.coef),
            'intercept': self.intercept,
            'nonlinear': self.nonlinear,
        }


def _default_tau_r():
    return EffectSpec(intercept=1.0, nonlinear=True)


def _default_tau_c():
    return EffectSpec(intercept=0.5, nonlinear=True)


def _default_mu0_r():
    return EffectSpec(intercept=1.0)


def _default_mu0_c():
    return EffectSpec(intercept=0.5)


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 20000
    d: int = 10
    treat_prob: object = 0.5
    noise_sd: float = 0.1
    tau_r_spec: EffectSpec = field(default_factory=_default_tau_r)
    tau_c_spec: EffectSpec = field(default_factory=_default_tau_c)
    mu0_spec: EffectSpec = field(default_factory=_default_mu0_r)
    mu0_c_spec: EffectSpec = field(default_factory=_default_mu0_c)
    propensity_coef: tuple = None

    def __post_init__(self):
        if self.n < 10:
            raise ConfigError(f"Synthetic n must be >= 10, got {self.n}")
        if self.d < 1:
            raise ConfigError(f"Synthetic d must be >= 1, got {self.d}")
        if self.noise_sd < 0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.treat_prob != LOGISTIC:
            prob = float(self.treat_prob)
            if not 0.05 <= prob <= 0.95:
                raise ConfigError(f"Constant treat_prob must be in [0.05, 0.95], got {prob}")
            object.__setattr__(self, 'treat_prob', prob)
        for name in ('tau_r_spec', 'tau_c_spec', 'mu0_spec', 'mu0_c_spec'):
            spec = getattr(self, name)
            if spec.coef is not None and len(spec.coef) != self.d:
                raise ConfigError(f"{name}.coef has length {len(spec.coef)}, expected d={self.d}")
        if self.propensity_coef is not None and len(self.propensity_coef) != self.d:
            raise ConfigError(f"propensity_coef has length {len(self.propensity_coef)}, expected d={self.d}")

    @property
    def is_logistic(self):
        return self.treat_prob == LOGISTIC

    def resolve(self, seed):
        """Fill every missing coefficient vector from the seed's coefficient stream."""
        rng = make_rng(seed, "coefficients")
        scale = 1.0 / np.sqrt(self.d)

        def fill(spec, sd):
            draw = rng.normal(0.0, sd, size=self.d)
            if spec.coef is not None:
                return spec
            return replace(spec, coef=tuple(float(v) for v in draw))

        propensity_draw = rng.normal(0.0, 1.5 * scale, size=self.d)
        return replace(
            self,
            tau_r_spec=fill(self.tau_r_spec, 0.8 * scale),
            tau_c_spec=fill(self.tau_c_spec, 0.8 * scale),
            mu0_spec=fill(self.mu0_spec, 0.2 * scale),
            mu0_c_spec=fill(self.mu0_c_spec, 0.2 * scale),
            propensity_coef=(
                self.propensity_coef
                if self.propensity_coef is not None
                else tuple(float(v) for v in propensity_draw)
            ),
        )

    def to_document(self):
        return {
            'n': self.n,
            'd': self.d,
            'treat_prob': self.treat_prob,
            'noise_sd': self.noise_sd,
            'tau_r_spec': self.tau_r_spec.to_document(),
            'tau_c_spec': self.tau_c_spec.to_document(),
            'mu0_spec': self.mu0_spec.to_document(),
            'mu0_c_spec': self.mu0_c_spec.to_document(),
            'propensity_coef': None if self.propensity_coef is None else list(self.propensity_coef),
        }


@dataclass(frozen=True)
class GroundTruth:
    tau_r_true: np.ndarray
    tau_c_true: np.ndarray
    propensity_true: np.ndarray

    @property
    def oracle_scores(self):
        """Rank key of the ground-truth cost effectiveness tau_r / tau_c."""
        return self.tau_r_true / self.tau_c_true


class OutcomeModel:
    """Noiseless outcome functions plus the noise and assignment mechanism.

    E[Y | x, T] = mu0(x) + T * tau(x) for both the value and the cost outcome.
    The simulator reuses this class to realize outcomes for logged users.
    """

    def __init__(self, cfg):
        if cfg.tau_r_spec.coef is None or cfg.propensity_coef is None:
            raise ConfigError("OutcomeModel needs a resolved SyntheticConfig")
        self.cfg = cfg

    def tau_r(self, X):
        spec = self.cfg.tau_r_spec
        value = spec.linear(X)
        if spec.nonlinear:
            value = value + np.sin(X[:, 0])
        return value

    def tau_c(self, X):
        spec = self.cfg.tau_c_spec
        value = spec.linear(X)
        if spec.nonlinear:
            value = np.logaddexp(0.0, value)
        return value

    def mu0_r(self, X):
        return self.cfg.mu0_spec.linear(X)

    def mu0_c(self, X):
        return self.cfg.mu0_c_spec.linear(X)

    def propensity(self, X):
        if self.cfg.is_logistic:
            logits = X @ np.asarray(self.cfg.propensity_coef, dtype=float)
            return np.clip(expit(logits), *PROPENSITY_BOUNDS)
        return np.full(X.shape[0], self.cfg.treat_prob)

    def assign(self, X, rng, prob=None):
        prob = self.propensity(X) if prob is None else np.broadcast_to(prob, X.shape[0])
        return (rng.random(X.shape[0]) < prob).astype(int)

    def realize(self, X, t, rng):
        """Draw (y_r, y_c) for users X under treatment vector t."""
        t = np.asarray(t, dtype=float)
        n = X.shape[0]
        sd = self.cfg.noise_sd
        y_r = self.mu0_r(X) + t * self.tau_r(X) + sd * rng.standard_normal(n)
        y_c = self.mu0_c(X) + t * self.tau_c(X) + sd * rng.standard_normal(n)
        return y_r, y_c

    def ground_truth(self, X):
        return GroundTruth(
            tau_r_true=self.tau_r(X),
            tau_c_true=self.tau_c(X),
            propensity_true=self.propensity(X),
        )


def draw_features(n, d, seed, stream="features"):
    return make_rng(seed, stream).standard_normal((n, d))


def generate_synthetic(cfg, seed):
    """Generate a dataset with known treatment effects.

    Returns (Dataset, GroundTruth). The config is resolved against `seed`
    first, so omitted coefficient vectors are drawn deterministically.
    """
    cfg = cfg.resolve(seed)
    model = OutcomeModel(cfg)
    X = draw_features(cfg.n, cfg.d, seed)
    truth = model.ground_truth(X)
    t = model.assign(X, make_rng(seed, "treatment"), prob=truth.propensity_true)
    y_r, y_c = model.realize(X, t, make_rng(seed, "noise"))
    ds = Dataset(
        ids=[f"u{i}" for i in range(cfg.n)],
        X=X,
        t=t,
        y_r=y_r,
        y_c=y_c,
        meta=DatasetMeta(name="synthetic", provenance=f"generate_synthetic(seed={seed})"),
    )
    logger.info(f"Generated synthetic dataset n={cfg.n} d={cfg.d} treated={int(t.sum())}")
    return ds, truth
