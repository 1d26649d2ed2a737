"""Synthetic retail demand: linear calendar/category model, censoring, scaling.

One row per (day, category) over January 1, 2016 through June 30, 2017 for
nine product categories.  Demand is the dummy-encoded deterministic part
plus independent Gaussian noise; the historical order equals the
deterministic part, and the recorded sale is the smaller of the order and
the demand, so roughly half the rows are censored.  2016 is the training
year (3294 rows), the first half of 2017 the test window (1629 rows).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np
from scipy.special import ndtri

FEATURE_DIM = 26  # intercept + 8 category + 6 weekday + 11 month dummies
N_CATEGORIES = 9
CALENDAR_START = date(2016, 1, 1)
CALENDAR_END = date(2017, 6, 30)
TEST_START = date(2017, 1, 1)


class ParseError(ValueError):
    """A dataset file failed to parse; the message carries the row number."""


@dataclass(frozen=True)
class DemandModelParams:
    """Coefficients of the demand regression and the residual noise scale.

    Category 9, Monday, and January are the dummy base levels, so the
    intercept alone is the deterministic demand of that base cell.
    """

    intercept: float = 113.40
    category_coefs: tuple = (192.23, 151.66, -57.3, 51.56, 55.42, -76.14, 130.65, -106.29)
    weekday_coefs: tuple = (-3.64, -25.41, -29.90, -32.75, 21.15, 38.13)  # Tue..Sun
    month_coefs: tuple = (
        -3.46, 1.57, 11.94, 7.88, -1.58, -13.21, -11.9, 1.96, -1.67, -3.48, 20.03,
    )  # Feb..Dec
    noise_mean: float = 0.0
    noise_std: float = 46.57

    def coefficient_vector(self) -> np.ndarray:
        beta = np.concatenate(
            [[self.intercept], self.category_coefs, self.weekday_coefs, self.month_coefs]
        )
        if beta.shape[0] != FEATURE_DIM:
            raise ValueError(f"coefficient vector has length {beta.shape[0]}")
        return beta


@dataclass
class ScalingRecord:
    """Train-set feature standardization and target min-max range.

    unscaled_columns lists zero-variance feature columns that were left
    alone (the intercept column 0 is always left alone by design and is not
    reported here).
    """

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_min: float
    target_max: float
    unscaled_columns: list = field(default_factory=list)

    def scale_features(self, X: np.ndarray) -> np.ndarray:
        return (X - self.feature_mean) / self.feature_std

    def unscale_features(self, X: np.ndarray) -> np.ndarray:
        return X * self.feature_std + self.feature_mean

    def scale_target(self, v):
        return (np.asarray(v, dtype=float) - self.target_min) / (
            self.target_max - self.target_min
        )

    def unscale_target(self, v):
        return np.asarray(v, dtype=float) * (self.target_max - self.target_min) + (
            self.target_min
        )


@dataclass
class Dataset:
    """Feature rows with sales, optional demand/decision-target columns.

    features column 0 is the constant 1.  Calendar datasets also carry dates
    and category indices; synthetic test sets may carry the
    distribution-optimal quantity per row (q_star) for decision-error
    metrics.  scaling records the transform applied to this dataset, if any.
    """

    features: np.ndarray
    sales: np.ndarray
    demand: np.ndarray | None = None
    dates: np.ndarray | None = None
    categories: np.ndarray | None = None
    q_star: np.ndarray | None = None
    scaling: ScalingRecord | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.sales = np.asarray(self.sales, dtype=float)
        if self.features.shape[0] != self.sales.shape[0]:
            raise ValueError("features and sales row counts differ")
        if self.demand is not None:
            self.demand = np.asarray(self.demand, dtype=float)
            bad = self.sales > self.demand + 1e-9
            if bad.any():
                raise ValueError(
                    f"sale exceeds demand on {int(bad.sum())} rows; "
                    "censoring can only reduce"
                )

    @property
    def n(self) -> int:
        return self.sales.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def take(self, idx) -> "Dataset":
        return Dataset(
            self.features[idx],
            self.sales[idx],
            None if self.demand is None else self.demand[idx],
            None if self.dates is None else self.dates[idx],
            None if self.categories is None else self.categories[idx],
            None if self.q_star is None else self.q_star[idx],
            self.scaling,
        )


def calendar_grid(start: date = CALENDAR_START, end: date = CALENDAR_END):
    """All (day, category) pairs, day-major, categories 1..9."""
    days = [start + timedelta(d) for d in range((end - start).days + 1)]
    dates = np.repeat(np.array(days, dtype="datetime64[D]"), N_CATEGORIES)
    categories = np.tile(np.arange(1, N_CATEGORIES + 1), len(days))
    return dates, categories


def encode_features(dates: np.ndarray, categories: np.ndarray) -> np.ndarray:
    """Dummy-encode (date, category) rows into the 26-dim feature vector."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    categories = np.asarray(categories, dtype=int)
    n = dates.shape[0]
    X = np.zeros((n, FEATURE_DIM))
    X[:, 0] = 1.0
    rows = np.arange(n)
    cat = categories - 1  # dummies for categories 1..8, base 9
    mask = cat < N_CATEGORIES - 1
    X[rows[mask], 1 + cat[mask]] = 1.0
    weekday = ((dates.astype("datetime64[D]").view("int64") + 3) % 7).astype(int)
    mask = weekday >= 1  # Monday is the base level
    X[rows[mask], 9 + weekday[mask] - 1] = 1.0
    month = (dates.astype("datetime64[M]").view("int64") % 12).astype(int) + 1
    mask = month >= 2  # January is the base level
    X[rows[mask], 15 + month[mask] - 2] = 1.0
    return X


def deterministic_demand(params: DemandModelParams, features: np.ndarray):
    """The noiseless part of demand, beta.x on raw dummy features."""
    out = np.asarray(features, dtype=float) @ params.coefficient_vector()
    return float(out) if out.ndim == 0 else out


def generate(params: DemandModelParams | None = None, seed: int = 0) -> Dataset:
    """Draw the full synthetic panel: demand, mean-quantity order, censored sale."""
    params = params or DemandModelParams()
    dates, categories = calendar_grid()
    X = encode_features(dates, categories)
    d_det = X @ params.coefficient_vector()
    rng = np.random.default_rng(seed)
    noise = rng.normal(params.noise_mean, params.noise_std, d_det.shape[0])
    demand = d_det + noise
    order = d_det  # historical policy: order the demand mean
    sale = np.minimum(order, demand)
    return Dataset(X, sale, demand=demand, dates=dates, categories=categories)


def split_chronological(dataset: Dataset) -> tuple[Dataset, Dataset]:
    """2016 rows to train, January-June 2017 rows to test."""
    if dataset.dates is None:
        raise ValueError("chronological split needs dated rows")
    days = np.unique(dataset.dates)
    spans = np.diff(days.astype("datetime64[D]").view("int64"))
    if (spans != 1).any():
        raise ValueError("calendar gap: dataset dates are not consecutive days")
    years = dataset.dates.astype("datetime64[Y]").view("int64") + 1970
    train_mask = years == 2016
    test_mask = (dataset.dates >= np.datetime64(TEST_START)) & (
        dataset.dates <= np.datetime64(CALENDAR_END)
    )
    if not train_mask.any() or not test_mask.any():
        raise ValueError("calendar gap: dataset does not span both partitions")
    return dataset.take(np.flatnonzero(train_mask)), dataset.take(
        np.flatnonzero(test_mask)
    )


def scale(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, ScalingRecord]:
    """Standardize dummy features on train stats; min-max the targets to [0, 1].

    The intercept column is untouched; any other zero-variance column is
    left unscaled and recorded.  The same affine maps are applied to the
    test partition without clipping, so test values may leave [0, 1].
    """
    if train.n == 0:
        raise ValueError("cannot scale an empty training set")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    mean[0], std[0] = 0.0, 1.0  # intercept passes through
    flat = np.flatnonzero(std < 1e-12)
    unscaled = [int(j) for j in flat if j != 0]
    mean[flat], std[flat] = 0.0, 1.0

    lo = float(train.sales.min())
    hi = float(train.sales.max())
    if hi <= lo:
        raise ValueError("degenerate target range on the training partition")
    record = ScalingRecord(mean, std, lo, hi, unscaled)

    def apply(ds: Dataset) -> Dataset:
        return Dataset(
            record.scale_features(ds.features),
            record.scale_target(ds.sales),
            None if ds.demand is None else record.scale_target(ds.demand),
            ds.dates,
            ds.categories,
            None if ds.q_star is None else record.scale_target(ds.q_star),
            record,
        )

    return apply(train), apply(test), record


def q_star(params: DemandModelParams, features, alpha: float):
    """Distribution-optimal order: deterministic demand plus the noise alpha-quantile."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    return deterministic_demand(params, features) + params.noise_std * float(
        ndtri(alpha)
    )


def with_q_star(
    dataset: Dataset, params: DemandModelParams, alpha: float
) -> Dataset:
    """Attach the per-row optimal quantity (raw, unscaled datasets only)."""
    if dataset.scaling is not None:
        raise ValueError("attach optimal quantities before scaling, on raw features")
    return replace(dataset, q_star=np.asarray(q_star(params, dataset.features, alpha)))


# ---------------------------------------------------------------------------
# CSV round trip: header `date,category,sale,demand,f01..fNN`, ISO dates,
# empty cell for missing demand.  The scaling sidecar is `<path>.scaling`.

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def save_csv(dataset: Dataset, path) -> None:
    if dataset.dates is None or dataset.categories is None:
        raise ValueError("CSV persistence needs dated, categorized rows")
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["date", "category", "sale", "demand"]
        + [f"f{j + 1:02d}" for j in range(dataset.p)]
    )
    demand = dataset.demand
    for i in range(dataset.n):
        writer.writerow(
            [
                str(dataset.dates[i]),
                int(dataset.categories[i]),
                _fmt(dataset.sales[i]),
                "" if demand is None or np.isnan(demand[i]) else _fmt(demand[i]),
            ]
            + [_fmt(v) for v in dataset.features[i]]
        )
    path.write_text(buf.getvalue())
    if dataset.scaling is not None:
        save_scaling(dataset.scaling, scaling_sidecar(path))


def scaling_sidecar(path) -> Path:
    return Path(str(path) + ".scaling")


def save_scaling(record: ScalingRecord, path) -> None:
    lines = [
        f"target_min {_fmt(record.target_min)}",
        f"target_max {_fmt(record.target_max)}",
        "unscaled_columns " + " ".join(str(j) for j in record.unscaled_columns),
    ]
    for j, (m, s) in enumerate(zip(record.feature_mean, record.feature_std)):
        lines.append(f"feature {j} {_fmt(m)} {_fmt(s)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_scaling(path) -> ScalingRecord:
    kv = {}
    features = {}
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "feature":
            features[int(parts[1])] = (float(parts[2]), float(parts[3]))
        else:
            kv[parts[0]] = parts[1:]
    p = len(features)
    mean = np.array([features[j][0] for j in range(p)])
    std = np.array([features[j][1] for j in range(p)])
    return ScalingRecord(
        mean,
        std,
        float(kv["target_min"][0]),
        float(kv["target_max"][0]),
        [int(j) for j in kv.get("unscaled_columns", [])],
    )


def load_csv(path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        has_demand = "demand" in header
        expected_fixed = ["date", "category", "sale"] + (
            ["demand"] if has_demand else []
        )
        if header[: len(expected_fixed)] != expected_fixed:
            missing = [c for c in ("date", "category", "sale") if c not in header]
            if missing:
                raise ParseError(f"{path}: header is missing column {missing[0]!r}")
            raise ParseError(f"{path}: malformed header {header[:4]}")
        p = len(header) - len(expected_fixed)
        if p < 1 or header[len(expected_fixed) :] != [
            f"f{j + 1:02d}" for j in range(p)
        ]:
            raise ParseError(f"{path}: malformed feature columns in header")

        dates, cats, sales, demands, rows = [], [], [], [], []
        seen = set()
        any_demand = False
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {lineno} has {len(row)} cells")
            try:
                d = np.datetime64(row[0], "D")
                c = int(row[1])
                sale = float(row[2])
                if has_demand:
                    dem = float(row[3]) if row[3] != "" else np.nan
                else:
                    dem = np.nan
                feats = [float(v) for v in row[len(expected_fixed) :]]
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
            key = (row[0], c)
            if key in seen:
                raise ParseError(
                    f"{path}: row {lineno}: duplicate (date, category) key {key}"
                )
            seen.add(key)
            any_demand = any_demand or not np.isnan(dem)
            dates.append(d)
            cats.append(c)
            sales.append(sale)
            demands.append(dem)
            rows.append(feats)

    if not rows:
        raise ParseError(f"{path}: no data rows")
    demand = np.array(demands) if any_demand else None
    sidecar = scaling_sidecar(path)
    scaling = load_scaling(sidecar) if sidecar.exists() else None
    return Dataset(
        np.array(rows),
        np.array(sales),
        demand=demand,
        dates=np.array(dates, dtype="datetime64[D]"),
        categories=np.array(cats),
        scaling=scaling,
    )
