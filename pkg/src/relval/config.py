"""Run configuration: schema validation, hashing and dataset preparation."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .classification import ClassifierConfig
from .clustering import ClustererConfig, elbow_eps
from .data import CvGrid, Dataset, load_csv, make_blobs, standard_scale, train_test_split
from .gridsearch import PairSpec, SearchSpace


class ConfigError(ValueError):
    """Configuration problem detected before any computation."""


def load_schema() -> dict:
    text = resources.files("relval").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Prepared:
    """Train/test datasets after splitting and preprocessing."""

    train: Dataset
    test: Dataset
    stratifier: object = None
    split_json: str | None = None


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @property
    def hash(self) -> str:
        """Digest of everything that affects results (worker count and output dir excluded)."""
        relevant = {k: v for k, v in self.raw.items() if k not in ("workers", "output_dir")}
        return sha256(canonical_json(relevant))

    @property
    def seed(self) -> int:
        return int(self.raw.get("cv", {}).get("seed", 0))

    @property
    def workers(self) -> int | None:
        return self.raw.get("workers")

    @property
    def preprocessing(self) -> str:
        return self.raw.get("preprocessing", "none")

    @property
    def dataset_id(self) -> str:
        ds = self.raw["dataset"]
        if "id" in ds:
            return ds["id"]
        return Path(ds["path"]).stem if "path" in ds else "blobs"

    def grid(self, auto_k: bool = False) -> CvGrid:
        cv = self.raw.get("cv", {})
        if auto_k:
            ks = ()
        elif "k_values" in cv:
            ks = tuple(cv["k_values"])
        elif "k_range" in cv:
            lo, hi = cv["k_range"]
            ks = tuple(range(lo, hi + 1))
        else:
            ks = tuple(range(2, 7))
        try:
            return CvGrid(cv.get("n_fold", 2), cv.get("n_rep", 1), ks, cv.get("n_rnd", 10),
                          cv.get("seed", 0))
        except ValueError as exc:
            raise ConfigError(f"cv: {exc}") from None

    def _resolve_clusterer(self, spec: dict, train: Dataset | None) -> ClustererConfig:
        spec = dict(spec)
        if spec.get("eps") == "elbow":
            if train is None:
                raise ConfigError("eps='elbow' needs the training data")
            spec["eps"] = elbow_eps(train, spec.get("min_samples", 5))
        try:
            return ClustererConfig(**spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"clusterer: {exc}") from None

    def clusterer(self, train: Dataset | None = None) -> ClustererConfig:
        if "clusterer" not in self.raw:
            raise ConfigError("config has no 'clusterer' section")
        return self._resolve_clusterer(self.raw["clusterer"], train)

    def classifier(self) -> ClassifierConfig:
        if "classifier" not in self.raw:
            raise ConfigError("config has no 'classifier' section")
        try:
            return ClassifierConfig(**self.raw["classifier"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"classifier: {exc}") from None

    def search_space(self, train: Dataset | None = None) -> SearchSpace:
        if "search" not in self.raw:
            raise ConfigError("config has no 'search' section")
        s = self.raw["search"]
        pairs = []
        for p in s["pairs"]:
            try:
                clf = ClassifierConfig(**p["classifier"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"classifier: {exc}") from None
            pairs.append(PairSpec(self._resolve_clusterer(p["clusterer"], train), clf,
                                  {k: list(v) for k, v in p.get("grid", {}).items()}))
        return SearchSpace(pairs, self.grid(), s.get("true_k"))

    def prepare(self) -> Prepared:
        """Load the data, split train/test and apply preprocessing fitted on train."""
        ds = self.raw["dataset"]
        split = self.raw.get("split", {})
        if "blobs" in ds:
            b = ds["blobs"]
            data = make_blobs(b["n_samples"], b.get("n_features", 2), b["centers"],
                              b.get("cluster_std", 1.0), b.get("seed", 0),
                              tuple(b.get("center_box", (-10.0, 10.0))))
        else:
            data = load_csv(self.base_dir / ds["path"], ds.get("label_column"),
                            ds.get("has_header", True), self.dataset_id)
        split_json = None
        if "test_path" in ds:
            train = data
            test = load_csv(self.base_dir / ds["test_path"], ds.get("label_column"),
                            ds.get("has_header", True), f"{self.dataset_id}-test")
        else:
            strat = None
            if split.get("stratify", False):
                if data.true_labels is None:
                    raise ConfigError("split.stratify needs a label column")
                strat = data.true_labels
            plan, train, test = train_test_split(data, split.get("test_fraction", 0.3),
                                                 split.get("seed", 0), strat)
            split_json = plan.to_json()
        if self.preprocessing == "scale":
            train, scaler = standard_scale(train)
            if test.n_features == train.n_features:
                test = scaler.transform(test)
        stratifier = None
        if self.raw.get("cv", {}).get("stratify", False):
            if train.true_labels is None:
                raise ConfigError("cv.stratify needs a label column")
            stratifier = train.true_labels
        return Prepared(train, test, stratifier, split_json)


def parse_config(raw: dict, base_dir: Path | str = ".", seed: int | None = None,
                 workers: int | None = None) -> RunConfig:
    """Validate ``raw`` against the schema and apply command-line overrides."""
    raw = copy.deepcopy(raw)
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        raw.setdefault("cv", {})["seed"] = seed
    if workers is not None:
        raw["workers"] = workers
    cfg = RunConfig(raw, Path(base_dir))
    cfg.grid()  # surface grid errors early
    return cfg


def load_config(path, seed: int | None = None, workers: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(raw, path.parent, seed, workers)
