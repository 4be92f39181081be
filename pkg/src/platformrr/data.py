"""Trial data structures: participant records, trial design, covariate coarsening.

A platform trial enrolls participants into calendar windows. Within window w,
arriving participants are randomized among the active intervention arms
(a subset of {1..k}) and the shared control arm 0, each with probability
1/(k_w + 1). Each record carries a follow-up time ``x`` (months), an event
indicator ``delta``, an arm label, an enrollment window, and a discrete
baseline covariate ``z``. Analyses stratify on a coarsening v = g(z).

Interchange formats
-------------------
Records CSV: ``id,x,delta,arm,window,z`` (UTF-8, ``.`` decimal separator).
Design JSON: ``{k, q, tau, window_sets: {"1": [...], ...},
calendar_bounds: [[start, end], ...]}``.
Coarsening JSON: ``{"z1": "v1", ...}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "TrialDesign",
    "CoarseningMap",
    "ParticipantRecord",
    "Dataset",
    "ValidationReport",
    "load_dataset",
    "validate",
]


@dataclass(frozen=True)
class TrialDesign:
    """Static design of a platform trial.

    Parameters
    ----------
    k : int
        Number of active intervention arms, labeled 1..k (0 is control).
    q : int
        Number of enrollment windows, labeled 1..q.
    tau : float
        Administrative horizon in months; all analysis times lie in [0, tau].
    window_sets : dict[int, frozenset[int]]
        For each arm a, the set of windows in which a is under randomization.
    calendar_bounds : tuple[tuple[float, float], ...]
        Per-window (start, end] calendar bounds in months, index w-1.
    """

    k: int
    q: int
    tau: float
    window_sets: dict
    calendar_bounds: tuple

    def __post_init__(self):
        if self.k < 1:
            raise DataError("design needs at least one active arm")
        if self.q < 1:
            raise DataError("design needs at least one window")
        if not self.tau > 0:
            raise DataError("tau must be positive")
        if len(self.calendar_bounds) != self.q:
            raise DataError("calendar_bounds must list one (start, end) pair per window")
        sets = {}
        for a in range(1, self.k + 1):
            if a not in self.window_sets:
                raise DataError(f"window_sets missing arm {a}")
            ws = frozenset(int(w) for w in self.window_sets[a])
            if not ws:
                raise DataError(f"arm {a} has an empty window set")
            if not ws <= set(range(1, self.q + 1)):
                raise DataError(f"arm {a} window set {sorted(ws)} outside 1..{self.q}")
            sets[a] = ws
        object.__setattr__(self, "window_sets", sets)
        bounds = tuple((float(s), float(e)) for s, e in self.calendar_bounds)
        for w, (s, e) in enumerate(bounds, start=1):
            if not s < e:
                raise DataError(f"window {w} bounds ({s}, {e}) are not increasing")
        object.__setattr__(self, "calendar_bounds", bounds)

    def arms_in_window(self, w: int) -> tuple:
        """Active arms under randomization in window w."""
        return tuple(a for a in range(1, self.k + 1) if w in self.window_sets[a])

    @property
    def control_windows(self) -> frozenset:
        """Windows with any enrollment: the union of all arm window sets."""
        return frozenset().union(*self.window_sets.values())

    @classmethod
    def from_json(cls, text: str) -> "TrialDesign":
        obj = json.loads(text)
        try:
            return cls(
                k=int(obj["k"]),
                q=int(obj["q"]),
                tau=float(obj["tau"]),
                window_sets={int(a): frozenset(ws) for a, ws in obj["window_sets"].items()},
                calendar_bounds=tuple(tuple(b) for b in obj["calendar_bounds"]),
            )
        except KeyError as exc:
            raise DataError(f"design JSON missing field {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "q": self.q,
                "tau": self.tau,
                "window_sets": {str(a): sorted(ws) for a, ws in self.window_sets.items()},
                "calendar_bounds": [list(b) for b in self.calendar_bounds],
            },
            indent=2,
        )


@dataclass(frozen=True)
class CoarseningMap:
    """Deterministic coarsening v = g(z) of the baseline covariate.

    ``mapping`` sends each z label to its v label. The identity map models
    fully stratified analyses; a constant map models marginal analyses.
    """

    mapping: dict

    def __post_init__(self):
        if not self.mapping:
            raise DataError("coarsening map is empty")
        object.__setattr__(self, "mapping", {str(z): str(v) for z, v in self.mapping.items()})

    def __call__(self, z: str) -> str:
        try:
            return self.mapping[str(z)]
        except KeyError:
            raise DataError(f"z label {z!r} not covered by the coarsening map") from None

    def group(self, v: str) -> tuple:
        """All z labels with g(z) = v, in sorted order."""
        return tuple(sorted(z for z, vv in self.mapping.items() if vv == str(v)))

    @property
    def v_labels(self) -> tuple:
        return tuple(sorted(set(self.mapping.values())))

    @classmethod
    def identity(cls, z_labels) -> "CoarseningMap":
        return cls({z: z for z in z_labels})

    @classmethod
    def constant(cls, z_labels, v_label="all") -> "CoarseningMap":
        return cls({z: v_label for z in z_labels})

    @classmethod
    def from_json(cls, text: str) -> "CoarseningMap":
        return cls(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.mapping, indent=2, sort_keys=True)


@dataclass(frozen=True)
class ParticipantRecord:
    """One participant's observed data."""

    id: str
    x: float
    delta: int
    arm: int
    window: int
    z: str
    v: str


class Dataset:
    """Immutable columnar container for one trial's records.

    Columns are numpy arrays; z and v labels are interned to integer codes
    for fast stratified computation. Construct via :func:`load_dataset`,
    :meth:`from_arrays`, or :meth:`from_records`.
    """

    def __init__(self, ids, x, delta, arm, window, z_codes, z_labels, design, coarsening, kind="platform"):
        self.kind = str(kind)
        self.ids = np.asarray(ids, dtype=object)
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        self.delta = np.ascontiguousarray(delta, dtype=np.int8)
        self.arm = np.ascontiguousarray(arm, dtype=np.int32)
        self.window = np.ascontiguousarray(window, dtype=np.int32)
        self.z_codes = np.ascontiguousarray(z_codes, dtype=np.int32)
        self.z_labels = tuple(str(z) for z in z_labels)
        self.design = design
        self.coarsening = coarsening
        n = self.x.shape[0]
        for name in ("ids", "delta", "arm", "window", "z_codes"):
            if getattr(self, name).shape[0] != n:
                raise DataError(f"column {name} length mismatch")
        self._check_values()
        v_of_z = np.array([self.coarsening(z) for z in self.z_labels], dtype=object)
        self.v_labels = tuple(sorted(set(v_of_z.tolist())))
        v_index = {v: i for i, v in enumerate(self.v_labels)}
        z_to_v = np.array([v_index[v] for v in v_of_z], dtype=np.int32)
        self.v_codes = z_to_v[self.z_codes] if n else np.empty(0, dtype=np.int32)
        for arr in (self.x, self.delta, self.arm, self.window, self.z_codes, self.v_codes):
            arr.setflags(write=False)

    def _check_values(self):
        if np.any(~np.isfinite(self.x)) or np.any(self.x < 0):
            raise DataError("follow-up times must be finite and nonnegative")
        if not np.all((self.delta == 0) | (self.delta == 1)):
            raise DataError("delta must be 0 or 1")
        if np.any(self.arm < 0) or np.any(self.arm > self.design.k):
            raise DataError("arm labels must lie in 0..k")
        if np.any(self.window < 1) or np.any(self.window > self.design.q):
            raise DataError("window labels must lie in 1..q")
        if self.kind.startswith("separate:"):
            a = int(self.kind.split(":", 1)[1])
            if not np.all((self.arm == 0) | (self.arm == a)):
                raise DataError(f"separate({a}) dataset may only contain arms 0 and {a}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def z_code(self, z_label: str) -> int:
        try:
            return self.z_labels.index(str(z_label))
        except ValueError:
            raise DataError(f"unknown z label {z_label!r}") from None

    def v_code(self, v_label: str) -> int:
        try:
            return self.v_labels.index(str(v_label))
        except ValueError:
            raise DataError(f"unknown v label {v_label!r}") from None

    def window_mask(self, windows) -> np.ndarray:
        """Boolean mask of records enrolled in any of the given windows."""
        return np.isin(self.window, list(windows))

    def records(self):
        """Iterate over ParticipantRecord views (slow path, for small data)."""
        for i in range(self.n):
            z = self.z_labels[self.z_codes[i]]
            yield ParticipantRecord(
                id=str(self.ids[i]),
                x=float(self.x[i]),
                delta=int(self.delta[i]),
                arm=int(self.arm[i]),
                window=int(self.window[i]),
                z=z,
                v=self.coarsening(z),
            )

    @classmethod
    def from_arrays(cls, ids, x, delta, arm, window, z, design, coarsening, kind="platform") -> "Dataset":
        """Build from parallel columns, interning z labels in sorted order."""
        z = np.asarray([str(s) for s in z], dtype=object)
        labels = sorted(set(z.tolist()) | set(coarsening.mapping.keys()))
        index = {lab: i for i, lab in enumerate(labels)}
        codes = np.array([index[s] for s in z], dtype=np.int32)
        return cls(ids, x, delta, arm, window, codes, labels, design, coarsening, kind=kind)

    @classmethod
    def from_records(cls, records, design, coarsening) -> "Dataset":
        rows = list(records)
        return cls.from_arrays(
            ids=[r.id for r in rows],
            x=[r.x for r in rows],
            delta=[r.delta for r in rows],
            arm=[r.arm for r in rows],
            window=[r.window for r in rows],
            z=[r.z for r in rows],
            design=design,
            coarsening=coarsening,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "x", "delta", "arm", "window", "z"])
        for i in range(self.n):
            writer.writerow(
                [
                    self.ids[i],
                    np.format_float_positional(self.x[i], trim="0"),
                    self.delta[i],
                    self.arm[i],
                    self.window[i],
                    self.z_labels[self.z_codes[i]],
                ]
            )
        return buf.getvalue()

    def subset(self, mask) -> "Dataset":
        """New Dataset keeping records where mask is True (same design)."""
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            self.ids[mask],
            self.x[mask],
            self.delta[mask],
            self.arm[mask],
            self.window[mask],
            self.z_codes[mask],
            self.z_labels,
            self.design,
            self.coarsening,
            kind=self.kind,
        )


def _parse_records_csv(text: str, design=None, coarsening=None):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["id", "x", "delta", "arm", "window", "z"]
    if header is None or [h.strip() for h in header] != expected:
        raise DataError(f"records CSV header must be {','.join(expected)}")
    ids, xs, deltas, arms, windows, zs = [], [], [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 6:
            raise DataError(f"line {lineno}: expected 6 fields, got {len(row)}")
        try:
            x, delta, arm, window = float(row[1]), int(row[2]), int(row[3]), int(row[4])
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc
        if not (np.isfinite(x) and x >= 0.0):
            raise DataError(f"negative observed time, line {lineno}")
        if delta not in (0, 1):
            raise DataError(f"event indicator must be 0 or 1, line {lineno}")
        if design is not None:
            if not 0 <= arm <= design.k:
                raise DataError(f"unknown arm label {arm}, line {lineno}")
            if not 1 <= window <= design.q:
                raise DataError(f"unknown window label {window}, line {lineno}")
        if coarsening is not None and row[5] not in coarsening.mapping:
            raise DataError(f"unknown covariate label {row[5]!r}, line {lineno}")
        ids.append(row[0])
        xs.append(x)
        deltas.append(delta)
        arms.append(arm)
        windows.append(window)
        zs.append(row[5])
    return ids, xs, deltas, arms, windows, zs


def load_dataset(records_csv, design_json, coarsening_json=None) -> Dataset:
    """Load a Dataset from file paths or literal text.

    Each argument is a path to a file, or the file's content itself
    (detected by attempting to open the path). A missing coarsening
    defaults to the constant map (marginal analyses, v = "all").
    """

    def read(source):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                return fh.read()
        except (OSError, ValueError):
            return source

    design = TrialDesign.from_json(read(design_json))
    coarsening = None if coarsening_json is None else CoarseningMap.from_json(read(coarsening_json))
    ids, xs, deltas, arms, windows, zs = _parse_records_csv(read(records_csv), design, coarsening)
    if coarsening is None:
        coarsening = CoarseningMap.constant(sorted(set(zs)) or ["z"])
    return Dataset.from_arrays(ids, xs, deltas, arms, windows, zs, design, coarsening)


@dataclass
class ValidationReport:
    """Structural health report for a Dataset.

    ``arm_window_violations`` lists records whose arm appears outside its
    design windows. ``empty_av`` lists (arm, v) pairs with no intervention-arm
    records in the arm's window set. ``empty_risk_sets`` lists (arm, window
    set, z) strata with no records at risk at time 0. ``undefined_rr`` lists
    (arm, v) pairs whose relative risk is undefined because the control or
    intervention side of the stratum is empty.
    """

    n: int
    arm_window_violations: list = field(default_factory=list)
    empty_av: list = field(default_factory=list)
    empty_risk_sets: list = field(default_factory=list)
    undefined_rr: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (
            self.arm_window_violations
            or self.empty_av
            or self.empty_risk_sets
            or self.undefined_rr
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "clean": self.clean,
                "arm_window_violations": self.arm_window_violations,
                "empty_av": self.empty_av,
                "empty_risk_sets": self.empty_risk_sets,
                "undefined_rr": self.undefined_rr,
            },
            indent=2,
        )


def validate(dataset: Dataset) -> ValidationReport:
    """Report structural problems without raising.

    Downstream estimators fail hard on violated preconditions; this gives a
    full picture first.
    """
    design = dataset.design
    report = ValidationReport(n=dataset.n)

    for a in range(1, design.k + 1):
        in_arm = dataset.arm == a
        bad = in_arm & ~dataset.window_mask(design.window_sets[a])
        for i in np.flatnonzero(bad):
            report.arm_window_violations.append(
                {"id": str(dataset.ids[i]), "arm": a, "window": int(dataset.window[i])}
            )

    for a in range(1, design.k + 1):
        wmask = dataset.window_mask(design.window_sets[a])
        for v in dataset.v_labels:
            vmask = dataset.v_codes == dataset.v_code(v)
            if not np.any(wmask & vmask & (dataset.arm == a)):
                report.empty_av.append({"arm": a, "v": v})
            # relative risk needs control records too, within the same windows
            has_ctrl = np.any(wmask & vmask & (dataset.arm == 0))
            has_arm = np.any(wmask & vmask & (dataset.arm == a))
            if not (has_ctrl and has_arm):
                report.undefined_rr.append({"arm": a, "v": v})

    for a in range(1, design.k + 1):
        wmask = dataset.window_mask(design.window_sets[a])
        for side in (a, 0):
            smask = wmask & (dataset.arm == side)
            for zc, z in enumerate(dataset.z_labels):
                if not np.any(smask & (dataset.z_codes == zc)):
                    report.empty_risk_sets.append(
                        {"arm": side, "window_set": sorted(design.window_sets[a]), "z": z}
                    )
    return report
