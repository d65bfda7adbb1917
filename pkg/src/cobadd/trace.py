"""Per-iteration run records and the fixed CSV schema.

Column semantics (one row per recorded iteration k = 1..K):

=============  ==========================================================
k              iteration index
f_ergodic      cost of the ergodic primal iterate x^k
viol_ineq      max(0, sum_i g_i(x_i^k))
viol_lmi       max(0, -lambda_min(A0 + sum_i A_i x_i^k))
q_best_node    max over nodes of the dual value at that node's duals
q_mean         mean over nodes of the same
disagreement   max_i ( |mu_i - mu_bar| + ||G_i - G_bar||_F )
messages_cum   messages exchanged to produce the state recorded at row k
bound_upper    theoretical bound on f(x^k) - f*
bound_lower    theoretical bound on f* - f(x^k)
beta_k         agreement envelope beta_k (NaN when inapplicable)
=============  ==========================================================

The centralized baseline writes zeros for disagreement / messages_cum
and NaN for beta_k; its bound columns carry the master-node analysis
with the realized dual norms.  Floats are rendered with ``repr`` so the
files are byte-stable across identical runs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

TRACE_COLUMNS = ("k", "f_ergodic", "viol_ineq", "viol_lmi", "q_best_node",
                 "q_mean", "disagreement", "messages_cum", "bound_upper",
                 "bound_lower", "beta_k")

_INT_COLUMNS = {"k", "messages_cum"}


@dataclass
class RunTrace:
    """One solver run: config echo, per-iteration columns, extras."""

    config: dict
    k: np.ndarray
    f_ergodic: np.ndarray
    viol_ineq: np.ndarray
    viol_lmi: np.ndarray
    q_best_node: np.ndarray
    q_mean: np.ndarray
    disagreement: np.ndarray
    messages_cum: np.ndarray
    bound_upper: np.ndarray
    bound_lower: np.ndarray
    beta_k: np.ndarray
    bounds: object | None = None
    mu_disagreement: np.ndarray | None = None
    G_disagreement: np.ndarray | None = None
    mu_history: np.ndarray | None = None
    G_history: np.ndarray | None = None
    final_mus: np.ndarray | None = None
    final_Gs: np.ndarray | None = None
    lambda_realized: float | None = None
    gamma_realized: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        K = len(self.k)
        for name in TRACE_COLUMNS:
            col = getattr(self, name)
            if len(col) != K:
                raise ValueError(f"column {name} has {len(col)} rows, expected {K}")
        if np.any(np.diff(self.messages_cum) < 0):
            raise ValueError("messages_cum must be nondecreasing")

    @property
    def iterations(self) -> int:
        return len(self.k)

    def column(self, name: str) -> np.ndarray:
        if name not in TRACE_COLUMNS:
            raise KeyError(name)
        return getattr(self, name)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(TRACE_COLUMNS) + "\n")
        cols = [getattr(self, name) for name in TRACE_COLUMNS]
        for row in range(len(self.k)):
            cells = []
            for name, col in zip(TRACE_COLUMNS, cols):
                v = col[row]
                cells.append(str(int(v)) if name in _INT_COLUMNS else repr(float(v)))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a trace CSV back into column arrays (schema-checked)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out: dict[str, np.ndarray] = {}
    for j, name in enumerate(TRACE_COLUMNS):
        vals = [row[j] for row in rows]
        if name in _INT_COLUMNS:
            out[name] = np.array([int(v) for v in vals])
        else:
            out[name] = np.array([float(v) for v in vals])
    return out
