"""
Forecast-error statistics: t-tests, Holm-Bonferroni correction and the
hypothesis report table
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import betainc

from vnv.exceptions import (
    DegenerateTestError, InvalidInputError, InvalidPairingError,
)
from vnv.timeseries import WINDOW_FRACTIONS

logger = logging.getLogger(__name__)

HOLM_PAPER_NAIVE = 'paper-naive'
HOLM_STANDARD = 'standard'
HOLM_MODES = (HOLM_PAPER_NAIVE, HOLM_STANDARD)

WINDOW_PERCENT = {'half': '50%', 'third': '33%', 'quarter': '25%'}

# Pairwise hypotheses of equal mean error, in report order
HYPOTHESES: List[Tuple[str, str]] = [
    ('half', 'third'),
    ('half', 'quarter'),
    ('quarter', 'third'),
]

REPORT_COLUMNS = ['hypothesis', 'p_raw', 'p_corrected', 'n']


def hypothesis_label(first: str, second: str) -> str:
    return f"|tc_hat - tc|_{WINDOW_PERCENT[first]} = |tc_hat - tc|_{WINDOW_PERCENT[second]}"


@dataclass
class ErrorSample:
    """Absolute critical-time errors of one window class, keyed by run id"""
    window_class: str
    errors: Dict[str, float]

    def __post_init__(self):
        if self.window_class not in WINDOW_FRACTIONS:
            raise InvalidInputError(f"unknown window class '{self.window_class}'")
        for run_id, value in self.errors.items():
            if not (math.isfinite(value) and value >= 0):
                raise InvalidInputError(f"{run_id}: error must be finite and >= 0, got {value}")

    def __len__(self) -> int:
        return len(self.errors)

    def values(self, ids: Optional[Sequence[str]] = None) -> np.ndarray:
        ids = sorted(self.errors) if ids is None else ids
        return np.array([self.errors[i] for i in ids], dtype=float)


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    dof: float
    p_value: float
    paired: bool
    n: int


@dataclass(frozen=True)
class HypothesisTestRow:
    label: str
    p_raw: float
    p_corrected: float
    n: int
    t_stat: float = 0.0

    def to_dict(self) -> dict:
        return {
            'hypothesis': self.label, 'p_raw': self.p_raw, 'p_corrected': self.p_corrected,
            'n': self.n, 't_stat': self.t_stat,
        }


def student_t_two_sided(t_stat: float, dof: float) -> float:
    """P(|T| >= |t|) for Student's t, via the regularized incomplete beta"""
    if not dof > 0:
        raise InvalidInputError(f"degrees of freedom must be > 0, got {dof}")
    p = float(betainc(0.5 * dof, 0.5, dof / (dof + t_stat * t_stat)))
    return min(1.0, max(0.0, p))


def t_test(a: ErrorSample, b: ErrorSample, paired: bool = True) -> TTestResult:
    """
    Two-sided t-test of equal mean error

    Paired mode tests the per-run differences a - b against zero and needs
    identical run ids; unpaired mode is Welch's test. Identical samples
    (all differences zero) give t = 0, p = 1.
    """
    if paired:
        if set(a.errors) != set(b.errors):
            raise InvalidPairingError(
                f"paired test needs identical run ids ({a.window_class}: {len(a)}, {b.window_class}: {len(b)})"
            )
        ids = sorted(a.errors)
        diff = a.values(ids) - b.values(ids)
        n = diff.size
        if n < 2:
            raise InvalidInputError("paired test needs at least 2 runs")
        mean = float(diff.mean())
        sd = float(diff.std(ddof=1))
        if sd == 0:
            if mean == 0:
                return TTestResult(t_stat=0.0, dof=float(n - 1), p_value=1.0, paired=True, n=n)
            raise DegenerateTestError(
                f"{a.window_class}-{b.window_class}: zero variance with mean difference {mean:.6g}"
            )
        t_stat = mean / (sd / math.sqrt(n))
        dof = float(n - 1)
        return TTestResult(t_stat, dof, student_t_two_sided(t_stat, dof), True, n)

    xa, xb = a.values(), b.values()
    na, nb = xa.size, xb.size
    if na < 2 or nb < 2:
        raise InvalidInputError("Welch test needs at least 2 observations per sample")
    va = float(xa.var(ddof=1)) / na
    vb = float(xb.var(ddof=1)) / nb
    mean = float(xa.mean() - xb.mean())
    if va + vb == 0:
        if mean == 0:
            return TTestResult(t_stat=0.0, dof=float(na + nb - 2), p_value=1.0, paired=False, n=min(na, nb))
        raise DegenerateTestError(
            f"{a.window_class}-{b.window_class}: zero variance with mean difference {mean:.6g}"
        )
    t_stat = mean / math.sqrt(va + vb)
    # Welch-Satterthwaite
    dof = (va + vb) ** 2 / (va * va / (na - 1) + vb * vb / (nb - 1))
    return TTestResult(t_stat, dof, student_t_two_sided(t_stat, dof), False, min(na, nb))


def holm_bonferroni(p_raw: Sequence[float], mode: str = HOLM_PAPER_NAIVE) -> List[float]:
    """
    Holm step-down multipliers applied to raw p-values, in input order

    The k-th smallest (1-based) is multiplied by (m - k + 1). paper-naive
    stops there, so values above 1 survive and ordering is not enforced;
    standard carries the running maximum and caps at 1.
    """
    if mode not in HOLM_MODES:
        raise InvalidInputError(f"Holm mode must be one of {HOLM_MODES}, got '{mode}'")
    p = np.asarray(p_raw, dtype=float)
    if p.size == 0:
        raise InvalidInputError("Holm correction needs at least one p-value")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidInputError("p-values must lie in [0, 1]")

    m = p.size
    order = np.argsort(p, kind='stable')
    adjusted = np.empty(m)
    running = 0.0
    for k, idx in enumerate(order):
        value = p[idx] * (m - k)
        if mode == HOLM_STANDARD:
            running = max(running, value)
            value = min(1.0, running)
        adjusted[idx] = value
    return [float(v) for v in adjusted]


def mean_absolute_error(sample: ErrorSample) -> float:
    if len(sample) == 0:
        raise InvalidInputError(f"{sample.window_class}: no errors to average")
    return float(np.mean(sample.values()))


def _limit_test(a: ErrorSample, b: ErrorSample) -> TTestResult:
    """Constant nonzero paired difference: the t-statistic diverges and p -> 0"""
    ids = sorted(a.errors)
    mean = float(np.mean(a.values(ids) - b.values(ids)))
    return TTestResult(math.copysign(math.inf, mean), float(len(ids) - 1), 0.0, True, len(ids))


def run_hypothesis_tests(samples: Dict[str, ErrorSample], paired: bool = True,
                         mode: str = HOLM_PAPER_NAIVE) -> List[HypothesisTestRow]:
    """
    Pairwise window-class tests with Holm-corrected p-values

    Only hypotheses whose two classes are both present are tested. A paired
    comparison with constant nonzero differences is reported at its limit
    (p = 0) instead of aborting the report.
    """
    hypotheses = [(a, b) for a, b in HYPOTHESES if a in samples and b in samples]
    if not hypotheses:
        return []
    results = []
    for first, second in hypotheses:
        try:
            results.append(t_test(samples[first], samples[second], paired=paired))
        except DegenerateTestError as exc:
            if not paired:
                raise
            logger.warning(f"{exc}; reporting p = 0")
            results.append(_limit_test(samples[first], samples[second]))
    corrected = holm_bonferroni([r.p_value for r in results], mode)
    return [
        HypothesisTestRow(hypothesis_label(first, second), r.p_value, c, r.n, r.t_stat)
        for (first, second), r, c in zip(hypotheses, results, corrected)
    ]


def _float_or_nan(value) -> float:
    return math.nan if value is None else float(value)


@dataclass
class ReportTable:
    """Hypothesis rows, per-class mean absolute error and run provenance"""
    rows: List[HypothesisTestRow]
    mae: Dict[str, float]
    n: int
    fingerprint: str
    algorithm: str = 'subordinated'
    paired: bool = True
    holm_mode: str = HOLM_PAPER_NAIVE
    runs_total: int = 0
    # skip reason -> count; runs_total = n + sum(skipped.values())
    skipped: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'rows': [row.to_dict() for row in self.rows],
            'mae': dict(self.mae),
            'n': self.n,
            'fingerprint': self.fingerprint,
            'algorithm': self.algorithm,
            'paired': self.paired,
            'holm_mode': self.holm_mode,
            'runs_total': self.runs_total,
            'skipped': dict(self.skipped),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ReportTable':
        rows = [
            HypothesisTestRow(
                r['hypothesis'], float(r['p_raw']), float(r['p_corrected']), int(r['n']),
                _float_or_nan(r.get('t_stat')),
            )
            for r in data['rows']
        ]
        return cls(
            rows=rows,
            mae={k: float(v) for k, v in data['mae'].items()},
            n=int(data['n']),
            fingerprint=data['fingerprint'],
            algorithm=data.get('algorithm', 'subordinated'),
            paired=bool(data.get('paired', True)),
            holm_mode=data.get('holm_mode', HOLM_PAPER_NAIVE),
            runs_total=int(data.get('runs_total', data['n'])),
            skipped={k: int(v) for k, v in data.get('skipped', {}).items()},
        )

    def to_frame(self) -> pd.DataFrame:
        """CSV view; corrected values above 1 read '>1' in paper-naive mode"""
        records = []
        for row in self.rows:
            corrected = format(row.p_corrected, '.17g')
            if self.holm_mode == HOLM_PAPER_NAIVE and row.p_corrected > 1:
                corrected = '>1'
            records.append({
                'hypothesis': row.label,
                'p_raw': format(row.p_raw, '.17g'),
                'p_corrected': corrected,
                'n': row.n,
            })
        return pd.DataFrame(records, columns=REPORT_COLUMNS)


def _format_p(value: float) -> str:
    return '>1' if value > 1 else f"{value:.2f}"


def render_report_table(report: ReportTable) -> str:
    """
    Aligned text table: Hypothesis | P-value | P-value* | N

    N appears on the first row only, as the sample size shared by all tests,
    followed by a mean-absolute-error footer.
    """
    header = ['Hypothesis', 'P-value', 'P-value*', 'N']
    body = [
        [row.label, f"{row.p_raw:.2f}", _format_p(row.p_corrected), str(row.n) if i == 0 else '-']
        for i, row in enumerate(report.rows)
    ]
    widths = [max(len(r[c]) for r in [header] + body) for c in range(len(header))]
    lines = ['  '.join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in [header] + body]
    lines.insert(1, '  '.join('-' * w for w in widths))
    footer = '  '.join(
        f"MAE {WINDOW_PERCENT[cls]}: {report.mae[cls]:.6g}" for cls in WINDOW_FRACTIONS if cls in report.mae
    )
    lines.extend(['', footer, f"* Holm-Bonferroni ({report.holm_mode}), "
                              f"{'paired' if report.paired else 'Welch'} t-tests, config {report.fingerprint}"])
    if report.runs_total:
        skipped = ', '.join(f"{reason} {count}" for reason, count in report.skipped.items()) or 'none'
        lines.append(f"Runs: {report.n} used of {report.runs_total}; skipped: {skipped}")
    return '\n'.join(lines) + '\n'
