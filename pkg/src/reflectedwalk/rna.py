"""Loop-penalized stack scoring of nucleotide sequences and its significance.

A stack pairs y_i with y_j and extends outward: (i, j), (i-1, j+1), ...  The
statistic is the best total pair score plus a nonpositive penalty of the loop
length j - i - 1.  Grouping stacks by their center turns the maximization into
reflected-walk recursions, one walk per center and spacing parity, with
barriers derived from the loop penalty; that yields an O(n^2) scan whose
output is checked exactly against the O(n^3) direct evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from reflectedwalk import asymptotics as asymptotics_mod
from reflectedwalk import barrier as barrier_mod
from reflectedwalk import estimators as estimators_mod
from reflectedwalk import model as model_mod
from reflectedwalk import streams
from reflectedwalk.errors import (
    NonNegativeMeanScore,
    ReflectedWalkError,
    SpecParseError,
)

ALPHABET = "acgu"
_CODE = {c: i for i, c in enumerate(ALPHABET)}
_OP_NULL = 7

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Sequence:
    letters: str  # normalized lowercase acgu
    had_t: bool = False

    def __post_init__(self):
        if not self.letters:
            raise ValueError("sequence must be nonempty")

    @property
    def codes(self) -> np.ndarray:
        return np.array([_CODE[c] for c in self.letters], dtype=np.int64)

    def __len__(self):
        return len(self.letters)


def parse_sequence(text: str) -> Sequence:
    """Plain text or FASTA (">" headers skipped); whitespace ignored; t -> u."""
    letters = []
    had_t = False
    pos = 0
    for line in text.splitlines() or [text]:
        if line.startswith(">"):
            continue
        for ch in line:
            if ch.isspace():
                continue
            pos += 1
            c = ch.lower()
            if c == "t":
                c = "u"
                had_t = True
            if c not in _CODE:
                raise SpecParseError(f"invalid letter {ch!r} at position {pos}")
            letters.append(c)
    if not letters:
        raise SpecParseError("no sequence letters found")
    return Sequence("".join(letters), had_t=had_t)


@dataclass(frozen=True)
class ScoreFunction:
    """4x4 pair-score table indexed by (left letter, right letter) in acgu order."""

    table: tuple  # 4 rows of 4 floats

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=float)
        if arr.shape != (4, 4) or not np.isfinite(arr).all():
            raise ValueError("score table must be a finite 4x4 matrix")
        object.__setattr__(self, "table", tuple(tuple(float(x) for x in row) for row in arr))

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.table, dtype=float)


def watson_crick_scores(match=1.0, mismatch=-1.0) -> ScoreFunction:
    """+1 for a-u and c-g pairings (both orientations), -1 otherwise by default."""
    arr = np.full((4, 4), mismatch)
    for x, y in (("a", "u"), ("u", "a"), ("c", "g"), ("g", "c")):
        arr[_CODE[x], _CODE[y]] = match
    return ScoreFunction(tuple(map(tuple, arr)))


@dataclass(frozen=True)
class ZeroPenalty:
    def __call__(self, loop_len: int) -> float:
        return 0.0


@dataclass(frozen=True)
class LinearLoop:
    """Penalty -beta * max(0, loop_len - 1); free for loops of length 0 or 1."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "beta", float(self.beta))

    def __call__(self, loop_len: int) -> float:
        return -self.beta * max(0, loop_len - 1)


@dataclass(frozen=True)
class TablePenalty:
    """Explicit penalties for loop lengths 0..N, extended by the tail slope."""

    values: tuple
    tail_slope: float | None = None  # default: last table difference

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) < 2 or values[0] != 0.0 or values[1] != 0.0:
            raise ValueError("penalty table must start with g(0) = g(1) = 0")
        if any(v > 0.0 for v in values):
            raise ValueError("penalties must be nonpositive")
        slope = self.tail_slope if self.tail_slope is not None else values[-1] - values[-2]
        if slope > 0.0:
            raise ValueError("tail slope must be nonpositive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tail_slope", float(slope))

    def __call__(self, loop_len: int) -> float:
        if loop_len < len(self.values):
            return self.values[loop_len]
        return self.values[-1] + (loop_len - (len(self.values) - 1)) * self.tail_slope


PenaltyFunction = ZeroPenalty | LinearLoop | TablePenalty


def parse_penalty(spec: str) -> PenaltyFunction:
    """``zero | linear:beta=<r> | table:<v0,v1,...>[:slope=<r>]``."""
    spec = spec.strip()
    if spec == "zero":
        return ZeroPenalty()
    if spec.startswith("linear:beta="):
        try:
            return LinearLoop(float(spec[len("linear:beta="):]))
        except ValueError as exc:
            raise SpecParseError(str(exc)) from exc
    if spec.startswith("table:"):
        bits = spec[len("table:"):].split(":")
        slope = None
        if len(bits) == 2 and bits[1].startswith("slope="):
            slope = float(bits[1][len("slope="):])
        elif len(bits) != 1:
            raise SpecParseError(f"bad penalty spec {spec!r}")
        try:
            return TablePenalty(tuple(float(v) for v in bits[0].split(",")), slope)
        except ValueError as exc:
            raise SpecParseError(str(exc)) from exc
    raise SpecParseError(f"unknown penalty spec {spec!r}")


def reflection_barriers(pen: PenaltyFunction) -> tuple:
    """Barriers for the two spacing parities: g1(k) = pen(2k+1), g2(k) = pen(2k)."""
    if isinstance(pen, ZeroPenalty):
        return barrier_mod.ZeroBarrier(), barrier_mod.ZeroBarrier()
    if isinstance(pen, LinearLoop):
        g1 = barrier_mod.LinearBarrier(2.0 * pen.beta)
        g2 = barrier_mod.TableBarrier((0.0, -pen.beta, -3.0 * pen.beta), "slope")
        return g1, g2
    # table penalty: materialize both parities past the table, then extend linearly
    half = (len(pen.values) + 1) // 2 + 2
    g1_vals = tuple(pen(2 * k + 1) for k in range(half))
    g2_vals = tuple(pen(2 * k) for k in range(half))
    return (
        barrier_mod.TableBarrier(g1_vals, "slope"),
        barrier_mod.TableBarrier(g2_vals, "slope"),
    )


@dataclass(frozen=True)
class StackRecord:
    """Innermost pair (i, j), 1-based, with m+1 pairs in total."""

    i: int
    j: int
    m: int


@dataclass(frozen=True)
class ScanResult:
    m_y: float  # -inf sentinel when no pair is admissible
    argmax: StackRecord | None
    n: int
    per_center_max: dict | None = None


@njit(cache=True)
def _brute_core(codes, f, pen_vals):  # pragma: no cover - exercised via wrapper
    n = codes.size
    best = -np.inf
    bi = bj = bm = -1
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            acc = pen_vals[j - i - 1]
            mmax = min(i - 1, n - j)
            for k in range(0, mmax + 1):
                acc = acc + f[codes[i - k - 1], codes[j + k - 1]]
                if acc > best:
                    best = acc
                    bi, bj, bm = i, j, k
    return best, bi, bj, bm


@njit(cache=True)
def _scan_core(codes, f, g1, g2):  # pragma: no cover - exercised via wrapper
    n = codes.size
    best = -np.inf
    bi = bj = bm = -1
    # even spacing: pairs (n0 - l, n0 + l), walk reflected at g1
    for n0 in range(2, n):
        limit = n0 - 1 if n0 - 1 < n - n0 else n - n0
        w = g1[0]
        kw = 0
        for m in range(1, limit + 1):
            v = w + f[codes[n0 - m - 1], codes[n0 + m - 1]]
            if v > best:
                best = v
                bi, bj, bm = n0 - (kw + 1), n0 + (kw + 1), m - kw - 1
            if v >= g1[m]:
                w = v
            else:
                w = g1[m]
                kw = m
    # odd spacing: pairs (n0 - l, n0 + 1 + l), walk reflected at g2
    for n0 in range(1, n):
        limit = n0 - 1 if n0 - 1 < n - n0 - 1 else n - n0 - 1
        if limit < 0:
            continue
        w = -np.inf
        kw = 0
        for m in range(0, limit + 1):
            if g2[m] > w:
                w = g2[m]
                kw = m
            w = w + f[codes[n0 - m - 1], codes[n0 + m]]
            if w > best:
                best = w
                bi, bj, bm = n0 - kw, n0 + 1 + kw, m - kw
    return best, bi, bj, bm


def _penalty_array(pen, max_loop):
    return np.array([pen(l) for l in range(max_loop + 1)], dtype=float)


def scan_bruteforce(seq: Sequence, f: ScoreFunction, pen: PenaltyFunction) -> ScanResult:
    """Exhaustive O(n^3) evaluation over all stacks; the oracle for the scan."""
    n = len(seq)
    pen_vals = _penalty_array(pen, n)
    best, bi, bj, bm = _brute_core(seq.codes, f.matrix, pen_vals)
    if bi < 0:
        return ScanResult(NEG_INF, None, n)
    return ScanResult(float(best), StackRecord(bi, bj, bm), n)


def scan_reflected(seq: Sequence, f: ScoreFunction, pen: PenaltyFunction) -> ScanResult:
    """Per-center reflected-walk scan, O(n^2); exactly equals the brute force.

    Structures with zero pairs (pure penalty terms) never enter the reported
    statistic: in the even-parity recursion the candidate value is read before
    the reflection is applied, and every odd-parity value carries a pair.
    """
    n = len(seq)
    half = n // 2 + 2
    g1 = np.array([pen(2 * k + 1) for k in range(half)], dtype=float)
    g2 = np.array([pen(2 * k) for k in range(half)], dtype=float)
    best, bi, bj, bm = _scan_core(seq.codes, f.matrix, g1, g2)
    if bi < 0:
        return ScanResult(NEG_INF, None, n)
    return ScanResult(float(best), StackRecord(bi, bj, bm), n)


def rescore(seq: Sequence, f: ScoreFunction, pen: PenaltyFunction, rec: StackRecord) -> float:
    """Value of the stack described by ``rec``, summed innermost to outermost."""
    codes = seq.codes
    acc = pen(rec.j - rec.i - 1)
    for k in range(rec.m + 1):
        acc += f.matrix[codes[rec.i - k - 1], codes[rec.j + k - 1]]
    return acc


def induced_increment(f: ScoreFunction, base_probs) -> model_mod.DiscreteTable:
    """Law of a single pair score under i.i.d. letters with the given base frequencies."""
    base = np.asarray(base_probs, dtype=float)
    if base.shape != (4,) or abs(base.sum() - 1.0) > 1e-9 or (base < 0).any():
        raise ValueError("base_probs must be 4 nonnegative probabilities summing to 1")
    agg: dict[float, float] = {}
    for x in range(4):
        for y in range(4):
            p = base[x] * base[y]
            if p > 0.0:
                s = f.matrix[x, y]
                agg[s] = agg.get(s, 0.0) + p
    values = tuple(sorted(agg))
    return model_mod.DiscreteTable(values, tuple(agg[v] for v in values))


@dataclass(frozen=True)
class SignificanceReport:
    theta_star: float
    c_d1: float
    c_d2: float
    c_b: float
    k_star: float
    lattice_span: float | None
    k_star_low: float  # arithmetic-case lower bracket; equals k_star on-lattice
    c_d1_stderr: float = 0.0
    c_d2_stderr: float = 0.0
    c_b_stderr: float = 0.0
    method: str = "exact-dp"


def significance_constants(f: ScoreFunction, base_probs, pen: PenaltyFunction, *,
                           n_samples=200_000, eps=1e-10, seed=0, tol=1e-12,
                           workers=1) -> SignificanceReport:
    """The constant (C_D1 + C_D2) * C_B for the p-value approximation."""
    model = induced_increment(f, base_probs)
    if model_mod.mean(model) >= 0.0:
        raise NonNegativeMeanScore(
            f"induced pair-score mean {model_mod.mean(model)} is not negative"
        )
    tm = model_mod.solve_theta_star(model)
    theta = tm.theta_star
    g1, g2 = reflection_barriers(pen)
    for name, g in (("g1", g1), ("g2", g2)):
        verdict = barrier_mod.classify_finiteness(g, theta)
        if verdict.verdict != "finite":
            raise ReflectedWalkError(
                f"parity barrier {name} is not provably finite: {verdict.reason}"
            )
    span = model_mod.lattice_span(model)

    if span is not None:
        c_b = asymptotics_mod.ladder_exact(tm.tilted, theta, tol=tol).c_b
        c_b_se = 0.0
    else:
        summary = asymptotics_mod.overshoot_factor_mc(tm.tilted, theta, 50.0,
                                                      n_samples, seed, workers)
        c_b, c_b_se = summary.c_b, summary.c_b_stderr

    cds = []
    method = "exact-dp"
    for op_shift, g in ((0, g1), (1, g2)):
        if span is not None and barrier_mod.on_lattice(g, span):
            dd = estimators_mod.d_distribution_dp(tm, g, tol=tol)
            cds.append((dd.c_d, 0.0))
        else:
            est = asymptotics_mod.estimate_cd_mc(tm, g, n_samples, seed + op_shift,
                                                 eps=eps, workers=workers)
            cds.append((est.c_d, est.stderr))
            method = "mc"
    (c_d1, se1), (c_d2, se2) = cds
    k_star = (c_d1 + c_d2) * c_b
    if span is not None and not (barrier_mod.on_lattice(g1, span)
                                 and barrier_mod.on_lattice(g2, span)):
        k_star_low = k_star * math.exp(-theta * span)
    else:
        k_star_low = k_star
    return SignificanceReport(
        theta_star=theta, c_d1=c_d1, c_d2=c_d2, c_b=c_b, k_star=k_star,
        lattice_span=span, k_star_low=k_star_low,
        c_d1_stderr=se1, c_d2_stderr=se2, c_b_stderr=c_b_se, method=method,
    )


def p_value(n: int, report: SignificanceReport, u: float) -> float:
    """1 - exp(-n * K_star * exp(-theta_star * u)), clamped to [0, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if u < 0:
        raise ValueError("u must be >= 0")
    val = 1.0 - math.exp(-n * report.k_star * math.exp(-report.theta_star * u))
    return min(max(val, 0.0), 1.0)


def p_value_band(n: int, report: SignificanceReport, u: float) -> tuple:
    """(low, high) band propagating the arithmetic-case constant bracket."""
    low = 1.0 - math.exp(-n * report.k_star_low * math.exp(-report.theta_star * u))
    return (min(max(low, 0.0), 1.0), p_value(n, report, u))


def sample_null(base_probs, n: int, rng) -> Sequence:
    """i.i.d. sequence of length n from the base frequencies."""
    if n < 1:
        raise ValueError("n must be >= 1")
    base = np.asarray(base_probs, dtype=float)
    codes = rng.choice(4, size=n, p=base)
    return Sequence("".join(ALPHABET[c] for c in codes))


def null_statistics(f: ScoreFunction, base_probs, pen: PenaltyFunction, n: int,
                    n_seqs: int, seed: int, workers=1) -> np.ndarray:
    """Scan statistics of i.i.d. null sequences, one value per replicate."""
    matrix = f.matrix
    half = n // 2 + 2
    g1 = np.array([pen(2 * k + 1) for k in range(half)], dtype=float)
    g2 = np.array([pen(2 * k) for k in range(half)], dtype=float)
    base = np.asarray(base_probs, dtype=float)

    def block(rng, count, start_index):
        out = np.empty(count)
        for i in range(count):
            codes = rng.choice(4, size=n, p=base).astype(np.int64)
            out[i] = _scan_core(codes, matrix, g1, g2)[0]
        return out

    return streams.run_blocks(block, seed, _OP_NULL, n_seqs, workers=workers)
