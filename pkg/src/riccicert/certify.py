"""Grid plus Lipschitz-margin positivity certificates.

A field is sampled on a tensor grid over a box. If the gradient norm is
bounded by L, every point of the box lies within half a grid diagonal of a
node, so min(field) >= grid_min - L * diag / 2. That lower bound is the
margin; a positive margin certifies the claim.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
import math
import os

import numpy as np

from . import kernels

SAFETY = 4.0
VERIFIED, FALSIFIED, INCONCLUSIVE, GRID_POSITIVE = "Verified", "Falsified", "Inconclusive", "GridPositive"


class CertifyError(ValueError):
    pass


class EmptyDomain(CertifyError):
    pass


class NonFiniteFieldValue(CertifyError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"field is not finite at {point}")


class AlreadyDecided(CertifyError):
    pass


def default_threads():
    env = os.environ.get("RICCICERT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def default_grid(dim):
    return [512] * dim if dim <= 2 else [128] * dim


@dataclass
class PositivityCertificate:
    claim: str
    domain: list
    grid: list
    spacing: list
    grid_min: float
    argmin: list
    derivative_bound: float
    margin: float
    verdict: str
    witness: list = None
    witness_value: float = None
    mode: str = "certified"
    bound_source: str = "estimated"
    boxes: list = dc_field(default_factory=list)
    axis_bounds: list = None
    _field: object = dc_field(default=None, repr=False, compare=False)

    @property
    def diag(self):
        return math.sqrt(sum(d * d for d in self.spacing))

    def slack(self):
        """Worst drop from the nearest node: L diag / 2 for a gradient-norm
        bound, or sum_k L_k spacing_k / 2 with per-axis bounds (never larger,
        by Cauchy-Schwarz)."""
        if self.axis_bounds:
            return sum(b * d for b, d in zip(self.axis_bounds, self.spacing)) / 2
        return self.derivative_bound * self.diag / 2

    def to_json(self):
        out = {
            "claim": self.claim,
            "domain": [[float(a), float(b)] for a, b in self.domain],
            "grid": [int(n) for n in self.grid],
            "spacing": [float(d) for d in self.spacing],
            "grid_min": float(self.grid_min),
            "argmin": [float(x) for x in self.argmin],
            "derivative_bound": float(self.derivative_bound),
            "bound_source": self.bound_source,
            "margin": float(self.margin),
            "verdict": self.verdict,
            "mode": self.mode,
            "witness": None if self.witness is None else [float(x) for x in self.witness],
            "witness_value": None if self.witness_value is None else float(self.witness_value),
        }
        if self.axis_bounds:
            out["axis_bounds"] = [float(b) for b in self.axis_bounds]
        if self.boxes:
            out["boxes"] = [b.to_json() for b in self.boxes]
        return out

    @classmethod
    def from_json(cls, d):
        return cls(d["claim"], [tuple(x) for x in d["domain"]], d["grid"], d["spacing"], d["grid_min"],
                   d["argmin"], d["derivative_bound"], d["margin"], d["verdict"], d.get("witness"),
                   d.get("witness_value"), d.get("mode", "certified"), d.get("bound_source", "estimated"),
                   [cls.from_json(b) for b in d.get("boxes", [])], d.get("axis_bounds"))


def _axes(domain, grid):
    return [np.linspace(float(a), float(b), int(n)) for (a, b), n in zip(domain, grid)]


def evaluate_grid(field, axes, threads=None):
    """Field values on the tensor grid, shape (len(ax0), len(ax1), ...).

    The first axis is split into contiguous chunks that may run in parallel;
    results land in fixed positions, so the output does not depend on the
    schedule.
    """
    threads = threads or default_threads()
    n0 = len(axes[0])
    nchunks = max(1, min(threads, n0))
    bounds = np.linspace(0, n0, nchunks + 1).astype(int)

    def work(i):
        sub = [axes[0][bounds[i]:bounds[i + 1]]] + list(axes[1:])
        mesh = np.meshgrid(*sub, indexing="ij")
        vals = np.asarray(field(*mesh), dtype=float)
        return np.broadcast_to(vals, mesh[0].shape)

    if nchunks == 1:
        parts = [work(0)]
    else:
        with ThreadPoolExecutor(max_workers=nchunks) as ex:
            parts = list(ex.map(work, range(nchunks)))
    return np.concatenate(parts, axis=0)


def _point(axes, flat_index):
    idx = np.unravel_index(flat_index, [len(a) for a in axes])
    return [float(a[i]) for a, i in zip(axes, idx)]


def _reduce(values, axes):
    vmin, arg, bad = kernels.min_reduce(values)
    if bad >= 0:
        raise NonFiniteFieldValue(_point(axes, bad))
    return vmin, _point(axes, arg)


def estimate_axis_bounds(values, axes):
    """Per-axis bounds on |d field / d x_k| from finite differences."""
    out = []
    for k, ax in enumerate(axes):
        h = ax[1] - ax[0]
        out.append(float((np.abs(np.diff(values, axis=k)) / h).max()))
    return out


def estimate_lipschitz(values, axes):
    """Gradient-norm bound from finite differences on a sampled grid."""
    return math.sqrt(sum(b * b for b in estimate_axis_bounds(values, axes)))


def certify_positive(field, domain, grid=None, mode="certified", L=None, claim="field",
                     threads=None):
    """Certify field > 0 on the box `domain` (list of (lo, hi) per axis).

    field receives one array per axis (meshgrid, 'ij' order) and returns the
    values. In heuristic mode the verdict is GridPositive or Falsified.
    """
    domain = [(float(a), float(b)) for a, b in domain]
    if not domain or any(not b > a for a, b in domain):
        raise EmptyDomain(f"degenerate domain {domain}")
    grid = list(grid) if grid is not None else default_grid(len(domain))
    if len(grid) != len(domain) or any(n < 2 for n in grid):
        raise CertifyError("need at least two grid nodes per axis")
    if mode not in ("certified", "heuristic"):
        raise CertifyError(f"unknown mode {mode!r}")
    axes = _axes(domain, grid)
    spacing = [float(ax[1] - ax[0]) for ax in axes]
    vals = evaluate_grid(field, axes, threads)
    gmin, argmin = _reduce(vals, axes)
    cert = PositivityCertificate(claim, domain, grid, spacing, gmin, argmin, 0.0, gmin,
                                 INCONCLUSIVE, mode=mode, _field=field)
    if gmin <= 0:
        cert.verdict = FALSIFIED
        cert.witness, cert.witness_value = argmin, gmin
        cert.margin = gmin
        cert.bound_source = "none"
        return cert
    if mode == "heuristic":
        cert.verdict = GRID_POSITIVE
        cert.bound_source = "none"
        return cert
    if L is None:
        fine_axes = _axes(domain, [2 * n - 1 for n in grid])
        fine = evaluate_grid(field, fine_axes, threads)
        fmin, fpt = _reduce(fine, fine_axes)
        if fmin <= 0:
            cert.verdict = FALSIFIED
            cert.witness, cert.witness_value = fpt, fmin
            cert.margin = fmin
            cert.bound_source = "none"
            return cert
        cert.axis_bounds = [SAFETY * b for b in estimate_axis_bounds(fine, fine_axes)]
        cert.bound_source = "estimated"
        return _finish(cert, math.sqrt(sum(b * b for b in cert.axis_bounds)))
    cert.bound_source = "supplied"
    return _finish(cert, float(L))


def _finish(cert, L):
    cert.derivative_bound = L
    cert.margin = cert.grid_min - cert.slack()
    cert.verdict = VERIFIED if cert.margin > 0 else INCONCLUSIVE
    return cert


def refine(cert, factor=2, field=None):
    """Re-certify an Inconclusive certificate on a grid refined by `factor`
    with the same derivative bound. Both margins are valid lower bounds, so
    the better one is kept; the margin never decreases."""
    if cert.verdict != INCONCLUSIVE:
        raise AlreadyDecided(f"certificate is already {cert.verdict}")
    if int(factor) != factor or factor < 2:
        raise CertifyError("factor must be an integer >= 2")
    field = field or cert._field
    if field is None:
        raise CertifyError("no field attached; pass field=")
    grid = [(n - 1) * int(factor) + 1 for n in cert.grid]
    new = certify_positive(field, cert.domain, grid, cert.mode, L=cert.derivative_bound, claim=cert.claim)
    new.bound_source = cert.bound_source
    if cert.axis_bounds and new.verdict != FALSIFIED:
        new.axis_bounds = list(cert.axis_bounds)
        new.margin = new.grid_min - new.slack()
        new.verdict = VERIFIED if new.margin > 0 else INCONCLUSIVE
    if new.verdict == FALSIFIED:
        return new
    if cert.margin > new.margin:
        new.margin = cert.margin
        new.verdict = VERIFIED if new.margin > 0 else INCONCLUSIVE
    return new


def certify_boxes(field, boxes, grid=None, mode="certified", claim="field", threads=None,
                  max_depth=0, L=None):
    """Certify on a union of boxes, bisecting Inconclusive boxes up to
    max_depth times along the axis that contributes the most slack. Returns a composite certificate whose
    grid_min and margin are the minima over its boxes."""
    done = []
    queue = [(list(b), 0) for b in boxes]
    while queue:
        box, depth = queue.pop(0)
        c = certify_positive(field, box, grid, mode, L=L, claim=claim, threads=threads)
        if c.verdict == INCONCLUSIVE and depth < max_depth:
            k = 0
            if c.axis_bounds:
                k = int(np.argmax([b * d for b, d in zip(c.axis_bounds, c.spacing)]))
            a, b = box[k]
            mid = 0.5 * (a + b)
            lo, hi = list(box), list(box)
            lo[k], hi[k] = (a, mid), (mid, b)
            queue[0:0] = [(lo, depth + 1), (hi, depth + 1)]
            continue
        done.append(c)
    return combine(done, claim, mode)


def combine(certs, claim, mode="certified"):
    """Conjunction of certificates over boxes covering a domain."""
    if len(certs) == 1:
        c = certs[0]
        c.claim = claim
        return c
    lo = [min(c.domain[k][0] for c in certs) for k in range(len(certs[0].domain))]
    hi = [max(c.domain[k][1] for c in certs) for k in range(len(certs[0].domain))]
    best = min(certs, key=lambda c: (c.grid_min, c.argmin))
    verdicts = [c.verdict for c in certs]
    if FALSIFIED in verdicts:
        verdict = FALSIFIED
    elif all(v == VERIFIED for v in verdicts):
        verdict = VERIFIED
    elif all(v == GRID_POSITIVE for v in verdicts):
        verdict = GRID_POSITIVE
    else:
        verdict = INCONCLUSIVE
    wit = next((c for c in certs if c.verdict == FALSIFIED), None)
    out = PositivityCertificate(
        claim, list(zip(lo, hi)), list(certs[0].grid), [max(c.spacing[k] for c in certs) for k in range(len(lo))],
        best.grid_min, best.argmin, max(c.derivative_bound for c in certs),
        min(c.margin for c in certs), verdict,
        None if wit is None else wit.witness, None if wit is None else wit.witness_value,
        mode, "composite", list(certs))
    return out


def recheck(cert, field):
    """Independent re-validation: recompute witness sign and margin arithmetic.
    Returns a list of problems (empty when consistent)."""
    problems = []
    parts = cert.boxes or [cert]
    for c in parts:
        if c.verdict == FALSIFIED:
            v = float(np.asarray(field(*[np.asarray(x) for x in c.witness])))
            if not v <= 0:
                problems.append(f"{c.claim}: witness {c.witness} evaluates to {v} > 0")
        elif c.verdict in (VERIFIED, INCONCLUSIVE):
            m = c.grid_min - c.slack()
            if c.verdict == VERIFIED and not m > 0 and not c.margin > 0:
                problems.append(f"{c.claim}: margin arithmetic does not give a positive bound")
            axes = _axes(c.domain, c.grid)
            vals = evaluate_grid(field, axes, 1)
            gmin, _ = _reduce(vals, axes)
            if gmin != c.grid_min:
                problems.append(f"{c.claim}: grid minimum {gmin} differs from recorded {c.grid_min}")
    return problems
