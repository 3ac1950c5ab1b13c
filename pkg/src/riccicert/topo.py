"""Exact arithmetic for characteristic classes and component counting.

Bernoulli numbers, multiplicative sequences and their genera, the order of
bP_{4k}, lens-space Pontryagin data modulo m, and the ledger of invariants
that separates path components. Everything here is integer or Fraction
arithmetic; no floats.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement
from math import comb, factorial, gcd


class TopoError(ValueError):
    pass


class PartitionMismatch(TopoError):
    pass


class OutOfRange(TopoError):
    pass


class EvenModulus(TopoError):
    pass


class ReconciliationError(TopoError):
    pass


class BudgetExceeded(TopoError):
    def __init__(self, partial, examined):
        self.partial, self.examined = partial, examined
        super().__init__(f"budget exhausted after {examined} candidates; {len(partial)} admissible so far")


# ---- Bernoulli numbers ----

@lru_cache(maxsize=None)
def _bernoulli_all(n):
    """B_0..B_n with B_1 = -1/2, from sum_{i<=n} C(n+1, i) B_i = 0."""
    B = [Fraction(1)]
    for k in range(1, n + 1):
        B.append(-sum(comb(k + 1, i) * B[i] for i in range(k)) / Fraction(k + 1))
    return tuple(B)


def bernoulli(j):
    """The even-index Bernoulli number B_{2j}."""
    if j < 1:
        raise TopoError("j must be >= 1")
    return _bernoulli_all(2 * j)[2 * j]


# ---- partitions and polynomials in p_1, p_2, ... ----

@lru_cache(maxsize=None)
def partitions(k, largest=None):
    """Partitions of k as non-increasing tuples, in reverse lexicographic order."""
    if largest is None:
        largest = k
    if k == 0:
        return ((),)
    out = []
    for first in range(min(k, largest), 0, -1):
        for rest in partitions(k - first, first):
            out.append((first,) + rest)
    return tuple(out)


def _pmul(a, b, maxw):
    out = {}
    for ka, va in a.items():
        wa = sum(ka)
        for kb, vb in b.items():
            if wa + sum(kb) > maxw:
                continue
            key = tuple(sorted(ka + kb, reverse=True))
            out[key] = out.get(key, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def _padd(a, b, s=1):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + s * v
    return {k: v for k, v in out.items() if v != 0}


def _weight_part(a, w):
    return {k: v for k, v in a.items() if sum(k) == w}


def poly_text(poly, var="p"):
    """Readable form, e.g. '7/5760*p1^2 - 1/1440*p2'."""
    if not poly:
        return "0"
    terms = []
    for key in sorted(poly, reverse=True):
        c = poly[key]
        mono = "*".join(f"{var}{i}" + (f"^{key.count(i)}" if key.count(i) > 1 else "")
                        for i in sorted(set(key), reverse=True))
        terms.append(f"{c}*{mono}" if mono else f"{c}")
    return " + ".join(terms).replace("+ -", "- ")


# ---- characteristic power series ----

SERIES = ("ahat", "l")


def _series_name(series):
    s = series.lower().replace("-", "").replace("_", "")
    if s in ("ahat", "a", "â"):
        return "ahat"
    if s in ("l", "lgenus", "signature"):
        return "l"
    raise TopoError(f"unknown series {series!r}")


def series_bernoulli(series, k):
    """Coefficients b_0..b_k of Q(z), z = x^2, from Bernoulli closed forms.

    ahat: (x/2)/sinh(x/2), coefficient (2 - 2^{2j}) B_{2j} / (4^j (2j)!)
    l:    x/tanh(x),       coefficient 4^j B_{2j} / (2j)!
    """
    name = _series_name(series)
    out = [Fraction(1)]
    for j in range(1, k + 1):
        B = bernoulli(j)
        if name == "ahat":
            out.append((2 - 2 ** (2 * j)) * B / (4 ** j * factorial(2 * j)))
        else:
            out.append(4 ** j * B / factorial(2 * j))
    return out


def _series_div(num, den, k):
    q = []
    for i in range(k + 1):
        s = num[i] - sum(q[j] * den[i - j] for j in range(i))
        q.append(s / den[0])
    return q


def series_taylor(series, k):
    """Coefficients of Q(z) by dividing Taylor series of sinh/tanh; an
    independent route to series_bernoulli."""
    name = _series_name(series)
    if name == "ahat":
        # (y)/sinh(y) with y = x/2: sinh(y)/y = sum y^{2j}/(2j+1)!, y^2 = z/4
        den = [Fraction(1, factorial(2 * j + 1) * 4 ** j) for j in range(k + 1)]
        return _series_div([Fraction(1)] + [Fraction(0)] * k, den, k)
    # x/tanh x = x cosh x / sinh x = (sum z^j/(2j)!) / (sum z^j/(2j+1)!)
    num = [Fraction(1, factorial(2 * j)) for j in range(k + 1)]
    den = [Fraction(1, factorial(2 * j + 1)) for j in range(k + 1)]
    return _series_div(num, den, k)


# ---- multiplicative sequences: splitting-variable construction ----

@lru_cache(maxsize=None)
def _zero_one_count(rows, cols):
    """Number of 0-1 matrices with the given row and column sums."""
    if not rows:
        return 1 if all(c == 0 for c in cols) else 0
    r, rest = rows[0], rows[1:]
    total = 0
    idx = [i for i, c in enumerate(cols) if c > 0]
    for pick in combinations(idx, r):
        nc = list(cols)
        for i in pick:
            nc[i] -= 1
        total += _zero_one_count(rest, tuple(sorted(nc, reverse=True)))
    return total


def _solve_exact(M, y):
    n = len(y)
    A = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(M, y)]
    for col in range(n):
        piv = next(i for i in range(col, n) if A[i][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        for i in range(n):
            if i != col and A[i][col] != 0:
                f = A[i][col] / A[col][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[col])]
    return [A[i][n] / A[i][i] for i in range(n)]


def _splitting(coeffs, k):
    """K_k from prod_i Q(z_i): in the monomial symmetric basis the coefficient
    of m_lambda is prod_j b_{lambda_j}; convert to the elementary basis
    p_i = e_i(z) by solving e_mu = sum_lambda N(mu, lambda) m_lambda."""
    parts = partitions(k)
    mono = []
    for lam in parts:
        c = Fraction(1)
        for j in lam:
            c *= coeffs[j]
        mono.append(c)
    # m-coefficient of lambda in sum_mu a_mu e_mu equals sum_mu a_mu N(mu, lambda)
    M = [[_zero_one_count(mu, lam) for mu in parts] for lam in parts]
    a = _solve_exact(M, mono)
    return {mu: v for mu, v in zip(parts, a) if v != 0}


# ---- multiplicative sequences: Newton-identity construction ----

def _log_series(c, k):
    """log of a power series with c[0] = 1, truncated at degree k."""
    out = [Fraction(0)] * (k + 1)
    # d/dz log Q = Q'/Q
    for n in range(1, k + 1):
        s = n * c[n] - sum(j * out[j] * c[n - j] for j in range(1, n))
        out[n] = s / n
    return out


def _power_sums_in_e(k):
    """P_1..P_k as polynomials in e_1.. via Newton's identities."""
    P = {}
    for j in range(1, k + 1):
        acc = {(j,): Fraction((-1) ** (j - 1) * j)}
        for i in range(1, j):
            acc = _padd(acc, _pmul({(i,): Fraction((-1) ** (i - 1))}, P[j - i], k))
        P[j] = acc
    return P


def _newton(coeffs, k):
    """K_k = weight-k part of exp(sum_j l_j P_j(e)), l = log Q."""
    ell = _log_series(coeffs, k)
    P = _power_sums_in_e(k)
    X = {}
    for j in range(1, k + 1):
        X = _padd(X, {key: ell[j] * v for key, v in P[j].items()})
    total = {(): Fraction(1)}
    term = {(): Fraction(1)}
    for n in range(1, k + 1):
        term = {key: v / n for key, v in _pmul(term, X, k).items()}
        total = _padd(total, term)
    return _weight_part(total, k)


def mult_seq_polynomials(series, k, method="splitting"):
    """[K_1, ..., K_k] as dicts partition -> Fraction (a partition (2,1,1)
    stands for p2*p1*p1)."""
    if k < 1 or k > 8:
        raise OutOfRange("k must satisfy 1 <= k <= 8")
    if method == "splitting":
        coeffs = series_bernoulli(series, k)
        return [_splitting(coeffs, j) for j in range(1, k + 1)]
    if method == "newton":
        coeffs = series_taylor(series, k)
        return [_newton(coeffs, j) for j in range(1, k + 1)]
    raise TopoError(f"unknown method {method!r}")


# ---- genera ----

@dataclass(frozen=True)
class PontryaginData:
    k: int
    numbers: dict  # partition tuple -> int

    def __post_init__(self):
        keys = set(self.numbers)
        want = set(partitions(self.k))
        if keys != want:
            raise PartitionMismatch(f"numbers must be indexed by the partitions of {self.k}; "
                                    f"missing {sorted(want - keys)}, extra {sorted(keys - want)}")

    @classmethod
    def from_json(cls, d):
        k = int(d["k"])
        nums = {}
        for key, v in d["numbers"].items():
            part = tuple(sorted((int(x) for x in str(key).replace(" ", "").split(",") if x), reverse=True))
            nums[part] = int(v)
        return cls(k, nums)

    def to_json(self):
        return {"k": self.k, "numbers": {",".join(map(str, p)): int(v) for p, v in sorted(self.numbers.items())}}


def zero_data(k):
    return PontryaginData(k, {p: 0 for p in partitions(k)})


def genus(data, series, k=None):
    if k is not None and k != data.k:
        raise PartitionMismatch(f"data has k={data.k}, requested {k}")
    K = mult_seq_polynomials(series, data.k)[-1]
    return sum((c * data.numbers[mu] for mu, c in K.items()), Fraction(0))


def genus_connected_sum(d1, d2, series):
    """Genus of M1 # M2: Pontryagin numbers of a connected sum add."""
    if d1.k != d2.k:
        raise PartitionMismatch(f"dimensions differ: k={d1.k} and k={d2.k}")
    total = PontryaginData(d1.k, {p: d1.numbers[p] + d2.numbers[p] for p in d1.numbers})
    return genus(total, series)


# ---- bP_{4k} ----

BP_TABLE = {2: 28, 3: 992, 4: 8128, 5: 261632}


def _bp_closed_form(k):
    """2^{2k-2} (2^{2k-1} - 1) numerator(4 B_{2k} / k)."""
    return 2 ** (2 * k - 2) * (2 ** (2 * k - 1) - 1) * abs((4 * bernoulli(k) / k).numerator)


def _bp_with_ak(k):
    """a_k 2^{2k-2} (2^{2k-1} - 1) numerator(B_{2k} / 4k), a_k = 1 or 2 for k even or odd."""
    a = 1 if k % 2 == 0 else 2
    return a * 2 ** (2 * k - 2) * (2 ** (2 * k - 1) - 1) * abs((bernoulli(k) / (4 * k)).numerator)


def bp_order_report(k):
    if not 2 <= k <= 8:
        raise OutOfRange("bp_order is implemented for 2 <= k <= 8")
    closed = _bp_closed_form(k)
    alt = _bp_with_ak(k)
    if closed != alt:
        raise ReconciliationError(f"k={k}: closed forms disagree ({closed} vs {alt})")
    table = BP_TABLE.get(k)
    if table is not None and table != closed:
        raise ReconciliationError(f"k={k}: formula {closed} disagrees with table {table}")
    return {"k": k, "b_k": closed, "closed_form": closed, "a_k_form": alt, "table": table,
            "status": "reconciled" if table is not None else "unreconciled"}


def bp_order(k):
    """Order b_k of the cyclic group bP_{4k}."""
    return bp_order_report(k)["b_k"]


# ---- lens spaces ----

@dataclass(frozen=True)
class LensSpace:
    m: int
    q: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(int(x) for x in self.q))
        if self.m < 1:
            raise TopoError("m must be >= 1")
        if len(self.q) == 0 or len(self.q) % 2:
            raise TopoError("need an even number 2k of rotation numbers")
        for x in self.q:
            if gcd(x, self.m) != 1:
                raise TopoError(f"q={x} is not a unit mod {self.m}")

    @property
    def k(self):
        return len(self.q) // 2


def elementary_symmetric_mod(values, upto, m):
    """e_0..e_upto of values, reduced mod m (m = 0 keeps integers)."""
    e = [1] + [0] * upto
    for v in values:
        for i in range(upto, 0, -1):
            e[i] = e[i] + e[i - 1] * v
            if m:
                e[i] %= m
    return e


def lens_total_pontryagin(L):
    """[c_1..c_k], c_i = e_i(q_1^2, ..., q_2k^2) mod m: the coefficients of
    a^{2i} in prod (1 + q_j^2 a^2)."""
    e = elementary_symmetric_mod([x * x for x in L.q], L.k, L.m)
    return [x % L.m for x in e[1:]]


def lens_admissible(L):
    """e_i(q^2) = 0 mod m for 1 <= i <= k-1 (i = k lands in H^{4k} = 0)."""
    if L.m % 2 == 0:
        raise EvenModulus(f"m={L.m} is even")
    c = lens_total_pontryagin(L)
    return all(x == 0 for x in c[:L.k - 1])


def lens_report(L):
    c = lens_total_pontryagin(L)
    return {"m": L.m, "q": list(L.q), "k": L.k, "coefficients": c,
            "checked_range": [1, L.k - 1], "admissible": lens_admissible(L),
            "admissible_full_range": all(x == 0 for x in c)}


def _rep(x, m):
    x %= m
    return min(x, m - x)


def canonical_tuple(q, m):
    """Lexicographically least form of q under reordering, signs and unit scaling."""
    best = None
    for u in range(1, m):
        if gcd(u, m) != 1:
            continue
        cand = tuple(sorted(_rep(u * x, m) for x in q))
        if best is None or cand < best:
            best = cand
    return best if best is not None else tuple(sorted(_rep(x, m) for x in q))


@dataclass
class LensSearchResult:
    m: int
    k: int
    tuples: list = field(default_factory=list)
    examined: int = 0
    exhaustive: bool = True


def lens_search(m, k, budget=None):
    """All admissible classes of L(m; q_1..q_2k) up to reorder, sign and unit scaling.

    Raises BudgetExceeded (carrying the partial list) if more than `budget`
    candidate multisets would need to be examined.
    """
    if m % 2 == 0:
        raise EvenModulus(f"m={m} is even")
    if m < 3:
        raise TopoError("m must be >= 3")
    reps = [x for x in range(1, (m - 1) // 2 + 1) if gcd(x, m) == 1]
    res = LensSearchResult(m, k)
    for cand in combinations_with_replacement(reps, 2 * k):
        if budget is not None and res.examined >= budget:
            res.exhaustive = False
            raise BudgetExceeded(res.tuples, res.examined)
        res.examined += 1
        if canonical_tuple(cand, m) != cand:
            continue
        if lens_admissible(LensSpace(m, cand)):
            res.tuples.append(cand)
    return res


# ---- component ledger ----

@dataclass
class ComponentLedger:
    k: int
    Q: tuple
    c: Fraction = Fraction(1)
    s0: Fraction = Fraction(0)

    def __post_init__(self):
        self.c = Fraction(self.c)
        self.s0 = Fraction(self.s0)
        self.Q = tuple(int(x) for x in self.Q)
        if self.c == 0:
            raise TopoError("the constant c must be nonzero")

    @property
    def b_k(self):
        return bp_order(self.k)


def lower_bound(m, k):
    """floor(m / b_k): the count of distinct path components forced."""
    return m // bp_order(k)


def component_ledger_eval(led, m=None):
    b = led.b_k
    gaps = {(q, qq): led.c * (q - qq) for q in led.Q for qq in led.Q}
    by_value = {}
    for q in led.Q:
        by_value.setdefault(abs(led.s0 + led.c * q), []).append(q)
    classes = [sorted(v) for _, v in sorted(by_value.items())]
    out = {"k": led.k, "b_k": b, "c": led.c, "s0": led.s0, "ahat_gaps": gaps,
           "s_classes": classes, "s_values": sorted(by_value),
           "sigma": {q: 8 * q * b for q in led.Q}}
    if m is not None:
        out["m"] = m
        out["lower_bound"] = m // b
    return out
