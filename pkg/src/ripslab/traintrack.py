"""Rose maps for free-group automorphisms: transition matrix, dilatation,
train-track and rotationless checks, direction dynamics, and the stable
Whitehead graph at the rose vertex.

A map is given by generator images over single lowercase letters, with
uppercase letters denoting inverses.  The 2n directions at the rose
vertex are the letters themselves; Df sends a direction to the first
letter of the image of the corresponding edge-end.  All numerics are
exact: the dilatation lives in a NumberField and eigenvector residuals
are identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

import sympy

from .scalar import NumberField, Scalar, field_define


class TrainTrackError(Exception):
    pass


class MapSyntaxError(TrainTrackError):
    pass


class UnknownGenerator(TrainTrackError):
    pass


class MissingInverse(TrainTrackError):
    pass


class NotPrimitive(TrainTrackError):
    def __init__(self, message: str, witness):
        super().__init__(message)
        self.witness = witness


class NotRotationless(TrainTrackError):
    pass


def inv_letter(c: str) -> str:
    return c.lower() if c.isupper() else c.upper()


def inv_word(w: str) -> str:
    return "".join(inv_letter(c) for c in reversed(w))


def free_reduce(w: str) -> str:
    out: list[str] = []
    for c in w:
        if out and out[-1] == inv_letter(c):
            out.pop()
        else:
            out.append(c)
    return "".join(out)


@dataclass(frozen=True)
class RoseMap:
    """Generator images of an endomorphism of a free group, on a rose."""

    generators: tuple[str, ...]
    images: dict[str, str]
    inverse_images: Optional[dict[str, str]] = None
    warnings: tuple[str, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.generators)

    def directions(self) -> tuple[str, ...]:
        return self.generators + tuple(g.upper() for g in self.generators)

    def image_of_letter(self, c: str) -> str:
        if c.islower():
            return self.images[c]
        return inv_word(self.images[c.lower()])

    def apply(self, word: str) -> str:
        return free_reduce("".join(self.image_of_letter(c) for c in word))

    def apply_inverse(self, word: str) -> str:
        if self.inverse_images is None:
            raise MissingInverse("no inverse images supplied")
        inv = RoseMap(self.generators, self.inverse_images)
        return inv.apply(word)

    def iterate(self, power: int) -> "RoseMap":
        if power < 1:
            raise ValueError("power must be >= 1")
        images = dict(self.images)
        inverses = dict(self.inverse_images) if self.inverse_images else None
        for _ in range(power - 1):
            images = {g: self.apply(images[g]) for g in self.generators}
            if inverses is not None:
                step = RoseMap(self.generators, dict(inverses))
                inverses = {g: step.apply(self.inverse_images[g])
                            for g in self.generators}
        return RoseMap(self.generators, images, inverses)


def compose(outer: RoseMap, inner: RoseMap) -> RoseMap:
    """The map x -> outer(inner(x)); generators must agree."""
    if outer.generators != inner.generators:
        raise TrainTrackError("generator mismatch")
    return RoseMap(outer.generators,
                   {g: outer.apply(inner.images[g]) for g in outer.generators})


def parse_map(text: str) -> RoseMap:
    """Parse `map a -> ab; b -> a` with an optional `inverse` section.

    Uppercase letters denote inverse generators.  Bare assignment lists
    without the `map` keyword are accepted.  Unreduced images are freely
    reduced with a warning.
    """
    body: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            body.append(line)
    flat = " ".join(body)
    if not flat:
        raise MapSyntaxError("empty map file")
    if flat.startswith("map "):
        flat = flat[4:]
    parts = flat.split(" inverse ")
    if len(parts) > 2:
        raise MapSyntaxError("more than one inverse section")

    def entries(section: str) -> list[tuple[str, str]]:
        out = []
        for chunk in section.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "->" not in chunk:
                raise MapSyntaxError(f"missing '->' in {chunk!r}")
            lhs, rhs = (s.strip() for s in chunk.split("->", 1))
            rhs = rhs.replace(" ", "")
            if not (len(lhs) == 1 and lhs.isalpha() and lhs.islower()):
                raise MapSyntaxError(f"bad generator name {lhs!r}")
            if not rhs or not rhs.isalpha():
                raise MapSyntaxError(f"bad image word {rhs!r} for {lhs}")
            out.append((lhs, rhs))
        return out

    fwd = entries(parts[0])
    if not fwd:
        raise MapSyntaxError("no generator images")
    gens = tuple(g for g, _ in fwd)
    if len(set(gens)) != len(gens):
        raise MapSyntaxError("repeated generator on the left-hand side")
    alphabet = set(gens) | {g.upper() for g in gens}
    warnings = []

    def check(table: list[tuple[str, str]], tag: str) -> dict[str, str]:
        images = {}
        for g, w in table:
            if g not in gens:
                raise UnknownGenerator(f"{tag} image given for unknown {g!r}")
            for c in w:
                if c not in alphabet:
                    raise UnknownGenerator(f"letter {c!r} in image of {g}")
            red = free_reduce(w)
            if not red:
                raise MapSyntaxError(f"image of {g} reduces to the identity")
            if red != w:
                warnings.append(f"{tag} image of {g} reduced: {w} -> {red}")
            images[g] = red
        return images

    images = check(fwd, "map")
    if set(images) != set(gens):
        raise MapSyntaxError("missing generator image")
    inverse_images = None
    if len(parts) == 2:
        inverse_images = check(entries(parts[1]), "inverse")
        if set(inverse_images) != set(gens):
            raise MapSyntaxError("missing inverse image")
    return RoseMap(gens, images, inverse_images, tuple(warnings))


def load_map(path: str) -> RoseMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read())


def verify_automorphism(m: RoseMap) -> tuple[bool, list[str]]:
    """Check both compositions reduce to the identity, with a transcript."""
    if m.inverse_images is None:
        raise MissingInverse("inverse images required")
    inv = RoseMap(m.generators, m.inverse_images)
    ok = True
    transcript = []
    for g in m.generators:
        fwd = m.apply(inv.images[g])
        transcript.append(f"f(f^-1({g})) = f({inv.images[g]}) = {fwd}")
        bwd = inv.apply(m.images[g])
        transcript.append(f"f^-1(f({g})) = f^-1({m.images[g]}) = {bwd}")
        if fwd != g or bwd != g:
            ok = False
    transcript.append("identity on every generator"
                      if ok else "composition is not the identity")
    return ok, transcript


# --- transition matrix and dilatation --------------------------------------

def transition_matrix(m: RoseMap) -> list[list[int]]:
    """M[i][j] = occurrences of generator i (either sign) in f(gen j).

    With columns indexed by source edges, M(f.g) = M(f) M(g) and the
    Perron-Frobenius eigenvector of the tribonacci map is (l^2, l, 1).
    """
    return [[sum(1 for c in m.images[h] if c.lower() == g)
             for h in m.generators] for g in m.generators]


def _mat_mul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)]


def _primitivity_exponent(mat) -> Optional[int]:
    n = len(mat)
    power = mat
    for k in range(1, (n - 1) ** 2 + 2):
        if all(x > 0 for row in power for x in row):
            return k
        power = _mat_mul(power, mat)
    return None


def _primitivity_witness(m: RoseMap, mat):
    """An invariant sub-block or a periodicity witness for NotPrimitive."""
    n = len(mat)
    reach = [[mat[i][j] > 0 for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                reach[i][j] = reach[i][j] or (reach[i][k] and reach[k][j])
    for i in range(n):
        for j in range(n):
            if not reach[i][j]:
                block = tuple(m.generators[t] for t in range(n) if reach[i][t]
                              or t == i)
                return ("invariant sub-block", block)
    return ("periodic", m.generators)


@dataclass(frozen=True)
class TransitionData:
    matrix: tuple[tuple[int, ...], ...]
    primitivity_exponent: int
    field: NumberField
    dilatation: Scalar
    eigenvector: tuple[Scalar, ...]

    def minimal_polynomial(self) -> tuple[Fraction, ...]:
        return self.field.minpoly


def _pf_field(mat) -> NumberField:
    """Number field of the largest real eigenvalue, by exact isolation.

    The characteristic polynomial is factored over Z; the factor whose
    real roots include the overall largest one becomes the minimal
    polynomial, and its isolating interval comes from root isolation on
    that factor (the classical trace bound can be slack, so intervals
    are computed, not guessed).
    """
    x = sympy.symbols("x")
    charpoly = sympy.Matrix(mat).charpoly(x)
    best = None
    for factor, _mult in sympy.factor_list(charpoly.as_expr())[1]:
        poly = sympy.Poly(factor, x)
        if poly.LC() < 0:
            poly = sympy.Poly(-factor, x)
        for (lo, hi), _k in poly.intervals():
            if best is None or hi > best[1]:
                best = (Fraction(lo.p, lo.q), Fraction(hi.p, hi.q), poly)
    if best is None:
        raise TrainTrackError("no real eigenvalue")
    lo, hi, poly = best
    coeffs = [Fraction(c.p, c.q) for c in reversed(poly.all_coeffs())]
    lead = coeffs[-1]
    coeffs = [c / lead for c in coeffs]
    return field_define(coeffs, lo, hi)


def _pf_eigenvector(mat, field: NumberField) -> tuple[Scalar, ...]:
    """Kernel vector of (M - lambda I), normalized so the last entry is 1."""
    n = len(mat)
    lam = field.gen
    rows = [[field.rational(mat[i][j]) - (lam if i == j else field.rational(0))
             for j in range(n)] for i in range(n)]
    # Gaussian elimination; the kernel is 1-dimensional since the
    # minimal polynomial is irreducible.
    pivots = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, n) if not rows[i][c].is_zero()), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pivot = rows[r][c]
        rows[r] = [v / pivot for v in rows[r]]
        for i in range(n):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        raise TrainTrackError("eigenspace is not one-dimensional")
    v = [field.rational(0)] * n
    v[free[0]] = field.rational(1)
    for row, c in zip(rows, pivots):
        v[c] = -row[free[0]]
    last = v[-1]
    if last.is_zero():
        raise TrainTrackError("degenerate eigenvector normalization")
    return tuple(x / last for x in v)


def transition(m: RoseMap) -> TransitionData:
    mat = transition_matrix(m)
    k = _primitivity_exponent(mat)
    if k is None:
        kind, block = _primitivity_witness(m, mat)
        raise NotPrimitive(f"transition matrix not primitive ({kind})", block)
    field = _pf_field(mat)
    vec = _pf_eigenvector(mat, field)
    lam = field.gen
    for i in range(len(mat)):
        resid = sum((field.rational(mat[i][j]) * vec[j]
                     for j in range(len(mat))), field.zero()) - lam * vec[i]
        if not resid.is_zero():
            raise TrainTrackError("nonzero eigenvector residual")
    return TransitionData(tuple(tuple(row) for row in mat), k, field,
                          lam, vec)


def approx_float(x: Scalar, eps: float = 1e-9) -> float:
    """A float within eps of the exact value, refining the field as needed."""
    lo, hi = x.enclosure()
    while hi - lo > eps and x.field is not None:
        x.field.refine()
        lo, hi = x.enclosure()
    return (lo + hi) / 2


# --- direction dynamics ----------------------------------------------------

def df(m: RoseMap, d: str) -> str:
    """Image direction: first letter of the image of the edge-end d."""
    return m.image_of_letter(d)[0]


@dataclass(frozen=True)
class DirectionMap:
    table: dict[str, str]
    orbits: tuple[tuple[tuple[str, ...], int], ...]
    fixed: tuple[str, ...]

    def periodic_directions(self) -> dict[str, int]:
        out = {}
        for orbit, period in self.orbits:
            for d in orbit:
                out[d] = period
        return out


def direction_dynamics(m: RoseMap) -> DirectionMap:
    dirs = m.directions()
    table = {d: df(m, d) for d in dirs}
    # Directions eventually land on cycles; report the cycles as orbits.
    orbits = []
    seen = set()
    for d in dirs:
        if d in seen:
            continue
        trail = []
        cur = d
        while cur not in trail:
            trail.append(cur)
            cur = table[cur]
        if cur in seen:
            continue
        cycle = trail[trail.index(cur):]
        seen.update(cycle)
        orbits.append((tuple(cycle), len(cycle)))
    orbits.sort(key=lambda o: o[0])
    fixed = tuple(d for d in dirs if table[d] == d)
    return DirectionMap(table, tuple(orbits), fixed)


def is_rotationless(m: RoseMap) -> bool:
    """True when every periodic direction of Df is fixed."""
    dm = direction_dynamics(m)
    return all(period == 1 for _, period in dm.orbits)


def rotationless_power(m: RoseMap) -> tuple[int, RoseMap]:
    """Smallest power killing direction rotation, with the composed map."""
    dm = direction_dynamics(m)
    p = lcm(*(period for _, period in dm.orbits))
    mp = m.iterate(p)
    if not is_rotationless(mp):
        raise TrainTrackError("rotationless power failed its re-check")
    return p, mp


# --- train-track check -----------------------------------------------------

def taken_turns(m: RoseMap, power_budget: int) -> set[frozenset]:
    """Unordered direction pairs occurring in some f^k(e), k <= budget."""
    turns: set[frozenset] = set()
    for g in m.generators:
        path = g
        for _ in range(power_budget):
            path = m.apply(path)
            for x, y in zip(path, path[1:]):
                pair = frozenset((inv_letter(x), y))
                if len(pair) == 2:
                    turns.add(pair)
    return turns


def check_train_track(m: RoseMap, power_budget: Optional[int] = None):
    """Certify the train-track property on the rose.

    A turn is illegal when some Df-iterate collapses it; since Df acts
    on 2n directions, 2n iterations decide legality, so the default
    budget is exact rather than heuristic.  Returns (True, None) or
    (False, (turn, iteration)).
    """
    if power_budget is None:
        power_budget = 2 * m.rank
    for pair in sorted(taken_turns(m, power_budget),
                       key=lambda p: tuple(sorted(p))):
        d1, d2 = sorted(pair)
        for j in range(1, 2 * m.rank + 1):
            d1, d2 = df(m, d1), df(m, d2)
            if d1 == d2:
                return False, (tuple(sorted(pair)), j)
    return True, None


# --- stable Whitehead graph ------------------------------------------------

@dataclass(frozen=True)
class WhGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def to_dot(self) -> str:
        lines = ["graph whitehead {"]
        for v in self.vertices:
            lines.append(f'  "{v}";')
        for u, v in self.edges:
            lines.append(f'  "{u}" -- "{v}";')
        lines.append("}")
        return "\n".join(lines)


def stable_whitehead_graph(m: RoseMap,
                           iterate_budget: Optional[int] = None) -> WhGraph:
    """Graph on fixed directions whose edges are the taken fixed turns."""
    if not is_rotationless(m):
        raise NotRotationless("apply rotationless_power first")
    if iterate_budget is None:
        iterate_budget = 2 * m.rank
    if iterate_budget < 1:
        raise ValueError("iterate_budget must be >= 1")
    fixed = set(direction_dynamics(m).fixed)
    edges = sorted(tuple(sorted(t)) for t in taken_turns(m, iterate_budget)
                   if t <= fixed)
    return WhGraph(tuple(sorted(fixed)), tuple(edges))
