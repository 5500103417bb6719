"""Named desk-scale experiments with reproducible JSON reports.

Each experiment evaluates its expected values from closed formulas at the
configured parameters and compares them with values computed by the library.
Reports carry a checksum over the canonical JSON of ``config`` and
``result``; timing lives outside the checksummed section.
"""

from __future__ import annotations

import hashlib
import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .autos import (
    AbelianAction,
    Central,
    Flip,
    MulUnit,
    PhiP,
    QuadraticHalf,
    Sigma,
    build_explicit,
    emid_indices,
    stilde_decomposition,
)
from .matgroups import GroupTag, commutator, elem, from_rows, identity, truncated_borel
from .rings import (
    FieldTooSmall,
    IdentityAuto,
    LaurentFlip,
    LaurentRing,
    MonogenicOrder,
    OrderRootMap,
    PolyAffine,
    PolyRing,
    PrimeField,
    RingElem,
    enumerate_polys,
    field_of_order,
    find_flip_unit,
    find_irreducible,
    fixed_submodule_rank,
    order_auto_matrix,
    prime_power,
)
from .twisted import (
    brute_force_reidemeister,
    canonical_representative,
    certify_infinite_family,
    class_representatives,
    laurent_b2_decide,
    map_order,
    parity_invariant,
    reidemeister_fg_abelian,
)

SCHEMA_VERSION = "1"


class SpectraError(ValueError):
    pass


class UnknownExperiment(SpectraError):
    pass


class InvalidParams(SpectraError):
    pass


class SchemaViolation(SpectraError):
    pass


class IoFailure(SpectraError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def to_json(self) -> dict:
        return {"name": self.name, "params": dict(sorted(self.params.items())), "seed": self.seed}


@dataclass
class Check:
    name: str
    expected: Any
    computed: Any

    @property
    def match(self) -> bool:
        return self.expected == self.computed

    def to_json(self) -> dict:
        return {"name": self.name, "expected": self.expected, "computed": self.computed, "match": self.match}


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    checks: list[Check]
    details: dict
    wall_seconds: float

    @property
    def all_match(self) -> bool:
        return all(c.match for c in self.checks)

    def checksummed(self) -> dict:
        return {
            "config": self.config.to_json(),
            "result": {
                "checks": [c.to_json() for c in self.checks],
                "all_match": self.all_match,
                "details": self.details,
            },
        }

    def to_json(self) -> dict:
        body = self.checksummed()
        return {
            "schema_version": SCHEMA_VERSION,
            "library_version": __version__,
            **body,
            "checksum": checksum(body),
            "timing": {"wall_seconds": round(self.wall_seconds, 3)},
        }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def checksum(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class Experiment:
    name: str
    run: Callable[[dict, int], tuple[list[Check], dict]]
    defaults: dict
    validate: Callable[[dict], None]
    summary: str


REGISTRY: dict[str, Experiment] = {}


def register(name: str, defaults: dict, summary: str, validate: Callable[[dict], None] | None = None):
    def deco(fn):
        REGISTRY[name] = Experiment(name, fn, defaults, validate or (lambda p: None), summary)
        return fn

    return deco


def _field_or_invalid(q) -> Any:
    if not isinstance(q, int) or prime_power(q) is None:
        raise InvalidParams(f"q = {q!r} is not a prime power")
    return field_of_order(q)


def _require_int(params: dict, key: str, lo: int, hi: int | None = None) -> None:
    v = params[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < lo or (hi is not None and v > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise InvalidParams(f"{key} = {v!r} must be an integer in {bound}")


# ---------------------------------------------------------------------------
# Experiments


def _validate_truncated(p):
    _field_or_invalid(p["q"])
    _require_int(p, "D", 1, 5)
    if (p["D"] + 1) % 2:
        raise InvalidParams("D + 1 must be a multiple of deg P = 2")


@register("prop61", {"q": 3, "D": 3}, "brute-force counts on truncated U_2, PB_2, B_2 over F_q[t]", _validate_truncated)
def _truncated_counts(params, seed):
    q, D = params["q"], params["D"]
    F = field_of_order(q)
    R = PolyRing(F)
    P = find_irreducible(F, 2)
    cases = [
        ("U2", GroupTag.UNIPOTENT, PhiP(2, R, GroupTag.UNIPOTENT, P, 1), 1),
        ("PB2", GroupTag.PROJ_BOREL, build_explicit("phiAP", R, P=P), q - 1),
        ("B2", GroupTag.BOREL, build_explicit("phiBP", R, P=P), (q - 1) ** 2),
    ]
    checks, details = [], {"P": str(P), "orders": {}}
    for label, tag, psi, expected in cases:
        G = truncated_borel(F, D, 2, tag)
        count, _ = brute_force_reidemeister(G, psi)
        details["orders"][label] = len(G)
        checks.append(Check(f"R({psi.describe()}) on truncated {label}", expected, count))
    return checks, details


def _validate_laurent(p):
    F = _field_or_invalid(p["q"])
    if F.q <= 3:
        raise InvalidParams("the explicit Laurent automorphisms need q >= 4")
    _require_int(p, "samples", 1)
    _require_int(p, "support", 0, 20)


def random_b2_plus(R: LaurentRing, tag: GroupTag, rng: random.Random, support: int) -> Any:
    """(t^i, f; t^j) with i, j and the support of f in [-support, support]."""
    F = R.base
    elems = F.elements()
    i = 0 if tag is GroupTag.UNIPOTENT else rng.randint(-support, support)
    j = 0 if tag is GroupTag.UNIPOTENT else rng.randint(-support, support)
    f = R.from_coeff_map({e: elems[rng.randrange(F.q)] for e in range(-support, support + 1)})
    return from_rows([[R.monomial(i), f], [0, R.monomial(j)]], R, tag)


@register("prop63", {"q": 5, "samples": 200, "support": 6},
          "class representatives and pairwise decisions on B_2^+ type groups over F_q[t, t^-1]", _validate_laurent)
def _laurent_classes(params, seed):
    q, n_samples, support = params["q"], params["samples"], params["support"]
    F = field_of_order(q)
    R = LaurentRing(F)
    rng = random.Random(seed)
    expected_counts = {"phiB": 4, "phiA": 2, "phiprime": 1}
    checks, details = [], {"a": str(find_flip_unit(F))}
    for kind, expected in expected_counts.items():
        psi = build_explicit(kind, R)
        tag = GroupTag(psi.tag)
        reps = class_representatives(psi)
        seen, agree, verified = set(), 0, 0
        for _ in range(n_samples):
            b = random_b2_plus(R, tag, rng, support)
            bp = random_b2_plus(R, tag, rng, support)
            rep, _ = canonical_representative(b, psi)
            seen.add(reps.index(rep))
            report = laurent_b2_decide(b, bp, psi)
            same = parity_invariant(b, kind) == parity_invariant(bp, kind)
            agree += (report.verdict == "witness") == same
            verified += report.verified
        distinct = sum(
            laurent_b2_decide(x, y, psi).verdict == "distinct" for k, x in enumerate(reps) for y in reps[:k]
        )
        checks.append(Check(f"R({kind}) = number of representatives", expected, len(reps)))
        checks.append(Check(f"{kind}: representatives pairwise distinct", expected * (expected - 1) // 2, distinct))
        checks.append(Check(f"{kind}: witness iff parities match", n_samples, agree))
        checks.append(Check(f"{kind}: verdicts re-verified", n_samples, verified))
        checks.append(Check(f"{kind}: samples cover every class", expected, len(seen)))
    return checks, details


def _validate_affine(p):
    if p["p"] not in (2, 3, 5, 7):
        raise InvalidParams("p must be a small prime")
    _require_int(p, "i_max", 2, 6)


@register("sec51", {"p": 2, "i_max": 3}, "distinctness certificates for affine automorphisms of F_p[t]", _validate_affine)
def _affine_families(params, seed):
    p, i_max = params["p"], params["i_max"]
    F = PrimeField(p)
    R = PolyRing(F)
    checks, details = [], {}
    for a in range(1, p):
        for b in range(p):
            L = PolyAffine(R, F(a), F(b))
            for doubled in (False, True):
                rep = certify_infinite_family(R, L, "sec51", i_max, doubled=doubled)
                pairs = rep.certificate["pairs"]
                label = f"t -> {a}t+{b}{' doubled' if doubled else ''}"
                checks.append(Check(f"{label}: certified distinct pairs", i_max * (i_max - 1) // 2,
                                    sum(1 for e in pairs if e["distinct"])))
                checks.append(Check(f"{label}: verdict", "infinite", rep.verdict))
                details[label] = [e.get("certificate", {}).get("kind") for e in pairs]
    return checks, details


def _validate_monomial(p):
    F = _field_or_invalid(p["q"])
    if F.q < 3:
        raise InvalidParams("q must be at least 3")
    _require_int(p, "i_max", 2, 8)


@register("sec52", {"q": 5, "i_max": 5}, "monomial families under the automorphisms t -> t^(+-1) of F_q[t, t^-1]",
          _validate_monomial)
def _monomial_families(params, seed):
    q, i_max = params["q"], params["i_max"]
    F = field_of_order(q)
    R = LaurentRing(F)
    checks = []
    for eps in (0, 1):
        L = LaurentFlip(R, eps)
        checks.append(Check(f"order of t -> t^{(-1) ** eps}", 2 if eps else 1, map_order(L, R)))
        for doubled in (False, True):
            rep = certify_infinite_family(R, L, "monomial", i_max, doubled=doubled)
            label = f"eps={eps}{' doubled' if doubled else ''}"
            checks.append(Check(f"{label}: certified distinct pairs", i_max * (i_max - 1) // 2,
                                sum(1 for e in rep.certificate["pairs"] if e["distinct"])))
    return checks, {}


@register("sec53", {}, "fixed submodules of automorphisms of monogenic orders")
def _orders(params, seed):
    gauss = MonogenicOrder((1, 0, 1))
    cubic = MonogenicOrder((-2, 0, 0, 1))
    cases = [
        ("identity on Z[i]", IdentityAuto(gauss)),
        ("conjugation on Z[i]", OrderRootMap(gauss, (0, -1))),
        ("identity on Z[x]/(x^3-2)", IdentityAuto(cubic)),
    ]
    checks = []
    for label, sigma in cases:
        rank = fixed_submodule_rank(sigma)
        checks.append(Check(f"{label}: fixed rank >= 1", True, rank >= 1))
        verdict = reidemeister_fg_abelian(order_auto_matrix(sigma)).verdict
        checks.append(Check(f"{label}: Reidemeister verdict", "infinite", verdict))
    return checks, {}


def _validate_emid(p):
    _require_int(p, "n", 3, 7)
    _field_or_invalid(p["q"])


@register("emid", {"n": 4, "q": 5}, "middle subgroup of U_n and the flip action on it", _validate_emid)
def _emid(params, seed):
    n, q = params["n"], params["q"]
    F = field_of_order(q)
    mid = emid_indices(n)
    action = AbelianAction(n, F, Flip(n, F, GroupTag.UNIPOTENT))
    rng = random.Random(seed)
    elems = F.elements()
    identity_hits = swap_hits = 0
    trials = 20
    for _ in range(trials):
        coords = [elems[rng.randrange(q)] for _ in mid]
        img = action.emid(coords)
        identity_hits += img == coords
        swap_hits += img == coords[::-1]
    copies = 1 if n % 2 == 0 else 2
    checks = [
        Check("number of middle positions", copies, len(mid)),
        Check("middle positions", [n // 2] if copies == 1 else [n // 2, n // 2 + 1], list(mid)),
        Check("flip acts on E_mid as" + (" identity" if copies == 1 else " swap"), trials,
              identity_hits if copies == 1 else swap_hits),
    ]
    return checks, {}


def _validate_identities(p):
    _require_int(p, "n_max", 3, 6)
    _require_int(p, "samples", 1)
    if not all(isinstance(q, int) and prime_power(q) and q % 2 for q in p["fields"]):
        raise InvalidParams("fields must be odd prime powers")


@register("levchuk-identities", {"n_max": 6, "samples": 100, "fields": [5, 7]},
          "flip involution, s-automorphism decompositions, abelianization and commutator relations",
          _validate_identities)
def _identities(params, seed):
    rng = random.Random(seed)
    checks = []
    details = {}
    F3 = PrimeField(3)
    for n in range(3, params["n_max"] + 1):
        tau = Flip(n, F3, GroupTag.UNIPOTENT)
        bad = 0
        for i in range(1, n):
            for j in range(i + 1, n + 1):
                for r in F3.elements():
                    g = elem(i, j, r, n, F3)
                    bad += tau(tau(g)) != g
        checks.append(Check(f"tau^2 = id on generators of U_{n}(F_3)", 0, bad))
    for q in params["fields"]:
        F = field_of_order(q)
        for shape in ("diagonal", "antidiagonal"):
            for a in F.units():
                res = stilde_decomposition(F, a, shape, samples=params["samples"], seed=seed)
                checks.append(Check(f"F_{q} {shape} a={a}: s-automorphism = tau o iota_d", True,
                                    res["agree"]["tau_iota_d"]))
                if not res["agree"]["tau_iota_d"]:
                    details[f"F_{q} {shape} a={a}"] = {"iota_d": res["agree"]["iota_d"],
                                                       "first_mismatch": res["first_mismatch"]}
    R = PolyRing(F3)
    window = enumerate_polys(R, 1)
    for n in (4, 5):
        auts = [Central(n, R, GroupTag.UNIPOTENT, i, MulUnit(R, R.gen())) for i in range(1, n)]
        auts += [Sigma(n, R, GroupTag.UNIPOTENT, QuadraticHalf(R, R(1)), R(1), primed) for primed in (False, True)]
        for psi in auts:
            action = AbelianAction(n, R, psi)
            checks.append(Check(f"U_{n}: {psi.describe()} trivial on abelianization", True,
                                action.is_identity_on(window)))
    for q in params["fields"]:
        F = field_of_order(q)
        elems = F.elements()
        for n in (3, 4):
            failures = 0
            for i in range(1, n + 1):
                for j in range(i + 1, n + 1):
                    for k in range(1, n + 1):
                        for l in range(k + 1, n + 1):
                            for _ in range(params["samples"]):
                                r, s = elems[rng.randrange(q)], elems[rng.randrange(q)]
                                c = commutator(elem(i, j, r, n, F), elem(k, l, s, n, F))
                                if j == k:
                                    want = elem(i, l, r * s, n, F)
                                elif i == l:
                                    want = elem(k, j, -(r * s), n, F)
                                else:
                                    want = identity(n, F, GroupTag.UNIPOTENT)
                                failures += c != want
            checks.append(Check(f"commutator relations in U_{n}(F_{q})", 0, failures))
    return checks, details


@register("thm11-ingredients", {}, "abelian Reidemeister numbers and the flip unit")
def _abelian_ingredients(params, seed):
    J = [[-1, 1], [-1, 0]]
    swap = [[0, 1], [1, 0]]
    rj = reidemeister_fg_abelian(J)
    rs = reidemeister_fg_abelian(swap)
    J3 = _int_matpow(J, 3)
    checks = [
        Check("J has order 3", [[1, 0], [0, 1]], J3),
        Check("R(J) on Z^2", 3, rj.count),
        Check("R(swap) on Z^2", "infinite", rs.verdict),
    ]
    for q in (2, 3, 4, 5, 7, 8, 9):
        F = field_of_order(q)
        try:
            find_flip_unit(F)
            ok = True
        except FieldTooSmall:
            ok = False
        checks.append(Check(f"flip unit exists over F_{q}", q > 3, ok))
    return checks, {"det(I - J)": rj.certificate["det"], "invariant_factors": rj.certificate["invariant_factors"]}


def _int_matpow(M, k):
    out = [[int(i == j) for j in range(len(M))] for i in range(len(M))]
    for _ in range(k):
        out = [[sum(out[i][t] * M[t][j] for t in range(len(M))) for j in range(len(M))] for i in range(len(M))]
    return out


# ---------------------------------------------------------------------------
# Running and persistence


def make_config(name: str, params: dict | None = None, seed: int = 0, out: str | None = None) -> ExperimentConfig:
    """Merge params over the registered defaults and validate them."""
    if name not in REGISTRY:
        raise UnknownExperiment(f"unknown experiment {name!r}; known: {', '.join(sorted(REGISTRY))}")
    exp = REGISTRY[name]
    params = dict(params or {})
    unknown = set(params) - set(exp.defaults)
    if unknown:
        raise InvalidParams(f"{name} takes no parameters {sorted(unknown)}")
    merged = {**exp.defaults, **params}
    exp.validate(merged)
    return ExperimentConfig(name, merged, seed, out)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.name not in REGISTRY:
        raise UnknownExperiment(f"unknown experiment {config.name!r}")
    exp = REGISTRY[config.name]
    exp.validate(config.params)
    t0 = time.perf_counter()
    checks, details = exp.run(config.params, config.seed)
    return ExperimentReport(config, checks, _jsonable(details), time.perf_counter() - t0)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, RingElem):
        return str(x)
    return x


def write_report(report: ExperimentReport, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path


_CONFIG_KEYS = {"name", "params", "seed", "out"}


def read_config(path: str | Path) -> ExperimentConfig:
    """Load a TOML config: ``name`` (required), ``seed``, ``out`` and a ``[params]`` table."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    try:
        data = tomllib.loads(raw.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise SchemaViolation(f"not valid TOML: {exc}") from exc
    return config_from_mapping(data)


def config_from_mapping(data: dict) -> ExperimentConfig:
    if "name" not in data:
        raise SchemaViolation("config is missing 'name'")
    extra = set(data) - _CONFIG_KEYS
    if extra:
        raise SchemaViolation(f"unknown config keys {sorted(extra)}")
    if not isinstance(data["name"], str):
        raise SchemaViolation("'name' must be a string")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise SchemaViolation("'params' must be a table")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaViolation("'seed' must be an integer")
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise SchemaViolation("'out' must be a string")
    return make_config(data["name"], params, seed, out)


def dump_config(config: ExperimentConfig) -> str:
    """TOML text that ``read_config`` parses back to the same config."""
    lines = [f"name = {json.dumps(config.name)}", f"seed = {config.seed}"]
    if config.out is not None:
        lines.append(f"out = {json.dumps(config.out)}")
    if config.params:
        lines.append("")
        lines.append("[params]")
        for k, v in sorted(config.params.items()):
            lines.append(f"{k} = {json.dumps(v)}")
    return "\n".join(lines) + "\n"
