"""
Encoders, decoders, function spaces and exact reduction verdicts.

An encoder h maps task-1 observations to task-2 observations; a decoder g maps
task-2 actions back to task-1 actions. Task 1 reduces to task 2 when every
supplied admissible task-2 policy pi becomes admissible on task 1 as g(pi(h(o)))
for some (h, g) from the given spaces. Verdicts are exact and only cover finite
tasks with explicit finite spaces.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Hashable, Mapping, NamedTuple, Sequence

import numpy as np

from .diffnet import MlpNet
from .errors import (
    ConfigurationError,
    EnumerationCapError,
    PreconditionError,
    UnsupportedOperationError,
)
from .taskcore import (
    ENUMERATION_CAP,
    BoxSpace,
    FiniteSpace,
    Policy,
    Space,
    TabularEvaluator,
    TaskSpec,
    check_spaces,
    policy_table,
)
from .types import Role, SupportsAct

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-8


# W3-BEGIN:registry
_CLOSED_FORMS: dict[str, Callable[..., Any]] = {}


def register_closed_form(name: str):
    """Decorator registering fn(value, **params) under a serializable name."""
    def deco(fn):
        if name in _CLOSED_FORMS and _CLOSED_FORMS[name] is not fn:
            raise ConfigurationError(f"closed-form transform {name!r} already registered")
        _CLOSED_FORMS[name] = fn
        return fn
    return deco


def closed_form_names() -> tuple[str, ...]:
    return tuple(sorted(_CLOSED_FORMS))


@register_closed_form("identity")
def _identity(value):
    return value
# W3-END:registry


# W3-BEGIN:transform
@dataclass(frozen=True, eq=False)
class Transform:
    """A total map between spaces, stored as a table, a named closed form, or an MLP."""

    role: ClassVar[Role] = "encoder"

    domain: Space | None = None
    codomain: Space | None = None
    table: tuple[int, ...] | None = None
    name: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)
    net: MlpNet | None = None
    residual: bool = False

    def __post_init__(self):
        given = sum(x is not None for x in (self.table, self.name, self.net))
        if given != 1:
            raise ConfigurationError("transform needs exactly one of table, closed-form name or net")
        if self.table is not None:
            if not isinstance(self.domain, FiniteSpace) or not isinstance(self.codomain, FiniteSpace):
                raise ConfigurationError("tabular transforms need finite domain and codomain")
            table = tuple(int(v) for v in self.table)
            if len(table) != self.domain.size:
                raise ConfigurationError(f"table must have {self.domain.size} entries, got {len(table)}")
            if any(not 0 <= v < self.codomain.size for v in table):
                raise ConfigurationError("table entries must be valid codomain indices")
            object.__setattr__(self, "table", table)
        if self.name is not None and self.name not in _CLOSED_FORMS:
            raise ConfigurationError(f"unknown closed-form transform {self.name!r}; known: {closed_form_names()}")
        if self.net is not None:
            if self.domain is None or self.codomain is None:
                raise ConfigurationError("neural transforms need domain and codomain")
            out_dim = self.codomain.feature_dim
            if self.net.input_dim != self.domain.feature_dim or self.net.output_dim != out_dim:
                raise ConfigurationError(
                    f"net dims {self.net.layer_dims} do not fit {self.domain.feature_dim} -> {out_dim}")
            if self.residual and self.domain.feature_dim != out_dim:
                raise ConfigurationError("residual transforms need equal domain and codomain dimension")
        object.__setattr__(self, "params", dict(self.params))

    # constructors
    @classmethod
    def tabular(cls, table: Sequence[int], domain: FiniteSpace, codomain: FiniteSpace):
        return cls(domain=domain, codomain=codomain, table=tuple(table))

    @classmethod
    def closed_form(cls, name: str, domain: Space | None = None, codomain: Space | None = None, **params):
        return cls(domain=domain, codomain=codomain, name=name, params=params)

    @classmethod
    def identity(cls, space: Space | None = None):
        if isinstance(space, FiniteSpace):
            return cls.tabular(range(space.size), space, space)
        return cls.closed_form("identity", space, space)

    @classmethod
    def neural(cls, net: MlpNet, domain: Space, codomain: Space, residual: bool = False):
        return cls(domain=domain, codomain=codomain, net=net, residual=residual)

    @property
    def kind(self) -> str:
        if self.table is not None:
            return "tabular"
        return "closed-form" if self.name is not None else "neural"

    @property
    def is_bound(self) -> bool:
        return self.domain is not None and self.codomain is not None

    def __call__(self, x):
        if self.table is not None:
            return self.table[int(x)]
        if self.name is not None:
            return self._apply_closed_form(x)
        return self._apply_neural(x)

    def _apply_closed_form(self, x):
        fn = _CLOSED_FORMS[self.name]
        if isinstance(self.domain, FiniteSpace) and isinstance(self.codomain, FiniteSpace):
            out = fn(self.domain.label(int(x)), **self.params)
            try:
                return self.codomain.index_of(out)
            except KeyError:
                raise ConfigurationError(f"{self.name} maps {self.domain.label(int(x))!r} outside the codomain") from None
        return fn(x, **self.params)

    def _apply_neural(self, x):
        feats = self.domain.featurize(x)
        out = self.net.forward(feats)
        if isinstance(self.codomain, FiniteSpace):
            if self.residual:
                out = out + np.log(np.maximum(feats, LOG_FLOOR))
            return int(np.argmax(out))
        if self.residual:
            out = out + feats
        if self.role == "decoder":
            out = np.clip(out, self.codomain.lower, self.codomain.upper)
        return out

    def bind(self, domain: FiniteSpace, codomain: FiniteSpace, skip_partial: bool = False):
        """Tabulate over finite spaces; returns None for partial maps when `skip_partial`."""
        if not isinstance(domain, FiniteSpace) or not isinstance(codomain, FiniteSpace):
            raise UnsupportedOperationError("only finite spaces can be tabulated")
        if self.table is not None:
            if not (self.domain.compatible(domain) and self.codomain.compatible(codomain)):
                raise ConfigurationError("tabular transform bound to incompatible spaces")
            return self
        if self.net is not None:
            return type(self).tabular([self(i) for i in range(domain.size)], domain, codomain)
        fn = _CLOSED_FORMS[self.name]
        table = []
        for i in range(domain.size):
            out = fn(domain.label(i), **self.params)
            try:
                table.append(codomain.index_of(out))
            except KeyError:
                if skip_partial:
                    return None
                raise ConfigurationError(
                    f"{self.name}({self.params}) maps {domain.label(i)!r} outside the codomain") from None
        return type(self).tabular(table, domain, codomain)

    def extension(self) -> tuple[int, ...]:
        """The map as a table over the finite domain; used for extensional equality."""
        if self.table is not None:
            return self.table
        if not isinstance(self.domain, FiniteSpace):
            raise UnsupportedOperationError("extension needs a finite domain")
        return tuple(int(self(i)) for i in range(self.domain.size))

    def then(self, other: "Transform") -> "Transform":
        """other after self, tabulated."""
        if not isinstance(self.domain, FiniteSpace) or not isinstance(other.codomain, FiniteSpace):
            raise UnsupportedOperationError("composition of transforms is only tabulated on finite spaces")
        if not self.codomain.compatible(other.domain):
            raise ConfigurationError("transforms are not composable: codomain/domain mismatch")
        return type(self).tabular([other(self(i)) for i in range(self.domain.size)], self.domain, other.codomain)

    def to_dict(self) -> dict:
        if self.table is not None:
            return {"kind": "tabular", "domain_size": self.domain.size,
                    "codomain_size": self.codomain.size, "table": list(self.table)}
        if self.name is not None:
            return {"kind": "closed-form", "name": self.name, "params": dict(self.params)}
        return {"kind": "neural", "net": self.net.to_dict(), "residual": self.residual}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], domain: Space | None = None, codomain: Space | None = None):
        kind = data.get("kind", "tabular" if "table" in data else "closed-form")
        if kind == "tabular":
            domain = domain or FiniteSpace(int(data["domain_size"]))
            codomain = codomain or FiniteSpace(int(data["codomain_size"]))
            if domain.size != data["domain_size"] or codomain.size != data["codomain_size"]:
                raise ConfigurationError("serialized table sizes do not match the given spaces")
            return cls.tabular(data["table"], domain, codomain)
        if kind == "closed-form":
            return cls.closed_form(data["name"], domain, codomain, **data.get("params", {}))
        return cls.neural(MlpNet.from_dict(data["net"]), domain, codomain, bool(data.get("residual", False)))


class Encoder(Transform):
    role: ClassVar[Role] = "encoder"


class Decoder(Transform):
    role: ClassVar[Role] = "decoder"
# W3-END:transform


# W3-BEGIN:spaces
@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """An encoder space H or decoder space G.

    Explicit spaces list their members; parametric ones carry an architecture
    descriptor and only enter through the adversarial estimator.
    """

    members: tuple[Transform, ...] = ()
    domain: Space | None = None
    codomain: Space | None = None
    contains_identity: bool = False
    closure_claim: bool = False
    architecture: Any = None

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if self.architecture is None and not members:
            raise ConfigurationError("explicit function spaces need at least one member")
        seen: dict[Hashable, int] = {}
        for i, m in enumerate(members):
            key = _member_key(m)
            if key is None:
                continue
            if key in seen:
                raise ConfigurationError(f"function space members {seen[key]} and {i} are extensionally equal")
            seen[key] = i

    @property
    def is_explicit(self) -> bool:
        return self.architecture is None

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i: int) -> Transform:
        return self.members[i]

    @property
    def has_neural(self) -> bool:
        return any(m.kind == "neural" for m in self.members)

    def bind(self, domain: FiniteSpace, codomain: FiniteSpace, skip_partial: bool = False) -> "FunctionSpace":
        """Tabulate every member; extensional duplicates keep their first occurrence."""
        out, seen = [], set()
        for m in self.members:
            b = m.bind(domain, codomain, skip_partial=skip_partial)
            if b is None or b.table in seen:
                continue
            seen.add(b.table)
            out.append(b)
        if not out:
            raise ConfigurationError("no member of the function space is total on the given spaces")
        return FunctionSpace(tuple(out), domain, codomain, self.contains_identity, self.closure_claim)

    def tables(self) -> np.ndarray:
        return np.array([m.extension() for m in self.members], dtype=np.int64)

    def has_identity(self) -> bool:
        if not isinstance(self.domain, FiniteSpace) or not self.domain.compatible(self.codomain):
            return False
        ident = tuple(range(self.domain.size))
        return any(m.extension() == ident for m in self.members)

    def extensions(self) -> set[tuple[int, ...]]:
        return {m.extension() for m in self.members}

    def to_dict(self) -> dict:
        if not self.is_explicit:
            arch = self.architecture
            return {"architecture": arch.to_dict() if hasattr(arch, "to_dict") else arch}
        return {"members": [m.to_dict() for m in self.members],
                "contains_identity": self.contains_identity, "closure_claim": self.closure_claim}

    # constructors
    @classmethod
    def of(cls, members: Sequence[Transform], **kw) -> "FunctionSpace":
        members = tuple(members)
        dom = kw.pop("domain", members[0].domain if members else None)
        cod = kw.pop("codomain", members[0].codomain if members else None)
        return cls(members, dom, cod, **kw)

    @classmethod
    def identity(cls, space: Space, role: Role = "encoder") -> "FunctionSpace":
        kind = Encoder if role == "encoder" else Decoder
        return cls((kind.identity(space),), space, space, contains_identity=True, closure_claim=True)

    @classmethod
    def all_functions(cls, domain: FiniteSpace, codomain: FiniteSpace, role: Role = "encoder",
                      cap: int = ENUMERATION_CAP) -> "FunctionSpace":
        count = codomain.size ** domain.size
        if count > cap:
            raise EnumerationCapError("tabular transforms", count, cap)
        kind = Encoder if role == "encoder" else Decoder
        members = tuple(kind.tabular(t, domain, codomain)
                        for t in itertools.product(range(codomain.size), repeat=domain.size))
        return cls(members, domain, codomain, contains_identity=domain.compatible(codomain), closure_claim=True)

    @classmethod
    def parametric(cls, architecture, domain: Space, codomain: Space, contains_identity: bool = False):
        return cls((), domain, codomain, contains_identity=contains_identity, architecture=architecture)


def _member_key(m: Transform) -> Hashable | None:
    if m.table is not None:
        return m.table
    if m.name is not None:
        if isinstance(m.domain, FiniteSpace) and isinstance(m.codomain, FiniteSpace):
            try:
                return m.extension()
            except ConfigurationError:
                pass
        return ("closed-form", m.name, tuple(sorted(m.params.items())))
    return None
# W3-END:spaces


# W3-BEGIN:compose
@dataclass(frozen=True, eq=False)
class ComposedPolicy:
    """g(pi(h(o))) acting as a policy on task 1."""

    encoder: Transform
    inner: SupportsAct
    decoder: Transform

    @property
    def observations(self) -> Space:
        return self.encoder.domain

    @property
    def actions(self) -> Space:
        return self.decoder.codomain

    def act(self, observation):
        return self.decoder(self.inner.act(self.encoder(observation)))

    def as_table(self) -> tuple[int, ...]:
        return policy_table(self)


def compose(g: Transform, inner: SupportsAct, h: Transform) -> ComposedPolicy:
    for t, label in ((h, "encoder"), (g, "decoder")):
        if not t.is_bound:
            raise ConfigurationError(f"{label} must be bound to spaces before composing")
    if not h.codomain.compatible(inner.observations):
        raise ConfigurationError("encoder codomain does not match the inner policy's observation space")
    if not inner.actions.compatible(g.domain):
        raise ConfigurationError("inner policy's action space does not match the decoder domain")
    return ComposedPolicy(h, inner, g)


def composed_table(g_table: np.ndarray, inner_table: np.ndarray, h_table: np.ndarray) -> np.ndarray:
    return np.asarray(g_table)[np.asarray(inner_table)[np.asarray(h_table)]]
# W3-END:compose


# W3-BEGIN:verdict
class Witness(NamedTuple):
    policy_index: int
    h_index: int
    g_index: int


@dataclass(frozen=True)
class ReductionVerdict:
    holds: bool
    witnesses: tuple[Witness, ...]
    counterexample: Policy | None
    counterexample_index: int | None
    quantified: int
    task_digests: tuple[str, str]
    encoders: FunctionSpace = field(repr=False, default=None)
    decoders: FunctionSpace = field(repr=False, default=None)

    def pair(self, w: Witness) -> tuple[Transform, Transform]:
        return self.encoders[w.h_index], self.decoders[w.g_index]

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witnesses": [list(w) for w in self.witnesses],
            "counterexample_index": self.counterexample_index,
            "counterexample": None if self.counterexample is None else list(policy_table(self.counterexample)),
            "quantified": self.quantified,
            "task_digests": list(self.task_digests),
        }


def prepare_spaces(tau1: TaskSpec, tau2: TaskSpec, H: FunctionSpace, G: FunctionSpace) -> tuple[FunctionSpace, FunctionSpace]:
    """Bind explicit spaces to the task pair and reject anything exact verdicts cannot use."""
    for sp, label in ((H, "H"), (G, "G")):
        if not sp.is_explicit:
            raise UnsupportedOperationError(f"{label} is parametric; exact verdicts need explicit spaces")
        if sp.has_neural:
            raise UnsupportedOperationError(f"{label} has neural members; exact verdicts exclude them")
    if not (tau1.is_finite and tau2.is_finite):
        raise UnsupportedOperationError("exact verdicts need finite tasks")
    Hb = H.bind(tau1.observations, tau2.observations, skip_partial=True)
    Gb = G.bind(tau2.actions, tau1.actions, skip_partial=True)
    return Hb, Gb


def verified_tables(tau2: TaskSpec, admissible2: Sequence[SupportsAct]) -> list[np.ndarray]:
    if not admissible2:
        raise PreconditionError(f"admissible family for {tau2.name!r} is empty")
    ev2 = TabularEvaluator(tau2)
    tables = []
    for i, p in enumerate(admissible2):
        check_spaces(tau2, p)
        t = np.asarray(policy_table(p, tau2), dtype=np.int64)
        if not ev2.admissible(t):
            raise PreconditionError(
                f"admissible policy {i} is not admissible on {tau2.name!r} "
                f"(return {ev2.value(t)!r} < R* {tau2.success_threshold!r})")
        tables.append(t)
    return tables


def check_reduction(
    tau1: TaskSpec,
    tau2: TaskSpec,
    H: FunctionSpace,
    G: FunctionSpace,
    admissible2: Sequence[SupportsAct],
) -> ReductionVerdict:
    """Exact test of tau1 reducing to tau2 over the supplied admissible family.

    Witnesses are the first (h, g) in lexicographic index order; the search stops
    at the first counterexample.
    """
    Hb, Gb = prepare_spaces(tau1, tau2, H, G)
    tables = verified_tables(tau2, admissible2)
    ev1 = TabularEvaluator(tau1)
    h_tabs, g_tabs = Hb.tables(), Gb.tables()
    witnesses: list[Witness] = []
    for pi, t in enumerate(tables):
        found = _first_witness(ev1, t, h_tabs, g_tabs)
        if found is None:
            logger.debug("reduction %s -> %s fails at admissible policy %d", tau1.name, tau2.name, pi)
            return ReductionVerdict(False, tuple(witnesses), admissible2[pi], pi, len(tables),
                                    (tau1.digest, tau2.digest), Hb, Gb)
        witnesses.append(Witness(pi, *found))
    return ReductionVerdict(True, tuple(witnesses), None, None, len(tables), (tau1.digest, tau2.digest), Hb, Gb)


def _first_witness(ev1: TabularEvaluator, inner: np.ndarray, h_tabs: np.ndarray, g_tabs: np.ndarray):
    for hi, h in enumerate(h_tabs):
        actions = inner[h]
        for gi, g in enumerate(g_tabs):
            if ev1.admissible(g[actions]):
                return hi, gi
    return None


def check_equivalence(tau1, tau2, H12, G21, H21, G12, admissible1, admissible2) -> bool:
    if not check_reduction(tau1, tau2, H12, G21, admissible2).holds:
        return False
    return check_reduction(tau2, tau1, H21, G12, admissible1).holds
# W3-END:verdict


# W3-BEGIN:axioms
@dataclass(frozen=True, eq=False)
class SpaceFamily:
    """Indexed spaces over a task list: encoders[(i, j)] = H_ij, decoders[(j, i)] = G_ji."""

    tasks: tuple[TaskSpec, ...]
    encoders: Mapping[tuple[int, int], FunctionSpace]
    decoders: Mapping[tuple[int, int], FunctionSpace]

    def spaces_for(self, i: int, j: int) -> tuple[FunctionSpace, FunctionSpace]:
        """(H_ij, G_ji) used to test task i reducing to task j."""
        try:
            return self.encoders[(i, j)], self.decoders[(j, i)]
        except KeyError:
            raise ConfigurationError(f"no spaces supplied for task pair ({i}, {j})") from None

    @classmethod
    def closed_form(
        cls,
        tasks: Sequence[TaskSpec],
        encoder_candidates: Sequence[Transform],
        decoder_candidates: Sequence[Transform],
    ) -> "SpaceFamily":
        """Bind the same candidate transforms to every ordered pair, keeping the total ones."""
        tasks = tuple(tasks)
        enc, dec = {}, {}
        for i, j in itertools.product(range(len(tasks)), repeat=2):
            enc[(i, j)] = FunctionSpace(tuple(encoder_candidates), contains_identity=True, closure_claim=True).bind(
                tasks[i].observations, tasks[j].observations, skip_partial=True)
            dec[(j, i)] = FunctionSpace(tuple(decoder_candidates), contains_identity=True, closure_claim=True).bind(
                tasks[j].actions, tasks[i].actions, skip_partial=True)
        return cls(tasks, enc, dec)

    @classmethod
    def identity(cls, tasks: Sequence[TaskSpec]) -> "SpaceFamily":
        tasks = tuple(tasks)
        enc, dec = {}, {}
        for i, j in itertools.product(range(len(tasks)), repeat=2):
            enc[(i, j)] = FunctionSpace.identity(tasks[i].observations, "encoder") if i == j else \
                FunctionSpace.of([Encoder.identity()]).bind(tasks[i].observations, tasks[j].observations)
            dec[(j, i)] = FunctionSpace.identity(tasks[i].actions, "decoder") if i == j else \
                FunctionSpace.of([Decoder.identity()]).bind(tasks[j].actions, tasks[i].actions)
        return cls(tasks, enc, dec)


class ClosureFailure(NamedTuple):
    kind: str
    triple: tuple[int, int, int]
    first: int
    second: int


@dataclass(frozen=True)
class AxiomReport:
    identity: dict[str, bool]
    closure_failures: tuple[ClosureFailure, ...]
    checked_compositions: int

    @property
    def missing_identity(self) -> list[str]:
        return sorted(k for k, ok in self.identity.items() if not ok)

    @property
    def order_applicable(self) -> bool:
        return not self.missing_identity and not self.closure_failures

    def to_dict(self) -> dict:
        return {
            "identity": dict(self.identity),
            "closure_failures": [f._asdict() for f in self.closure_failures],
            "checked_compositions": self.checked_compositions,
            "order_applicable": self.order_applicable,
        }


def verify_space_axioms(family: SpaceFamily) -> AxiomReport:
    """Identity membership on the diagonal and closure over every task triple, extensionally."""
    n = len(family.tasks)
    identity: dict[str, bool] = {}
    for i in range(n):
        H, G = family.spaces_for(i, i)
        identity[f"H[{i},{i}]"] = H.has_identity()
        identity[f"G[{i},{i}]"] = G.has_identity()
    failures: list[ClosureFailure] = []
    checked = 0
    for i, j, k in itertools.product(range(n), repeat=3):
        # h2 . h1 in H_ik for h1 in H_ij, h2 in H_jk
        H_ij, H_jk, H_ik = family.encoders[(i, j)], family.encoders[(j, k)], family.encoders[(i, k)]
        target = H_ik.extensions()
        t1, t2 = H_ij.tables(), H_jk.tables()
        for a, h1 in enumerate(t1):
            for b, h2 in enumerate(t2):
                checked += 1
                if tuple(int(v) for v in h2[h1]) not in target:
                    failures.append(ClosureFailure("H", (i, j, k), a, b))
        # g1 . g2 in G_ki for g2 in G_kj, g1 in G_ji
        G_kj, G_ji, G_ki = family.decoders[(k, j)], family.decoders[(j, i)], family.decoders[(k, i)]
        target = G_ki.extensions()
        t2, t1 = G_kj.tables(), G_ji.tables()
        for b, g2 in enumerate(t2):
            for a, g1 in enumerate(t1):
                checked += 1
                if tuple(int(v) for v in g1[g2]) not in target:
                    failures.append(ClosureFailure("G", (i, j, k), a, b))
    return AxiomReport(identity, tuple(failures), checked)


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    violations: tuple[tuple[int, ...], ...]

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class AuditReport:
    task_names: tuple[str, ...]
    reduces: tuple[tuple[bool, ...], ...]
    checks: tuple[AxiomCheck, ...]
    axioms: AxiomReport

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def equivalent(self, i: int, j: int) -> bool:
        return self.reduces[i][j] and self.reduces[j][i]

    def strict(self, i: int, j: int) -> bool:
        return self.reduces[i][j] and not self.reduces[j][i]

    def check(self, name: str) -> AxiomCheck:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {
            "tasks": list(self.task_names),
            "reduces": [list(r) for r in self.reduces],
            "passed": self.passed,
            "checks": {c.name: {"passed": c.passed, "violations": [list(v) for v in c.violations]}
                       for c in self.checks},
            "axioms": self.axioms.to_dict(),
        }


def reduction_matrix(family: SpaceFamily, admissible_families: Mapping[int, Sequence[SupportsAct]]) -> list[list[bool]]:
    n = len(family.tasks)
    out = [[False] * n for _ in range(n)]
    for i, j in itertools.product(range(n), repeat=2):
        H, G = family.spaces_for(i, j)
        out[i][j] = check_reduction(family.tasks[i], family.tasks[j], H, G, admissible_families[j]).holds
    return out


def partial_order_audit(
    family: SpaceFamily,
    admissible_families: Mapping[int, Sequence[SupportsAct]],
    axioms: AxiomReport | None = None,
) -> AuditReport:
    """Check the ordering and equivalence axioms on a concrete task set.

    Refuses when the identity/closure hypotheses do not hold, since the ordering
    guarantees only apply under them.
    """
    axioms = axioms or verify_space_axioms(family)
    if not axioms.order_applicable:
        raise PreconditionError(
            "space hypotheses fail: "
            f"missing identity {axioms.missing_identity}, {len(axioms.closure_failures)} closure failures")
    R = reduction_matrix(family, admissible_families)
    n = len(family.tasks)
    eq = [[R[i][j] and R[j][i] for j in range(n)] for i in range(n)]
    st = [[R[i][j] and not eq[i][j] for j in range(n)] for i in range(n)]
    idx = range(n)
    pairs = list(itertools.product(idx, repeat=2))
    triples = list(itertools.product(idx, repeat=3))

    def check(name, items, ok):
        return AxiomCheck(name, tuple(t for t in items if not ok(*t)))

    checks = (
        check("reflexivity", [(i,) for i in idx], lambda i: R[i][i]),
        check("antisymmetry", pairs, lambda i, j: not st[i][j] or not R[j][i]),
        check("transitivity", triples, lambda i, j, k: not (R[i][j] and R[j][k]) or R[i][k]),
        check("equivalence_reflexivity", [(i,) for i in idx], lambda i: eq[i][i]),
        check("equivalence_symmetry", pairs, lambda i, j: eq[i][j] == eq[j][i]),
        check("equivalence_transitivity", triples, lambda i, j, k: not (eq[i][j] and eq[j][k]) or eq[i][k]),
        check("strict_irreflexivity", [(i,) for i in idx], lambda i: not st[i][i]),
        check("strict_asymmetry", pairs, lambda i, j: not (st[i][j] and st[j][i])),
        check("strict_transitivity", triples, lambda i, j, k: not (st[i][j] and st[j][k]) or st[i][k]),
    )
    for c in checks:
        if not c.passed:
            logger.warning("axiom %s violated by %s", c.name, c.violations[:5])
    return AuditReport(tuple(t.name for t in family.tasks), tuple(tuple(r) for r in R), checks, axioms)
# W3-END:axioms


__all__ = [
    "Transform", "Encoder", "Decoder", "FunctionSpace", "ComposedPolicy", "ReductionVerdict", "Witness",
    "SpaceFamily", "AxiomReport", "AxiomCheck", "AuditReport", "ClosureFailure",
    "register_closed_form", "closed_form_names", "compose", "composed_table", "check_reduction",
    "check_equivalence", "verify_space_axioms", "partial_order_audit", "reduction_matrix",
    "prepare_spaces", "verified_tables",
]
