"""Specification application: the five-step validation run.

A run executes the prelude, the before hooks, obtains the instance set
(either by evaluating the auxiliary rules in-process or through the
external grounder bridge), checks every instance of every declared symbol
in a deterministic order, and finally checks aggregate facets and after
hooks.  The default is fail-fast: the first diagnostic ends the run.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

from . import datalog, hooks
from .diagnostics import Diagnostic, RunStats, ValidationReport
from .schema import (
    FieldDecl,
    PrimitiveType,
    UserDefinition,
    ValidationSpec,
    check_spec,
)
from .terms import Const, Fact, Func, GroundTerm, Number, Str, render, sort_key

__all__ = [
    "RunOptions",
    "AccumulatorStore",
    "run",
    "check_instance",
    "finalize",
    "wrap32",
]


@dataclass(slots=True)
class RunOptions:
    mode: str = "builtin"  # builtin | bridge
    fail_fast: bool = True
    valid_only: bool = True  # kept for interface parity; no models are ever computed
    report_format: str = "text"
    grounder: "object | None" = None  # emit.GrounderBridgeConfig in bridge mode
    program_text: str | None = None  # bridge mode: raw program text to ground
    extra_rules_text: str | None = None  # builtin mode: rule text joining A


class AccumulatorStore:
    """Running state of one validation pass.

    count tracks distinct ground atoms per symbol; positive/negative sums are
    kept per (symbol, field) for fields carrying a sum facet.  The class
    store is one flat namespace for the whole run, so an after hook can read
    values bound while checking instances of another symbol.
    """

    def __init__(self, spec: ValidationSpec):
        self.spec = spec
        self.counts: dict[str, int] = {}
        self.sums_pos: dict[tuple[str, str], int] = {}
        self.sums_neg: dict[tuple[str, str], int] = {}
        self.class_store: dict[str, object] = {}
        self.snapshots: dict[str, list[hooks.CheckedInstance]] = {}
        self.prelude: dict[str, object] = {}
        self._compiled: dict[tuple[str, str], hooks.HookScript | None] = {}
        self._having: dict[tuple[str, int], hooks.HookScript] = {}

    def hook(self, definition: UserDefinition, key: str) -> hooks.HookScript | None:
        cached = self._compiled.get((definition.symbol, key))
        if cached is None and (definition.symbol, key) not in self._compiled:
            raw = getattr(definition, key)
            cached = hooks.parse_script(raw) if isinstance(raw, str) else raw
            self._compiled[(definition.symbol, key)] = cached
        return cached

    def having_script(self, definition: UserDefinition, index: int) -> hooks.HookScript:
        key = (definition.symbol, index)
        if key not in self._having:
            cmp = definition.having[index]
            self._having[key] = hooks.compile_having(cmp.lhs, cmp.op, cmp.rhs)
        return self._having[key]


def wrap32(n: int) -> int:
    """Two's-complement 32-bit wrap: the failure mode validation prevents."""
    return (n + 2**31) % 2**32 - 2**31


# ---------------------------------------------------------------------------
# Instance checking


def check_instance(definition: UserDefinition, fact: Fact,
                   store: AccumulatorStore) -> list[Diagnostic]:
    """Check one ground atom: arity, kinds, facets, having, after_init.

    Diagnostics come back in check order; count/sum accumulators update only
    when the instance is fully valid (count tracks every atom processed).
    """
    symbol = definition.symbol
    rendered = render(fact.term())
    store.counts[symbol] = store.counts.get(symbol, 0) + 1

    def diag(rule: str, message: str) -> Diagnostic:
        return Diagnostic("instance", symbol, rule, message,
                          instance=rendered, arity=definition.arity)

    if len(fact.args) != definition.arity:
        return [diag("wrong-arity",
                     f"{symbol} is expected to have arity {definition.arity},"
                     f" but {len(fact.args)} arguments are found")]

    diags: list[Diagnostic] = []
    values: dict[str, object] = {}
    for fld, arg in zip(definition.fields, fact.args):
        value, problem = _check_kind(fld, arg, store)
        if problem is not None:
            diags.append(diag(problem[0], problem[1]))
        else:
            values[fld.name] = value

    for fld, arg in zip(definition.fields, fact.args):
        if fld.name in values:
            for rule, message in _check_facets(fld, values[fld.name], arg):
                diags.append(diag(rule, message))

    if len(values) < definition.arity:
        # A kind failure leaves the field values incomplete; comparisons and
        # the hook cannot run.  Facet failures only block accumulation.
        return diags

    checked = hooks.CheckedInstance(symbol, values, fact.term())

    having_ok = True
    for index, cmp in enumerate(definition.having):
        script = store.having_script(definition, index)
        problem = _run_hook(script, store, instance=checked)
        if isinstance(problem, hooks.CheckFailure):
            diags.append(diag("having", problem.message))
            having_ok = False
        elif isinstance(problem, hooks.ScriptEvalError):
            diags.append(diag("eval-error", f"having {cmp}: {problem}"))
            having_ok = False

    # The hook may rely on the declared comparisons, so it is skipped when
    # one failed; facet violations do not block it.
    after_init = store.hook(definition, "after_init") if having_ok else None
    if after_init:
        problem = _run_hook(after_init, store, instance=checked,
                            snapshot_target=checked)
        if isinstance(problem, hooks.CheckFailure):
            diags.append(diag("hook-fail", problem.message))
        elif isinstance(problem, hooks.ScriptEvalError):
            diags.append(diag("eval-error", f"after_init: {problem}"))

    if diags:
        return diags
    _update_accumulators(definition, values, store)
    if _wants_implicit_snapshot(definition, store):
        store.snapshots.setdefault(symbol, []).append(checked)
    return []


def _run_hook(script: hooks.HookScript, store: AccumulatorStore, *,
              instance: hooks.CheckedInstance | None,
              snapshot_target: hooks.CheckedInstance | None = None):
    """Run a script against the store; return the failure instead of raising."""
    on_snapshot = None
    if snapshot_target is not None:
        def on_snapshot():
            store.snapshots.setdefault(snapshot_target.symbol, []).append(snapshot_target)
    env = hooks.EvalEnv(
        instance=instance.values if instance is not None else None,
        class_store=store.class_store,
        prelude=store.prelude,
        on_snapshot=on_snapshot,
    )
    try:
        hooks.eval_instance(script, env)
    except (hooks.CheckFailure, hooks.ScriptEvalError) as exc:
        return exc
    return None


def _check_kind(fld: FieldDecl, term: GroundTerm, store: AccumulatorStore):
    """Return (checked value, None) or (None, (rule, message))."""
    name = fld.name
    if fld.type is PrimitiveType.INTEGER:
        if isinstance(term, Number):
            return term.value, None
        return None, ("wrong-kind", f"{name}: expected an integer, received {render(term)}")
    if fld.type is PrimitiveType.STRING:
        if isinstance(term, Str):
            return term.value, None
        return None, ("wrong-kind", f"{name}: expected a string, received {render(term)}")
    if fld.type is PrimitiveType.ALPHA:
        if isinstance(term, Const):
            return term.name, None
        return None, ("wrong-kind",
                      f"{name}: expected an alphanumeric constant, received {render(term)}")
    if fld.type is PrimitiveType.ANY:
        return term, None
    return _check_nested(fld, term, store)


def _check_nested(fld: FieldDecl, term: GroundTerm, store: AccumulatorStore):
    """Validate a user-typed field value against the referenced definition.

    A unary definition accepts the bare term as its single field value (the
    forward form); higher arities require a function with the same name.
    """
    nested = store.spec.definitions[fld.type]
    if nested.arity == 1:
        inner_value, problem = _check_kind(nested.fields[0], term, store)
        if problem is not None:
            return None, problem
        facet_problems = _check_facets(nested.fields[0], inner_value, term)
        if facet_problems:
            return None, facet_problems[0]
        values = {nested.fields[0].name: inner_value}
        source = term
    else:
        if not isinstance(term, Func) or term.name != nested.symbol:
            return None, ("wrong-kind",
                          f"{fld.name}: expected an instance of {nested.symbol},"
                          f" received {render(term)}")
        if len(term.args) != nested.arity:
            return None, ("wrong-arity",
                          f"{nested.symbol} is expected to have arity {nested.arity},"
                          f" but {len(term.args)} arguments are found")
        values = {}
        for inner_fld, arg in zip(nested.fields, term.args):
            inner_value, problem = _check_kind(inner_fld, arg, store)
            if problem is not None:
                return None, problem
            facet_problems = _check_facets(inner_fld, inner_value, arg)
            if facet_problems:
                return None, facet_problems[0]
            values[inner_fld.name] = inner_value
        source = term

    checked = hooks.CheckedInstance(nested.symbol, values, source)
    for index, cmp in enumerate(nested.having):
        script = store.having_script(nested, index)
        problem = _run_hook(script, store, instance=checked)
        if isinstance(problem, hooks.CheckFailure):
            return None, ("having", problem.message)
        if isinstance(problem, hooks.ScriptEvalError):
            return None, ("eval-error", f"having {cmp}: {problem}")
    after_init = store.hook(nested, "after_init")
    if after_init:
        problem = _run_hook(after_init, store, instance=checked,
                            snapshot_target=checked)
        if isinstance(problem, hooks.CheckFailure):
            return None, ("hook-fail", problem.message)
        if isinstance(problem, hooks.ScriptEvalError):
            return None, ("eval-error", f"after_init: {problem}")
    return checked, None


def _check_facets(fld: FieldDecl, value, term: GroundTerm) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    facets = fld.facets
    name = fld.name
    if facets.enum_values is not None and term not in facets.enum_values:
        shown = ", ".join(render(v) for v in facets.enum_values)
        out.append(("enum", f"{name}: {render(term)} is not one of [{shown}]"))
    if fld.type is PrimitiveType.INTEGER:
        if facets.min is not None and value < facets.min:
            out.append(("min", f"{name}: Should be >= {facets.min},"
                               f" but received {value}"))
        if facets.max is not None and value > facets.max:
            out.append(("max", f"{name}: Should be <= {facets.max},"
                               f" but received {value}"))
    elif fld.type in (PrimitiveType.STRING, PrimitiveType.ALPHA):
        if facets.min is not None and len(value) < facets.min:
            out.append(("min", f"{name}: length should be >= {facets.min},"
                               f" but received {render(term)}"))
        if facets.max is not None and len(value) > facets.max:
            out.append(("max", f"{name}: length should be <= {facets.max},"
                               f" but received {render(term)}"))
        if facets.pattern is not None:
            if re.fullmatch(facets.pattern, value) is None:
                out.append(("pattern", f"{name}: should match {facets.pattern!r},"
                                       f" but received {render(term)}"))
    return out


def _update_accumulators(definition: UserDefinition, values: dict,
                         store: AccumulatorStore) -> None:
    for fld in definition.fields:
        if fld.facets.sum_pos is None and fld.facets.sum_neg is None:
            continue
        value = values[fld.name]
        key = (definition.symbol, fld.name)
        if fld.facets.sum_pos is not None and value > 0:
            store.sums_pos[key] = store.sums_pos.get(key, 0) + value
        if fld.facets.sum_neg is not None and value < 0:
            store.sums_neg[key] = store.sums_neg.get(key, 0) + value


def _wants_implicit_snapshot(definition: UserDefinition,
                             store: AccumulatorStore) -> bool:
    after = store.hook(definition, "after_grounding")
    if after is None or not after.uses_self:
        return False
    init = store.hook(definition, "after_init")
    return init is None or not init.uses_append_snapshot


# ---------------------------------------------------------------------------
# Finalization


def finalize(definition: UserDefinition, store: AccumulatorStore) -> list[Diagnostic]:
    """Aggregate facet checks and the after_grounding hook for one symbol."""
    symbol = definition.symbol
    diags: list[Diagnostic] = []

    def diag(rule: str, message: str, instance: str | None = None) -> Diagnostic:
        return Diagnostic("after", symbol, rule, message,
                          instance=instance, arity=definition.arity)

    count = store.counts.get(symbol, 0)
    for fld in definition.fields:
        if fld.facets.count is not None:
            lo, hi = fld.facets.count
            if count < lo or (hi is not None and count > hi):
                expected = f">= {lo}" if hi is None else f"between {lo} and {hi}"
                diags.append(diag("count",
                                  f"found {count} instances of {symbol},"
                                  f" expected {expected}"))
        if fld.facets.sum_pos is not None:
            lo, hi = fld.facets.sum_pos
            total = store.sums_pos.get((symbol, fld.name), 0)
            if total < lo or total > hi:
                diags.append(diag("sum-pos",
                                  f"sum of positive {fld.name} in {symbol} is {total},"
                                  f" outside [{lo}, {hi}]"))
        if fld.facets.sum_neg is not None:
            lo, hi = fld.facets.sum_neg
            total = store.sums_neg.get((symbol, fld.name), 0)
            if total < lo or total > hi:
                diags.append(diag("sum-neg",
                                  f"sum of negative {fld.name} in {symbol} is {total},"
                                  f" outside [{lo}, {hi}]"))

    after = store.hook(definition, "after_grounding")
    if after:
        if after.uses_self:
            for snap in store.snapshots.get(symbol, []):
                problem = _run_hook(after, store, instance=snap)
                if isinstance(problem, hooks.CheckFailure):
                    diags.append(diag("hook-fail", problem.message,
                                      instance=render(snap.source)))
                elif isinstance(problem, hooks.ScriptEvalError):
                    diags.append(diag("eval-error", f"after_grounding: {problem}"))
        else:
            problem = _run_hook(after, store, instance=None)
            if isinstance(problem, hooks.CheckFailure):
                diags.append(diag("hook-fail", problem.message))
            elif isinstance(problem, hooks.ScriptEvalError):
                diags.append(diag("eval-error", f"after_grounding: {problem}"))
    return diags


# ---------------------------------------------------------------------------
# The run itself


def run(spec: ValidationSpec, facts, options: RunOptions | None = None) -> ValidationReport:
    """Apply a specification to a set of facts and report the verdict."""
    options = options or RunOptions()
    started = time.perf_counter()
    diags: list[Diagnostic] = []

    def report() -> ValidationReport:
        stats = RunStats(instances_checked=dict(store.counts),
                         wall_time=time.perf_counter() - started)
        return ValidationReport.from_diagnostics(diags, stats)

    store = AccumulatorStore(spec)

    spec_problems = check_spec(spec)
    if spec_problems:
        diags.extend(spec_problems)
        return report()

    # Step 1: the prelude defines run-wide constants.
    try:
        prelude = spec.prelude
        if isinstance(prelude, str):  # pragma: no cover - check_spec guards this
            prelude = hooks.parse_script(prelude)
        store.prelude = hooks.run_prelude(prelude)
    except hooks.CheckFailure as exc:
        diags.append(Diagnostic("before", "", "hook-fail", f"prelude: {exc.message}"))
        return report()
    except hooks.ScriptEvalError as exc:
        diags.append(Diagnostic("before", "", "eval-error", f"prelude: {exc}"))
        return report()

    # Step 2: before hooks, in symbol order.
    for symbol in sorted(spec.definitions):
        definition = spec.definitions[symbol]
        script = store.hook(definition, "before_grounding")
        if not script:
            continue
        problem = _run_hook(script, store, instance=None)
        if isinstance(problem, hooks.CheckFailure):
            diags.append(Diagnostic("before", symbol, "hook-fail", problem.message,
                                    arity=definition.arity))
        elif isinstance(problem, hooks.ScriptEvalError):
            diags.append(Diagnostic("before", symbol, "eval-error",
                                    f"before_grounding: {problem}",
                                    arity=definition.arity))
        if diags and options.fail_fast:
            return report()

    # Step 3: the instance set.
    atoms, problem_diag = _instance_set(spec, facts, options)
    if problem_diag is not None:
        diags.append(problem_diag)
        return report()

    # Step 4: check instances, symbol by symbol, in term order.
    for symbol, group in _grouped_instances(spec, atoms):
        definition = spec.definitions[symbol]
        for fact in group:
            instance_diags = check_instance(definition, fact, store)
            if instance_diags:
                if options.fail_fast:
                    diags.append(instance_diags[0])
                    return report()
                diags.extend(instance_diags)

    # Step 5: aggregate facets and after hooks, in symbol order.
    for symbol in sorted(spec.definitions):
        final_diags = finalize(spec.definitions[symbol], store)
        if final_diags:
            if options.fail_fast:
                diags.append(final_diags[0])
                return report()
            diags.extend(final_diags)

    return report()


def _instance_set(spec: ValidationSpec, facts, options: RunOptions):
    """Step 3: input atoms plus whatever the auxiliary program derives."""
    facts = set(facts)
    if options.mode == "bridge":
        from . import emit

        if options.grounder is None:
            return None, Diagnostic("before", "", "bridge-error",
                                    "bridge mode needs a grounder command")
        if options.program_text is not None:
            program_text = options.program_text
        else:
            program_text = "\n".join(
                render(f.term()) + "." for f in sorted(facts, key=lambda f: sort_key(f.term())))
        if spec.asp_program:
            program_text += "\n" + spec.asp_program
        try:
            return emit.ground_with_external(program_text, options.grounder), None
        except emit.BridgeError as exc:
            return None, Diagnostic("before", "", "bridge-error", str(exc))

    rule_text = "\n".join(t for t in (spec.asp_program, options.extra_rules_text) if t)
    if not rule_text.strip():
        return facts, None
    try:
        program = datalog.parse_program(rule_text)
    except (datalog.ProgramSyntaxError, datalog.UnsafeRuleError,
            datalog.UnstratifiedError) as exc:
        return None, Diagnostic("before", "", "asp-syntax", str(exc))
    try:
        return datalog.evaluate(program, facts), None
    except datalog.EvaluationError as exc:
        return None, Diagnostic("before", "", "eval-error", str(exc))


def _grouped_instances(spec: ValidationSpec, atoms):
    """Defined symbols in name order, each group in term order.

    Atoms whose predicate matches a definition only by name but not by arity
    are left unvalidated, mirroring how a grounder would treat them as a
    different predicate.
    """
    groups: dict[str, list[Fact]] = {}
    for atom in atoms:
        definition = spec.definitions.get(atom.predicate)
        if definition is not None and len(atom.args) == definition.arity:
            groups.setdefault(atom.predicate, []).append(atom)
    for symbol in sorted(groups):
        yield symbol, sorted(groups[symbol], key=lambda f: sort_key(f.term()))
