"""Command-line interface: ``qpb <area> <action> [options]``.

Every command runs one verification suite and prints a report (JSON with
schema ``qpb-report/1`` or a text rendering of the same JSON).  Exit codes:
0 when every check passes, 1 when a check fails, 2 on usage errors.

``--mutate`` deliberately breaks one input so that suites can be seen to
fail: flip-relation[:k], zero-c, s-sign, gamma-perturb, flip-differential,
non-hermitian.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from . import cqg, crossprod, diffcalc, odbundle
from .errors import PresentationError, QpbError, UnknownGroup
from .ncalg.jsonio import load_located, loads_located, presentation_from_doc
from .ncalg.poly import NCPoly, word_key
from .ncalg.scalar import ONE, Scalar
from .report import SCHEMA, Report

COMMANDS = {
    "group": ["verify"],
    "od": ["build", "lemmas", "invariants"],
    "bundle": ["extract", "reconstruct"],
    "flip": ["check"],
    "cohomology": [],
    "weil": ["check"],
}

MUTATIONS = ["flip-relation", "zero-c", "s-sign", "gamma-perturb", "flip-differential", "non-hermitian"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qpb", description="Quantum classifying spaces: construction and verification suites.")
    p.add_argument("area", choices=sorted(COMMANDS))
    p.add_argument("action", nargs="?", default=None)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--group", default=None, help="built-in group: su_q_2 or u1 (default su_q_2)")
    src.add_argument("--presentation", default=None, help="path to a group presentation JSON file")
    p.add_argument("--d", type=int, default=None, help="complexity level d (default 1; trivial bundles use n)")
    p.add_argument("--degree", type=int, default=None, help="degree bound N (≥ 2)")
    p.add_argument("--q", default="symbolic", help="'symbolic' or a positive rational square such as 4 or 9/4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--universal", action="store_true", help="use the universal classifying map")
    p.add_argument("--base", choices=["point", "line"], default="line", help="base space of the trivial bundle")
    p.add_argument("--map", default=None, help="classifying map JSON (bundle reconstruct)")
    p.add_argument("--calculus", default=None, help="first-order calculus JSON (default: the group's built-in)")
    p.add_argument("--mutate", default=None, help="one of: " + ", ".join(MUTATIONS))
    return p


# -- configuration ------------------------------------------------------------------------


def _parse_q(text: str):
    if text == "symbolic":
        return None
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--q must be 'symbolic' or a rational number, got {text!r}") from None
    if q <= 0:
        raise UsageError("--q must be positive")
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise UsageError("--q must be the square of a rational (scalars live in Q(q^(1/2)))")
    return Fraction(rn, rd)


def _config(args) -> dict:
    cmd = args.area if args.action is None else f"{args.area} {args.action}"
    allowed = COMMANDS[args.area]
    if allowed and args.action not in allowed:
        raise UsageError(f"'{args.area}' takes one of: {', '.join(allowed)}")
    if not allowed and args.action is not None:
        raise UsageError(f"'{args.area}' takes no action argument")
    if args.degree is not None and args.degree < 2:
        raise UsageError("--degree must be at least 2")
    if args.d is not None and args.d < 1:
        raise UsageError("--d must be at least 1")
    mutation, mut_arg = None, None
    if args.mutate:
        mutation, _, mut_arg = args.mutate.partition(":")
        if mutation not in MUTATIONS:
            raise UsageError(f"unknown mutation {args.mutate!r}; choose from {', '.join(MUTATIONS)}")
    return {"command": cmd, "group": args.group, "presentation": args.presentation, "d": args.d,
            "degree": args.degree, "q": args.q, "seed": args.seed, "format": args.format,
            "universal": bool(args.universal), "base": args.base, "map": args.map,
            "calculus": args.calculus, "mutate": args.mutate, "_mutation": mutation, "_mut_arg": mut_arg,
            "_out": args.out}


def _flip_last_term(text: str, pres) -> str:
    poly = pres.parse_poly(text)
    low = min(poly.terms, key=word_key)
    terms = dict(poly.terms)
    terms[low] = -terms[low]
    return pres.format_poly(NCPoly._raw(terms))


def _load_group(cfg: dict, degree_bound: int) -> cqg.HopfGroupData:
    name = cfg["group"] or ("su_q_2" if cfg["presentation"] is None else None)
    if cfg["_mutation"] != "flip-relation":
        if name is not None:
            return cqg.builtin_group(name, max(degree_bound, cqg.DEFAULT_BOUND))
        return cqg.load_group(cfg["presentation"], max(degree_bound, cqg.DEFAULT_BOUND))
    # rewrite one relation with the sign of its lowest term flipped
    if name is not None:
        if name not in cqg.BUILTIN_GROUPS:
            raise UnknownGroup(f"unknown group {name!r}; built-ins are {', '.join(cqg.BUILTIN_GROUPS)}")
        text = cqg._builtin_text(name)
    else:
        with open(cfg["presentation"], encoding="utf-8") as fh:
            text = fh.read()
    data = json.loads(text)
    pres = presentation_from_doc(loads_located(text))
    k = int(cfg["_mut_arg"] or 0)
    rels = data.get("relations", [])
    if not 0 <= k < len(rels):
        raise UsageError(f"flip-relation index {k} out of range (0..{len(rels) - 1})")
    if not isinstance(rels[k], str):
        raise UsageError("flip-relation needs relations written as strings")
    rels[k] = _flip_last_term(rels[k], pres)
    G = cqg.group_from_doc(loads_located(json.dumps(data)), max(degree_bound, cqg.DEFAULT_BOUND),
                           name=(name or pres.name or "group") + "~mutated")
    G.m = cqg.find_multiplet_power(G)
    return G


# -- suites ----------------------------------------------------------------------------------


def _group_verify(cfg, rep: Report):
    N = cfg["degree"] or 4
    G = _load_group(cfg, N)
    rep.info.update({"group": G.name, "degree_bound": N, "multiplet_power": G.m})
    rep.extend(cqg.verify_hopf_axioms(G, N))
    h = cqg.haar_state(G, N)
    rep.check("haar.unique", True, degree_bound=N)
    values = {}
    for w in G.A.normal_words_up_to(min(N, 4)):
        v = h({w: ONE})
        if not v.is_zero():
            values[G.A.presentation.format_word(w) or "1"] = str(v)
    rep.info["haar_nonzero_values"] = values
    C = cqg.canonical_intertwiner(G)
    rep.info["intertwiner"] = C.as_strings()
    res = []
    for i in range(G.n):
        for j in range(G.n):
            lhs = NCPoly()
            rhs = NCPoly()
            for k in range(G.n):
                lhs = lhs + G.antipode(G.antipode(G.u[i][k])).scale(C.C[k][j])
                rhs = rhs + G.u[k][j].scale(C.C[i][k])
            r = G.A.reduce(lhs - rhs)
            if not r.is_zero():
                res.append(G.fmt(r))
    rep.check("intertwiner.identity", not res, res or None, identity="κ²(u) C = C u")
    return {"haar": values}


def _od(cfg, G, default_N=4):
    N = cfg["degree"] or default_N
    d = cfg["d"] or 1
    return odbundle.build_od(G, d, N), N, d


def _od_build(cfg, rep: Report):
    G = _load_group(cfg, cfg["degree"] or 4)
    Od, N, d = _od(cfg, G)
    rep.extend(odbundle.verify_od(Od))
    rep.info["dimension_table"] = [{"length": k, "dim": n} for k, n in enumerate(odbundle.od_dimensions(Od))]


def _multiplet(cfg, Od):
    C = None
    if cfg["_mutation"] == "zero-c":
        n = Od.n
        C = [[Scalar.parse("0")] * n for _ in range(n)]
    hat = odbundle.find_conjugate_multiplet(Od, C)
    S = odbundle.pairing_matrix(Od, hat)
    if cfg["_mutation"] == "s-sign":
        S = S.scaled(-1)
    return hat, S


def _od_lemmas(cfg, rep: Report):
    G = _load_group(cfg, cfg["degree"] or 4)
    Od, N, d = _od(cfg, G)
    hat, S = _multiplet(cfg, Od)
    rep.info["multiplet_power"] = hat.m
    rep.info["pairing_matrix"] = {",".join(str(x + 1) for x in a) + f";{k + 1}": Od.fmt(s)
                                  for (a, k), s in sorted(S.entries.items())}
    rep.extend(odbundle.multiplet_report(Od, hat), prefix="multiplet.")
    rep.extend(odbundle.pairing_report(Od, S), prefix="pairing.")
    inv = odbundle.invariants_basis(Od, min(N, 3))
    rep.extend(odbundle.verify_commutation_relations(Od, hat, S, inv, seed=cfg["seed"]))


def _od_invariants(cfg, rep: Report):
    G = _load_group(cfg, cfg["degree"] or 4)
    Od, N, d = _od(cfg, G)
    K = min(N, 3)
    inv = odbundle.invariants_basis(Od, K)
    oracle = odbundle.fixed_point_dims(Od, K)
    dims = inv.dims()
    rep.info["invariant_dims"] = dims
    rep.info["basis"] = [Od.fmt(x) for x in inv.upto(min(K, 2))]
    for k in range(K + 1):
        rep.check(f"invariant_dims[{k}]", dims[k] == oracle[k], projection=dims[k], kernel=oracle[k])
    for i, x in enumerate(inv.upto(K)):
        res = Od.invariance_defect(x)
        rep.check(f"basis_invariant[{i}]", not res)
    try:
        hat = odbundle.find_conjugate_multiplet(Od)
    except QpbError as exc:
        rep.info["multiplet"] = f"{type(exc).__name__}: {exc}"
        return
    rep.extend(odbundle.universal_bundle_check(Od, hat, K, inv), prefix="universal.")


def _classifying_map(cfg, G, N):
    """(cm, Od, inv) for the universal map or the trivial bundle over the chosen base."""
    if cfg["universal"]:
        d = cfg["d"] or 1
        Od = odbundle.build_od(G, d, max(N + 1, 4))
        inv = odbundle.invariants_basis(Od, min(N, 3))
        hat, S = _multiplet(cfg, Od)
        cm = crossprod.universal_classifying_map(Od, inv, hat, S)
    else:
        d = cfg["d"] or G.n
        if d != G.n:
            raise UsageError(f"the trivial bundle over {G.name} has complexity level n = {G.n}; drop --d or pass --universal")
        Od = odbundle.build_od(G, d, max(N + 1, 4))
        inv = odbundle.invariants_basis(Od, min(N, 3))
        hat, S = _multiplet(cfg, Od)
        cm = crossprod.trivial_classifying_map(crossprod.preset_base(cfg["base"]), Od, hat, S)
    if cfg["_mutation"] == "gamma-perturb":
        base = cm

        def perturbed(x, _base=base):
            return _base.gamma(x).scale(2)
        cm = base.with_gamma(perturbed, base.kind + "~perturbed")
    return cm, Od, inv


def _bundle_extract(cfg, rep: Report):
    N = cfg["degree"] or 3
    G = _load_group(cfg, 4)
    cm, Od, inv = _classifying_map(cfg, G, N)
    rep.info.update({"kind": cm.kind, "d": cm.d, "base": cm.V.name})
    rep.extend(crossprod.validate_classifying_map(cm, inv, N))
    if not cm.V.is_invariant_base:
        rep.info["classifying_map"] = crossprod.classifying_map_to_json(cm, odbundle.invariants_basis(Od, 4), 4)


def _bundle_reconstruct(cfg, rep: Report):
    N = cfg["degree"] or 3
    G = _load_group(cfg, 4)
    if cfg["map"]:
        d = cfg["d"] or G.n
        Od = odbundle.build_od(G, d, 4)
        inv = odbundle.invariants_basis(Od, 4)
        cm = crossprod.classifying_map_from_json(load_located(cfg["map"]), Od)
        rep.info.update({"kind": cm.kind, "d": d, "base": cm.V.name, "gamma_degree": cm.gamma_degree})
        B = crossprod.build_bundle(cm, N, inv, seed=cfg["seed"])
        rep.extend(crossprod.verify_bundle_axioms(B, inv, min(N, (cm.gamma_degree or 2) // 2 - 1 or 1),
                                                  seed=cfg["seed"], count=3), prefix="axioms.")
        return
    cm, Od, inv = _classifying_map(cfg, G, N)
    rep.info.update({"kind": cm.kind, "d": cm.d, "base": cm.V.name})
    B = crossprod.build_bundle(cm, N, inv, seed=cfg["seed"])
    if cfg["universal"]:
        sub = crossprod.universal_reconstruction(B, N)
        rep.extend(sub, prefix="reconstruction.")
        rep.info["dimension_table"] = sub.info["dimension_table"]
    else:
        rep.extend(crossprod.trivial_round_trip(B, min(N, 2)), prefix="reconstruction.")
    rep.extend(crossprod.verify_bundle_axioms(B, inv, min(N, 2), seed=cfg["seed"]), prefix="axioms.")
    rep.info["freeness_witnessed_on"] = "generators u_ij of the group"


def _flip_check(cfg, rep: Report):
    N = cfg["degree"] or 3
    G = _load_group(cfg, 4)
    cm, Od, inv = _classifying_map(cfg, G, N)
    rep.extend(crossprod.flip_check(cm, inv, N, seed=cfg["seed"]))


def _fodc(cfg, G_name):
    if cfg["calculus"]:
        fodc = diffcalc.load_fodc(cfg["calculus"])
    else:
        fodc = diffcalc.builtin_fodc(G_name)
    if cfg["_mutation"] == "flip-differential":
        env = fodc.env
        g = min(g for g in env.dtable if g not in fodc.theta_ids and not env.dtable[g].is_zero())
        env.dtable[g] = -env.dtable[g]
        env._d = {(): {}}
    return fodc


def _group_name(cfg) -> str:
    if cfg["presentation"]:
        raise UsageError("diffcalc commands take --group or --calculus, not --presentation")
    name = cfg["group"] or "u1"
    if name not in cqg.BUILTIN_GROUPS:
        raise UnknownGroup(f"unknown group {name!r}; built-ins are {', '.join(cqg.BUILTIN_GROUPS)}")
    return name


def _cohomology(cfg, rep: Report):
    bound = cfg["degree"] or 3
    fodc = _fodc(cfg, _group_name(cfg))
    sub, *_ = diffcalc.characteristic_classes(fodc, bound, cfg["seed"])
    rep.extend(sub)


def _weil_check(cfg, rep: Report):
    bound = cfg["degree"] or 3
    fodc = _fodc(cfg, _group_name(cfg))
    M = diffcalc.builtin_base_calculus("plane")
    alpha = "x dx" if cfg["_mutation"] == "non-hermitian" else "x dy"
    rep.info["alpha"] = alpha
    rep.extend(diffcalc.weil_pipeline(fodc, M, [M.R.parse(alpha)] * fodc.s, bound, cfg["seed"]))


SUITES = {
    "group verify": _group_verify,
    "od build": _od_build,
    "od lemmas": _od_lemmas,
    "od invariants": _od_invariants,
    "bundle extract": _bundle_extract,
    "bundle reconstruct": _bundle_reconstruct,
    "flip check": _flip_check,
    "cohomology": _cohomology,
    "weil check": _weil_check,
}


# -- output ----------------------------------------------------------------------------------------


def _specialize(obj, s: Fraction):
    """Evaluate scalar strings in info tables at q^(1/2) = s where they parse as scalars."""
    if isinstance(obj, dict):
        return {k: _specialize(v, s) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_specialize(v, s) for v in obj]
    if isinstance(obj, str):
        try:
            return str(Scalar.parse(obj).evaluate_s(s))
        except (QpbError, ValueError, ZeroDivisionError):
            return obj
    return obj


def assemble(cfg: dict, rep: Report) -> dict:
    public = {k: v for k, v in cfg.items() if not k.startswith("_") and k != "format"}
    doc = {"schema": SCHEMA, "command": cfg["command"], "config": public}
    doc.update(rep.as_dict())
    s = _parse_q(cfg["q"])
    if s is not None:
        doc["specialized"] = {"q": str(s * s), "info": _specialize(
            {k: v for k, v in rep.info.items() if k in ("haar_nonzero_values", "intertwiner", "maurer_cartan")}, s)}
    return doc


def render_text(doc: dict) -> str:
    lines = [f"qpb {doc['command']}: {'PASS' if doc['ok'] else 'FAIL'} "
             f"({doc['summary']['passed']}/{doc['summary']['checks']} checks passed)"]
    cfg = doc["config"]
    lines.append("config: " + ", ".join(f"{k}={cfg[k]}" for k in sorted(cfg) if cfg[k] is not None))
    for key in sorted(doc["info"]):
        lines.append(f"{key}: {json.dumps(doc['info'][key], sort_keys=True, ensure_ascii=False)}")
    for e in doc["checks"]:
        if e["status"] != "pass":
            lines.append(f"FAIL {e['check']}" + (f"  [{e['identity']}]" if "identity" in e else ""))
            for t in e.get("residual_terms", []):
                lines.append(f"    {t}")
            if "error" in e:
                lines.append(f"    {e['error']}")
    if "specialized" in doc:
        lines.append("specialized: " + json.dumps(doc["specialized"], sort_keys=True, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def render(doc: dict, fmt: str) -> str:
    if fmt == "text":
        return render_text(doc)
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def run(argv=None):
    """Returns (exit code, rendered output, report dict or None, output path or None)."""
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        _parse_q(cfg["q"])
    except UsageError as exc:
        return 2, f"qpb: usage error: {exc}\n", None, None
    rep = Report(cfg["command"])
    try:
        SUITES[cfg["command"]](cfg, rep)
    except UsageError as exc:
        return 2, f"qpb: usage error: {exc}\n", None, None
    except (UnknownGroup, PresentationError, FileNotFoundError, IsADirectoryError) as exc:
        return 2, f"qpb: input error: {exc}\n", None, None
    except QpbError as exc:
        rep.check("pipeline.error", False, error=f"{type(exc).__name__}: {exc}")
    doc = assemble(cfg, rep)
    return (0 if doc["ok"] else 1), render(doc, cfg["format"]), doc, cfg["_out"]


def main(argv=None) -> int:
    code, out, _, path = run(argv)
    if code == 2:
        sys.stderr.write(out)
    elif path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
