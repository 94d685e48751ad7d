"""Apply a unifying substitution to one side of a statement pair (test helper)."""
from dataclasses import replace

from unclone.rewrite import map_stmt_exprs
from unclone.syntax import ast as A


def image(s, sigma, side: str):
    """``s`` with literals abstracted, declared types generalized and, on side B, names renamed."""
    line = s.line
    sites = {}
    for name, la, ia, lb, ib in sigma.literal_sites:
        if side == "a" and la == line:
            sites[ia] = name
        if side == "b" and lb == line:
            sites[ib] = name
    leaves = {id(x): sites[k] for k, x in enumerate(A.header_literals(s)) if k in sites}
    renames = sigma.rename_map if side == "b" else {}

    def f(e):
        if id(e) in leaves:
            return A.Var(leaves[id(e)])
        if isinstance(e, A.Var) and e.name in renames:
            return A.Var(renames[e.name])
        if isinstance(e, A.Lambda):
            return replace(e, params=tuple(replace(p, name=renames.get(p.name, p.name)) for p in e.params))
        return e

    out = map_stmt_exprs(s, f)
    if isinstance(out, A.VarDecl):
        out = replace(out, name=renames.get(out.name, out.name))
    if isinstance(out, A.ForEach):
        out = replace(out, var=renames.get(out.var, out.var))
    for sa, sb, ta, tb in sigma.type_sites:
        if (side == "a" and sa == line) or (side == "b" and sb == line):
            unified = sigma.type_map()[(ta, tb)]
            out = replace(out, type=unified)
    return out
