"""Plain-text export of a ConicProgram, one record per line.

Lets an external MISOCP solver rebuild and cross-check the same program.
The layout is documented in docs/program-format.md.
"""
from __future__ import annotations

import math
from urllib.parse import quote, unquote

from .program import BigMLink, ConicProgram, Row, Rsoc, Variable

HEADER = "FREQSEC-CONIC 1"


def _num(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _name(s: str) -> str:
    return quote(s, safe="[]()_-.:,") or "-"


def _terms(coefs: dict) -> list[str]:
    return [f"{j}:{_num(a)}" for j, a in sorted(coefs.items())]


def _affine(tag: str, e) -> list[str]:
    return [tag, _num(e[1])] + _terms(e[0])


def dumps_program(program: ConicProgram) -> str:
    out = [HEADER]
    for i, v in enumerate(program.variables):
        rec = "BIN" if v.kind == "B" else "VAR"
        fields = [rec, str(i), _name(v.name), _num(v.lb), _num(v.ub)]
        if rec == "VAR":
            fields.append(v.kind)
        out.append(" ".join(fields))
    out.append(" ".join(["OBJ", _num(program.objective_const)] + _terms(program.objective)))
    for r in program.rows:
        out.append(" ".join(["LIN", _name(r.name), r.sense, _num(r.rhs)] + _terms(r.coefs)))
    for c in program.rsoc_blocks:
        out.append(" ".join(["RSOC", _name(c.name)] + _affine("u", c.u) + _affine("v", c.v)
                            + _affine("w", c.w)))
    for link in program.links:
        out.append(" ".join(["LINK", str(link.binary), link.target, str(link.index), _num(link.big_m)]))
    for group in program.selector_groups:
        out.append(" ".join(["SEL"] + [f"{j}:{program.selector_interval.get(j, -1)}" for j in group]))
    return "\n".join(out) + "\n"


def _parse_terms(tokens) -> dict:
    coefs = {}
    for tok in tokens:
        j, a = tok.split(":")
        coefs[int(j)] = float(a)
    return coefs


def _parse_rsoc(tokens):
    parts, cur = {}, None
    for tok in tokens:
        if tok in ("u", "v", "w"):
            cur = tok
            parts[cur] = []
        else:
            parts[cur].append(tok)
    return [(_parse_terms(parts[k][1:]), float(parts[k][0])) for k in ("u", "v", "w")]


def loads_program(text: str) -> ConicProgram:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].strip() != HEADER:
        raise ValueError("not a conic program file")
    prog = ConicProgram()
    for ln in lines[1:]:
        tok = ln.split()
        rec = tok[0]
        if rec in ("VAR", "BIN"):
            if int(tok[1]) != len(prog.variables):
                raise ValueError(f"variable index out of order: {ln!r}")
            kind = "B" if rec == "BIN" else tok[5]
            prog.variables.append(Variable(unquote(tok[2]), float(tok[3]), float(tok[4]), kind))
        elif rec == "OBJ":
            prog.objective_const = float(tok[1])
            prog.objective = _parse_terms(tok[2:])
        elif rec == "LIN":
            prog.rows.append(Row(_parse_terms(tok[4:]), tok[2], float(tok[3]), unquote(tok[1])))
        elif rec == "RSOC":
            u, v, w = _parse_rsoc(tok[2:])
            prog.rsoc_blocks.append(Rsoc(u, v, w, unquote(tok[1])))
        elif rec == "LINK":
            prog.links.append(BigMLink(int(tok[1]), tok[2], int(tok[3]), float(tok[4])))
        elif rec == "SEL":
            group = []
            for t in tok[1:]:
                j, n = (int(s) for s in t.split(":"))
                group.append(j)
                if n >= 0:
                    prog.selector_interval[j] = n
            prog.selector_groups.append(group)
        else:
            raise ValueError(f"unknown record {rec!r}")
    return prog
