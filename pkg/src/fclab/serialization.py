"""Structured text (JSON) round-trip for series and frames.

Terms are records {exps: var -> "p/q", logs: var -> n, coeff: ...} where the
coefficient is "p/q" text (rational tag), a term list (parampoly tag), or
{re, im} (complex tag).  Exact tags round-trip bit-exactly; output key order
is canonical so identical inputs serialize identically byte for byte.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .series import Coefficient, FormalSeries, Frame, Monomial, ParamPoly, Window


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def frame_to_dict(frame: Frame) -> dict:
    return {
        var: {"lo": _frac_str(w.lo), "hi": _frac_str(w.hi), "logmax": w.logmax}
        for var, w in sorted(frame.windows.items())
    }


def frame_from_dict(data: dict) -> Frame:
    return Frame({
        var: Window(Fraction(spec["lo"]), Fraction(spec["hi"]), int(spec["logmax"]))
        for var, spec in data.items()
    })


def _coeff_to_obj(tag: str, c: Coefficient):
    if tag == "rational":
        return _frac_str(c)  # type: ignore[arg-type]
    if tag == "parampoly":
        assert isinstance(c, ParamPoly)
        return [
            {"z1": a, "z2": b, "coeff": _frac_str(v)}
            for (a, b), v in sorted(c.terms.items())
        ]
    return {"re": c.real, "im": c.imag}  # type: ignore[union-attr]


def _coeff_from_obj(tag: str, obj) -> Coefficient:
    if tag == "rational":
        return Fraction(obj)
    if tag == "parampoly":
        return ParamPoly({(t["z1"], t["z2"]): Fraction(t["coeff"]) for t in obj})
    return complex(obj["re"], obj["im"])


def series_to_dict(s: FormalSeries) -> dict:
    terms = []
    for m, c in s.sorted_terms():
        exps = {v: _frac_str(e) for v, e, _ in m.entries if e}
        logs = {v: b for v, _, b in m.entries if b}
        terms.append({"exps": exps, "logs": logs, "coeff": _coeff_to_obj(s.tag, c)})
    return {"tag": s.tag, "frame": frame_to_dict(s.frame), "terms": terms}


def series_from_dict(data: dict) -> FormalSeries:
    tag = data["tag"]
    frame = frame_from_dict(data["frame"])
    terms = {}
    for rec in data["terms"]:
        m = Monomial.make(
            {v: Fraction(e) for v, e in rec.get("exps", {}).items()},
            {v: int(b) for v, b in rec.get("logs", {}).items()},
        )
        terms[m] = _coeff_from_obj(tag, rec["coeff"])
    return FormalSeries(tag, terms, frame)


def series_to_text(s: FormalSeries) -> str:
    return json.dumps(series_to_dict(s), indent=2, sort_keys=True) + "\n"


def series_from_text(text: str) -> FormalSeries:
    return series_from_dict(json.loads(text))
