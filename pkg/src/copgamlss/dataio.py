"""Model configuration, CSV ingestion and fit persistence.

Configuration is plain ``key = value`` text::

    # comment
    margins = WEI, DAGUM
    copula = J0
    response1 = y1
    response2 = y2
    mu1 = linear(x1) + spline(x2, 10)
    mu2 = spline(x2)
    sigma1 = 1
    sigma2 = 1
    nu2 = linear(x3)
    theta = linear(x1) + mrf(region)
    adjacency = regions.txt
    tol = 1e-7

``1`` denotes an intercept-only predictor; every equation of the model must be
listed. Terms are ``linear(col)``, ``spline(col[, k])``, ``random(col)`` and
``mrf(col)``.

Fits are stored as versioned text whose floating point values are written in
hexadecimal, so a reload reproduces every bit.
"""

import csv
import json
import re
from dataclasses import dataclass, field, fields

import numpy as np

from .copulas import COPULA_TAGS
from .estimator import FitOptions, FitResult
from .exceptions import ConfigError, DomainError
from .likelihood import CopulaModel, ModelSpec, equation_names
from .margins import MARGIN_TAGS
from .smooth import Block, Design, Term

FORMAT_TAG = "copgamlss-fit"
FORMAT_VERSION = 1

_TERM_RE = re.compile(r"^\s*(\w+)\s*\(\s*([^,()]+?)\s*(?:,\s*([^()]+?)\s*)?\)\s*$")
_OPTION_KEYS = {f.name: f.type for f in fields(FitOptions)}
_EQUATIONS = ("mu1", "mu2", "sigma1", "sigma2", "nu1", "nu2", "theta")
_PLAIN_KEYS = ("margins", "margin1", "margin2", "copula", "response1", "response2", "data", "adjacency")


@dataclass
class ModelConfig:
    margin1: str
    margin2: str
    copula: str
    equations: dict
    response1: str = "y1"
    response2: str = "y2"
    data: str = None
    adjacency: str = None
    options: FitOptions = field(default_factory=FitOptions)
    text: str = ""

    def model_spec(self):
        return ModelSpec(self.margin1, self.margin2, self.copula, self.equations)


def parse_term(text):
    """``'spline(x2, 20)'`` -> ``Term('spline', 'x2', 20)``; raises ``ValueError``."""
    m = _TERM_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse term {text.strip()!r}; expected kind(column[, k])")
    kind, col, arg = m.group(1), m.group(2).strip(), m.group(3)
    if kind not in ("linear", "spline", "random", "mrf"):
        raise ValueError(f"unknown term kind {kind!r}; use linear, spline, random or mrf")
    if arg is not None:
        if kind != "spline":
            raise ValueError(f"{kind}() takes a single column")
        try:
            k = int(arg)
        except ValueError:
            raise ValueError(f"spline basis size must be an integer, got {arg!r}") from None
        if k < 4:
            raise ValueError(f"spline basis size must be at least 4, got {k}")
        return Term(kind, col, k)
    return Term(kind, col)


def parse_equation(text):
    text = text.strip()
    if text in ("1", ""):
        return ()
    return tuple(parse_term(part) for part in _split_plus(text))


def _split_plus(text):
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [p for p in parts if p.strip() not in ("1",)]


def _coerce_option(name, raw):
    typ = _OPTION_KEYS[name]
    if typ in (bool, "bool"):
        low = raw.strip().lower()
        if low in ("1", "true", "yes"):
            return True
        if low in ("0", "false", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typ in (int, "int"):
        return int(raw)
    return float(raw)


def parse_config(text, columns=None):
    """Parse and validate configuration text.

    ``columns`` (optional) is the set of available data columns; terms and
    responses referring to anything else are reported. All problems are
    collected into a single :class:`ConfigError`.
    """
    errors = []
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            errors.append(f"line {lineno}: {key!r} given twice (first on line {where[key]})")
            continue
        if key not in _PLAIN_KEYS and key not in _EQUATIONS and key not in _OPTION_KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        values[key] = val
        where[key] = lineno

    def at(key):
        return f"line {where[key]}" if key in where else "config"

    m1 = m2 = None
    if "margins" in values:
        tags = [t.strip() for t in values["margins"].strip("()").split(",") if t.strip()]
        if len(tags) != 2:
            errors.append(f"{at('margins')}: margins needs two tags, got {values['margins']!r}")
        else:
            m1, m2 = tags
    m1 = values.get("margin1", m1)
    m2 = values.get("margin2", m2)
    for k, tag in (("margin1", m1), ("margin2", m2)):
        if tag is None:
            errors.append(f"config: {k} is missing (set 'margins = A, B')")
        elif tag not in MARGIN_TAGS:
            errors.append(f"{at('margins' if 'margins' in values else k)}: unknown margin {tag!r}; valid: {', '.join(MARGIN_TAGS)}")
    cop = values.get("copula")
    if cop is None:
        errors.append("config: copula is missing")
    elif cop not in COPULA_TAGS:
        errors.append(f"{at('copula')}: unknown copula {cop!r}; valid: {', '.join(COPULA_TAGS)}")

    equations = {}
    for key in _EQUATIONS:
        if key in values:
            try:
                equations[key] = parse_equation(values[key])
            except ValueError as exc:
                errors.append(f"{at(key)}: {key}: {exc}")
                equations[key] = ()
    if m1 in MARGIN_TAGS and m2 in MARGIN_TAGS:
        expected = equation_names(m1, m2)
        given = [k for k in _EQUATIONS if k in values]
        if sorted(given) != sorted(expected):
            missing = [k for k in expected if k not in given]
            extra = [k for k in given if k not in expected]
            msg = f"config: margins {m1}, {m2} need {len(expected)} equations ({', '.join(expected)}), found {len(given)}"
            if missing:
                msg += f"; missing {missing}"
            if extra:
                msg += f"; not used by these margins {extra}"
            errors.append(msg)

    opts = FitOptions()
    for key in _OPTION_KEYS:
        if key in values:
            try:
                setattr(opts, key, _coerce_option(key, values[key]))
            except ValueError as exc:
                errors.append(f"{at(key)}: option {key}: {exc}")

    r1 = values.get("response1", "y1")
    r2 = values.get("response2", "y2")
    has_mrf = any(t.kind == "mrf" for terms in equations.values() for t in terms)
    if has_mrf and "adjacency" not in values:
        errors.append("config: mrf() terms need an 'adjacency' edge-list file")
    if columns is not None:
        columns = set(columns)
        for key, col in (("response1", r1), ("response2", r2)):
            if col not in columns:
                errors.append(f"{at(key)}: response column {col!r} not in data")
        for key, terms in equations.items():
            for t in terms:
                if t.column not in columns:
                    errors.append(f"{at(key)}: {key}: column {t.column!r} not in data")
    if errors:
        raise ConfigError(errors)
    return ModelConfig(m1, m2, cop, equations, r1, r2, values.get("data"), values.get("adjacency"), opts, text)


# ---------------------------------------------------------------------------
# CSV


def _raw_quoted(line):
    """Which fields of ``line`` are quoted, or None when it cannot be told."""
    raw = next(csv.reader([line], quoting=csv.QUOTE_NONE))
    return [f.strip().startswith('"') for f in raw]


def load_csv(path):
    """Read a rectangular CSV with a header into ``{column: array}``.

    Columns whose cells all parse as numbers (and are unquoted) become float
    arrays; others become string factors. Missing cells, ragged rows and stray
    text in numeric columns are errors.
    """
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DomainError(f"{path}: empty file")
    header = [h.strip() for h in next(csv.reader([lines[0]]))]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise DomainError(f"{path}: header has blank or duplicated names: {header}")
    rows, quoted = [], []
    for i, ln in enumerate(lines[1:], 2):
        fields_ = next(csv.reader([ln]))
        if len(fields_) != len(header):
            raise DomainError(f"{path}: line {i} has {len(fields_)} fields, header has {len(header)}")
        q = _raw_quoted(ln)
        quoted.append(q if len(q) == len(fields_) else [False] * len(fields_))
        rows.append([f.strip() for f in fields_])
    if not rows:
        raise DomainError(f"{path}: no data rows")
    data = {}
    for j, name in enumerate(header):
        cells = [r[j] for r in rows]
        for i, c in enumerate(cells):
            if c == "" or c.upper() in ("NA", "NAN", "NULL"):
                raise DomainError(f"{path}: missing value in column {name!r} at line {i + 2}")
        numeric = []
        for c in cells:
            try:
                numeric.append(float(c))
            except ValueError:
                numeric.append(None)
        any_quoted = any(q[j] for q in quoted)
        n_num = sum(v is not None for v in numeric)
        if any_quoted or n_num == 0:
            data[name] = np.array(cells, dtype=object)
        elif n_num < len(cells):
            i = next(k for k, v in enumerate(numeric) if v is None)
            raise DomainError(f"{path}: non-numeric value {cells[i]!r} in numeric column {name!r} at line {i + 2}")
        else:
            data[name] = np.array(numeric, dtype=float)
    return data


def write_csv(path, data, columns=None):
    columns = list(columns or data)
    n = len(data[columns[0]])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for i in range(n):
            w.writerow([repr(float(data[c][i])) if np.asarray(data[c]).dtype.kind == "f" else data[c][i] for c in columns])


# ---------------------------------------------------------------------------
# persistence


def _enc_array(name, arr):
    arr = np.asarray(arr, dtype=float)
    shape = ",".join(str(s) for s in arr.shape)
    vals = " ".join(float(x).hex() for x in arr.ravel())
    return f"array\t{name}\t{shape}\t{vals}"


def _dec_array(shape, vals):
    dims = tuple(int(s) for s in shape.split(",") if s != "")
    flat = np.array([float.fromhex(v) for v in vals.split()], dtype=float)
    return flat.reshape(dims)


def save_fit(path, result, config_text=""):
    """Write ``result`` as self-describing text (hexadecimal floats)."""
    model = result.model
    if not isinstance(model, CopulaModel):
        raise DomainError("only copula model fits can be saved")
    meta = {
        "margin1": model.m1.code, "margin2": model.m2.code, "copula": model.copula.tag,
        "names": model.names, "n": model.n, "converged": bool(result.converged),
        "outer_iter": int(result.outer_iter), "hessian_pd": bool(result.hessian_pd),
        "clamp_count": int(result.clamp_count), "messages": list(result.messages),
        "start_flags": list(result.start_flags), "edf_eq": result.edf_eq, "edf_terms": result.edf_terms,
        "config": config_text,
    }
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}", "meta\t" + json.dumps(meta, sort_keys=True)]
    for name in ("delta", "lambdas", "H", "H_p"):
        lines.append(_enc_array(name, getattr(result, name)))
    for name in ("loglik", "edf", "grad_norm"):
        lines.append(_enc_array(name, getattr(result, name)))
    for e, d in enumerate(model.designs):
        for b_i, b in enumerate(d.blocks):
            st = {k: v for k, v in b.state.items() if not isinstance(v, np.ndarray)}
            info = {"kind": b.kind, "label": b.label, "column": b.column, "centered": b.centered,
                    "width": b.width, "penalized": b.penalized, "state": st}
            lines.append(f"block\t{e}\t{b_i}\t" + json.dumps(info, sort_keys=True))
            for k, v in b.state.items():
                if isinstance(v, np.ndarray):
                    lines.append(_enc_array(f"block.{e}.{b_i}.state.{k}", v))
            if b.penalized:
                lines.append(_enc_array(f"block.{e}.{b_i}.D", b.D))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_fit(path):
    """Rebuild a :class:`FitResult` saved by :func:`save_fit`; its model can predict on new data."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(FORMAT_TAG):
        raise DomainError(f"{path}: not a saved fit")
    version = int(lines[0].split()[1])
    if version != FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported format version {version}")
    meta, arrays, blocks = None, {}, {}
    for ln in lines[1:]:
        kind, rest = ln.split("\t", 1)
        if kind == "meta":
            meta = json.loads(rest)
        elif kind == "array":
            name, shape, *vals = rest.split("\t")
            arrays[name] = _dec_array(shape, vals[0] if vals else "")
        elif kind == "block":
            e, b_i, js = rest.split("\t", 2)
            blocks[(int(e), int(b_i))] = json.loads(js)
    designs, equations = [], {}
    for e, name in enumerate(meta["names"]):
        blist, slices, terms, start = [], [], [], 1
        b_i = 0
        while (e, b_i) in blocks:
            info = blocks[(e, b_i)]
            state = dict(info["state"])
            prefix = f"block.{e}.{b_i}.state."
            for k, v in arrays.items():
                if k.startswith(prefix):
                    state[k[len(prefix):]] = v
            D = arrays.get(f"block.{e}.{b_i}.D") if info["penalized"] else None
            blk = Block(info["kind"], info["label"], info["column"], np.zeros((0, info["width"])), D, info["centered"], state)
            blist.append(blk)
            slices.append(slice(start, start + info["width"]))
            start += info["width"]
            terms.append(Term(info["kind"], info["column"], state.get("k", 10)))
            b_i += 1
        designs.append(Design(np.zeros((0, start)), blist, slices))
        equations[name] = tuple(terms)
    spec = ModelSpec(meta["margin1"], meta["margin2"], meta["copula"], equations)
    model = CopulaModel.skeleton(spec, designs)
    model.n_obs = meta["n"]
    return FitResult(
        model=model, delta=arrays["delta"], lambdas=arrays["lambdas"], loglik=float(arrays["loglik"]),
        H=arrays["H"], H_p=arrays["H_p"], edf=float(arrays["edf"]), edf_eq=meta["edf_eq"],
        edf_terms=meta["edf_terms"], converged=meta["converged"], outer_iter=meta["outer_iter"],
        grad_norm=float(arrays["grad_norm"]), hessian_pd=meta["hessian_pd"],
        clamp_count=meta["clamp_count"], messages=meta["messages"], start_flags=meta["start_flags"],
    ), meta.get("config", "")
