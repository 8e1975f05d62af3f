"""Optional native accelerator for the branch-and-bound search.

The C source shipped with the package is compiled once into a cached
shared library and loaded through ctypes. Everything degrades gracefully:
if no C compiler is available (or compilation fails for any reason) the
pure-Python engine in solver.py is used instead. Set CONACQ_PURE_PYTHON=1
to force the fallback, e.g. for differential testing.
"""

from __future__ import annotations

import ctypes
import hashlib
import os
import subprocess
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from conacq.core import Constraint, RelKind, Var

_SRC = Path(__file__).with_name("_search.c")

_KIND_CODE = {
    RelKind.EQ: 0,
    RelKind.NEQ: 1,
    RelKind.LT: 2,
    RelKind.LEQ: 3,
    RelKind.GT: 4,
    RelKind.GEQ: 5,
    RelKind.FLOORDIV_NEQ: 6,
}

_lib: Optional[ctypes.CDLL] = None
_load_attempted = False

_I32 = ctypes.POINTER(ctypes.c_int32)
_I64 = ctypes.POINTER(ctypes.c_int64)


def _cache_dir() -> Path:
    base = os.environ.get("XDG_CACHE_HOME")
    root = Path(base) if base else Path.home() / ".cache"
    return root / "conacq"


def _compile() -> Path:
    src = _SRC.read_bytes()
    tag = hashlib.sha256(src).hexdigest()[:16]
    cache = _cache_dir()
    so = cache / f"search-{tag}.so"
    if so.exists():
        return so
    cache.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(suffix=".so", dir=cache)
    os.close(fd)
    try:
        for cc in ("cc", "gcc", "clang"):
            proc = subprocess.run(
                [cc, "-O2", "-fPIC", "-shared", "-o", tmp, str(_SRC)],
                capture_output=True,
            )
            if proc.returncode == 0:
                os.replace(tmp, so)
                return so
        raise RuntimeError("no working C compiler found")
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load() -> Optional[ctypes.CDLL]:
    """The compiled library, or None when the accelerator is unavailable."""
    global _lib, _load_attempted
    if _load_attempted:
        return _lib
    _load_attempted = True
    if os.environ.get("CONACQ_PURE_PYTHON"):
        return None
    try:
        lib = ctypes.CDLL(str(_compile()))
        fn = lib.conacq_search
        fn.restype = ctypes.c_int
        fn.argtypes = [
            ctypes.c_int, _I32, _I32,
            ctypes.c_int, _I32, _I32, _I32, _I32,
            ctypes.c_int, _I32, _I32, _I32, _I32, _I64,
            ctypes.c_int, ctypes.c_int,
            ctypes.c_double, ctypes.c_uint64,
            _I32, _I64, _I32,
        ]
        _lib = lib
    except Exception:
        _lib = None
    return _lib


def _i32(values: Sequence[int]) -> ctypes.Array:
    return (ctypes.c_int32 * max(len(values), 1))(*values)


def _i64(values: Sequence[int]) -> ctypes.Array:
    return (ctypes.c_int64 * max(len(values), 1))(*values)


def run_search(
    lib: ctypes.CDLL,
    variables: Sequence[Var],
    domains: Sequence[Sequence[int]],
    hard: Sequence[Constraint],
    candidates: Sequence[tuple[Constraint, int]],
    seed: int,
    deadline: Optional[float],
    decision_only: bool,
    first_feasible: bool,
) -> tuple[Optional[dict[Var, int]], int, bool]:
    """Run the native search; returns (best binding, value, timed_out)."""
    n = len(variables)
    idx = {v: i for i, v in enumerate(variables)}
    dom_off = [0] * (n + 1)
    dom_val: list[int] = []
    for i, dom in enumerate(domains):
        dom_val.extend(dom)
        dom_off[i + 1] = len(dom_val)
    h_a = [idx[c.scope[0]] for c in hard]
    h_b = [idx[c.scope[1]] for c in hard]
    h_kind = [_KIND_CODE[c.kind] for c in hard]
    h_param = [c.param or 0 for c in hard]
    c_a = [idx[c.scope[0]] for c, _ in candidates]
    c_b = [idx[c.scope[1]] for c, _ in candidates]
    c_kind = [_KIND_CODE[c.kind] for c, _ in candidates]
    c_param = [c.param or 0 for c, _ in candidates]
    c_w = [w for _, w in candidates]

    out_assign = (ctypes.c_int32 * max(n, 1))()
    out_value = ctypes.c_int64(0)
    out_flags = (ctypes.c_int32 * 2)()
    rc = lib.conacq_search(
        n, _i32(dom_off), _i32(dom_val),
        len(hard), _i32(h_a), _i32(h_b), _i32(h_kind), _i32(h_param),
        len(candidates), _i32(c_a), _i32(c_b), _i32(c_kind), _i32(c_param), _i64(c_w),
        int(decision_only), int(first_feasible),
        -1.0 if deadline is None else float(deadline),
        ctypes.c_uint64(seed & (2**64 - 1)),
        out_assign, ctypes.byref(out_value), out_flags,
    )
    if rc != 0:
        raise RuntimeError(f"native search failed with code {rc}")
    if not out_flags[0]:
        return None, 0, bool(out_flags[1])
    binding = {v: int(out_assign[i]) for i, v in enumerate(variables)}
    return binding, int(out_value.value), bool(out_flags[1])
