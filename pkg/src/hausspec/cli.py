"""Command-line front end.

Every subcommand prints either plain text (default), JSON or CSV.  JSON and
CSV output start with a header carrying the command and the seed, and every
number is tagged exact or window.  Exit codes: 0 ok, 1 malformed input,
2 precondition violated, 3 resource cap hit, 4 inconclusive verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from fractions import Fraction

from .errors import InconclusiveError, PreconditionError, ResourceLimitError

EXIT_OK, EXIT_MALFORMED, EXIT_PRECONDITION, EXIT_RESOURCE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4


class MalformedInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise MalformedInput(message)


class Output:
    def __init__(self, command, fmt, seed):
        self.command = command
        self.fmt = fmt
        self.seed = seed

    def header(self):
        return {"command": self.command, "seed": self.seed}

    def emit(self, text_lines, payload, rows=None, columns=None):
        """Render one result.  rows/columns drive CSV; payload drives JSON."""
        if self.fmt == "text":
            return "\n".join(text_lines) + "\n"
        if self.fmt == "json":
            return json.dumps({**self.header(), "result": payload}, sort_keys=True) + "\n"
        buf = io.StringIO()
        buf.write(f"# command={self.command} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        if rows is None:
            columns = ["key", "value", "kind"]
            rows = [[k, v, "exact"] for k, v in payload.items() if not isinstance(v, (list, dict))]
        w.writerow(columns)
        w.writerows(rows)
        return buf.getvalue()


def _frac_list(text):
    return [Fraction(s.strip()) for s in text.split(",") if s.strip()]


def _int_list(text):
    return [int(s) for s in text.split(",") if s.strip()]


def _split_gens(text):
    return [s.strip() for s in (text or "").split(";") if s.strip()]


# --- subcommand handlers --------------------------------------------------------


def cmd_witt(a, out):
    from .fplie import witt_dimension

    v = witt_dimension(a.d, a.n)
    return out.emit([str(v)], {"d": a.d, "n": a.n, "value": v, "kind": "exact"},
                    [[a.d, a.n, v, "exact"]], ["d", "n", "witt", "kind"])


def cmd_hall(a, out):
    from .fplie import hall_basis

    B = hall_basis(a.d, a.W)
    rows = [[c.rank, c.weight, str(c)] for c in B]
    return out.emit([str(c) for c in B], {"d": a.d, "W": a.W, "elements": [str(c) for c in B],
                    "counts": {str(n): B.count(n) for n in range(1, a.W + 1)}, "kind": "exact"},
                    rows, ["rank", "weight", "commutator"])


def _lie_gens(a):
    from .fplie import ensure_basis, parse_lie_element

    ensure_basis(a.d, a.W)
    return [parse_lie_element(s, a.d, a.p, a.W) for s in _split_gens(a.gens)]


def cmd_closure(a, out):
    from .fplie import subalgebra_closure

    M = subalgebra_closure(_lie_gens(a), a.W, d=a.d, p=a.p)
    dims = M.dims()
    payload = {"d": a.d, "p": a.p, "W": a.W, "dims": dims, "kind": "exact"}
    if a.matrices:
        payload["degrees"] = {str(n): M.matrix(n) for n in range(1, a.W + 1)}
    rows = [[n, dims[n - 1], "exact"] for n in range(1, a.W + 1)]
    return out.emit([" ".join(map(str, dims))], payload, rows, ["n", "dim", "kind"])


def cmd_density(a, out):
    from .fplie import density_sequence, subalgebra_closure
    from .mixedlie import MixedElement, mixed_closure, mixed_density_sequence

    gens = _lie_gens(a)
    if a.mixed:
        H = mixed_closure([MixedElement.from_lie(g) for g in gens], a.W, d=a.d, p=a.p)
        seq, dims = mixed_density_sequence(H), H.dims()
    else:
        M = subalgebra_closure(gens, a.W, d=a.d, p=a.p)
        seq, dims = density_sequence(M), M.dims()
    rows = [[n, dims[n - 1], str(seq[n - 1]), f"{float(seq[n - 1]):.12g}", "exact"] for n in range(1, a.W + 1)]
    if a.figure:
        from .plotting import plot_series

        plot_series(a.figure, {"Delta_n" if a.mixed else "delta_n": [(n, x) for n, x in enumerate(seq, 1)]},
                    title="partial densities")
    return out.emit([f"{n} {dims[n - 1]} {seq[n - 1]}" for n in range(1, a.W + 1)],
                    {"dims": dims, "densities": [str(x) for x in seq], "mixed": a.mixed, "kind": "exact"},
                    rows, ["n", "dim", "density", "float", "kind"])


def cmd_construct(a, out):
    from .mixedlie import construct_density_subalgebra

    C = construct_density_subalgebra(Fraction(a.alpha), a.d, a.p, a.W)
    if a.figure:
        from .plotting import plot_trace

        plot_trace(a.figure, C)
    payload = {
        "alpha": str(C.alpha),
        "generators": [g.to_dict() for g in C.generators],
        "trace": [{"n": r.n, "l_circ": r.l_circ, "partial_dim": r.partial_dim, "lower_bound": str(r.lower_bound),
                   "ratio": str(r.ratio), "added": r.added, "stalled": r.stalled} for r in C.trace],
        "condition_i": C.condition_i_holds(),
        "condition_ii_stages": C.condition_ii_stages(),
        "kind": "exact",
    }
    rows = [[r.n, r.l_circ, r.partial_dim, str(r.lower_bound), str(r.ratio), r.added, int(r.stalled), "exact"]
            for r in C.trace]
    text = [C.generators_json(), C.trace_csv().rstrip("\n")]
    return out.emit(text, payload, rows,
                    ["n", "l_circ", "partial_dim", "lower_bound", "ratio", "added", "stalled", "kind"])


def cmd_collect(a, out):
    from .collect import collect, parse_word

    nf = collect(parse_word(a.word, a.d, a.p), a.r)
    rows = [[str(e.tree), e.e, e.j, e.A, "exact"] for e in nf.entries]
    return out.emit([str(nf)], {"normal_form": json.loads(nf.to_json()), "text": str(nf), "kind": "exact"},
                    rows, ["core", "e", "j", "A", "kind"])


def cmd_phi(a, out):
    from .collect import parse_word, phi

    res = phi(parse_word(a.word, a.d, a.p), a.W)
    return out.emit([f"{res.element}  (degree {res.degree})"], {**res.to_dict(), "kind": "exact"},
                    [[str(res.element), res.degree, res.status, "exact"]], ["phi", "degree", "status", "kind"])


def cmd_verify_phi(a, out):
    from .collect import parse_word, verify_phi_correspondence

    gens = []
    for s in _split_gens(a.gens):
        w = parse_word(s, a.d, a.p)
        if len(w.factors) != 1 or w.factors[0][1] != 1:
            raise PreconditionError(f"generator {s!r} must be a single decorated commutator")
        gens.append(w.factors[0][0])
    rep = verify_phi_correspondence(gens, a.W, a.samples, random.Random(a.seed), d=a.d, p=a.p)
    payload = {**rep.to_dict(), "kind": "exact"}
    rows = [[k, v if not isinstance(v, list) else " ".join(map(str, v)), "exact"] for k, v in rep.to_dict().items()]
    text = [f"{rep.contained}/{rep.conclusive} conclusive samples in H; {rep.inconclusive} inconclusive; "
            f"passed={rep.passed}"]
    return out.emit(text, payload, rows, ["key", "value", "kind"])


def cmd_product_hdim(a, out):
    from .hdim import ProductSubgroupSpec, liminf_window, product_hdim

    ranks = _int_list(a.ranks) if a.ranks else [2] * a.t
    spec = ProductSubgroupSpec(a.t, a.k, Fraction(a.inner), tuple(ranks))
    v = product_hdim(spec)
    payload = {"value": str(v), "float": float(v), "kind": "exact"}
    rows = [["hdim", str(v), "exact"]]
    text = [str(v)]
    if a.window:
        from .hdim import partial_sums, product_logindex_sequence
        from .mixedlie import construct_density_subalgebra

        C = construct_density_subalgebra(spec.inner_dim, ranks[0], a.p, a.window)
        inner = partial_sums(C.subalgebra.dims())
        seq = product_logindex_sequence(spec, inner, a.window)
        wmin, trend = liminf_window(seq)
        payload["window"] = {"value": str(wmin), "float": float(wmin), "trend": trend, "kind": "window",
                             "entries": [list(e) for e in seq.entries]}
        rows.append(["window_min", str(wmin), "window"])
        rows.append(["trend", trend, "window"])
        text.append(f"window {float(wmin):.6f} ({trend})")
        if a.figure:
            from .plotting import plot_series

            plot_series(a.figure, {"ratio": [(i, Fraction(x, y)) for i, x, y in seq.entries]},
                        title="product log-index ratios", hlines=[v])
    return out.emit(text, payload, rows, ["key", "value", "kind"])


def _lattice_setup(a):
    from .lattice import GroupAction, PadicLattice, unitriangular_example

    if a.config_lattice:
        with open(a.config_lattice) as fh:
            data = json.load(fh)
        L = PadicLattice.from_dict(data["lattice"]) if "lattice" in data else PadicLattice.standard(
            int(data["p"]), len(data["generators"][0]))
        A = GroupAction(int(data["p"]), data["generators"], L)
        return L, A
    L = PadicLattice.standard(a.p, a.rank)
    return L, GroupAction(a.p, [unitriangular_example(a.rank)], L)


def cmd_lambda_series(a, out):
    from .lattice import ell_u, lambda_series, log_index

    L, A = _lattice_setup(a)
    S = lambda_series(L, A, a.imax)
    rows, text, items = [], [], []
    for i, M in enumerate(S):
        li = log_index(L, M)
        ell, u = ell_u(L, M)
        chain = M.contains(L.p_power(i)) and (a.c is None or i < a.c or L.p_power(i - a.c).contains(M))
        basis = ";".join(",".join(str(x) for x in r) for r in M.basis)
        rows.append([i, li, ell, u, int(chain), basis, "exact"])
        text.append(f"{i} {li} {ell} {u} {basis}")
        items.append({"i": i, "log_index": li, "ell": ell, "u": u, "chain": chain, "basis": M.to_dict()["basis"]})
    return out.emit(text, {"series": items, "kind": "exact"}, rows,
                    ["i", "log_index", "ell", "u", "chain_ok", "basis", "kind"])


def cmd_c_equiv(a, out):
    from .lattice import check_c_equivalence, lambda_series, p_power_series

    L, A = _lattice_setup(a)
    flags = check_c_equivalence(lambda_series(L, A, a.imax), p_power_series(L, a.imax), a.c)
    rows = [[i, int(f), "exact"] for i, f in enumerate(flags)]
    return out.emit([f"{i} {f}" for i, f in enumerate(flags)], {"c": a.c, "holds": flags, "all": all(flags),
                    "kind": "exact"}, rows, ["i", "holds", "kind"])


def _spectrum_setup(a):
    from .spectra import GapSequence, SpectrumTarget, build_filtration

    target = SpectrumTarget(tuple(_frac_list(a.X)), a.p)
    if a.gaps in ("tower", "paper", "paper_tower"):
        gaps = GapSequence()
    elif a.gaps == "custom":
        gaps = GapSequence("custom", base=a.base)
    else:
        raise MalformedInput(f"unknown gap mode {a.gaps!r}")
    return build_filtration(target, gaps, a.imax)


def cmd_build_spectrum(a, out):
    F = _spectrum_setup(a)
    d = F.to_dict()
    rows = [[x["i"], x["k"], x["j"], x["t"], x["e_prev"], x["e"], x["log_index"], "exact"] for x in d["indices"]]
    text = [f"i={x['i']} k={x['k']} j={x['j']} log_index={x['log_index'] if len(x['log_index']) < 40 else '2^' + str(int(x['log_index']).bit_length() - 1) + '+...'}"
            for x in d["indices"]]
    return out.emit(text, {**d, "kind": "exact"}, rows, ["i", "k", "j", "t", "e_prev", "e", "log_index", "kind"])


def cmd_scan_spectrum(a, out):
    from .spectra import random_line, spectrum_scan, standard_samples

    F = _spectrum_setup(a)
    rng = random.Random(a.seed)
    samples = standard_samples(F.target, F.p) + [random_line(rng, F.p, label=f"line_{i}") for i in range(a.random)]
    rep = spectrum_scan(F, samples)
    if a.figure:
        from .plotting import plot_scan

        plot_scan(a.figure, rep)
    payload = rep.to_dict()
    if not a.full:
        for s in payload["samples"]:
            s.pop("classes")
    rows = [[v.label, "" if v.value is None else str(v.value), f"{float(v.estimate):.12g}", v.status, "window"]
            for v in rep.verdicts]
    text = ["values " + " ".join(str(v) for v in rep.values)] + [
        f"{v.label} {v.value if v.value is not None else '?'} {v.status}" for v in rep.verdicts[: len(samples) - a.random]
    ] + [f"random lines: {sum(v.value == 1 for v in rep.verdicts[len(samples) - a.random:])}/{a.random} -> 1, "
         f"inconclusive {rep.inconclusive}"]
    result = out.emit(text, payload, rows, ["sample", "value", "estimate", "status", "kind"])
    if rep.inconclusive:
        raise _Inconclusive(result)
    return result


class _Inconclusive(Exception):
    def __init__(self, text):
        self.text = text


COMMANDS = {
    "witt": cmd_witt,
    "hall": cmd_hall,
    "closure": cmd_closure,
    "density": cmd_density,
    "construct-alpha": cmd_construct,
    "collect": cmd_collect,
    "phi": cmd_phi,
    "verify-phi": cmd_verify_phi,
    "product-hdim": cmd_product_hdim,
    "lambda-series": cmd_lambda_series,
    "c-equiv": cmd_c_equiv,
    "build-spectrum": cmd_build_spectrum,
    "scan-spectrum": cmd_scan_spectrum,
}


def build_parser():
    parser = _Parser(prog="hausspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", help="JSON file whose keys are this command's option names")
        return sp

    sp = add("witt", "Witt dimension of L_n")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)

    sp = add("hall", "Hall basis up to weight W")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--W", type=int, required=True)

    for name, help_ in (("closure", "graded subalgebra closure"), ("density", "partial density sequence")):
        sp = add(name, help_)
        sp.add_argument("--d", type=int, required=True)
        sp.add_argument("--p", type=int, default=3)
        sp.add_argument("--W", type=int, required=True)
        sp.add_argument("--gens", required=True, help="';'-separated Lie elements, e.g. 'x1; [x2,x1]'")
        if name == "closure":
            sp.add_argument("--matrices", action="store_true")
        else:
            sp.add_argument("--mixed", action="store_true", help="use the F_p[pi] closure")
            sp.add_argument("--figure")

    sp = add("construct-alpha", "density-alpha subalgebra construction")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--W", type=int, required=True)
    sp.add_argument("--figure")

    sp = add("collect", "Hall collection modulo gamma_(r+1)")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--word", required=True)

    sp = add("phi", "leading Lie term of a word")
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--W", type=int, required=True)
    sp.add_argument("--word", required=True)

    sp = add("verify-phi", "phi(w) in the closure of phi(gens) for random words")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--W", type=int, required=True)
    sp.add_argument("--gens", default="")
    sp.add_argument("--samples", type=int, default=100)

    sp = add("product-hdim", "direct-product dimension formula")
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--inner", required=True)
    sp.add_argument("--ranks", help="comma-separated factor ranks (default t copies of 2)")
    sp.add_argument("--window", type=int, help="also build the finite-window sequence up to this level")
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--figure")

    for name, help_ in (("lambda-series", "lower p-series of a lattice"), ("c-equiv", "c-equivalence with p^i L")):
        sp = add(name, help_)
        sp.add_argument("--p", type=int, default=3)
        sp.add_argument("--rank", type=int, default=2, help="rank of the Jordan-block example")
        sp.add_argument("--lattice", dest="config_lattice", help="JSON {p, generators, lattice?}")
        sp.add_argument("--imax", type=int, default=10)
        if name == "c-equiv":
            sp.add_argument("--c", type=int, required=True)
        else:
            sp.add_argument("--c", type=int, default=None)

    for name, help_ in (("build-spectrum", "filtration realising a finite spectrum"),
                        ("scan-spectrum", "classify lines by their dimension")):
        sp = add(name, help_)
        sp.add_argument("--p", type=int, default=3)
        sp.add_argument("--X", required=True)
        sp.add_argument("--gaps", default="tower")
        sp.add_argument("--base", type=int, default=None)
        sp.add_argument("--imax", type=int, required=True)
        if name == "scan-spectrum":
            sp.add_argument("--random", type=int, default=0, help="number of random lines to add")
            sp.add_argument("--full", action="store_true", help="include per-class sequences in JSON")
            sp.add_argument("--figure")
    return parser, sub


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser, sub, argv):
    """Parse argv, taking defaults from a JSON config file when --config is given."""
    argv = list(sys.argv[1:] if argv is None else argv)
    path = _config_path(argv)
    command = next((t for t in argv if t in sub.choices), None)
    if path is None or command is None:
        return parser.parse_args(argv)
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise MalformedInput(f"cannot read config {path}: {exc}") from None
    if isinstance(cfg, dict) and "result" in cfg:
        # the JSON output of a previous command (build-spectrum) can be fed back in
        cfg = cfg["result"]
    if not isinstance(cfg, dict):
        raise MalformedInput("config must be a JSON object")
    cfg = dict(cfg)
    for key in ("indices", "kind"):
        cfg.pop(key, None)
    if "i_max" in cfg:
        cfg["imax"] = cfg.pop("i_max")
    if "gaps" in cfg and isinstance(cfg["gaps"], dict):
        cfg["base"] = cfg["gaps"].get("base")
        cfg["gaps"] = cfg["gaps"].get("mode", "tower")
    sp = sub.choices[command]
    known = {a.dest for a in sp._actions}
    unknown = set(cfg) - known
    if unknown:
        raise MalformedInput(f"unknown config keys: {sorted(unknown)}")
    for act in sp._actions:
        if act.dest in cfg:
            act.required = False
    cfg = {k: (",".join(str(x) for x in v) if isinstance(v, list) else v) for k, v in cfg.items()}
    sp.set_defaults(**cfg)
    return parser.parse_args(argv)


def _infer_d(args):
    if getattr(args, "d", 0) is None:
        import re

        idx = [int(m) for m in re.findall(r"x(\d+)", args.word)]
        args.d = max(idx) if idx else 1


def run(argv=None):
    """Run one command; returns (exit status, stdout text, stderr text)."""
    parser, sub = build_parser()
    try:
        args = _apply_config(parser, sub, argv)
        if not args.command:
            raise MalformedInput("missing subcommand")
        _infer_d(args)
        out = Output(args.command, args.format, args.seed)
        text = COMMANDS[args.command](args, out)
        return EXIT_OK, text, ""
    except MalformedInput as exc:
        return EXIT_MALFORMED, "", f"error: {exc}\n"
    except _Inconclusive as exc:
        return EXIT_INCONCLUSIVE, exc.text, "inconclusive verdicts present\n"
    except InconclusiveError as exc:
        return EXIT_INCONCLUSIVE, "", f"inconclusive: {exc}\n"
    except ResourceLimitError as exc:
        return EXIT_RESOURCE, "", f"resource limit: {exc}\n"
    except PreconditionError as exc:
        return EXIT_PRECONDITION, "", f"precondition: {exc}\n"
    except (ValueError, ZeroDivisionError) as exc:
        return EXIT_MALFORMED, "", f"error: {exc}\n"


def main(argv=None):
    code, text, err = run(argv)
    sys.stdout.write(text)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
