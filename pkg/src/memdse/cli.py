"""Command-line front end.

Every subcommand prints its tables to stdout, or writes one file per table
under ``--out``. Each file starts with a header line naming the schema version
and the digests of the inputs. The exit status is 0 only when every evaluated
point succeeded.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .arch import MemoryAssignment, Variant, builtin_architectures
from .area import total_area
from .dutycycle import log_grid
from .energy import edp, inference_energy
from .kinds import DeviceKind
from .mapper import map_network
from .scenario import (
    AREA_COLUMNS,
    ENERGY_COLUMNS,
    MRAM,
    Inputs,
    Scenario,
    ScenarioError,
    Table,
    area_rows,
    energy_rows,
    power_sweep,
    latency_rows,
    power_curves,
    run_sweep,
    area_table,
    ips_table,
)
from .technology import TechnologyError, _bundled_bytes, default_tech
from .timing import inference_latency
from .workload import BUNDLED_NETWORKS

VARIANTS = click.Choice(["sram", "p0", "p1"], case_sensitive=False)
DEVICES = click.Choice(["sram", "stt", "sot", "vgsot"], case_sensitive=False)
FORMATS = click.Choice(["csv", "md"])


def _emit(tables: dict[str, Table], fmt: str, out: str | None) -> None:
    if out:
        root = Path(out)
        root.mkdir(parents=True, exist_ok=True)
        for name, t in tables.items():
            (root / f"{name}.{fmt}").write_text(t.render(fmt))
            click.echo(str(root / f"{name}.{fmt}"))
        return
    click.echo("\n".join(t.render(fmt) for t in tables.values()), nl=False)


def _fail(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(1)


def _tech():
    try:
        return default_tech()
    except TechnologyError as exc:
        _fail(f"technology: {exc}")


def _load(workload: str, arch: str, tech) -> Inputs:
    try:
        return Inputs.load(workload, arch, tech)
    except ScenarioError as exc:
        _fail(str(exc))


def _variant(text: str) -> Variant:
    return Variant.parse(text)


def _device(variant: Variant, text: str | None) -> DeviceKind | None:
    if variant is Variant.SRAM_ONLY:
        return None
    dev = DeviceKind.parse(text or "vgsot")
    if not dev.is_nvm:
        raise click.BadParameter(f"{variant.value} needs an MRAM device", param_hint="--device")
    return dev


def workload_opt(f):
    return click.option("--workload", default="detnet", show_default=True,
                        help=f"bundled name {BUNDLED_NETWORKS} or network file")(f)


def arch_opt(f):
    return click.option("--arch", default="simba-like", show_default=True,
                        help="builtin architecture name or architecture file")(f)


def node_opt(f):
    return click.option("--node", type=int, default=7, show_default=True, help="process node in nm")(f)


def out_opts(f):
    f = click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="directory for output files (default: stdout)")(f)
    return click.option("--format", "fmt", type=FORMATS, default="csv", show_default=True)(f)


@click.group()
@click.version_option(__version__, prog_name="memdse")
@click.option("--seed", type=int, default=None,
              help="reserved; the model is deterministic and ignores it")
def main(seed: int | None) -> None:
    """Energy, latency, area and memory-power analysis of SRAM/MRAM accelerators.

    The tech library comes from the bundled tech.json unless MEMDSE_TECH names
    another file.
    """


@main.command("map")
@workload_opt
@arch_opt
@click.option("--per-layer", is_flag=True, help="also emit one row per layer")
@out_opts
def map_cmd(workload, arch, per_layer, fmt, out):
    """Per-level, per-datatype access counts for one inference."""
    inp = _load(workload, arch, _tech())
    try:
        prof = map_network(inp.network, inp.arch)
    except ValueError as exc:
        _fail(f"mapper: {exc}")
    cols = ("layer", "level", "datatype", "reads", "writes")
    rows = [("total", lv, dt, r, w) for lv, dt, r, w in prof.total.rows()]
    if per_layer:
        for layer, p in zip(inp.network.layers, prof.layers):
            rows += [(layer.name, lv, dt, r, w) for lv, dt, r, w in p.rows()]
    stats = Table("map-summary", ("total_macs", "compute_cycles", "pe_count", "utilization"),
                  [(prof.total.total_macs, prof.total.compute_cycles, prof.total.pe_count,
                    prof.total.utilization)], inp.digests)
    _emit({"access_counts": Table("map", cols, rows, inp.digests), "map_summary": stats}, fmt, out)


@main.command()
@workload_opt
@arch_opt
@click.option("--variant", type=VARIANTS, default=None, help="default: every variant")
@click.option("--device", type=DEVICES, default=None, help="MRAM device (default: all three)")
@node_opt
@out_opts
def energy(workload, arch, variant, device, node, fmt, out):
    """Single-inference energy breakdown (compute, memory read, memory write)."""
    tech = _tech()
    inp = _load(workload, arch, tech)
    try:
        tech.check_node(node)
        prof = map_network(inp.network, inp.arch)
        asgs = _assignments(inp.arch, variant, device)
        rows, summary = [], []
        for asg in asgs:
            e = inference_energy(prof.total, inp.arch, asg, node, tech)
            lat = inference_latency(prof, inp.arch, asg, node, tech)
            rows += energy_rows(e)
            summary.append((asg.label, node, e.compute * 1e-12, e.mem_read * 1e-12,
                            e.mem_write * 1e-12, e.grand_total * 1e-12, lat.latency,
                            edp(e, lat.latency)))
    except ValueError as exc:
        _fail(str(ScenarioError(f"{type(exc).__module__.split('.')[-1]}: {exc}")))
    cols = ("variant", "node_nm", "compute_j", "mem_read_j", "mem_write_j", "total_j",
            "latency_s", "edp_js")
    _emit({"energy_summary": Table("energy-summary", cols, summary, inp.digests),
           "energy_breakdown": Table("energy", ENERGY_COLUMNS, rows, inp.digests)}, fmt, out)


def _assignments(arch, variant, device) -> list[MemoryAssignment]:
    if variant is not None:
        v = _variant(variant)
        return [MemoryAssignment.make(arch, v, _device(v, device))]
    devs = [DeviceKind.parse(device)] if device and device != "sram" else list(MRAM)
    out = [MemoryAssignment.sram_only(arch)]
    for v in (Variant.P0, Variant.P1):
        out += [MemoryAssignment.make(arch, v, d) for d in devs]
    return out


@main.command()
@workload_opt
@arch_opt
@click.option("--variant", type=VARIANTS, default=None, help="default: every variant")
@click.option("--device", type=DEVICES, default=None)
@node_opt
@click.option("--ips-table", is_flag=True,
              help="emit the four-row latency and power-savings table for both v2 archs")
@out_opts
def latency(workload, arch, variant, device, node, ips_table, fmt, out):
    """Inference latency under the memory-limited clock."""
    tech = _tech()
    if ips_table:
        try:
            _emit({"ips_table": _ips_table(tech, node)}, fmt, out)
        except (ScenarioError, ValueError) as exc:
            _fail(str(exc))
        return
    inp = _load(workload, arch, tech)
    try:
        tech.check_node(node)
        prof = map_network(inp.network, inp.arch)
        rows, detail = [], []
        for asg in _assignments(inp.arch, variant, device):
            lat = inference_latency(prof, inp.arch, asg, node, tech)
            rows.append((asg.label, node, lat.compute_cycles, lat.base_frequency,
                         lat.memory_limited_frequency, lat.limiting_level or "base", lat.latency))
            detail += latency_rows(asg.label, lat)
    except ValueError as exc:
        _fail(str(exc))
    cols = ("variant", "node_nm", "cycles", "base_hz", "effective_hz", "limited_by", "latency_s")
    _emit({"latency": Table("latency", cols, rows, inp.digests),
           "latency_levels": Table("latency-levels", ("variant", "level", "frequency_limit_hz",
                                                      "limiting"), detail, inp.digests)}, fmt, out)


def _ips_table(tech, node: int) -> Table:
    tech.check_node(node)
    return ips_table(tech, node=node)


@main.command()
@click.option("--arch", "archs", multiple=True,
              help="architecture(s); default: simba-like-v2 and eyeriss-like-v2")
@click.option("--device", type=DEVICES, default="vgsot", show_default=True)
@node_opt
@click.option("--memory-only", is_flag=True, help="leave compute area out of the detail table")
@out_opts
def area(archs, device, node, memory_only, fmt, out):
    """Silicon area of SRAM-only, P0 and P1 organisations."""
    tech = _tech()
    dev = DeviceKind.parse(device)
    if not dev.is_nvm:
        _fail("area comparison needs an MRAM --device")
    names = archs or ("simba-like-v2", "eyeriss-like-v2")
    try:
        tech.check_node(node)
        summary = area_table(tech, dev, node, names)
        detail = []
        for name in names:
            a = Inputs.load("detnet", name, tech).arch
            for asg in (MemoryAssignment.sram_only(a), MemoryAssignment.p0(a, dev),
                        MemoryAssignment.p1(a, dev)):
                detail.append(total_area(a, asg, node, tech))
    except (ScenarioError, ValueError) as exc:
        _fail(str(exc))
    _emit({"area_summary": summary,
           "area_levels": Table("area", AREA_COLUMNS, area_rows(detail, memory_only),
                                summary.digests)}, fmt, out)


@main.command("ips-sweep")
@click.option("--workload", default=None, help="single workload (default: both bundled)")
@click.option("--arch", default=None, help="single architecture (default: both v2 archs)")
@click.option("--variant", type=click.Choice(["p0", "p1"]), default=None)
@node_opt
@click.option("--ips-min", type=float, default=1e-2, show_default=True, help="lower end of the grid")
@click.option("--ips-max", type=float, default=1e3, show_default=True, help="upper end of the grid")
@click.option("--per-decade", type=int, default=10, show_default=True)
@out_opts
def ips_sweep(workload, arch, variant, node, ips_min, ips_max, per_decade, fmt, out):
    """Memory power against inference rate, with SRAM/MRAM crossovers.

    With no selection this writes the eight curve files (two archs, two
    workloads, P0 and P1) and a crossover summary.
    """
    tech = _tech()
    if not 0 < ips_min < ips_max:
        raise click.BadParameter("need 0 < ips-min < ips-max", param_hint="--ips-min")
    grid = log_grid(ips_min, ips_max, per_decade)
    try:
        tech.check_node(node)
        if workload is None and arch is None and variant is None:
            files, cross = power_sweep(tech, node, grid)
        else:
            files, rows, digests = {}, [], []
            wls = [workload] if workload else ["detnet", "edsnet"]
            names = [arch] if arch else ["simba-like-v2", "eyeriss-like-v2"]
            vs = [Variant.parse(variant)] if variant else [Variant.P1, Variant.P0]
            for name in names:
                for v in vs:
                    for wl in wls:
                        t, c = power_curves(wl, name, v, tech, node, grid)
                        files[f"power_{Path(name).stem}_{Path(wl).stem}_{v.name.lower()}"] = t
                        rows += c
                        digests += t.digests
            from .scenario import CROSSOVER_COLUMNS

            cross = Table("crossover", CROSSOVER_COLUMNS, rows, tuple(digests))
    except (ScenarioError, ValueError) as exc:
        _fail(str(exc))
    _emit({**files, "crossover": cross}, fmt, out)


@main.command()
@workload_opt
@arch_opt
@click.option("--variant", type=VARIANTS, multiple=True, help="repeatable; default sram")
@click.option("--device", type=DEVICES, multiple=True, help="repeatable; default vgsot")
@click.option("--node", type=int, multiple=True, help="repeatable; default 7")
@click.option("--ips-min", type=float, default=None,
              help="application inference-rate floor (default: per bundled workload, else 1)")
@click.option("--workers", type=int, default=4, show_default=True)
@out_opts
def report(workload, arch, variant, device, node, ips_min, workers, fmt, out):
    """Full report (energy, latency, EDP, area, memory power) for one point or a grid."""
    from .scenario import APP_IPS_MIN

    tech = _tech()
    variants = [Variant.parse(v) for v in (variant or ("sram",))]
    devices = [DeviceKind.parse(d) for d in (device or ("vgsot",)) if d != "sram"]
    nodes = list(node or (7,))
    rate = ips_min if ips_min is not None else APP_IPS_MIN.get(workload, 1.0)
    base = Scenario(workload, arch, variants[0], None, nodes[0], rate)
    res = run_sweep(base, variants, devices or list(MRAM), nodes, [rate], tech, workers)
    reps = res.reports
    if len(res.points) == 1 and reps:
        tables = dict(zip(("report", "report_energy", "report_latency", "report_area"),
                          reps[0].tables()))
    else:
        tables = {"report": res.summary()}
    if reps:
        _emit(tables, fmt, out)
    for p in res.errors:
        click.echo(f"error: {p.scenario.variant.value}/{p.scenario.device} "
                   f"@{p.scenario.node}nm: {p.error}", err=True)
    if res.errors:
        sys.exit(1)


@main.command("dump-builtins")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def dump_builtins(out):
    """Write the bundled architectures, networks and tech library as editable files."""
    from importlib import resources

    from .scenario import SCHEMA_VERSION, _sha, header_line

    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for a in builtin_architectures():
        doc = a.to_dict()
        doc["schema"] = SCHEMA_VERSION
        written.append((root / f"arch_{a.name}.json", doc))
    for name in BUNDLED_NETWORKS:
        raw = resources.files("memdse.data.networks").joinpath(f"{name}.json").read_bytes()
        written.append((root / f"network_{name}.json", json.loads(raw)))
    written.append((root / "tech.json", json.loads(_bundled_bytes())))
    for path, doc in written:
        body = json.dumps(doc, indent=1, sort_keys=True)
        doc = {"_header": header_line([("content", _sha(body.encode()))], "builtin"), **doc}
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        click.echo(str(path))


if __name__ == "__main__":
    main()
