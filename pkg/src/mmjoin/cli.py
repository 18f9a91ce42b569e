"""Command-line front end: dataset generation, query execution, calibration,
benchmarks, and oracle cross-checks."""

from __future__ import annotations

import csv
import math
import os
import sys
import time
from typing import Optional

import click
import numpy as np

from . import apps, joinproject, matmul, optimizer
from .relation import (
    Relation,
    build_indexed,
    generate_community_graph,
    parse_edge_list,
    semi_join_reduce,
    semi_join_reduce_many,
)

CSV_HEADER = ["dataset", "query", "method", "wall_nanos", "output_size",
              "delta1", "delta2", "strategy"]

CALIBRATION_ENV = "MMJOIN_CALIBRATION"


def _timed(fn, runs: int = 5):
    """Average of the middle runs after dropping min and max; nanos."""
    samples = []
    result = None
    for _ in range(runs):
        t0 = time.perf_counter_ns()
        result = fn()
        samples.append(time.perf_counter_ns() - t0)
    samples.sort()
    kept = samples[1:-1] if len(samples) > 2 else samples
    return result, sum(kept) // len(kept)


def _load_calibration(path: Optional[str]) -> Optional[matmul.CalibrationTable]:
    path = path or os.environ.get(CALIBRATION_ENV)
    if path and os.path.exists(path):
        return matmul.CalibrationTable.load(path)
    return None


def _read_relation(path: str, name: str) -> Relation:
    try:
        with open(path, encoding="utf-8") as f:
            return parse_edge_list(f, name=name)
    except (OSError, ValueError) as exc:
        raise click.ClickException(str(exc))


def _resolve_plan(ridx, sidx, delta1, delta2, auto_plan, calibration, cores):
    if delta1 is not None and delta2 is not None:
        return optimizer.ThresholdPlan(optimizer.PARTITIONED, delta1, delta2)
    if not auto_plan:
        return None
    table = _load_calibration(calibration)
    if table is None:
        return optimizer.default_plan(ridx, sidx)
    from .relation import degree_stats
    stats_r = degree_stats(ridx, partner=sidx)
    stats_s = degree_stats(sidx)
    consts = optimizer.CostConstants(co=cores)
    return optimizer.optimize_thresholds(
        stats_r, stats_s, ridx.rel.dom_left, ridx.out_join_with(sidx),
        consts=consts, table=table)


@click.group()
def main():
    """Join-project query engine with count-matrix multiplication."""


@main.command("gen")
@click.option("--kind", type=click.Choice(["community", "sets"]), required=True)
@click.option("--nodes", type=int, default=600, show_default=True)
@click.option("--communities", type=int, default=3, show_default=True)
@click.option("--prob", type=float, default=0.9, show_default=True)
@click.option("--sets", "n_sets", type=int, default=100, show_default=True)
@click.option("--universe", type=int, default=50, show_default=True)
@click.option("--max-size", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def cmd_gen(kind, nodes, communities, prob, n_sets, universe, max_size, seed, out):
    """Generate a synthetic edge list or set family."""
    click.echo(f"seed={seed}")
    lines = []
    if kind == "community":
        rel = generate_community_graph(nodes, communities, prob, seed)
        lines = [f"{a} {b}" for a, b in rel.raw_pairs()]
    else:
        rng = np.random.default_rng(seed)
        for a in range(n_sets):
            size = int(rng.integers(1, max_size + 1))
            elems = rng.choice(universe, size=min(size, universe), replace=False)
            lines.extend(f"s{a} e{e}" for e in elems)
    with open(out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    click.echo(f"wrote {len(lines)} tuples to {out}")


@main.command("twopath")
@click.option("--left", required=True, type=click.Path(exists=True))
@click.option("--right", required=True, type=click.Path(exists=True))
@click.option("--delta1", type=int)
@click.option("--delta2", type=int)
@click.option("--auto-plan", is_flag=True)
@click.option("--counts", is_flag=True)
@click.option("--calibration", type=click.Path())
@click.option("--cores", type=int, default=1, show_default=True)
def cmd_twopath(left, right, delta1, delta2, auto_plan, counts, calibration, cores):
    """Projected two-path join; emits sorted `a c [count]` lines."""
    r, s = semi_join_reduce(_read_relation(left, "R"), _read_relation(right, "S"))
    ridx, sidx = build_indexed(r), build_indexed(s)
    plan = _resolve_plan(ridx, sidx, delta1, delta2, auto_plan, calibration, cores)
    try:
        res = joinproject.two_path_join(ridx, sidx, plan=plan,
                                        want_counts=counts, cores=cores)
    except (optimizer.PlanError, ValueError) as exc:
        raise click.ClickException(str(exc))
    rows = []
    cnts = res.counts.tolist() if counts else None
    for pos, (a, c) in enumerate(res.tuples().tolist()):
        line = f"{r.left_values[a]} {s.left_values[c]}"
        if counts:
            line += f" {cnts[pos]}"
        rows.append(line)
    click.echo("\n".join(sorted(rows)))


@main.command("star")
@click.option("--input", "inputs", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--delta1", type=int, default=2, show_default=True)
@click.option("--delta2", type=int, default=2, show_default=True)
@click.option("--counts", is_flag=True)
def cmd_star(inputs, delta1, delta2, counts):
    """Projected star join over 2..4 relations sharing the right column."""
    rels = semi_join_reduce_many(
        [_read_relation(p, f"R{i}") for i, p in enumerate(inputs)])
    idxs = [build_indexed(r) for r in rels]
    try:
        res = joinproject.star_join(idxs, delta1, delta2, want_counts=counts)
    except (ValueError, joinproject.StarResourceError) as exc:
        raise click.ClickException(str(exc))
    cnts = res.counts.tolist() if counts else None
    rows = []
    for pos, tup in enumerate(res.tuples().tolist()):
        line = " ".join(str(rels[i].left_values[v]) for i, v in enumerate(tup))
        if counts:
            line += f" {cnts[pos]}"
        rows.append(line)
    click.echo("\n".join(sorted(rows)))


def _read_family(path: str) -> apps.SetFamily:
    return apps.SetFamily(_read_relation(path, "sets"))


@main.command("ssj")
@click.option("--sets", "sets_path", required=True, type=click.Path(exists=True))
@click.option("--c", "threshold", type=int, default=1, show_default=True)
@click.option("--method",
              type=click.Choice(["mmjoin", "sizeaware", "sizeaware-pp", "ordered"]),
              default="mmjoin", show_default=True)
def cmd_ssj(sets_path, threshold, method):
    """Set-similarity join; emits sorted `a b [count]` lines."""
    fam = _read_family(sets_path)
    try:
        if method == "mmjoin":
            result = apps.ssj_mmjoin(fam, threshold)
            rows = [f"{fam.raw_id(a)} {fam.raw_id(b)} {cnt}"
                    for (a, b), cnt in result.items()]
        elif method == "ordered":
            rows = [f"{fam.raw_id(a)} {fam.raw_id(b)} {cnt}"
                    for (a, b), cnt in apps.ssj_ordered(fam, threshold)]
            click.echo("\n".join(rows))
            return
        elif method == "sizeaware":
            pairs = apps.ssj_size_aware(fam, threshold)
            rows = [f"{fam.raw_id(a)} {fam.raw_id(b)}" for a, b in pairs]
        else:
            pairs, ops = apps.ssj_size_aware_pp(fam, threshold)
            click.echo(f"# merge_ops={ops}")
            rows = [f"{fam.raw_id(a)} {fam.raw_id(b)}" for a, b in pairs]
    except (ValueError, apps.SubsetCapError) as exc:
        raise click.ClickException(str(exc))
    click.echo("\n".join(sorted(rows)))


@main.command("scj")
@click.option("--sets", "sets_path", required=True, type=click.Path(exists=True))
def cmd_scj(sets_path):
    """Set-containment join; emits sorted `small big` lines."""
    fam = _read_family(sets_path)
    pairs = apps.scj_join_project(fam)
    click.echo("\n".join(sorted(f"{fam.raw_id(a)} {fam.raw_id(b)}"
                                for a, b in pairs)))


@main.command("bsi")
@click.option("--left", required=True, type=click.Path(exists=True))
@click.option("--right", required=True, type=click.Path(exists=True))
@click.option("--workload", required=True, type=click.Path(exists=True))
@click.option("--rate", type=float, required=True)
@click.option("--batch-size", type=int, default=None,
              help="defaults to ceil((rate*N)^(3/5))")
def cmd_bsi(left, right, workload, rate, batch_size):
    """Batched boolean set intersection: answers plus simulated latency."""
    r = build_indexed(_read_relation(left, "R"))
    s = build_indexed(_read_relation(right, "S"))
    with open(workload, encoding="utf-8") as f:
        wl = apps.BsiWorkload.from_file(f, rate)
    n = max(r.n, s.n)
    c = batch_size or apps.bsi_batch_size(rate, n)
    click.echo(f"batch_size={c}")

    def cost(batch):
        t0 = time.perf_counter_ns()
        apps.bsi_answer_batch(r, s, batch)
        return (time.perf_counter_ns() - t0) / 1e9

    sim = apps.bsi_simulate(wl, c, cost)
    click.echo(f"average_delay_s={sim.average_delay:.6f}")
    click.echo(f"implied_units={sim.implied_units:.3f}")
    click.echo(f"batches={sim.batches}")


@main.command("calibrate")
@click.option("--dims", default="128,256,512,1024", show_default=True)
@click.option("--cores", default="1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help=f"defaults to ${CALIBRATION_ENV} or ./calibration.tsv")
def cmd_calibrate(dims, cores, seed, out):
    """Measure the multiply cost table and write calibration.tsv."""
    click.echo(f"seed={seed}")
    probe = [int(d) for d in dims.split(",")]
    core_list = [int(c) for c in cores.split(",")]
    table = matmul.calibrate(probe, core_list, seed=seed)
    out = out or os.environ.get(CALIBRATION_ENV) or "calibration.tsv"
    table.save(out)
    click.echo(f"wrote {len(table)} entries to {out}")


def _community_for_edges(target_edges: int, prob: float = 0.9,
                         communities: int = 3) -> int:
    per = target_edges / communities / prob
    return max(communities, communities * math.ceil(math.sqrt(per)))


@main.command("bench")
@click.argument("query", type=click.Choice(["twopath"]))
@click.option("--dataset", type=click.Choice(["community"]), default="community",
              show_default=True)
@click.option("--n", "n_edges", type=float, default=1e5, show_default=True)
@click.option("--methods", default="mmjoin,fulljoin", show_default=True)
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--cores", type=int, default=1, show_default=True)
@click.option("--calibration", type=click.Path())
def cmd_bench(query, dataset, n_edges, methods, csv_path, seed, cores, calibration):
    """Benchmark methods on a synthetic dataset; emits CSV rows."""
    click.echo(f"seed={seed}")
    nodes = _community_for_edges(int(n_edges))
    rel = generate_community_graph(nodes, 3, 0.9, seed)
    idx = build_indexed(rel)
    plan = _resolve_plan(idx, idx, None, None, True, calibration, cores)
    records = []
    for method in methods.split(","):
        if method == "mmjoin":
            use = plan if plan.strategy == optimizer.PARTITIONED else \
                optimizer.ThresholdPlan(optimizer.PARTITIONED,
                                        *optimizer.closed_form_thresholds(
                                            idx.n, max(1, idx.n)))
            res, nanos = _timed(lambda: joinproject.two_path_join(
                idx, idx, plan=use, cores=cores))
            d1, d2, strat = use.delta1, use.delta2, use.strategy
        elif method == "fulljoin":
            res, nanos = _timed(lambda: joinproject.full_join_dedup(idx, idx))
            d1 = d2 = idx.n
            strat = optimizer.FULL_JOIN
        else:
            raise click.ClickException(f"unknown method {method!r}")
        records.append([dataset, query, method, nanos, len(res), d1, d2, strat])
    sizes = {r[4] for r in records}
    if len(sizes) > 1:
        raise click.ClickException(f"output sizes disagree across methods: {sizes}")
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        w.writerows(records)
    click.echo(f"wrote {len(records)} records to {csv_path}")


@main.command("report")
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
def cmd_report(csv_path):
    """Summarize a bench CSV as fulljoin/mmjoin speedup ratios."""
    try:
        with open(csv_path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
    except csv.Error as exc:
        raise click.ClickException(str(exc))
    if not rows:
        click.echo("no records")
        return
    if set(rows[0]) != set(CSV_HEADER):
        raise click.ClickException("malformed CSV: unexpected columns")
    by_query: dict = {}
    for row in rows:
        key = (row["dataset"], row["query"])
        by_query.setdefault(key, {})[row["method"]] = int(row["wall_nanos"])
    for (dataset, query), times in sorted(by_query.items()):
        base = times.get("fulljoin", times.get("mmjoin"))
        mm = times.get("mmjoin", base)
        click.echo(f"{dataset}/{query}: speedup={base / mm:.2f} "
                   f"(fulljoin={base}ns mmjoin={mm}ns)")


def _random_instance(rng, n, dom_x, dom_y, name="R"):
    pairs = set()
    while len(pairs) < n:
        pairs.add((int(rng.integers(dom_x)), int(rng.integers(dom_y))))
    return Relation.from_raw_pairs(name, sorted(pairs))


def _oracle_twopath(r: Relation, s: Relation) -> set:
    by_y: dict = {}
    for c, y in s.raw_pairs():
        by_y.setdefault(y, []).append(c)
    out = set()
    for a, y in r.raw_pairs():
        for c in by_y.get(y, ()):
            out.add((a, c))
    return out


@main.group("check")
def cmd_check():
    """Cross-check methods against brute-force oracles; nonzero on mismatch."""


@cmd_check.command("twopath")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--n", type=int, default=2000, show_default=True)
def check_twopath(seed, n):
    click.echo(f"seed={seed}")
    rng = np.random.default_rng(seed)
    dom = max(10, n // 20)
    r = _random_instance(rng, n, dom, dom, "R")
    s = _random_instance(rng, n, dom, dom, "S")
    expected = _oracle_twopath(r, s)
    rr, ss = semi_join_reduce(r, s)
    res = joinproject.two_path_join(build_indexed(rr), build_indexed(ss))
    got = {(rr.left_values[a], ss.left_values[c])
           for a, c in res.tuples().tolist()}
    if got != expected:
        click.echo(f"MISMATCH: {len(got)} vs oracle {len(expected)}")
        sys.exit(1)
    click.echo(f"OK: {len(got)} pairs match the oracle")


@cmd_check.command("ssj")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--c", "threshold", type=int, default=2, show_default=True)
def check_ssj(seed, threshold):
    click.echo(f"seed={seed}")
    rng = np.random.default_rng(seed)
    sets = {f"s{i}": sorted({int(e) for e in rng.integers(0, 40, rng.integers(1, 15))})
            for i in range(60)}
    fam = apps.SetFamily.from_dict(sets)
    mm = set(apps.ssj_mmjoin(fam, threshold))
    sa = apps.ssj_size_aware(fam, threshold)
    pp, _ = apps.ssj_size_aware_pp(fam, threshold)
    oracle = set()
    ids = sorted(fam.sets)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if len(np.intersect1d(fam.sets[a], fam.sets[b])) >= threshold:
                oracle.add((a, b) if a < b else (b, a))
    if not (mm == sa == pp == oracle):
        click.echo("MISMATCH between ssj methods and oracle")
        sys.exit(1)
    click.echo(f"OK: {len(mm)} pairs, all methods agree")


if __name__ == "__main__":
    main()
