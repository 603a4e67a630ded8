"""Command-line front end.

The CLI is a thin client of the HTTP service in :mod:`causalcirc.service`:
every subcommand builds a request, sends it (by default to an in-process
instance of the app, or to a running server when --server is given) and
formats the response.  File handling and exit codes live here; all model
semantics live behind the service.

Exit codes: 0 success, 1 malformed input or violated precondition,
2 reproduction mismatch.
"""

from __future__ import annotations

import asyncio
import sys
from pathlib import Path

import click
import httpx

PROB_FMT = "{:.12g}"

_KINDS = {".vtree": "vtree", ".psdd": "psdd", ".spn": "spn", ".sem": "sem"}


def _request(server: str | None, path: str, payload: dict) -> dict:
    """POST a JSON payload, in process unless a server URL is given."""
    if server:
        try:
            response = httpx.post(server.rstrip("/") + path, json=payload,
                                  timeout=60.0)
        except httpx.HTTPError as e:
            click.echo(f"error: cannot reach {server}: {e}", err=True)
            sys.exit(1)
    else:
        from .service import app

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                    transport=transport, base_url="http://causalcirc") as client:
                return await client.post(path, json=payload)

        response = asyncio.run(go())
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    return response.json()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


def _sibling_vtree(psdd_path: str, vtree_path: str | None) -> str:
    if vtree_path is None:
        candidate = Path(psdd_path).with_suffix(".vtree")
        if not candidate.exists():
            click.echo(
                f"error: no vtree given and '{candidate}' does not exist",
                err=True)
            sys.exit(1)
        vtree_path = str(candidate)
    return _read(vtree_path)


server_option = click.option(
    "--server", default=None, metavar="URL",
    help="Talk to a running service instead of the in-process app.")
format_option = click.option(
    "--format", "fmt", type=click.Choice(["text", "tsv"]), default="text",
    help="Output format.")


@click.group()
def main():
    """Interventions and counterfactuals on probabilistic circuits."""


@main.command()
@click.argument("paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", default=1e-9, show_default=True,
              help="Tolerance for numeric invariants.")
@server_option
@format_option
def validate(paths, tol, server, fmt):
    """Check structural invariants of model files.

    Kinds are inferred from the extension (.vtree, .psdd, .spn, .sem);
    a .psdd file is validated against the .vtree file with the same stem.
    Violations are reported, not raised; only unparseable input fails.
    """
    items = []
    for path in paths:
        kind = _KINDS.get(Path(path).suffix)
        if kind is None:
            click.echo(f"error: cannot infer model kind of '{path}'", err=True)
            sys.exit(1)
        item = {"kind": kind, "name": path, "text": _read(path)}
        if kind == "psdd":
            item["vtree"] = _sibling_vtree(path, None)
        items.append(item)
    data = _request(server, "/validate", {"items": items, "tol": tol})
    for result in data["results"]:
        if fmt == "tsv":
            status = "ok" if result["ok"] else "invalid"
            notes = "; ".join(result["violations"])
            click.echo(f"{result['name']}\t{status}\t{notes}")
        elif result["ok"]:
            click.echo(f"{result['name']}: ok")
        else:
            click.echo(f"{result['name']}: INVALID")
            for violation in result["violations"]:
                click.echo(f"  - {violation}")


@main.command()
@click.argument("psdd", type=click.Path(exists=True, dir_okay=False))
@click.option("--vtree", default=None, type=click.Path(exists=True),
              help="Vtree file (default: same stem as the psdd).")
@click.option("--query", default="", help="Assignment like 'A=1,K=0'.")
@click.option("--evidence", default="", help="Assignment to condition on.")
@server_option
@format_option
def query(psdd, vtree, query, evidence, server, fmt):
    """Marginal or conditional probability from a circuit."""
    data = _request(server, "/query", {
        "vtree": _sibling_vtree(psdd, vtree),
        "psdd": _read(psdd),
        "query": query,
        "evidence": evidence,
    })
    p = PROB_FMT.format(data["probability"])
    if fmt == "tsv":
        click.echo(f"{query}\t{evidence}\t{p}")
    else:
        click.echo(p)


@main.command()
@click.argument("psdd", type=click.Path(exists=True, dir_okay=False))
@click.option("--vtree", default=None, type=click.Path(exists=True),
              help="Vtree file (default: same stem as the psdd).")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Path for the structural model; naming goes to OUT.naming.")
@server_option
def compile(psdd, vtree, out, server):
    """Compile a circuit into a structural equation model."""
    data = _request(server, "/compile", {
        "vtree": _sibling_vtree(psdd, vtree),
        "psdd": _read(psdd),
    })
    Path(out).write_text(data["sem"])
    naming_path = Path(out + ".naming")
    naming_path.write_text(data["naming"])
    click.echo(f"wrote {out} and {naming_path}")


@main.command()
@click.argument("sem", type=click.Path(exists=True, dir_okay=False))
@click.option("--do", "do_", required=True, metavar="ASSIGNMENT",
              help="Intervention like 'X_1=1'.")
@click.option("--query", default="", help="Assignment whose probability to report.")
@click.option("--semantics", type=click.Choice(["surgery", "adjustment"]),
              default="surgery", show_default=True)
@server_option
@format_option
def do(sem, do_, query, semantics, server, fmt):
    """Interventional probability in a structural model."""
    data = _request(server, "/do", {
        "sem": _read(sem),
        "do": do_,
        "query": query,
        "semantics": semantics,
    })
    click.echo(f"note: {data['notice']}", err=True)
    p = PROB_FMT.format(data["probability"])
    if fmt == "tsv":
        click.echo(f"{query}\t{do_}\t{data['semantics']}\t{p}")
    else:
        click.echo(p)


@main.command()
@click.argument("sem", type=click.Path(exists=True, dir_okay=False))
@click.option("--do", "do_", required=True, metavar="ASSIGNMENT",
              help="Counterfactual action.")
@click.option("--evidence", default="", help="Observed evidence.")
@click.option("--query", default="", help="Counterfactual query assignment.")
@server_option
@format_option
def cf(sem, do_, evidence, query, server, fmt):
    """Counterfactual probability: abduction, action, prediction."""
    data = _request(server, "/cf", {
        "sem": _read(sem),
        "do": do_,
        "evidence": evidence,
        "query": query,
    })
    p = PROB_FMT.format(data["probability"])
    if fmt == "tsv":
        click.echo(f"{query}\t{do_}\t{evidence}\t{p}")
    else:
        click.echo(p)


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@server_option
def dot(model, out, server):
    """Render a model's causal graph as DOT.

    Accepts a .sem file (its equation graph) or a .spn file (its bipartite
    Bayesian-network topology).
    """
    kind = _KINDS.get(Path(model).suffix)
    if kind not in ("sem", "spn"):
        click.echo(f"error: cannot draw '{model}', need a .sem or .spn file",
                   err=True)
        sys.exit(1)
    data = _request(server, "/dot", {"kind": kind, "text": _read(model)})
    Path(out).write_text(data["dot"])
    click.echo(f"wrote {out}")


@main.command("spn-bn")
@click.argument("spn", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Path for the DOT rendering of the topology.")
@server_option
@format_option
def spn_bn(spn, out, server, fmt):
    """Bipartite topology of an SPN plus the triviality report.

    Writes the topology as DOT and reports, for every nonempty subset of
    observables, whether intervening on it is trivial by rule 3.
    """
    data = _request(server, "/spn-bn", {"spn": _read(spn)})
    Path(out).write_text(data["dot"])
    if fmt == "tsv":
        for check in data["checks"]:
            subset = ",".join(check["subset"])
            click.echo(f"{subset}\t{'trivial' if check['trivial'] else 'NOT-trivial'}")
    else:
        click.echo(f"latents: {' '.join(data['latents'])}")
        click.echo(f"observables: {' '.join(data['observables'])}")
        trivial = sum(1 for c in data["checks"] if c["trivial"])
        click.echo(
            f"interventions trivial for {trivial} of {len(data['checks'])} "
            "observable subsets")
    click.echo(f"wrote {out}")
    if not data["all_trivial"]:
        sys.exit(1)


@main.command()
@click.option("--tol", default=1e-9, show_default=True,
              help="Largest accepted deviation.")
@server_option
@format_option
def reproduce(tol, server, fmt):
    """Recompute the worked example's reference numbers and compare."""
    data = _request(server, "/reproduce", {"tol": tol})
    for check in data["checks"]:
        expected = PROB_FMT.format(check["expected"])
        actual = PROB_FMT.format(check["actual"])
        if fmt == "tsv":
            status = "ok" if check["ok"] else "mismatch"
            click.echo(f"{check['name']}\t{expected}\t{actual}\t{status}")
        else:
            mark = "ok  " if check["ok"] else "FAIL"
            click.echo(f"{mark} {check['name']}: expected {expected} "
                       f"got {actual}")
    if not data["ok"]:
        click.echo("error: reproduction deviates from the reference numbers",
                   err=True)
        sys.exit(2)
    click.echo(f"all {len(data['checks'])} checks within {tol}")


if __name__ == "__main__":
    main()
