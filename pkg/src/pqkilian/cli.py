"""``kilian``: run, check, serve and attack the four-message argument."""
from __future__ import annotations

import json
import socket
import socketserver
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import pcp
from .commitment import Blake2Family, XorRotateFamily
from .errors import PqKilianError
from .extractor import ADVERSARIES, extract_witness, make_oracle, summarize
from .protocol import (TAG_CK, TAG_R, ProverSession, Transcript, VerifierSession, dump_json,
                       encode_frame, encode_key, load_transcript, read_frame, run_honest,
                       verify_transcript)
from .rng import Drbg


def parse_seeds(text: str) -> range:
    """``"a..b"`` (inclusive) or a single integer."""
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
    else:
        lo = hi = int(text)
    if hi < lo:
        raise click.BadParameter(f"empty seed range {text!r}")
    return range(lo, hi + 1)


def parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not port.isdigit():
        raise click.BadParameter(f"expected host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def load_witness(path: str | None, x: pcp.CSPInstance) -> tuple[int, ...]:
    if path is None:
        if x.planted is None:
            raise click.UsageError("instance has no planted witness; pass --witness")
        return tuple(x.planted)
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["witness"]
    return tuple(int(v) for v in data)


def family_option(name: str, lam: int):
    if name == "blake2b":
        return Blake2Family(lam)
    return XorRotateFamily(64)


_common = [
    click.option("--instance", "instance", required=True, type=click.Path(exists=True, dir_okay=False)),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--lambda", "lam", type=int, default=128, show_default=True,
                 help="Security parameter for the BLAKE2b family."),
    click.option("--hash", "hash_name", type=click.Choice(["blake2b", "xor-rotate"]),
                 default="blake2b", show_default=True),
]


def common(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


@click.group()
def kilian():
    """Succinct argument from a PCP and a Merkle vector commitment."""


@kilian.command()
@common
@click.option("--witness", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Write the binary transcript here.")
@click.option("--json", "as_json", is_flag=True, help="Print the transcript as JSON.")
def prove(instance, seed, lam, hash_name, witness, out, as_json):
    """Run prover and verifier locally and emit the transcript."""
    x = pcp.load_instance(instance)
    w = load_witness(witness, x)
    try:
        verdict, tau = run_honest(x, w, Drbg(seed), lam, family_option(hash_name, lam))
    except PqKilianError as e:
        raise click.ClickException(str(e))
    if out:
        Path(out).write_bytes(tau.to_bytes())
    if as_json:
        click.echo(dump_json(tau, x))
    click.echo(f"accept={verdict} bytes={len(tau.to_bytes())}", err=as_json)
    sys.exit(0 if verdict else 1)


@kilian.command()
@click.option("--instance", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--transcript", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True)
def verify(instance, transcript, as_json):
    """Check a stored transcript; exit status 0 iff it verifies."""
    x = pcp.load_instance(instance)
    try:
        tau = load_transcript(transcript)
    except PqKilianError as e:
        click.echo(f"accept=0 ({e})")
        sys.exit(1)
    verdict = verify_transcript(x, tau)
    if as_json:
        click.echo(dump_json(tau, x))
    click.echo(f"accept={verdict}", err=as_json)
    sys.exit(0 if verdict else 1)


def serve_prover(x, w, sock: socket.socket) -> None:
    """Answer one verifier over an accepted connection."""
    session = ProverSession(x, w)
    rf = sock.makefile("rb")
    try:
        while session.phase.value != "done":
            tag, payload = read_frame(rf)
            reply = session.handle(tag, payload)
            if reply is not None:
                sock.sendall(encode_frame(*reply))
    finally:
        rf.close()


def run_verifier(x, sock: socket.socket, rng: Drbg, lam: int, family) -> tuple[int, Transcript]:
    vs = VerifierSession(x, lam, family)
    rf = sock.makefile("rb")
    try:
        ck = vs.emit_key(rng.fork("ck"))
        sock.sendall(encode_frame(TAG_CK, encode_key(ck)))
        vs.handle(*read_frame(rf))
        sock.sendall(encode_frame(TAG_R, vs.emit_challenge(rng.fork("r"))))
        verdict = vs.handle(*read_frame(rf))
    finally:
        rf.close()
    return verdict, vs.transcript


@kilian.command()
@click.option("--instance", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--witness", type=click.Path(exists=True, dir_okay=False))
@click.option("--listen", default="127.0.0.1:7070", show_default=True)
@click.option("--once", is_flag=True, help="Exit after the first session.")
def serve(instance, witness, listen, once):
    """Act as the prover over TCP."""
    x = pcp.load_instance(instance)
    w = load_witness(witness, x)
    host, port = parse_addr(listen)

    class Handler(socketserver.BaseRequestHandler):
        def handle(self):
            try:
                serve_prover(x, w, self.request)
            except (PqKilianError, OSError) as e:
                click.echo(f"{self.client_address[0]}:{self.client_address[1]} aborted: {e}", err=True)

    socketserver.ThreadingTCPServer.allow_reuse_address = True
    with socketserver.ThreadingTCPServer((host, port), Handler) as srv:
        click.echo(f"listening on {host}:{srv.server_address[1]}", err=True)
        if once:
            srv.handle_request()
        else:
            srv.serve_forever()


@kilian.command()
@common
@click.option("--peer", default="127.0.0.1:7070", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def connect(instance, seed, lam, hash_name, peer, out):
    """Act as the verifier against a remote prover."""
    x = pcp.load_instance(instance)
    with socket.create_connection(parse_addr(peer), timeout=30) as sock:
        try:
            verdict, tau = run_verifier(x, sock, Drbg(seed), lam, family_option(hash_name, lam))
        except PqKilianError as e:
            raise click.ClickException(str(e))
    if out:
        Path(out).write_bytes(tau.to_bytes())
    click.echo(f"accept={verdict} bytes={len(tau.to_bytes())}")
    sys.exit(0 if verdict else 1)


def _extract_one(args):
    path, adversary, epsilon, seed, lam = args
    x = pcp.load_instance(path)
    oracle = make_oracle(adversary, x, seed)
    res = extract_witness(oracle, x, epsilon, Drbg(seed, b"kilian.extract"), lam)
    ok = res.witness is not None and pcp.violated(x, res.witness) == 0
    return res, ok


@kilian.command()
@click.option("--instance", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--adversary", default="honest", show_default=True,
              help="One of: " + ", ".join(ADVERSARIES))
@click.option("--epsilon", type=float, required=True)
@click.option("--seeds", default="0..99", show_default=True, help="Inclusive range a..b.")
@click.option("--lambda", "lam", type=int, default=128, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def extract(instance, adversary, epsilon, seeds, lam, jobs):
    """Run the rewinding extractor against a classical adversary and report JSON."""
    jobs_args = [(instance, adversary, epsilon, s, lam) for s in parse_seeds(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            out = list(ex.map(_extract_one, jobs_args, chunksize=8))
    else:
        out = [_extract_one(a) for a in jobs_args]
    report = summarize([r for r, _ in out])
    report["false_witnesses"] = sum(r.witness is not None and not ok for r, ok in out)
    report.update(adversary=adversary, epsilon=epsilon)
    click.echo(json.dumps(report, indent=1))


if __name__ == "__main__":
    kilian()
