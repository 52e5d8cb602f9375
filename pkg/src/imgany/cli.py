"""Operator entry points: bank building and inspection, fusion runs with
ablation toggles, and the HTTP service.

Exit codes: 0 success; 2 validation/parse problems; 3 I/O or bad serve
config; 4 pipeline errors (stage named on stderr); 5 decoder transport.
All outputs are UTF-8 and reproducible: bundles are canonical JSON and
nothing depends on wall clock or ambient randomness.
"""
from __future__ import annotations

import argparse
import logging
import signal
import sys
import threading
from pathlib import Path

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python 3.10
    import tomli as _toml

from .backend import BadStatusError, DecodeRequest, NotPngError, TransportError, decode_remote
from .bank import build_bank, import_jsonl, load_bank, save_bank
from .errors import ImgAnyError, ValidationError
from .fusion import run_pipeline
from .service import FusionService, ServiceConfig
from .wire import (
    CONFIG_BOOL_FIELDS,
    CONFIG_FLOAT_FIELDS,
    CONFIG_INT_FIELDS,
    bundle_json_bytes,
    config_from_dict,
    load_features_path,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_PIPELINE = 4
EXIT_DECODE = 5

_log = logging.getLogger("imgany.cli")


def _fail(exit_code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return exit_code


# -- bank --------------------------------------------------------------------

def cmd_bank_build(args) -> int:
    try:
        entries = import_jsonl(args.input, args.kind)
        bank = build_bank(entries, args.kind)
    except OSError as err:
        return _fail(EXIT_IO, str(err))
    except ImgAnyError as err:
        return _fail(EXIT_VALIDATION, str(err))
    try:
        save_bank(bank, args.out)
    except OSError as err:
        return _fail(EXIT_IO, str(err))
    print(f"wrote {args.out}: kind={bank.kind} dim={bank.dim} count={bank.count}")
    return EXIT_OK


def cmd_bank_inspect(args) -> int:
    try:
        bank = load_bank(args.path)
    except OSError as err:
        return _fail(EXIT_IO, str(err))
    except ImgAnyError as err:
        return _fail(EXIT_VALIDATION, str(err))
    print(f"{args.path}: kind={bank.kind} dim={bank.dim} count={bank.count} "
          f"kept={bank.kept_count}")
    if args.words:
        for i, word in enumerate(bank.words):
            print(f"{i}\t{word}\tkeep={'true' if bank.keep[i] else 'false'}")
    return EXIT_OK


# -- fuse --------------------------------------------------------------------

def _load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return _toml.load(fh)


def _fusion_overrides(args) -> dict:
    """Merge precedence: flags > config file > defaults."""
    overrides: dict = {}
    if getattr(args, "config", None):
        doc = _load_toml(args.config)
        known = set(CONFIG_INT_FIELDS) | set(CONFIG_FLOAT_FIELDS) | set(CONFIG_BOOL_FIELDS)
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}",
                                  code="UnknownConfigKey")
        overrides.update(doc)
    for key in ("k_entity", "k_attribute", "variance_threshold",
                "entity_upweight", "balanced_weight"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.no_entity:
        overrides["enable_entity_branch"] = False
    if args.no_attribute:
        overrides["enable_attribute_branch"] = False
    if args.no_adjective_filter:
        overrides["enable_adjective_filter"] = False
    return overrides


def cmd_fuse(args) -> int:
    try:
        config = config_from_dict(_fusion_overrides(args))
        features = load_features_path(args.features)
        noun_bank = load_bank(args.nouns)
        adjective_bank = load_bank(args.adjectives)
    except (OSError, _toml.TOMLDecodeError) as err:
        return _fail(EXIT_VALIDATION, str(err))
    except ImgAnyError as err:
        return _fail(EXIT_VALIDATION, str(err))

    try:
        bundle = run_pipeline(features, noun_bank, adjective_bank, config)
    except ImgAnyError as err:
        return _fail(EXIT_PIPELINE, f"pipeline failed at stage {err.stage or '?'}: {err}")

    try:
        Path(args.out).write_bytes(bundle_json_bytes(bundle))
    except OSError as err:
        return _fail(EXIT_IO, str(err))
    print(f"wrote {args.out}: c2={bundle.c2!r} c3={bundle.c3!r} "
          f"variance={bundle.variance:.6f} alpha={bundle.alpha}")

    if args.decode:
        if not args.endpoint:
            return _fail(EXIT_VALIDATION, "--decode requires --endpoint")
        if not args.out_image:
            return _fail(EXIT_VALIDATION, "--decode requires --out-image")
        try:
            request = DecodeRequest(bundle=bundle, width=args.width, height=args.height,
                                    steps=args.steps, seed=args.seed)
        except ImgAnyError as err:
            return _fail(EXIT_VALIDATION, str(err))
        try:
            png = decode_remote(request, args.endpoint)
        except (TransportError, BadStatusError, NotPngError) as err:
            return _fail(EXIT_DECODE, str(err))
        try:
            Path(args.out_image).write_bytes(png)
        except OSError as err:
            return _fail(EXIT_IO, str(err))
        print(f"wrote {args.out_image}: {len(png)} bytes")
    return EXIT_OK


# -- serve -------------------------------------------------------------------

def _service_config(path) -> ServiceConfig:
    doc = _load_toml(path)
    fusion_keys = set(CONFIG_INT_FIELDS) | set(CONFIG_FLOAT_FIELDS) | set(CONFIG_BOOL_FIELDS)
    service_keys = {"listen", "noun_bank", "adjective_bank", "decoder_endpoint",
                    "max_body_bytes"}
    unknown = set(doc) - fusion_keys - service_keys
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}",
                              code="UnknownConfigKey")
    for key in ("noun_bank", "adjective_bank"):
        if key not in doc:
            raise ValidationError(f"missing required config key {key!r}", code="BadConfig")
    listen = doc.get("listen", "127.0.0.1:8080")
    host, _, port = str(listen).rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"listen must be host:port, got {listen!r}", code="BadConfig")
    fusion = config_from_dict({k: v for k, v in doc.items() if k in fusion_keys})
    return ServiceConfig(
        noun_bank_path=doc["noun_bank"],
        adjective_bank_path=doc["adjective_bank"],
        host=host,
        port=int(port),
        fusion=fusion,
        decoder_endpoint=doc.get("decoder_endpoint"),
        max_body_bytes=int(doc.get("max_body_bytes", 8 * 1024 * 1024)),
    )


def cmd_serve(args) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        config = _service_config(args.config)
        service = FusionService(config)
        service.load_banks()
    except (OSError, _toml.TOMLDecodeError, ImgAnyError) as err:
        return _fail(EXIT_IO, str(err))

    def _shutdown(signum, frame):
        _log.info("signal %d: shutting down, letting in-flight requests finish", signum)
        threading.Thread(target=service.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, _shutdown)
    signal.signal(signal.SIGINT, _shutdown)
    _log.info("ready: listening on %s", service.url)
    service.serve_forever()
    service.close()
    _log.info("stopped")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imgany",
        description="Training-free multi-modal conditioning fusion engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    bank = sub.add_parser("bank", help="build or inspect embedding banks")
    bank_sub = bank.add_subparsers(dest="bank_command", required=True)

    build = bank_sub.add_parser("build", help="build a bank from a JSONL lexicon")
    build.add_argument("--in", dest="input", required=True, metavar="LEXICON.jsonl")
    build.add_argument("--kind", required=True, choices=("noun", "adjective"))
    build.add_argument("--out", required=True, metavar="BANK.imgb")
    build.set_defaults(func=cmd_bank_build)

    inspect = bank_sub.add_parser("inspect", help="print bank metadata")
    inspect.add_argument("path", metavar="BANK.imgb")
    inspect.add_argument("--words", action="store_true", help="list words and keep flags")
    inspect.set_defaults(func=cmd_bank_inspect)

    fuse = sub.add_parser("fuse", help="fuse modality features into a condition bundle")
    fuse.add_argument("--features", required=True,
                      help="feature JSON file or a directory of them (one per modality)")
    fuse.add_argument("--nouns", required=True, metavar="BANK.imgb")
    fuse.add_argument("--adjectives", required=True, metavar="BANK.imgb")
    fuse.add_argument("--config", default=None, metavar="FUSE.toml",
                      help="optional TOML file with fusion settings (flags win)")
    fuse.add_argument("--no-entity", action="store_true",
                      help="disable the entity fusion branch")
    fuse.add_argument("--no-attribute", action="store_true",
                      help="disable the attribute fusion branch")
    fuse.add_argument("--no-adjective-filter", action="store_true",
                      help="retrieve over the full adjective bank, keep flags ignored")
    fuse.add_argument("--k-entity", dest="k_entity", type=int, default=None)
    fuse.add_argument("--k-attribute", dest="k_attribute", type=int, default=None)
    fuse.add_argument("--variance-threshold", dest="variance_threshold",
                      type=float, default=None)
    fuse.add_argument("--entity-upweight", dest="entity_upweight", type=float, default=None)
    fuse.add_argument("--balanced-weight", dest="balanced_weight", type=float, default=None)
    fuse.add_argument("--out", required=True, metavar="BUNDLE.json")
    fuse.add_argument("--decode", action="store_true",
                      help="also render the bundle via a decoder endpoint")
    fuse.add_argument("--endpoint", default=None, metavar="URL")
    fuse.add_argument("--seed", type=int, default=0)
    fuse.add_argument("--width", type=int, default=512)
    fuse.add_argument("--height", type=int, default=512)
    fuse.add_argument("--steps", type=int, default=30)
    fuse.add_argument("--out-image", dest="out_image", default=None, metavar="IMG.png")
    fuse.set_defaults(func=cmd_fuse)

    serve = sub.add_parser("serve", help="run the fusion HTTP service")
    serve.add_argument("--config", required=True, metavar="SERVICE.toml")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
