"""Command-line entry points: simulate, analyze, serve, validate."""

from __future__ import annotations

import argparse
import json
import sys

from gemmind.errors import GemmindError
from gemmind.session.analyze import analyze_session
from gemmind.session.config import SessionConfig, default_config
from gemmind.session.simulate import simulate_session
from gemmind.session.validate import run_validation


def _load_config(path, seed=None) -> SessionConfig:
    config = SessionConfig.load(path) if path else default_config()
    if seed is not None:
        config = config.replace(master_seed=seed)
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gemmind",
        description="Match-three research game: simulate, analyze, serve, validate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a headless session and write an archive")
    p_sim.add_argument("--config", help="session config JSON (defaults apply)")
    p_sim.add_argument("--seed", type=int, help="master seed override")
    p_sim.add_argument("--out", required=True, help="archive output directory (must be empty)")

    p_ana = sub.add_parser("analyze", help="run the analysis chain over an archive")
    p_ana.add_argument("--session", required=True, help="archive directory")
    p_ana.add_argument("--out", required=True, help="report bundle directory")

    p_srv = sub.add_parser("serve", help="serve the game to one UI client over WebSocket")
    p_srv.add_argument("--config", help="session config JSON")
    p_srv.add_argument("--port", type=int, default=8750)
    p_srv.add_argument("--record", required=True, help="recording output directory")

    p_val = sub.add_parser("validate", help="run the acceptance suite")
    p_val.add_argument("--config", help="session config JSON (fault injection)")
    p_val.add_argument("--out", required=True, help="results directory")

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            config = _load_config(args.config, args.seed)
            path = simulate_session(config, args.out)
            print(f"archive written to {path}")
            return 0
        if args.command == "analyze":
            bundle = analyze_session(args.session, args.out)
            statuses = {name: a.get("status")
                        for name, a in bundle.summary["analyses"].items()}
            print(json.dumps(statuses, indent=2, sort_keys=True))
            print(f"report bundle written to {bundle.path}")
            return 0
        if args.command == "serve":
            import uvicorn
            from gemmind.session.serve import create_app
            config = _load_config(args.config)
            app = create_app(config, args.record)
            uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
            return 0
        if args.command == "validate":
            config = _load_config(args.config) if args.config else None
            _, exit_code = run_validation(args.out, config=config)
            return exit_code
    except GemmindError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
