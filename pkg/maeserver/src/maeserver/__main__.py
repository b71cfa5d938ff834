"""Entry point: `maeserver --port 7777` or `maeserver --stdio`."""

from __future__ import annotations

import argparse
import sys

from .server import CodecServer, serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="maeserver",
                                     description="masked-autoencoder codec server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7860)
    parser.add_argument("--stdio", action="store_true",
                        help="serve one connection over stdin/stdout")
    parser.add_argument("--checkpoint", default=None,
                        help="model checkpoint path (default: packaged weights)")
    args = parser.parse_args(argv)

    server = CodecServer(checkpoint=args.checkpoint)
    if args.stdio:
        serve_stdio(server)
        return 0
    try:
        serve_tcp(server, args.host, args.port)
    except KeyboardInterrupt:
        print("maeserver: shutting down", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
