"""CLI command modules; each exposes add_parser(subparsers) and a run_* handler"""
