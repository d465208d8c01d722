"""
simulate command: relative-MSE Monte-Carlo tables from a spec file
"""

import logging
from dataclasses import asdict

from utils.config import get_settings
from utils.export_excel import save_simulation_excel
from utils.reports import build_report, save_report
from utils.simulation import REPORT_COLUMNS, load_simulation_spec, table_sweep

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("simulate", help="Run a Monte-Carlo relative-MSE study")
    parser.add_argument("--spec", required=True, help="KEY=VALUE simulation spec file")
    parser.add_argument("--workers", type=int, default=get_settings()['workers'])
    parser.add_argument("--out", default=None, help="CSV table path (default: stdout)")
    parser.add_argument("--json", default=None, help="also write the JSON report here")
    parser.add_argument("--xlsx", default=None, help="also write a formatted workbook here")
    parser.set_defaults(handler=run_simulate)
    return parser


def run_simulate(args) -> int:
    """
    Run the sweep described by the spec file

    CSV columns follow REPORT_COLUMNS; output is identical for any --workers.
    """
    spec, sweep = load_simulation_spec(args.spec)
    table = table_sweep(spec, sweep['tuning_grid'], sweep['epsilon_grid'], sweep['n_grid'],
                        workers=max(1, args.workers))
    table = table[REPORT_COLUMNS]

    text = table.to_csv(index=False, float_format='%.10g')
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text)
    else:
        print(text, end="")

    if args.json:
        payload = {'spec': asdict(spec), 'sweep': sweep, 'table': table}
        save_report(build_report("simulate", payload), args.json)
    if args.xlsx:
        column = 'n' if sweep['n_grid'] else 'epsilon'
        save_simulation_excel(table, args.xlsx, column)
    return 0
