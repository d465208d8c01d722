"""
Excel Export Utility for simulation tables
Lays out relative-MSE results with one row per (estimator, tuning) and one
column per epsilon or sample size
"""

from io import BytesIO
from typing import Optional

import pandas as pd
import xlsxwriter


def create_simulation_excel(table: pd.DataFrame, column: str = "epsilon",
                            value: str = "relative_mse", title: Optional[str] = None) -> BytesIO:
    """
    Generate a formatted workbook from a simulation table

    Args:
        table: Long table from run_simulation / table_sweep
        column: Column variable of the layout (epsilon or n)
        value: Reported quantity
        title: Title row text

    Returns:
        BytesIO object containing the Excel file
    """
    output = BytesIO()
    workbook = xlsxwriter.Workbook(output, {'in_memory': True})
    worksheet = workbook.add_worksheet('Relative MSE')

    header_format = workbook.add_format({
        'bold': True,
        'bg_color': '#4472C4',
        'font_color': 'white',
        'border': 1,
        'align': 'center',
        'valign': 'vcenter',
        'text_wrap': True
    })

    subheader_format = workbook.add_format({
        'bold': True,
        'bg_color': '#B4C7E7',
        'border': 1,
        'align': 'center',
        'valign': 'vcenter'
    })

    label_format = workbook.add_format({
        'border': 1,
        'align': 'left',
        'valign': 'vcenter'
    })

    number_format = workbook.add_format({
        'border': 1,
        'align': 'center',
        'valign': 'vcenter',
        'num_format': '0.000'
    })

    columns = list(dict.fromkeys(table[column].tolist()))
    row_keys = list(dict.fromkeys(zip(table['estimator'], table['tuning'])))
    last_col = 1 + len(columns)

    worksheet.set_column('A:A', 12)
    worksheet.set_column('B:B', 10)
    worksheet.set_column(2, last_col, 12)

    row = 0
    title = title or f"Relative MSE by {column}"
    worksheet.merge_range(row, 0, row, last_col, title, header_format)
    row += 1

    worksheet.write(row, 0, 'Estimator', subheader_format)
    worksheet.write(row, 1, 'Tuning', subheader_format)
    for offset, col_value in enumerate(columns):
        worksheet.write(row, 2 + offset, f"{column}={col_value}", subheader_format)
    row += 1

    for kind, tuning in row_keys:
        worksheet.write(row, 0, kind, label_format)
        worksheet.write(row, 1, tuning, number_format)
        for offset, col_value in enumerate(columns):
            match = table[(table['estimator'] == kind) & (table['tuning'] == tuning)
                          & (table[column] == col_value)]
            cell = float(match[value].iloc[0]) if not match.empty else None
            if cell is None or cell != cell:
                worksheet.write_blank(row, 2 + offset, None, number_format)
            else:
                worksheet.write_number(row, 2 + offset, cell, number_format)
        row += 1

    failures = int(table['failures'].sum()) if 'failures' in table else 0
    row += 1
    worksheet.merge_range(row, 0, row, last_col,
                          f"Non-converged fits excluded: {failures}", label_format)

    workbook.close()
    output.seek(0)

    return output


def save_simulation_excel(table: pd.DataFrame, path: str, column: str = "epsilon", **kwargs) -> str:
    with open(path, 'wb') as f:
        f.write(create_simulation_excel(table, column, **kwargs).getvalue())
    return path
