"""
数据导出服务
支持 CSV、JSON、Excel 与 gnuplot 脚本导出
"""
import csv
import json
import math
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

try:
    import openpyxl
    from openpyxl.styles import Font, PatternFill, Alignment, Border, Side
    from openpyxl.utils import get_column_letter
    EXCEL_AVAILABLE = True
except ImportError:
    EXCEL_AVAILABLE = False

from megastable.extensions import logger
from megastable.models.trajectory import DenseTrajectory

FLOAT_FORMAT = '%.17g'
TIMESTAMP_PREFIX = '# exported_at: '

# gnuplot 脚本模板，{csv} 等占位符由 write_plot 填充
PLOT_TEMPLATES = {
    'trajectory': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 't'\nset ylabel 'x'\n"
        "plot '{csv}' using 1:2 every ::1 with lines title 'x(t)'\n"
    ),
    'phase': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 'x'\nset ylabel 'y'\nset size ratio -1\n"
        "plot '{csv}' using 2:3 every ::1 with lines title 'phase portrait'\n"
    ),
    'catalog': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 'n'\nset ylabel 'velocity amplitude'\nm = {m}\n"
        "plot '{csv}' using 1:(sqrt(2*$3/m)) every ::1 with linespoints title 'measured', \\\n"
        "     '{predictions}' using 1:2 every ::1 with lines title 'predicted'\n"
    ),
    'spectrum': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 'n'\nset ylabel 'E_n'\n"
        "a = {a}; b = {b}; c = {c}\nf(n) = a*n**2 + b*n + c\n"
        "plot '{csv}' using 1:3:4 every ::1 with yerrorbars title 'E_n', f(x) title 'fit'\n"
    ),
    'energy': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 't'\nset ylabel 'E'\n"
        "plot '{csv}' using 2:3 every ::1 with lines title 'E(t)'\n"
    ),
    'resonance': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 'Omega'\nset ylabel 'Q'\n"
        "plot '{csv}' using 2:6 every ::1 with linespoints title 'Q(Omega)'\n"
    ),
    'plateau': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 'F0'\nset ylabel 'Q'\n"
        "plot '{csv}' using 1:6 every ::1 with linespoints title 'Q(F0)'\n"
    ),
    'grid': (
        "set datafile separator ','\nset datafile commentschars '#'\n"
        "set xlabel 'F0 index'\nset ylabel 'N index'\nset view map\n"
        "splot '{csv}' matrix rowheaders columnheaders with image title 'Q(F0, N)'\n"
    ),
}


def format_value(value):
    """统一数值格式：浮点 17 位有效数字，布尔转 0/1，None 为空"""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    if isinstance(value, datetime):
        return value.strftime('%Y-%m-%d %H:%M:%S')
    return str(value)


class ExportService:
    """数据导出服务"""

    @staticmethod
    def _prepare(path):
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        return path

    @staticmethod
    def export_to_csv(path: str, columns: Sequence[str], rows: List[Any], deterministic: bool = False) -> str:
        """
        导出表格到 CSV

        Args:
            path: 输出文件
            columns: 列名（即表头）
            rows: 字典或序列
            deterministic: 为 True 时不写导出时间行

        Returns:
            输出路径
        """
        ExportService._prepare(path)
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            if not deterministic:
                fh.write(f'{TIMESTAMP_PREFIX}{datetime.now().isoformat(timespec="seconds")}\n')
            writer = csv.writer(fh, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                values = [row.get(c) for c in columns] if isinstance(row, dict) else list(row)
                writer.writerow([format_value(v) for v in values])
        logger.debug(f'wrote {path}')
        return path

    @staticmethod
    def export_trajectory(path: str, traj: DenseTrajectory, deterministic: bool = False) -> str:
        """轨迹 CSV：表头 t,x,y，每个积分步一行"""
        ExportService._prepare(path)
        data = np.column_stack([traj.times, traj.states])
        with open(path, 'w', encoding='utf-8') as fh:
            if not deterministic:
                fh.write(f'{TIMESTAMP_PREFIX}{datetime.now().isoformat(timespec="seconds")}\n')
            fh.write('t,x,y\n')
            np.savetxt(fh, data, fmt=FLOAT_FORMAT, delimiter=',')
        return path

    @staticmethod
    def export_matrix(path: str, row_name: str, row_grid, col_name: str, col_grid, matrix,
                      deterministic: bool = False) -> str:
        """稠密矩阵 CSV：首行为列网格，首列为行网格"""
        header = [f'{row_name}\\{col_name}'] + [format_value(float(c)) for c in col_grid]
        rows = [[r] + list(values) for r, values in zip(row_grid, np.asarray(matrix))]
        return ExportService.export_to_csv(path, header, rows, deterministic)

    @staticmethod
    def export_json(path: str, data: Dict[str, Any], deterministic: bool = False) -> str:
        """JSON：键排序、缩进 2；NaN 写为 null"""
        ExportService._prepare(path)
        payload = _json_safe(data)
        if not deterministic:
            payload['exported_at'] = datetime.now().isoformat(timespec='seconds')
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
            fh.write('\n')
        return path

    @staticmethod
    def export_to_excel(
        path: str,
        data: List[Dict[str, Any]],
        columns: List[Dict[str, str]],
        sheet_name: str = "Sheet1",
        title: str = "数据导出",
        deterministic: bool = False,
    ) -> str:
        """
        导出数据到 Excel

        Args:
            path: 输出 .xlsx 文件
            data: 数据列表 [{"field1": value1, "field2": value2}, ...]
            columns: 列定义 [{"field": "field1", "header": "字段1", "width": 15}, ...]
            sheet_name: 工作表名称
            title: 报表标题
            deterministic: 为 True 时不写导出时间行
        """
        if not EXCEL_AVAILABLE:
            raise ImportError("openpyxl 未安装，请运行: pip install openpyxl")

        wb = openpyxl.Workbook()
        ws = wb.active
        ws.title = sheet_name

        # 样式定义
        title_font = Font(size=14, bold=True, color='FFFFFF')
        title_fill = PatternFill(start_color='1F4E79', end_color='1F4E79', fill_type='solid')
        header_font = Font(size=11, bold=True, color='FFFFFF')
        header_fill = PatternFill(start_color='2E75B6', end_color='2E75B6', fill_type='solid')
        side = Side(style='thin', color='D9D9D9')
        border = Border(left=side, right=side, top=side, bottom=side)
        width = len(columns)

        ws.merge_cells(start_row=1, start_column=1, end_row=1, end_column=width)
        title_cell = ws.cell(row=1, column=1, value=title)
        title_cell.font = title_font
        title_cell.fill = title_fill
        title_cell.alignment = Alignment(horizontal='center', vertical='center')

        if not deterministic:
            ws.merge_cells(start_row=2, start_column=1, end_row=2, end_column=width)
            time_cell = ws.cell(row=2, column=1, value=f"导出时间: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
            time_cell.font = Font(size=9, color='6B7280')
            time_cell.alignment = Alignment(horizontal='center')

        # 表头固定在第 3 行
        for col_idx, col_def in enumerate(columns, start=1):
            cell = ws.cell(row=3, column=col_idx, value=col_def['header'])
            cell.font = header_font
            cell.fill = header_fill
            cell.alignment = Alignment(horizontal='center', vertical='center')
            cell.border = border
            ws.column_dimensions[get_column_letter(col_idx)].width = col_def.get('width', 15)

        for row_idx, row_data in enumerate(data, start=4):
            for col_idx, col_def in enumerate(columns, start=1):
                value = row_data.get(col_def['field'], '')
                if isinstance(value, (np.floating, np.integer)):
                    value = value.item()
                if value is None or (isinstance(value, float) and math.isnan(value)):
                    value = ''
                cell = ws.cell(row=row_idx, column=col_idx, value=value)
                cell.border = border
                if isinstance(value, (int, float)):
                    cell.alignment = Alignment(horizontal='right')

        ws.freeze_panes = 'A4'
        ExportService._prepare(path)
        wb.save(path)
        return path

    @staticmethod
    def excel_columns(fields: Sequence[str]):
        return [{'field': f, 'header': f, 'width': max(12, len(f) + 4)} for f in fields]

    @staticmethod
    def write_plot(path: str, kind: str, **names) -> str:
        """按模板写出 gnuplot 脚本，names 提供 CSV 文件名与拟合系数"""
        if kind not in PLOT_TEMPLATES:
            raise KeyError(f'unknown plot kind {kind!r}')
        ExportService._prepare(path)
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(PLOT_TEMPLATES[kind].format(**names))
        return path


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


# 全局单例
export_service = ExportService()
