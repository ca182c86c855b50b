import json
import math

import numpy as np
import openpyxl
import pytest

from megastable.services import ExportService
from megastable.services.export_service import TIMESTAMP_PREFIX, format_value


def read(path):
    with open(path, encoding='utf-8') as fh:
        return fh.read()


class TestFormat:

    def test_full_precision(self):
        assert format_value(0.1) == '0.10000000000000001'
        assert float(format_value(math.pi)) == math.pi

    def test_other_types(self):
        assert format_value(None) == ''
        assert format_value(True) == '1'
        assert format_value(np.int64(7)) == '7'
        assert format_value('n=3') == 'n=3'


class TestCsv:

    def test_deterministic_has_no_timestamp(self, tmp_path):
        path = tmp_path / 'table.csv'
        ExportService.export_to_csv(str(path), ['n', 'r'], [{'n': 0, 'r': 0.5}, {'n': 1, 'r': 1.5}], True)
        assert read(path).splitlines() == ['n,r', '0,0.5', '1,1.5']

    def test_timestamp_line(self, tmp_path):
        path = tmp_path / 'table.csv'
        ExportService.export_to_csv(str(path), ['n'], [[0]])
        lines = read(path).splitlines()
        assert lines[0].startswith(TIMESTAMP_PREFIX)
        assert lines[1] == 'n'

    def test_byte_identical(self, tmp_path):
        rows = [{'a': i / 7.0, 'b': i} for i in range(20)]
        ExportService.export_to_csv(str(tmp_path / 'one.csv'), ['a', 'b'], rows, True)
        ExportService.export_to_csv(str(tmp_path / 'two.csv'), ['a', 'b'], rows, True)
        assert (tmp_path / 'one.csv').read_bytes() == (tmp_path / 'two.csv').read_bytes()

    def test_creates_directories(self, tmp_path):
        path = tmp_path / 'nested' / 'deeper' / 'table.csv'
        ExportService.export_to_csv(str(path), ['n'], [[1]], True)
        assert path.exists()

    def test_trajectory(self, tmp_path, make_sine):
        traj = make_sine(1.0, 0.59, 1.0, h=0.25)
        path = tmp_path / 'trajectory.csv'
        ExportService.export_trajectory(str(path), traj, True)
        lines = read(path).splitlines()
        assert lines[0] == 't,x,y'
        assert len(lines) == 1 + len(traj.times)
        t, x, y = (float(v) for v in lines[2].split(','))
        assert (t, x, y) == (traj.times[1], traj.x[1], traj.y[1])

    def test_matrix(self, tmp_path):
        path = tmp_path / 'grid.csv'
        ExportService.export_matrix(str(path), 'N', [1, 2], 'F0', [0.5, 1.0],
                                    [[1.0, np.nan], [3.0, 4.0]], True)
        lines = read(path).splitlines()
        assert lines[0] == 'N\\F0,0.5,1'
        assert lines[1] == '1,1,nan'
        assert lines[2] == '2,3,4'


class TestJson:

    def test_sorted_and_null(self, tmp_path):
        path = tmp_path / 'out.json'
        ExportService.export_json(str(path), {'b': 1, 'a': math.nan, 'c': np.array([1.0, 2.0])}, True)
        text = read(path)
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        data = json.loads(text)
        assert data == {'a': None, 'b': 1, 'c': [1.0, 2.0]}

    def test_timestamp_key(self, tmp_path):
        path = tmp_path / 'out.json'
        ExportService.export_json(str(path), {'a': 1})
        assert 'exported_at' in json.loads(read(path))


class TestExcel:

    def test_layout(self, tmp_path):
        path = tmp_path / 'catalog.xlsx'
        rows = [{'n': 0, 'radius': np.float64(4.1)}, {'n': 1, 'radius': math.nan}]
        ExportService.export_to_excel(str(path), rows, ExportService.excel_columns(['n', 'radius']),
                                      sheet_name='catalog', title='orbit catalog', deterministic=True)
        wb = openpyxl.load_workbook(str(path))
        ws = wb['catalog']
        assert ws.cell(row=1, column=1).value == 'orbit catalog'
        assert ws.cell(row=2, column=1).value is None
        assert [ws.cell(row=3, column=c).value for c in (1, 2)] == ['n', 'radius']
        assert ws.cell(row=4, column=2).value == 4.1
        assert ws.cell(row=5, column=2).value in (None, '')
        assert ws.freeze_panes == 'A4'


class TestPlot:

    def test_template_filled(self, tmp_path):
        path = tmp_path / 'spectrum.gp'
        ExportService.write_plot(str(path), 'spectrum', csv='catalog.csv', a='21.0', b='14.0', c='2.3')
        text = read(path)
        assert "'catalog.csv'" in text
        assert 'a = 21.0' in text

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(KeyError):
            ExportService.write_plot(str(tmp_path / 'x.gp'), 'histogram', csv='x.csv')
