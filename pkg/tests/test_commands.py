import csv
import json

import pytest
from click.testing import CliRunner

from megastable.commands import cli


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, ['--env', 'testing', *args])


def write_config(tmp_path, data):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)


def read_rows(path):
    with open(path, encoding='utf-8') as fh:
        # 非确定模式下首行是 # exported_at 注释
        return list(csv.DictReader(line for line in fh if not line.startswith('#')))


class TestConfigErrors:

    def test_malformed_config(self, runner, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"tau0": 0.8,,}', encoding='utf-8')
        result = invoke(runner, 'roots', '--config', str(path), '--out', str(tmp_path / 'out'))
        assert result.exit_code == 2
        assert 'broken.json:1' in result.output

    def test_unknown_key(self, runner, tmp_path):
        path = write_config(tmp_path, {'gamma': 1.0})
        result = invoke(runner, 'roots', '--config', path, '--out', str(tmp_path / 'out'))
        assert result.exit_code == 2
        assert 'gamma' in result.output

    def test_invalid_parameter(self, runner, tmp_path):
        path = write_config(tmp_path, {'lambda': 0.0})
        result = invoke(runner, 'roots', '--config', path, '--out', str(tmp_path / 'out'))
        assert result.exit_code == 2


class TestRoots:

    def test_outputs(self, runner, tmp_path):
        out = tmp_path / 'roots'
        result = invoke(runner, 'roots', '--out', str(out), '--deterministic', '--n-max', '3', '--plot')
        assert result.exit_code == 0, result.output
        assert 'unbounded' in result.output
        roots = read_rows(out / 'roots.csv')
        assert roots[0]['stable'] == '1'
        assert 1.7 < float(roots[0]['r']) < 2.0
        predictions = read_rows(out / 'predictions.csv')
        assert len(predictions) == 8
        assert {p['order'] for p in predictions} == {'first', 'second'}

    def test_deterministic_bytes(self, runner, tmp_path):
        for name in ('a', 'b'):
            result = invoke(runner, 'roots', '--out', str(tmp_path / name), '--deterministic')
            assert result.exit_code == 0, result.output
        for name in ('roots.csv', 'predictions.csv'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_excel(self, runner, tmp_path):
        out = tmp_path / 'roots'
        result = invoke(runner, 'roots', '--out', str(out), '--excel')
        assert result.exit_code == 0, result.output
        assert (out / 'roots.xlsx').exists()


class TestSimulate:

    def test_no_orbit_without_delay(self, runner, tmp_path):
        path = write_config(tmp_path, {'tau0': 0.0, 't_final': 400.0})
        out = tmp_path / 'simulate'
        result = invoke(runner, 'simulate', '--config', path, '--out', str(out), '--deterministic')
        assert result.exit_code == 0, result.output
        summary = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
        assert summary['orbit'] == 'no orbit'
        assert summary['n'] is None
        assert 'exported_at' not in summary
        assert (out / 'trajectory.csv').read_text(encoding='utf-8').startswith('t,x,y\n')

    def test_low_memory_model(self, runner, tmp_path):
        path = write_config(tmp_path, {'tau0': 0.0, 't_final': 100.0, 'model': 'low_memory'})
        out = tmp_path / 'simulate'
        result = invoke(runner, 'simulate', '--config', path, '--out', str(out))
        assert result.exit_code == 0, result.output
        summary = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
        assert summary['model'] == 'low_memory'

    def test_divergence_exit_code(self, runner, tmp_path):
        path = write_config(tmp_path, {'zeta': -5.0, 't_final': 400.0})
        result = invoke(runner, 'simulate', '--config', path, '--out', str(tmp_path / 'out'))
        assert result.exit_code == 1
        assert 'diverged at t=' in result.output

    @pytest.mark.slow
    def test_first_orbit(self, runner, tmp_path):
        out = tmp_path / 'simulate'
        result = invoke(runner, 'simulate', '--x0', '1', '--t-final', '600', '--out', str(out))
        assert result.exit_code == 0, result.output
        summary = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
        assert summary['settled']
        assert summary['n'] == 0


class TestCatalog:

    def test_single_orbit_refuses_fit(self, runner, tmp_path):
        out = tmp_path / 'catalog'
        result = invoke(runner, 'catalog', '--n-max', '0', '--out', str(out), '--deterministic', '--plot')
        assert result.exit_code == 0, result.output
        assert len(read_rows(out / 'catalog.csv')) == 1
        assert not (out / 'spectrum_fit.json').exists()
        assert '4' in result.output
        assert (out / 'catalog.gp').exists()
        series = read_rows(out / 'energy_series.csv')
        assert series and {row['n'] for row in series} == {'0'}

    @pytest.mark.slow
    def test_spectrum_fit(self, runner, tmp_path):
        out = tmp_path / 'catalog'
        result = invoke(runner, 'catalog', '--n-max', '10', '--out', str(out), '--deterministic', '--jobs', '4')
        assert result.exit_code == 0, result.output
        assert len(read_rows(out / 'catalog.csv')) == 11
        fit = json.loads((out / 'spectrum_fit.json').read_text(encoding='utf-8'))
        assert 19.0 <= fit['a'] <= 23.0


class TestTransition:

    def test_initial_orbit_outside_catalog(self, runner, tmp_path):
        out = tmp_path / 'transition'
        path = write_config(tmp_path, {'tau0': 0.82, 'n_max': 0, 'F0': 6.0, 'N': 5})
        result = invoke(runner, 'transition', '--config', path, '--initial-n', '3', '--out', str(out))
        assert result.exit_code == 1
        assert 'not in catalog' in result.output
        assert (out / 'catalog.csv').read_text(encoding='utf-8').startswith('# exported_at: ')
        assert len(read_rows(out / 'catalog.csv')) == 1
        assert not (out / 'transition.json').exists()


class TestSweep:

    def test_failed_points_are_flagged(self, runner, tmp_path):
        out = tmp_path / 'sweep'
        path = write_config(tmp_path, {
            'tau0': 0.82, 'n_max': 0, 'initial_n': 3, 'mode': 'grid',
            'F0_grid': [1.0, 2.0], 'N_grid': [1, 2],
        })
        result = invoke(runner, 'sweep', '--config', path, '--out', str(out), '--deterministic')
        assert result.exit_code == 0, result.output
        assert '4 个扫描点失败' in result.output

        rows = read_rows(out / 'sweep.csv')
        assert [(row['N'], row['F0']) for row in rows] == [('1', '1'), ('1', '2'), ('2', '1'), ('2', '2')]
        assert all(row['settled'] == '0' and row['final_n'] == '' for row in rows)
        lines = (out / 'grid_Q.csv').read_text(encoding='utf-8').splitlines()
        assert lines[0] == 'N\\F0,1,2'
        assert len(lines) == 3
        manifest = json.loads((out / 'grid_manifest.json').read_text(encoding='utf-8'))
        assert manifest['N_grid'] == [1, 2]
        assert manifest['trend']['spearman'] is None
